"""Per-node hashing/staking power: sampling, rate normalisation, Gini index.

Powers are arbitrary positive units; only the normalised shares matter once
they are turned into block-creation rates whose total is 1/tau.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class HashPowerProfile:
    """Per-node powers pi_i and creation rates eta_i with sum(eta) = 1/tau."""

    powers: np.ndarray
    rates: np.ndarray
    tau: float

    @property
    def n(self) -> int:
        return int(self.powers.size)

    @property
    def total_rate(self) -> float:
        return float(self.rates.sum())


def sample_power_law(n: int, alpha: float, xmin: float = 1.0, seed=None) -> np.ndarray:
    """I.i.d. continuous Pareto draws via the inverse CDF.

    pi = xmin * (1 - u)^(-1/(alpha - 1)) with u uniform on [0, 1); u = 0
    lands exactly on xmin. alpha must exceed 1 for the density to normalise.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    if alpha <= 1:
        raise ValueError("power-law exponent must exceed 1")
    if xmin <= 0:
        raise ValueError("xmin must be positive")
    rng = np.random.default_rng(seed)
    u = rng.random(n)
    return xmin * (1.0 - u) ** (-1.0 / (alpha - 1.0))


def sample_exponential(n: int, lam: float, seed=None) -> np.ndarray:
    """I.i.d. exponential draws with mean lam, strictly positive.

    Inverse CDF pi = -lam * log(1 - u); the measure-zero u = 0 boundary
    (pi = 0) is redrawn so downstream rate normalisation never sees zeros.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    if lam <= 0:
        raise ValueError("mean must be positive")
    rng = np.random.default_rng(seed)
    out = -lam * np.log1p(-rng.random(n))
    while True:
        zero = out <= 0.0
        if not zero.any():
            return out
        out[zero] = -lam * np.log1p(-rng.random(int(zero.sum())))


def normalize_rates(powers, tau: float) -> HashPowerProfile:
    """Turn raw powers into creation rates eta_i = (pi_i / sum pi) / tau."""
    p = np.asarray(powers, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("powers must be a non-empty 1-d array")
    if (p <= 0).any():
        raise ValueError("powers must be strictly positive")
    if tau <= 0:
        raise ValueError("tau must be positive")
    p = p.copy()
    rates = p / p.sum() / tau
    p.setflags(write=False)
    rates.setflags(write=False)
    return HashPowerProfile(powers=p, rates=rates, tau=float(tau))


def gini(weights) -> float:
    """Gini index of a non-negative weight vector.

    Sorts ascending and applies the 1-based estimator
    G = 2 sum_i i*w_i / (n sum_i w_i) - (n+1)/n, so the result does not
    depend on input order. All-zero input has no defined concentration.
    """
    w = np.sort(np.asarray(weights, dtype=np.float64))
    if w.size == 0:
        raise ValueError("empty weight vector")
    if w[0] < 0:
        raise ValueError("weights must be non-negative")
    total = w.sum()
    if total <= 0:
        raise ValueError("all-zero weight vector has undefined Gini index")
    n = w.size
    ranks = np.arange(1, n + 1)
    return float(2.0 * np.dot(ranks, w) / (n * total) - (n + 1) / n)


def load_miner_shares(path) -> tuple[list[str], np.ndarray]:
    """Read the miner-share CSV (header ``miner_id,blocks``).

    Returns miner ids and their block counts in file order. Zeros are kept;
    callers fitting positive-support families drop them, Gini keeps them.
    """
    ids: list[str] = []
    blocks: list[float] = []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["miner_id", "blocks"]:
            raise ValueError(f"{path}: expected header 'miner_id,blocks'")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise ValueError(f"{path}:{lineno}: expected two columns")
            ids.append(row[0].strip())
            value = float(row[1])
            if value < 0:
                raise ValueError(f"{path}:{lineno}: negative block count")
            blocks.append(value)
    if not ids:
        raise ValueError(f"{path}: no data rows")
    return ids, np.asarray(blocks, dtype=np.float64)
