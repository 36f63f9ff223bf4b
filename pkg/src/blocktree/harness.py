"""Experiment orchestration: seeded sweeps over the diffusion delay grid,
critical-delay estimation from the consensus-probability curve, and the
finite-size extrapolation of the critical delay.

A sweep reuses one graph and one power draw per replicate across the whole
grid, so the curves vary only in the control parameter. Every run's seed is
derived from (base seed, stream, replicate, grid index), which makes output
independent of scheduling and thread count.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict

import numpy as np
from scipy.optimize import minimize_scalar

from ._rng import derive_seed
from .engine import SimConfig, run
from .hashpower import normalize_rates, sample_exponential, sample_power_law
from .metrics import CSV_COLUMNS, METRIC_COLUMNS, MetricsReport, compute_metrics
from .topology import (
    Graph,
    branching_threshold,
    generate_ba,
    generate_complete,
    generate_er,
    generate_tree,
)

# seed-derivation streams
_GRAPH_STREAM = 1
_POWER_STREAM = 2
_RUN_STREAM = 3

TOPOLOGIES = ("er", "ba", "complete", "tree")
POWER_FAMILIES = ("power_law", "exponential")


def default_tau_nd_grid(tau: float = 1.0, points: int = 13) -> tuple[float, ...]:
    """Log-spaced grid spanning [1e-3, 10] times the creation interval."""
    return tuple(float(x) for x in np.geomspace(1e-3 * tau, 10.0 * tau, points))


def replicate_seeds(base_seed: int, replicate: int, grid_index: int = 0) -> tuple[int, int, int]:
    """(graph, power, run) seeds for one replicate and grid cell.

    This is the sweep's seeding scheme: the graph and the power draw depend
    on the replicate only (reused across the grid), the run seed on both.
    """
    return (
        derive_seed(base_seed, _GRAPH_STREAM, replicate),
        derive_seed(base_seed, _POWER_STREAM, replicate),
        derive_seed(base_seed, _RUN_STREAM, replicate, grid_index),
    )


@dataclass(frozen=True)
class SweepSpec:
    """Declarative description of one sweep (see README for the JSON form)."""

    topology: str
    n_nodes: int
    power_family: str
    tau_nd_grid: tuple[float, ...]
    replicates: int
    t_sim: float
    base_seed: int
    tau: float = 1.0
    mean_degree: float | None = None  # er
    m: int | None = None              # ba
    branching: int | None = None      # tree
    alpha: float | None = None        # power_law
    lam: float | None = None          # exponential
    xmin: float = 1.0
    compute_tau_b: bool = True

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.power_family not in POWER_FAMILIES:
            raise ValueError(f"unknown power family {self.power_family!r}")
        grid = tuple(float(x) for x in self.tau_nd_grid)
        if not grid:
            raise ValueError("tau_nd_grid must be non-empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("tau_nd_grid must be strictly increasing")
        if grid[0] <= 0:
            raise ValueError("tau_nd values must be positive")
        object.__setattr__(self, "tau_nd_grid", grid)
        if self.replicates < 1:
            raise ValueError("need at least one replicate")
        if self.t_sim <= 0 or self.tau <= 0:
            raise ValueError("t_sim and tau must be positive")
        if self.topology == "er" and not self.mean_degree:
            raise ValueError("er topology needs mean_degree")
        if self.topology == "ba" and not self.m:
            raise ValueError("ba topology needs m")
        if self.topology == "tree" and not self.branching:
            raise ValueError("tree topology needs branching")
        if self.power_family == "power_law" and self.alpha is None:
            raise ValueError("power_law family needs alpha")
        if self.power_family == "exponential" and self.lam is None:
            raise ValueError("exponential family needs lam")

    @property
    def topology_param(self) -> float | None:
        return {
            "er": self.mean_degree,
            "ba": self.m,
            "complete": None,
            "tree": self.branching,
        }[self.topology]

    @property
    def power_param(self) -> float:
        return self.alpha if self.power_family == "power_law" else self.lam

    def build_graph(self, seed: int) -> Graph:
        if self.topology == "er":
            return generate_er(self.n_nodes, self.mean_degree, seed)
        if self.topology == "ba":
            return generate_ba(self.n_nodes, self.m, seed)
        if self.topology == "complete":
            return generate_complete(self.n_nodes)
        return generate_tree(self.n_nodes, self.branching)

    def sample_powers(self, seed: int) -> np.ndarray:
        if self.power_family == "power_law":
            return sample_power_law(self.n_nodes, self.alpha, self.xmin, seed)
        return sample_exponential(self.n_nodes, self.lam, seed)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["tau_nd_grid"] = list(self.tau_nd_grid)
        return {k: v for k, v in out.items() if v is not None}

    @classmethod
    def from_dict(cls, doc: dict) -> "SweepSpec":
        doc = dict(doc)
        grid = doc.get("tau_nd_grid")
        if grid is None:
            doc["tau_nd_grid"] = default_tau_nd_grid(doc.get("tau", 1.0))
        elif isinstance(grid, dict):
            extra = set(grid) - {"start", "stop", "points"}
            if extra:
                raise ValueError(f"unknown grid keys: {sorted(extra)}")
            doc["tau_nd_grid"] = tuple(
                float(x)
                for x in np.geomspace(grid["start"], grid["stop"], int(grid["points"]))
            )
        else:
            doc["tau_nd_grid"] = tuple(float(x) for x in grid)
        known = set(cls.__dataclass_fields__)
        extra = set(doc) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**doc)


@dataclass(frozen=True)
class SweepRow:
    """One (grid point, replicate) outcome; ``error`` set when the run failed."""

    grid_index: int
    tau_nd: float
    replicate: int
    seed: int
    tau_b: float | None
    report: MetricsReport | None
    error: str | None = None


@dataclass(frozen=True, eq=False)
class SweepResult:
    spec: SweepSpec
    rows: tuple[SweepRow, ...]

    def grid_mean(self, metric: str) -> tuple[np.ndarray, np.ndarray]:
        """(tau_nd grid, per-point mean of one metric, None-skipping)."""
        grid = np.asarray(self.spec.tau_nd_grid)
        means = np.full(grid.size, np.nan)
        for gi in range(grid.size):
            vals = [
                getattr(r.report, metric)
                for r in self.rows
                if r.grid_index == gi
                and r.report is not None
                and getattr(r.report, metric) is not None
            ]
            if vals:
                means[gi] = float(np.mean(vals))
        return grid, means

    def write_csv(self, path) -> None:
        """Per-run rows under the fixed column schema."""
        spec = self.spec
        with open(path, "w", newline="", encoding="ascii") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for r in self.rows:
                base = [
                    r.seed,
                    spec.topology,
                    spec.n_nodes,
                    _fmt(spec.topology_param),
                    spec.power_family,
                    _fmt(spec.power_param),
                    _fmt(spec.tau),
                    _fmt(r.tau_nd),
                    _fmt(r.tau_b),
                    r.replicate,
                ]
                if r.report is None:
                    metrics = [""] * len(METRIC_COLUMNS)
                else:
                    metrics = [_fmt(getattr(r.report, c)) for c in METRIC_COLUMNS]
                w.writerow(base + metrics + [r.error or ""])

    def write_summary_csv(self, path) -> None:
        """Per-grid-point mean and standard deviation of every metric."""
        cols = ["tau_nd", "n_runs", "tau_b_mean"]
        for name in METRIC_COLUMNS:
            cols += [f"{name}_mean", f"{name}_std"]
        with open(path, "w", newline="", encoding="ascii") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for gi, tau_nd in enumerate(self.spec.tau_nd_grid):
                rows = [r for r in self.rows if r.grid_index == gi]
                ok = [r for r in rows if r.report is not None]
                taubs = [r.tau_b for r in rows if r.tau_b is not None]
                line = [
                    _fmt(tau_nd),
                    len(ok),
                    _fmt(float(np.mean(taubs)) if taubs else None),
                ]
                for name in METRIC_COLUMNS:
                    vals = [
                        getattr(r.report, name)
                        for r in ok
                        if getattr(r.report, name) is not None
                    ]
                    mean = float(np.mean(vals)) if vals else None
                    std = float(np.std(vals, ddof=1)) if len(vals) > 1 else None
                    line += [_fmt(mean), _fmt(std)]
                w.writerow(line)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _run_replicate(spec: SweepSpec, rep: int) -> list[SweepRow]:
    graph_seed, power_seed, _ = replicate_seeds(spec.base_seed, rep)
    graph = spec.build_graph(graph_seed)
    powers = spec.sample_powers(power_seed)
    profile = normalize_rates(powers, spec.tau)
    tau_b = None
    if spec.compute_tau_b:
        tau_b = branching_threshold(graph, spec.tau).tau_b
    rows = []
    for gi, tau_nd in enumerate(spec.tau_nd_grid):
        seed = replicate_seeds(spec.base_seed, rep, gi)[2]
        try:
            config = SimConfig(
                graph=graph, profile=profile, tau_nd=tau_nd,
                t_sim=spec.t_sim, seed=seed,
            )
            tree, trace = run(config)
            report = compute_metrics(tree, trace, profile)
            rows.append(SweepRow(gi, tau_nd, rep, seed, tau_b, report))
        except Exception as exc:  # record, never abort the sweep
            rows.append(SweepRow(gi, tau_nd, rep, seed, tau_b, None, repr(exc)))
    return rows


def run_sweep(spec: SweepSpec, threads: int = 1) -> SweepResult:
    """All (grid point, replicate) runs, deterministic given the base seed.

    Replicates are independent and dispatched to a thread pool (the kernel
    releases the GIL); results are merged in replicate order so the output
    does not depend on ``threads``.
    """
    if threads <= 1:
        per_rep = [_run_replicate(spec, rep) for rep in range(spec.replicates)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(_run_replicate, spec, rep)
                for rep in range(spec.replicates)
            ]
            per_rep = [f.result() for f in futures]
    rows = [row for rep_rows in per_rep for row in rep_rows]
    rows.sort(key=lambda r: (r.grid_index, r.replicate))
    return SweepResult(spec=spec, rows=tuple(rows))


# ---------------------------------------------------------------------------
# Critical delay
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TauCEstimate:
    """Grid crossing of the consensus probability below a threshold."""

    value: float | None
    bounded: bool
    note: str = ""


def estimate_tau_c(tau_nd, p_mean, threshold: float = 0.5) -> TauCEstimate:
    """Where the mean consensus probability drops below the threshold.

    Interpolates linearly in log(tau_nd) between the bracketing grid points.
    A curve that never drops is reported unbounded; one already below the
    threshold at the grid start pins the estimate there.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    grid = np.asarray(tau_nd, dtype=np.float64)
    p = np.asarray(p_mean, dtype=np.float64)
    if grid.size != p.size or grid.size < 1:
        raise ValueError("grid and probability column must match")
    if (np.diff(grid) <= 0).any():
        raise ValueError("grid must be strictly increasing")
    if p[0] < threshold:
        return TauCEstimate(
            value=float(grid[0]), bounded=True,
            note="below threshold at grid start",
        )
    for k in range(1, grid.size):
        if p[k] < threshold:
            x1, x2 = math.log(grid[k - 1]), math.log(grid[k])
            frac = (p[k - 1] - threshold) / (p[k - 1] - p[k])
            return TauCEstimate(value=math.exp(x1 + frac * (x2 - x1)), bounded=True)
    return TauCEstimate(
        value=None, bounded=False,
        note="consensus probability never drops below threshold",
    )


# ---------------------------------------------------------------------------
# Finite-size scaling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalingResult:
    """Fit of tau_c(N) = tau_c_inf + coeff * N**(-exponent)."""

    sizes: tuple[int, ...]
    tau_c_of_n: tuple[float, ...]
    tau_c_inf: float | None
    coeff: float | None
    exponent: float | None
    rss: float | None
    converged: bool


def finite_size_extrapolate(sizes, tau_c_values) -> ScalingResult:
    """Least-squares extrapolation of the critical delay to infinite size.

    The model is linear in (tau_c_inf, coeff) for a fixed exponent, so the
    exponent is found by a bounded one-dimensional search over the profiled
    residual. A failed search reports the raw points with converged=False.
    """
    n = np.asarray(sizes, dtype=np.float64)
    y = np.asarray(tau_c_values, dtype=np.float64)
    if n.size < 3:
        raise ValueError("need at least three sizes")
    if n.size != y.size:
        raise ValueError("sizes and values must match")
    if (n <= 0).any() or (y <= 0).any():
        raise ValueError("sizes and critical delays must be positive")

    def profiled(b: float):
        design = np.stack([np.ones_like(n), n ** (-b)], axis=1)
        params, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
        resid = y - design @ params
        return float(resid @ resid), params

    raw = tuple(float(v) for v in y)
    try:
        res = minimize_scalar(
            lambda b: profiled(b)[0], bounds=(1e-3, 5.0), method="bounded",
            options={"xatol": 1e-10},
        )
        rss, params = profiled(float(res.x))
        if not (res.success and np.isfinite(params).all()):
            raise RuntimeError("search failed")
        # a limit far outside the observed range means the scaling form
        # degenerated (b at the boundary with huge compensating coefficient)
        span = float(np.ptp(y)) + 1e-12 * float(np.abs(y).max())
        if not (0.0 <= params[0] and y.min() - 5 * span <= params[0] <= y.max() + 5 * span):
            raise RuntimeError("unphysical extrapolation")
    except Exception:
        return ScalingResult(
            sizes=tuple(int(s) for s in sizes), tau_c_of_n=raw,
            tau_c_inf=None, coeff=None, exponent=None, rss=None,
            converged=False,
        )
    return ScalingResult(
        sizes=tuple(int(s) for s in sizes),
        tau_c_of_n=raw,
        tau_c_inf=float(params[0]),
        coeff=float(params[1]),
        exponent=float(res.x),
        rss=rss,
        converged=True,
    )
