"""Emergent-property statistics of a finished run.

Everything here is pure post-processing over an immutable blocktree and its
trace: main-chain identification under the longest-chain rule, orphan and
branch rates, branch lengths, main-chain inter-discovery time, and the Gini
breakdown of who mined what.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .engine import Blocktree, RunTrace, consensus_fraction
from .hashpower import HashPowerProfile, gini


@dataclass(frozen=True, eq=False)
class ChainPartition:
    """Split of a blocktree into the main chain and orphaned blocks.

    ``main_chain`` is the genesis-rooted deepest path in id order from root
    to tip; ``orphans`` holds every other block id; ``is_main`` is the
    per-block membership mask.
    """

    main_chain: np.ndarray
    orphans: np.ndarray
    is_main: np.ndarray

    @property
    def n_blocks(self) -> int:
        return int(self.is_main.size)

    @property
    def xi(self) -> float:
        """Orphaned-block rate: orphans over all blocks."""
        return self.orphans.size / self.n_blocks


def partition_chain(tree: Blocktree) -> ChainPartition:
    """Deepest genesis-rooted path; depth ties break on earliest tip.

    Ids are creation-ordered, so the earliest-discovered tip among the
    deepest ones is the one with the smallest id.
    """
    tree.validate()
    n = len(tree)
    deepest = int(tree.height.max())
    tips = np.flatnonzero(tree.height == deepest)
    tip = int(tips[np.argmin(tree.discovery_time[tips])])
    path = np.empty(deepest + 1, dtype=np.int64)
    b = tip
    for h in range(deepest, -1, -1):
        path[h] = b
        b = tree.parent[b]
    is_main = np.zeros(n, dtype=bool)
    is_main[path] = True
    return ChainPartition(
        main_chain=path,
        orphans=np.flatnonzero(~is_main),
        is_main=is_main,
    )


def branch_rate(p: ChainPartition, tree: Blocktree) -> float:
    """Orphans sharing a parent with a main-chain block, per main block.

    Every main block's parent is the previous main block, so the double sum
    over (main, orphan) pairs with equal parents reduces to counting orphans
    whose parent lies on the main chain (the tip cannot be one).
    """
    if p.orphans.size == 0:
        return 0.0
    shared = p.is_main[tree.parent[p.orphans]]
    return float(np.count_nonzero(shared) / p.main_chain.size)


def branch_lengths(p: ChainPartition, tree: Blocktree) -> np.ndarray:
    """Length of the orphan path from each orphan leaf down to the fork.

    A branch runs from an orphan with no children up to (excluding) its
    lowest main-chain ancestor; overlapping branches count their shared
    prefix once per leaf. Returns one length per leaf, empty when the run
    produced no orphans.
    """
    if p.orphans.size == 0:
        return np.zeros(0, dtype=np.int64)
    n = len(tree)
    has_child = np.zeros(n, dtype=bool)
    has_child[tree.parent[1:]] = True
    # parents precede children in id order, so one forward pass suffices
    depth = np.zeros(n, dtype=np.int64)
    for b in range(1, n):
        if not p.is_main[b]:
            depth[b] = depth[tree.parent[b]] + 1
    leaves = p.orphans[~has_child[p.orphans]]
    return depth[leaves]


def mean_branch_length(p: ChainPartition, tree: Blocktree) -> float:
    lengths = branch_lengths(p, tree)
    return float(lengths.mean()) if lengths.size else 0.0


def main_chain_interval(p: ChainPartition, tree: Blocktree) -> float | None:
    """Mean discovery gap between consecutive main-chain blocks.

    Genesis (discovered at t=0) counts as a main-chain block, so |M| blocks
    span |M|-1 gaps. With the main chain reduced to genesis alone there is
    no gap and the value is undefined (None, never 0).
    """
    m = p.main_chain
    if m.size < 2:
        return None
    t = tree.discovery_time
    return float((t[m[-1]] - t[m[0]]) / (m.size - 1))


@dataclass(frozen=True, eq=False)
class MiningConcentration:
    """Per-miner block counts split by fate, with Gini and breadth stats.

    Gini values are None when the corresponding class is empty (no blocks,
    or no orphans); fractions count nodes with at least one block of the
    class, over all nodes.
    """

    counts_blocktree: np.ndarray
    counts_main: np.ndarray
    counts_orphan: np.ndarray
    gini_blocktree: float | None
    gini_main: float | None
    gini_orphan: float | None
    n_bt: float
    n_mc: float
    n_oc: float


def mining_concentration(
    p: ChainPartition, tree: Blocktree, n_nodes: int
) -> MiningConcentration:
    """Who mined the blocktree, the main chain, and the orphans."""
    miners = tree.miner
    mined = np.arange(len(tree)) > 0  # genesis has no miner
    w_bt = np.bincount(miners[mined], minlength=n_nodes).astype(np.float64)
    main_mask = p.is_main & mined
    w_mc = np.bincount(miners[main_mask], minlength=n_nodes).astype(np.float64)
    w_oc = w_bt - w_mc

    def _gini_or_none(w):
        return gini(w) if w.sum() > 0 else None

    return MiningConcentration(
        counts_blocktree=w_bt,
        counts_main=w_mc,
        counts_orphan=w_oc,
        gini_blocktree=_gini_or_none(w_bt),
        gini_main=_gini_or_none(w_mc),
        gini_orphan=_gini_or_none(w_oc),
        n_bt=float(np.count_nonzero(w_bt) / n_nodes),
        n_mc=float(np.count_nonzero(w_mc) / n_nodes),
        n_oc=float(np.count_nonzero(w_oc) / n_nodes),
    )


@dataclass(frozen=True)
class MetricsReport:
    """All emergent-property statistics of one run.

    Undefined values (empty classes, degenerate chains) are None so that
    averaging across replicates skips them instead of diluting with zeros.
    """

    xi: float
    branch_rate: float
    consensus_prob: float
    mean_branch_length: float
    main_chain_interval: float | None
    gini_power: float
    gini_main: float | None
    gini_off: float | None
    n_bt: float
    n_mc: float
    n_oc: float
    n_blocks: int
    n_main: int


# fixed per-run CSV schema; metric columns line up with MetricsReport fields
METRIC_COLUMNS = [f.name for f in fields(MetricsReport)]
CSV_COLUMNS = [
    "seed",
    "topology",
    "n_nodes",
    "topology_param",
    "power_family",
    "power_param",
    "tau",
    "tau_nd",
    "tau_b",
    "replicate",
    *METRIC_COLUMNS,
    "error",
]


def compute_metrics(
    tree: Blocktree, trace: RunTrace, profile: HashPowerProfile
) -> MetricsReport:
    """Assemble the full report for one finished run."""
    p = partition_chain(tree)
    conc = mining_concentration(p, tree, profile.n)
    return MetricsReport(
        xi=p.xi,
        branch_rate=branch_rate(p, tree),
        consensus_prob=consensus_fraction(trace),
        mean_branch_length=mean_branch_length(p, tree),
        main_chain_interval=main_chain_interval(p, tree),
        gini_power=gini(profile.powers),
        gini_main=conc.gini_main,
        gini_off=conc.gini_orphan,
        n_bt=conc.n_bt,
        n_mc=conc.n_mc,
        n_oc=conc.n_oc,
        n_blocks=len(tree),
        n_main=int(p.main_chain.size),
    )
