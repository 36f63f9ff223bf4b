"""Gillespie core: block creation, gossip diffusion, longest-chain adoption.

Two execution paths share one event protocol and one uniform stream:

* :func:`run` drives the compiled kernel and is what experiments use;
* :func:`step` advances a :class:`SimState` one event at a time in plain
  Python. It exists to make the update rules inspectable and to cross-check
  the kernel event-for-event in tests.

Per event the stream is consumed as (u_wait, u_kind, u_target), so two runs
with equal seeds are identical regardless of the path taken.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from ._rng import Xoshiro256PP, seed_state
from .hashpower import HashPowerProfile
from .topology import Graph

KIND_CREATE = _kernel.KIND_CREATE
KIND_DIFFUSE = _kernel.KIND_DIFFUSE

TRACE_DTYPE = np.dtype(
    [("time", "<f8"), ("kind", "u1"), ("actor", "<u4"), ("block", "<u8")]
)


@dataclass(frozen=True)
class Block:
    """One blocktree record. ``parent``/``miner`` are None for genesis."""

    id: int
    parent: int | None
    height: int
    miner: int | None
    discovery_time: float


class Blocktree:
    """Append-only store of every block created in a run, as flat arrays.

    Index 0 is genesis (height 0, no parent, no miner). Ids follow creation
    order, so discovery times are non-decreasing in id.
    """

    def __init__(self, parent, height, miner, discovery_time):
        self.parent = np.asarray(parent, dtype=np.int64)
        self.height = np.asarray(height, dtype=np.int64)
        self.miner = np.asarray(miner, dtype=np.int64)
        self.discovery_time = np.asarray(discovery_time, dtype=np.float64)

    def __len__(self) -> int:
        return int(self.parent.size)

    def block(self, i: int) -> Block:
        return Block(
            id=i,
            parent=None if self.parent[i] < 0 else int(self.parent[i]),
            height=int(self.height[i]),
            miner=None if self.miner[i] < 0 else int(self.miner[i]),
            discovery_time=float(self.discovery_time[i]),
        )

    @classmethod
    def from_parents(cls, parents, miners=None, times=None) -> "Blocktree":
        """Build a tree from parent links alone (test/tooling helper).

        Heights are derived; discovery times default to the block index so
        they increase with id as a real run guarantees.
        """
        parent = np.asarray(parents, dtype=np.int64)
        if parent.size == 0 or parent[0] != -1:
            raise ValueError("block 0 must be genesis (parent -1)")
        n = parent.size
        height = np.zeros(n, dtype=np.int64)
        for b in range(1, n):
            p = parent[b]
            if p < 0 or p >= b:
                raise ValueError(f"block {b}: parent must be an earlier block")
            height[b] = height[p] + 1
        miner = (
            np.asarray(miners, dtype=np.int64)
            if miners is not None
            else np.zeros(n, dtype=np.int64)
        )
        if miners is None:
            miner[0] = -1
        time = (
            np.asarray(times, dtype=np.float64)
            if times is not None
            else np.arange(n, dtype=np.float64)
        )
        tree = cls(parent, height, miner, time)
        tree.validate()
        return tree

    def validate(self) -> None:
        """Check well-formedness; raises ValueError on violations."""
        n = len(self)
        if n == 0 or self.parent[0] != -1 or self.height[0] != 0:
            raise ValueError("missing genesis block")
        if n > 1:
            p = self.parent[1:]
            if (p < 0).any() or (p >= np.arange(1, n)).any():
                raise ValueError("parents must precede children")
            if (self.height[1:] != self.height[p] + 1).any():
                raise ValueError("height must be parent height + 1")
            if (np.diff(self.discovery_time) < 0).any():
                raise ValueError("discovery times must be non-decreasing in id")

    def to_records(self) -> list[dict]:
        return [
            {
                "id": i,
                "parent": None if self.parent[i] < 0 else int(self.parent[i]),
                "height": int(self.height[i]),
                "miner": None if self.miner[i] < 0 else int(self.miner[i]),
                "time": float(self.discovery_time[i]),
            }
            for i in range(len(self))
        ]


@dataclass(frozen=True, eq=False)
class SimConfig:
    """One run: topology, power profile, diffusion delay, horizon, seed."""

    graph: Graph
    profile: HashPowerProfile
    tau_nd: float
    t_sim: float
    seed: int

    def __post_init__(self):
        if self.tau_nd <= 0:
            raise ValueError("tau_nd must be positive")
        if self.t_sim <= 0:
            raise ValueError("t_sim must be positive")
        if self.graph.n != self.profile.n:
            raise ValueError("graph and power profile disagree on node count")


@dataclass(frozen=True, eq=False)
class RunTrace:
    """Per-run accounting next to the blocktree.

    ``consensus_time`` is the total time every node held the same head.
    Event arrays are populated only when the run recorded events; they hold
    the full head history (actor's head becomes ``block`` at ``time``).
    """

    t_sim: float
    consensus_time: float
    final_heads: np.ndarray
    n_events: int
    seed: int
    times: np.ndarray | None = None
    kinds: np.ndarray | None = None
    actors: np.ndarray | None = None
    blocks: np.ndarray | None = None

    @property
    def recorded(self) -> bool:
        return self.times is not None

    def to_structured(self) -> np.ndarray:
        """Events as the fixed-width binary record layout (TRACE_DTYPE)."""
        if not self.recorded:
            raise ValueError("run was not recorded")
        out = np.empty(self.n_events, dtype=TRACE_DTYPE)
        out["time"] = self.times
        out["kind"] = self.kinds
        out["actor"] = self.actors
        out["block"] = self.blocks
        return out


def consensus_fraction(trace: RunTrace) -> float:
    """Fraction of simulated time the whole network shared one replica."""
    return trace.consensus_time / trace.t_sim


# ---------------------------------------------------------------------------
# Directed-edge index shared by kernel and reference path
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DirectedEdgeIndex:
    """Both orientations of every edge, with XOR-paired ids.

    Undirected edge k yields directed ids 2k (u->v) and 2k+1 (v->u), so the
    reverse of id e is always e ^ 1. ``out_start``/``out_eid`` group the ids
    by source node, CSR style.
    """

    src: np.ndarray
    dst: np.ndarray
    out_start: np.ndarray
    out_eid: np.ndarray

    @classmethod
    def build(cls, graph: Graph) -> "DirectedEdgeIndex":
        e = graph.edge_count
        src = np.empty(2 * e, dtype=np.int64)
        dst = np.empty(2 * e, dtype=np.int64)
        src[0::2] = graph.edges[:, 0]
        dst[0::2] = graph.edges[:, 1]
        src[1::2] = graph.edges[:, 1]
        dst[1::2] = graph.edges[:, 0]
        order = np.argsort(src, kind="stable")
        out_start = np.zeros(graph.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=graph.n), out=out_start[1:])
        return cls(src=src, dst=dst, out_start=out_start, out_eid=order)


# ---------------------------------------------------------------------------
# Reference path: explicit SimState + step
# ---------------------------------------------------------------------------

@dataclass
class SimState:
    """Mutable state of one run, mirrored field-for-field by the kernel."""

    heads: list[int]
    clock: float
    consensus_time: float
    in_consensus: bool
    head_counts: dict[int, int]
    active_list: list[int]
    active_pos: dict[int, int]
    index: DirectedEdgeIndex
    parent: list[int] = field(default_factory=lambda: [-1])
    height: list[int] = field(default_factory=lambda: [0])
    miner: list[int] = field(default_factory=lambda: [-1])
    discovery_time: list[float] = field(default_factory=lambda: [0.0])
    n_events: int = 0

    @property
    def n_active(self) -> int:
        return len(self.active_list)

    def blocktree(self) -> Blocktree:
        return Blocktree(self.parent, self.height, self.miner, self.discovery_time)

    def active_edges(self) -> set[tuple[int, int]]:
        """Active directed edges as (i, j) node pairs."""
        idx = self.index
        return {(int(idx.src[e]), int(idx.dst[e])) for e in self.active_list}


def initial_state(config: SimConfig) -> SimState:
    """All nodes hold only the genesis block at time zero."""
    n = config.graph.n
    return SimState(
        heads=[0] * n,
        clock=0.0,
        consensus_time=0.0,
        in_consensus=True,
        head_counts={0: n},
        active_list=[],
        active_pos={},
        index=DirectedEdgeIndex.build(config.graph),
    )


def _set_head(state: SimState, actor: int, new_head: int) -> None:
    n = len(state.heads)
    old = state.heads[actor]
    state.head_counts[old] -= 1
    if state.in_consensus:
        state.in_consensus = False
    state.head_counts[new_head] = state.head_counts.get(new_head, 0) + 1
    if state.head_counts[new_head] == n:
        state.in_consensus = True
    state.heads[actor] = new_head

    idx = state.index
    h_here = state.height[new_head]
    for k in range(idx.out_start[actor], idx.out_start[actor + 1]):
        e_out = int(idx.out_eid[k])
        other = int(idx.dst[e_out])
        h_other = state.height[state.heads[other]]
        for e, want in ((e_out, h_here > h_other), (e_out ^ 1, h_other > h_here)):
            pos = state.active_pos.get(e)
            if want and pos is None:
                state.active_pos[e] = len(state.active_list)
                state.active_list.append(e)
            elif not want and pos is not None:
                last = state.active_list[-1]
                state.active_list[pos] = last
                state.active_pos[last] = pos
                state.active_list.pop()
                del state.active_pos[e]


def step(state: SimState, config: SimConfig, rng: Xoshiro256PP,
         horizon: float | None = None) -> bool:
    """Apply one Gillespie event; returns False once the horizon is reached.

    Draws the waiting time from Exp(xi) with xi = sum(eta) + E_active/tau_nd,
    accrues consensus time over the interval, then performs either a block
    creation (creator ~ eta_i / sum eta, child of the creator's own head) or
    a diffusion over a uniform active directed edge i->j, which replaces j's
    replica with i's (longest-chain rule: j's chain was strictly shorter).
    When the waiting time would cross ``horizon``, the clock clamps there and
    no event is applied.
    """
    eta_total = config.profile.total_rate
    xi = eta_total + state.n_active / config.tau_nd
    u1 = rng.random()
    dt = -math.log1p(-u1) / xi
    if horizon is not None and state.clock + dt >= horizon:
        if state.in_consensus:
            state.consensus_time += horizon - state.clock
        state.clock = horizon
        return False
    if state.in_consensus:
        state.consensus_time += dt
    state.clock = state.clock + dt

    u2 = rng.random()
    u3 = rng.random()
    if u2 * xi < eta_total:
        eta_cum = np.cumsum(config.profile.rates) / eta_total
        i = int(np.searchsorted(eta_cum, u3, side="right"))
        if i >= len(state.heads):
            i = len(state.heads) - 1
        b = len(state.parent)
        p = state.heads[i]
        state.parent.append(p)
        state.height.append(state.height[p] + 1)
        state.miner.append(i)
        state.discovery_time.append(state.clock)
        _set_head(state, i, b)
    else:
        idx_a = int(u3 * state.n_active)
        if idx_a >= state.n_active:
            idx_a = state.n_active - 1
        e = state.active_list[idx_a]
        actor = int(state.index.dst[e])
        _set_head(state, actor, state.heads[int(state.index.src[e])])
    state.n_events += 1
    return True


def run_reference(config: SimConfig) -> tuple[Blocktree, RunTrace]:
    """Pure-Python run; same results as :func:`run`, only slower."""
    state = initial_state(config)
    rng = Xoshiro256PP(config.seed)
    while step(state, config, rng, horizon=config.t_sim):
        pass
    tree = state.blocktree()
    tree.validate()
    trace = RunTrace(
        t_sim=config.t_sim,
        consensus_time=state.consensus_time,
        final_heads=np.asarray(state.heads, dtype=np.int64),
        n_events=state.n_events,
        seed=config.seed,
    )
    return tree, trace


# ---------------------------------------------------------------------------
# Fast path
# ---------------------------------------------------------------------------

def _block_capacity(config: SimConfig) -> int:
    mean = config.t_sim * config.profile.total_rate
    return int(mean + 10.0 * math.sqrt(mean + 1.0)) + 64


def run(config: SimConfig, record_events: bool = False) -> tuple[Blocktree, RunTrace]:
    """Run one seeded realisation to the horizon through the compiled kernel.

    With ``record_events`` the trace carries the full event log (time, kind,
    actor, adopted block), i.e. the per-node head history. Memory then grows
    with the event count, so leave it off for large sweeps.
    """
    g = config.graph
    idx = DirectedEdgeIndex.build(g)
    rates = config.profile.rates
    eta_total = config.profile.total_rate
    eta_cum = np.cumsum(rates) / eta_total

    cap_blocks = _block_capacity(config)
    cap_events = (
        int((cap_blocks * (g.n + 2)) * 1.3) + 1024 if record_events else 1
    )
    while True:
        state = seed_state(config.seed)
        parent = np.empty(cap_blocks, dtype=np.int64)
        height = np.empty(cap_blocks, dtype=np.int64)
        miner = np.empty(cap_blocks, dtype=np.int64)
        t_disc = np.empty(cap_blocks, dtype=np.float64)
        head_count = np.zeros(cap_blocks, dtype=np.int32)
        heads = np.zeros(g.n, dtype=np.int64)
        active_pos = np.full(idx.src.size, -1, dtype=np.int64)
        active_list = np.empty(max(idx.src.size, 1), dtype=np.int64)
        ev_time = np.empty(cap_events, dtype=np.float64)
        ev_kind = np.empty(cap_events, dtype=np.uint8)
        ev_actor = np.empty(cap_events, dtype=np.uint32)
        ev_block = np.empty(cap_events, dtype=np.uint64)

        n_blocks, t_c, n_events, status = _kernel.gillespie_kernel(
            idx.src, idx.dst, idx.out_start, idx.out_eid,
            eta_cum, eta_total, config.tau_nd, config.t_sim,
            state,
            parent, height, miner, t_disc, head_count,
            heads, active_pos, active_list,
            record_events, ev_time, ev_kind, ev_actor, ev_block,
        )
        if status == _kernel.BLOCK_OVERFLOW:
            cap_blocks *= 2
            continue
        if status == _kernel.EVENT_OVERFLOW:
            cap_events *= 2
            continue
        break

    tree = Blocktree(
        parent[:n_blocks].copy(),
        height[:n_blocks].copy(),
        miner[:n_blocks].copy(),
        t_disc[:n_blocks].copy(),
    )
    trace = RunTrace(
        t_sim=config.t_sim,
        consensus_time=t_c,
        final_heads=heads,
        n_events=int(n_events),
        seed=config.seed,
        times=ev_time[:n_events].copy() if record_events else None,
        kinds=ev_kind[:n_events].copy() if record_events else None,
        actors=ev_actor[:n_events].copy() if record_events else None,
        blocks=ev_block[:n_events].copy() if record_events else None,
    )
    return tree, trace


def recompute_active_edges(graph: Graph, heads, tree: Blocktree) -> set[tuple[int, int]]:
    """Active directed edges derived from scratch (test oracle for step)."""
    h = tree.height
    out = set()
    for u, v in graph.edges:
        hu, hv = h[heads[u]], h[heads[v]]
        if hu > hv:
            out.add((int(u), int(v)))
        elif hv > hu:
            out.add((int(v), int(u)))
    return out
