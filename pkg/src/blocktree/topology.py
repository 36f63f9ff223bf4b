"""P2P graph construction and random-walk analytics.

Provides the four topology families used in the experiments (Erdos-Renyi,
Barabasi-Albert, complete, filled r-ary tree), repeated-BFS shortest paths,
mean-first-passage times of the simple random walk, and the branching
threshold derived from them.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path as _csgraph_shortest_path


class GraphConnectivityError(ValueError):
    """Raised when an operation requires a connected graph and gets none."""


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph: node count, canonical edge array, degrees.

    ``edges`` has shape (E, 2) with each row (u, v), u < v, rows sorted
    lexicographically. Build instances through :meth:`from_edges` or the
    generators below; they validate the simple-graph invariants.
    """

    n: int
    edges: np.ndarray
    degrees: np.ndarray

    @classmethod
    def from_edges(cls, n: int, edges) -> "Graph":
        if n < 1:
            raise ValueError("graph needs at least one node")
        arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if arr.size:
            if arr.min() < 0 or arr.max() >= n:
                raise ValueError("edge endpoint out of range")
            if (arr[:, 0] == arr[:, 1]).any():
                raise ValueError("self-loops are not allowed")
            arr = np.sort(arr, axis=1)
            order = np.lexsort((arr[:, 1], arr[:, 0]))
            arr = arr[order]
            dup = (arr[1:] == arr[:-1]).all(axis=1)
            if dup.any():
                raise ValueError("duplicate edges are not allowed")
        degrees = np.bincount(arr.ravel(), minlength=n).astype(np.int64)
        arr.setflags(write=False)
        degrees.setflags(write=False)
        return cls(n=n, edges=arr, degrees=degrees)

    @property
    def edge_count(self) -> int:
        return int(self.edges.shape[0])

    @property
    def mean_degree(self) -> float:
        return 2.0 * self.edge_count / self.n

    @cached_property
    def _csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Adjacency in CSR form: (indptr, indices), neighbors sorted."""
        u, v = self.edges[:, 0], self.edges[:, 1]
        src = np.concatenate([u, v])
        dst = np.concatenate([v, u])
        order = np.lexsort((dst, src))
        indices = dst[order]
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=self.n), out=indptr[1:])
        return indptr, indices

    def neighbors(self, i: int) -> np.ndarray:
        indptr, indices = self._csr
        return indices[indptr[i]:indptr[i + 1]]

    def component_labels(self) -> np.ndarray:
        """Connected-component label per node (labels are 0..k-1)."""
        indptr, indices = self._csr
        labels = np.full(self.n, -1, dtype=np.int64)
        label = 0
        for start in range(self.n):
            if labels[start] >= 0:
                continue
            stack = [start]
            labels[start] = label
            while stack:
                x = stack.pop()
                for y in indices[indptr[x]:indptr[x + 1]]:
                    if labels[y] < 0:
                        labels[y] = label
                        stack.append(int(y))
            label += 1
        return labels

    def is_connected(self) -> bool:
        return bool(self.n == 1 or self.component_labels().max() == 0)

    def largest_component(self) -> np.ndarray:
        """Node ids of the largest component (lowest label wins ties)."""
        labels = self.component_labels()
        sizes = np.bincount(labels)
        return np.flatnonzero(labels == sizes.argmax())

    def subgraph(self, nodes: np.ndarray) -> "Graph":
        """Induced subgraph with nodes relabelled 0..len(nodes)-1."""
        nodes = np.asarray(nodes, dtype=np.int64)
        remap = np.full(self.n, -1, dtype=np.int64)
        remap[nodes] = np.arange(nodes.size)
        keep = (remap[self.edges[:, 0]] >= 0) & (remap[self.edges[:, 1]] >= 0)
        return Graph.from_edges(nodes.size, remap[self.edges[keep]])


@dataclass(frozen=True)
class DistanceSummary:
    """Pairwise-distance aggregates and the branching threshold of a graph.

    ``tau_b`` is the creation interval divided by the mean first-passage
    time; ``tau_direct`` is the shortest-path heuristic counterpart. When the
    graph is disconnected the averages cover ordered pairs inside the largest
    component only, and ``component_coverage`` reports that fraction.
    """

    mean_shortest_path: float
    mean_mfpt: float
    tau_b: float
    tau_direct: float
    connected: bool
    component_coverage: float


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def generate_er(n: int, mean_degree: float, seed) -> Graph:
    """Erdos-Renyi G(n, p) with p chosen to target the given mean degree."""
    if n < 2:
        raise ValueError("need n >= 2")
    if mean_degree <= 0:
        raise ValueError("mean degree must be positive")
    if mean_degree > n - 1:
        raise ValueError("mean degree exceeds complete-graph density")
    p = mean_degree / (n - 1)
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    mask = rng.random(iu.size) < p
    return Graph.from_edges(n, np.stack([iu[mask], ju[mask]], axis=1))


def generate_ba(n: int, m: int, seed) -> Graph:
    """Barabasi-Albert preferential attachment seeded with an m-clique.

    Each new node attaches to m distinct existing nodes with probability
    proportional to degree (sampled via the repeated-endpoints list).
    """
    if m < 1:
        raise ValueError("need m >= 1")
    if n <= m:
        raise ValueError("need n > m")
    rng = np.random.default_rng(seed)
    edges: list[tuple[int, int]] = [
        (i, j) for i in range(m) for j in range(i + 1, m)
    ]
    repeated: list[int] = [v for e in edges for v in e]
    for new in range(m, n):
        targets: set[int] = set()
        while len(targets) < m:
            if repeated:
                targets.add(repeated[rng.integers(len(repeated))])
            else:  # m = 1: lone seed node has degree zero
                targets.add(int(rng.integers(new)))
        for t in targets:
            edges.append((t, new))
            repeated.append(t)
            repeated.append(new)
    return Graph.from_edges(n, np.array(edges, dtype=np.int64))


def generate_complete(n: int) -> Graph:
    """Complete graph K_n."""
    if n < 2:
        raise ValueError("need n >= 2")
    iu, ju = np.triu_indices(n, k=1)
    return Graph.from_edges(n, np.stack([iu, ju], axis=1))


def generate_tree(n: int, branching: int) -> Graph:
    """Complete r-ary tree filled level by level (node i hangs off (i-1)//r)."""
    if n < 2:
        raise ValueError("need n >= 2")
    if branching < 1:
        raise ValueError("need branching >= 1")
    child = np.arange(1, n, dtype=np.int64)
    parent = (child - 1) // branching
    return Graph.from_edges(n, np.stack([parent, child], axis=1))


# ---------------------------------------------------------------------------
# Shortest paths and mean-first-passage times
# ---------------------------------------------------------------------------

def shortest_path_matrix(g: Graph) -> np.ndarray:
    """Hop distances D_ij by repeated BFS; inf marks unreachable pairs."""
    indptr, indices = g._csr
    mat = csr_matrix(
        (np.ones(indices.size, dtype=np.int8), indices, indptr),
        shape=(g.n, g.n),
    )
    return _csgraph_shortest_path(mat, method="D", unweighted=True)


def mean_shortest_path(g: Graph) -> float:
    """Average D_ij over reachable ordered pairs i != j."""
    if g.n < 2:
        raise ValueError("need at least two nodes")
    dist = shortest_path_matrix(g)
    off = ~np.eye(g.n, dtype=bool)
    finite = np.isfinite(dist) & off
    if not finite.any():
        raise GraphConnectivityError("no reachable pairs")
    return float(dist[finite].mean())


def mfpt_matrix(g: Graph, refine_tol: float = 1e-10) -> np.ndarray:
    """Mean-first-passage times M_ij of the simple random walk.

    For each target j the hitting times from all other nodes solve the
    dense linear system (I - P_without_j) m = 1, where P is the degree-
    normalised transition matrix. One LU factorisation per target, with a
    single iterative-refinement pass when the residual exceeds refine_tol.
    """
    n = g.n
    if (g.degrees == 0).any():
        raise GraphConnectivityError("graph has an isolated (degree-zero) node")
    if not g.is_connected():
        raise GraphConnectivityError("graph is disconnected")
    if n == 1:
        return np.zeros((1, 1))
    p = np.zeros((n, n))
    u, v = g.edges[:, 0], g.edges[:, 1]
    p[u, v] = 1.0
    p[v, u] = 1.0
    p /= g.degrees[:, None]
    m = np.zeros((n, n))
    ones = np.ones(n - 1)
    idx = np.arange(n)
    for j in range(n):
        keep = idx != j
        a = np.eye(n - 1) - p[np.ix_(keep, keep)]
        lu, piv = lu_factor(a, check_finite=False)
        col = lu_solve((lu, piv), ones, check_finite=False)
        resid = ones - a @ col
        if np.abs(resid).max() > refine_tol * max(1.0, np.abs(col).max()):
            col += lu_solve((lu, piv), resid, check_finite=False)
        m[keep, j] = col
    return m


def mean_mfpt(g: Graph) -> float:
    """Global MFPT average over ordered pairs, sum M_ij / (n (n-1))."""
    if g.n < 2:
        raise ValueError("need at least two nodes")
    m = mfpt_matrix(g)
    return float(m.sum() / (g.n * (g.n - 1)))


def branching_threshold(g: Graph, tau: float = 1.0) -> DistanceSummary:
    """Distance summary plus the branching threshold tau / <M>.

    Disconnected graphs are reduced to their largest component (hitting
    times across components are infinite); the summary flags this and
    reports the fraction of ordered pairs the averages cover.
    """
    if g.n < 2:
        raise ValueError("need at least two nodes")
    if tau <= 0:
        raise ValueError("tau must be positive")
    connected = g.is_connected()
    work = g
    coverage = 1.0
    if not connected:
        nodes = g.largest_component()
        if nodes.size < 2:
            raise GraphConnectivityError("largest component has a single node")
        work = g.subgraph(nodes)
        coverage = nodes.size * (nodes.size - 1) / (g.n * (g.n - 1))
    mean_d = mean_shortest_path(work)
    mean_m = mean_mfpt(work)
    return DistanceSummary(
        mean_shortest_path=mean_d,
        mean_mfpt=mean_m,
        tau_b=tau / mean_m,
        tau_direct=tau / mean_d,
        connected=connected,
        component_coverage=coverage,
    )


# ---------------------------------------------------------------------------
# Edge-list exchange format
# ---------------------------------------------------------------------------

def save_edge_list(g: Graph, path) -> None:
    """Write the text exchange format: header '# nodes=N', one 'u v' per line."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"# nodes={g.n}\n")
        for u, v in g.edges:
            fh.write(f"{u} {v}\n")


def load_edge_list(path) -> Graph:
    """Read the edge-list format produced by :func:`save_edge_list`."""
    path = Path(path)
    n = None
    edges = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("nodes="):
                    n = int(body[len("nodes="):])
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'u v', got {line!r}")
            edges.append((int(parts[0]), int(parts[1])))
    if n is None:
        raise ValueError(f"{path}: missing '# nodes=N' header")
    return Graph.from_edges(n, np.array(edges, dtype=np.int64).reshape(-1, 2))
