"""Graph generators, shortest paths, MFPT, and the branching threshold."""

import numpy as np
import pytest

from blocktree.topology import (
    Graph,
    GraphConnectivityError,
    branching_threshold,
    generate_ba,
    generate_complete,
    generate_er,
    generate_tree,
    load_edge_list,
    mean_mfpt,
    mean_shortest_path,
    mfpt_matrix,
    save_edge_list,
)


def path_graph(n):
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def star_graph(leaves):
    return Graph.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


# ---------------------------------------------------------------------------
# Graph type invariants
# ---------------------------------------------------------------------------

class TestGraph:
    def test_rejects_self_loops(self):
        with pytest.raises(ValueError, match="self-loop"):
            Graph.from_edges(3, [(0, 0)])

    def test_rejects_duplicates(self):
        with pytest.raises(ValueError, match="duplicate"):
            Graph.from_edges(3, [(0, 1), (1, 0)])

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            Graph.from_edges(3, [(0, 3)])

    def test_degree_sum_is_twice_edges(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            g = generate_er(30, 4, rng.integers(2**32))
            assert g.degrees.sum() == 2 * g.edge_count
            for i in range(g.n):
                assert g.degrees[i] == g.neighbors(i).size

    def test_component_split(self):
        g = Graph.from_edges(5, [(0, 1), (2, 3), (3, 4)])
        labels = g.component_labels()
        assert labels[0] == labels[1]
        assert labels[2] == labels[3] == labels[4]
        assert labels[0] != labels[2]
        assert not g.is_connected()
        assert sorted(g.largest_component()) == [2, 3, 4]


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

class TestErdosRenyi:
    def test_two_nodes_forced_edge(self):
        g = generate_er(2, 1, seed=0)
        assert g.edge_count == 1

    def test_edge_count_concentrates(self):
        # E ~ Binomial(19900, 8/199): mean 800, sd ~ 27.7
        counts = [generate_er(200, 8, seed=s).edge_count for s in range(40)]
        assert all(690 < c < 910 for c in counts)
        assert abs(np.mean(counts) - 800) < 3 * 27.7 / np.sqrt(40)

    def test_percolation_point_fragments(self):
        # at <k>=1 the largest component is sublinear for most seeds
        sizes = [generate_er(200, 1, seed=s).largest_component().size for s in range(100)]
        assert np.mean([s < 100 for s in sizes]) > 0.5

    def test_rejects_bad_density(self):
        with pytest.raises(ValueError):
            generate_er(10, 10, seed=0)  # > n-1
        with pytest.raises(ValueError):
            generate_er(10, 0, seed=0)
        generate_er(10, 9, seed=0)  # == n-1 is the complete graph, allowed

    def test_deterministic(self):
        a = generate_er(50, 4, seed=7)
        b = generate_er(50, 4, seed=7)
        assert np.array_equal(a.edges, b.edges)
        assert not np.array_equal(a.edges, generate_er(50, 4, seed=8).edges)


class TestBarabasiAlbert:
    def test_attachment_count(self):
        g = generate_ba(100, 3, seed=1)
        assert g.edge_count == 3 * 97 + 3  # attachments + seed triangle
        assert (g.degrees[3:] >= 3).all()  # non-seed nodes attach to 3

    def test_small_case_is_complete(self):
        g = generate_ba(4, 3, seed=0)
        assert g.edge_count == 6

    def test_m1_is_tree(self):
        g = generate_ba(50, 1, seed=3)
        assert g.edge_count == 49
        assert g.is_connected()

    def test_rejects_bad_m(self):
        with pytest.raises(ValueError):
            generate_ba(3, 3, seed=0)
        with pytest.raises(ValueError):
            generate_ba(3, 0, seed=0)

    def test_degree_tail_exponent(self):
        # pooled degrees over 20 seeds: P(k) ~ k^-3 -> CCDF slope ~ -2
        degs = np.concatenate(
            [generate_ba(1000, 3, seed=s).degrees for s in range(20)]
        ).astype(float)
        kmin = 10
        tail = degs[degs >= kmin]
        alpha = 1.0 + tail.size / np.log(tail / (kmin - 0.5)).sum()
        assert 2.5 < alpha < 3.5

    def test_deterministic(self):
        assert np.array_equal(
            generate_ba(60, 3, seed=9).edges, generate_ba(60, 3, seed=9).edges
        )


class TestCompleteAndTree:
    @pytest.mark.parametrize("n,edges", [(5, 10), (2, 1), (200, 19900)])
    def test_complete_edge_count(self, n, edges):
        assert generate_complete(n).edge_count == edges

    def test_perfect_binary_tree(self):
        g = generate_tree(7, 2)
        assert sorted(map(tuple, g.edges.tolist())) == [
            (0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (2, 6),
        ]

    def test_tree_edge_count(self):
        assert generate_tree(200, 2).edge_count == 199

    def test_star_case(self):
        g = generate_tree(4, 3)
        assert g.degrees[0] == 3
        assert (g.degrees[1:] == 1).all()

    def test_trees_are_acyclic_by_union_find(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            n = int(rng.integers(2, 80))
            r = int(rng.integers(1, 5))
            g = generate_tree(n, r)
            assert g.edge_count == n - 1
            parent = list(range(n))

            def find(x):
                while parent[x] != x:
                    parent[x] = parent[parent[x]]
                    x = parent[x]
                return x

            for u, v in g.edges:
                ru, rv = find(int(u)), find(int(v))
                assert ru != rv, "cycle detected"
                parent[ru] = rv


# ---------------------------------------------------------------------------
# Distances
# ---------------------------------------------------------------------------

class TestShortestPath:
    def test_complete_graph(self):
        assert mean_shortest_path(generate_complete(4)) == 1.0

    def test_path_graph(self):
        assert mean_shortest_path(path_graph(3)) == pytest.approx(4 / 3)

    def test_star(self):
        assert mean_shortest_path(star_graph(4)) == pytest.approx(1.6)

    def test_adding_edge_never_increases(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            g = generate_er(25, 4, rng.integers(2**32))
            if not g.is_connected():
                continue
            before = mean_shortest_path(g)
            present = {tuple(e) for e in g.edges.tolist()}
            absent = [
                (u, v)
                for u in range(g.n)
                for v in range(u + 1, g.n)
                if (u, v) not in present
            ]
            if not absent:
                continue
            u, v = absent[int(rng.integers(len(absent)))]
            g2 = Graph.from_edges(g.n, np.vstack([g.edges, [[u, v]]]))
            assert mean_shortest_path(g2) <= before + 1e-12


class TestMfpt:
    def test_complete_k4(self):
        m = mfpt_matrix(generate_complete(4))
        off = ~np.eye(4, dtype=bool)
        assert np.allclose(m[off], 3.0, atol=1e-9)
        assert np.allclose(np.diag(m), 0.0)

    def test_path_three_nodes(self):
        m = mfpt_matrix(path_graph(3))
        expected = np.array([[0, 1, 4], [3, 0, 3], [4, 1, 0]], dtype=float)
        assert np.allclose(m, expected, atol=1e-9)

    def test_sole_neighbor_is_one_step(self):
        m = mfpt_matrix(star_graph(5))
        for leaf in range(1, 6):
            assert m[leaf, 0] == pytest.approx(1.0, abs=1e-12)

    def test_complete_closed_form(self):
        for n in range(2, 51):
            m = mfpt_matrix(generate_complete(n))
            off = ~np.eye(n, dtype=bool)
            assert np.abs(m[off] - (n - 1)).max() < 1e-9

    def test_rejects_disconnected(self):
        g = Graph.from_edges(4, [(0, 1), (2, 3)])
        with pytest.raises(GraphConnectivityError, match="disconnected"):
            mfpt_matrix(g)

    def test_rejects_isolated_node(self):
        g = Graph.from_edges(3, [(0, 1)])
        with pytest.raises(GraphConnectivityError, match="degree-zero"):
            mfpt_matrix(g)

    def test_monte_carlo_agreement_small_graphs(self):
        # light version of the acceptance oracle: one graph, fewer walks
        from blocktree import _kernel, _rng

        g = generate_ba(6, 2, seed=4)
        m = mfpt_matrix(g)
        indptr, indices = g._csr
        state = _rng.seed_state(99)
        for i in range(g.n):
            for j in range(g.n):
                if i == j:
                    continue
                walks = 20_000
                total, total_sq = _kernel.mc_hitting_times(
                    indptr, indices, i, j, walks, state
                )
                mean = total / walks
                var = (total_sq - total * total / walks) / (walks - 1)
                se = np.sqrt(var / walks)
                assert abs(m[i, j] - mean) < 4 * se + 1e-9


class TestBranchingThreshold:
    def test_complete_k5(self):
        s = branching_threshold(generate_complete(5), tau=1.0)
        assert s.mean_mfpt == pytest.approx(4.0, abs=1e-9)
        assert s.tau_b == pytest.approx(0.25, abs=1e-9)
        assert s.connected and s.component_coverage == 1.0

    def test_path_three(self):
        s = branching_threshold(path_graph(3), tau=1.0)
        assert s.mean_mfpt == pytest.approx(16 / 6, abs=1e-9)
        assert s.tau_b == pytest.approx(0.375, abs=1e-9)
        assert s.tau_direct == pytest.approx(1 / (4 / 3), abs=1e-12)

    def test_single_edge(self):
        s = branching_threshold(generate_complete(2), tau=1.0)
        assert s.mean_mfpt == pytest.approx(1.0)
        assert s.tau_b == pytest.approx(1.0)

    def test_tau_scaling(self):
        s = branching_threshold(generate_complete(5), tau=10.0)
        assert s.tau_b == pytest.approx(2.5, abs=1e-9)

    def test_disconnected_uses_largest_component(self):
        g = Graph.from_edges(6, [(0, 1), (2, 3), (3, 4), (2, 4)])
        s = branching_threshold(g, tau=1.0)
        assert not s.connected
        # largest component is the triangle {2,3,4}: K_3 has M = 2
        assert s.mean_mfpt == pytest.approx(2.0, abs=1e-9)
        assert s.component_coverage == pytest.approx(6 / 30)


# ---------------------------------------------------------------------------
# Edge-list format
# ---------------------------------------------------------------------------

class TestEdgeListIO:
    def test_round_trip(self, tmp_path):
        g = generate_ba(40, 2, seed=6)
        path = tmp_path / "graph.txt"
        save_edge_list(g, path)
        g2 = load_edge_list(path)
        assert g2.n == g.n
        assert np.array_equal(g2.edges, g.edges)

    def test_header_required(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("0 1\n")
        with pytest.raises(ValueError, match="nodes="):
            load_edge_list(path)

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("# nodes=3\n0 1 2\n")
        with pytest.raises(ValueError, match="bad.txt:2"):
            load_edge_list(path)
