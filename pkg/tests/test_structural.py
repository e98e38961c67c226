import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lse_recovery.errors import EmptyInput, IndexOutOfRange
from lse_recovery.graph import Graph
from lse_recovery.structural import (
    NUM_FEATURES,
    StructuralFeatureMatrix,
    clustering_coefficient,
    dump_features_csv,
    egonet_edge_counts,
    structural_feature_matrix,
    triangle_counts,
    zscore_normalize,
)

from conftest import path3, random_graph, triangle


def brute_force_row(g: Graph, k: int) -> list[float]:
    """Features of node k by direct enumeration over node triples and edges."""
    nbrs = sorted(g.neighbors[k])
    deg = len(nbrs)
    tri = sum(1 for a, b in itertools.combinations(nbrs, 2) if b in g.neighbors[a])
    cc = tri / (deg * (deg - 1) / 2) if deg >= 2 else 0.0
    nd = [len(g.neighbors[u]) for u in nbrs]
    if nd:
        m = sum(nd) / len(nd)
        stats = [m, min(nd), max(nd), (sum((x - m) ** 2 for x in nd) / len(nd)) ** 0.5]
    else:
        stats = [0.0] * 4
    ego = set(nbrs) | {k}
    internal = sum(1 for u, v in g.edges if u in ego and v in ego)
    boundary = sum(1 for u, v in g.edges if (u in ego) != (v in ego))
    return [deg, cc, tri, *stats, internal, boundary]


graphs = st.builds(
    lambda n, p, seed: random_graph(np.random.default_rng(seed), n, p),
    st.integers(1, 9), st.floats(0, 1), st.integers(0, 2**32 - 1))


class TestExamples:
    def test_triangle(self):
        F = structural_feature_matrix(triangle()).values
        np.testing.assert_allclose(F, np.tile([2, 1, 1, 2, 2, 2, 0, 3, 0], (3, 1)))

    def test_path_middle_and_end(self):
        F = structural_feature_matrix(path3()).values
        np.testing.assert_allclose(F[1], [2, 0, 0, 1, 1, 1, 0, 2, 0])
        np.testing.assert_allclose(F[0], [1, 0, 0, 2, 2, 2, 0, 1, 1])

    def test_k4_minus_edge_clustering(self):
        g = Graph.from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)])  # K4 without (2, 3)
        np.testing.assert_allclose(clustering_coefficient(g), [2 / 3, 2 / 3, 1, 1])

    def test_star_leaf_egonet(self):
        star = Graph.from_edges(4, [(0, 1), (0, 2), (0, 3)])
        assert egonet_edge_counts(star, 1) == (1, 2)
        assert egonet_edge_counts(star, 0) == (3, 0)

    def test_isolated_node(self):
        F = structural_feature_matrix(Graph.from_edges(1, [])).values
        np.testing.assert_array_equal(F, np.zeros((1, NUM_FEATURES)))

    def test_egonet_bad_index(self):
        with pytest.raises(IndexOutOfRange):
            egonet_edge_counts(triangle(), 3)


class TestOracle:
    @pytest.mark.parametrize("n", range(1, 7))
    def test_every_graph_up_to_six_nodes(self, n):
        pairs = list(itertools.combinations(range(n), 2))
        for mask in range(1 << len(pairs)):
            g = Graph.from_edges(n, [p for k, p in enumerate(pairs) if mask >> k & 1])
            expected = np.array([brute_force_row(g, k) for k in range(n)])
            np.testing.assert_allclose(structural_feature_matrix(g).values, expected, atol=1e-12)

    @settings(max_examples=150, deadline=None)
    @given(graphs)
    def test_matches_enumeration(self, g):
        F = structural_feature_matrix(g).values
        expected = np.array([brute_force_row(g, k) for k in range(g.num_nodes)])
        np.testing.assert_allclose(F, expected, atol=1e-12)
        for k in range(g.num_nodes):
            assert egonet_edge_counts(g, k) == tuple(int(x) for x in expected[k, 7:])

    @settings(max_examples=50, deadline=None)
    @given(graphs)
    def test_agrees_with_networkx(self, g):
        G = nx.Graph()
        G.add_nodes_from(range(g.num_nodes))
        G.add_edges_from(g.edges)
        tri = nx.triangles(G)
        cc = nx.clustering(G)
        np.testing.assert_allclose(triangle_counts(g), [tri[k] for k in range(g.num_nodes)])
        np.testing.assert_allclose(clustering_coefficient(g), [cc[k] for k in range(g.num_nodes)], atol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(graphs)
    def test_triangle_clustering_identity(self, g):
        F = structural_feature_matrix(g).values
        deg, cc, tri = F[:, 0], F[:, 1], F[:, 2]
        np.testing.assert_allclose(tri, cc * deg * (deg - 1) / 2, atol=1e-9)

    @settings(max_examples=50, deadline=None)
    @given(graphs, st.integers(0, 2**32 - 1))
    def test_permutation_equivariant(self, g, seed):
        perm = np.random.default_rng(seed).permutation(g.num_nodes)
        F = structural_feature_matrix(g).values
        Fp = structural_feature_matrix(g.relabel(perm)).values
        # node k of g is node perm[k] of the relabelled graph
        np.testing.assert_allclose(Fp[perm], F, atol=1e-12)


class TestZscore:
    def test_example(self):
        f = StructuralFeatureMatrix(1, np.column_stack([[1.0, 2.0, 3.0]] * NUM_FEATURES))
        (z,) = zscore_normalize([f])
        np.testing.assert_allclose(z.values[:, 0], [-1.224744871391589, 0.0, 1.224744871391589])

    def test_constant_column_is_zero(self):
        vals = np.ones((4, NUM_FEATURES))
        vals[:, 0] = [0, 1, 2, 3]
        (z,) = zscore_normalize([StructuralFeatureMatrix(1, vals)])
        assert (z.values[:, 1:] == 0).all()

    def test_global_across_graphs(self):
        a = StructuralFeatureMatrix(1, np.zeros((1, NUM_FEATURES)))
        b = StructuralFeatureMatrix(2, np.full((1, NUM_FEATURES), 2.0))
        za, zb = zscore_normalize([a, b])
        np.testing.assert_allclose(za.values, -1.0)
        np.testing.assert_allclose(zb.values, 1.0)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(graphs, min_size=1, max_size=5))
    def test_moments_and_idempotence(self, gs):
        gs = [Graph.from_edges(g.num_nodes, g.edges, id=k + 1) for k, g in enumerate(gs)]
        z = zscore_normalize([structural_feature_matrix(g) for g in gs])
        stacked = np.concatenate([f.values for f in z])
        np.testing.assert_allclose(stacked.mean(axis=0), 0, atol=1e-9)
        std = stacked.std(axis=0)
        assert np.all((np.abs(std - 1) < 1e-9) | (std == 0))
        again = np.concatenate([f.values for f in zscore_normalize(z)])
        np.testing.assert_allclose(again, stacked, atol=1e-9)

    def test_empty(self):
        with pytest.raises(EmptyInput):
            zscore_normalize([])

    def test_mutag_normalized(self, mutag):
        z = zscore_normalize([structural_feature_matrix(g) for g in mutag.graphs])
        stacked = np.concatenate([f.values for f in z])
        assert stacked.shape == (3371, NUM_FEATURES)
        np.testing.assert_allclose(stacked.mean(axis=0), 0, atol=1e-9)


def test_csv_dump(tmp_path):
    dump_features_csv([structural_feature_matrix(triangle())], tmp_path / "f.csv")
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0] == "graph_id,node_id," + ",".join(f"f{k}" for k in range(1, 10))
    assert len(lines) == 4 and lines[1].startswith("1,0,2.0,1.0,1.0")
