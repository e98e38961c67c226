import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lse_recovery.errors import EmptyPartition, InvalidValue, MalformedDataset, MissingFile, NoNodeLabels
from lse_recovery.graph import (
    Dataset,
    Graph,
    normalized_adjacency,
    one_hot_features,
    parse_tudataset,
    split_dataset,
    write_tudataset,
)

from conftest import random_graph


def write_fixture(tmp_path, name="TOY", a_lines=None, indicator=None, labels=None, node_labels=None, crlf=False):
    a_lines = a_lines if a_lines is not None else ["1, 2", "2, 1", "2, 3", "3, 2", "1, 3", "3, 1", "4, 5", "5, 4"]
    indicator = indicator if indicator is not None else [1, 1, 1, 2, 2]
    labels = labels if labels is not None else [1, -1]
    nl = "\r\n" if crlf else "\n"
    (tmp_path / f"{name}_A.txt").write_text(nl.join(a_lines) + nl)
    (tmp_path / f"{name}_graph_indicator.txt").write_text(nl.join(map(str, indicator)) + nl)
    (tmp_path / f"{name}_graph_labels.txt").write_text(nl.join(map(str, labels)) + nl)
    if node_labels is not None:
        (tmp_path / f"{name}_node_labels.txt").write_text(nl.join(map(str, node_labels)) + nl)
    return tmp_path


class TestParse:
    def test_triangle_and_edge_fixture(self, tmp_path):
        ds = parse_tudataset(write_fixture(tmp_path), "TOY")
        assert len(ds) == 2
        g1, g2 = ds.graphs
        assert g1.num_nodes == 3 and g1.edges == ((0, 1), (0, 2), (1, 2))
        assert g2.num_nodes == 2 and g2.edges == ((0, 1),)
        # labels [1, -1] -> classes ordered by raw value
        assert ds.class_values == (-1, 1)
        assert (g1.label, g2.label) == (1, 0)
        assert ds.graph(2) is g2

    def test_windows_line_endings_and_spacing(self, tmp_path):
        d = write_fixture(tmp_path, a_lines=["1 ,2", "2,  1", "4,5", "5,4"], crlf=True, node_labels=[0, 1, 2, 0, 0])
        ds = parse_tudataset(d, "TOY")
        assert ds.graphs[0].edges == ((0, 1),)
        assert ds.node_label_alphabet == 3

    def test_edge_beyond_indicator(self, tmp_path):
        with pytest.raises(MalformedDataset):
            parse_tudataset(write_fixture(tmp_path, a_lines=["6, 1"]), "TOY")

    def test_edge_crossing_graphs(self, tmp_path):
        with pytest.raises(MalformedDataset):
            parse_tudataset(write_fixture(tmp_path, a_lines=["3, 4", "4, 3"]), "TOY")

    def test_non_integer_token(self, tmp_path):
        with pytest.raises(MalformedDataset):
            parse_tudataset(write_fixture(tmp_path, a_lines=["1, x"]), "TOY")

    def test_missing_required_file(self, tmp_path):
        write_fixture(tmp_path)
        (tmp_path / "TOY_graph_labels.txt").unlink()
        with pytest.raises(MissingFile):
            parse_tudataset(tmp_path, "TOY")

    def test_one_direction_only_is_accepted(self, tmp_path, caplog):
        ds = parse_tudataset(write_fixture(tmp_path, a_lines=["1, 2", "2, 3", "3, 2", "4, 5"]), "TOY")
        assert ds.graphs[0].edges == ((0, 1), (1, 2))
        assert ds.graphs[1].edges == ((0, 1),)
        assert "one direction only" in caplog.text

    def test_node_ids_are_local(self, tmp_path):
        d = write_fixture(tmp_path, a_lines=["4, 5", "5, 4"], indicator=[1, 1, 1, 2, 2])
        ds = parse_tudataset(d, "TOY")
        assert ds.graphs[1].edges == ((0, 1),)
        assert ds.graphs[0].edges == ()

    def test_round_trip(self, tmp_path):
        (tmp_path / "a").mkdir()
        ds = parse_tudataset(write_fixture(tmp_path / "a", node_labels=[0, 2, 1, 1, 0]), "TOY")
        write_tudataset(ds, tmp_path / "b")
        assert parse_tudataset(tmp_path / "b", "TOY") == ds

    def test_round_trip_mutag(self, mutag, tmp_path):
        write_tudataset(mutag, tmp_path)
        assert parse_tudataset(tmp_path, "MUTAG") == mutag

    def test_mutag_counts(self, mutag):
        assert len(mutag) == 188
        assert mutag.node_label_alphabet == 7
        assert mutag.num_classes == 2


class TestGraphInvariants:
    def test_rejects_self_loop(self):
        with pytest.raises(MalformedDataset):
            Graph.from_edges(2, [(1, 1)])

    def test_rejects_duplicate(self):
        with pytest.raises(MalformedDataset):
            Graph.from_edges(2, [(0, 1), (1, 0)])

    def test_rejects_out_of_range(self):
        with pytest.raises(MalformedDataset):
            Graph.from_edges(2, [(0, 2)])

    def test_node_label_outside_alphabet(self):
        g = Graph.from_edges(2, [(0, 1)], node_labels=[0, 5])
        with pytest.raises(MalformedDataset):
            Dataset("x", (g,), node_label_alphabet=3)


class TestOneHot:
    def test_small(self):
        g = Graph.from_edges(3, [(0, 1)], node_labels=[0, 2, 1])
        (X,) = one_hot_features(Dataset("x", (g,), 3))
        np.testing.assert_array_equal(X, [[1, 0, 0], [0, 0, 1], [0, 1, 0]])

    def test_mutag_rows(self, mutag):
        Xs = one_hot_features(mutag)
        assert all(X.shape[1] == 7 for X in Xs)
        assert all((X.sum(axis=1) == 1).all() for X in Xs)

    def test_no_labels(self):
        with pytest.raises(NoNodeLabels):
            one_hot_features(Dataset("x", (Graph.from_edges(2, [(0, 1)]),), 0))


def _adjacency_oracle(g: Graph) -> np.ndarray:
    """Entrywise: 1/sqrt((d_u + 1)(d_v + 1)) on edges and the diagonal."""
    out = np.zeros((g.num_nodes, g.num_nodes))
    d = [len(g.neighbors[k]) for k in range(g.num_nodes)]
    for u in range(g.num_nodes):
        out[u, u] = 1.0 / (d[u] + 1)
    for u, v in g.edges:
        out[u, v] = out[v, u] = 1.0 / math.sqrt((d[u] + 1) * (d[v] + 1))
    return out


class TestNormalizedAdjacency:
    def test_single_edge(self):
        np.testing.assert_allclose(normalized_adjacency(Graph.from_edges(2, [(0, 1)])), [[0.5, 0.5], [0.5, 0.5]])

    def test_isolated_node(self):
        np.testing.assert_array_equal(normalized_adjacency(Graph.from_edges(1, [])), [[1.0]])

    def test_triangle(self):
        from conftest import triangle

        np.testing.assert_allclose(normalized_adjacency(triangle()), np.full((3, 3), 1 / 3), atol=1e-15)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 12), st.floats(0, 1), st.integers(0, 2**32 - 1))
    def test_matches_oracle_and_eigenvector(self, n, p, seed):
        g = random_graph(np.random.default_rng(seed), n, p)
        A = normalized_adjacency(g)
        np.testing.assert_allclose(A, _adjacency_oracle(g), atol=1e-15)
        assert np.array_equal(A, A.T) and (A >= 0).all()
        v = np.sqrt(g.degrees + 1.0)
        np.testing.assert_allclose(A @ v, v, atol=1e-12)

    def test_eigenvector_on_mutag(self, mutag):
        for g in mutag.graphs:
            v = np.sqrt(g.degrees + 1.0)
            assert np.max(np.abs(normalized_adjacency(g) @ v - v)) < 1e-12


class TestSplit:
    def test_sizes_100(self):
        assert split_dataset(100, (0.1, 0.1, 0.3, 0.5), seed=0).sizes() == (10, 10, 30, 50)

    def test_sizes_mutag(self, mutag):
        # floor(18.8), floor(18.8), floor(56.4), remainder 96
        assert split_dataset(mutag, seed=3).sizes() == (18, 18, 56, 96)

    def test_deterministic(self):
        assert split_dataset(188, seed=7) == split_dataset(188, seed=7)
        assert split_dataset(188, seed=7) != split_dataset(188, seed=8)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(10, 500), st.integers(0, 10**6))
    def test_partition(self, T, seed):
        plan = split_dataset(T, seed=seed)
        sets = [set(plan.val_ids), set(plan.test_ids), set(plan.full_ids), set(plan.miss_ids)]
        assert set().union(*sets) == set(range(1, T + 1))
        assert sum(len(s) for s in sets) == T

    def test_empty_partition(self):
        with pytest.raises(EmptyPartition):
            split_dataset(5, seed=0)

    def test_bad_ratios(self):
        with pytest.raises(InvalidValue):
            split_dataset(100, (0.5, 0.5, 0.3, 0.5))
