"""Graph data model, TUDataset text-format I/O and dataset splitting."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import EmptyPartition, InvalidValue, MalformedDataset, MissingFile, NoNodeLabels

log = logging.getLogger(__name__)

DEFAULT_RATIOS = (0.1, 0.1, 0.3, 0.5)


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph with a class label.

    ``edges`` holds each undirected edge once as ``(u, v)`` with ``u < v``,
    sorted lexicographically; node indices are 0-based.
    """

    id: int
    num_nodes: int
    edges: tuple[tuple[int, int], ...]
    label: int
    node_labels: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.num_nodes < 0:
            raise MalformedDataset(f"graph {self.id}: negative node count")
        canon = []
        for u, v in self.edges:
            if u == v:
                raise MalformedDataset(f"graph {self.id}: self-loop at node {u}")
            if not (0 <= u < self.num_nodes and 0 <= v < self.num_nodes):
                raise MalformedDataset(f"graph {self.id}: edge ({u}, {v}) out of range")
            canon.append((u, v) if u < v else (v, u))
        canon.sort()
        if any(a == b for a, b in zip(canon, canon[1:])):
            raise MalformedDataset(f"graph {self.id}: duplicate edge")
        object.__setattr__(self, "edges", tuple(canon))
        if self.node_labels is not None:
            if len(self.node_labels) != self.num_nodes:
                raise MalformedDataset(f"graph {self.id}: node label count != node count")
            object.__setattr__(self, "node_labels", tuple(int(x) for x in self.node_labels))

    @classmethod
    def from_edges(cls, num_nodes: int, edges, label: int = 0, id: int = 1, node_labels=None) -> Graph:
        return cls(id=id, num_nodes=num_nodes, edges=tuple(map(tuple, edges)), label=label,
                   node_labels=None if node_labels is None else tuple(node_labels))

    @cached_property
    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.num_nodes, self.num_nodes))
        if self.edges:
            e = np.asarray(self.edges)
            A[e[:, 0], e[:, 1]] = 1.0
            A[e[:, 1], e[:, 0]] = 1.0
        A.setflags(write=False)
        return A

    @cached_property
    def neighbors(self) -> tuple[frozenset[int], ...]:
        adj: list[set[int]] = [set() for _ in range(self.num_nodes)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return tuple(frozenset(s) for s in adj)

    @cached_property
    def degrees(self) -> np.ndarray:
        d = np.array([len(s) for s in self.neighbors], dtype=np.int64)
        d.setflags(write=False)
        return d

    def relabel(self, perm: Sequence[int]) -> Graph:
        """Return the graph with node ``k`` renamed to ``perm[k]``."""
        perm = list(perm)
        if sorted(perm) != list(range(self.num_nodes)):
            raise InvalidValue("perm must be a permutation of the node indices")
        node_labels = None
        if self.node_labels is not None:
            nl = [0] * self.num_nodes
            for k, p in enumerate(perm):
                nl[p] = self.node_labels[k]
            node_labels = tuple(nl)
        return Graph(self.id, self.num_nodes, tuple((perm[u], perm[v]) for u, v in self.edges),
                     self.label, node_labels)


@dataclass(frozen=True)
class Dataset:
    name: str
    graphs: tuple[Graph, ...]
    node_label_alphabet: int
    # class_values[c] is the raw label in the source files for class index c
    class_values: tuple[int, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "graphs", tuple(self.graphs))
        for k, g in enumerate(self.graphs, start=1):
            if g.id != k:
                raise MalformedDataset(f"graph ids must be 1..T contiguous, got {g.id} at position {k}")
            if g.node_labels is not None and any(
                not 0 <= x < self.node_label_alphabet for x in g.node_labels
            ):
                raise MalformedDataset(f"graph {g.id}: node label outside [0, {self.node_label_alphabet})")
        if not self.class_values:
            object.__setattr__(self, "class_values", tuple(sorted({g.label for g in self.graphs})))
        num_classes = len(self.class_values)
        for g in self.graphs:
            if not 0 <= g.label < num_classes:
                raise MalformedDataset(f"graph {g.id}: label {g.label} outside class alphabet")

    def __len__(self) -> int:
        return len(self.graphs)

    def graph(self, graph_id: int) -> Graph:
        return self.graphs[graph_id - 1]

    @property
    def num_classes(self) -> int:
        return len(self.class_values)

    @property
    def labels(self) -> np.ndarray:
        return np.array([g.label for g in self.graphs], dtype=np.int64)

    @property
    def has_node_labels(self) -> bool:
        return all(g.node_labels is not None for g in self.graphs)


@dataclass(frozen=True)
class SplitPlan:
    """Partition of graph ids (1-based) into validation, test, T_full and T_miss."""

    seed: int
    val_ids: tuple[int, ...]
    test_ids: tuple[int, ...]
    full_ids: tuple[int, ...]
    miss_ids: tuple[int, ...]

    def sizes(self) -> tuple[int, int, int, int]:
        return len(self.val_ids), len(self.test_ids), len(self.full_ids), len(self.miss_ids)


def _read_ints(path: Path, width: int | None = None) -> list[list[int]]:
    rows = []
    text = path.read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            row = [int(tok) for tok in line.split(",")]
        except ValueError:
            raise MalformedDataset(f"{path.name}:{lineno}: non-integer token in {line!r}") from None
        if width is not None and len(row) != width:
            raise MalformedDataset(f"{path.name}:{lineno}: expected {width} values, got {len(row)}")
        rows.append(row)
    return rows


def parse_tudataset(directory: str | Path, name: str) -> Dataset:
    """Parse a dataset stored in the TUDataset text format.

    Reads ``{name}_A.txt``, ``{name}_graph_indicator.txt`` and
    ``{name}_graph_labels.txt`` from ``directory`` (plus
    ``{name}_node_labels.txt`` when present). Both edge directions listed in
    the file collapse into one undirected edge, node ids become 0-based
    per-graph indices and graph labels become contiguous classes ``0..C-1``
    ordered by raw value.
    """
    directory = Path(directory)
    paths = {k: directory / f"{name}_{k}.txt" for k in ("A", "graph_indicator", "graph_labels", "node_labels")}
    for key in ("A", "graph_indicator", "graph_labels"):
        if not paths[key].is_file():
            raise MissingFile(f"required file not found: {paths[key]}")

    indicator = [r[0] for r in _read_ints(paths["graph_indicator"], 1)]
    graph_labels = [r[0] for r in _read_ints(paths["graph_labels"], 1)]
    num_graphs = len(graph_labels)
    num_nodes_total = len(indicator)

    if any(not 1 <= g <= num_graphs for g in indicator):
        raise MalformedDataset("graph indicator references a graph id outside 1..T")

    local = [0] * num_nodes_total
    counts = [0] * (num_graphs + 1)
    for k, g in enumerate(indicator):
        local[k] = counts[g]
        counts[g] += 1
    empty = [g for g in range(1, num_graphs + 1) if counts[g] == 0]
    if empty:
        raise MalformedDataset(f"graph {empty[0]} has no nodes")

    node_labels = None
    if paths["node_labels"].is_file():
        node_labels = [r[0] for r in _read_ints(paths["node_labels"], 1)]
        if len(node_labels) != num_nodes_total:
            raise MalformedDataset("node label count does not match graph indicator length")
        if min(node_labels) < 0:
            raise MalformedDataset("negative node label")

    directed: set[tuple[int, int]] = set()
    self_loops = 0
    for lineno, (a, b) in enumerate(_read_ints(paths["A"], 2), start=1):
        if not (1 <= a <= num_nodes_total and 1 <= b <= num_nodes_total):
            raise MalformedDataset(f"{paths['A'].name}:{lineno}: node id beyond indicator count {num_nodes_total}")
        if indicator[a - 1] != indicator[b - 1]:
            raise MalformedDataset(f"{paths['A'].name}:{lineno}: edge ({a}, {b}) crosses two graphs")
        if a == b:
            self_loops += 1
            continue
        directed.add((a, b))
    if self_loops:
        log.warning("%s: dropped %d self-loop entries", name, self_loops)

    asymmetric = sum(1 for a, b in directed if (b, a) not in directed)
    if asymmetric:
        log.warning("%s: %d edge entries listed in one direction only; accepted as undirected", name, asymmetric)

    per_graph: list[set[tuple[int, int]]] = [set() for _ in range(num_graphs + 1)]
    for a, b in directed:
        u, v = local[a - 1], local[b - 1]
        per_graph[indicator[a - 1]].add((u, v) if u < v else (v, u))

    per_graph_labels: list[list[int]] = [[] for _ in range(num_graphs + 1)]
    if node_labels is not None:
        for k, g in enumerate(indicator):
            per_graph_labels[g].append(node_labels[k])

    class_values = tuple(sorted(set(graph_labels)))
    class_index = {v: c for c, v in enumerate(class_values)}
    graphs = []
    for gid in range(1, num_graphs + 1):
        graphs.append(Graph(
            id=gid,
            num_nodes=counts[gid],
            edges=tuple(sorted(per_graph[gid])),
            label=class_index[graph_labels[gid - 1]],
            node_labels=tuple(per_graph_labels[gid]) if node_labels is not None else None,
        ))
    alphabet = max(node_labels) + 1 if node_labels else 0
    return Dataset(name=name, graphs=tuple(graphs), node_label_alphabet=alphabet, class_values=class_values)


def write_tudataset(dataset: Dataset, directory: str | Path) -> None:
    """Serialize ``dataset`` in the TUDataset text format (both edge directions listed)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    name = dataset.name
    offset = 0
    a_lines, ind_lines, nl_lines = [], [], []
    for g in dataset.graphs:
        pairs = []
        for u, v in g.edges:
            pairs.append((u + offset + 1, v + offset + 1))
            pairs.append((v + offset + 1, u + offset + 1))
        a_lines.extend(f"{a}, {b}" for a, b in sorted(pairs))
        ind_lines.extend([str(g.id)] * g.num_nodes)
        if g.node_labels is not None:
            nl_lines.extend(str(x) for x in g.node_labels)
        offset += g.num_nodes
    (directory / f"{name}_A.txt").write_text("".join(line + "\n" for line in a_lines))
    (directory / f"{name}_graph_indicator.txt").write_text("".join(line + "\n" for line in ind_lines))
    (directory / f"{name}_graph_labels.txt").write_text(
        "".join(f"{dataset.class_values[g.label]}\n" for g in dataset.graphs))
    if dataset.has_node_labels:
        (directory / f"{name}_node_labels.txt").write_text("".join(line + "\n" for line in nl_lines))


def one_hot_features(dataset: Dataset) -> list[np.ndarray]:
    """One-hot node-label feature matrix X for every graph (N_i x F)."""
    if not dataset.has_node_labels:
        raise NoNodeLabels(f"dataset {dataset.name} has no node labels")
    F = dataset.node_label_alphabet
    out = []
    for g in dataset.graphs:
        X = np.zeros((g.num_nodes, F))
        X[np.arange(g.num_nodes), np.asarray(g.node_labels, dtype=np.int64)] = 1.0
        out.append(X)
    return out


def normalized_adjacency(graph: Graph) -> np.ndarray:
    """Symmetrically normalized adjacency with self-loops, D^-1/2 (A + I) D^-1/2."""
    A_hat = graph.adjacency + np.eye(graph.num_nodes)
    d_inv_sqrt = 1.0 / np.sqrt(A_hat.sum(axis=1))
    return d_inv_sqrt[:, None] * A_hat * d_inv_sqrt[None, :]


def split_sizes(num_graphs: int, ratios: Sequence[float]) -> tuple[int, int, int, int]:
    # the 1e-9 slack keeps products like 0.57 * 100 = 56.999... from flooring down
    val, test, full = (math.floor(r * num_graphs + 1e-9) for r in ratios[:3])
    return val, test, full, num_graphs - val - test - full


def split_dataset(dataset: Dataset | int, ratios: Sequence[float] = DEFAULT_RATIOS, seed: int = 0) -> SplitPlan:
    """Randomly partition graph ids into (val, test, full, miss).

    The permutation comes from ``numpy.random.default_rng(seed)`` (PCG64).
    val/test/full sizes are ``floor(ratio * T)``; the remainder goes to miss.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 4 or any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise InvalidValue(f"split ratios must be 4 positive values summing to 1, got {ratios}")
    T = dataset if isinstance(dataset, int) else len(dataset)
    sizes = split_sizes(T, ratios)
    if min(sizes) <= 0:
        raise EmptyPartition(f"split of {T} graphs with ratios {ratios} leaves an empty set {sizes}")
    order = np.random.default_rng(seed).permutation(T) + 1
    bounds = np.cumsum((0,) + sizes)
    parts = [tuple(sorted(int(x) for x in order[bounds[k]:bounds[k + 1]])) for k in range(4)]
    return SplitPlan(seed, *parts)
