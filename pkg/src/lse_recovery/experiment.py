"""Seeded multi-realization experiments and their output files."""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .config import ExperimentConfig
from .errors import IoFailure
from .gae import EmbeddingSet, embed_all, project_2d, train_gae
from .gin import evaluate_accuracy, train_gin
from .graph import Dataset, SplitPlan, one_hot_features, parse_tudataset, split_dataset
from .recovery import BASELINES, method_name, recover_features, recovery_error
from .structural import StructuralFeatureMatrix, structural_feature_matrix, zscore_normalize

log = logging.getLogger(__name__)

# fixed stream ids mixed into the realization seed for stochastic methods
_STREAMS = {"zeros": 1, "ones": 2, "random": 3, "degree": 4, "lse-ng": 5, "lse-nn": 6,
            "true-features": 7, "not-using-tmiss": 8}


@dataclass
class ResultRow:
    method: str
    dataset: str
    values: list[float]

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def std(self) -> float:
        return float(np.std(self.values))


@dataclass
class ResultsTable:
    metric: str
    seeds: list[int]
    rows: list[ResultRow] = field(default_factory=list)
    runs: list[dict] = field(default_factory=list)

    def row(self, method: str, dataset: str | None = None) -> ResultRow:
        for r in self.rows:
            if r.method == method and (dataset is None or r.dataset == dataset):
                return r
        raise KeyError(method)

    def format(self) -> str:
        width = max(len(r.method) for r in self.rows)
        lines = [f"{self.metric} over {len(self.seeds)} realizations"]
        lines += [f"  {r.method:<{width}}  {r.mean:8.4f} +- {r.std:.4f}" for r in self.rows]
        return "\n".join(lines)


@dataclass(frozen=True)
class PreparedData:
    dataset: Dataset
    features: tuple[np.ndarray, ...]
    structural: tuple[StructuralFeatureMatrix, ...]


@lru_cache(maxsize=8)
def _load_cached(directory: str, name: str) -> PreparedData:
    dataset = parse_tudataset(directory, name)
    return prepare(dataset)


def prepare(dataset: Dataset) -> PreparedData:
    structural = zscore_normalize([structural_feature_matrix(g) for g in dataset.graphs])
    return PreparedData(dataset, tuple(one_hot_features(dataset)), tuple(structural))


def load_data(config: ExperimentConfig) -> PreparedData:
    return _load_cached(str(config.dataset_dir), config.dataset)


def realization_embeddings(data: PreparedData, config: ExperimentConfig, seed: int) -> EmbeddingSet:
    model, _ = train_gae(data.structural, data.dataset.graphs, config.gae, seed)
    return embed_all(model, data.dataset.graphs, data.structural)


def recovery_variants(config: ExperimentConfig) -> list[tuple[str, int | None]]:
    """(method, qbar) pairs in table order; qbar is None for baselines."""
    out: list[tuple[str, int | None]] = [(m, None) for m in BASELINES if m in config.methods]
    for m in ("lse-ng", "lse-nn"):
        if m in config.methods:
            out.extend((m, q) for q in config.qbar)
    return out


def recover_all(
    data: PreparedData,
    split: SplitPlan,
    config: ExperimentConfig,
    seed: int,
    embeddings: EmbeddingSet | None,
    method: str,
    qbar: int | None,
) -> dict[int, np.ndarray]:
    full = {j: data.features[j - 1] for j in split.full_ids}
    return recover_features(
        method, data.dataset.graphs, split.miss_ids, split.full_ids, full,
        data.dataset.node_label_alphabet, seed=[seed, _STREAMS[method], qbar or 0],
        embeddings=embeddings, qbar=qbar or 1, nbar=config.nbar,
    )


def _needs_embeddings(variants) -> bool:
    return any(m in ("lse-ng", "lse-nn") for m, _ in variants)


def recovery_realization(data: PreparedData, config: ExperimentConfig, seed: int) -> dict[str, float]:
    """Mean recovery error over T_miss for every configured method, one realization."""
    split = split_dataset(data.dataset, config.split, seed)
    variants = recovery_variants(config)
    emb = realization_embeddings(data, config, seed) if _needs_embeddings(variants) else None
    out = {}
    for method, qbar in variants:
        rec = recover_all(data, split, config, seed, emb, method, qbar)
        errs = [recovery_error(data.features[i - 1], rec[i]) for i in split.miss_ids]
        out[method_name(method, qbar)] = float(np.mean(errs))
    return out


def _sample(data: PreparedData, ids: Sequence[int], feats=None):
    return [(data.dataset.graph(i), data.features[i - 1] if feats is None else feats[i], data.dataset.graph(i).label)
            for i in ids]


def classification_realization(data: PreparedData, config: ExperimentConfig, seed: int) -> list[dict]:
    """Test accuracy (percent) of a fresh GIN per method, one realization."""
    split = split_dataset(data.dataset, config.split, seed)
    val, test = _sample(data, split.val_ids), _sample(data, split.test_ids)
    full = _sample(data, split.full_ids)
    num_classes = data.dataset.num_classes

    # (row name, method, qbar, training samples)
    plans: list[tuple[str, str, int, list]] = []
    if "true-features" in config.methods:
        plans.append(("true-features", "true-features", 0, full + _sample(data, split.miss_ids)))
    variants = recovery_variants(config)
    emb = realization_embeddings(data, config, seed) if _needs_embeddings(variants) else None
    for method, qbar in variants:
        rec = recover_all(data, split, config, seed, emb, method, qbar)
        plans.append((method_name(method, qbar), method, qbar or 0, full + _sample(data, split.miss_ids, rec)))
    if "not-using-tmiss" in config.methods:
        plans.append(("not-using-tmiss", "not-using-tmiss", 0, full))
    # table order: true features, baselines, T_full only, LSE variants
    order = {"true-features": 0, "zeros": 1, "ones": 2, "random": 3, "degree": 4, "not-using-tmiss": 5}
    plans.sort(key=lambda p: order.get(p[1], 6))

    records = []
    for name, method, qbar, train in plans:
        model = train_gin(train, val, config.gin, seed=[seed, _STREAMS[method], qbar], num_classes=num_classes)
        records.append({
            "method": name,
            "dataset": config.dataset,
            "seed": seed,
            "best_epoch": model.history["best_epoch"],
            "val_acc": 100.0 * model.history["best_val_acc"],
            "test_acc": 100.0 * evaluate_accuracy(model, test),
        })
    return records


def _map(fn: Callable, seeds: Sequence[int], jobs: int) -> list:
    if jobs <= 1 or len(seeds) == 1:
        return [fn(s) for s in seeds]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, seeds))


class _RecoveryJob:
    def __init__(self, config: ExperimentConfig, data: PreparedData):
        self.config, self.data = config, data

    def __call__(self, seed: int):
        return recovery_realization(self.data, self.config, seed)


class _ClassificationJob(_RecoveryJob):
    def __call__(self, seed: int):
        return classification_realization(self.data, self.config, seed)


def run_recovery_experiment(config: ExperimentConfig, data: PreparedData | None = None) -> ResultsTable:
    data = data or load_data(config)
    per_seed = _map(_RecoveryJob(config, data), config.seeds, config.jobs)
    table = ResultsTable("recovery_error", config.seeds)
    for name in per_seed[0]:
        table.rows.append(ResultRow(name, config.dataset, [r[name] for r in per_seed]))
    return table


def run_classification_experiment(config: ExperimentConfig, data: PreparedData | None = None) -> ResultsTable:
    data = data or load_data(config)
    per_seed = _map(_ClassificationJob(config, data), config.seeds, config.jobs)
    table = ResultsTable("test_accuracy", config.seeds)
    for k, rec in enumerate(per_seed[0]):
        table.rows.append(ResultRow(rec["method"], config.dataset, [runs[k]["test_acc"] for runs in per_seed]))
    table.runs = [r for runs in per_seed for r in runs]
    return table


def embedding_projection(data: PreparedData, config: ExperimentConfig, seed: int | None = None):
    """2-D PCA of every node embedding, with (graph_id, node_id, class) per row."""
    emb = realization_embeddings(data, config, config.seed if seed is None else seed)
    ids = [(g.id, n, g.label) for g in data.dataset.graphs for n in range(g.num_nodes)]
    coords, _ = project_2d(np.concatenate(emb.node, axis=0), [c for _, _, c in ids])
    return ids, coords


def _num(x: float) -> str:
    return repr(float(x))


def emit_outputs(table: ResultsTable | None, out_dir: str | Path, projection=None, plot: bool = False) -> list[Path]:
    """Write results.csv / realizations.csv / runs.csv and embeddings_2d.csv (+ optional PNG)."""
    out = Path(out_dir)
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        if table is not None:
            k = len(table.seeds)
            path = out / "results.csv"
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["method", "dataset", "mean", "std", *(f"r{r + 1}" for r in range(k))])
                for row in table.rows:
                    w.writerow([row.method, row.dataset, _num(row.mean), _num(row.std), *map(_num, row.values)])
            written.append(path)
            path = out / "realizations.csv"
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["realization", "seed"])
                w.writerows((r + 1, s) for r, s in enumerate(table.seeds))
            written.append(path)
            if table.runs:
                path = out / "runs.csv"
                cols = ["method", "dataset", "seed", "best_epoch", "val_acc", "test_acc"]
                with open(path, "w", newline="") as fh:
                    w = csv.writer(fh, lineterminator="\n")
                    w.writerow(cols)
                    for run in table.runs:
                        w.writerow([_num(run[c]) if isinstance(run[c], float) else run[c] for c in cols])
                written.append(path)
        if projection is not None:
            ids, coords = projection
            path = out / "embeddings_2d.csv"
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["graph_id", "node_id", "x", "y", "class"])
                for (gid, node, cls), (x, y) in zip(ids, coords):
                    w.writerow([gid, node, _num(x), _num(y), cls])
            written.append(path)
            if plot:
                written.append(_scatter(ids, coords, out / "embeddings_2d.png"))
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return written


def _scatter(ids, coords, path: Path) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    classes = np.array([c for _, _, c in ids])
    fig, ax = plt.subplots(figsize=(5, 5))
    for c in np.unique(classes):
        pts = coords[classes == c]
        ax.scatter(pts[:, 0], pts[:, 1], s=4, alpha=0.5, label=f"class {c}")
    ax.legend(markerscale=3)
    ax.set_xlabel("PC 1")
    ax.set_ylabel("PC 2")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
