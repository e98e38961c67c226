"""Command-line entry point (``lse-recovery``)."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, load_config
from .errors import RecoveryError
from .experiment import (
    classification_realization,
    embedding_projection,
    emit_outputs,
    load_data,
    recover_all,
    recovery_variants,
    run_classification_experiment,
    run_recovery_experiment,
)
from .gae import GaeModel, dump_embeddings_csv, embed_all, train_gae
from .graph import split_dataset
from .recovery import build_neighbor_plan, dump_plans, dump_recovered_csv, method_name, recovery_error
from .structural import dump_features_csv, structural_feature_matrix

log = logging.getLogger("lse_recovery")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--dataset", help="dataset name, e.g. MUTAG")
    p.add_argument("--data-dir", help="directory holding <dataset>/<dataset>_A.txt etc.")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--jobs", type=int, help="parallel realizations")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lse-recovery", description="Recover missing node features from local-structure embeddings.")
    sub = parser.add_subparsers(dest="command", required=True)

    _common(sub.add_parser("parse", help="parse a TUDataset directory and print a summary"))
    _common(sub.add_parser("features", help="write raw and normalized structural features"))
    p = sub.add_parser("train-gae", help="train the graph autoencoder and save a checkpoint")
    _common(p)
    p = sub.add_parser("embed", help="write node embeddings")
    _common(p)
    p.add_argument("--checkpoint", help="GAE checkpoint (trained from scratch if omitted)")
    p = sub.add_parser("recover", help="recover T_miss features for one split")
    _common(p)
    p.add_argument("--checkpoint", help="GAE checkpoint (trained from scratch if omitted)")
    p.add_argument("--method", action="append", help="restrict to these methods (repeatable)")
    p = sub.add_parser("classify", help="downstream GIN accuracy for one split")
    _common(p)
    p.add_argument("--method", action="append", help="restrict to these methods (repeatable)")
    p = sub.add_parser("experiment", help="run a multi-realization experiment")
    p.add_argument("suite", choices=["recovery", "classification"])
    _common(p)
    p.add_argument("--realizations", type=int, help="override num_realizations")
    p.add_argument("--image", action="store_true", help="also write a PNG scatter of the embeddings")
    p.add_argument("--no-embeddings", action="store_true", help="skip embeddings_2d.csv")
    p = sub.add_parser("plot-embeddings", help="2-D PCA of node embeddings to CSV (and PNG)")
    _common(p)
    p.add_argument("--image", action="store_true")
    return parser


def resolve_config(args) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {}
    for flag, key in (("dataset", "dataset"), ("data_dir", "data_dir"), ("seed", "seed"),
                      ("out", "out_dir"), ("jobs", "jobs")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "realizations", None) is not None:
        overrides["num_realizations"] = args.realizations
    if getattr(args, "method", None):
        overrides["methods"] = tuple(args.method)
    if getattr(args, "image", False):
        overrides["plot"] = True
    return config.replace(**overrides) if overrides else config


def _out(config: ExperimentConfig) -> Path:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _model(args, config, data) -> GaeModel:
    if getattr(args, "checkpoint", None):
        return GaeModel.load(args.checkpoint)
    model, _ = train_gae(data.structural, data.dataset.graphs, config.gae, config.seed)
    return model


def cmd_parse(args, config):
    data = load_data(config)
    ds = data.dataset
    print(json.dumps({
        "name": ds.name,
        "graphs": len(ds),
        "nodes": sum(g.num_nodes for g in ds.graphs),
        "edges": sum(len(g.edges) for g in ds.graphs),
        "node_label_alphabet": ds.node_label_alphabet,
        "classes": ds.num_classes,
        "class_values": list(ds.class_values),
    }, indent=1))


def cmd_features(args, config):
    data = load_data(config)
    out = _out(config)
    dump_features_csv([structural_feature_matrix(g) for g in data.dataset.graphs], out / "features_raw.csv")
    dump_features_csv(data.structural, out / "features_normalized.csv")
    print(out / "features_normalized.csv")


def cmd_train_gae(args, config):
    data = load_data(config)
    out = _out(config)
    model, history = train_gae(data.structural, data.dataset.graphs, config.gae, config.seed)
    model.save(out / "gae_checkpoint.json")
    with open(out / "gae_loss.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "loss"])
        w.writerows((e, repr(v)) for e, v in enumerate(history))
    print(f"loss {history[0]:.4f} -> {history[-1]:.4f}; checkpoint {out / 'gae_checkpoint.json'}")


def cmd_embed(args, config):
    data = load_data(config)
    out = _out(config)
    emb = embed_all(_model(args, config, data), data.dataset.graphs, data.structural)
    dump_embeddings_csv(emb, out / "embeddings.csv")
    print(out / "embeddings.csv")


def cmd_recover(args, config):
    data = load_data(config)
    out = _out(config)
    split = split_dataset(data.dataset, config.split, config.seed)
    variants = recovery_variants(config)
    emb = None
    if any(m.startswith("lse") for m, _ in variants):
        emb = embed_all(_model(args, config, data), data.dataset.graphs, data.structural)
    rows = []
    for method, qbar in variants:
        name = method_name(method, qbar)
        rec = recover_all(data, split, config, config.seed, emb, method, qbar)
        dump_recovered_csv(rec, out / f"recovered_{name}.csv")
        if method == "lse-nn":
            labels = [g.label for g in data.dataset.graphs]
            plans = [build_neighbor_plan(i, emb, labels, split.full_ids, qbar, config.nbar) for i in split.miss_ids]
            dump_plans(plans, out / f"plans_{name}.json")
        err = float(np.mean([recovery_error(data.features[i - 1], rec[i]) for i in split.miss_ids]))
        rows.append((name, err))
        print(f"{name:<12} {err:.4f}")
    with open(out / "recovery_errors.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "mean_error"])
        w.writerows((n, repr(e)) for n, e in rows)


def cmd_classify(args, config):
    data = load_data(config)
    out = _out(config)
    records = classification_realization(data, config, config.seed)
    cols = ["method", "dataset", "seed", "best_epoch", "val_acc", "test_acc"]
    with open(out / "runs.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        w.writerows([r[c] for c in cols] for r in records)
    for r in records:
        print(f"{r['method']:<16} test {r['test_acc']:6.2f}  val {r['val_acc']:6.2f}")


def cmd_experiment(args, config):
    data = load_data(config)
    if args.suite == "recovery":
        table = run_recovery_experiment(config, data)
    else:
        table = run_classification_experiment(config, data)
    projection = None if args.no_embeddings else embedding_projection(data, config)
    emit_outputs(table, config.out_dir, projection, plot=config.plot)
    print(table.format())


def cmd_plot_embeddings(args, config):
    data = load_data(config)
    paths = emit_outputs(None, config.out_dir, embedding_projection(data, config), plot=config.plot)
    for p in paths:
        print(p)


COMMANDS = {
    "parse": cmd_parse,
    "features": cmd_features,
    "train-gae": cmd_train_gae,
    "embed": cmd_embed,
    "recover": cmd_recover,
    "classify": cmd_classify,
    "experiment": cmd_experiment,
    "plot-embeddings": cmd_plot_embeddings,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = resolve_config(args)
        COMMANDS[args.command](args, config)
    except RecoveryError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: IoFailure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
