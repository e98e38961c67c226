"""Experiment configuration in a flat ``key = value`` text format.

One setting per line, ``#`` starts a comment, lists are comma separated.
Recognised keys and their defaults:

==========================  =====================================================
``dataset``                 ``MUTAG``
``data_dir``                ``data`` (the dataset lives in ``<data_dir>/<dataset>``)
``split``                   ``0.1, 0.1, 0.3, 0.5`` (val, test, full, miss)
``num_realizations``        ``15``
``seed``                    ``0`` (realization r uses seed + r)
``qbar``                    ``1, 3``
``nbar``                    ``1``
``gae_encoder``             ``64, 16`` (GCN widths; the last is the embedding size)
``gae_decoder``             ``64`` (hidden widths of the decoder MLP)
``gae_lr``                  ``0.01``
``gae_epochs``              ``300``
``gin_layers``              ``2``
``gin_hidden``              ``64``
``gin_eps``                 ``0``
``gin_lr``                  ``0.01``
``gin_epochs``              ``100``
``methods``                 ``all`` or a subset of the method names below
``out_dir``                 ``results``
``jobs``                    ``1`` (realizations run in parallel processes)
``plot``                    ``false`` (also write a PNG scatter of the embeddings)
==========================  =====================================================

Methods: ``true-features``, ``zeros``, ``ones``, ``random``, ``degree``,
``not-using-tmiss``, ``lse-ng``, ``lse-nn``. Each experiment ignores the
methods that do not apply to it.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .errors import InvalidValue, UnknownKey, UnreadableFile
from .gae import GaeConfig
from .gin import GinConfig

ALL_METHODS = ("true-features", "zeros", "ones", "random", "degree", "not-using-tmiss", "lse-ng", "lse-nn")
RECOVERY_METHODS = ("zeros", "ones", "random", "degree", "lse-ng", "lse-nn")


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str = "MUTAG"
    data_dir: str = "data"
    split: tuple[float, ...] = (0.1, 0.1, 0.3, 0.5)
    num_realizations: int = 15
    seed: int = 0
    qbar: tuple[int, ...] = (1, 3)
    nbar: int = 1
    gae: GaeConfig = GaeConfig()
    gin: GinConfig = GinConfig()
    methods: tuple[str, ...] = ALL_METHODS
    out_dir: str = "results"
    jobs: int = 1
    plot: bool = False

    def __post_init__(self):
        if len(self.split) != 4 or min(self.split) <= 0 or abs(sum(self.split) - 1.0) > 1e-9:
            raise InvalidValue(f"split must be 4 positive ratios summing to 1, got {self.split}")
        if self.num_realizations < 1:
            raise InvalidValue("num_realizations must be >= 1")
        if not self.qbar or min(self.qbar) < 1:
            raise InvalidValue(f"qbar entries must be >= 1, got {self.qbar}")
        if self.nbar < 1:
            raise InvalidValue(f"nbar must be >= 1, got {self.nbar}")
        if self.jobs < 1:
            raise InvalidValue("jobs must be >= 1")
        unknown = set(self.methods) - set(ALL_METHODS)
        if unknown or not self.methods:
            raise InvalidValue(f"unknown methods {sorted(unknown)}")

    @property
    def dataset_dir(self) -> Path:
        return Path(self.data_dir) / self.dataset

    @property
    def seeds(self) -> list[int]:
        return [self.seed + r for r in range(self.num_realizations)]

    def replace(self, **changes) -> ExperimentConfig:
        return dataclasses.replace(self, **changes)


def _ints(v: str) -> tuple[int, ...]:
    return tuple(int(x) for x in v.split(",") if x.strip())


def _floats(v: str) -> tuple[float, ...]:
    return tuple(float(x) for x in v.split(",") if x.strip())


def _bool(v: str) -> bool:
    low = v.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(v)


def _methods(v: str) -> tuple[str, ...]:
    items = tuple(x.strip() for x in v.split(",") if x.strip())
    return ALL_METHODS if items == ("all",) else items


# key -> (target section, field, parser)
_KEYS = {
    "dataset": (None, "dataset", str),
    "data_dir": (None, "data_dir", str),
    "split": (None, "split", _floats),
    "num_realizations": (None, "num_realizations", int),
    "seed": (None, "seed", int),
    "qbar": (None, "qbar", _ints),
    "nbar": (None, "nbar", int),
    "methods": (None, "methods", _methods),
    "out_dir": (None, "out_dir", str),
    "jobs": (None, "jobs", int),
    "plot": (None, "plot", _bool),
    "gae_encoder": ("gae", "encoder_widths", _ints),
    "gae_decoder": ("gae", "decoder_hidden", _ints),
    "gae_lr": ("gae", "lr", float),
    "gae_epochs": ("gae", "epochs", int),
    "gin_layers": ("gin", "num_layers", int),
    "gin_hidden": ("gin", "hidden", int),
    "gin_eps": ("gin", "eps", float),
    "gin_lr": ("gin", "lr", float),
    "gin_epochs": ("gin", "epochs", int),
}


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    top: dict = {}
    sections: dict[str, dict] = {"gae": {}, "gin": {}}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidValue(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise UnknownKey(f"{source}:{lineno}: unknown key {key!r}")
        section, name, conv = _KEYS[key]
        try:
            parsed = conv(value)
        except ValueError:
            raise InvalidValue(f"{source}:{lineno}: bad value {value!r} for {key}") from None
        (top if section is None else sections[section])[name] = parsed
    try:
        return ExperimentConfig(gae=GaeConfig(**sections["gae"]), gin=GinConfig(**sections["gin"]), **top)
    except InvalidValue as exc:
        raise InvalidValue(f"{source}: {exc}") from None


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise UnreadableFile(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path))
