"""Versioned text checkpoint for parameter sets.

Layout (JSON)::

    {"format": "lse-paramset", "version": 1,
     "meta": {...},
     "params": [{"name": "enc.W0", "shape": [9, 64], "values": ["0x1.8p-1", ...]}, ...]}

Values are row-major and written with ``float.hex`` so reloading is bit-exact.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import IoFailure, UnreadableFile
from .layers import ParamSet

FORMAT = "lse-paramset"
VERSION = 1


def save_params(params: ParamSet, path: str | Path, meta: dict | None = None) -> None:
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "meta": meta or {},
        "params": [
            {"name": k, "shape": list(v.shape), "values": [float(x).hex() for x in v.ravel()]}
            for k, v in params.items()
        ],
    }
    try:
        Path(path).write_text(json.dumps(doc, indent=1))
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def load_params(path: str | Path) -> tuple[ParamSet, dict]:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UnreadableFile(f"{path}: {exc}") from exc
    if doc.get("format") != FORMAT or doc.get("version") != VERSION:
        raise UnreadableFile(f"{path}: not a {FORMAT} v{VERSION} checkpoint")
    params = ParamSet()
    for entry in doc["params"]:
        values = np.array([float.fromhex(x) for x in entry["values"]], dtype=np.float64)
        params[entry["name"]] = values.reshape(entry["shape"])
    return params, doc.get("meta", {})
