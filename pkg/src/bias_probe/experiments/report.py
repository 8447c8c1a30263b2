"""Canonical JSON for experiment reports."""

from __future__ import annotations

import json
import math
from enum import Enum
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k.value if isinstance(k, Enum) else k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def dumps(report: dict, meta: dict | None = None) -> str:
    """Sorted-key JSON with a schema version; NaN and inf become null."""
    doc = {"schema_version": SCHEMA_VERSION, **_clean(report)}
    if meta:
        doc["meta"] = _clean(meta)
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write(path: str | Path, report: dict, meta: dict | None = None) -> None:
    Path(path).write_text(dumps(report, meta), encoding="utf-8")


def read(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
