"""Random forest regression and classification grown from scratch.

Defaults follow the model configuration used for appearance-bias regression:
100 trees, no depth cap, minimum split size two, MSE split criterion.
Classification uses Gini impurity and a majority vote.
"""

from __future__ import annotations

import json
import math
import warnings
from enum import Enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .._backend import select
from ..errors import (
    ConfigError,
    DimensionMismatch,
    EmptyData,
    NonFiniteInput,
    ParseError,
    SingleClassWarning,
)
from ..seeding import seed_sequence

_kernel, BACKEND = select("bias_probe.forest._tree_kernel", "bias_probe.forest._tree_fallback")

FORMAT_VERSION = 1


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    min_split: int = 2
    max_depth: int | None = None
    mtry: int | None = None
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ConfigError("n_trees must be >= 1")
        if self.min_split < 2:
            raise ConfigError("min_split must be >= 2")
        if self.max_depth is not None and self.max_depth < 0:
            raise ConfigError("max_depth must be >= 0 or None")
        if self.mtry is not None and self.mtry < 1:
            raise ConfigError("mtry must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")

    def resolve_mtry(self, n_features: int, classification: bool) -> int:
        if self.mtry is None:
            m = math.ceil(math.sqrt(n_features)) if classification else math.ceil(n_features / 3)
        else:
            m = self.mtry
        if not 1 <= m <= n_features:
            raise ConfigError(f"mtry={m} outside [1, {n_features}]")
        return m


@dataclass(frozen=True)
class Tree:
    """Flat binary tree. Leaves have ``feature == -1``; rows go left when
    ``x[feature] <= threshold``. ``value`` is the leaf mean (regression) or the
    per-class sample counts (classification)."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    n_samples: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def apply(self, X: np.ndarray) -> np.ndarray:
        return _kernel.apply_tree(X, self.feature, self.threshold, self.left, self.right)

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]


@dataclass(frozen=True)
class RegressionForest:
    trees: tuple[Tree, ...]
    params: ForestParams
    n_features: int
    y_range: tuple[float, float] = field(default=(math.nan, math.nan))


@dataclass(frozen=True)
class ClassForest:
    trees: tuple[Tree, ...]
    params: ForestParams
    n_features: int
    classes: tuple


def _check_xy(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionMismatch("X must be a 2-D array (samples x features)")
    if len(X) != len(y):
        raise DimensionMismatch(f"X has {len(X)} rows but {len(y)} targets")
    if len(X) < 2 or X.shape[1] < 1:
        raise EmptyData("need at least two samples and one feature")
    if not np.isfinite(X).all():
        raise NonFiniteInput("X contains NaN or infinite values")
    return X, y


def _tree_seeds(params: ForestParams, index: int, n: int) -> tuple[np.ndarray, int]:
    ss = seed_sequence(params.seed, "forest.tree", index)
    state = int(ss.generate_state(1, np.uint64)[0])
    if params.bootstrap:
        rows = np.random.default_rng(ss).integers(0, n, n)
        rows.sort()
    else:
        rows = np.arange(n)
    return rows.astype(np.intp), state


def _grow_all(X, y, n_classes, params, mtry, threads):
    Xf = np.asfortranarray(X)
    yc = np.ascontiguousarray(y, dtype=np.float64)
    max_depth = -1 if params.max_depth is None else params.max_depth
    n = len(X)

    def grow(i: int) -> Tree:
        rows, state = _tree_seeds(params, i, n)
        arrays = _kernel.build_tree(Xf, yc, rows, n_classes, params.min_split,
                                    max_depth, mtry, state)
        return Tree(*arrays)

    if threads is None or threads <= 1:
        return tuple(grow(i) for i in range(params.n_trees))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return tuple(pool.map(grow, range(params.n_trees)))


def fit_regression(X, y, params: ForestParams | None = None, threads: int | None = None) -> RegressionForest:
    params = params or ForestParams()
    y = np.asarray(y, dtype=np.float64)
    X, y = _check_xy(X, y)
    if not np.isfinite(y).all():
        raise NonFiniteInput("y contains NaN or infinite values")
    mtry = params.resolve_mtry(X.shape[1], classification=False)
    trees = _grow_all(X, y, 0, params, mtry, threads)
    return RegressionForest(trees, params, X.shape[1], (float(y.min()), float(y.max())))


def fit_classifier(X, labels: Sequence, params: ForestParams | None = None,
                   threads: int | None = None) -> ClassForest:
    """Fit a Gini forest. Class order (Enum declaration order, else sorted
    values) is also the vote tie-break order, so ``Label.NEGATIVE`` wins ties.

    A single-class training set yields a constant classifier with a
    :class:`SingleClassWarning` rather than an error.
    """
    params = params or ForestParams()
    labels = list(labels)
    X, _ = _check_xy(X, labels)
    classes = _class_order(labels)
    if len(classes) == 1:
        warnings.warn(f"all training labels are {classes[0]!s}", SingleClassWarning, stacklevel=2)
    index = {c: i for i, c in enumerate(classes)}
    y = np.array([index[v] for v in labels], dtype=np.float64)
    mtry = params.resolve_mtry(X.shape[1], classification=True)
    trees = _grow_all(X, y, len(classes), params, mtry, threads)
    return ClassForest(trees, params, X.shape[1], classes)


def _class_order(labels: list) -> tuple:
    # Enum labels keep declaration order; anything else sorts by value.
    present = set(labels)
    first = labels[0]
    if isinstance(first, Enum):
        return tuple(m for m in type(first) if m in present)
    return tuple(sorted(present))


def _as_matrix(forest, X) -> tuple[np.ndarray, bool]:
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != forest.n_features:
        raise DimensionMismatch(f"expected {forest.n_features} features, got shape {X.shape}")
    return np.ascontiguousarray(X), single


def predict(forest: RegressionForest, X):
    """Ensemble mean of tree outputs for one row or a matrix of rows."""
    X, single = _as_matrix(forest, X)
    total = np.zeros(len(X))
    for tree in forest.trees:
        total += tree.predict_value(X)[:, 0]
    out = total / len(forest.trees)
    return float(out[0]) if single else out


def class_votes(forest: ClassForest, X) -> np.ndarray:
    X, _ = _as_matrix(forest, X)
    votes = np.zeros((len(X), len(forest.classes)), dtype=np.int64)
    rows = np.arange(len(X))
    for tree in forest.trees:
        # argmax takes the first maximum: leaf ties go to the lower class index
        votes[rows, np.argmax(tree.predict_value(X), axis=1)] += 1
    return votes


def predict_class(forest: ClassForest, X):
    X, single = _as_matrix(forest, X)
    winners = np.argmax(class_votes(forest, X), axis=1)
    out = [forest.classes[i] for i in winners]
    return out[0] if single else out


# -- serialization -----------------------------------------------------------

def _tree_to_dict(t: Tree) -> dict:
    return {
        "feature": t.feature.tolist(),
        "threshold": [float(v) for v in t.threshold],
        "left": t.left.tolist(),
        "right": t.right.tolist(),
        "n_samples": t.n_samples.tolist(),
        "value": t.value.tolist(),
    }


def _tree_from_dict(d: dict) -> Tree:
    return Tree(
        np.array(d["feature"], dtype=np.intp),
        np.array(d["threshold"], dtype=np.float64),
        np.array(d["left"], dtype=np.intp),
        np.array(d["right"], dtype=np.intp),
        np.array(d["n_samples"], dtype=np.intp),
        np.array(d["value"], dtype=np.float64).reshape(len(d["feature"]), -1),
    )


def to_json(forest: RegressionForest | ClassForest) -> str:
    """Serialize to the versioned JSON format documented in ``docs/forest_format.md``.

    Floats are written with ``repr`` precision, so a load reproduces
    predictions bit-exactly.
    """
    doc = {
        "format": "bias-probe-forest",
        "version": FORMAT_VERSION,
        "kind": "regression" if isinstance(forest, RegressionForest) else "classification",
        "params": asdict(forest.params),
        "n_features": forest.n_features,
        "trees": [_tree_to_dict(t) for t in forest.trees],
    }
    if isinstance(forest, ClassForest):
        doc["classes"] = [str(c) for c in forest.classes]
    else:
        doc["y_range"] = list(forest.y_range)
    return json.dumps(doc, separators=(",", ":"))


def from_json(text: str, label_type=None) -> RegressionForest | ClassForest:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"forest file is not JSON: {exc}") from exc
    if doc.get("format") != "bias-probe-forest":
        raise ParseError("not a bias-probe forest file")
    if doc.get("version") != FORMAT_VERSION:
        raise ParseError(f"unsupported forest format version {doc.get('version')}")
    params = ForestParams(**doc["params"])
    trees = tuple(_tree_from_dict(t) for t in doc["trees"])
    if doc["kind"] == "regression":
        return RegressionForest(trees, params, doc["n_features"], tuple(doc["y_range"]))
    classes = doc["classes"]
    if label_type is not None:
        classes = [label_type(c) for c in classes]
    return ClassForest(trees, params, doc["n_features"], tuple(classes))


def save(forest, path: str | Path) -> None:
    Path(path).write_text(to_json(forest), encoding="utf-8")


def load(path: str | Path, label_type=None):
    return from_json(Path(path).read_text(encoding="utf-8"), label_type)
