"""Cross-validation and Experiments A-C.

Each experiment takes labeled faces, trains forests on their embeddings and
returns a plain ``dict`` that serializes directly to the report JSON.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from typing import Sequence

import numpy as np

from .. import stats
from ..errors import EmptyData, InvariantViolation, MissingEmbedding, TooFewSamples, ZeroVariance
from ..errors import SingleClassWarning
from ..forest import ForestParams, fit_classifier, fit_regression, predict, predict_class
from ..ratings import label_of
from ..seeding import derive_seed, rng_for
from ..traits import Label, TraitDimension
from .world import LabeledFace, Origin

DEFAULT_FOLDS = 10


def kfold_splits(n: int, k: int, seed: int) -> list[np.ndarray]:
    """Test indices of each fold: a seeded shuffle cut into ``k`` near-equal parts.

    The shuffle depends only on ``(seed, n)``, so every trait sees the same folds.
    """
    if k < 2 or n < k:
        raise TooFewSamples(f"k-fold needs n >= k >= 2 (n={n}, k={k})")
    perm = rng_for(seed, "folds", n).permutation(n)
    return [np.sort(f) for f in np.array_split(perm, k)]


def _fold_params(params: ForestParams, fold: int) -> ForestParams:
    return dataclasses.replace(params, seed=derive_seed(params.seed, "forest.fold", fold))


def kfold_predictions(X, y, k: int = DEFAULT_FOLDS, params: ForestParams | None = None,
                      seed: int = 0, classify: bool = False, threads: int | None = None):
    """Out-of-fold prediction for every row.

    Returns a float array for regression or a list of labels for classification.
    """
    params = params or ForestParams()
    X = np.asarray(X, dtype=np.float64)
    n = len(X)
    folds = kfold_splits(n, k, seed)
    out = [None] * n if classify else np.empty(n)
    for i, test in enumerate(folds):
        train = np.setdiff1d(np.arange(n), test, assume_unique=True)
        if classify:
            labels = [y[j] for j in train]
            model = fit_classifier(X[train], labels, _fold_params(params, i), threads)
            for j, p in zip(test, predict_class(model, X[test])):
                out[j] = p
        else:
            y_arr = np.asarray(y, dtype=np.float64)
            model = fit_regression(X[train], y_arr[train], _fold_params(params, i), threads)
            out[test] = predict(model, X[test])
    return out


# -- summaries ---------------------------------------------------------------

def _num(v: float | None):
    return None if v is None or not math.isfinite(v) else float(v)


def regression_summary(pred, actual) -> dict:
    pred = np.asarray(pred, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    out = {"n": int(len(pred)), "rho": None, "p_value": None,
           "rmse": stats.rmse(pred, actual), "explained_variance": None}
    try:
        c = stats.pearson(pred, actual)
        out["rho"], out["p_value"] = c.rho, c.p_value
    except (ZeroVariance, TooFewSamples):
        pass
    try:
        out["explained_variance"] = stats.explained_variance(pred, actual)
    except ZeroVariance:
        pass
    return {k: (_num(v) if isinstance(v, float) else v) for k, v in out.items()}


def classification_summary(pred: Sequence[Label], true: Sequence[Label]) -> dict:
    c = stats.confusion(pred, true)
    return {"n": len(pred), "accuracy": stats.accuracy(pred, true),
            "confusion": {"tp": c.tp, "fp": c.fp, "fn": c.fn, "tn": c.tn}}


# -- datasets ----------------------------------------------------------------

def _with_trait(faces: Sequence[LabeledFace], trait: TraitDimension) -> list[LabeledFace]:
    return [f for f in faces if trait in f.scores]


def _xy(faces: Sequence[LabeledFace], trait: TraitDimension) -> tuple[np.ndarray, np.ndarray]:
    for f in faces:
        if f.embedding is None:
            raise MissingEmbedding(f"face {f.face_id} has no embedding")
    X = np.vstack([f.embedding for f in faces])
    y = np.array([f.scores[trait] for f in faces], dtype=np.float64)
    return X, y


def _check_disjoint(a: Sequence[LabeledFace], b: Sequence[LabeledFace]) -> None:
    shared = {f.face_id for f in a} & {f.face_id for f in b}
    if shared:
        raise InvariantViolation(f"train/test disjointness: {len(shared)} face ids in both sets, "
                                 f"e.g. {sorted(shared)[0]!r}")


def _header(name: str, trait: TraitDimension, params: ForestParams, k: int, seed: int) -> dict:
    return {"experiment": name, "trait": trait.value, "folds": k, "seed": seed,
            "forest": dataclasses.asdict(params)}


# -- experiments -------------------------------------------------------------

def experiment_a(random_faces: Sequence[LabeledFace], distinct_faces: Sequence[LabeledFace],
                 trait: TraitDimension, params: ForestParams | None = None, k: int = DEFAULT_FOLDS,
                 seed: int = 0, threads: int | None = None) -> dict:
    """Pooled k-fold CV over random and distinct faces, broken down by origin."""
    params = params or ForestParams()
    pool = _with_trait(random_faces, trait) + _with_trait(distinct_faces, trait)
    if not pool:
        raise EmptyData(f"no faces carry a {trait.value} score")
    X, y = _xy(pool, trait)
    pred = kfold_predictions(X, y, k, params, seed, threads=threads)
    report = _header("A", trait, params, k, seed)
    report["overall"] = regression_summary(pred, y)
    for origin in (Origin.RANDOM, Origin.DISTINCT):
        mask = np.array([f.origin == origin for f in pool])
        report[origin.value.lower()] = regression_summary(pred[mask], y[mask]) if mask.any() else None
    return report


def experiment_b(distinct_faces: Sequence[LabeledFace], random_faces: Sequence[LabeledFace],
                 trait: TraitDimension, params: ForestParams | None = None, k: int = DEFAULT_FOLDS,
                 seed: int = 0, threads: int | None = None) -> dict:
    """Train on distinct faces, test on random faces; also CV on the training set."""
    params = params or ForestParams()
    train = _with_trait(distinct_faces, trait)
    test = _with_trait(random_faces, trait)
    if not train or not test:
        raise EmptyData("experiment B needs distinct training faces and random test faces")
    _check_disjoint(train, test)
    Xtr, ytr = _xy(train, trait)
    Xte, yte = _xy(test, trait)
    model = fit_regression(Xtr, ytr, params, threads)
    report = _header("B", trait, params, k, seed)
    report["test"] = regression_summary(predict(model, Xte), yte)
    report["train_cv"] = regression_summary(kfold_predictions(Xtr, ytr, k, params, seed, threads=threads), ytr)
    return report


def _labels(faces: Sequence[LabeledFace], trait: TraitDimension) -> list[Label]:
    return [label_of(f.scores[trait]) for f in faces]


def _classify_regime(train: Sequence[LabeledFace], test: Sequence[LabeledFace] | None, trait, params,
                     k, seed, threads) -> dict:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", SingleClassWarning)
        Xtr, _ = _xy(train, trait)
        ltr = _labels(train, trait)
        if test is None:
            pred, truth = kfold_predictions(Xtr, ltr, k, params, seed, classify=True, threads=threads), ltr
        else:
            Xte, _ = _xy(test, trait)
            pred = predict_class(fit_classifier(Xtr, ltr, params, threads), Xte)
            truth = _labels(test, trait)
    out = classification_summary(pred, truth)
    out["single_class"] = any(issubclass(w.category, SingleClassWarning) for w in caught)
    return out


def experiment_c(random_faces: Sequence[LabeledFace], distinct_faces: Sequence[LabeledFace],
                 trait: TraitDimension, params: ForestParams | None = None, k: int = DEFAULT_FOLDS,
                 seed: int = 0, threads: int | None = None) -> dict:
    """Binary classification (score >= 0 is Positive) under the A/B regimes."""
    params = params or ForestParams()
    rnd = _with_trait(random_faces, trait)
    dst = _with_trait(distinct_faces, trait)
    report = _header("C", trait, params, k, seed)
    regimes = {}
    if dst:
        regimes["distinct_cv"] = _classify_regime(dst, None, trait, params, k, seed, threads)
    if dst and rnd:
        _check_disjoint(dst, rnd)
        regimes["distinct_to_random"] = _classify_regime(dst, rnd, trait, params, k, seed, threads)
    if rnd:
        regimes["random_cv"] = _classify_regime(rnd, None, trait, params, k, seed, threads)
    if rnd or dst:
        regimes["pooled_cv"] = _classify_regime(rnd + dst, None, trait, params, k, seed, threads)
    if not regimes:
        raise EmptyData(f"no faces carry a {trait.value} score")
    report["regimes"] = regimes
    return report
