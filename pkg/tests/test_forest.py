import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bias_probe import forest as F
from bias_probe.errors import ConfigError, DimensionMismatch, NonFiniteInput, SingleClassWarning
from bias_probe.traits import Label


def _data(seed=0, n=120, p=6):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    return X, 2 * X[:, 0] - X[:, 1] + 0.1 * rng.standard_normal(n)


def _same(a, b):
    return all(np.array_equal(getattr(s, k), getattr(t, k))
               for s, t in zip(a.trees, b.trees) for k in ("feature", "threshold", "left", "right", "value"))


def test_serial_equals_threaded():
    X, y = _data()
    p = F.ForestParams(n_trees=20, seed=3)
    assert _same(F.fit_regression(X, y, p), F.fit_regression(X, y, p, threads=3))


def test_seed_changes_forest():
    X, y = _data()
    a = F.predict(F.fit_regression(X, y, F.ForestParams(n_trees=5, seed=1)), X)
    b = F.predict(F.fit_regression(X, y, F.ForestParams(n_trees=5, seed=2)), X)
    assert not np.array_equal(a, b)


def test_constant_target_is_exact():
    X, _ = _data()
    f = F.fit_regression(X, np.full(len(X), -2.5), F.ForestParams(n_trees=10))
    assert np.all(F.predict(f, X) == -2.5)


@given(st.integers(0, 10_000))
def test_memorization_without_bootstrap(seed):
    X, y = _data(seed, n=40, p=3)
    f = F.fit_regression(X, y, F.ForestParams(n_trees=1, bootstrap=False, seed=seed))
    assert np.array_equal(F.predict(f, X), y)


@given(st.integers(0, 10_000))
def test_predictions_within_target_range(seed):
    X, y = _data(seed, n=50, p=4)
    pred = F.predict(F.fit_regression(X, y, F.ForestParams(n_trees=5, seed=seed)),
                     np.random.default_rng(seed).standard_normal((20, 4)) * 10)
    assert pred.min() >= y.min() - 1e-12 and pred.max() <= y.max() + 1e-12


def test_heldout_linear_signal():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((400, 5))
    y = X[:, 0] + rng.normal(0, 0.1, 400)
    f = F.fit_regression(X[:200], y[:200])
    assert np.corrcoef(F.predict(f, X[200:]), y[200:])[0, 1] >= 0.9


def test_max_depth_zero_gives_stump_mean():
    X, y = _data()
    f = F.fit_regression(X, y, F.ForestParams(n_trees=1, bootstrap=False, max_depth=0))
    assert np.allclose(F.predict(f, X), y.mean())


def test_classifier_and_single_class_warning():
    X, y = _data()
    labels = [Label.POSITIVE if v >= 0 else Label.NEGATIVE for v in y]
    f = F.fit_classifier(X, labels, F.ForestParams(n_trees=30))
    acc = np.mean([a == b for a, b in zip(F.predict_class(f, X), labels)])
    assert acc > 0.95
    assert F.class_votes(f, X).shape == (len(X), 2)
    with pytest.warns(SingleClassWarning):
        F.fit_classifier(X, [Label.POSITIVE] * len(X), F.ForestParams(n_trees=2))


def test_mtry_defaults():
    assert F.ForestParams().resolve_mtry(128, False) == 43
    assert F.ForestParams().resolve_mtry(128, True) == 12
    with pytest.raises(ConfigError):
        F.ForestParams(mtry=10).resolve_mtry(5, False)


def test_input_validation():
    X, y = _data()
    with pytest.raises(NonFiniteInput):
        F.fit_regression(X, np.r_[y[:-1], np.nan])
    f = F.fit_regression(X, y, F.ForestParams(n_trees=2))
    with pytest.raises(DimensionMismatch):
        F.predict(f, X[:, :3])
    with pytest.raises(ConfigError):
        F.ForestParams(n_trees=0)


def test_json_round_trip(tmp_path):
    X, y = _data()
    f = F.fit_regression(X, y, F.ForestParams(n_trees=4))
    F.save(f, tmp_path / "f.json")
    g = F.load(tmp_path / "f.json")
    assert np.array_equal(F.predict(f, X), F.predict(g, X))
    assert json.loads(F.to_json(f))["version"] == F.core.FORMAT_VERSION
    labels = [Label.POSITIVE if v >= 0 else Label.NEGATIVE for v in y]
    c = F.fit_classifier(X, labels, F.ForestParams(n_trees=3))
    c2 = F.from_json(F.to_json(c), Label)
    assert F.predict_class(c2, X) == F.predict_class(c, X)
