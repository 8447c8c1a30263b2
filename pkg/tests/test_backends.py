"""The compiled kernels and their pure-Python twins must agree bit for bit."""

import importlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bias_probe.explain import _slic_fallback, synthetic_face
from bias_probe.forest import ForestParams, core, _tree_fallback

slic_mod = importlib.import_module("bias_probe.explain.slic")

compiled_tree = pytest.importorskip("bias_probe.forest._tree_kernel")
compiled_slic = pytest.importorskip("bias_probe.explain._slic_kernel")


def _forest_arrays(f):
    return [tuple(getattr(t, k).copy() for k in ("feature", "threshold", "left", "right", "n_samples", "value"))
            for t in f.trees]


@settings(max_examples=15)
@given(st.integers(0, 10_000), st.booleans(), st.integers(2, 5))
def test_tree_kernels_agree(seed, classify, min_split):
    rng = np.random.default_rng(seed)
    X = np.round(rng.standard_normal((60, 5)), 1)  # ties exercise threshold handling
    y = X[:, 0] + rng.standard_normal(60)
    p = ForestParams(n_trees=3, min_split=min_split, seed=seed)
    fit = (lambda: core.fit_classifier(X, list(y > 0), p)) if classify else (lambda: core.fit_regression(X, y, p))
    saved = core._kernel
    try:
        core._kernel = compiled_tree
        a = _forest_arrays(fit())
        core._kernel = _tree_fallback
        b = _forest_arrays(fit())
    finally:
        core._kernel = saved
    for ta, tb in zip(a, b):
        for xa, xb in zip(ta, tb):
            assert np.array_equal(xa, xb)


@settings(max_examples=6)
@given(st.integers(0, 1000), st.sampled_from([50, 150, 300]), st.booleans())
def test_slic_kernels_agree(seed, k, color):
    img = synthetic_face(seed, 0, 48)
    if color:
        p = img.pixels.astype(float)
        img = type(img)(np.stack([p, p * 0.8, np.flipud(p) * 0.5], axis=2))
    saved = slic_mod._kernel
    try:
        slic_mod._kernel = compiled_slic
        a = slic_mod.slic(img, k)
        slic_mod._kernel = _slic_fallback
        b = slic_mod.slic(img, k)
    finally:
        slic_mod._kernel = saved
    assert a.k == b.k and np.array_equal(a.labels, b.labels)


def test_connectivity_kernels_agree():
    rng = np.random.default_rng(0)
    labels = rng.integers(0, 6, 30 * 40).astype(np.int64)
    a = compiled_slic.enforce_connectivity(labels.copy(), 30, 40, 5)
    b = _slic_fallback.enforce_connectivity(labels.copy(), 30, 40, 5)
    assert a[1] == b[1] and np.array_equal(np.asarray(a[0]), np.asarray(b[0]))


def test_backend_names():
    assert core.BACKEND in ("compiled", "python")
    assert slic_mod.BACKEND in ("compiled", "python")
