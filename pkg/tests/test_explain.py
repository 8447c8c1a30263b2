import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from skimage.segmentation import slic as sk_slic

from bias_probe.errors import ParseError, ScorerFailure, SizeMismatch, TooFewSamples, TooManySegments
from bias_probe.explain import (
    ForestScorer,
    Image,
    PatchEmbedder,
    Segmentation,
    SubprocessScorer,
    aggregate_heatmap,
    cohort,
    default_region,
    hottest,
    iou,
    is_connected,
    lime_explain,
    load_png,
    render_explanation,
    save_heatmap,
    save_png,
    slic,
    synthetic_face,
)
from bias_probe.explain.image import png_meta
from bias_probe.explain.lime import kernel_weights, sample_masks, weighted_ridge
from bias_probe.forest import ForestParams


def _grid_seg(size=16, cell=4):
    yy, xx = np.mgrid[0:size, 0:size]
    return Segmentation((yy // cell) * (size // cell) + xx // cell, (size // cell) ** 2)


def test_image_validation_and_png_round_trip(tmp_path):
    with pytest.raises(ParseError):
        Image(np.full((2, 2), 300.0))
    img = Image(np.arange(48, dtype=np.uint8).reshape(4, 4, 3))
    save_png(tmp_path / "a.png", img, {"config_hash": "abc", "seed": 3})
    assert np.array_equal(load_png(tmp_path / "a.png").pixels, img.pixels)
    assert png_meta(tmp_path / "a.png") == {"config_hash": "abc", "seed": "3"}
    (tmp_path / "bad.png").write_bytes(b"nope")
    with pytest.raises(ParseError):
        load_png(tmp_path / "bad.png")


@settings(max_examples=10)
@given(st.integers(0, 500), st.sampled_from([20, 100, 300]), st.sampled_from([32, 64]))
def test_slic_covers_and_connects(seed, k, size):
    seg = slic(synthetic_face(seed, 0, size), k)
    assert seg.labels.shape == (size, size)
    assert set(np.unique(seg.labels)) == set(range(seg.k))
    assert is_connected(seg)


def test_slic_count_near_request_and_close_to_reference():
    img = synthetic_face(0, 0, 96)
    seg = slic(img, 300)
    assert abs(seg.k - 300) <= 30
    ref = sk_slic(img.pixels, n_segments=300, compactness=10, channel_axis=None, start_label=0)
    assert abs(seg.k - len(np.unique(ref))) <= 0.25 * seg.k


def test_slic_rejects_too_many_segments():
    with pytest.raises(TooManySegments):
        slic(synthetic_face(0, 0, 8), 65)


def test_slic_uniform_image_gives_grid():
    seg = slic(Image(np.full((20, 20), 128, dtype=np.uint8)), 4)
    assert seg.k == 4 and is_connected(seg)


def test_masks_first_row_all_on_and_deterministic():
    seg = _grid_seg()
    Z = sample_masks(seg, 200, 1)
    assert Z[0].all() and set(np.unique(Z)) <= {0.0, 1.0}
    assert np.array_equal(Z, sample_masks(seg, 200, 1))


def test_kernel_is_one_at_the_original():
    Z = np.array([[1.0, 1, 1, 1], [1, 0, 0, 0], [0, 0, 0, 0]])
    w = kernel_weights(Z)
    assert w[0] == 1.0 and 0 < w[1] < 1 and w[2] == pytest.approx(np.exp(-16))


def test_weighted_ridge_recovers_linear_model():
    rng = np.random.default_rng(0)
    Z = rng.integers(0, 2, (500, 5)).astype(float)
    y = Z @ np.array([3.0, -1, 0, 2, 0.5]) + 4
    coef, b, resid = weighted_ridge(Z, y, np.ones(500), alpha=0.0)
    assert np.allclose(coef, [3, -1, 0, 2, 0.5]) and b == pytest.approx(4) and resid < 1e-9


def test_lime_finds_planted_segment():
    img = synthetic_face(0, 0, 32)
    seg = slic(img, 50)
    target = int(seg.labels[22, 16])
    mask = seg.labels == target
    e = lime_explain(lambda a: float(a[mask].mean()), img, seg, 800, seed=0)
    assert e.top_k[0] == target
    assert e.agreement[0]
    assert e.to_dict()["settings"]["fill"] == "mean"


def test_lime_errors():
    seg = _grid_seg()
    img = Image(np.zeros((16, 16), dtype=np.uint8))
    with pytest.raises(TooFewSamples):
        lime_explain(lambda a: 0.0, img, seg, 5)
    with pytest.raises(SizeMismatch):
        lime_explain(lambda a: 0.0, Image(np.zeros((8, 8), dtype=np.uint8)), seg, 100)
    with pytest.raises(ScorerFailure) as err:
        lime_explain(lambda a: float("nan"), img, seg, 100)
    assert err.value.sample_index == 0


def test_heatmap_helpers(tmp_path):
    v = np.zeros((10, 10))
    v[0, :5] = -3
    m = hottest(v, 0.05)
    assert m.sum() == 5 and m[0, :5].all()
    assert iou(m, m) == 1.0 and iou(m, ~m) == 0.0
    img = synthetic_face(0, 0, 16)
    seg = _grid_seg()
    e = lime_explain(lambda a: float(a[:4, :4].mean()), img, seg, 100)
    heat = aggregate_heatmap([e, e], [img, img])
    assert heat.n == 2 and heat.values.shape == (16, 16)
    paths = save_heatmap(tmp_path / "h", heat, {"seed": 0})
    assert all(p.exists() for p in paths)
    assert render_explanation(img, e).pixels.shape == (16, 16, 3)
    with pytest.raises(SizeMismatch):
        aggregate_heatmap([e], [img, img])


def test_forest_scorer_heatmap_hits_region():
    train, levels = cohort(0, 80, 32)
    scorer = ForestScorer.train(train, levels, ForestParams(n_trees=30), PatchEmbedder(8))
    test, _ = cohort(1, 3, 32)
    exps = [lime_explain(scorer, im, slic(im, 60), 600, seed=i) for i, im in enumerate(test)]
    heat = aggregate_heatmap(exps, test)
    region = default_region(32)
    assert iou(hottest(heat.values, 0.05), region.mask((32, 32))) >= 0.3


def test_patch_embedder_means():
    imgs = np.arange(2 * 4 * 4 * 1, dtype=float).reshape(2, 4, 4, 1)
    out = PatchEmbedder(2).embed_batch(imgs)
    assert out.shape == (2, 4)
    assert out[0, 0] == pytest.approx(np.mean([0, 1, 4, 5]))


SCRIPT = "import sys\nfor line in sys.stdin:\n    print(len(line.strip()) % 7)\n"


def test_subprocess_scorer(tmp_path):
    script = tmp_path / "s.py"
    script.write_text(SCRIPT)
    s = SubprocessScorer([sys.executable, str(script)], pool=2)
    out = s.score_batch(np.zeros((5, 4, 4, 1)), offset=10)
    assert out.shape == (5,) and np.isfinite(out).all()
    bad = tmp_path / "b.py"
    bad.write_text("import sys\nsys.stdin.read()\nprint('1.0')\nprint('oops')\n")
    with pytest.raises(ScorerFailure) as err:
        SubprocessScorer([sys.executable, str(bad)]).score_batch(np.zeros((3, 4, 4, 1)), offset=7)
    assert err.value.sample_index == 8
