import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bias_probe import ratings as R
from bias_probe.errors import MissingRatings, ParseError, ZeroVariance
from bias_probe.traits import Label, TraitDimension

T = TraitDimension.TRUSTWORTHY


def test_alpha_identical_raters_is_one():
    assert R.cronbach_alpha([[1, 4, 2, 8], [1, 4, 2, 8]]) == pytest.approx(1.0)


def test_alpha_hand_case():
    assert R.cronbach_alpha([[1, 2, 3], [2, 4, 6]]) == pytest.approx(8 / 9, abs=1e-12)


@given(st.integers(2, 8), st.integers(3, 30), st.integers(0, 1000))
def test_alpha_at_most_one(k, n, seed):
    M = np.random.default_rng(seed).integers(1, 10, (k, n))
    if np.var(M.sum(axis=0)) == 0:
        return
    assert R.cronbach_alpha(M) <= 1.0 + 1e-12


def test_zscore_population_sd():
    sc = R.zscore_scale({"a": 1.0, "b": 3.0}, T)
    assert [s.score for s in sc] == [-100.0, 100.0]
    with pytest.raises(ZeroVariance):
        R.zscore_scale({"a": 2.0, "b": 2.0}, T)


@given(st.dictionaries(st.text("abc", min_size=1, max_size=4), st.floats(1, 9), min_size=2))
def test_zscores_are_standardized(means):
    vals = np.array(list(means.values()))
    if np.std(vals) < 1e-6:
        return
    z = np.array([s.score for s in R.zscore_scale(means, T)])
    assert abs(z.mean()) < 1e-6
    assert np.sqrt(np.mean(z ** 2)) == pytest.approx(100.0, rel=1e-9)


def test_mean_ratings_and_missing():
    recs = [R.RatingRecord("f", T, "r1", 3), R.RatingRecord("f", T, "r2", 5)]
    assert R.mean_ratings(recs) == {"f": {T: 4.0}}
    with pytest.raises(MissingRatings):
        R.mean_ratings(recs, faces=["f", "g"])
    with pytest.raises(ParseError):
        R.RatingRecord("f", T, "r", 10)


def test_simulator_is_deterministic_and_bounded():
    true = [R.TraitScore(f"f{i}", T, float(v)) for i, v in enumerate(np.linspace(-300, 300, 40))]
    a = R.simulate_raters(true, 1.5, 15, 7)
    b = R.simulate_raters(true, 1.5, 15, 7)
    assert a == b
    assert all(1 <= r.rating <= 9 for r in a)
    assert len(a) == 40 * 15


def test_calibration_hits_target():
    sd = R.calibrate_noise_sd(0.84)
    assert R.simulated_alpha(sd) == pytest.approx(0.84, abs=0.01)
    assert 0.80 <= R.simulated_alpha(R.DEFAULT_NOISE_SD) <= 0.88


def test_binarize_threshold_at_zero():
    assert R.label_of(0.0) == Label.POSITIVE
    assert R.label_of(-1e-9) == Label.NEGATIVE


def test_file_round_trip(tmp_path):
    recs = [R.RatingRecord("f", T, "r1", 3), R.RatingRecord("g", TraitDimension.DOMINANT, "r2", 9)]
    R.save_ratings(tmp_path / "r.csv", recs, {"seed": 1})
    assert R.load_ratings(tmp_path / "r.csv") == recs
    sc = [R.TraitScore("f", T, 0.1 + 0.2)]
    R.save_scores(tmp_path / "s.csv", sc)
    assert R.load_scores(tmp_path / "s.csv") == sc
