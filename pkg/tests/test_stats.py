import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats as sps

from bias_probe import stats
from bias_probe.errors import InvalidCounts, LengthMismatch, TooFewSamples, ZeroVariance
from bias_probe.traits import Label


def test_pearson_hand_case():
    r = stats.pearson([1, 2, 3, 4], [1, 3, 2, 4])
    assert r.rho == pytest.approx(0.8, abs=1e-12)
    assert r.p_value == pytest.approx(0.2, abs=1e-12)
    assert r.n == 4


def test_chi2_hand_case():
    assert stats.chi2_proportion_stat(60, 100) == pytest.approx(4.0)
    assert stats.chi2_proportion(60, 100) == pytest.approx(0.0455, abs=5e-5)


@pytest.mark.parametrize("df", [1, 2, 5, 30, 298, 5000])
@pytest.mark.parametrize("t", [0.0, 0.1, 1.0, 2.5, 10.0, 40.0])
def test_t_tail_matches_scipy(t, df):
    assert stats.student_t_sf2(t, df) == pytest.approx(2 * sps.t.sf(t, df), rel=1e-9, abs=1e-15)


@pytest.mark.parametrize("df", [1, 2, 3, 10, 100])
@pytest.mark.parametrize("x", [1e-6, 0.5, 4.0, 20.0, 300.0])
def test_chi2_tail_matches_scipy(x, df):
    assert stats.chi2_sf(x, df) == pytest.approx(sps.chi2.sf(x, df), rel=1e-9, abs=1e-15)


@given(a=st.floats(0.1, 50), b=st.floats(0.1, 50), x=st.floats(0, 1))
def test_betainc_matches_scipy(a, b, x):
    from scipy.special import betainc
    assert stats.betainc_reg(a, b, x) == pytest.approx(betainc(a, b, x), rel=1e-8, abs=1e-13)


@given(st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)), min_size=3, max_size=40))
def test_pearson_properties(pairs):
    x, y = map(np.array, zip(*pairs))
    if np.ptp(x) < 1e-3 or np.ptp(y) < 1e-3:
        return
    r = stats.pearson(x, y)
    ref = sps.pearsonr(x, y)
    assert -1 <= r.rho <= 1 and 0 <= r.p_value <= 1
    assert r.rho == pytest.approx(ref.statistic, abs=1e-9)
    assert stats.pearson(y, x).rho == pytest.approx(r.rho, abs=1e-12)
    assert stats.pearson(3 * x + 7, y).rho == pytest.approx(r.rho, abs=1e-9)


def test_pearson_errors():
    with pytest.raises(TooFewSamples):
        stats.pearson([1, 2], [1, 2])
    with pytest.raises(ZeroVariance):
        stats.pearson([1, 1, 1], [1, 2, 3])
    with pytest.raises(LengthMismatch):
        stats.pearson([1, 2, 3], [1, 2])


def test_perfect_correlation_has_zero_p():
    r = stats.pearson([1, 2, 3, 4], [2, 4, 6, 8])
    assert r.rho == 1.0 and r.p_value == 0.0


def test_rmse_and_explained_variance():
    assert stats.rmse([1, 2], [1, 4]) == pytest.approx(math.sqrt(2))
    assert stats.explained_variance([1, 2, 3], [1, 2, 3]) == 1.0
    with pytest.raises(ZeroVariance):
        stats.explained_variance([1, 2], [3, 3])


def test_chi2_proportion_errors():
    with pytest.raises(InvalidCounts):
        stats.chi2_proportion(5, 3)
    with pytest.raises(InvalidCounts):
        stats.chi2_proportion(0, 0)


@given(st.integers(1, 500).flatmap(lambda n: st.tuples(st.integers(0, n), st.just(n))))
def test_chi2_proportion_matches_scipy(sn):
    s, n = sn
    ref = sps.chisquare([s, n - s], [n / 2, n / 2]).pvalue
    assert stats.chi2_proportion(s, n) == pytest.approx(ref, rel=1e-9, abs=1e-15)


def test_confusion_and_accuracy():
    P, N = Label.POSITIVE, Label.NEGATIVE
    c = stats.confusion([P, P, N, N], [P, N, P, N])
    assert (c.tp, c.fp, c.fn, c.tn) == (1, 1, 1, 1)
    assert c.as_matrix() == [[1, 1], [1, 1]]
    assert stats.accuracy([P, N], [P, P]) == 0.5
