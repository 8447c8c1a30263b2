"""Correlation, error metrics and proportion tests.

Tail probabilities come from the regularized incomplete beta and gamma
functions, evaluated with a power series or a modified-Lentz continued
fraction (whichever converges fast for the argument) to ~1e-14 relative.
All p-values are two-sided; the chi-square test has no continuity correction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidCounts, LengthMismatch, TooFewSamples, ZeroVariance

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 10_000


# -- special functions -------------------------------------------------------

def _beta_cf(a: float, b: float, x: float) -> float:
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = _TINY if abs(d) < _TINY else d
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = _TINY if abs(d) < _TINY else d
        c = 1.0 + aa / c
        c = _TINY if abs(c) < _TINY else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = _TINY if abs(d) < _TINY else d
        c = 1.0 + aa / c
        c = _TINY if abs(c) < _TINY else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    # The continued fraction converges quickly for x < (a+1)/(a+b+2);
    # otherwise use the symmetry I_x(a,b) = 1 - I_{1-x}(b,a).
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def _gamma_series(a: float, x: float) -> float:
    # lower regularized P(a, x)
    ap = a
    total = delta = 1.0 / a
    for _ in range(_MAX_ITER):
        ap += 1.0
        delta *= x / ap
        total += delta
        if abs(delta) < abs(total) * _EPS:
            return total * math.exp(-x + a * math.log(x) - math.lgamma(a))
    raise ArithmeticError("incomplete gamma series did not converge")


def _gamma_cf(a: float, x: float) -> float:
    # upper regularized Q(a, x)
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        d = _TINY if abs(d) < _TINY else d
        c = b + an / c
        c = _TINY if abs(c) < _TINY else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h
    raise ArithmeticError("incomplete gamma continued fraction did not converge")


def gammaincc_reg(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x)."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x <= 0.0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_series(a, x)
    return _gamma_cf(a, x)


def student_t_sf2(t: float, df: float) -> float:
    """Two-sided tail P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if math.isinf(t):
        return 0.0
    return betainc_reg(df / 2.0, 0.5, df / (df + t * t))


def chi2_sf(x: float, df: float) -> float:
    """Upper tail P(X >= x) of the chi-square distribution."""
    return gammaincc_reg(df / 2.0, x / 2.0)


# -- correlation and errors --------------------------------------------------

@dataclass(frozen=True)
class CorrelationResult:
    rho: float
    p_value: float
    n: int


def pearson(x: Sequence[float], y: Sequence[float]) -> CorrelationResult:
    """Product-moment correlation with the t-test of zero correlation (n-2 df)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch(f"length mismatch: {x.shape} vs {y.shape}")
    n = len(x)
    if n < 3:
        raise TooFewSamples("pearson needs at least 3 pairs")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx <= 0.0 or syy <= 0.0:
        raise ZeroVariance("pearson: an input has zero variance")
    rho = float(dx @ dy) / math.sqrt(sxx * syy)
    rho = max(-1.0, min(1.0, rho))
    if abs(rho) == 1.0:
        return CorrelationResult(rho, 0.0, n)
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    return CorrelationResult(rho, student_t_sf2(t, n - 2), n)


def _paired(pred, actual) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if pred.shape != actual.shape or pred.ndim != 1:
        raise LengthMismatch(f"length mismatch: {pred.shape} vs {actual.shape}")
    if len(pred) < 1:
        raise LengthMismatch("inputs are empty")
    return pred, actual


def rmse(pred, actual) -> float:
    pred, actual = _paired(pred, actual)
    return math.sqrt(float(np.mean((actual - pred) ** 2)))


def explained_variance(pred, actual) -> float:
    """1 - Var(actual - pred) / Var(actual)."""
    pred, actual = _paired(pred, actual)
    var = float(np.var(actual))
    if var == 0.0:
        raise ZeroVariance("explained variance undefined for constant targets")
    return 1.0 - float(np.var(actual - pred)) / var


# -- proportions and classification ------------------------------------------

def chi2_proportion(successes: int, n: int, p0: float = 0.5) -> float:
    """p-value of the one-sample chi-square test of proportion (1 df)."""
    if n < 1 or not 0 <= successes <= n:
        raise InvalidCounts(f"need 0 <= successes <= n and n >= 1 (got {successes}/{n})")
    if not 0.0 < p0 < 1.0:
        raise InvalidCounts("p0 must lie strictly between 0 and 1")
    return chi2_sf(chi2_proportion_stat(successes, n, p0), 1.0)


def chi2_proportion_stat(successes: int, n: int, p0: float = 0.5) -> float:
    exp_s = n * p0
    exp_f = n * (1.0 - p0)
    return (successes - exp_s) ** 2 / exp_s + ((n - successes) - exp_f) ** 2 / exp_f


def accuracy(pred_labels: Sequence, true_labels: Sequence) -> float:
    if len(pred_labels) != len(true_labels):
        raise LengthMismatch(f"{len(pred_labels)} predictions vs {len(true_labels)} labels")
    if len(pred_labels) == 0:
        raise LengthMismatch("inputs are empty")
    hits = sum(1 for p, t in zip(pred_labels, true_labels) if p == t)
    return hits / len(pred_labels)


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    fn: int
    tn: int

    def as_matrix(self) -> list[list[int]]:
        """Rows are actual (positive, negative); columns predicted."""
        return [[self.tp, self.fn], [self.fp, self.tn]]


def confusion(pred: Sequence, true: Sequence, positive=None) -> Confusion:
    """2x2 counts. ``positive`` defaults to ``Label.POSITIVE``."""
    from .traits import Label

    if len(pred) != len(true):
        raise LengthMismatch(f"{len(pred)} predictions vs {len(true)} labels")
    if len(pred) == 0:
        raise LengthMismatch("inputs are empty")
    pos = Label.POSITIVE if positive is None else positive
    tp = fp = fn = tn = 0
    for p, t in zip(pred, true):
        if p == pos and t == pos:
            tp += 1
        elif p == pos:
            fp += 1
        elif t == pos:
            fn += 1
        else:
            tn += 1
    return Confusion(tp, fp, fn, tn)
