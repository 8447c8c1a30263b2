"""Subjective trait judgments.

Raw judgments live on a 1-9 scale. Scores are z-scored per trait within a
dataset using the population SD and multiplied by 100, so a score of 150
means 1.5 SD above the dataset mean.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .csvio import read_rows, to_float, write_rows
from .errors import MissingRatings, ParseError, ZeroVariance
from .traits import Label, TraitDimension

RATING_MIN, RATING_MAX, RATING_MID = 1, 9, 5
SCALE_PER_SD = 2.0

# Found by the sweep in ``calibrate_noise_sd``: 15 raters then give
# Cronbach's alpha close to 0.84 on unit-variance true scores.
DEFAULT_NOISE_SD = 1.6


@dataclass(frozen=True)
class RatingRecord:
    face_id: str
    trait: TraitDimension
    rater_id: str
    rating: int

    def __post_init__(self):
        if not RATING_MIN <= self.rating <= RATING_MAX:
            raise ParseError(f"rating {self.rating} for {self.face_id} outside 1-9")


@dataclass(frozen=True)
class TraitScore:
    face_id: str
    trait: TraitDimension
    score: float


def mean_ratings(records: Iterable[RatingRecord], faces: Sequence[str] | None = None,
                 traits: Sequence[TraitDimension] | None = None) -> dict[str, dict[TraitDimension, float]]:
    """Mean raw rating per face and trait.

    When ``faces``/``traits`` are given, every requested pair must have at least
    one rating or :class:`MissingRatings` is raised.
    """
    sums: dict[str, dict[TraitDimension, list[int]]] = defaultdict(lambda: defaultdict(list))
    for r in records:
        sums[r.face_id][r.trait].append(r.rating)
    if faces is not None or traits is not None:
        want_faces = list(faces) if faces is not None else list(sums)
        for f in want_faces:
            want_traits = traits if traits is not None else list(sums.get(f, {}))
            if f not in sums or not want_traits:
                raise MissingRatings(f"face {f!r} has no ratings")
            for t in want_traits:
                if not sums[f].get(t):
                    raise MissingRatings(f"face {f!r} has no {t.value} ratings")
    return {f: {t: sum(v) / len(v) for t, v in by_trait.items()} for f, by_trait in sums.items()}


def zscore_scale(means: Mapping[str, float], trait: TraitDimension) -> list[TraitScore]:
    """100 * (mean - mu) / sigma over the faces given, population sigma."""
    if len(means) < 2:
        raise ZeroVariance("z-scoring needs at least two faces")
    ids = list(means)
    vals = np.array([means[i] for i in ids], dtype=np.float64)
    mu = vals.mean()
    sigma = math.sqrt(float(np.mean((vals - mu) ** 2)))
    if sigma == 0.0 or sigma < 1e-12 * max(1.0, abs(mu)):
        raise ZeroVariance(f"all {trait.value} means are equal")
    return [TraitScore(i, trait, float(100.0 * (v - mu) / sigma)) for i, v in zip(ids, vals)]


def scores_by_trait(records: Iterable[RatingRecord], traits: Sequence[TraitDimension]) -> dict[TraitDimension, list[TraitScore]]:
    records = list(records)
    means = mean_ratings(records)
    out = {}
    for t in traits:
        per_face = {f: m[t] for f, m in means.items() if t in m}
        out[t] = zscore_scale(per_face, t)
    return out


def cronbach_alpha(matrix) -> float:
    """Cronbach's alpha with raters as items (rows) and faces as cases.

    alpha = k/(k-1) * (1 - sum_i var_i / var_total), population variances.
    """
    M = np.asarray(matrix, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] < 2 or M.shape[1] < 2:
        raise ZeroVariance("cronbach_alpha needs at least 2 raters and 2 faces")
    k = M.shape[0]
    item_var = M.var(axis=1).sum()
    total_var = M.sum(axis=0).var()
    if total_var == 0.0:
        raise ZeroVariance("total score variance is zero")
    return float(k / (k - 1) * (1.0 - item_var / total_var))


def rating_matrix(records: Iterable[RatingRecord], trait: TraitDimension) -> np.ndarray:
    """Raters x faces matrix for one trait; every rater must rate every face."""
    cells: dict[tuple[str, str], int] = {}
    for r in records:
        if r.trait == trait:
            cells[(r.rater_id, r.face_id)] = r.rating
    raters = sorted({k[0] for k in cells})
    faces = sorted({k[1] for k in cells})
    M = np.empty((len(raters), len(faces)))
    for i, rid in enumerate(raters):
        for j, fid in enumerate(faces):
            try:
                M[i, j] = cells[(rid, fid)]
            except KeyError:
                raise MissingRatings(f"rater {rid} did not rate {fid}") from None
    return M


def _simulated_ratings(z: np.ndarray, noise_sd: float, n_raters: int, rng: np.random.Generator) -> np.ndarray:
    eps = rng.standard_normal((len(z), n_raters)) * noise_sd
    raw = RATING_MID + SCALE_PER_SD * (z[:, None] + eps)
    return np.clip(np.floor(raw + 0.5), RATING_MIN, RATING_MAX).astype(np.int64)


def simulate_raters(true_scores: Sequence[TraitScore], noise_sd: float, n_raters: int,
                    rng_seed: int) -> list[RatingRecord]:
    """Each rater reports clamp(round(5 + 2 * (z + eps)), 1, 9) with
    z = score / 100 and eps ~ N(0, noise_sd). Rounding is half-up."""
    if noise_sd < 0 or n_raters < 1:
        raise ValueError("noise_sd must be >= 0 and n_raters >= 1")
    z = np.array([s.score / 100.0 for s in true_scores])
    R = _simulated_ratings(z, noise_sd, n_raters, np.random.default_rng(rng_seed))
    width = max(3, len(str(n_raters - 1)))
    return [
        RatingRecord(s.face_id, s.trait, f"r{j:0{width}d}", int(R[i, j]))
        for i, s in enumerate(true_scores)
        for j in range(n_raters)
    ]


def simulated_alpha(noise_sd: float, n_raters: int = 15, n_faces: int = 300, rng_seed: int = 0,
                    true_z=None) -> float:
    """Cronbach's alpha of simulated raters, averaged over the rows of
    ``true_z`` (one row of z-scores per trait). Without ``true_z``, one row of
    ``n_faces`` standard-normal scores is drawn."""
    if true_z is None:
        true_z = np.random.default_rng([rng_seed, 1]).standard_normal(n_faces)
    Z = np.atleast_2d(np.asarray(true_z, dtype=np.float64))
    alphas = []
    for i, z in enumerate(Z):
        R = _simulated_ratings(z, noise_sd, n_raters, np.random.default_rng([rng_seed, 2, i]))
        alphas.append(cronbach_alpha(R.T))
    return float(np.mean(alphas))


def calibrate_noise_sd(target_alpha: float = 0.84, n_raters: int = 15, n_faces: int = 300,
                       rng_seed: int = 0, tol: float = 1e-4, true_z=None) -> float:
    """Bisect the rater noise SD so simulated raters reach ``target_alpha``.

    Common random numbers (fixed seed) make alpha a monotone step function of
    the noise level, so bisection is well defined.
    """
    def alpha(sd):
        return simulated_alpha(sd, n_raters, n_faces, rng_seed, true_z)

    lo, hi = 0.0, 10.0
    if alpha(hi) > target_alpha:
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if alpha(mid) > target_alpha:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def binarize(scores: Iterable[TraitScore]) -> dict[str, Label]:
    """Score >= 0 is POSITIVE (ties included), otherwise NEGATIVE."""
    return {s.face_id: Label.POSITIVE if s.score >= 0 else Label.NEGATIVE for s in scores}


def label_of(score: float) -> Label:
    return Label.POSITIVE if score >= 0 else Label.NEGATIVE


# -- files -------------------------------------------------------------------

def save_ratings(path: str | Path, records: Sequence[RatingRecord], meta: dict | None = None) -> None:
    write_rows(path, ["face_id", "trait", "rater_id", "rating"],
               ((r.face_id, r.trait.value, r.rater_id, r.rating) for r in records), meta)


def load_ratings(path: str | Path) -> list[RatingRecord]:
    header, rows, _ = read_rows(path)
    if header != ["face_id", "trait", "rater_id", "rating"]:
        raise ParseError(f"{path}: expected header face_id,trait,rater_id,rating")
    out = []
    for lineno, f in rows:
        if len(f) != 4:
            raise ParseError(f"{path}: expected 4 fields", row=lineno)
        try:
            rating = int(f[3])
        except ValueError:
            raise ParseError(f"{path}: rating {f[3]!r} is not an integer", row=lineno) from None
        try:
            out.append(RatingRecord(f[0], TraitDimension.parse(f[1]), f[2], rating))
        except ParseError as exc:
            raise ParseError(f"{path}: {exc}", row=lineno) from None
    return out


def save_scores(path: str | Path, scores: Sequence[TraitScore], meta: dict | None = None) -> None:
    write_rows(path, ["face_id", "trait", "score"],
               ((s.face_id, s.trait.value, float(s.score)) for s in scores), meta)


def load_scores(path: str | Path) -> list[TraitScore]:
    header, rows, _ = read_rows(path)
    if header != ["face_id", "trait", "score"]:
        raise ParseError(f"{path}: expected header face_id,trait,score")
    out = []
    for lineno, f in rows:
        if len(f) != 3:
            raise ParseError(f"{path}: expected 3 fields", row=lineno)
        score = to_float(f[2], path, lineno)
        if not math.isfinite(score):
            raise ParseError(f"{path}: non-finite score", row=lineno)
        out.append(TraitScore(f[0], TraitDimension.parse(f[1]), score))
    return out
