"""Synthetic ground-truth world.

Perceived trait ``T`` of a face with shape ``s`` is

    z_T(s) = ((1 - eta) * w_T . s + eta * g_T(s)) / sqrt((1 - eta)^2 + eta^2)
    g_T(s) = ((v1 . s)(v2 . s) + (v3 . s)^2 - 1) / sqrt(3)

where ``w_T, v1, v2, v3`` are orthonormal. Both parts have unit variance and
are uncorrelated for standard-normal shapes, so ``z_T`` is a z-score and
``eta`` sets how much of it no linear direction can capture. The embedder's
null directions are the ``v`` vectors of every trait, so ``leakage`` controls
how much of the nonlinear signal reaches the features.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..embeddings import Embedding, SyntheticEmbedderSpec, embed_all
from ..errors import ConfigError
from ..ratings import (
    RatingRecord,
    TraitScore,
    calibrate_noise_sd,
    cronbach_alpha,
    rating_matrix,
    scores_by_trait,
    simulate_raters,
)
from ..seeding import derive_seed, rng_for
from ..shape import (
    FIVE_LEVEL_DELTAS,
    ManipulatedFace,
    ShapeVector,
    TraitVector,
    fit_trait_vector,
    generate_distinct_set,
    random_shape,
    shape_matrix,
    whiten,
)
from ..traits import ALL_TRAITS, TraitDimension

NONLINEAR_DIMS = 3


class Origin(str, Enum):
    RANDOM = "Random"
    DISTINCT = "Distinct"
    POLITICIAN = "Politician"


@dataclass(frozen=True, eq=False)
class LabeledFace:
    face_id: str
    origin: Origin
    scores: dict
    embedding: np.ndarray
    base_id: str | None = None
    trait: TraitDimension | None = None
    delta: float | None = None


@dataclass(frozen=True)
class WorldConfig:
    seed: int = 0
    D: int = 50
    n_random: int = 300
    n_bases: int = 75
    deltas: tuple[float, ...] = FIVE_LEVEL_DELTAS
    traits: tuple[TraitDimension, ...] = ALL_TRAITS
    eta: float = 0.8
    leakage: float = 0.6
    n_raters_random: int = 75
    n_raters_calibration: int = 15
    noise_sd: float | None = None
    target_alpha: float = 0.84
    embed_dim: int = 128

    def __post_init__(self):
        need = len(ALL_TRAITS) * (1 + NONLINEAR_DIMS)
        if self.D < need:
            raise ConfigError(f"synthetic world needs shape dimension >= {need}, got {self.D}")
        if not 0.0 <= self.eta <= 1.0:
            raise ConfigError("eta must lie in [0, 1]")
        if not 0.0 <= self.leakage <= 1.0:
            raise ConfigError("leakage must lie in [0, 1]")
        if self.n_random <= self.D:
            raise ConfigError("need more random faces than shape dimensions")
        if self.n_raters_calibration > self.n_raters_random:
            raise ConfigError("n_raters_calibration cannot exceed n_raters_random")


@dataclass(frozen=True)
class TraitGeometry:
    linear: np.ndarray
    nonlinear: np.ndarray  # NONLINEAR_DIMS x D


def trait_geometry(seed: int, D: int) -> dict[TraitDimension, TraitGeometry]:
    Q, _ = np.linalg.qr(rng_for(seed, "world.geometry").standard_normal((D, D)))
    out = {}
    for i, t in enumerate(ALL_TRAITS):
        lo = len(ALL_TRAITS) + NONLINEAR_DIMS * i
        out[t] = TraitGeometry(Q[:, i].copy(), Q[:, lo:lo + NONLINEAR_DIMS].T.copy())
    return out


def perceived(S: np.ndarray, geom: TraitGeometry, eta: float) -> np.ndarray:
    """True perceived z-scores for the rows of ``S`` (N x D)."""
    lin = S @ geom.linear
    p = S @ geom.nonlinear.T
    g = (p[:, 0] * p[:, 1] + p[:, 2] ** 2 - 1.0) / math.sqrt(3.0)
    return ((1.0 - eta) * lin + eta * g) / math.hypot(1.0 - eta, eta)


@dataclass
class World:
    config: WorldConfig
    geometry: dict[TraitDimension, TraitGeometry]
    random_shapes: list[ShapeVector]
    true_scores: dict[TraitDimension, list[TraitScore]]
    ratings: list[RatingRecord]
    scores: dict[TraitDimension, list[TraitScore]]
    noise_sd: float
    alpha: dict[TraitDimension, float]
    alpha_all_raters: dict[TraitDimension, float]
    trait_vectors: dict[TraitDimension, TraitVector]
    bases: list[ShapeVector]
    distinct: list[ManipulatedFace]
    embedder: SyntheticEmbedderSpec
    embeddings: dict[str, Embedding] = field(repr=False)

    def random_faces(self) -> list[LabeledFace]:
        by_face: dict[str, dict] = {s.face_id: {} for s in self.random_shapes}
        for t, scores in self.scores.items():
            for s in scores:
                by_face[s.face_id][t] = s.score
        return [LabeledFace(s.face_id, Origin.RANDOM, by_face[s.face_id],
                            self.embeddings[s.face_id].vector) for s in self.random_shapes]

    def distinct_faces(self) -> list[LabeledFace]:
        return [LabeledFace(m.face_id, Origin.DISTINCT, {m.trait: 100.0 * m.delta},
                            self.embeddings[m.face_id].vector, m.base_id, m.trait, m.delta)
                for m in self.distinct]

    def embedder_for(self, leakage: float | None = None) -> SyntheticEmbedderSpec:
        if leakage is None:
            return self.embedder
        return SyntheticEmbedderSpec(self.embedder.seed, leakage, self.embedder.D,
                                     self.embedder.null_directions, self.embedder.dim)


def build_world(cfg: WorldConfig) -> World:
    geom = trait_geometry(cfg.seed, cfg.D)
    shapes = whiten(random_shape(derive_seed(cfg.seed, "shapes.random"), cfg.n_random, cfg.D, "rand"))
    S = shape_matrix(shapes).T

    Z = {t: perceived(S, geom[t], cfg.eta) for t in cfg.traits}
    noise_sd = cfg.noise_sd
    if noise_sd is None:
        # calibrated on this world's own scores, so clamping at the scale ends is accounted for
        noise_sd = calibrate_noise_sd(cfg.target_alpha, cfg.n_raters_calibration,
                                      rng_seed=derive_seed(cfg.seed, "ratings.calibration"),
                                      true_z=np.vstack(list(Z.values())))

    true_scores: dict[TraitDimension, list[TraitScore]] = {}
    records: list[RatingRecord] = []
    alpha, alpha_all = {}, {}
    for t in cfg.traits:
        true_scores[t] = [TraitScore(s.face_id, t, float(100.0 * v)) for s, v in zip(shapes, Z[t])]
        recs = simulate_raters(true_scores[t], noise_sd, cfg.n_raters_random,
                               derive_seed(cfg.seed, "ratings", ALL_TRAITS.index(t)))
        records.extend(recs)
        M = rating_matrix(recs, t)
        alpha[t] = cronbach_alpha(M[:cfg.n_raters_calibration])
        alpha_all[t] = cronbach_alpha(M)

    scores = scores_by_trait(records, cfg.traits)
    F = shape_matrix(shapes)
    order = {s.face_id: i for i, s in enumerate(shapes)}
    tvs = {}
    for t in cfg.traits:
        r = np.zeros(len(shapes))
        for s in scores[t]:
            r[order[s.face_id]] = s.score / 100.0
        tvs[t] = fit_trait_vector(F, r, t)

    bases = random_shape(derive_seed(cfg.seed, "shapes.bases"), cfg.n_bases, cfg.D, "base")
    distinct = generate_distinct_set(bases, [tvs[t] for t in cfg.traits], cfg.deltas, neutral_bases=True)

    null_dirs = tuple(tuple(v) for t in ALL_TRAITS for v in geom[t].nonlinear)
    spec = SyntheticEmbedderSpec(derive_seed(cfg.seed, "embedder"), cfg.leakage, cfg.D,
                                 null_dirs, cfg.embed_dim)
    embs = embed_all(shapes + [m.shape for m in distinct], spec)
    return World(cfg, geom, shapes, true_scores, records, scores, noise_sd, alpha, alpha_all,
                 tvs, bases, distinct, spec, {e.face_id: e for e in embs})
