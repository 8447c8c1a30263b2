"""Local surrogate explanations over superpixel masks.

Samples are binary on/off masks over segments; "off" segments take the
image's per-channel mean color. Each sample is weighted by
``exp(-d^2 / width^2)`` with ``d`` the cosine distance between its mask and
the all-on mask, and a weighted ridge regression (intercept unpenalized) of
the scorer's outputs on the masks gives one weight per segment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..errors import ScorerFailure, SizeMismatch, TooFewSamples
from ..seeding import rng_for
from .image import Image
from .slic import Segmentation

DEFAULT_SAMPLES = 5000
KERNEL_WIDTH = 0.25
RIDGE = 1.0
TOP_K = 10
FILL = "mean"


@dataclass(frozen=True, eq=False)
class Explanation:
    weights: np.ndarray
    intercept: float
    prediction: float
    top_k: tuple[int, ...]
    agreement: tuple[bool, ...]
    residual: float
    segmentation: Segmentation = field(repr=False)
    settings: dict = field(default_factory=dict)

    def agrees(self, segment: int) -> bool:
        """Weight sign matches the prediction sign (a prediction of 0 counts as positive)."""
        return bool((self.weights[segment] >= 0) == (self.prediction >= 0))

    def to_dict(self) -> dict:
        return {
            "prediction": self.prediction,
            "intercept": self.intercept,
            "residual": self.residual,
            "weights": self.weights.tolist(),
            "top_k": list(self.top_k),
            "top_k_agreement": list(self.agreement),
            "settings": dict(self.settings),
        }


class BatchScorer:
    """Adapter so plain ``f(image_array) -> float`` callables score batches."""

    def __init__(self, fn: Callable[[np.ndarray], float]):
        self.fn = fn

    def score_batch(self, images: Sequence[np.ndarray], offset: int = 0) -> np.ndarray:
        out = np.empty(len(images))
        for i, img in enumerate(images):
            try:
                out[i] = float(self.fn(img))
            except ScorerFailure:
                raise
            except Exception as exc:
                raise ScorerFailure(f"scorer raised {type(exc).__name__}: {exc}", offset + i) from exc
        return out


def _as_batch_scorer(scorer):
    return scorer if hasattr(scorer, "score_batch") else BatchScorer(scorer)


def sample_masks(seg: Segmentation, n_samples: int, seed: int) -> np.ndarray:
    """(n_samples, k) 0/1 masks; row 0 is all ones.

    Columns are drawn in canonical segment order (by first pixel), so
    renumbering segments permutes columns rather than changing the draw.
    """
    rng = rng_for(seed, "lime.masks")
    canon = rng.integers(0, 2, (n_samples, seg.k)).astype(np.float64)
    canon[0] = 1.0
    Z = np.empty_like(canon)
    Z[:, seg.canonical_order()] = canon
    return Z


def kernel_weights(Z: np.ndarray, width: float = KERNEL_WIDTH) -> np.ndarray:
    on = Z.sum(axis=1)
    norm = np.sqrt(on) * math.sqrt(Z.shape[1])
    cos = np.divide(on, norm, out=np.zeros_like(on), where=norm > 0)
    d = 1.0 - cos
    return np.exp(-(d ** 2) / width ** 2)


def weighted_ridge(Z: np.ndarray, y: np.ndarray, w: np.ndarray, alpha: float = RIDGE
                   ) -> tuple[np.ndarray, float, float]:
    """Coefficients, intercept and weighted RMS residual."""
    sw = w.sum()
    zbar = (w @ Z) / sw
    ybar = float(w @ y) / sw
    Zc = Z - zbar
    yc = y - ybar
    A = (Zc * w[:, None]).T @ Zc + alpha * np.eye(Z.shape[1])
    b = (Zc * w[:, None]).T @ yc
    coef = np.linalg.solve(A, b)
    intercept = ybar - float(zbar @ coef)
    resid = y - (Z @ coef + intercept)
    return coef, intercept, math.sqrt(float(w @ resid ** 2) / sw)


def perturb(pixels: np.ndarray, labels: np.ndarray, masks: np.ndarray, fill: np.ndarray) -> np.ndarray:
    """Batch of images (B, H, W, C) with off segments replaced by ``fill``."""
    on = masks[:, labels].astype(bool)  # (B, H, W)
    return np.where(on[..., None], pixels[None], fill)


def lime_explain(scorer, image: Image, seg: Segmentation, n_samples: int = DEFAULT_SAMPLES,
                 seed: int = 0, kernel_width: float = KERNEL_WIDTH, ridge: float = RIDGE,
                 top_k: int = TOP_K, batch_size: int = 500) -> Explanation:
    """Explain ``scorer``'s output on ``image`` segment by segment.

    ``scorer`` is either an object with ``score_batch(images, offset)`` or a
    callable on a single float image of shape (H, W, C).
    """
    if seg.size != image.size:
        raise SizeMismatch(f"segmentation {seg.size} does not match image {image.size}")
    if n_samples < seg.k:
        raise TooFewSamples(f"n_samples={n_samples} is below the segment count {seg.k}")
    scorer = _as_batch_scorer(scorer)
    pixels = image.as_float()
    fill = pixels.reshape(-1, pixels.shape[2]).mean(axis=0)
    Z = sample_masks(seg, n_samples, seed)
    y = np.empty(n_samples)
    for lo in range(0, n_samples, batch_size):
        hi = min(lo + batch_size, n_samples)
        batch = perturb(pixels, seg.labels, Z[lo:hi], fill)
        y[lo:hi] = scorer.score_batch(batch, offset=lo)
    bad = np.flatnonzero(~np.isfinite(y))
    if bad.size:
        raise ScorerFailure("scorer returned a non-finite score", int(bad[0]))

    w = kernel_weights(Z, kernel_width)
    coef, intercept, resid = weighted_ridge(Z, y, w, ridge)
    k = min(top_k, seg.k)
    order = sorted(range(seg.k), key=lambda j: (-abs(coef[j]), j))[:k]
    pred = float(y[0])
    agree = tuple(bool((coef[j] >= 0) == (pred >= 0)) for j in order)
    settings = {"n_samples": n_samples, "seed": seed, "kernel": "exp(-d^2/width^2)",
                "distance": "cosine", "kernel_width": kernel_width, "ridge": ridge,
                "fill": FILL, "segments": seg.k}
    return Explanation(coef, intercept, pred, tuple(order), agree, resid, seg, settings)
