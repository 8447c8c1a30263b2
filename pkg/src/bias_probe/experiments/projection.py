"""Unsupervised view of the embeddings: do faces cluster by identity or by trait?

Coordinates are the top two principal components. Silhouette scores are
computed in the full embedding space (the 2-D values are reported alongside)
for two groupings of the same faces: by base identity and by trait-score sign.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.metrics import silhouette_score

from ..errors import DegenerateCovariance, LengthMismatch, TooFewSamples


def pca_2d(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Top-2 PC coordinates and explained-variance ratios.

    Component signs are fixed so the largest-magnitude loading is positive.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or len(X) < 3:
        raise TooFewSamples("projection needs at least 3 faces")
    Xc = X - X.mean(axis=0)
    total = float((Xc ** 2).sum())
    if total <= 1e-12 * max(1.0, float((X ** 2).sum())):
        raise DegenerateCovariance("embeddings have zero variance")
    _, s, Vt = np.linalg.svd(Xc, full_matrices=False)
    Vt = Vt[:2]
    signs = np.sign(Vt[np.arange(len(Vt)), np.argmax(np.abs(Vt), axis=1)])
    Vt = Vt * signs[:, None]
    coords = Xc @ Vt.T
    if coords.shape[1] < 2:
        coords = np.hstack([coords, np.zeros((len(coords), 1))])
    ratio = np.zeros(2)
    ratio[:len(s[:2])] = s[:2] ** 2 / total
    return coords, ratio


def _silhouette(X: np.ndarray, groups: Sequence) -> float | None:
    codes = np.unique(np.asarray([str(g) for g in groups]), return_inverse=True)[1]
    k = codes.max() + 1
    if k < 2 or k > len(X) - 1:
        return None
    return float(silhouette_score(X, codes))


def projection_diagnostic(X, identities: Sequence, scores: Sequence[float]) -> dict:
    """PCA coordinates plus identity and trait-sign silhouettes.

    ``identities[i]`` names the base face of row ``i``; ``scores[i]`` is its
    trait score, grouped by sign (>= 0 is one group).
    """
    X = np.asarray(X, dtype=np.float64)
    if not len(X) == len(identities) == len(scores):
        raise LengthMismatch("X, identities and scores must have equal length")
    coords, ratio = pca_2d(X)
    sign = ["pos" if s >= 0 else "neg" for s in scores]
    return {
        "n": int(len(X)),
        "coords": coords.tolist(),
        "explained_variance_ratio": ratio.tolist(),
        "silhouette_identity": _silhouette(X, identities),
        "silhouette_trait_sign": _silhouette(X, sign),
        "silhouette_identity_2d": _silhouette(coords, identities),
        "silhouette_trait_sign_2d": _silhouette(coords, sign),
    }
