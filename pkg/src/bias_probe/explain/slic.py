"""Simple Linear Iterative Clustering superpixels.

Centers start on a regular grid, pixels are assigned within a window around
each center by combined color and position distance
``d^2 = d_color^2 + (d_xy / S)^2 * m^2`` with grid interval ``S`` and
compactness ``m``, centers move to their members' mean, and a final pass
makes every segment 4-connected. Gray intensity is rescaled to 0..100 so
``m`` has the same meaning as for CIELAB color.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from skimage.color import rgb2lab

from .._backend import select
from ..errors import TooManySegments
from .image import Image

_kernel, BACKEND = select("bias_probe.explain._slic_kernel", "bias_probe.explain._slic_fallback")


@dataclass(frozen=True, eq=False)
class Segmentation:
    labels: np.ndarray  # (H, W) int64 in [0, k)
    k: int

    def __post_init__(self):
        lab = np.ascontiguousarray(self.labels, dtype=np.int64)
        lab.setflags(write=False)
        object.__setattr__(self, "labels", lab)

    @property
    def size(self) -> tuple[int, int]:
        return self.labels.shape

    def counts(self) -> np.ndarray:
        return np.bincount(self.labels.ravel(), minlength=self.k)

    def canonical_order(self) -> np.ndarray:
        """Segment ids sorted by the flat index of their first pixel."""
        flat = self.labels.ravel()
        first = np.full(self.k, flat.size, dtype=np.int64)
        np.minimum.at(first, flat, np.arange(flat.size))
        return np.argsort(first, kind="stable")


def color_features(image: Image) -> np.ndarray:
    """(H*W, C) float features: CIELAB for RGB, intensity*100/255 for gray."""
    if image.channels == 3:
        f = rgb2lab(image.pixels)
    else:
        f = image.pixels.astype(np.float64)[:, :, None] * (100.0 / 255.0)
    return np.ascontiguousarray(f.reshape(-1, f.shape[2]), dtype=np.float64)


def grid_shape(height: int, width: int, k: int) -> tuple[int, int]:
    """Rows and columns of the initial center grid, about ``k`` cells with
    roughly square spacing."""
    nx = max(1, min(width, int(round(math.sqrt(k * width / height)))))
    ny = max(1, min(height, int(round(k / nx))))
    return ny, nx


def slic(image: Image, k: int = 300, compactness: float = 10.0, iters: int = 10) -> Segmentation:
    H, W = image.size
    N = H * W
    if k < 1 or k > N:
        raise TooManySegments(f"requested {k} segments for {N} pixels")
    feats = color_features(image)
    C = feats.shape[1]
    ny, nx = grid_shape(H, W, k)
    sy, sx = H / ny, W / nx
    gy = (np.arange(ny) + 0.5) * sy - 0.5
    gx = (np.arange(nx) + 0.5) * sx - 0.5
    cy, cx = np.meshgrid(gy, gx, indexing="ij")
    K = ny * nx
    S = math.sqrt(N / K)

    # initial labels: the grid cell each pixel falls in
    rows = np.minimum((np.arange(H) / sy).astype(np.int64), ny - 1)
    cols = np.minimum((np.arange(W) / sx).astype(np.int64), nx - 1)
    labels = np.ascontiguousarray((rows[:, None] * nx + cols[None, :]).ravel())
    centers = np.empty((K, C + 2))
    counts = np.bincount(labels, minlength=K).astype(np.float64)
    for c in range(C):
        centers[:, c] = np.bincount(labels, weights=feats[:, c], minlength=K) / counts
    centers[:, C] = cy.ravel()
    centers[:, C + 1] = cx.ravel()

    ys = np.repeat(np.arange(H, dtype=np.float64), W)
    xs = np.tile(np.arange(W, dtype=np.float64), H)
    dist = np.empty(N)
    spatial_w = (compactness / S) ** 2
    for _ in range(iters):
        _kernel.assign(feats, H, W, np.ascontiguousarray(centers), sy, sx, spatial_w, labels, dist)
        counts = np.bincount(labels, minlength=K).astype(np.float64)
        live = counts > 0
        for c, col in enumerate(list(feats.T) + [ys, xs]):
            sums = np.bincount(labels, weights=col, minlength=K)
            centers[live, c] = sums[live] / counts[live]

    min_size = int(N / K / 4)
    out, count = _kernel.enforce_connectivity(labels, H, W, min_size)
    return Segmentation(out.reshape(H, W), count)


def is_connected(seg: Segmentation) -> bool:
    """True when every segment is a single 4-connected component."""
    H, W = seg.size
    _, count = _kernel.enforce_connectivity(
        np.ascontiguousarray(seg.labels.ravel()), H, W, 0)
    return count == seg.k and len(np.unique(seg.labels)) == seg.k
