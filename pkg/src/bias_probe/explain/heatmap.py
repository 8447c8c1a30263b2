"""Rasterized explanations, cohort heatmaps and overlay rendering."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..csvio import write_rows
from ..errors import EmptyData, SizeMismatch
from .image import Image, save_png
from .lime import Explanation

AGREE = np.array([0.0, 200.0, 0.0])
DISAGREE = np.array([220.0, 0.0, 0.0])


@dataclass(frozen=True, eq=False)
class Heatmap:
    values: np.ndarray       # (H, W) mean segment weight per pixel
    mean_image: np.ndarray   # (H, W[, 3]) float pixel-wise mean face
    n: int


def rasterize(exp: Explanation) -> np.ndarray:
    return exp.weights[exp.segmentation.labels]


def aggregate_heatmap(explanations: Sequence[Explanation], images: Sequence[Image] | None = None,
                      reference_size: tuple[int, int] | None = None) -> Heatmap:
    """Average per-pixel weights (and images, when given) over a cohort.

    All segmentations and images must already be co-registered to
    ``reference_size`` (default: the first explanation's size).
    """
    if not explanations:
        raise EmptyData("need at least one explanation")
    size = tuple(reference_size or explanations[0].segmentation.size)
    total = np.zeros(size)
    for i, e in enumerate(explanations):
        if e.segmentation.size != size:
            raise SizeMismatch(f"explanation {i} has size {e.segmentation.size}, expected {size}")
        total += rasterize(e)
    mean_img = np.zeros(size)
    if images:
        if len(images) != len(explanations):
            raise SizeMismatch(f"{len(images)} images for {len(explanations)} explanations")
        shapes = {im.pixels.shape for im in images}
        if len(shapes) != 1 or next(iter(shapes))[:2] != size:
            raise SizeMismatch(f"images must all be {size}")
        mean_img = np.zeros(images[0].pixels.shape)
        for im in images:
            mean_img += im.pixels
        mean_img /= len(images)
    return Heatmap(total / len(explanations), mean_img, len(explanations))


def hottest(values: np.ndarray, fraction: float = 0.05) -> np.ndarray:
    """Boolean mask of the ``fraction`` of pixels with largest |value|
    (ties broken by raster order)."""
    flat = np.abs(values).ravel()
    n = max(1, int(round(fraction * flat.size)))
    idx = np.argsort(-flat, kind="stable")[:n]
    mask = np.zeros(flat.size, dtype=bool)
    mask[idx] = True
    return mask.reshape(values.shape)


def iou(a: np.ndarray, b: np.ndarray) -> float:
    union = np.logical_or(a, b).sum()
    return float(np.logical_and(a, b).sum() / union) if union else 0.0


def heatmap_image(values: np.ndarray) -> Image:
    """Diverging render: green for positive weight, red for negative, black at 0."""
    scale = np.abs(values).max()
    v = values / scale if scale > 0 else np.zeros_like(values)
    rgb = np.zeros(values.shape + (3,))
    rgb[..., 1] = np.clip(v, 0, 1) * 255
    rgb[..., 0] = np.clip(-v, 0, 1) * 255
    return Image(rgb)


def save_heatmap(prefix: str | Path, heat: Heatmap, meta: dict | None = None) -> list[Path]:
    """Write ``<prefix>.png``, ``<prefix>.csv`` and ``<prefix>_mean.png``."""
    prefix = Path(prefix)
    paths = [prefix.with_suffix(".png"), prefix.with_suffix(".csv"),
             prefix.with_name(prefix.name + "_mean.png")]
    save_png(paths[0], heatmap_image(heat.values), meta)
    H, W = heat.values.shape
    write_rows(paths[1], ["y", "x", "value"],
               ((y, x, float(heat.values[y, x])) for y in range(H) for x in range(W)), meta)
    save_png(paths[2], Image(np.clip(heat.mean_image, 0, 255)), meta)
    return paths


def render_explanation(image: Image, exp: Explanation, alpha: float = 0.5) -> Image:
    """Shade the top segments green where they agree with the prediction's
    sign and red where they disagree."""
    base = image.as_float()
    if base.shape[2] == 1:
        base = np.repeat(base, 3, axis=2)
    out = base.copy()
    labels = exp.segmentation.labels
    for seg, ok in zip(exp.top_k, exp.agreement):
        m = labels == seg
        out[m] = (1 - alpha) * base[m] + alpha * (AGREE if ok else DISAGREE)
    return Image(np.clip(out, 0, 255))
