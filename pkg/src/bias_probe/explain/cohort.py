"""Synthetic face-like images with a planted signal region.

Each image is a bright textured ellipse on a dark background with two dark
eye blobs. A rectangular region (the "mouth" by default) is filled with a
per-face intensity ``level``; a model that predicts ``level`` should, when
explained, point at that region.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from skimage.transform import resize

from ..seeding import rng_for
from .image import Image


@dataclass(frozen=True)
class Region:
    y0: int
    x0: int
    height: int
    width: int

    def mask(self, size: tuple[int, int]) -> np.ndarray:
        m = np.zeros(size, dtype=bool)
        m[self.y0:self.y0 + self.height, self.x0:self.x0 + self.width] = True
        return m


def default_region(size: int) -> Region:
    """A mouth-like box covering about 5% of a ``size`` x ``size`` image."""
    h = max(1, round(size * 0.16))
    w = max(1, round(size * 0.32))
    return Region(round(size * 0.66), (size - w) // 2, h, w)


def synthetic_face(seed: int, index: int, size: int = 64, level: float = 200.0,
                   region: Region | None = None) -> Image:
    rng = rng_for(seed, "cohort.face", index)
    region = region or default_region(size)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    c = (size - 1) / 2
    face = ((yy - c) / (0.46 * size)) ** 2 + ((xx - c) / (0.36 * size)) ** 2 <= 1.0
    coarse = rng.normal(0.0, 12.0, (6, 6))
    texture = resize(coarse, (size, size), order=3, mode="reflect", anti_aliasing=False)
    img = np.full((size, size), 20.0)
    img[face] = rng.uniform(110.0, 140.0) + texture[face]
    for ex in (0.33, 0.67):
        eye = ((yy - 0.38 * size) / (0.06 * size)) ** 2 + ((xx - ex * size) / (0.09 * size)) ** 2 <= 1.0
        img[eye] = 50.0
    img[region.mask((size, size))] = level
    img += rng.normal(0.0, 3.0, img.shape)
    return Image(np.clip(img, 0, 255))


def cohort(seed: int, n: int, size: int = 64, level_range: tuple[float, float] = (150.0, 250.0),
           region: Region | None = None) -> tuple[list[Image], np.ndarray]:
    """``n`` faces and their planted levels, drawn uniformly from ``level_range``."""
    levels = rng_for(seed, "cohort.levels").uniform(*level_range, n)
    return [synthetic_face(seed, i, size, lv, region) for i, lv in enumerate(levels)], levels
