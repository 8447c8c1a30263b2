"""8-bit gray or RGB images.

Pixels are stored row-major as an ``(height, width)`` or
``(height, width, 3)`` array; pixel ``(x, y)`` is ``pixels[y, x]`` and its
flat index is ``y * width + x``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage
from PIL.PngImagePlugin import PngInfo

from ..errors import DimensionError, ParseError


@dataclass(frozen=True, eq=False)
class Image:
    pixels: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pixels)
        if p.ndim == 3 and p.shape[2] == 1:
            p = p[:, :, 0]
        if p.ndim not in (2, 3) or (p.ndim == 3 and p.shape[2] != 3) or p.size == 0:
            raise DimensionError(f"image must be HxW or HxWx3 with at least one pixel, got {p.shape}")
        if p.dtype != np.uint8:
            if not np.isfinite(p).all() or p.min() < 0 or p.max() > 255:
                raise ParseError("pixel values must lie in [0, 255]")
            p = np.floor(np.asarray(p, dtype=np.float64) + 0.5).astype(np.uint8)
        p = np.ascontiguousarray(p)
        p.setflags(write=False)
        object.__setattr__(self, "pixels", p)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.pixels.ndim == 2 else 3

    @property
    def size(self) -> tuple[int, int]:
        return self.height, self.width

    def as_float(self) -> np.ndarray:
        """Pixels as float64 with an explicit channel axis (H, W, C)."""
        p = self.pixels.astype(np.float64)
        return p[:, :, None] if p.ndim == 2 else p


def load_png(path: str | Path) -> Image:
    try:
        with PILImage.open(path) as im:
            if im.mode in ("L", "I;16", "I", "1", "P", "LA"):
                im = im.convert("L") if im.mode != "P" else im.convert("RGB")
            elif im.mode != "RGB":
                im = im.convert("RGB")
            return Image(np.array(im))
    except OSError as exc:
        raise ParseError(f"{path}: cannot read image ({exc})") from None


def save_png(path: str | Path, image: Image, meta: dict | None = None) -> None:
    """Write an 8-bit PNG; ``meta`` goes into ``bias-probe`` text chunks."""
    info = PngInfo()
    for k, v in sorted((meta or {}).items()):
        info.add_text(f"bias-probe:{k}", str(v))
    PILImage.fromarray(image.pixels).save(path, format="PNG", pnginfo=info)


def png_meta(path: str | Path) -> dict[str, str]:
    with PILImage.open(path) as im:
        return {k.split(":", 1)[1]: v for k, v in im.text.items() if k.startswith("bias-probe:")}
