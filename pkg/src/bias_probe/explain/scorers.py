"""Bundled scorers for explanations.

``ForestScorer`` runs images through a pixel-patch embedder and a fitted
regression forest, so the whole explanation path works without any external
model. ``SubprocessScorer`` talks to an external program over a line
protocol: one image path per line in, one decimal score per line out.
"""

from __future__ import annotations

import subprocess
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import ScorerFailure
from ..forest import ForestParams, RegressionForest, fit_regression, predict
from .image import Image, save_png


@dataclass(frozen=True)
class PatchEmbedder:
    """Mean intensity (per channel) over a ``grid`` x ``grid`` patch layout."""

    grid: int = 16

    def _edges(self, n: int) -> np.ndarray:
        return np.linspace(0, n, self.grid + 1).round().astype(np.intp)[:-1]

    def embed_batch(self, images: np.ndarray) -> np.ndarray:
        """(B, H, W, C) float images -> (B, grid*grid*C) features."""
        B, H, W, C = images.shape
        ey, ex = self._edges(H), self._edges(W)
        sums = np.add.reduceat(np.add.reduceat(images, ey, axis=1), ex, axis=2)
        hy = np.diff(np.append(ey, H))
        hx = np.diff(np.append(ex, W))
        means = sums / (hy[:, None] * hx[None, :])[None, :, :, None]
        return means.reshape(B, -1)

    def embed(self, image: Image) -> np.ndarray:
        return self.embed_batch(image.as_float()[None])[0]


class ForestScorer:
    def __init__(self, forest: RegressionForest, embedder: PatchEmbedder):
        self.forest = forest
        self.embedder = embedder

    @classmethod
    def train(cls, images: Sequence[Image], targets, params: ForestParams | None = None,
              embedder: PatchEmbedder | None = None, threads: int | None = None) -> "ForestScorer":
        embedder = embedder or PatchEmbedder()
        X = embedder.embed_batch(np.stack([im.as_float() for im in images]))
        return cls(fit_regression(X, np.asarray(targets, dtype=np.float64), params, threads), embedder)

    def score_batch(self, images: np.ndarray, offset: int = 0) -> np.ndarray:
        return predict(self.forest, self.embedder.embed_batch(np.asarray(images, dtype=np.float64)))

    def __call__(self, image: np.ndarray) -> float:
        return float(self.score_batch(np.asarray(image)[None])[0])


class SubprocessScorer:
    """Scores images with an external command.

    The command reads image paths from stdin, one per line, and writes one
    score per line to stdout in the same order. Each batch is split across
    ``pool`` worker processes; a nonzero exit, short output or an unparsable
    line raises :class:`ScorerFailure` naming the first affected sample.
    """

    def __init__(self, command: Sequence[str], pool: int = 1, timeout: float | None = None):
        self.command = list(command)
        self.pool = max(1, pool)
        self.timeout = timeout

    def _run(self, paths: list[Path], offset: int) -> np.ndarray:
        payload = "".join(f"{p}\n" for p in paths)
        try:
            proc = subprocess.run(self.command, input=payload, capture_output=True, text=True,
                                  timeout=self.timeout, check=False)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise ScorerFailure(f"scorer could not run: {exc}", offset) from None
        lines = proc.stdout.splitlines()
        if proc.returncode != 0:
            raise ScorerFailure(f"scorer exited with status {proc.returncode}: {proc.stderr.strip()[:200]}",
                                offset + min(len(lines), len(paths) - 1))
        out = np.empty(len(paths))
        for i, line in enumerate(lines[:len(paths)]):
            try:
                out[i] = float(line)
            except ValueError:
                raise ScorerFailure(f"unparsable score {line!r}", offset + i) from None
        if len(lines) < len(paths):
            raise ScorerFailure(f"scorer returned {len(lines)} scores for {len(paths)} images",
                                offset + len(lines))
        return out

    def score_batch(self, images: np.ndarray, offset: int = 0) -> np.ndarray:
        images = np.asarray(images)
        with tempfile.TemporaryDirectory(prefix="bias-probe-") as tmp:
            paths = []
            for i, img in enumerate(images):
                p = Path(tmp) / f"sample_{offset + i:07d}.png"
                save_png(p, Image(np.clip(img[..., 0] if img.shape[-1] == 1 else img, 0, 255)))
                paths.append(p)
            chunks = np.array_split(np.arange(len(paths)), min(self.pool, len(paths)))
            with ThreadPoolExecutor(max_workers=len(chunks)) as ex:
                parts = list(ex.map(lambda c: self._run([paths[j] for j in c], offset + int(c[0])), chunks))
        return np.concatenate(parts)
