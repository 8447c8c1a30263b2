"""Face feature vectors.

Two backends produce :class:`Embedding` objects: files of precomputed vectors
(e.g. from an external face-recognition network) and a synthetic linear
embedder whose ``leakage`` knob controls how much of a set of shape-space
directions survives into the features.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from .csvio import read_rows, to_float, write_rows
from .errors import DimensionError, DimensionMismatch, ParseError
from .shape import ShapeVector

EMBEDDING_DIM = 128


@dataclass(frozen=True, eq=False)
class Embedding:
    face_id: str
    vector: np.ndarray

    def __post_init__(self):
        v = np.array(self.vector, dtype=np.float64)
        if v.ndim != 1 or not np.isfinite(v).all():
            raise ParseError(f"{self.face_id}: embedding must be a finite vector")
        v.setflags(write=False)
        object.__setattr__(self, "vector", v)


@dataclass(frozen=True)
class SyntheticEmbedderSpec:
    """Synthetic embedder: ``e = A @ (leakage * s + (1 - leakage) * P_null(s))``.

    ``P_null`` removes the components of ``s`` along ``null_directions``; ``A``
    is a seeded random ``dim x D`` matrix with orthonormal columns.
    """

    seed: int
    leakage: float
    D: int
    null_directions: tuple[tuple[float, ...], ...] = ()
    dim: int = EMBEDDING_DIM

    def __post_init__(self):
        if not 0.0 <= self.leakage <= 1.0:
            raise ValueError("leakage must lie in [0, 1]")
        if self.dim < self.D:
            raise ValueError("embedding dim must be >= shape dimension for an injective map")
        nd = tuple(tuple(float(x) for x in d) for d in self.null_directions)
        for d in nd:
            if len(d) != self.D:
                raise DimensionMismatch(f"null direction of length {len(d)} in D={self.D}")
        if nd and np.linalg.matrix_rank(np.array(nd)) < len(nd):
            raise ValueError("null directions must be linearly independent")
        object.__setattr__(self, "null_directions", nd)


@lru_cache(maxsize=32)
def _operator(spec: SyntheticEmbedderSpec) -> np.ndarray:
    rng = np.random.default_rng(spec.seed)
    A, _ = np.linalg.qr(rng.standard_normal((spec.dim, spec.D)))
    M = np.eye(spec.D)
    if spec.null_directions:
        Q, _ = np.linalg.qr(np.array(spec.null_directions).T)
        P_null = np.eye(spec.D) - Q @ Q.T
        M = spec.leakage * np.eye(spec.D) + (1.0 - spec.leakage) * P_null
    op = A @ M
    op.setflags(write=False)
    return op


def mixing_matrix(spec: SyntheticEmbedderSpec) -> np.ndarray:
    """The orthonormal-column matrix ``A`` alone."""
    rng = np.random.default_rng(spec.seed)
    A, _ = np.linalg.qr(rng.standard_normal((spec.dim, spec.D)))
    return A


def synthetic_embed(shape: ShapeVector, spec: SyntheticEmbedderSpec) -> Embedding:
    if shape.dim != spec.D:
        raise DimensionMismatch(f"shape D={shape.dim} but embedder expects D={spec.D}")
    return Embedding(shape.face_id, _operator(spec) @ shape.coeffs)


def embed_all(shapes: Sequence[ShapeVector], spec: SyntheticEmbedderSpec) -> list[Embedding]:
    if not shapes:
        return []
    F = np.vstack([s.coeffs for s in shapes])
    if F.shape[1] != spec.D:
        raise DimensionMismatch(f"shape D={F.shape[1]} but embedder expects D={spec.D}")
    E = F @ _operator(spec).T
    return [Embedding(s.face_id, row) for s, row in zip(shapes, E)]


def embedding_matrix(embeddings: Sequence[Embedding]) -> np.ndarray:
    return np.vstack([e.vector for e in embeddings])


def save_embeddings(path: str | Path, embeddings: Sequence[Embedding], meta: dict | None = None) -> None:
    dim = len(embeddings[0].vector) if embeddings else EMBEDDING_DIM
    header = ["face_id"] + [f"dim_{i}" for i in range(dim)]
    write_rows(path, header, ([e.face_id, *map(float, e.vector)] for e in embeddings), meta)


def load_embeddings(path: str | Path, dim: int = EMBEDDING_DIM) -> list[Embedding]:
    """Read ``face_id,dim_0,...,dim_{dim-1}`` rows in file order."""
    header, rows, _ = read_rows(path)
    if not header or header[0] != "face_id" or any(h != f"dim_{i}" for i, h in enumerate(header[1:])):
        raise ParseError(f"{path}: expected header face_id,dim_0,...,dim_{dim - 1}")
    if len(header) - 1 != dim:
        raise DimensionError(f"{path}: header declares {len(header) - 1} dimensions, expected {dim}")
    out = []
    for lineno, fields in rows:
        if len(fields) - 1 != dim:
            raise DimensionError(f"{path}: row {lineno} has {len(fields) - 1} values, expected {dim}")
        out.append(Embedding(fields[0], [to_float(v, path, lineno) for v in fields[1:]]))
    return out
