"""Faces in shape space, trait directions and trait manipulation.

A face is a coefficient vector in a D-dimensional shape space. A trait
direction is the normalized product of the shape matrix with the faces'
z-scored judgments, and a face is made to look ``delta`` SD more of a trait
by stepping ``delta`` units along that direction.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import Sequence

import numpy as np

from .csvio import read_rows, to_float, write_rows
from .errors import DegenerateRatings, DimensionMismatch, EmptyData, ParseError
from .traits import TraitDimension

FIVE_LEVEL_DELTAS: tuple[float, ...] = (-3.0, -1.5, 0.0, 1.5, 3.0)
SEVEN_LEVEL_DELTAS: tuple[float, ...] = (-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ShapeVector:
    face_id: str
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = _frozen(self.coeffs)
        if coeffs.ndim != 1 or len(coeffs) < 1:
            raise DimensionMismatch(f"{self.face_id}: shape coefficients must be a non-empty vector")
        if not np.isfinite(coeffs).all():
            raise ParseError(f"{self.face_id}: non-finite shape coefficient")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def dim(self) -> int:
        return len(self.coeffs)


@dataclass(frozen=True, eq=False)
class TraitVector:
    trait: TraitDimension
    direction: np.ndarray
    raw_norm: float

    def __post_init__(self):
        object.__setattr__(self, "direction", _frozen(self.direction))

    @property
    def dim(self) -> int:
        return len(self.direction)


@dataclass(frozen=True, eq=False)
class ManipulatedFace:
    base_id: str
    trait: TraitDimension
    delta: float
    shape: ShapeVector

    @property
    def face_id(self) -> str:
        return self.shape.face_id


def shape_matrix(shapes: Sequence[ShapeVector]) -> np.ndarray:
    """Stack shapes as columns (D x N)."""
    if not shapes:
        raise EmptyData("no shapes")
    dims = {s.dim for s in shapes}
    if len(dims) != 1:
        raise DimensionMismatch(f"mixed shape dimensions {sorted(dims)}")
    return np.column_stack([s.coeffs for s in shapes])


def fit_trait_vector(shapes, scores, trait: TraitDimension | str = TraitDimension.TRUSTWORTHY) -> TraitVector:
    """Direction ``t = F @ r`` for shape matrix F (D x N) and z-scores r.

    ``shapes`` may be a D x N array or a sequence of :class:`ShapeVector`.
    """
    F = shape_matrix(shapes) if not isinstance(shapes, np.ndarray) else np.asarray(shapes, dtype=np.float64)
    r = np.asarray(scores, dtype=np.float64)
    if F.ndim != 2 or r.ndim != 1:
        raise DimensionMismatch("shapes must be D x N and scores a vector")
    if F.shape[1] != len(r):
        raise DimensionMismatch(f"{F.shape[1]} shapes but {len(r)} scores")
    if len(r) < 1:
        raise EmptyData("need at least one rated face")
    t = F @ r
    norm = float(np.linalg.norm(t))
    if norm < 1e-12:
        raise DegenerateRatings("ratings define no direction (|F r| < 1e-12)")
    return TraitVector(TraitDimension.parse(trait), t / norm, norm)


def _face_id(base_id: str, trait: TraitDimension, delta: float) -> str:
    return f"{base_id}_{trait.value}_{delta:+g}"


def manipulate(base: ShapeVector, tv: TraitVector, delta: float, face_id: str | None = None) -> ManipulatedFace:
    if base.dim != tv.dim:
        raise DimensionMismatch(f"base has D={base.dim}, trait vector D={tv.dim}")
    coeffs = base.coeffs + delta * tv.direction
    fid = face_id or _face_id(base.face_id, tv.trait, delta)
    return ManipulatedFace(base.face_id, tv.trait, float(delta), ShapeVector(fid, coeffs))


def neutralize(base: ShapeVector, tv: TraitVector) -> ShapeVector:
    """Project ``base`` onto the hyperplane where the trait sits at its mean,
    so a manipulation by ``delta`` lands exactly ``delta`` SD from the mean."""
    if base.dim != tv.dim:
        raise DimensionMismatch(f"base has D={base.dim}, trait vector D={tv.dim}")
    d = tv.direction
    return ShapeVector(base.face_id, base.coeffs - (base.coeffs @ d) * d)


def generate_distinct_set(bases: Sequence[ShapeVector], tvs: Sequence[TraitVector],
                          deltas: Sequence[float], neutral_bases: bool = False) -> list[ManipulatedFace]:
    """Every (base, trait, delta) combination, base-major.

    With ``neutral_bases`` each base is first neutralized along the trait being
    manipulated, making ``delta`` an absolute position on that trait.
    """
    if not bases or not tvs or len(deltas) == 0:
        raise EmptyData("bases, trait vectors and deltas must all be non-empty")
    dims = {b.dim for b in bases} | {t.dim for t in tvs}
    if len(dims) != 1:
        raise DimensionMismatch(f"inconsistent dimensions {sorted(dims)}")
    out = []
    for base, tv, delta in product(bases, tvs, deltas):
        start = neutralize(base, tv) if neutral_bases else base
        out.append(manipulate(start, tv, float(delta), _face_id(base.face_id, tv.trait, float(delta))))
    return out


def random_shape(rng_seed: int, count: int, D: int = 50, prefix: str = "face") -> list[ShapeVector]:
    """i.i.d. standard-normal shape vectors, deterministic in ``rng_seed``."""
    if count < 1 or D < 1:
        raise EmptyData("count and D must be >= 1")
    coeffs = np.random.default_rng(rng_seed).standard_normal((count, D))
    width = max(4, len(str(count - 1)))
    return [ShapeVector(f"{prefix}{i:0{width}d}", row) for i, row in enumerate(coeffs)]


def whiten(shapes: Sequence[ShapeVector]) -> list[ShapeVector]:
    """Re-express a sample in its own standardized principal coordinates, so
    that ``F @ F.T == N * I``. Under that condition ``F @ r`` is the least
    squares trait direction up to scale."""
    F = shape_matrix(shapes).T
    n, d = F.shape
    if n <= d:
        raise DimensionMismatch(f"whitening needs more faces ({n}) than dimensions ({d})")
    F = F - F.mean(axis=0)
    U, _, _ = np.linalg.svd(F, full_matrices=False)
    W = U * np.sqrt(n)
    return [ShapeVector(s.face_id, row) for s, row in zip(shapes, W)]


# -- files -------------------------------------------------------------------

def save_shapes(path: str | Path, shapes: Sequence[ShapeVector], meta: dict | None = None) -> None:
    D = shape_matrix(shapes).shape[0]
    header = ["face_id"] + [f"c_{i}" for i in range(D)]
    write_rows(path, header, ([s.face_id, *map(float, s.coeffs)] for s in shapes), meta)


def load_shapes(path: str | Path) -> list[ShapeVector]:
    header, rows, _ = read_rows(path)
    if not header or header[0] != "face_id" or any(h != f"c_{i}" for i, h in enumerate(header[1:])):
        raise ParseError(f"{path}: expected header face_id,c_0,...,c_(D-1)")
    D = len(header) - 1
    out = []
    for lineno, fields in rows:
        if len(fields) != D + 1:
            raise ParseError(f"{path}: expected {D + 1} fields, got {len(fields)}", row=lineno)
        out.append(ShapeVector(fields[0], [to_float(v, path, lineno) for v in fields[1:]]))
    return out


def save_trait_vectors(path: str | Path, tvs: Sequence[TraitVector], meta: dict | None = None) -> None:
    D = tvs[0].dim
    header = ["trait", "raw_norm"] + [f"d_{i}" for i in range(D)]
    write_rows(path, header, ([t.trait.value, float(t.raw_norm), *map(float, t.direction)] for t in tvs), meta)


def load_trait_vectors(path: str | Path) -> list[TraitVector]:
    header, rows, _ = read_rows(path)
    if header[:2] != ["trait", "raw_norm"] or any(h != f"d_{i}" for i, h in enumerate(header[2:])):
        raise ParseError(f"{path}: expected header trait,raw_norm,d_0,...,d_(D-1)")
    out = []
    for lineno, fields in rows:
        if len(fields) != len(header):
            raise ParseError(f"{path}: expected {len(header)} fields", row=lineno)
        vals = [to_float(v, path, lineno) for v in fields[1:]]
        out.append(TraitVector(TraitDimension.parse(fields[0]), vals[1:], vals[0]))
    return out
