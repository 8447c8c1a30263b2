"""Building labeled faces from score and embedding files."""

from __future__ import annotations

import re
from typing import Sequence

from ..embeddings import Embedding
from ..errors import InvariantViolation, MissingEmbedding, ParseError
from ..ratings import TraitScore
from .world import LabeledFace, Origin

_DISTINCT_ID = re.compile(r"^(?P<base>.+)_(?P<trait>[A-Za-z]+)_(?P<delta>[+-]?[0-9.eE+-]+)$")


def labeled_faces(scores: Sequence[TraitScore], embeddings: Sequence[Embedding], origin: Origin,
                  require_all: bool = False) -> list[LabeledFace]:
    """Join scores and embeddings by face id, in embedding-file order.

    Random faces carry one score per trait; distinct faces one score for the
    trait they were manipulated along. Distinct face ids of the form
    ``<base>_<Trait>_<delta>`` also yield ``base_id`` and ``delta``. Faces with
    scores but no embedding raise :class:`MissingEmbedding`.
    """
    by_face: dict[str, dict] = {}
    for s in scores:
        by_face.setdefault(s.face_id, {})[s.trait] = s.score
    vectors = {e.face_id: e.vector for e in embeddings}
    if len(vectors) != len(embeddings):
        raise ParseError("duplicate face ids in embeddings")
    missing = sorted(set(by_face) - set(vectors))
    if missing:
        raise MissingEmbedding(f"{len(missing)} scored faces lack embeddings, e.g. {missing[0]!r}")
    out = []
    for e in embeddings:
        if e.face_id not in by_face:
            if require_all:
                raise ParseError(f"embedded face {e.face_id!r} has no score")
            continue
        sc = by_face[e.face_id]
        base = trait = delta = None
        if origin == Origin.DISTINCT:
            if len(sc) != 1:
                raise ParseError(f"distinct face {e.face_id!r} must carry exactly one trait score")
            trait = next(iter(sc))
            m = _DISTINCT_ID.match(e.face_id)
            base = m.group("base") if m else e.face_id
            delta = sc[trait] / 100.0
        out.append(LabeledFace(e.face_id, origin, sc, e.vector, base, trait, delta))
    return out


def check_disjoint(*groups: Sequence[LabeledFace]) -> None:
    seen: set[str] = set()
    for g in groups:
        ids = {f.face_id for f in g}
        dup = seen & ids
        if dup:
            raise InvariantViolation(f"face-set disjointness: {sorted(dup)[0]!r} appears in two sets")
        seen |= ids
