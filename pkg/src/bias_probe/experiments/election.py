"""Election races and Experiment D."""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .. import stats
from ..csvio import read_rows, to_float, write_rows
from ..embeddings import embed_all
from ..errors import EmptyData, InvariantViolation, ParseError, TooFewSamples, ZeroVariance
from ..forest import ForestParams, fit_regression, predict
from ..ratings import TraitScore, mean_ratings, simulate_raters, zscore_scale
from ..seeding import derive_seed, rng_for
from ..shape import ShapeVector
from ..traits import TraitDimension
from .core import _header, _with_trait, _xy
from .world import LabeledFace, Origin, World, perceived

GUBERNATORIAL = "Gubernatorial"
SENATE = "Senate"

RACE_HEADER = ["race_id", "year", "office", "winner_face_id", "runnerup_face_id",
               "vote_share_winner", "vote_share_runnerup"]
HUMAN_HEADER = ["human_competence_winner", "human_competence_runnerup"]


@dataclass(frozen=True)
class ElectionRace:
    race_id: str
    year: int
    office: str
    winner_face_id: str
    runnerup_face_id: str
    vote_share_winner: float
    vote_share_runnerup: float
    human_competence_winner: float | None = None
    human_competence_runnerup: float | None = None

    def __post_init__(self):
        for v in (self.vote_share_winner, self.vote_share_runnerup):
            if not 0.0 <= v <= 1.0:
                raise ParseError(f"race {self.race_id}: vote share {v} outside [0, 1]")
        if self.vote_share_winner < self.vote_share_runnerup:
            raise ParseError(f"race {self.race_id}: winner share below runner-up share")
        if self.winner_face_id == self.runnerup_face_id:
            raise ParseError(f"race {self.race_id}: both candidates are {self.winner_face_id}")

    @property
    def spread(self) -> float:
        return self.vote_share_winner - self.vote_share_runnerup

    @property
    def has_human(self) -> bool:
        return self.human_competence_winner is not None and self.human_competence_runnerup is not None


def save_races(path: str | Path, races: Sequence[ElectionRace], meta: dict | None = None) -> None:
    human = bool(races) and all(r.has_human for r in races)
    header = RACE_HEADER + (HUMAN_HEADER if human else [])
    rows = []
    for r in races:
        row = [r.race_id, r.year, r.office, r.winner_face_id, r.runnerup_face_id,
               float(r.vote_share_winner), float(r.vote_share_runnerup)]
        if human:
            row += [float(r.human_competence_winner), float(r.human_competence_runnerup)]
        rows.append(row)
    write_rows(path, header, rows, meta)


def load_races(path: str | Path) -> list[ElectionRace]:
    header, rows, _ = read_rows(path)
    if header not in (RACE_HEADER, RACE_HEADER + HUMAN_HEADER):
        raise ParseError(f"{path}: expected header {','.join(RACE_HEADER)}[,{','.join(HUMAN_HEADER)}]")
    out = []
    for lineno, f in rows:
        if len(f) != len(header):
            raise ParseError(f"{path}: expected {len(header)} fields", row=lineno)
        try:
            year = int(f[1])
        except ValueError:
            raise ParseError(f"{path}: bad year {f[1]!r}", row=lineno) from None
        nums = [to_float(v, path, lineno) for v in f[5:]]
        human = nums[2:] if len(nums) == 4 else [None, None]
        try:
            out.append(ElectionRace(f[0], year, f[2], f[3], f[4], nums[0], nums[1], *human))
        except ParseError as exc:
            raise ParseError(f"{path}: {exc}", row=lineno) from None
    return out


# -- synthetic races ---------------------------------------------------------

@dataclass(frozen=True)
class RaceConfig:
    n_gubernatorial: int = 123
    n_senate: int = 148
    gap_min: float = 0.5
    gap_max: float = 3.5
    spread_per_sd: float = 0.15
    spread_noise: float = 0.03
    n_raters: int = 15
    year: int = 2006


def synthesize_races(world: World, cfg: RaceConfig = RaceConfig(), seed: int | None = None,
                     trait: TraitDimension = TraitDimension.COMPETENT
                     ) -> tuple[list[ElectionRace], list[LabeledFace]]:
    """Two-candidate races whose vote spread grows with the planted gap in
    perceived ``trait`` between the candidates.

    Each candidate is a standard-normal shape whose coordinate along the
    trait's linear direction is set to ``m +/- gap/2``; the candidate with the
    higher perceived score wins.
    """
    seed = world.config.seed if seed is None else seed
    rng = rng_for(seed, "election")
    geom = world.geometry[trait]
    D = world.config.D
    n = cfg.n_gubernatorial + cfg.n_senate
    S = rng.standard_normal((2 * n, D))
    mid = rng.normal(0.0, 0.5, n)
    gap = rng.uniform(cfg.gap_min, cfg.gap_max, n)
    target = np.empty(2 * n)
    target[0::2] = mid + gap / 2
    target[1::2] = mid - gap / 2
    S += np.outer(target - S @ geom.linear, geom.linear)
    z = perceived(S, geom, world.config.eta)
    noise = rng.normal(0.0, cfg.spread_noise, n)

    width = max(4, len(str(2 * n - 1)))
    shapes = [ShapeVector(f"pol{i:0{width}d}", s) for i, s in enumerate(S)]
    truth = [TraitScore(s.face_id, trait, float(100.0 * v)) for s, v in zip(shapes, z)]
    records = simulate_raters(truth, world.noise_sd, cfg.n_raters, derive_seed(seed, "election.raters"))
    means = mean_ratings(records)
    human = {s.face_id: s.score for s in zscore_scale({f: m[trait] for f, m in means.items()}, trait)}

    races = []
    for i in range(n):
        a, b = 2 * i, 2 * i + 1
        if z[b] > z[a]:
            a, b = b, a
        spread = float(np.clip(cfg.spread_per_sd * (z[a] - z[b]) + noise[i], 0.0, 0.9))
        office = GUBERNATORIAL if i < cfg.n_gubernatorial else SENATE
        wid, rid = shapes[a].face_id, shapes[b].face_id
        races.append(ElectionRace(f"race{i:03d}", cfg.year, office, wid, rid,
                                  0.5 + spread / 2, 0.5 - spread / 2, human[wid], human[rid]))

    embs = embed_all(shapes, world.embedder)
    faces = [LabeledFace(s.face_id, Origin.POLITICIAN, {trait: human[s.face_id]}, e.vector)
             for s, e in zip(shapes, embs)]
    return races, faces


def scramble_races(races: Sequence[ElectionRace], seed: int) -> list[ElectionRace]:
    """Control: swap the candidates of each race on a fair coin flip, keeping
    the vote shares, so the labeled winner carries no competence signal."""
    flips = rng_for(seed, "election.scramble").random(len(races)) < 0.5
    out = []
    for r, flip in zip(races, flips):
        if flip:
            r = replace(r, winner_face_id=r.runnerup_face_id, runnerup_face_id=r.winner_face_id,
                        human_competence_winner=r.human_competence_runnerup,
                        human_competence_runnerup=r.human_competence_winner)
        out.append(r)
    return out


# -- experiment D ------------------------------------------------------------

def predicted_winner(face_a: str, pred_a: float, face_b: str, pred_b: float) -> str:
    """Higher predicted score wins; equal scores go to the smaller face id."""
    if pred_a != pred_b:
        return face_a if pred_a > pred_b else face_b
    return min(face_a, face_b)


def _win_summary(hits: Sequence[bool]) -> dict:
    n = len(hits)
    wins = int(sum(hits))
    return {"n": n, "correct": wins, "win_rate": wins / n,
            "chi2_p_value": stats.chi2_proportion(wins, n, 0.5)}


def experiment_d(races: Sequence[ElectionRace], distinct_faces: Sequence[LabeledFace],
                 embeddings: Mapping[str, np.ndarray], params: ForestParams | None = None,
                 trait: TraitDimension = TraitDimension.COMPETENT, seed: int = 0,
                 threads: int | None = None) -> dict:
    """Train a ``trait`` regressor on distinct faces and call each race for the
    candidate with the higher predicted score.

    Races missing an embedding for either candidate are skipped and counted.
    """
    params = params or ForestParams()
    train = _with_trait(distinct_faces, trait)
    if not train:
        raise EmptyData(f"no distinct faces manipulated along {trait.value}")
    train_ids = {f.face_id for f in train}
    X, y = _xy(train, trait)
    model = fit_regression(X, y, params, threads)

    usable = [r for r in races if r.winner_face_id in embeddings and r.runnerup_face_id in embeddings]
    if not usable:
        raise EmptyData("no race has embeddings for both candidates")
    faces = sorted({f for r in usable for f in (r.winner_face_id, r.runnerup_face_id)})
    leaked = train_ids.intersection(faces)
    if leaked:
        raise InvariantViolation(f"train/test disjointness: politician {sorted(leaked)[0]!r} is a training face")
    P = predict(model, np.vstack([np.asarray(embeddings[f], dtype=np.float64) for f in faces]))
    pred = dict(zip(faces, P.tolist()))

    hits, by_office = [], {}
    for r in usable:
        pw, pr = pred[r.winner_face_id], pred[r.runnerup_face_id]
        hit = predicted_winner(r.winner_face_id, pw, r.runnerup_face_id, pr) == r.winner_face_id
        hits.append(hit)
        by_office.setdefault(r.office, []).append(hit)

    report = _header("D", trait, params, 0, seed)
    del report["folds"]
    report["races"] = len(races)
    report["skipped_missing_embedding"] = len(races) - len(usable)
    report["overall"] = _win_summary(hits)
    report["by_office"] = {office: _win_summary(h) for office, h in sorted(by_office.items())}

    diff = [pred[r.winner_face_id] - pred[r.runnerup_face_id] for r in usable]
    spread = [r.spread for r in usable]
    report["spread_definition"] = "vote_share_winner - vote_share_runnerup"
    report["spread_correlation"] = _corr(diff, spread)

    human = [r for r in usable if r.has_human]
    if human:
        hp, hh = [], []
        for r in human:
            hp += [pred[r.winner_face_id], pred[r.runnerup_face_id]]
            hh += [r.human_competence_winner, r.human_competence_runnerup]
        report["human_agreement"] = dict(_corr(hp, hh), rmse=stats.rmse(hp, hh))
    else:
        report["human_agreement"] = None
    return report


def _corr(x, y) -> dict:
    try:
        c = stats.pearson(x, y)
        return {"n": c.n, "rho": c.rho, "p_value": c.p_value}
    except (ZeroVariance, TooFewSamples):
        return {"n": len(x), "rho": None, "p_value": None}
