import json
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bias_probe.embeddings import Embedding
from bias_probe.errors import ConfigError, InvariantViolation, MissingEmbedding, ParseError, TooFewSamples
from bias_probe.experiments import (
    ElectionRace,
    LabeledFace,
    Origin,
    RaceConfig,
    WorldConfig,
    build_world,
    experiment_a,
    experiment_b,
    experiment_c,
    experiment_d,
    kfold_predictions,
    kfold_splits,
    load_races,
    projection_diagnostic,
    save_races,
    scramble_races,
    synthesize_races,
)
from bias_probe.experiments import report
from bias_probe.experiments.data import check_disjoint, labeled_faces
from bias_probe.experiments.election import predicted_winner
from bias_probe.experiments.projection import pca_2d
from bias_probe.forest import ForestParams
from bias_probe.ratings import TraitScore
from bias_probe.traits import TraitDimension

T = TraitDimension.TRUSTWORTHY
C = TraitDimension.COMPETENT
SMALL = ForestParams(n_trees=15, seed=0)


@lru_cache(maxsize=None)
def small_world(eta=0.8, leakage=0.6, seed=0):
    return build_world(WorldConfig(seed=seed, D=24, n_random=80, n_bases=6, traits=(T, C),
                                   eta=eta, leakage=leakage, embed_dim=32))


@given(st.integers(2, 200), st.integers(2, 12), st.integers(0, 99))
def test_kfold_partition(n, k, seed):
    if k > n:
        with pytest.raises(TooFewSamples):
            kfold_splits(n, k, seed)
        return
    folds = kfold_splits(n, k, seed)
    allidx = np.concatenate(folds)
    assert len(folds) == k and sorted(allidx.tolist()) == list(range(n))
    assert max(map(len, folds)) - min(map(len, folds)) <= 1
    assert all(np.array_equal(a, b) for a, b in zip(folds, kfold_splits(n, k, seed)))


def test_kfold_predictions_deterministic():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((50, 4))
    y = X[:, 0]
    a = kfold_predictions(X, y, 5, SMALL, 1)
    assert np.array_equal(a, kfold_predictions(X, y, 5, SMALL, 1, threads=2))
    assert np.corrcoef(a, y)[0, 1] > 0.7


def test_world_shapes_and_reliability():
    w = small_world()
    assert len(w.random_faces()) == 80
    assert len(w.distinct_faces()) == 6 * 2 * 5
    for a in w.alpha.values():
        assert 0.78 <= a <= 0.90
    ids = [f.face_id for f in w.random_faces() + w.distinct_faces()]
    assert len(ids) == len(set(ids))
    assert all(f.scores == {f.trait: 100.0 * f.delta} for f in w.distinct_faces())


def test_world_is_deterministic():
    a = build_world(WorldConfig(seed=3, D=24, n_random=40, n_bases=2, traits=(T,), embed_dim=24))
    b = build_world(WorldConfig(seed=3, D=24, n_random=40, n_bases=2, traits=(T,), embed_dim=24))
    assert [r.rating for r in a.ratings] == [r.rating for r in b.ratings]
    assert all(np.array_equal(a.embeddings[k].vector, b.embeddings[k].vector) for k in a.embeddings)


@pytest.mark.parametrize("kw", [dict(D=10), dict(eta=2.0), dict(leakage=-0.1), dict(n_random=30)])
def test_world_config_validation(kw):
    with pytest.raises(ConfigError):
        WorldConfig(**kw)


def test_experiments_a_b_c_report_shape():
    w = small_world()
    rnd, dst = w.random_faces(), w.distinct_faces()
    a = experiment_a(rnd, dst, T, SMALL, 5)
    assert a["overall"]["n"] == 80 + 30 and a["distinct"]["n"] == 30
    b = experiment_b(dst, rnd, T, SMALL, 5)
    assert b["test"]["n"] == 80 and b["train_cv"]["n"] == 30
    c = experiment_c(rnd, dst, T, SMALL, 5)
    assert set(c["regimes"]) == {"distinct_cv", "distinct_to_random", "random_cv", "pooled_cv"}
    for r in c["regimes"].values():
        assert 0 <= r["accuracy"] <= 1
    assert experiment_b(dst, rnd, T, SMALL, 5) == b


def test_experiment_b_rejects_overlap():
    w = small_world()
    dst = w.distinct_faces()
    with pytest.raises(InvariantViolation):
        experiment_b(dst, dst, T, SMALL, 5)


def test_distinct_set_is_easier_than_random_faces():
    w = small_world()
    a = experiment_a(w.random_faces(), w.distinct_faces(), T, SMALL, 5)
    b = experiment_b(w.distinct_faces(), w.random_faces(), T, SMALL, 5)
    assert a["distinct"]["rho"] > b["test"]["rho"]


def test_predicted_winner_tie_break():
    assert predicted_winner("b", 1.0, "a", 1.0) == "a"
    assert predicted_winner("b", 2.0, "a", 1.0) == "b"


def test_election_pipeline_and_control(tmp_path):
    w = small_world(0.0, 1.0)
    races, pols = synthesize_races(w, RaceConfig(n_gubernatorial=20, n_senate=25), seed=0)
    assert len(races) == 45 and len({r.race_id for r in races}) == 45
    emb = {f.face_id: f.embedding for f in pols}
    d = experiment_d(races, w.distinct_faces(), emb, SMALL, C)
    assert d["overall"]["win_rate"] > 0.75
    assert set(d["by_office"]) == {"Gubernatorial", "Senate"}
    s = scramble_races(races, 0)
    assert [r.spread for r in s] == [r.spread for r in races]
    save_races(tmp_path / "r.csv", races, {"seed": 0})
    assert load_races(tmp_path / "r.csv") == races
    missing = dict(emb)
    missing.pop(races[0].winner_face_id)
    assert experiment_d(races, w.distinct_faces(), missing, SMALL, C)["skipped_missing_embedding"] == 1


def test_race_validation():
    with pytest.raises(ParseError):
        ElectionRace("r", 2006, "Senate", "a", "b", 0.4, 0.6)
    with pytest.raises(ParseError):
        ElectionRace("r", 2006, "Senate", "a", "a", 0.6, 0.4)


def test_projection_separates_identity():
    rng = np.random.default_rng(0)
    centers = rng.standard_normal((5, 10)) * 5
    X = np.vstack([c + 0.1 * rng.standard_normal((6, 10)) for c in centers])
    ids = np.repeat(np.arange(5), 6)
    scores = np.tile([-2, -1, 0, 1, 2, 3], 5)
    r = projection_diagnostic(X, ids, scores)
    assert r["silhouette_identity"] > 0.8 > r["silhouette_trait_sign"]
    coords, ratio = pca_2d(X)
    assert coords.shape == (30, 2) and ratio[0] >= ratio[1]


def test_report_is_canonical(tmp_path):
    doc = {"b": float("nan"), "a": np.float64(1.5), "t": T, "arr": np.arange(2)}
    text = report.dumps(doc, {"seed": 0})
    assert json.loads(text) == {"schema_version": 1, "a": 1.5, "b": None, "t": "Trustworthy",
                                "arr": [0, 1], "meta": {"seed": 0}}
    assert report.dumps(doc, {"seed": 0}) == text


def test_labeled_faces_join():
    scores = [TraitScore("base1_Trustworthy_-1.5", T, -150.0), TraitScore("x", T, 1.0)]
    embs = [Embedding("base1_Trustworthy_-1.5", [0.0, 1.0]), Embedding("x", [1.0, 0.0])]
    faces = labeled_faces(scores[:1], embs[:1], Origin.DISTINCT)
    assert faces[0].base_id == "base1" and faces[0].delta == -1.5
    with pytest.raises(MissingEmbedding):
        labeled_faces(scores, embs[:1], Origin.RANDOM)
    f = LabeledFace("x", Origin.RANDOM, {T: 1.0}, np.zeros(2))
    with pytest.raises(InvariantViolation):
        check_disjoint([f], [f])
