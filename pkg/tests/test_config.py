import json

import pytest

from bias_probe import config as C
from bias_probe.errors import ConfigError


def test_defaults_validate_and_hash_is_stable():
    a, b = C.from_dict({}), C.from_dict({"out": "elsewhere", "threads": 3})
    assert a.hash() == b.hash()
    assert a.hash() != C.from_dict({"seed": 1}).hash()
    assert len(a.hash()) == 16


@pytest.mark.parametrize("raw", [
    {"bogus": 1},
    {"world": {"D": 50, "extra": 2}},
    {"world": {"D": 10}},
    {"world": {"eta": 1.5}},
    {"seed": -1},
    {"seed": "zero"},
    {"threads": 0},
    {"experiments": {"folds": 1}},
    {"experiments": {"run": ["e"]}},
    {"experiments": {"traits": ["Smart"]}},
    {"forest": {"n_trees": 0}},
    {"explain": {"segments": 5000}},
    {"data": {"random_scores": "x.csv"}},
    {"data": {"random_scores": "missing.csv", "random_embeddings": "missing.csv"}},
    {"world": {"traits": ["Trustworthy"]}, "experiments": {"traits": ["Dominant"]}},
    {"forest": {"bootstrap": 1}},
])
def test_invalid_configs_rejected(raw):
    with pytest.raises(ConfigError):
        C.from_dict(raw)


def test_load_file_and_overrides(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"seed": 4, "forest": {"n_trees": 10}}))
    cfg = C.load(p, {"seed": 9, "threads": None})
    assert cfg.seed == 9 and cfg.forest.n_trees == 10 and cfg.threads == 1
    assert cfg.forest_params().seed == 9
    with pytest.raises(ConfigError):
        C.load(tmp_path / "nope.json")
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(ConfigError):
        C.load(tmp_path / "bad.json")
