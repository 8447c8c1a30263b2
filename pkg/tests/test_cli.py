import json
import subprocess
import sys

import pytest

from bias_probe.cli import main
from bias_probe.csvio import read_rows
from bias_probe.explain.image import png_meta

SMALL = {
    "world": {"D": 24, "n_random": 60, "n_bases": 4, "traits": ["Trustworthy", "Competent"], "embed_dim": 32},
    "forest": {"n_trees": 10},
    "experiments": {"folds": 3},
    "election": {"n_gubernatorial": 10, "n_senate": 12},
    "explain": {"image_size": 32, "segments": 40, "n_samples": 200, "cohort_train": 30,
                "cohort_explain": 2, "patch_grid": 8},
}


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "config.json"
    p.write_text(json.dumps(SMALL))
    return p


def run(cfg, out, *args):
    return main([*args, "--config", str(cfg), "--out", str(out)])


def test_staged_pipeline(cfg, tmp_path):
    out = tmp_path / "o"
    for cmd in (["gen"], ["fit-trait"], ["manipulate"], ["embed"]):
        assert run(cfg, out, *cmd) == 0
    header, rows, meta = read_rows(out / "scores.csv")
    assert len(rows) == 60 * 2 and header == ["face_id", "trait", "score"]
    assert set(meta) >= {"config_hash", "seed"}
    assert len(read_rows(out / "distinct_embeddings.csv")[1]) == 4 * 2 * 5
    log = [json.loads(line) for line in (out / "run_log.jsonl").read_text().splitlines()]
    assert {e["command"] for e in log} == {"gen", "fit-trait", "manipulate", "embed"}
    assert all("seconds" in e for e in log)


def test_gen_default_has_1800_scores(tmp_path):
    assert main(["gen", "--out", str(tmp_path)]) == 0
    assert len(read_rows(tmp_path / "scores.csv")[1]) == 1800


def test_experiments_are_byte_identical(cfg, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(cfg, a, "exp", "b") == 0
    assert main(["exp", "b", "--config", str(cfg), "--out", str(b), "--threads", "2"]) == 0
    assert (a / "exp_b.json").read_bytes() == (b / "exp_b.json").read_bytes()


def test_all_analyses_and_report(cfg, tmp_path):
    out = tmp_path / "o"
    for args in (["exp", "a"], ["exp", "c"], ["exp", "d"], ["cv"], ["project"], ["explain"]):
        assert run(cfg, out, *args) == 0, args
    d = json.loads((out / "exp_d.json").read_text())
    assert "scrambled_control" in d and d["result"]["overall"]["n"] == 22
    assert png_meta(out / "explain" / "heatmap.png")["config_hash"] == d["meta"]["config_hash"]
    assert run(cfg, out, "report", "--criteria", "3,4") == 0
    rep = json.loads((out / "report.json").read_text())
    assert {"exp_a", "exp_c", "exp_d", "cv", "project", "explain"} <= set(rep["artifacts"])
    assert [c["status"] for c in rep["acceptance"]] == ["PASS", "PASS"]


def test_report_refuses_mixed_hashes(cfg, tmp_path):
    out = tmp_path / "o"
    assert run(cfg, out, "project") == 0
    assert main(["project", "--config", str(cfg), "--out", str(out), "--seed", "5"]) == 0
    assert run(cfg, out, "report", "--skip-acceptance") == 4


def test_exit_codes(cfg, tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"world": {"D": 24, "unknown": 1}}))
    assert main(["gen", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert "unknown" in capsys.readouterr().err
    assert main(["fit-trait", "--out", str(tmp_path / "empty")]) == 3
    corrupt = tmp_path / "c"
    corrupt.mkdir()
    (corrupt / "shapes.csv").write_text("face_id,c_0\na,xyz\n")
    assert main(["fit-trait", "--out", str(corrupt)]) == 3


def test_dry_run_writes_nothing(cfg, tmp_path, capsys):
    out = tmp_path / "never"
    assert run(cfg, out, "exp", "a", "--dry-run") == 0
    assert not out.exists()
    assert "config ok" in capsys.readouterr().out


def test_data_section_drives_experiments(cfg, tmp_path):
    staged = tmp_path / "staged"
    for cmd in ("gen", "fit-trait", "manipulate", "embed"):
        assert run(cfg, staged, cmd) == 0
    raw = dict(SMALL, data={
        "random_scores": str(staged / "scores.csv"), "random_embeddings": str(staged / "random_embeddings.csv"),
        "distinct_scores": str(staged / "distinct_scores.csv"),
        "distinct_embeddings": str(staged / "distinct_embeddings.csv")})
    from_files = tmp_path / "f.json"
    from_files.write_text(json.dumps(raw))
    assert run(from_files, tmp_path / "x", "exp", "b") == 0
    assert run(cfg, tmp_path / "y", "exp", "b") == 0
    a = json.loads((tmp_path / "x" / "exp_b.json").read_text())
    b = json.loads((tmp_path / "y" / "exp_b.json").read_text())
    assert a["traits"] == b["traits"]


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "bias_probe.cli", "gen", "--dry-run"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "config ok" in proc.stdout
