import csv
import json
import shutil
import subprocess
import sys
from collections import defaultdict

import pytest

from avqoe.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    assert main(["synth", "--seed", "7", "--out-dir", str(out)]) == 0
    return out


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_matrix_file(tmp_path, capsys):
    target = tmp_path / "conditions.csv"
    code, _, _ = run(capsys, "matrix", "-o", target)
    assert code == 0
    first = target.read_bytes()
    assert len(first.decode().splitlines()) == 145
    assert (tmp_path / "conditions.manifest.json").exists()
    assert run(capsys, "matrix", "-o", target)[0] == 0
    assert target.read_bytes() == first


def test_matrix_stdout_json(capsys):
    code, out, _ = run(capsys, "matrix", "--format", "json")
    assert code == 0 and len(json.loads(out)) == 144


@pytest.mark.parametrize("make_target", [lambda d: d / "missing" / "c.csv", lambda d: d / "afile" / "c.csv"])
def test_matrix_unwritable_path(tmp_path, capsys, make_target):
    (tmp_path / "afile").write_text("not a directory")
    target = make_target(tmp_path)
    code, _, err = run(capsys, "matrix", "-o", target)
    assert code == 2
    assert "error" in err
    assert not target.exists()
    leftovers = [p for p in tmp_path.rglob("*") if p.name not in ("afile",)]
    assert leftovers == []


def test_profiles(capsys):
    code, out, _ = run(capsys, "profiles", "--format", "json")
    rows = json.loads(out)
    assert code == 0 and len(rows) == 6
    assert {r["audio_bitrate_kbps"] for r in rows} == {128}


def test_synth_outputs(corpus):
    ratings = _rows(corpus / "ratings.csv")
    assert len(ratings) == 3456
    assert len(_rows(corpus / "metadata.csv")) == 144
    manifest = json.loads((corpus / "manifest.json").read_text())
    assert manifest["command"] == "synth" and manifest["seed"] == 7


def test_synth_is_reproducible(tmp_path, corpus):
    assert main(["synth", "--seed", "7", "--out-dir", str(tmp_path)]) == 0
    for name in ("conditions.csv", "metadata.csv", "ratings.csv"):
        assert (tmp_path / name).read_bytes() == (corpus / name).read_bytes()


def test_synth_without_noise(tmp_path):
    assert main(["synth", "--noise", "0", "--out-dir", str(tmp_path)]) == 0
    scores = defaultdict(set)
    for row in _rows(tmp_path / "ratings.csv"):
        scores[row["condition_id"]].add(row["score"])
    assert len(scores) == 144
    assert all(len(s) == 1 for s in scores.values())


def test_evaluate_default_run(tmp_path, corpus, capsys):
    out = tmp_path / "results"
    code, stdout, _ = run(capsys, "evaluate", "--data-dir", corpus, "--model", "both", "--seed", "7",
                          "--out-dir", out)
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["models"]["forest"]["rmse"] < report["models"]["mlp"]["rmse"]
    assert report["ranking_by_rmse"] == ["forest", "mlp"]
    # stdout shows exactly the numbers in report.json
    printed = {row["model"]: row for row in csv.DictReader(stdout.splitlines())}
    for name, doc in report["models"].items():
        for metric in ("rmse", "pearson_r", "abs_err_p95", "outlier_ratio"):
            assert float(printed[name][metric]) == doc[metric]
    for name in ("scatter.csv", "importance.csv", "manifest.json",
                 "scatter_forest.png", "scatter_mlp.png", "importance.png"):
        assert (out / name).stat().st_size > 0
    scatter = _rows(out / "scatter.csv")
    assert len(scatter) == 2 * 10 * 144
    manifest = json.loads((out / "manifest.json").read_text())
    assert set(manifest["inputs"]) == {"conditions", "metadata", "ratings"}


def test_evaluate_leave_one_out(tmp_path, corpus, capsys):
    code, out, _ = run(capsys, "evaluate", "--data-dir", corpus, "--model", "forest", "--k", "144",
                       "--repetitions", "1", "--trees", "10", "--no-figures", "--format", "json",
                       "--out-dir", tmp_path)
    assert code == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["cv"]["k"] == 144
    assert len(report["models"]["forest"]["per_fold"]) == 144
    assert json.loads(out)["summary"] == report["summary"]


def test_evaluate_missing_ratings(tmp_path, corpus, capsys):
    data = tmp_path / "data"
    shutil.copytree(corpus, data)
    (data / "ratings.csv").unlink()
    code, _, err = run(capsys, "evaluate", "--data-dir", data, "--out-dir", tmp_path / "r")
    assert code == 2
    assert "ratings.csv" in err


def test_evaluate_bad_rating(tmp_path, corpus, capsys):
    data = tmp_path / "data"
    shutil.copytree(corpus, data)
    with open(data / "ratings.csv", "a") as fh:
        fh.write("HD720_LQ_High_p0_j0,s99,7\n")
    code, _, err = run(capsys, "evaluate", "--data-dir", data, "--out-dir", tmp_path / "r")
    assert code == 2 and "3458" in err


def test_importance_command(tmp_path, corpus, capsys):
    code, out, _ = run(capsys, "importance", "--data-dir", corpus, "--trees", "20", "--save-model",
                       "--out-dir", tmp_path)
    assert code == 0
    rows = list(csv.DictReader(out.splitlines()))
    assert len(rows) == 11
    assert sum(float(r["importance"]) for r in rows) == pytest.approx(1.0)
    assert (tmp_path / "forest.json").exists() and (tmp_path / "importance.png").exists()


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "avqoe.cli", "matrix"], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[1] == "HD1080_HQ_High_p0_j0,HD1080,HQ,High,0,0"
