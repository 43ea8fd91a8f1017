from __future__ import annotations

import json

import numpy as np
import pytest

from gari.cli import main, parse_syndrome_token
from conftest import require_fixture

TOY_DEM = """\
detector(0, 0, 0, 0) D0
detector(0, 0, 0, 1) D1
error(0.01) D0
error(0.01) D1 L0
error(0.02) D0 D1 L0
"""


@pytest.fixture
def toy_dem(tmp_path):
    path = tmp_path / "toy.dem"
    path.write_text(TOY_DEM)
    (tmp_path / "toy.typing").write_text("X: 0\nZ: 1\n")
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_syndrome_tokens():
    assert parse_syndrome_token("0101", 4).tolist() == [0, 1, 0, 1]
    assert parse_syndrome_token("0x5", 4).tolist() == [1, 0, 1, 0]
    with pytest.raises(ValueError):
        parse_syndrome_token("0x10", 4)
    with pytest.raises(ValueError):
        parse_syndrome_token("012", 3)


def test_inspect_json_and_coordinate_typing(capsys, toy_dem):
    code, out, _ = run(capsys, "inspect", "--dem", toy_dem, "--typing-coord", "3:0=X,1=Z")
    assert code == 0
    stats = json.loads(out)
    assert stats["D_XYZ"]["num_cols"] == 3
    assert stats["bottom"]["num_rows"] == 2 and stats["bottom"]["num_4cycles"] == 0


def test_inspect_csv(capsys, toy_dem):
    _, out, _ = run(capsys, "inspect", "--dem", toy_dem, "--format", "csv")
    lines = out.splitlines()
    assert lines[0].startswith("matrix,num_rows")
    assert lines[3] == "D_XYZ,2,3,4,2.00,0"


def test_transform_decode_round_trip(capsys, toy_dem, tmp_path):
    out_dir = tmp_path / "model"
    code, _, _ = run(capsys, "transform", "--dem", toy_dem, "--out", out_dir, "--distance", 2)
    assert code == 0
    man = json.loads((out_dir / "manifest.json").read_text())
    assert man["format"] == "gari-model/1" and man["distance"] == 2
    assert man["stats"]["D_X"]["num_cols"] == 1
    assert (out_dir / "bottom.txt").read_text().splitlines()[0] == "2 5 6"
    syn = tmp_path / "syn.txt"
    syn.write_text("# s_X s_Z\n0 0\n1 1\n0x1 0x1\n")
    code, out, _ = run(capsys, "decode", "--model", out_dir, "--syndromes", syn)
    rows = [json.loads(l) for l in out.splitlines()]
    assert [r["observable_mask"] for r in rows] == [0, 1, 1]
    assert all(r["converged"] for r in rows)
    assert set(rows[0]) == {"converged", "iterations", "observable_mask", "weight"}


def test_decode_bad_line(capsys, toy_dem, tmp_path):
    run(capsys, "transform", "--dem", toy_dem, "--out", tmp_path / "m")
    syn = tmp_path / "syn.txt"
    syn.write_text("01 1\n")
    code, _, err = run(capsys, "decode", "--model", tmp_path / "m", "--syndromes", syn)
    assert code == 2 and "bit" in err


def test_simulate_outputs(capsys, toy_dem, tmp_path):
    rec = tmp_path / "rec.csv"
    code, out, _ = run(capsys, "simulate", "--dem", toy_dem, "--shots", 200, "--seed", 3,
                       "--ensemble", 3, "--distance", 4, "--per-iter-ns", 2900,
                       "--budget-ns", 1000, "--records", rec)
    assert code == 0
    rep = json.loads(out)
    assert rep["shots"] == 200 and rep["config"]["rounds"] == 4
    assert rep["config"]["ensemble_size"] == 3
    assert rep["latency_projection"]["budget_iters"] == 1
    assert len(rec.read_text().splitlines()) == 201
    _, again, _ = run(capsys, "simulate", "--dem", toy_dem, "--shots", 200, "--seed", 3,
                      "--ensemble", 3, "--distance", 4, "--per-iter-ns", 2900,
                      "--budget-ns", 1000, "--workers", 2)
    assert again == out


def test_simulate_csv_and_env_workers(capsys, toy_dem, monkeypatch):
    monkeypatch.setenv("GARI_WORKERS", "2")
    _, out, _ = run(capsys, "simulate", "--dem", toy_dem, "--shots", 50, "--format", "csv")
    assert out.splitlines()[0] == "metric,value"


def test_missing_typing_is_reported(capsys, tmp_path):
    path = tmp_path / "x.dem"
    path.write_text("error(0.1) D0\n")
    code, _, err = run(capsys, "inspect", "--dem", path)
    assert code == 2 and "typing" in err


def test_inspect_d6_fixture(capsys):
    path = require_fixture(6)
    _, out, _ = run(capsys, "inspect", "--dem", path, "--format", "csv")
    assert "D_X,180,1800,5976,33.20,10440" in out.splitlines()
    assert "bottom,4032,20196,32328,8.02,0" in out.splitlines()
