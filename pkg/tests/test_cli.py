import csv
import json

import pytest

from r2f2.cli import run


def test_eq1_prints_value(capsys):
    assert run(["eq1", "--vmax", "110"]) == 0
    assert capsys.readouterr().out.strip() == "6"


@pytest.mark.parametrize("argv", [["eq1"], ["nope"], ["eq1", "--vmax", "1", "--bogus"],
                                  ["eq1", "--vmax", "-3"], []])
def test_validation_errors_exit_1(argv, capsys):
    assert run(argv) == 1
    assert "error" in capsys.readouterr().err


def test_profile_sweep_with_baseline(tmp_path, capsys):
    code = run(["profile-sweep", "--format", "<3,9,3>", "--adaptive", "--intervals", "20",
                "--pairs", "20", "--baseline", "E5M10", "--out", str(tmp_path)])
    assert code == 0
    line = capsys.readouterr().out
    assert "reduction mean" in line and "overflow intervals 0" in line
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["seed"] == 0 and "reduction" in summary
    assert len(list(csv.reader(open(tmp_path / "sweep.csv")))) == 21


def test_grid_search(tmp_path, capsys):
    assert run(["grid-search", "--lo", "0.05", "--hi", "0.07", "--samples", "2000",
                "--out", str(tmp_path)]) == 0
    assert "best E5M10" in capsys.readouterr().out
    assert (tmp_path / "grid.csv").exists()


def test_distribution(tmp_path, capsys):
    assert run(["distribution", "--n", "32", "--steps", "40", "--every", "4",
                "--out", str(tmp_path)]) == 0
    assert capsys.readouterr().out.startswith("distribution: stage1")
    rows = list(csv.reader(open(tmp_path / "histogram.csv")))
    assert rows[0] == ["stage", "bin_lo", "bin_hi", "count"]


def test_sim_heat_and_compare(tmp_path, capsys):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert run(["sim-heat", "--n", "32", "--steps", "30", "--init", "exp", "--backend", "<3,9,3>",
                "--adaptive", "--out", str(a)]) == 0
    assert run(["sim-heat", "--n", "32", "--steps", "30", "--init", "exp", "--out", str(b)]) == 0
    for f in ("snapshots.csv", "events.csv", "summary.json"):
        assert (a / f).exists()
    assert run(["compare", str(a / "snapshots.csv"), str(b / "snapshots.csv"),
                "--out", str(c)]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert out[0].startswith("sim-heat <3,9,3> adaptive: 900 multiplications")
    assert out[-1].startswith("compare u step 30: rmse")


def test_sim_swe_from_config(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"equation": "swe", "nx": 8, "ny": 8, "steps": 3,
                               "backend": "E5M10"}))
    assert run(["sim-swe", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert "sim-swe E5M10: 576 multiplications" in capsys.readouterr().out
    cfg.write_text(json.dumps({"equation": "heat"}))
    assert run(["sim-swe", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert run(["sim-swe", "--dt", "0.5", "--out", str(tmp_path / "o")]) == 1
    assert run(["sim-swe", "--config", str(tmp_path / "missing.json")]) == 1


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run(["grid-search", "--lo", "1", "--hi", "2", "--samples", "10",
                "--out", str(blocker / "sub")]) == 1


def test_selftest_quick(tmp_path, capsys):
    assert run(["selftest", "--quick", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.strip().endswith("checks passed")
