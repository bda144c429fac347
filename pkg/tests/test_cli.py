import csv
import json

import pytest

from hdgflow.cli import main


def test_unknown_case_exits_2(capsys):
    assert main(["run", "--case", "nonsense"]) == 2
    assert "unknown case" in capsys.readouterr().err


def test_missing_config_exits_2(capsys):
    assert main(["run", "--config", "does-not-exist.json"]) == 2


def test_unknown_flag_exits_2():
    assert main(["run", "--frobnicate"]) == 2


def test_converge_writes_csv(tmp_path, capsys):
    out = tmp_path / "c.csv"
    rc = main(["converge", "--case", "coriolis", "--k", "2",
               "--levels", "4,8", "--out", str(out)])
    assert rc == 0
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2
    assert float(rows[1]["rate_p"]) == pytest.approx(2.0, abs=0.2)
    assert float(rows[1]["l2_u"]) < 1e-9


def test_run_with_json_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    out = tmp_path / "r.csv"
    cfg.write_text(json.dumps({"case": "polynomial", "k": 2,
                               "levels": [4], "out": str(out)}))
    assert main(["run", "--config", str(cfg)]) == 0
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1
    assert rows[0]["case"] == "polynomial"


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    out = tmp_path / "r.csv"
    cfg.write_text(json.dumps({"case": "polynomial", "k": 1, "levels": [4]}))
    assert main(["run", "--config", str(cfg), "--k", "2",
                 "--out", str(out)]) == 0
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert rows[0]["k"] == "2"


def test_mesh_info(capsys):
    assert main(["mesh-info", "--mesh", "meshes/cylinder2d.msh"]) == 0
    out = capsys.readouterr().out
    assert "cells:" in out and "obstacle" in out


def test_mesh_info_missing_file(capsys):
    assert main(["mesh-info", "--mesh", "nope.msh"]) == 2


def test_cylinder_requires_mesh(capsys):
    assert main(["run", "--case", "cylinder2d"]) == 2


def test_audit_prints_pass_lines(capsys):
    rc = main(["audit", "--case", "potential-flow", "--k", "2",
               "--levels", "4", "--steps", "5", "--theta", "0.5"])
    out = capsys.readouterr().out
    assert rc == 0
    lines = [ln for ln in out.splitlines() if ln.startswith(("PASS", "FAIL"))]
    assert len(lines) == 6
    assert all(ln.startswith("PASS") for ln in lines)


def test_variant_formulation_flag(tmp_path):
    out = tmp_path / "v.csv"
    rc = main(["converge", "--case", "polynomial", "--k", "2", "--levels", "4",
               "--formulation", "variant", "--out", str(out)])
    assert rc == 0


def test_transient_run_writes_timeseries(tmp_path):
    out = tmp_path / "ts.csv"
    rc = main(["run", "--case", "potential-flow", "--k", "2",
               "--levels", "4", "--dt", "0.01", "--t-end", "0.03",
               "--theta", "0.5", "--out", str(out)])
    assert rc == 0
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert [r["step"] for r in rows] == ["1", "2", "3"]
