import json
import os
import subprocess
import sys

import pytest

from plessner_lab.cli import main, resolve_config

QF = {"setting": "disc", "vertex": 0.0, "delta": 0.999999, "eps": 0.2}


def run(tmp_path, cmd, cfg, *extra, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg), encoding="utf-8")
    out = tmp_path / f"out_{cmd}_{len(list(tmp_path.iterdir()))}"
    code = main([cmd, "--config", str(path), "--out", str(out), *extra])
    return code, out


def test_corpus_lists_names(capsys):
    assert main(["corpus"]) == 0
    names = [line.split("\t")[0] for line in capsys.readouterr().out.splitlines()]
    assert "identity" in names and "exp-inner" in names and "poisson" in names


def test_coarea_command(tmp_path):
    cfg = {"function": {"name": "identity"}, "region": QF, "band": {"w": 0, "a": 0.2, "b": 0.4},
           "knobs": {"resolution": 1 / 256}}
    code, out = run(tmp_path, "coarea", cfg)
    assert code == 0
    doc = json.loads((out / "coarea.json").read_text())
    assert doc["result"]["relative_gap"] <= 0.02
    assert doc["config"]["knobs"]["n_levels"] == 16 and doc["config"]["band"]["a"] == 0.2
    rows = (out / "coarea.csv").read_bytes().decode().split("\n")
    assert rows[0] == "t,L" and len([r for r in rows if r]) == 17


def test_round_trip_bitwise(tmp_path):
    cfg = {"function": {"name": "blaschke", "params": [0.3, [0, 0.5]]}, "region": {"vertex": 0.5, "eps": 0.02},
           "target": {"mode": "circle", "w": [0.1, 0], "r": 0.6}}
    code, out1 = run(tmp_path, "levelset", cfg)
    assert code == 0
    out2 = tmp_path / "again"
    assert main(["levelset", "--config", str(out1 / "levelset.json"), "--out", str(out2)]) == 0
    assert (out1 / "levelset.json").read_bytes() == (out2 / "levelset.json").read_bytes()
    assert (out1 / "levelset.csv").read_bytes() == (out2 / "levelset.csv").read_bytes()
    resolved = json.loads((out1 / "levelset.json").read_text())["config"]
    assert resolve_config(resolved) == resolved


def test_profile_exp_inner(tmp_path):
    code, out = run(tmp_path, "profile", {"function": {"name": "exp-inner"},
                                          "target": {"mode": "circle", "w": 0, "r": 2.718281828459045}})
    assert code == 0
    rows = (out / "profile.csv").read_text().splitlines()
    assert rows[0] == "eps,L,err" and len(rows) == 13
    vals = [float(r.split(",")[1]) for r in rows[1:]]
    assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))
    doc = json.loads((out / "profile.json").read_text())
    # realized: the level set misses the angle entirely
    assert doc["result"]["classification"] == "bounded"
    assert doc["result"]["thresholds"] == {"slope": 0.05, "ratio": 10.0, "floor": 1e-3, "window": 6}


@pytest.mark.parametrize("cmd,cfg,key", [
    ("spencer", {"region": QF}, "value"),
    ("stein", {"function": {"name": "re-square"}, "region": {"setting": "box", "x": [0, 1], "y": [0, 1],
                                                             "eps": 1e-3}}, "value"),
    ("area", {"region": QF, "target": {"mode": "circle", "w": 0, "r": 0.4}}, "value"),
    ("arclen", {"target": {"mode": "circle", "w": 0, "r": 0.7}}, "value"),
    ("probe", {"function": {"name": "affine"}}, "converged"),
    ("classify", {"vertex": 1.5707963267948966, "wr_list": [[0, 0, 0.5]]}, "label"),
])
def test_other_commands(tmp_path, cmd, cfg, key):
    code, out = run(tmp_path, cmd, cfg)
    assert code == 0
    doc = json.loads((out / f"{cmd}.json").read_text())
    assert key in doc["result"] and doc["command"] == cmd


def test_scan_threads_and_seed(tmp_path):
    cfg = {"n_samples": 20, "seed": 1}
    c1, o1 = run(tmp_path, "scan", cfg, "--threads", "1", "--seed", "42")
    c8, o8 = run(tmp_path, "scan", cfg, "--threads", "8", "--seed", "42")
    assert c1 == c8 == 0
    assert (o1 / "scan.json").read_bytes() == (o8 / "scan.json").read_bytes()
    doc = json.loads((o1 / "scan.json").read_text())
    assert doc["config"]["seed"] == 42 and doc["result"]["seed"] == 42


def test_threads_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("PLESSNER_LAB_THREADS", "2")
    code, _ = run(tmp_path, "probe", {})
    assert code == 0


@pytest.mark.parametrize("cfg", [
    {"function": {"name": "nope"}},
    {"bogus": 1},
    {"region": {"delta": 0.5, "eps": 0.7}},
    {"function": {"name": "blaschke", "params": [1.5]}},
    {"knobs": {"n_levels": 4}},
])
def test_validation_exit_2_no_files(tmp_path, cfg):
    cmd = "coarea" if "knobs" in cfg else "spencer"
    code, out = run(tmp_path, cmd, cfg)
    assert code == 2
    assert not out.exists()


def test_unreadable_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["probe", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert not (tmp_path / "o").exists()


def test_numeric_exit_3_no_files(tmp_path):
    code, out = run(tmp_path, "spencer", {"region": QF, "knobs": {"max_cells": 1000}})
    assert code == 3
    assert not out.exists()


def test_output_names(tmp_path):
    code, out = run(tmp_path, "probe", {"outputs": {"json": "p.json"}})
    assert code == 0 and (out / "p.json").exists()


def test_module_entry_point(tmp_path):
    env = dict(os.environ)
    r = subprocess.run([sys.executable, "-m", "plessner_lab", "corpus"], capture_output=True, text=True, env=env)
    assert r.returncode == 0 and "lacunary" in r.stdout
