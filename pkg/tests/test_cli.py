import json
import os
import subprocess
import sys

import numpy as np
import pytest

from lfdkit.cli import main
from lfdkit.core import load_demonstration_set, load_model, read_demonstration

FAST = ["--kmin", "2", "--kmax", "3"]


def run(*args):
    return main([str(a) for a in args])


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert run("synth", "--out", root / "demos", "--dof", 2, "--count", 4, "--seed", 5) == 0
    assert run("train", "--demos", root / "demos", "--model", root / "m.json",
               "--out", root / "gmr.csv", "--seed", 1, *FAST) == 0
    return root


def test_synth_writes_demos(workdir):
    ds = load_demonstration_set(workdir / "demos")
    assert len(ds) == 4 and ds.dof == 2


def test_train_report(workdir, capsys):
    assert run("train", "--demos", workdir / "demos", "--model", workdir / "m2.json",
               "--seed", 1, *FAST) == 0
    out = capsys.readouterr()
    keys = [line.split(",")[0] for line in out.out.splitlines()]
    for key in ("kstar", "alpha_z", "N", "bo_calls"):
        assert key in keys
    assert "train_wall_time_s=" in out.err
    model = load_model(workdir / "m2.json")
    assert model.dof == 2 and model.provenance["demonstrations"] == 4
    # the GMR dump uses the demonstration format
    gmr = read_demonstration(workdir / "gmr.csv")
    assert gmr.joints.shape[1] == 2


def test_reproduce_self_consistency(workdir, capsys):
    assert run("reproduce", "--model", workdir / "m.json", "--out", workdir / "r.csv") == 0
    vals = dict(line.split(",") for line in capsys.readouterr().out.splitlines()[1:])
    assert float(vals["gmcc"]) >= 0.99
    assert float(vals["e_j"]) <= 0.5
    traj = read_demonstration(workdir / "r.csv")
    assert len(traj) == int(vals["steps"])


def test_reproduce_noised_start_keeps_shape(workdir, capsys):
    model = load_model(workdir / "m.json")
    start = model.gmr.means[0] + np.random.default_rng(0).normal(0, 20, 2)
    goal = model.gmr.means[-1]
    assert run("reproduce", "--model", workdir / "m.json",
               "--start", ",".join(str(float(v)) for v in start), "--goal", ",".join(str(float(v)) for v in goal)) == 0
    vals = dict(line.split(",") for line in capsys.readouterr().out.splitlines()[1:])
    assert float(vals["gmcc"]) >= 0.99


def test_reproduce_constant_when_forcing_disabled(workdir, tmp_path, capsys):
    doc = json.loads((workdir / "m.json").read_text())
    for s in doc["springs"]:
        s["forcing_enabled"] = False
    (tmp_path / "flat.json").write_text(json.dumps(doc))
    assert run("reproduce", "--model", tmp_path / "flat.json", "--start", "7,-3", "--goal", "7,-3",
               "--out", tmp_path / "flat.csv") == 0
    traj = read_demonstration(tmp_path / "flat.csv")
    assert np.all(traj.joints == [7.0, -3.0])


def test_reproduce_dimension_mismatch(workdir, capsys):
    assert run("reproduce", "--model", workdir / "m.json", "--start", "1,2,3") == 1
    assert "error:" in capsys.readouterr().err


def test_evaluate_zero_noise_matches_reproduce(workdir, capsys):
    assert run("reproduce", "--model", workdir / "m.json") == 0
    rep = dict(line.split(",") for line in capsys.readouterr().out.splitlines()[1:])
    assert run("evaluate", "--model", workdir / "m.json", "--noise-deg", "0", "--reps", 1) == 0
    header, row = capsys.readouterr().out.splitlines()
    cols = dict(zip(header.split(","), row.split(",")))
    assert cols["gmcc_mean"] == rep["gmcc"] and cols["ej_mean"] == rep["e_j"]


def test_compare(workdir, capsys):
    out = workdir / "cmp.csv"
    assert run("compare", "--demos", workdir / "demos", "--seed", 1, "--out", out, *FAST) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "method,alpha_z,N,minimum,calls,rel_gap"
    gs, bo = (dict(zip(lines[0].split(","), line.split(","))) for line in lines[1:])
    assert int(gs["calls"]) == 3750
    assert int(bo["calls"]) <= 75
    assert float(bo["rel_gap"]) <= 0.01


def test_empty_directory_fails(tmp_path, capsys):
    (tmp_path / "empty").mkdir()
    assert run("train", "--demos", tmp_path / "empty", "--model", tmp_path / "m.json") == 1
    assert "error:" in capsys.readouterr().err
    assert not (tmp_path / "m.json").exists()


def test_seed_from_environment(workdir, monkeypatch, capsys):
    monkeypatch.setenv("LFDKIT_SEED", "3")
    assert run("evaluate", "--model", workdir / "m.json", "--reps", 3) == 0
    env_out = capsys.readouterr().out
    assert run("evaluate", "--model", workdir / "m.json", "--reps", 3, "--seed", 3) == 0
    assert capsys.readouterr().out == env_out


def test_entry_point_runs(workdir):
    proc = subprocess.run([sys.executable, "-m", "lfdkit.cli", "reproduce", "--model",
                           str(workdir / "m.json")], capture_output=True, text=True,
                          env={**os.environ})
    assert proc.returncode == 0 and proc.stdout.startswith("key,value")
