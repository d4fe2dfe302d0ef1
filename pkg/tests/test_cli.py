"""Subprocess drives of every CLI subcommand and exit-code path."""
import subprocess
import sys

import numpy as np
import pytest

from windtraj import csvio
from windtraj.airlink import load_city
from windtraj.config import load_config, scenario_from_config
from windtraj.propulsion import KinState, power

BASE_CFG = """\
scenario.T0 = 30
scenario.Q_F = 200, 500, 100
scenario.K = 2
scenario.g_1 = 50, 450
scenario.g_2 = 150, 550
scenario.S = 3
wind.lambda = 8
wind.c = 2
wind.mu = 90
wind.kappa = 4
experiment.schemes = offline
experiment.repeats = 1
experiment.seed = 3
"""


def _run(*args):
    return subprocess.run([sys.executable, "-m", "windtraj",
                           *map(str, args)], capture_output=True, text=True)


@pytest.fixture(scope="module")
def ws(tmp_path_factory):
    """Workspace with a config file and one planned mission."""
    root = tmp_path_factory.mktemp("cli")
    cfg = root / "mission.cfg"
    cfg.write_text(BASE_CFG)
    plans = root / "plans"
    res = _run("plan-offline", "--config", cfg, "--seed", "3", "--out", plans)
    assert res.returncode == 0, res.stderr
    assert "objective" in res.stdout
    return root, cfg, plans


def test_plan_offline_outputs(ws):
    root, cfg, plans = ws
    scenario = scenario_from_config(load_config(cfg))
    plan = csvio.read_offline_plan(plans / "offline_plan.csv", scenario)
    assert plan.trajectory.positions.shape == (scenario.n_pos, 3)
    trace = csvio.read_convergence(plans / "convergence.csv")
    assert len(trace) >= 1
    assert trace[-1].outer_iter == len(trace) - 1


def test_run_online_flies_stored_plan(ws):
    root, cfg, plans = ws
    out = root / "fly"
    res = _run("run-online", "--config", cfg, "--seed", "3",
               "--plan", plans / "offline_plan.csv", "--out", out)
    assert res.returncode == 0, res.stderr
    assert "fallback" in res.stdout
    rows = csvio.read_csv(out / "flight_log.csv", "flight_log")
    scenario = scenario_from_config(load_config(cfg))
    assert len(rows) == scenario.n_pos
    assert rows[-1]["vx"] == ""          # no interval leaves the last point


def test_run_online_rejects_mismatched_mission(ws):
    root, cfg, plans = ws
    # without --config the mission defaults to 151 way-points; the stored
    # plan has 31, and that mismatch is a configuration error
    res = _run("run-online", "--plan", plans / "offline_plan.csv",
               "--out", root / "bad")
    assert res.returncode == 2
    assert "config error" in res.stderr


def test_evaluate_single_scheme(ws):
    root, cfg, plans = ws
    out = root / "eval"
    res = _run("evaluate", "--config", cfg, "--out", out)
    assert res.returncode == 0, res.stderr
    assert "bits/J" in res.stdout
    summary = csvio.read_csv(out / "ee_summary.csv", "ee_summary")
    assert len(summary) == 1 and summary[0]["scheme"] == "offline"
    assert summary[0]["n_failed"] == "0"
    manifest = csvio.read_csv(out / "manifest.csv", "manifest")
    assert len(manifest) == 1 and manifest[0]["status"] == "ok"
    assert not (out / "compare.csv").exists()   # needs two schemes


def test_sample_wind_deterministic(ws, tmp_path):
    root, cfg, plans = ws
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        res = _run("sample-wind", "--config", cfg, "--seed", "9",
                   "--rows", "2", "--slots", "5", "--out", out)
        assert res.returncode == 0, res.stderr
    assert ((a / "wind_samples.csv").read_bytes()
            == (b / "wind_samples.csv").read_bytes())
    rows = csvio.read_csv(a / "wind_samples.csv", "wind_samples")
    assert len(rows) == 10
    assert {r["scenario"] for r in rows} == {"0", "1"}


def test_sample_wind_needs_wind(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("wind.enabled = false\n")
    res = _run("sample-wind", "--config", cfg, "--out", tmp_path)
    assert res.returncode == 2
    assert "config error" in res.stderr


def test_power_eval_matches_library(tmp_path, aero):
    states = tmp_path / "states.csv"
    states.write_text("vx,vy,vz,ax,ay,az,wx,wy\n"
                      "10.0,0.0,1.0,0.5,0.0,0.0,3.0,-2.0\n")
    res = _run("power-eval", "--states", states, "--out", tmp_path)
    assert res.returncode == 0, res.stderr
    rows = csvio.read_csv(tmp_path / "power_breakdown.csv",
                          "power_breakdown")
    expected = power(KinState(np.array([10.0, 0.0, 1.0]),
                              np.array([0.5, 0.0, 0.0])),
                     np.array([3.0, -2.0, 0.0]), aero)
    # repr round-trips floats, so equality is exact
    assert float(rows[0]["P_total"]) == expected.total
    assert float(rows[0]["P_climb"]) == expected.p_climb


def test_power_eval_missing_file(tmp_path):
    res = _run("power-eval", "--states", tmp_path / "nope.csv",
               "--out", tmp_path)
    assert res.returncode == 2


def test_reduce_check_passes(tmp_path):
    res = _run("reduce-check", "--count", "40", "--out", tmp_path)
    assert res.returncode == 0, res.stdout + res.stderr
    assert res.stdout.count("[ok]") == 3


def test_export_city_loadable(ws, tmp_path):
    root, cfg, plans = ws
    res = _run("export-city", "--config", cfg, "--city-seed", "7",
               "--out", tmp_path)
    assert res.returncode == 0, res.stderr
    city = load_city(tmp_path / "city.txt")
    assert city.buildings.shape[0] > 0
    assert "buildings (seed 7)" in res.stdout


def test_config_errors_exit_2(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("scenario.typo = 1\n")
    res = _run("plan-offline", "--config", bad, "--out", tmp_path)
    assert res.returncode == 2
    assert "scenario.typo" in res.stderr
    res = _run("plan-offline", "--config", tmp_path / "absent.cfg",
               "--out", tmp_path)
    assert res.returncode == 2
    infeasible = tmp_path / "inf.cfg"
    infeasible.write_text("scenario.T0 = 20\n")   # span needs 25 s at cap
    res = _run("plan-offline", "--config", infeasible, "--out", tmp_path)
    assert res.returncode == 2
    assert "straight line infeasible" in res.stderr


def test_unknown_subcommand_exits_2():
    res = _run("frobnicate")
    assert res.returncode == 2
    assert "invalid choice" in res.stderr
