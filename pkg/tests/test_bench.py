"""Experiment harness: seed pairing, aggregation, files, determinism."""
import dataclasses
from pathlib import Path

import numpy as np
import pytest

from windtraj import bench
from windtraj.airlink import GroundUser
from windtraj.bench import (ExperimentConfig, RunResult, EEReport,
                            compare_schemes, run_experiment)
from windtraj.csvio import column, read_csv
from windtraj.offline import Scenario, plan_offline
from windtraj.online import OnlineConfig
from windtraj.windfield import WindStats


@pytest.fixture(scope="module")
def tiny(aero, channel):
    users = (GroundUser(id=1, position=np.array([50.0, 450.0])),
             GroundUser(id=2, position=np.array([150.0, 550.0])))
    wind = WindStats(lambda_scale=8.0, c_shape=2.0, mu_dir=90.0,
                     kappa_conc=4.0, h_ref=50.0, p_exp=0.5)
    return Scenario(duration=30.0, slot_dt=1.0,
                    q_start=np.array([0.0, 500.0, 100.0]),
                    q_end=np.array([200.0, 500.0, 100.0]),
                    v_h_max=40.0, v_v_max=20.0, h_min=50.0, h_max=300.0,
                    users=users, wind=wind, aero=aero, channel=channel,
                    n_samples=3)


@pytest.fixture(scope="module")
def windy_cfg(tiny):
    return ExperimentConfig(scenario=tiny,
                            online=OnlineConfig(eps_q=50.0, eps_v=20.0),
                            schemes=("windless", "offline", "oboa"),
                            sweep_key="eps_Q", sweep_values=(50.0,),
                            repeats=2, seed=3)


@pytest.fixture(scope="module")
def windy_run(windy_cfg, tmp_path_factory):
    out = tmp_path_factory.mktemp("expA")
    report = run_experiment(dataclasses.replace(windy_cfg, out_dir=out))
    return report, out


def _tree_bytes(root: Path) -> dict:
    return {p.relative_to(root).as_posix(): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


def test_config_validation(tiny):
    ok = dict(scenario=tiny, online=OnlineConfig(eps_q=50.0, eps_v=20.0))
    with pytest.raises(ValueError, match="nonempty"):
        ExperimentConfig(schemes=(), **ok)
    with pytest.raises(ValueError, match="unknown schemes"):
        ExperimentConfig(schemes=("oboa", "hover"), **ok)
    with pytest.raises(ValueError, match="duplicate"):
        ExperimentConfig(schemes=("oboa", "oboa"), **ok)
    with pytest.raises(ValueError, match="sweep key"):
        ExperimentConfig(sweep_key="breeze", **ok)
    with pytest.raises(ValueError, match="takes no values"):
        ExperimentConfig(sweep_values=(1.0,), **ok)
    with pytest.raises(ValueError, match="needs values"):
        ExperimentConfig(sweep_key="mu", **ok)
    with pytest.raises(ValueError, match="repeats"):
        ExperimentConfig(repeats=0, **ok)
    with pytest.raises(ValueError, match="workers"):
        ExperimentConfig(workers=0, **ok)
    still = dataclasses.replace(tiny, wind=None)
    with pytest.raises(ValueError, match="requires a wind"):
        ExperimentConfig(scenario=still,
                         online=OnlineConfig(eps_q=50.0, eps_v=20.0),
                         sweep_key="lambda", sweep_values=(4.0,))
    cfg = ExperimentConfig(sweep_key="mu", sweep_values=(90, 180), **ok)
    assert cfg.sweep_values == (90.0, 180.0)
    assert cfg.cells() == (90.0, 180.0)
    assert ExperimentConfig(**ok).cells() == (None,)


def test_seed_derivation_is_stable_and_disjoint():
    assert bench.plan_seed(3, 0) == bench.plan_seed(3, 0)
    seeds = {bench.plan_seed(3, 0), bench.plan_seed(3, 1),
             bench.wind_seed(3, 0, 0), bench.wind_seed(3, 0, 1),
             bench.wind_seed(3, 1, 0), bench.city_seed(3, 0, 0),
             bench.city_seed(3, 0, 1)}
    assert len(seeds) == 7
    assert bench.wind_seed(4, 0, 0) != bench.wind_seed(3, 0, 0)


def test_apply_sweep_targets_one_knob(tiny):
    online = OnlineConfig(eps_q=50.0, eps_v=20.0)
    cfg = ExperimentConfig(scenario=tiny, online=online,
                           sweep_key="mu", sweep_values=(45.0,))
    sc, oc = bench.apply_sweep(cfg, 45.0)
    assert sc.wind.mu_dir == 45.0 and oc is online
    assert sc.wind.lambda_scale == tiny.wind.lambda_scale
    cfg = ExperimentConfig(scenario=tiny, online=online,
                           sweep_key="eps_Q", sweep_values=(25.0,))
    sc, oc = bench.apply_sweep(cfg, 25.0)
    assert sc is tiny and oc.eps_q == 25.0 and oc.eps_v == 20.0
    sc, oc = bench.apply_sweep(cfg, None)
    assert sc is tiny and oc is online


def test_mission_bounds_cover_users_and_endpoints(tiny):
    xmin, xmax, ymin, ymax = bench.mission_bounds(tiny, 100.0)
    assert (xmin, xmax) == (-100.0, 300.0)
    assert (ymin, ymax) == (350.0, 650.0)


def test_windless_zero_wind_matches_plan_objective(tiny):
    still = dataclasses.replace(tiny, wind=None)
    cfg = ExperimentConfig(scenario=still,
                           online=OnlineConfig(eps_q=50.0, eps_v=20.0),
                           schemes=("windless",), repeats=3, seed=5)
    report = run_experiment(cfg)
    plan = plan_offline(still, seed=bench.plan_seed(5, 0))
    cell = report.cell("windless")
    assert cell.n_runs == 3 and cell.n_failed == 0 and not cell.incomplete
    # without wind, every repeat flies the plan exactly: the evaluated EE is
    # the planner's own objective and has zero spread
    assert cell.ee_ratio_mean == pytest.approx(plan.objective, rel=1e-9)
    assert cell.ee_ratio_std == 0.0
    assert cell.energy_j_std == 0.0
    assert np.isfinite(cell.ee_bpj_mean) and cell.ee_bpj_mean > 0.0
    for run in report.runs:
        assert run.status == "ok"
        assert run.ee_ratio == pytest.approx(plan.objective, rel=1e-9)


def test_windy_experiment_emits_complete_file_set(windy_run):
    report, out = windy_run
    for kind in ("windless", "offline"):
        assert (out / "plans" / f"{kind}-eps_Q50.offline_plan.csv").exists()
        assert (out / "plans" / f"{kind}-eps_Q50.convergence.csv").exists()
    logs = sorted(p.name for p in (out / "runs").iterdir())
    assert logs == sorted(f"{s}-eps_Q50-r{r}.flight_log.csv"
                          for s in report.schemes for r in range(2))
    summary = read_csv(out / "ee_summary.csv", "ee_summary")
    assert [r["scheme"] for r in summary] == ["windless", "offline", "oboa"]
    assert all(r["sweep_key"] == "eps_Q" and r["sweep_value"] == "50.0"
               for r in summary)
    assert (out / "compare.csv").exists()
    manifest = read_csv(out / "manifest.csv", "manifest")
    assert len(manifest) == 6
    assert all(m["status"] == "ok" for m in manifest)
    for m in manifest:
        rep = int(m["rep"])
        assert int(m["plan_seed"]) == bench.plan_seed(3, 0)
        assert int(m["wind_seed"]) == bench.wind_seed(3, 0, rep)
        assert int(m["city_seed"]) == bench.city_seed(3, 0, rep)
        assert (out / "runs" / m["flight_log"]).exists()


def test_runs_are_seed_paired_across_schemes(windy_run):
    report, _ = windy_run
    by_rep = {}
    for run in report.runs:
        by_rep.setdefault(run.rep, []).append(run)
    for rep, runs in by_rep.items():
        assert len({r.wind_seed for r in runs}) == 1
        assert len({r.city_seed for r in runs}) == 1
    # adaptation pays off on energy even in this toy mission
    assert (report.cell("oboa", 50.0).energy_j_mean
            < report.cell("offline", 50.0).energy_j_mean)
    assert report.cell("oboa", 50.0).fallback_total == 0


def test_worker_count_does_not_change_bytes(windy_cfg, windy_run,
                                            tmp_path_factory):
    _, out_a = windy_run
    out_b = tmp_path_factory.mktemp("expB")
    run_experiment(dataclasses.replace(windy_cfg, out_dir=out_b, workers=2))
    a, b = _tree_bytes(out_a), _tree_bytes(out_b)
    assert sorted(a) == sorted(b)
    assert all(a[k] == b[k] for k in a)


def _stats_from(scheme, runs):
    return bench._aggregate(scheme, None, [r for r in runs
                                           if r.scheme == scheme])


def _result(scheme, rep, ee, status="ok"):
    return RunResult(scheme=scheme, sweep_value=None, rep=rep, wind_seed=0,
                     city_seed=0, status=status, ee_bpj=ee)


def test_compare_ranking_and_paired_fractions():
    runs = [_result("oboa", 0, 2.0), _result("oboa", 1, 2.0),
            _result("offline", 0, 2.0), _result("offline", 1, 2.0),
            _result("windless", 0, 1.0), _result("windless", 1, 3.0)]
    schemes = ("oboa", "offline", "windless")
    report = EEReport(sweep_key="none", schemes=schemes, repeats=2, seed=0,
                      cells=tuple(_stats_from(s, runs) for s in schemes),
                      runs=tuple(runs))
    (row,) = compare_schemes(report)
    assert row.ranking == "oboa=offline=windless"   # all means equal 2.0
    assert row.frac_oboa_ge_offline == 1.0
    assert row.frac_offline_ge_windless == 0.5
    assert row.frac_chain == 0.5
    (row,) = compare_schemes(report, metric="ee_ratio")
    assert row.metric == "ee_ratio"


def test_compare_tolerates_missing_and_failed_runs(tmp_path):
    runs = [_result("oboa", 0, 2.0), _result("oboa", 1, 4.0),
            _result("offline", 0, 1.0), _result("offline", 1, 1.0),
            _result("windless", 0, float("nan"), status="failed: solver"),
            _result("windless", 1, float("nan"), status="failed: solver")]
    schemes = ("oboa", "offline", "windless")
    report = EEReport(sweep_key="none", schemes=schemes, repeats=2, seed=0,
                      cells=tuple(_stats_from(s, runs) for s in schemes),
                      runs=tuple(runs))
    (row,) = compare_schemes(report)
    assert row.ranking == "oboa>offline>windless"   # NaN mean sorts last
    assert row.frac_oboa_ge_offline == 1.0
    assert row.frac_offline_ge_windless is None
    assert row.frac_chain is None
    bench.write_compare(tmp_path / "c.csv", [row], "none")
    (back,) = read_csv(tmp_path / "c.csv", "compare")
    assert back["frac_offline_ge_windless"] == ""
    assert back["frac_oboa_ge_offline"] == "1.0"
    failed = report.cells[2]
    assert failed.n_failed == 2 and failed.incomplete
    assert np.isnan(failed.ee_bpj_mean)
