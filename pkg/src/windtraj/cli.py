"""Command line front end.

Subcommands cover the full pipeline: plan a mission, fly a stored plan
through sampled wind, run a Monte Carlo scheme comparison, and a few
inspection utilities (wind sampling, pointwise power evaluation, the
closed-form reduction check, city export).

Exit codes: 0 on success, 2 for configuration problems (bad file, bad key,
malformed input CSV), 3 when the planner's solver fails.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .airlink import generate_city, save_city
from .bench import (ExperimentConfig, city_seed, mission_bounds,
                    run_experiment, wind_seed)
from .config import (DEFAULTS, ConfigError, as_float_list, as_int,
                     as_str_list, city_from_config, load_config,
                     online_from_config, planner_options,
                     scenario_from_config)
from .csvio import (CsvSchemaError, read_offline_plan, read_power_states,
                    write_convergence, write_flight_log, write_offline_plan,
                    write_power_breakdown, write_wind_samples)
from .offline import PlannerError, plan_offline
from .online import check_flight, fly_online
from .propulsion import (KinState, blade_power, induced_power, power,
                         reduce_3d, reduce_kappa, reduce_windless)
from .windfield import sample_trace, zero_trace


def _load_cfg(args) -> dict:
    if args.config is None:
        return dict(DEFAULTS)
    return load_config(args.config)


def _master_seed(args, cfg: dict) -> int:
    return args.seed if args.seed is not None else as_int(cfg,
                                                          "experiment.seed")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ------------------------------------------------------------- subcommands

def cmd_plan_offline(args) -> int:
    cfg = _load_cfg(args)
    scenario = scenario_from_config(cfg)
    out = _out_dir(args)
    t0 = time.perf_counter()
    plan = plan_offline(scenario, seed=_master_seed(args, cfg),
                        **planner_options(cfg))
    wall = time.perf_counter() - t0
    write_offline_plan(out / "offline_plan.csv", plan)
    write_convergence(out / "convergence.csv", plan.trace)
    print(f"planned {scenario.n_pos} way-points in {wall:.1f}s: "
          f"objective {plan.objective:.6e}, R_min {plan.r_min:.3f}, "
          f"energy {plan.trace[-1].energy:.0f} J, "
          f"{plan.trace[-1].outer_iter} outer iterations")
    print(f"wrote {out / 'offline_plan.csv'} and {out / 'convergence.csv'}")
    return 0


def cmd_run_online(args) -> int:
    cfg = _load_cfg(args)
    scenario = scenario_from_config(cfg)
    online = online_from_config(cfg)
    master = _master_seed(args, cfg)
    plan = read_offline_plan(args.plan, scenario)
    w_seed = args.wind_seed if args.wind_seed is not None \
        else wind_seed(master, 0, 0)
    c_seed = args.city_seed if args.city_seed is not None \
        else city_seed(master, 0, 0)
    if scenario.wind is None:
        trace = zero_trace(scenario.n_iv)
    else:
        trace = sample_trace(scenario.wind, scenario.n_iv, 1, seed=w_seed)
    params, margin = city_from_config(cfg)
    city = generate_city(params, mission_bounds(scenario, margin),
                         seed=c_seed)
    log = fly_online(plan, scenario, trace, online, city)
    violations = check_flight(log, plan, online)
    out = _out_dir(args)
    write_flight_log(out / "flight_log.csv", log)
    print(f"flew {scenario.n_iv} slots (wind seed {w_seed}, city seed "
          f"{c_seed}): energy {log.energy(scenario.slot_dt):.0f} J, "
          f"{int(log.fallback.sum())} fallback slots")
    print(f"wrote {out / 'flight_log.csv'}")
    if violations:
        for v in violations:
            print(f"envelope violation: {v}", file=sys.stderr)
        return 1
    return 0


def cmd_evaluate(args) -> int:
    cfg = _load_cfg(args)
    scenario = scenario_from_config(cfg)
    online = online_from_config(cfg)
    params, margin = city_from_config(cfg)
    workers = args.workers if args.workers is not None \
        else as_int(cfg, "experiment.workers")
    out = _out_dir(args)
    try:
        expcfg = ExperimentConfig(
            scenario=scenario, online=online,
            schemes=as_str_list(cfg, "experiment.schemes"),
            sweep_key=cfg["experiment.sweep"].strip(),
            sweep_values=as_float_list(cfg, "experiment.values"),
            repeats=as_int(cfg, "experiment.repeats"),
            seed=_master_seed(args, cfg), workers=workers,
            city_params=params, city_margin=margin, out_dir=out,
            planner=planner_options(cfg))
    except ValueError as exc:
        raise ConfigError(f"experiment: {exc}") from exc
    report = run_experiment(expcfg)
    for c in report.cells:
        tag = "" if c.sweep_value is None \
            else f" {report.sweep_key}={c.sweep_value:g}"
        note = " INCOMPLETE" if c.incomplete else ""
        print(f"{c.scheme:>9}{tag}: EE {c.ee_bpj_mean:.4g} bits/J, "
              f"energy {c.energy_j_mean:.0f} J, "
              f"min-user {c.throughput_bits_mean:.3e} bits "
              f"({c.n_runs - c.n_failed}/{c.n_runs} runs{note})")
    print(f"wrote {out / 'ee_summary.csv'}")
    if any(r.status.startswith("plan failed") for r in report.runs):
        print("planning failed for at least one cell", file=sys.stderr)
        return 3
    return 0


def cmd_sample_wind(args) -> int:
    cfg = _load_cfg(args)
    scenario = scenario_from_config(cfg)
    if scenario.wind is None:
        raise ConfigError("sample-wind needs wind.enabled = true")
    slots = args.slots if args.slots is not None else scenario.n_iv
    trace = sample_trace(scenario.wind, slots, args.rows,
                         seed=_master_seed(args, cfg))
    out = _out_dir(args)
    write_wind_samples(out / "wind_samples.csv", trace)
    print(f"wrote {args.rows} x {slots} samples to "
          f"{out / 'wind_samples.csv'}")
    return 0


def cmd_power_eval(args) -> int:
    cfg = _load_cfg(args)
    aero = scenario_from_config(cfg).aero
    states = read_power_states(args.states)
    breakdown = np.empty((states.shape[0], 5))
    for i, row in enumerate(states):
        state = KinState(row[0:3], row[3:6])
        p = power(state, np.array([row[6], row[7], 0.0]), aero)
        breakdown[i] = (p.p_blade, p.p_induced, p.p_climb, p.p_drag, p.total)
    out = _out_dir(args)
    write_power_breakdown(out / "power_breakdown.csv", states, breakdown)
    print(f"evaluated {states.shape[0]} states, "
          f"wrote {out / 'power_breakdown.csv'}")
    return 0


def cmd_reduce_check(args) -> int:
    cfg = _load_cfg(args)
    aero = scenario_from_config(cfg).aero
    rng = np.random.default_rng(_master_seed(args, cfg))
    n = args.count
    still = np.zeros(3)
    worst = {"windless": 0.0, "planar": 0.0, "steady3d": 0.0}
    for _ in range(n):
        v = rng.uniform(-20.0, 20.0, 3)
        a = rng.uniform(-5.0, 5.0, 3)
        exact = power(KinState(v, a), still, aero).total
        worst["windless"] = max(worst["windless"],
                                abs(reduce_windless(KinState(v, a), aero)
                                    - exact) / exact)
        flat_v = np.array([v[0], v[1], 0.0])
        flat_a = np.array([a[0], a[1], 0.0])
        exact = power(KinState(flat_v, flat_a), still, aero).total
        worst["planar"] = max(worst["planar"],
                              abs(reduce_kappa(KinState(flat_v, flat_a),
                                               aero) - exact) / exact)
        # the steady-3D form pins thrust to weight, so its reference is
        # the model at that thrust, not the full thrust balance
        vh2 = float(v[0] * v[0] + v[1] * v[1])
        pinned = (blade_power(aero.weight, vh2, aero)
                  + induced_power(aero.weight, vh2, aero)
                  + aero.weight * float(v[2])
                  + 0.5 * aero.rho * aero.S_FP * vh2 ** 1.5)
        worst["steady3d"] = max(worst["steady3d"],
                                abs(reduce_3d(v[0], v[1], v[2], aero)
                                    - pinned) / abs(pinned))
    ok = True
    for name, err in worst.items():
        status = "ok" if err <= 1e-9 else "FAIL"
        ok = ok and err <= 1e-9
        print(f"{name:>9}: max relative error {err:.3e} over {n} states "
              f"[{status}]")
    return 0 if ok else 1


def cmd_export_city(args) -> int:
    cfg = _load_cfg(args)
    scenario = scenario_from_config(cfg)
    params, margin = city_from_config(cfg)
    master = _master_seed(args, cfg)
    c_seed = args.city_seed if args.city_seed is not None \
        else city_seed(master, 0, 0)
    city = generate_city(params, mission_bounds(scenario, margin),
                         seed=c_seed)
    out = _out_dir(args)
    save_city(city, out / "city.txt")
    print(f"wrote {city.buildings.shape[0]} buildings (seed {c_seed}) to "
          f"{out / 'city.txt'}")
    return 0


# ------------------------------------------------------------------ driver

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None,
                        help="config file; omitted keys use defaults")
    common.add_argument("--seed", type=int, default=None,
                        help="master seed, overrides experiment.seed")
    common.add_argument("--out", type=Path, default=Path("."),
                        help="output directory")
    common.add_argument("--workers", type=int, default=None,
                        help="worker processes, overrides experiment.workers")

    parser = argparse.ArgumentParser(
        prog="windtraj", description="wind-aware relay mission toolkit",
        parents=[common])
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="subcommand")

    p = sub.add_parser("plan-offline", parents=[common],
                       help="plan a mission, writing plan and trace CSVs")
    p.set_defaults(func=cmd_plan_offline)

    p = sub.add_parser("run-online", parents=[common],
                       help="fly a stored plan with per-slot adaptation")
    p.add_argument("--plan", type=Path, required=True,
                   help="offline_plan.csv from plan-offline")
    p.add_argument("--wind-seed", type=int, default=None)
    p.add_argument("--city-seed", type=int, default=None)
    p.set_defaults(func=cmd_run_online)

    p = sub.add_parser("evaluate", parents=[common],
                       help="Monte Carlo scheme comparison over a sweep")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sample-wind", parents=[common],
                       help="draw wind traces to wind_samples.csv")
    p.add_argument("--rows", type=int, default=1,
                   help="independent trace rows")
    p.add_argument("--slots", type=int, default=None,
                   help="slots per row (default: mission slot count)")
    p.set_defaults(func=cmd_sample_wind)

    p = sub.add_parser("power-eval", parents=[common],
                       help="power breakdown for a CSV of kinematic states")
    p.add_argument("--states", type=Path, required=True,
                   help="CSV with columns vx,vy,vz,ax,ay,az,wx,wy")
    p.set_defaults(func=cmd_power_eval)

    p = sub.add_parser("reduce-check", parents=[common],
                       help="compare closed-form power reductions "
                            "against the full model")
    p.add_argument("--count", type=int, default=1000,
                   help="random states per reduction")
    p.set_defaults(func=cmd_reduce_check)

    p = sub.add_parser("export-city", parents=[common],
                       help="generate and save a synthetic city")
    p.add_argument("--city-seed", type=int, default=None)
    p.set_defaults(func=cmd_export_city)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CsvSchemaError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except PlannerError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
