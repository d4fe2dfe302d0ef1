"""Monte Carlo experiment harness.

An experiment sweeps one wind or adaptation parameter across a list of
values, plans each scheme once per value, and then flies every scheme
through the same randomized wind traces and synthetic cities so scheme
comparisons are paired by seed. Three schemes exist:

* ``windless``: planned in still air, flown open loop through real wind.
* ``offline``: planned against the wind statistics, flown open loop.
* ``oboa``: the offline plan flown with per-slot online adaptation.

Every random draw comes from a seed derived with ``numpy``'s SeedSequence
from the experiment's master seed and the cell coordinates, recorded in the
manifest. Repeats may run across worker processes; aggregation sorts by
cell and repeat index, so the report and all emitted files are byte
identical regardless of worker count.

Two energy-efficiency figures are reported per run. ``ee_ratio`` is the
planning objective re-evaluated on the flown trajectory under the wind it
actually met: the scheduled floor-rate sum of the worst user over the
summed propulsion bound (the bound, not the exact power, because that is
the ratio the planner maximizes; on a windless evaluation it reproduces
the plan's own objective). ``ee_bpj`` is fully realized bits per joule of
exact-model energy, using the geometric city line-of-sight rates. The
first is the quantity the planner optimizes; the second is what a
deployment would measure.
"""
from __future__ import annotations

import concurrent.futures as _futures
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .airlink import CityGenParams, generate_city
from .csvio import (write_csv, write_convergence, write_flight_log,
                    write_offline_plan)
from .offline import (OfflinePlan, PlannerError, Scenario, Trajectory,
                      exact_objective, plan_offline)
from .online import (OnlineConfig, angular_deviation, fly_online,
                     fly_open_loop, min_user_throughput)
from .windfield import sample_trace, zero_trace

SCHEMES = ("windless", "offline", "oboa")
SWEEP_KEYS = ("none", "mu", "lambda", "kappa", "c", "eps_Q")

_WIND_FIELDS = {"mu": "mu_dir", "lambda": "lambda_scale",
                "kappa": "kappa_conc", "c": "c_shape"}


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: Scenario
    online: OnlineConfig
    schemes: tuple = SCHEMES
    sweep_key: str = "none"
    sweep_values: tuple = ()
    repeats: int = 50
    seed: int = 0
    workers: int = 1
    city_params: CityGenParams = field(default_factory=CityGenParams)
    city_margin: float = 100.0
    out_dir: object = None          # Path-like; None keeps everything in memory
    keep_logs: bool = True
    planner: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "schemes", tuple(self.schemes))
        object.__setattr__(self, "sweep_values",
                           tuple(float(v) for v in self.sweep_values))
        if not self.schemes:
            raise ValueError("scheme set must be nonempty")
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad:
            raise ValueError(f"unknown schemes: {bad}")
        if len(set(self.schemes)) != len(self.schemes):
            raise ValueError("duplicate schemes")
        if self.sweep_key not in SWEEP_KEYS:
            raise ValueError(f"sweep key must be one of {SWEEP_KEYS}")
        if self.sweep_key == "none":
            if self.sweep_values:
                raise ValueError("sweep 'none' takes no values")
        elif not self.sweep_values:
            raise ValueError(f"sweep {self.sweep_key!r} needs values")
        if self.repeats < 1:
            raise ValueError("repeats must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if self.sweep_key in _WIND_FIELDS and self.scenario.wind is None:
            raise ValueError(f"sweep over {self.sweep_key} requires a wind "
                             "model on the scenario")

    def cells(self) -> tuple:
        """Sweep values, with a lone None for a sweep-free experiment."""
        return self.sweep_values if self.sweep_key != "none" else (None,)


@dataclass(frozen=True)
class RunResult:
    scheme: str
    sweep_value: object
    rep: int
    wind_seed: int
    city_seed: int
    status: str                 # "ok" or a failure note
    ee_ratio: float = float("nan")
    ee_bpj: float = float("nan")
    energy_j: float = float("nan")
    throughput_bits: float = float("nan")
    altitude_m: float = float("nan")
    angdev_deg: float = float("nan")
    fallback: int = 0


@dataclass(frozen=True)
class CellStats:
    scheme: str
    sweep_value: object
    n_runs: int
    n_failed: int
    incomplete: bool
    ee_ratio_mean: float
    ee_ratio_std: float
    ee_bpj_mean: float
    ee_bpj_std: float
    energy_j_mean: float
    energy_j_std: float
    throughput_bits_mean: float
    throughput_bits_std: float
    altitude_m_mean: float
    altitude_m_std: float
    angdev_deg_mean: float
    angdev_deg_std: float
    fallback_total: int


@dataclass(frozen=True)
class EEReport:
    sweep_key: str
    schemes: tuple
    repeats: int
    seed: int
    cells: tuple                # CellStats, ordered by (value, scheme)
    runs: tuple                 # RunResult, ordered by (value, scheme, rep)

    def cell(self, scheme: str, value=None) -> CellStats:
        for c in self.cells:
            if c.scheme == scheme and _same_value(c.sweep_value, value):
                return c
        raise KeyError((scheme, value))


@dataclass(frozen=True)
class CompareRow:
    sweep_value: object
    metric: str
    ranking: str                # scheme names joined by > or =
    frac_oboa_ge_offline: object
    frac_offline_ge_windless: object
    frac_chain: object


def _same_value(a, b) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return float(a) == float(b)


# ------------------------------------------------------------------- seeds

def _derived_seed(master: int, *key) -> int:
    ss = np.random.SeedSequence(entropy=master, spawn_key=tuple(key))
    return int(ss.generate_state(1, np.uint32)[0])


def plan_seed(master: int, value_idx: int) -> int:
    return _derived_seed(master, 0, value_idx)


def wind_seed(master: int, value_idx: int, rep: int) -> int:
    return _derived_seed(master, 1, value_idx, rep)


def city_seed(master: int, value_idx: int, rep: int) -> int:
    return _derived_seed(master, 2, value_idx, rep)


# ------------------------------------------------------------ sweep points

def apply_sweep(config: ExperimentConfig, value) -> tuple:
    """(scenario, online config) at one sweep point."""
    if value is None:
        return config.scenario, config.online
    if config.sweep_key == "eps_Q":
        return config.scenario, dataclasses.replace(config.online,
                                                    eps_q=float(value))
    wind = dataclasses.replace(config.scenario.wind,
                               **{_WIND_FIELDS[config.sweep_key]: float(value)})
    return dataclasses.replace(config.scenario, wind=wind), config.online


def mission_bounds(scenario: Scenario, margin: float) -> tuple:
    """Ground box covering endpoints and users, padded by margin metres."""
    xy = np.vstack([scenario.q_start[:2], scenario.q_end[:2],
                    scenario.user_xy()])
    return (float(xy[:, 0].min() - margin), float(xy[:, 0].max() + margin),
            float(xy[:, 1].min() - margin), float(xy[:, 1].max() + margin))


# -------------------------------------------------------------- single run

def _evaluate_run(scheme: str, plan: OfflinePlan, scenario: Scenario,
                  online: OnlineConfig, city_params: CityGenParams,
                  bounds: tuple, w_seed: int, c_seed: int,
                  sweep_value, rep: int) -> RunResult:
    if scenario.wind is None:
        trace = zero_trace(scenario.n_iv)
    else:
        trace = sample_trace(scenario.wind, scenario.n_iv, 1, seed=w_seed)
    city = generate_city(city_params, bounds, seed=c_seed)
    if scheme == "oboa":
        log = fly_online(plan, scenario, trace, online, city)
    else:
        log = fly_open_loop(plan, scenario, trace, city)
    energy = log.energy(scenario.slot_dt)
    ev = exact_objective(Trajectory(log.positions, scenario.slot_dt),
                         plan.schedule, log.wind_vec[None, :, :], scenario)
    bits = min_user_throughput(log, scenario.n_users, scenario.channel.B,
                               scenario.slot_dt)
    dev = angular_deviation(log)
    dev = dev[~np.isnan(dev)]            # all-NaN on a windless evaluation
    angdev = float(dev.mean()) if dev.size else float("nan")
    return RunResult(scheme=scheme, sweep_value=sweep_value, rep=rep,
                     wind_seed=w_seed, city_seed=c_seed, status="ok",
                     ee_ratio=ev.objective,
                     ee_bpj=bits / energy if energy > 0 else float("nan"),
                     energy_j=energy, throughput_bits=bits,
                     altitude_m=float(log.positions[:, 2].mean()),
                     angdev_deg=angdev,
                     fallback=int(log.fallback.sum())), log


def _run_task(task):
    (scheme, plan, scenario, online, city_params, bounds, w_seed, c_seed,
     value, rep, log_path) = task
    try:
        result, log = _evaluate_run(scheme, plan, scenario, online,
                                    city_params, bounds, w_seed, c_seed,
                                    value, rep)
    except Exception as exc:                       # recorded, never fatal
        return RunResult(scheme=scheme, sweep_value=value, rep=rep,
                         wind_seed=w_seed, city_seed=c_seed,
                         status=f"failed: {exc}")
    if log_path is not None:
        write_flight_log(log_path, log)
    return result


# -------------------------------------------------------------- experiment

def _cell_slug(sweep_key: str, value) -> str:
    return "base" if value is None else f"{sweep_key}{value:g}"


def _aggregate(scheme, value, results) -> CellStats:
    ok = [r for r in results if r.status == "ok"]

    def stats(name):
        vals = np.array([getattr(r, name) for r in ok])
        vals = vals[~np.isnan(vals)] if vals.size else vals
        if not vals.size:
            return float("nan"), float("nan")
        return float(vals.mean()), float(vals.std())

    fields = {}
    for name in ("ee_ratio", "ee_bpj", "energy_j", "throughput_bits",
                 "altitude_m", "angdev_deg"):
        fields[f"{name}_mean"], fields[f"{name}_std"] = stats(name)
    return CellStats(scheme=scheme, sweep_value=value, n_runs=len(results),
                     n_failed=len(results) - len(ok),
                     incomplete=len(ok) < len(results),
                     fallback_total=sum(r.fallback for r in ok), **fields)


def run_experiment(config: ExperimentConfig) -> EEReport:
    out = Path(config.out_dir) if config.out_dir is not None else None
    if out is not None:
        (out / "plans").mkdir(parents=True, exist_ok=True)
        if config.keep_logs:
            (out / "runs").mkdir(exist_ok=True)
    bounds = mission_bounds(config.scenario, config.city_margin)

    tasks, manifest, plan_failures = [], [], {}
    for vi, value in enumerate(config.cells()):
        scenario_v, online_v = apply_sweep(config, value)
        p_seed = plan_seed(config.seed, vi)
        slug = _cell_slug(config.sweep_key, value)
        plans = {}
        for kind, sc_plan in (("windless",
                               dataclasses.replace(scenario_v, wind=None)),
                              ("offline", scenario_v)):
            if kind == "windless" and "windless" not in config.schemes:
                continue
            if kind == "offline" and not ({"offline", "oboa"}
                                          & set(config.schemes)):
                continue
            try:
                plans[kind] = plan_offline(sc_plan, seed=p_seed,
                                           **config.planner)
            except PlannerError as exc:
                plan_failures[(kind, value)] = str(exc)
                continue
            if out is not None:
                write_offline_plan(out / "plans" /
                                   f"{kind}-{slug}.offline_plan.csv",
                                   plans[kind])
                write_convergence(out / "plans" /
                                  f"{kind}-{slug}.convergence.csv",
                                  plans[kind].trace)
        for scheme in config.schemes:
            kind = "windless" if scheme == "windless" else "offline"
            for rep in range(config.repeats):
                w_seed = wind_seed(config.seed, vi, rep)
                c_seed = city_seed(config.seed, vi, rep)
                log_name = f"{scheme}-{slug}-r{rep}.flight_log.csv"
                log_path = (out / "runs" / log_name
                            if out is not None and config.keep_logs else None)
                manifest.append((scheme, config.sweep_key,
                                 value if value is not None else None,
                                 rep, p_seed, w_seed, c_seed, None,
                                 log_name if log_path is not None else None))
                if (kind, value) in plan_failures:
                    tasks.append(RunResult(
                        scheme=scheme, sweep_value=value, rep=rep,
                        wind_seed=w_seed, city_seed=c_seed,
                        status="plan failed: " + plan_failures[(kind, value)]))
                else:
                    tasks.append((scheme, plans[kind], scenario_v, online_v,
                                  config.city_params, bounds, w_seed, c_seed,
                                  value, rep, log_path))

    pending = [(i, t) for i, t in enumerate(tasks) if isinstance(t, tuple)]
    results = [t for t in tasks]
    if config.workers == 1 or not pending:
        for i, task in pending:
            results[i] = _run_task(task)
    else:
        with _futures.ProcessPoolExecutor(config.workers) as pool:
            done = pool.map(_run_task, [t for _, t in pending])
            for (i, _), res in zip(pending, done):
                results[i] = res

    cells = []
    for value in config.cells():
        for scheme in config.schemes:
            group = [r for r in results if r.scheme == scheme
                     and _same_value(r.sweep_value, value)]
            cells.append(_aggregate(scheme, value, group))
    report = EEReport(sweep_key=config.sweep_key, schemes=config.schemes,
                      repeats=config.repeats, seed=config.seed,
                      cells=tuple(cells), runs=tuple(results))
    if out is not None:
        _write_report_files(out, config, report, manifest, results)
    return report


def _write_report_files(out: Path, config: ExperimentConfig,
                        report: EEReport, manifest, results) -> None:
    rows = []
    for c in report.cells:
        rows.append((c.scheme, report.sweep_key,
                     c.sweep_value, c.n_runs, c.n_failed, c.incomplete,
                     c.ee_ratio_mean, c.ee_ratio_std,
                     c.ee_bpj_mean, c.ee_bpj_std,
                     c.energy_j_mean, c.energy_j_std,
                     c.throughput_bits_mean, c.throughput_bits_std,
                     c.altitude_m_mean, c.altitude_m_std,
                     c.angdev_deg_mean, c.angdev_deg_std,
                     c.fallback_total))
    write_csv(out / "ee_summary.csv", "ee_summary", rows)
    write_csv(out / "manifest.csv", "manifest",
              [(m[0], m[1], m[2], m[3], m[4], m[5], m[6], r.status, m[8])
               for m, r in zip(manifest, results)])
    if len(report.schemes) >= 2:
        write_compare(out / "compare.csv", compare_schemes(report),
                      report.sweep_key)


def compare_schemes(report: EEReport, metric: str = "ee_bpj") -> tuple:
    """Per sweep value, rank schemes by mean EE with paired-seed counts."""
    rows = []
    values = []
    for c in report.cells:
        if not any(_same_value(c.sweep_value, v) for v in values):
            values.append(c.sweep_value)
    for value in values:
        means = {}
        for scheme in report.schemes:
            means[scheme] = getattr(report.cell(scheme, value),
                                    f"{metric}_mean")
        order = sorted(means, reverse=True,
                       key=lambda s: (means[s]
                                      if not np.isnan(means[s]) else -np.inf))
        parts = [order[0]]
        for prev, cur in zip(order, order[1:]):
            parts.append("=" if means[prev] == means[cur] else ">")
            parts.append(cur)
        ranking = "".join(parts)

        def paired_frac(hi, lo):
            if hi not in report.schemes or lo not in report.schemes:
                return None
            pairs = []
            for rep in range(report.repeats):
                a = [r for r in report.runs if r.scheme == hi and r.rep == rep
                     and _same_value(r.sweep_value, value)]
                b = [r for r in report.runs if r.scheme == lo and r.rep == rep
                     and _same_value(r.sweep_value, value)]
                if a and b and a[0].status == "ok" and b[0].status == "ok":
                    pairs.append(getattr(a[0], metric) >= getattr(b[0], metric))
            return float(np.mean(pairs)) if pairs else None

        f_oo = paired_frac("oboa", "offline")
        f_ow = paired_frac("offline", "windless")
        f_chain = None
        if f_oo is not None and f_ow is not None:
            both = []
            for rep in range(report.repeats):
                runs = {r.scheme: r for r in report.runs if r.rep == rep
                        and _same_value(r.sweep_value, value)
                        and r.status == "ok"}
                if {"oboa", "offline", "windless"} <= set(runs):
                    both.append(
                        getattr(runs["oboa"], metric)
                        >= getattr(runs["offline"], metric)
                        >= getattr(runs["windless"], metric))
            f_chain = float(np.mean(both)) if both else None
        rows.append(CompareRow(sweep_value=value, metric=metric,
                               ranking=ranking,
                               frac_oboa_ge_offline=f_oo,
                               frac_offline_ge_windless=f_ow,
                               frac_chain=f_chain))
    return tuple(rows)


def write_compare(path, rows, sweep_key: str = "") -> None:
    write_csv(path, "compare",
              [(sweep_key, r.sweep_value, r.metric, r.ranking,
                r.frac_oboa_ge_offline, r.frac_offline_ge_windless,
                r.frac_chain) for r in rows])
