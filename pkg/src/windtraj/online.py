"""Per-slot velocity re-planning against measured wind.

The flight follows the offline plan inside a deviation tube: at each slot
the UAV measures the wind at its own altitude, minimizes the convex
propulsion bound over its next velocity, and integrates forward. Three
norm constraints tether the flight to the plan: next position within
`eps_q` of the planned way-point, velocity within `eps_v` of the planned
velocity, and distance-to-goal no worse than the plan's. The last one
forces exact arrival because the plan's own terminal distance is zero.

Degenerate tolerances short-circuit the solver: `eps_v = 0` pins the
planned velocity, `eps_q = 0` pins the planned way-points, and the final
slot is always pinned to the goal since its progress radius is zero.
Pinned positions are assigned, not integrated, so the logged flight
satisfies the corresponding equalities exactly in floating point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .airlink import los_blocked, realized_rate
from .convex import ProgramBuilder, solve
from .offline.exact import state_slacks
from .offline.scenario import OfflinePlan, Scenario
from .offline.surrogate import _IntervalModel, build_slack_constraints
from .propulsion import KinState, power
from .windfield import WindTrace, wind_vector

__all__ = ["OnlineConfig", "FlightLog", "adapt_slot", "fly_online",
           "fly_open_loop", "check_flight", "angular_deviation",
           "min_user_throughput"]

_XY = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])


@dataclass(frozen=True)
class OnlineConfig:
    eps_q: float = 100.0        # position deviation tolerance, m
    eps_v: float = 20.0         # velocity deviation tolerance, m/s
    eps3: float = 1e-3          # per-slot relative convergence threshold
    sca_cap: int = 1            # re-linearization passes per slot
    enforce_caps: bool = True   # speed caps + altitude band as safety rails

    def __post_init__(self) -> None:
        if self.eps_q < 0.0 or self.eps_v < 0.0:
            raise ValueError("deviation tolerances must be nonnegative")
        if self.sca_cap < 1:
            raise ValueError("sca_cap must be at least 1")


@dataclass(frozen=True)
class FlightLog:
    """One flown mission; motion fields are per interval, communication
    fields per way-point."""

    positions: np.ndarray       # (n_pos, 3)
    velocities: np.ndarray      # (n_iv, 3)
    wind_vref: np.ndarray       # (n_iv,) reference-altitude speed, m/s
    wind_beta: np.ndarray       # (n_iv,) direction, deg
    wind_vec: np.ndarray        # (n_iv, 3) resolved at the flown altitude
    power: np.ndarray           # (n_iv,) exact electrical model, W
    scheduled: np.ndarray       # (n_pos,) user index, -1 when idle
    rate: np.ndarray            # (n_pos,) realized spectral eff., b/s/Hz
    los: np.ndarray             # (n_pos,) geometric line-of-sight flag
    fallback: np.ndarray        # (n_iv,) slot solved by the fallback path

    def energy(self, slot_dt: float) -> float:
        return float(self.power.sum()) * slot_dt


def _resolve_wind(trace: WindTrace, row: int, slot: int, z: float,
                  stats) -> np.ndarray:
    s = trace.sample(row, slot)
    if stats is None:
        if s.v_ref != 0.0:
            raise ValueError("non-zero wind trace requires wind stats")
        return np.zeros(3)
    return wind_vector(s, z, stats)


def _slot_program(q_now, q_off_next, v_off, v_prev, wind, q_final,
                  radius, v_t, scenario: Scenario, config: OnlineConfig):
    dt = scenario.slot_dt
    b = ProgramBuilder()
    v = b.add_var("v", 3)
    eye = np.eye(3)
    b.add_norm_le([(v, dt * eye)], q_now - q_off_next, [], config.eps_q)
    b.add_norm_le([(v, eye)], -v_off, [], config.eps_v)
    b.add_norm_le([(v, dt * eye)], q_now - q_final, [], radius)
    if config.enforce_caps:
        b.add_norm_le([(v, _XY)], np.zeros(2), [], scenario.v_h_max)
        col = np.array([[0.0, 0.0, 1.0]])
        b.add_ineq([(v, col)], [scenario.v_v_max])
        b.add_ineq([(v, -col)], [scenario.v_v_max])
        b.add_ineq([(v, dt * col)], [scenario.h_max - q_now[2]])
        b.add_ineq([(v, -dt * col)], [q_now[2] - scenario.h_min])

    acc_t = (v_t - v_prev) / dt
    tight = state_slacks(v_t[None, :], acc_t[None, :], wind[None, None, :],
                         scenario.aero)
    model = _IntervalModel([(v, eye)], np.zeros(3),
                           [(v, eye / dt)], -v_prev / dt,
                           [[(v, eye)]], -wind[None, :])
    refs = build_slack_constraints(b, [model], tight, v_t[None, :],
                                   acc_t[None, :], wind[None, None, :],
                                   scenario.aero, tag="o")
    b.minimize(refs.power_terms)
    return b.build(), v


def _pull_into_ball(point, center, radius):
    err = point - center
    n = float(np.linalg.norm(err))
    if n <= radius or n == 0.0:
        return point
    return center + err * (radius / n)


def adapt_slot(q_now, q_off_next, v_off, v_prev, wind, q_final,
               scenario: Scenario, config: OnlineConfig):
    """Velocity for the next interval; returns (v, used_fallback).

    The caller is responsible for integrating the position (and for
    pinning it when the slot is degenerate, see the module docstring).
    """
    dt = scenario.slot_dt
    if config.eps_v == 0.0:
        return v_off.copy(), False
    radius = float(np.linalg.norm(q_off_next - q_final))
    if radius == 0.0 or config.eps_q == 0.0:
        # the tube (or goal ball) pins the next way-point; velocity follows
        target = q_final if radius == 0.0 else q_off_next
        v = (target - q_now) / dt
        return v, bool(np.linalg.norm(v - v_off) > config.eps_v)

    v_t = np.asarray(v_off, dtype=float)
    prev_obj = None
    for _ in range(config.sca_cap):
        prog, v_ref = _slot_program(q_now, q_off_next, v_off, v_prev, wind,
                                    q_final, radius, v_t, scenario, config)
        sol = solve(prog)
        if not sol.is_optimal:
            p = _pull_into_ball(q_now + dt * np.asarray(v_off, dtype=float),
                                q_final, radius)
            return (p - q_now) / dt, True
        v_t = sol.values[v_ref.name]
        if prev_obj is not None and \
                prev_obj - sol.objective < config.eps3 * max(1.0, abs(prev_obj)):
            break
        prev_obj = sol.objective

    # wash solver dust out of the three flight-envelope balls so logged
    # flights satisfy them exactly, not just within the solve tolerance;
    # pulls aim a hair inside each ball so the re-evaluated norm cannot
    # round back over the boundary
    v = v_t
    inner = 1.0 - 1e-12
    for _ in range(8):
        v = v_off + _pull_into_ball(v - v_off, np.zeros(3),
                                    config.eps_v * inner)
        p = q_now + dt * v
        p = _pull_into_ball(p, q_off_next, config.eps_q * inner)
        p = _pull_into_ball(p, q_final, radius * inner)
        v = (p - q_now) / dt
        if (np.linalg.norm(v - v_off) <= config.eps_v
                and np.linalg.norm(q_now + dt * v - q_off_next) <= config.eps_q
                and np.linalg.norm(q_now + dt * v - q_final) <= radius):
            break
    return v, False


def _log_flight(positions, velocities, fallback, plan: OfflinePlan,
                scenario: Scenario, trace: WindTrace, row: int,
                city) -> FlightLog:
    n_iv = velocities.shape[0]
    dt = scenario.slot_dt
    v_prev = np.vstack([plan.trajectory.velocities()[:1], velocities[:-1]])
    acc = (velocities - v_prev) / dt

    vref = np.array([trace.sample(row, i).v_ref for i in range(n_iv)])
    beta = np.array([trace.sample(row, i).beta for i in range(n_iv)])
    wvec = np.array([_resolve_wind(trace, row, i, positions[i, 2],
                                   scenario.wind) for i in range(n_iv)])
    p_exact = np.array([
        power(KinState(velocities[i], acc[i]), wvec[i], scenario.aero).total
        for i in range(n_iv)])

    weights = plan.schedule.weights
    n_pos = positions.shape[0]
    scheduled = np.full(n_pos, -1, dtype=int)
    rate = np.zeros(n_pos)
    los = np.zeros(n_pos, dtype=bool)
    gxy = scenario.user_xy()
    for n in range(n_pos):
        col = weights[:, n]
        if col.max() <= 0.0:
            continue
        k = int(np.argmax(col))
        scheduled[n] = k
        q_xy, z = positions[n, :2], positions[n, 2]
        rate[n] = realized_rate(q_xy, z, gxy[k], city, scenario.channel)
        los[n] = not los_blocked(q_xy, z, gxy[k], city)
    return FlightLog(positions=positions, velocities=velocities,
                     wind_vref=vref, wind_beta=beta, wind_vec=wvec,
                     power=p_exact, scheduled=scheduled, rate=rate, los=los,
                     fallback=fallback)


def fly_online(plan: OfflinePlan, scenario: Scenario, trace: WindTrace,
               config: OnlineConfig, city, row: int = 0) -> FlightLog:
    """Fly the mission, re-planning each slot against the trace's wind.

    `trace` holds the realized wind (one row is one flight); `city` is the
    propagation environment for the realized rates. Communication follows
    the plan's schedule unchanged.
    """
    q_off = plan.trajectory.positions
    v_off = plan.trajectory.velocities()
    n_iv = v_off.shape[0]
    dt = scenario.slot_dt
    if trace.n_slots < n_iv:
        raise ValueError("wind trace shorter than the mission")

    if config.eps_q == 0.0 and config.eps_v == 0.0:
        positions = q_off.copy()
        velocities = v_off.copy()
        fallback = np.zeros(n_iv, dtype=bool)
        return _log_flight(positions, velocities, fallback, plan, scenario,
                           trace, row, city)

    positions = np.empty_like(q_off)
    velocities = np.empty_like(v_off)
    fallback = np.zeros(n_iv, dtype=bool)
    positions[0] = q_off[0].copy()
    q_final = q_off[-1]
    v_prev = v_off[0]
    for n in range(n_iv):
        w = _resolve_wind(trace, row, n, positions[n, 2], scenario.wind)
        v, fb = adapt_slot(positions[n], q_off[n + 1], v_off[n], v_prev, w,
                           q_final, scenario, config)
        velocities[n] = v
        fallback[n] = fb
        radius = float(np.linalg.norm(q_off[n + 1] - q_final))
        if radius == 0.0:
            positions[n + 1] = q_final
        elif config.eps_q == 0.0:
            positions[n + 1] = q_off[n + 1]
        else:
            positions[n + 1] = positions[n] + dt * v
        v_prev = v
    return _log_flight(positions, velocities, fallback, plan, scenario,
                       trace, row, city)


def fly_open_loop(plan: OfflinePlan, scenario: Scenario, trace: WindTrace,
                  city, row: int = 0) -> FlightLog:
    """Fly the offline plan verbatim under the same realized wind; the
    comparison baseline for the adaptive flights."""
    n_iv = plan.trajectory.velocities().shape[0]
    return _log_flight(plan.trajectory.positions.copy(),
                       plan.trajectory.velocities(),
                       np.zeros(n_iv, dtype=bool),
                       plan, scenario, trace, row, city)


def check_flight(log: FlightLog, plan: OfflinePlan,
                 config: OnlineConfig) -> list:
    """Violations of the flight-envelope constraints; empty when clean."""
    bad = []
    q_off = plan.trajectory.positions
    v_off = plan.trajectory.velocities()
    q_final = q_off[-1]
    if not np.array_equal(log.positions[0], q_off[0]):
        bad.append("start position differs from the plan")
    term = float(np.linalg.norm(log.positions[-1] - q_final))
    if term > 1e-9:
        bad.append(f"terminal position error {term:.3e} m")
    for n in range(v_off.shape[0]):
        drift = float(np.linalg.norm(log.positions[n + 1] - q_off[n + 1]))
        if drift > config.eps_q:
            bad.append(f"slot {n}: tube violated by {drift - config.eps_q:.3e}")
        dv = float(np.linalg.norm(log.velocities[n] - v_off[n]))
        if dv > config.eps_v:
            bad.append(f"slot {n}: tether violated by {dv - config.eps_v:.3e}")
        prog = float(np.linalg.norm(log.positions[n + 1] - q_final))
        ref = float(np.linalg.norm(q_off[n + 1] - q_final))
        if prog > ref:
            bad.append(f"slot {n}: progress violated by {prog - ref:.3e}")
    return bad


def angular_deviation(log: FlightLog) -> np.ndarray:
    """Unsigned horizontal angle (deg) between velocity and wind per
    interval; NaN where either horizontal component vanishes."""
    out = np.full(log.velocities.shape[0], np.nan)
    for n in range(out.shape[0]):
        v_xy = log.velocities[n, :2]
        w_xy = log.wind_vec[n, :2]
        nv, nw = np.linalg.norm(v_xy), np.linalg.norm(w_xy)
        if nv < 1e-12 or nw < 1e-12:
            continue
        cosang = float(np.clip(v_xy @ w_xy / (nv * nw), -1.0, 1.0))
        out[n] = math.degrees(math.acos(cosang))
    return out


def min_user_throughput(log: FlightLog, n_users: int, bandwidth: float,
                        slot_dt: float) -> float:
    """Worst per-user realized throughput over the mission, bits."""
    totals = np.zeros(n_users)
    for n in range(log.scheduled.shape[0]):
        k = log.scheduled[n]
        if k >= 0:
            totals[k] += log.rate[n]
    return float(totals.min()) * bandwidth * slot_dt
