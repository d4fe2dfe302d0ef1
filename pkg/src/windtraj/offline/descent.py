"""Block-coordinate descent over schedule, ground track, and altitude.

Each outer pass re-solves the scheduling LP at the current path, then runs
the horizontal and vertical trajectory steps to local convergence. Every
candidate is accepted only if the exactly evaluated objective (minimum
scheduled rate over per-sample mean of the power bound) does not decrease,
so surrogate optimism can slow progress but never corrupt it. The loop
stops when an outer pass improves the objective by less than `eps_outer`
relatively, then rounds the schedule to one user per slot.
"""
from __future__ import annotations

import numpy as np

from ..convex import SolverError, sca_drive, solve
from ..windfield import sample_trace, zero_trace
from .exact import exact_objective, rate_floor_matrix, slot_wind_vectors, user_rate_sums
from .scenario import (OfflinePlan, Scenario, Schedule, TraceRow, Trajectory,
                       init_plan, round_schedule)
from .surrogate import HorizontalStep, VerticalStep, schedule_program

__all__ = ["PlannerError", "optimize_schedule", "optimize_horizontal",
           "optimize_vertical", "plan_offline"]

R_TR_INIT = 80.0        # horizontal trust radius per way-point, m
TAU_INIT = 50.0         # vertical trust half-width, m
R_TR_FLOOR = 1.0
TAU_FLOOR = 0.5


class PlannerError(RuntimeError):
    """A subproblem failed in a way retries cannot fix."""


def _winds_for(traj: Trajectory, trace, scenario: Scenario) -> np.ndarray:
    return slot_wind_vectors(trace, traj.positions[:-1, 2], scenario.wind)


def optimize_schedule(traj: Trajectory, schedule: Schedule,
                      scenario: Scenario) -> Schedule:
    """Maximin scheduling LP at the current path; keeps the incumbent if
    the LP (numerically) fails to beat it."""
    rates = rate_floor_matrix(traj, scenario)
    prog, a_refs, _ = schedule_program(rates)
    sol = solve(prog)
    if not sol.is_optimal:
        raise PlannerError(f"scheduling LP: {sol.status}")
    cand = Schedule(np.vstack([sol.values[a.name] for a in a_refs]))
    if (user_rate_sums(rates, cand).min()
            >= user_rate_sums(rates, schedule).min()):
        return cand
    return schedule


def optimize_horizontal(traj: Trajectory, schedule: Schedule, trace,
                        scenario: Scenario, r_tr: float = R_TR_INIT
                        ) -> Trajectory:
    """One horizontal step, accepted only if the exact objective holds."""
    winds = _winds_for(traj, trace, scenario)
    before = exact_objective(traj, schedule, winds, scenario).objective
    cand = HorizontalStep(traj, schedule, winds, scenario, r_tr,
                          q_init=before).solve()
    after = exact_objective(cand, schedule, winds, scenario).objective
    return cand if after >= before else traj


def optimize_vertical(traj: Trajectory, schedule: Schedule, trace,
                      scenario: Scenario, tau: float = TAU_INIT
                      ) -> Trajectory:
    """One vertical step; wind samples are re-evaluated at the candidate's
    altitudes before the exact comparison."""
    winds = _winds_for(traj, trace, scenario)
    before = exact_objective(traj, schedule, winds, scenario).objective
    cand = VerticalStep(traj, schedule, winds, scenario, tau,
                        q_init=before).solve()
    after = exact_objective(cand, schedule, _winds_for(cand, trace, scenario),
                            scenario).objective
    return cand if after >= before else traj


def _drive_block(kind, traj, schedule, trace, scenario, eps):
    """Run one trajectory block to local convergence under a shrinking
    trust region, returning the improved trajectory."""
    if kind == "horizontal":
        state = {"size": R_TR_INIT, "floor": R_TR_FLOOR}
    else:
        state = {"size": TAU_INIT, "floor": TAU_FLOOR}

    def objective(t):
        return exact_objective(t, schedule, _winds_for(t, trace, scenario),
                               scenario).objective

    scale = max(abs(objective(traj)), 1e-12)

    def build(t):
        winds = _winds_for(t, trace, scenario)
        q0 = exact_objective(t, schedule, winds, scenario).objective
        if kind == "horizontal":
            return HorizontalStep(t, schedule, winds, scenario,
                                  state["size"], q_init=q0)
        return VerticalStep(t, schedule, winds, scenario,
                            state["size"], q_init=q0)

    def on_reject(t, cand, drop):
        state["size"] *= 0.5
        return state["size"] >= state["floor"]

    res = sca_drive(build, lambda t: objective(t) / scale, traj,
                    eps_conv=eps, max_outer=25, sense="max",
                    on_reject=on_reject)
    return res.x


def plan_offline(scenario: Scenario, *, seed: int = 0, wind_trace=None,
                 eps_block: float = 1e-3, eps_outer: float = 1e-3,
                 max_outer: int = 50) -> OfflinePlan:
    """Plan path and schedule for the scenario's mission window.

    Draws `scenario.n_samples` wind realizations (or uses `wind_trace`,
    or still air when the scenario has no wind model), descends with the
    block loop, and finally rounds to a one-user-per-slot schedule. The
    trace records the relaxed phase; the returned rate and objective are
    re-evaluated at the rounded schedule.
    """
    if wind_trace is not None:
        trace = wind_trace
    elif scenario.wind is None:
        trace = zero_trace(scenario.n_iv)
    else:
        trace = sample_trace(scenario.wind, scenario.n_iv,
                             scenario.n_samples, seed)
    traj, schedule = init_plan(scenario)

    def evaluate(t, s):
        return exact_objective(t, s, _winds_for(t, trace, scenario), scenario)

    ev = evaluate(traj, schedule)
    rows = [TraceRow(0, ev.objective, ev.r_min,
                     ev.power_sum * scenario.slot_dt)]
    for outer in range(1, max_outer + 1):
        try:
            schedule = optimize_schedule(traj, schedule, scenario)
            traj = _drive_block("horizontal", traj, schedule, trace,
                                scenario, eps_block)
            traj = _drive_block("vertical", traj, schedule, trace,
                                scenario, eps_block)
        except SolverError as exc:
            raise PlannerError(
                f"outer iteration {outer} failed: {exc}") from exc
        ev_new = evaluate(traj, schedule)
        rows.append(TraceRow(outer, ev_new.objective, ev_new.r_min,
                             ev_new.power_sum * scenario.slot_dt))
        gain = ev_new.objective - ev.objective
        ev = ev_new
        if gain <= eps_outer * max(abs(ev.objective), 1e-12):
            break
    binary = round_schedule(schedule)
    ev_bin = evaluate(traj, binary)
    return OfflinePlan(trajectory=traj, schedule=binary, r_min=ev_bin.r_min,
                       objective=ev_bin.objective, trace=tuple(rows),
                       wind_trace=trace)
