"""Exact evaluation of a candidate plan: the quantities the descent loop
trusts when deciding whether a step actually helped.

Everything here is computed directly from the trajectory, the schedule, and
the sampled wind: tight propulsion-bound auxiliaries, the sample-averaged
power upper bound per interval, the planning rate floor per (user, slot),
and their ratio. Surrogate programs may promise whatever they like; steps
are accepted against these numbers only.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..airlink import plos, rates
from ..propulsion import AeroParams
from ..windfield import WindStats, WindTrace
from .scenario import Scenario, Schedule, SlackState, Trajectory

__all__ = [
    "slot_wind_vectors", "tight_slacks", "p_ub", "rate_floor_matrix",
    "user_rate_sums", "exact_objective", "plan_energy", "ExactEval",
]


def slot_wind_vectors(trace: WindTrace, z_iv: np.ndarray,
                      stats: WindStats | None) -> np.ndarray:
    """Wind vectors (n_scenarios, n_iv, 3) at each interval's start altitude.

    A degenerate all-zero trace needs no stats (the windless baseline);
    anything else requires the shear profile from `stats`.
    """
    v_ref = np.asarray(trace.v_ref, dtype=float)
    beta = np.radians(np.asarray(trace.beta_deg, dtype=float))
    z_iv = np.asarray(z_iv, dtype=float)
    if v_ref.shape[1] != z_iv.size:
        raise ValueError("trace slot count does not match the altitude profile")
    if stats is None:
        if np.any(v_ref != 0.0):
            raise ValueError("non-zero wind trace requires wind stats")
        return np.zeros(v_ref.shape + (3,))
    if np.any(z_iv <= 0.0):
        raise ValueError("altitudes must be positive")
    speed = (z_iv[None, :] / stats.h_ref) ** stats.p_exp * v_ref
    out = np.zeros(v_ref.shape + (3,))
    out[:, :, 0] = speed * np.cos(beta)
    out[:, :, 1] = speed * np.sin(beta)
    return out


def _drag_moments(vels: np.ndarray, winds: np.ndarray) -> tuple:
    """Sample means of ||v - v_w||^2 and ||v - v_w||^3 per interval."""
    rel = vels[None, :, :] - winds                  # (S, n_iv, 3)
    mag = np.linalg.norm(rel, axis=2)
    return (mag ** 2).mean(axis=0), (mag ** 3).mean(axis=0)


def state_slacks(v: np.ndarray, a: np.ndarray, winds: np.ndarray,
                 aero: AeroParams) -> SlackState:
    """Equality-value auxiliaries for raw (n_iv, 3) kinematic arrays."""
    mean_sq, _ = _drag_moments(v, winds)
    body = a * aero.m
    body[:, 2] += aero.weight
    load = (np.linalg.norm(body, axis=1)
            + 0.5 * aero.rho * aero.S_FP * mean_sq) / (2 * aero.rho * aero.A_disc)
    speed_sq = np.einsum("ij,ij->i", v, v)
    inflow = 0.5 * (-speed_sq + np.sqrt(speed_sq ** 2 + 4 * load ** 2))
    induced_scale = load * np.sqrt(inflow)
    k = 2.0 / aero.c_T
    blade_scale = np.sqrt(k * load) * (k * load + 3 * speed_sq)
    return SlackState(load, inflow, blade_scale, induced_scale)


def tight_slacks(traj: Trajectory, winds: np.ndarray,
                 aero: AeroParams) -> SlackState:
    """Auxiliaries at their defining equalities for the given trajectory.

    These are the values the solver's slack variables settle onto when the
    propulsion bound is minimized, so evaluating `p_ub` here gives the exact
    value of the bound along the trajectory.
    """
    return state_slacks(traj.velocities(), traj.accelerations(), winds, aero)


def _coefs(aero: AeroParams) -> tuple:
    blade = aero.delta * aero.rho * aero.s_solidity * aero.A_disc / 8.0
    induced = 2.0 * (1.0 + aero.c_f) * aero.rho * aero.A_disc
    drag = 0.5 * aero.rho * aero.S_FP
    return blade, induced, drag


def p_ub(vels: np.ndarray, slacks: SlackState, winds: np.ndarray,
         aero: AeroParams) -> np.ndarray:
    """Sample-averaged propulsion upper bound per interval (W)."""
    bc, ic, dc = _coefs(aero)
    _, mean_cube = _drag_moments(vels, winds)
    speed = np.linalg.norm(vels, axis=1)
    return (bc * slacks.blade_scale + ic * slacks.induced_scale
            + aero.weight * speed + dc * mean_cube)


def rate_floor_matrix(traj: Trajectory, scenario: Scenario) -> np.ndarray:
    """Planning-floor spectral efficiency per (user, way-point)."""
    q = traj.positions
    g = scenario.user_xy()                               # (K, 2)
    d_h = np.linalg.norm(q[None, :, :2] - g[:, None, :], axis=2)
    z = q[:, 2][None, :]
    theta = np.degrees(np.arctan2(z, d_h))
    dist = np.hypot(d_h, z)
    r_l, _ = rates(dist, scenario.channel)
    return plos(theta, scenario.channel) * r_l


def user_rate_sums(rates_kn: np.ndarray, schedule: Schedule) -> np.ndarray:
    """Scheduled aggregate floor rate per user, bits/s/Hz."""
    return np.einsum("kn,kn->k", schedule.weights, rates_kn)


@dataclass(frozen=True)
class ExactEval:
    objective: float            # r_min over summed power bound
    r_min: float
    power_sum: float            # sum over intervals of p_ub at tight slacks


def exact_objective(traj: Trajectory, schedule: Schedule, winds: np.ndarray,
                    scenario: Scenario) -> ExactEval:
    """The quantity the outer descent monitors, from first principles."""
    slacks = tight_slacks(traj, winds, scenario.aero)
    power = p_ub(traj.velocities(), slacks, winds, scenario.aero)
    sums = user_rate_sums(rate_floor_matrix(traj, scenario), schedule)
    r_min = float(sums.min())
    p_sum = float(power.sum())
    return ExactEval(objective=r_min / p_sum, r_min=r_min, power_sum=p_sum)


def plan_energy(traj: Trajectory, winds: np.ndarray, aero: AeroParams,
                slot_dt: float) -> float:
    """Planned upper-bound energy over the mission (J)."""
    slacks = tight_slacks(traj, winds, aero)
    return float(p_ub(traj.velocities(), slacks, winds, aero).sum()) * slot_dt
