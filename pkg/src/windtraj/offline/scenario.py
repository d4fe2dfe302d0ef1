"""Mission description and plan containers for the offline designer.

A mission is a point-to-point flight of `n_pos` way-points spaced `slot_dt`
apart, serving K ground users under a wind climate. Positions carry the
communication slots; the `n_pos - 1` intervals between them carry velocity,
acceleration, and propulsion power. The initial plan is the straight line at
uniform speed with the slots split into K contiguous equal blocks.

Kinematic caps are enforced with a small interior margin (`CAP_MARGIN`)
inside every optimization subproblem, so a returned plan passes exact
feasibility checks against the true caps despite solver round-off.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..airlink import ChannelParams, GroundUser
from ..propulsion import AeroParams
from ..windfield import WindStats

__all__ = [
    "Scenario", "Trajectory", "Schedule", "SlackState", "OfflinePlan",
    "TraceRow", "init_plan", "round_schedule", "check_feasible", "CAP_MARGIN",
]

CAP_MARGIN = 1e-5              # m/s (speed caps) and m (altitude band)


def _vec3(x, name):
    v = np.asarray(x, dtype=float).reshape(-1)
    if v.shape != (3,) or not np.all(np.isfinite(v)):
        raise ValueError(f"{name} must be a finite 3-vector")
    return v


@dataclass(frozen=True)
class Scenario:
    """Immutable mission setup.

    duration / slot_dt must give an integer way-point count of at least 3;
    both endpoints must sit inside the altitude band, and the straight
    connecting line must be flyable under the speed caps.
    """

    duration: float
    slot_dt: float
    q_start: np.ndarray
    q_end: np.ndarray
    v_h_max: float
    v_v_max: float
    h_min: float
    h_max: float
    users: tuple
    wind: WindStats | None
    aero: AeroParams
    channel: ChannelParams
    n_samples: int = 300

    def __post_init__(self):
        object.__setattr__(self, "q_start", _vec3(self.q_start, "q_start"))
        object.__setattr__(self, "q_end", _vec3(self.q_end, "q_end"))
        object.__setattr__(self, "users", tuple(self.users))
        if self.duration <= 0 or self.slot_dt <= 0:
            raise ValueError("duration and slot_dt must be positive")
        ratio = self.duration / self.slot_dt
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 3:
            raise ValueError("duration must be an integer multiple of slot_dt, "
                             "at least 3 slots")
        if not (0 < self.h_min <= self.h_max):
            raise ValueError("altitude band must satisfy 0 < h_min <= h_max")
        for q in (self.q_start, self.q_end):
            if not (self.h_min <= q[2] <= self.h_max):
                raise ValueError("endpoint altitude outside the band")
        if self.v_h_max <= 0 or self.v_v_max <= 0:
            raise ValueError("speed caps must be positive")
        span = self.q_end - self.q_start
        if np.hypot(span[0], span[1]) / self.duration > self.v_h_max:
            raise ValueError("straight line infeasible: horizontal span too wide")
        if abs(span[2]) / self.duration > self.v_v_max:
            raise ValueError("straight line infeasible: vertical span too tall")
        if not self.users:
            raise ValueError("at least one ground user required")
        if len({u.id for u in self.users}) != len(self.users):
            raise ValueError("duplicate user ids")
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")

    @property
    def n_pos(self) -> int:
        """Way-point count (one communication slot per way-point)."""
        return int(round(self.duration / self.slot_dt))

    @property
    def n_iv(self) -> int:
        """Interval count (velocity / power slots)."""
        return self.n_pos - 1

    @property
    def n_users(self) -> int:
        return len(self.users)

    def user_xy(self) -> np.ndarray:
        return np.array([u.position for u in self.users], dtype=float)


@dataclass(frozen=True)
class Trajectory:
    """Way-point path; velocity and acceleration are finite differences.

    Acceleration is defined on the first n_iv - 1 intervals and extended to
    the last one by repetition, so every power slot has a value.
    """

    positions: np.ndarray       # (n_pos, 3)
    slot_dt: float

    def __post_init__(self):
        p = np.asarray(self.positions, dtype=float)
        if p.ndim != 2 or p.shape[0] < 3 or p.shape[1] != 3:
            raise ValueError("positions must be (n_pos >= 3, 3)")
        if not np.all(np.isfinite(p)):
            raise ValueError("positions must be finite")
        if self.slot_dt <= 0:
            raise ValueError("slot_dt must be positive")
        object.__setattr__(self, "positions", p)

    @property
    def n_pos(self) -> int:
        return self.positions.shape[0]

    def velocities(self) -> np.ndarray:
        return np.diff(self.positions, axis=0) / self.slot_dt

    def accelerations(self) -> np.ndarray:
        v = self.velocities()
        a = np.empty_like(v)
        a[:-1] = np.diff(v, axis=0) / self.slot_dt
        a[-1] = a[-2]
        return a

    def with_horizontal(self, xy: np.ndarray) -> "Trajectory":
        p = self.positions.copy()
        p[:, :2] = xy
        return Trajectory(p, self.slot_dt)

    def with_vertical(self, z: np.ndarray) -> "Trajectory":
        p = self.positions.copy()
        p[:, 2] = z
        return Trajectory(p, self.slot_dt)


@dataclass(frozen=True)
class Schedule:
    """Per-slot user weights, shape (n_users, n_pos).

    Continuous in [0, 1] during optimization, binary after rounding; each
    column sums to at most 1 (idle slots allowed).
    """

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2:
            raise ValueError("weights must be 2-d (users x slots)")
        if np.any(w < -1e-9) or np.any(w > 1 + 1e-9):
            raise ValueError("weights must lie in [0, 1]")
        if np.any(w.sum(axis=0) > 1 + 1e-9):
            raise ValueError("per-slot weights must sum to at most 1")
        # snap solver round-off so downstream checks are exact
        w = np.clip(w, 0.0, 1.0)
        over = w.sum(axis=0)
        bad = over > 1.0
        if np.any(bad):
            w[:, bad] /= over[bad]
        object.__setattr__(self, "weights", w)

    @property
    def is_binary(self) -> bool:
        w = self.weights
        return bool(np.all((w == 0.0) | (w == 1.0)))


@dataclass(frozen=True)
class SlackState:
    """Per-interval auxiliaries of the propulsion upper bound.

    load:          thrust magnitude over twice the disc mass density rho*A
                   (equals the squared hover-induced speed when thrust
                   balances weight), m^2/s^2
    inflow:        squared induced-flow speed bound, m^2/s^2
    blade_scale:   blade-power surrogate, P_blade / (delta*rho*s*A/8), m^3/s^3
    induced_scale: induced-power surrogate, P_ind / (2*(1+c_f)*rho*A), m^3/s^3
    """

    load: np.ndarray
    inflow: np.ndarray
    blade_scale: np.ndarray
    induced_scale: np.ndarray

    def __post_init__(self):
        for name in ("load", "inflow", "blade_scale", "induced_scale"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim != 1 or np.any(arr <= 0) or not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be a positive 1-d array")
            object.__setattr__(self, name, arr)
        n = self.load.size
        if any(getattr(self, f).size != n
               for f in ("inflow", "blade_scale", "induced_scale")):
            raise ValueError("slack arrays must share one length")


@dataclass(frozen=True)
class TraceRow:
    outer_iter: int
    objective: float
    r_min: float
    energy: float


@dataclass(frozen=True)
class OfflinePlan:
    trajectory: Trajectory
    schedule: Schedule          # binary
    r_min: float                # aggregate bits/s/Hz at the binary schedule
    objective: float            # ratio r_min / total planned power
    trace: tuple                # TraceRow per accepted outer iteration
    wind_trace: object          # the sampled trace the plan averaged over


# -------------------------------------------------------------- construction

def init_plan(scenario: Scenario) -> tuple:
    """Straight line at uniform speed, contiguous equal schedule blocks."""
    n, k = scenario.n_pos, scenario.n_users
    frac = np.linspace(0.0, 1.0, n)[:, None]
    pos = scenario.q_start[None, :] * (1 - frac) + scenario.q_end[None, :] * frac
    traj = Trajectory(pos, scenario.slot_dt)
    v = traj.velocities()
    if np.any(np.hypot(v[:, 0], v[:, 1]) > scenario.v_h_max) or \
            np.any(np.abs(v[:, 2]) > scenario.v_v_max):
        raise ValueError("straight-line plan violates per-interval speed caps")
    weights = np.zeros((k, n))
    edges = np.linspace(0, n, k + 1).round().astype(int)
    for j in range(k):
        weights[j, edges[j]:edges[j + 1]] = 1.0
    return traj, Schedule(weights)


def round_schedule(schedule: Schedule) -> Schedule:
    """Per slot: the largest-weight user wins, ties to the lowest index,
    all-zero slots stay idle."""
    w = schedule.weights
    out = np.zeros_like(w)
    top = np.argmax(w, axis=0)          # argmax takes the lowest tied index
    hit = w[top, np.arange(w.shape[1])] > 0
    out[top[hit], np.nonzero(hit)[0]] = 1.0
    return Schedule(out)


# -------------------------------------------------------------- feasibility

def check_feasible(traj: Trajectory, schedule: Schedule,
                   scenario: Scenario, tol: float = 0.0) -> list:
    """Return a list of violated-constraint descriptions (empty when clean).

    tol = 0 is the exact check a returned plan must pass; subproblem margins
    exist so that it does.
    """
    probs = []
    p = traj.positions
    if p.shape[0] != scenario.n_pos:
        probs.append("way-point count mismatch")
    if not np.array_equal(p[0], scenario.q_start):
        probs.append("start point moved")
    if not np.array_equal(p[-1], scenario.q_end):
        probs.append("end point moved")
    v = traj.velocities()
    if np.any(np.hypot(v[:, 0], v[:, 1]) > scenario.v_h_max + tol):
        probs.append("horizontal speed cap exceeded")
    if np.any(np.abs(v[:, 2]) > scenario.v_v_max + tol):
        probs.append("vertical speed cap exceeded")
    if np.any(p[:, 2] < scenario.h_min - tol) or \
            np.any(p[:, 2] > scenario.h_max + tol):
        probs.append("altitude band violated")
    w = schedule.weights
    if w.shape != (scenario.n_users, scenario.n_pos):
        probs.append("schedule shape mismatch")
    elif np.any(w.sum(axis=0) > 1 + tol):
        probs.append("slot oversubscribed")
    return probs
