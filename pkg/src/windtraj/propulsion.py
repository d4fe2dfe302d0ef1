"""Rotary-wing propulsion power in 3D flight through wind.

The full model resolves thrust from kinematics and wind, then splits power
into blade-profile, induced, climb, and parasite-drag terms. The reduce_*
functions are closed-form special cases (still air, level flight, pinned
thrust) kept as analytic cross-checks; they share the blade/induced kernels
so any disagreement with `power` isolates the thrust bookkeeping.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "AeroParams",
    "KinState",
    "PowerBreakdown",
    "drag_magnitude",
    "thrust_vector",
    "blade_power",
    "induced_power",
    "power",
    "reduce_windless",
    "reduce_zeng",
    "reduce_kappa",
    "reduce_3d",
    "thrust_weight_ratio",
]

_POSITIVE_FIELDS = ("m", "g_mag", "rho", "A_disc", "s_solidity", "delta",
                    "c_T", "c_f", "S_FP")


@dataclass(frozen=True)
class AeroParams:
    """Aerodynamic constants of the vehicle.

    m: mass (kg); g_mag: gravity (m/s^2); rho: air density (kg/m^3);
    A_disc: rotor disc area (m^2); s_solidity: rotor solidity; delta:
    profile drag coefficient; c_T: thrust coefficient on disc area;
    c_f: induced-power correction; S_FP: fuselage flat-plate area (m^2).
    """

    m: float
    g_mag: float
    rho: float
    A_disc: float
    s_solidity: float
    delta: float
    c_T: float
    c_f: float
    S_FP: float

    def __post_init__(self) -> None:
        for name in _POSITIVE_FIELDS:
            if not (getattr(self, name) > 0.0):
                raise ValueError(f"{name} must be strictly positive")

    @property
    def weight(self) -> float:
        """m * g_mag in newtons."""
        return self.m * self.g_mag

    @property
    def d_0(self) -> float:
        """Fuselage drag ratio S_FP / (s_solidity * A_disc)."""
        return self.S_FP / (self.s_solidity * self.A_disc)

    @property
    def v_tip(self) -> float:
        """Hover-referenced tip speed sqrt(weight / (c_T rho A))."""
        return math.sqrt(self.weight / (self.c_T * self.rho * self.A_disc))

    @property
    def v_hover(self) -> float:
        """Mean rotor induced speed in hover, sqrt(weight / (2 rho A))."""
        return math.sqrt(self.weight / (2.0 * self.rho * self.A_disc))


@dataclass(frozen=True)
class KinState:
    """Instantaneous velocity and acceleration, z up."""

    v: np.ndarray
    a: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.v, dtype=float)
        a = np.asarray(self.a, dtype=float)
        if v.shape != (3,) or a.shape != (3,):
            raise ValueError("v and a must be 3-vectors")
        if not (np.isfinite(v).all() and np.isfinite(a).all()):
            raise ValueError("v and a must be finite")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "a", a)


@dataclass(frozen=True)
class PowerBreakdown:
    p_blade: float
    p_induced: float
    p_climb: float
    p_drag: float
    total: float


def drag_magnitude(v, wind, params: AeroParams) -> float:
    """Parasite drag force magnitude, 0.5 rho S_FP |v - v_w|^2."""
    rel = np.asarray(v, dtype=float) - np.asarray(wind, dtype=float)
    return 0.5 * params.rho * params.S_FP * float(rel @ rel)


def thrust_vector(state: KinState, wind, params: AeroParams):
    """Thrust needed to realize the state against drag and weight.

    Returns (vector, magnitude). Drag opposes the air-relative velocity,
    gravity is (0, 0, -g_mag).
    """
    rel = state.v - np.asarray(wind, dtype=float)
    drag = 0.5 * params.rho * params.S_FP * float(np.linalg.norm(rel)) * rel
    t = params.m * state.a + drag + np.array([0.0, 0.0, params.weight])
    return t, float(np.linalg.norm(t))


def blade_power(t_mag: float, speed_sq: float, params: AeroParams) -> float:
    """Blade-profile power at a given thrust magnitude and ground speed^2."""
    return (params.delta / 8.0) * (
        t_mag / (params.c_T * params.rho * params.A_disc) + 3.0 * speed_sq
    ) * math.sqrt(params.rho * params.s_solidity ** 2 * params.A_disc
                  * t_mag / params.c_T)


def induced_power(t_mag: float, speed_sq: float, params: AeroParams) -> float:
    """Momentum-theory induced power at a given thrust magnitude.

    The inner sqrt(x^2 + h^2) - h is rearranged to x^2 / (sqrt(..) + h) to
    avoid cancellation at high speed.
    """
    half = 0.5 * speed_sq
    x = t_mag / (2.0 * params.rho * params.A_disc)
    root = math.sqrt(x * x + half * half)
    inner = x * x / (root + half) if half > 0.0 else x
    return (1.0 + params.c_f) * t_mag * math.sqrt(inner)


def power(state: KinState, wind, params: AeroParams) -> PowerBreakdown:
    """Full power breakdown for a kinematic state in a given wind."""
    _, t_mag = thrust_vector(state, wind, params)
    speed_sq = float(state.v @ state.v)
    rel = state.v - np.asarray(wind, dtype=float)
    p_b = blade_power(t_mag, speed_sq, params)
    p_i = induced_power(t_mag, speed_sq, params)
    p_c = params.weight * float(state.v[2])
    p_d = 0.5 * params.rho * params.S_FP * float(np.linalg.norm(rel)) ** 3
    return PowerBreakdown(p_b, p_i, p_c, p_d, p_b + p_i + p_c + p_d)


def reduce_windless(state: KinState, params: AeroParams) -> float:
    """Total power in still air, written from the zero-wind thrust balance."""
    v = state.v
    speed = float(np.linalg.norm(v))
    t = params.m * state.a + 0.5 * params.rho * params.S_FP * speed * v \
        + np.array([0.0, 0.0, params.weight])
    t_mag = float(np.linalg.norm(t))
    return (blade_power(t_mag, speed * speed, params)
            + induced_power(t_mag, speed * speed, params)
            + params.weight * float(v[2])
            + 0.5 * params.rho * params.S_FP * speed ** 3)


def reduce_zeng(v_horiz: float, params: AeroParams) -> float:
    """Steady level-flight power with thrust pinned to weight.

    Classic planar rotary-wing curve: blade term grows with speed^2,
    induced term decays, fuselage drag grows with speed^3.
    """
    v2 = v_horiz * v_horiz
    rho, disc = params.rho, params.A_disc
    hover_blade = (params.delta / 8.0) * rho * params.s_solidity * disc \
        * params.v_tip ** 3
    blade = hover_blade * (1.0 + 3.0 * v2 / params.v_tip ** 2)
    w = v2 / (2.0 * params.v_hover ** 2)
    induced = (1.0 + params.c_f) * params.weight ** 1.5 \
        / math.sqrt(2.0 * rho * disc) * math.sqrt(math.sqrt(1.0 + w * w) - w)
    drag = 0.5 * params.d_0 * rho * params.s_solidity * disc * v_horiz ** 3
    return blade + induced + drag


def thrust_weight_ratio(state: KinState, params: AeroParams) -> float:
    """Thrust over weight for planar flight, from v and a alone."""
    v, a = state.v, state.a
    speed = float(np.linalg.norm(v))
    num = (4.0 * params.m ** 2 * float(a @ a)
           + params.rho ** 2 * params.S_FP ** 2 * speed ** 4
           + 4.0 * params.m * params.rho * params.S_FP * float(a @ v) * speed)
    return math.sqrt(1.0 + num / (4.0 * params.weight ** 2))


def reduce_kappa(state: KinState, params: AeroParams) -> float:
    """Planar maneuvering power via the thrust-to-weight ratio.

    Assumes v_z = a_z = 0; the ratio folds acceleration and fuselage drag
    into an equivalent hover weight, rescaling the tip and induced speeds.
    """
    kap = thrust_weight_ratio(state, params)
    t_mag = kap * params.weight
    v2 = float(state.v @ state.v)
    rho, disc = params.rho, params.A_disc
    vt_k = params.v_tip * math.sqrt(kap)
    blade = (params.delta / 8.0) * rho * params.s_solidity * disc * vt_k ** 3 \
        * (1.0 + 3.0 * v2 / vt_k ** 2)
    w = v2 * rho * disc / t_mag  # = v2 / (2 v_hover(kap)^2)
    induced = (1.0 + params.c_f) * t_mag ** 1.5 / math.sqrt(2.0 * rho * disc) \
        * math.sqrt(math.sqrt(1.0 + w * w) - w)
    drag = 0.5 * params.d_0 * rho * params.s_solidity * disc * v2 ** 1.5
    return blade + induced + drag


def reduce_3d(vx: float, vy: float, vz: float, params: AeroParams) -> float:
    """Constant-velocity 3D power: level-flight curve plus signed climb."""
    return reduce_zeng(math.hypot(vx, vy), params) + params.weight * vz
