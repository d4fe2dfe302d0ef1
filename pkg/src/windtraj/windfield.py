"""Stochastic horizontal wind field.

Wind speed at the reference altitude follows a Weibull law, wind direction a
Von Mises law, and the magnitude scales with altitude through a power profile.
Traces of per-slot samples are drawn reproducibly from a single integer seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "WindStats",
    "WindSample",
    "WindTrace",
    "bessel_i0",
    "weibull_pdf",
    "weibull_quantile",
    "vonmises_pdf",
    "sample_trace",
    "wind_vector",
]


@dataclass(frozen=True)
class WindStats:
    """Distribution parameters of the wind field.

    lambda_scale and c_shape are the Weibull scale (m/s) and shape of the
    reference-altitude speed. mu_dir (degrees, in [0, 360)) and kappa_conc
    are the Von Mises mean direction and concentration. h_ref is the
    reference altitude (m) and p_exp the altitude exponent of the magnitude
    profile (z / h_ref) ** p_exp.

    p_exp must stay at or below 1; the planner's wind terms rely on that.
    Values outside the customary urban band [0.4, 0.6] additionally require
    allow_any_p=True.
    """

    lambda_scale: float
    c_shape: float
    mu_dir: float
    kappa_conc: float
    h_ref: float = 50.0
    p_exp: float = 0.5
    allow_any_p: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not (self.lambda_scale > 0.0):
            raise ValueError("lambda_scale must be positive")
        if not (self.c_shape > 0.0):
            raise ValueError("c_shape must be positive")
        if not (self.h_ref > 0.0):
            raise ValueError("h_ref must be positive")
        if not (self.kappa_conc >= 0.0):
            raise ValueError("kappa_conc must be nonnegative")
        if not (0.0 <= self.mu_dir < 360.0):
            raise ValueError("mu_dir must lie in [0, 360) degrees")
        if self.p_exp > 1.0:
            raise ValueError("p_exp above 1 is not supported")
        if not self.allow_any_p and not (0.4 <= self.p_exp <= 0.6):
            raise ValueError(
                "p_exp outside [0.4, 0.6]; pass allow_any_p=True to override"
            )


@dataclass(frozen=True)
class WindSample:
    """One realized wind state at the reference altitude."""

    v_ref: float
    beta: float

    def __post_init__(self) -> None:
        if not (self.v_ref >= 0.0):
            raise ValueError("v_ref must be nonnegative")


@dataclass(frozen=True)
class WindTrace:
    """Matrix of wind samples, indexed by (scenario, slot).

    v_ref and beta_deg are (n_scenarios, n_slots) arrays. A trace is fully
    reproducible from (stats, counts, seed).
    """

    v_ref: np.ndarray
    beta_deg: np.ndarray
    seed: int

    def __post_init__(self) -> None:
        if self.v_ref.shape != self.beta_deg.shape or self.v_ref.ndim != 2:
            raise ValueError("v_ref and beta_deg must be equal-shape 2-d arrays")

    @property
    def n_scenarios(self) -> int:
        return self.v_ref.shape[0]

    @property
    def n_slots(self) -> int:
        return self.v_ref.shape[1]

    def sample(self, scenario: int, slot: int) -> WindSample:
        return WindSample(float(self.v_ref[scenario, slot]),
                          float(self.beta_deg[scenario, slot]))


def bessel_i0(x: float) -> float:
    """Modified Bessel function of the first kind, order zero.

    Power series below 15, asymptotic expansion above. Relative error stays
    below 1e-10 on the real axis (the function is even).
    """
    x = abs(float(x))
    if x < 15.0:
        total = 1.0
        term = 1.0
        q = 0.25 * x * x
        k = 0
        while term > 1e-17 * total:
            k += 1
            term *= q / (k * k)
            total += term
        return total
    return math.exp(x) * _i0_scaled_asymptotic(x)


def _i0_scaled_asymptotic(x: float) -> float:
    # exp(-x) * I0(x) for x >= 15, via the divergent asymptotic series
    # truncated at its smallest term.
    total = 1.0
    term = 1.0
    for k in range(1, 40):
        nxt = term * (2 * k - 1) ** 2 / (8.0 * k * x)
        if nxt >= term or nxt < 1e-16 * total:
            if nxt < term:
                total += nxt
            break
        term = nxt
        total += term
    return total / math.sqrt(2.0 * math.pi * x)


def weibull_pdf(v, stats: WindStats):
    """Weibull density of the reference-altitude wind speed, s/m.

    Rejects nonpositive speeds; the law is supported on v > 0.
    """
    arr = np.asarray(v, dtype=float)
    if np.any(arr <= 0.0):
        raise ValueError("speed must be positive")
    lam, c = stats.lambda_scale, stats.c_shape
    r = arr / lam
    out = (c / lam) * r ** (c - 1.0) * np.exp(-(r ** c))
    return float(out) if np.isscalar(v) else out


def weibull_quantile(u, stats: WindStats):
    """Inverse CDF of the Weibull speed law: v = lambda * (-ln(1-u))**(1/c)."""
    arr = np.asarray(u, dtype=float)
    if np.any(arr < 0.0) or np.any(arr >= 1.0):
        raise ValueError("u must lie in [0, 1)")
    out = stats.lambda_scale * (-np.log1p(-arr)) ** (1.0 / stats.c_shape)
    return float(out) if np.isscalar(u) else out


def vonmises_pdf(beta, stats: WindStats):
    """Von Mises density of the wind direction, per radian.

    beta is in degrees; the density integrates to 1 over one full turn of
    the direction expressed in radians.
    """
    arr = np.radians(np.asarray(beta, dtype=float))
    mu = math.radians(stats.mu_dir)
    kap = stats.kappa_conc
    if kap < 15.0:
        out = np.exp(kap * np.cos(arr - mu)) / (2.0 * math.pi * bessel_i0(kap))
    else:
        # exp(kappa cos d) / (2 pi I0(kappa)), computed against the scaled
        # Bessel value so large concentrations do not overflow.
        out = np.exp(kap * (np.cos(arr - mu) - 1.0)) / (
            2.0 * math.pi * _i0_scaled_asymptotic(kap)
        )
    return float(out) if np.isscalar(beta) else out


def sample_trace(stats: WindStats, n_slots: int, n_scenarios: int, seed: int,
                 generator=None) -> WindTrace:
    """Draw an (n_scenarios, n_slots) i.i.d. wind trace.

    Speeds come from the Weibull inverse CDF applied to uniform draws and
    directions from the Von Mises sampler (Best-Fisher rejection), both off
    a single PCG64 stream, so a trace is bit-identical given the seed.

    generator, if given, replaces the i.i.d. draw: it is called as
    generator(stats, n_slots, n_scenarios, rng) and must return the
    (v_ref, beta_deg) array pair. The default draw has no slot-to-slot
    correlation; the hook exists for correlated models and ships unused.
    """
    if n_slots < 1 or n_scenarios < 1:
        raise ValueError("counts must be at least 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    if generator is not None:
        v_ref, beta = generator(stats, n_slots, n_scenarios, rng)
        v_ref = np.asarray(v_ref, dtype=float)
        beta = np.asarray(beta, dtype=float)
    else:
        u = rng.random((n_scenarios, n_slots))
        v_ref = weibull_quantile(u, stats)
        ang = rng.vonmises(math.radians(stats.mu_dir), stats.kappa_conc,
                           size=(n_scenarios, n_slots))
        beta = np.degrees(ang) % 360.0
    return WindTrace(v_ref=v_ref, beta_deg=beta, seed=int(seed))


def zero_trace(n_slots: int, n_scenarios: int = 1) -> WindTrace:
    """Degenerate all-calm trace, the windless planning baseline."""
    shape = (n_scenarios, n_slots)
    return WindTrace(np.zeros(shape), np.zeros(shape), seed=0)


def wind_vector(sample: WindSample, z: float, stats: WindStats) -> np.ndarray:
    """Wind velocity at altitude z, as a 3-vector with zero vertical part.

    Magnitude scales as (z / h_ref) ** p_exp; direction is the sample's
    beta regardless of altitude. Rejects z <= 0.
    """
    if not (z > 0.0):
        raise ValueError("altitude must be positive")
    scale = (z / stats.h_ref) ** stats.p_exp * sample.v_ref
    b = math.radians(sample.beta)
    return np.array([scale * math.cos(b), scale * math.sin(b), 0.0])
