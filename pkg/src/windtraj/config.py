"""Flat key-value mission configuration.

The on-disk format is plain text, one ``key = value`` per line, ``#`` starts
a comment, keys are dotted into sections (scenario.*, wind.*, channel.*,
online.*, city.*, experiment.*). Parameter names follow the conventional
simulation-table symbols so a config file reads like the parameter table it
came from; units live in the comments of :func:`default_config_text`.

Loading is strict. Unknown keys, duplicate keys, and malformed values all
raise :class:`ConfigError` naming the offending key, so a typo cannot
silently fall back to a default. Values omitted from a file do fall back to
the defaults below.
"""
from __future__ import annotations

import re

import numpy as np

from .airlink import ChannelParams, CityGenParams, GroundUser
from .online import OnlineConfig
from .propulsion import AeroParams
from .offline import Scenario
from .windfield import WindStats


class ConfigError(ValueError):
    """A config file could not be parsed or validated."""


_DEFAULT_TEXT = """\
# Mission window and endpoints
scenario.T0 = 150               # flight duration, s
scenario.Delta = 1              # slot length, s
scenario.Q_I = 0, 500, 100      # start position, m
scenario.Q_F = 1000, 500, 100   # final position, m
scenario.V_H_max = 40           # horizontal speed cap, m/s
scenario.V_V_max = 20           # vertical speed cap, m/s
scenario.H_max = 300            # altitude ceiling, m
scenario.H_min = 50             # altitude floor, m

# Ground users (first K of the g_<k> entries are used)
scenario.K = 4
scenario.g_1 = 100, 300         # m
scenario.g_2 = 500, 800         # m
scenario.g_3 = 500, 200         # m
scenario.g_4 = 900, 600         # m

# Offline planner controls
scenario.S = 300                # wind sample count for the stochastic average
scenario.eps1 = 1e-3            # per-block convergence threshold
scenario.eps2 = 1e-3            # outer-loop convergence threshold
scenario.max_outer = 50         # outer iteration cap

# Airframe
scenario.m = 2                  # mass, kg
scenario.g = 9.8                # gravitational acceleration, m/s^2
scenario.rho = 1.225            # air density, kg/m^3
scenario.A = 0.79               # rotor disc area, m^2
scenario.delta = 0.012          # profile drag coefficient
scenario.s = 0.1                # rotor solidity
scenario.S_FP = 0.01            # fuselage equivalent flat plate area, m^2
scenario.c_T = 0.3              # thrust coefficient
scenario.c_f = 0.13             # induced-power correction factor

# Wind field (disable for a still-air mission)
wind.enabled = true
wind.lambda = 10                # Weibull scale of reference speed, m/s
wind.c = 5                      # Weibull shape
wind.mu = 180                   # mean direction, deg
wind.kappa = 5                  # direction concentration
wind.h_ref = 50                 # reference altitude, m
wind.p = 0.5                    # altitude exponent of the speed profile

# Air-to-ground channel
channel.A1 = -1                 # LoS-probability logistic offset
channel.A2 = 0.05               # LoS-probability logistic slope
channel.A3 = 0.1                # LoS-probability floor weight
channel.A4 = 0.9                # LoS-probability span weight
channel.rho0_dB = -60           # reference channel gain at 1 m, dB
channel.mu0_dB = -20            # extra NLoS attenuation, dB
channel.Gamma_dB = 8.2          # SNR gap, dB
channel.alpha_L = 2.5           # LoS path-loss exponent
channel.alpha_N = 5             # NLoS path-loss exponent
channel.sigma2_dBm = -110       # noise power, dBm
channel.B = 1e6                 # bandwidth, Hz (reporting only)
channel.P0 = 0.1                # transmit power, W

# Per-slot adaptation
online.eps_Q = 100              # position tube radius, m
online.eps_v = 20               # velocity tether radius, m/s
online.eps3 = 1e-3              # per-slot convergence threshold
online.sca_cap = 1              # surrogate refinements per slot
online.enforce_caps = true      # keep speed caps and altitude band online

# Synthetic city for realized-rate evaluation
city.built_area_ratio = 0.25
city.buildings_per_km2 = 300
city.rayleigh_height_scale = 20 # m
city.margin = 100               # city extent beyond the mission box, m

# Experiment orchestration
experiment.schemes = oboa, offline, windless
experiment.sweep = none         # one of: none, mu, lambda, kappa, c, eps_Q
experiment.values =             # sweep values, comma separated
experiment.repeats = 50         # evaluation repeats per cell
experiment.seed = 0
experiment.workers = 1
"""

_KEY_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")
_USER_KEY_RE = re.compile(r"^scenario\.g_(\d+)$")


def default_config_text() -> str:
    """The canonical commented config with every key at its default."""
    return _DEFAULT_TEXT


def parse_config_text(text: str) -> dict:
    """Parse config text into an ordered flat dict of raw string values."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', "
                              f"got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not _KEY_RE.match(key):
            raise ConfigError(f"line {lineno}: malformed key {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


DEFAULTS = parse_config_text(_DEFAULT_TEXT)


def load_config(path) -> dict:
    """Read a config file, validate its keys, and merge over the defaults."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    overrides = parse_config_text(text)
    unknown = [k for k in overrides
               if k not in DEFAULTS and not _USER_KEY_RE.match(k)]
    if unknown:
        raise ConfigError("unknown config keys: " + ", ".join(sorted(unknown)))
    merged = dict(DEFAULTS)
    merged.update(overrides)
    return merged


# ------------------------------------------------------------ typed getters

def _get(cfg: dict, key: str) -> str:
    if key not in cfg:
        raise ConfigError(f"missing config key {key!r}")
    return cfg[key]


def as_float(cfg: dict, key: str) -> float:
    raw = _get(cfg, key)
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from exc


def as_int(cfg: dict, key: str) -> int:
    raw = _get(cfg, key)
    try:
        value = float(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}") from exc
    if value != int(value):
        raise ConfigError(f"{key}: expected an integer, got {raw!r}")
    return int(value)


def as_bool(cfg: dict, key: str) -> bool:
    raw = _get(cfg, key).lower()
    if raw in ("true", "false"):
        return raw == "true"
    raise ConfigError(f"{key}: expected true or false, got {cfg[key]!r}")


def as_vector(cfg: dict, key: str, size: int) -> np.ndarray:
    raw = _get(cfg, key)
    parts = [p for p in (s.strip() for s in raw.split(",")) if p]
    if len(parts) != size:
        raise ConfigError(f"{key}: expected {size} comma-separated numbers, "
                          f"got {raw!r}")
    try:
        return np.array([float(p) for p in parts])
    except ValueError as exc:
        raise ConfigError(f"{key}: expected numbers, got {raw!r}") from exc


def as_float_list(cfg: dict, key: str) -> tuple:
    raw = _get(cfg, key)
    parts = [p for p in (s.strip() for s in raw.split(",")) if p]
    try:
        return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected numbers, got {raw!r}") from exc


def as_str_list(cfg: dict, key: str) -> tuple:
    raw = _get(cfg, key)
    return tuple(p for p in (s.strip() for s in raw.split(",")) if p)


# ----------------------------------------------------------------- builders

def aero_from_config(cfg: dict) -> AeroParams:
    return AeroParams(m=as_float(cfg, "scenario.m"),
                      g_mag=as_float(cfg, "scenario.g"),
                      rho=as_float(cfg, "scenario.rho"),
                      A_disc=as_float(cfg, "scenario.A"),
                      s_solidity=as_float(cfg, "scenario.s"),
                      delta=as_float(cfg, "scenario.delta"),
                      c_T=as_float(cfg, "scenario.c_T"),
                      c_f=as_float(cfg, "scenario.c_f"),
                      S_FP=as_float(cfg, "scenario.S_FP"))


def channel_from_config(cfg: dict) -> ChannelParams:
    return ChannelParams.from_db(
        A1=as_float(cfg, "channel.A1"), A2=as_float(cfg, "channel.A2"),
        A3=as_float(cfg, "channel.A3"), A4=as_float(cfg, "channel.A4"),
        rho0_db=as_float(cfg, "channel.rho0_dB"),
        mu0_db=as_float(cfg, "channel.mu0_dB"),
        alpha_L=as_float(cfg, "channel.alpha_L"),
        alpha_N=as_float(cfg, "channel.alpha_N"),
        sigma2_dbm=as_float(cfg, "channel.sigma2_dBm"),
        Gamma_db=as_float(cfg, "channel.Gamma_dB"),
        P0=as_float(cfg, "channel.P0"), B=as_float(cfg, "channel.B"))


def wind_from_config(cfg: dict) -> WindStats | None:
    if not as_bool(cfg, "wind.enabled"):
        return None
    try:
        return WindStats(lambda_scale=as_float(cfg, "wind.lambda"),
                         c_shape=as_float(cfg, "wind.c"),
                         mu_dir=as_float(cfg, "wind.mu"),
                         kappa_conc=as_float(cfg, "wind.kappa"),
                         h_ref=as_float(cfg, "wind.h_ref"),
                         p_exp=as_float(cfg, "wind.p"))
    except ValueError as exc:
        raise ConfigError(f"wind: {exc}") from exc


def users_from_config(cfg: dict) -> tuple:
    count = as_int(cfg, "scenario.K")
    if count < 1:
        raise ConfigError("scenario.K must be at least 1")
    users = []
    for k in range(1, count + 1):
        key = f"scenario.g_{k}"
        if key not in cfg:
            raise ConfigError(f"scenario.K = {count} but {key} is missing")
        users.append(GroundUser(id=k, position=as_vector(cfg, key, 2)))
    return tuple(users)


def scenario_from_config(cfg: dict) -> Scenario:
    try:
        return Scenario(duration=as_float(cfg, "scenario.T0"),
                        slot_dt=as_float(cfg, "scenario.Delta"),
                        q_start=as_vector(cfg, "scenario.Q_I", 3),
                        q_end=as_vector(cfg, "scenario.Q_F", 3),
                        v_h_max=as_float(cfg, "scenario.V_H_max"),
                        v_v_max=as_float(cfg, "scenario.V_V_max"),
                        h_min=as_float(cfg, "scenario.H_min"),
                        h_max=as_float(cfg, "scenario.H_max"),
                        users=users_from_config(cfg),
                        wind=wind_from_config(cfg),
                        aero=aero_from_config(cfg),
                        channel=channel_from_config(cfg),
                        n_samples=as_int(cfg, "scenario.S"))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"scenario: {exc}") from exc


def planner_options(cfg: dict) -> dict:
    """Keyword arguments for the offline planner's convergence controls."""
    return {"eps_block": as_float(cfg, "scenario.eps1"),
            "eps_outer": as_float(cfg, "scenario.eps2"),
            "max_outer": as_int(cfg, "scenario.max_outer")}


def online_from_config(cfg: dict) -> OnlineConfig:
    try:
        return OnlineConfig(eps_q=as_float(cfg, "online.eps_Q"),
                            eps_v=as_float(cfg, "online.eps_v"),
                            eps3=as_float(cfg, "online.eps3"),
                            sca_cap=as_int(cfg, "online.sca_cap"),
                            enforce_caps=as_bool(cfg, "online.enforce_caps"))
    except ValueError as exc:
        raise ConfigError(f"online: {exc}") from exc


def city_from_config(cfg: dict) -> tuple:
    """(generation parameters, margin beyond the mission box in metres)."""
    try:
        params = CityGenParams(
            built_area_ratio=as_float(cfg, "city.built_area_ratio"),
            buildings_per_km2=as_float(cfg, "city.buildings_per_km2"),
            rayleigh_height_scale=as_float(cfg, "city.rayleigh_height_scale"))
    except ValueError as exc:
        raise ConfigError(f"city: {exc}") from exc
    margin = as_float(cfg, "city.margin")
    if margin < 0:
        raise ConfigError("city.margin must be nonnegative")
    return params, margin
