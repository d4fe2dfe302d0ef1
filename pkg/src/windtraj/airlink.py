"""Air-to-ground link: logistic LoS probability plus a procedural box city.

The planner works with the smooth probabilistic model (elevation-angle
logistic times conditional spectral efficiencies). Online evaluation swaps
in hard geometry: a generated city of axis-aligned boxes and a segment
intersection test deciding LoS per slot. All gains are linear scale; dB
conversion happens once, in from_db.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ChannelParams",
    "GroundUser",
    "CityGenParams",
    "CityModel",
    "elevation_deg",
    "plos",
    "rates",
    "expected_rate",
    "rate_floor",
    "generate_city",
    "los_blocked",
    "realized_rate",
    "save_city",
    "load_city",
]


@dataclass(frozen=True)
class ChannelParams:
    """Logistic LoS constants and linear-scale link budget."""

    A1: float
    A2: float
    A3: float
    A4: float
    rho0: float      # reference gain at 1 m, linear
    mu0: float       # extra NLoS attenuation, linear
    alpha_L: float
    alpha_N: float
    sigma2: float    # noise power, W
    Gamma: float     # SNR gap, linear
    P0: float        # transmit power, W
    B: float         # bandwidth, Hz (reporting only)

    def __post_init__(self) -> None:
        if abs(self.A3 + self.A4 - 1.0) > 1e-12:
            raise ValueError("A3 + A4 must equal 1")
        if not (self.A1 < 0.0 and self.A2 > 0.0 and self.A4 > 0.0):
            raise ValueError("need A1 < 0, A2 > 0, A4 > 0")
        if not (self.alpha_N > self.alpha_L > 0.0):
            raise ValueError("need alpha_N > alpha_L > 0")
        for name in ("rho0", "mu0", "sigma2", "Gamma", "P0", "B"):
            if not (getattr(self, name) > 0.0):
                raise ValueError(f"{name} must be positive")

    @property
    def gamma0(self) -> float:
        """Reference SNR at 1 m: rho0 * P0 / (sigma2 * Gamma)."""
        return self.rho0 * self.P0 / (self.sigma2 * self.Gamma)

    @classmethod
    def from_db(cls, A1, A2, A3, A4, rho0_db, mu0_db, alpha_L, alpha_N,
                sigma2_dbm, Gamma_db, P0, B) -> "ChannelParams":
        return cls(A1=A1, A2=A2, A3=A3, A4=A4,
                   rho0=10.0 ** (rho0_db / 10.0),
                   mu0=10.0 ** (mu0_db / 10.0),
                   alpha_L=alpha_L, alpha_N=alpha_N,
                   sigma2=10.0 ** ((sigma2_dbm - 30.0) / 10.0),
                   Gamma=10.0 ** (Gamma_db / 10.0), P0=P0, B=B)


@dataclass(frozen=True)
class GroundUser:
    id: int
    position: np.ndarray

    def __post_init__(self) -> None:
        pos = np.asarray(self.position, dtype=float)
        if pos.shape != (2,):
            raise ValueError("position must be a ground-plane 2-vector")
        object.__setattr__(self, "position", pos)


@dataclass(frozen=True)
class CityGenParams:
    built_area_ratio: float = 0.25
    buildings_per_km2: float = 300.0
    rayleigh_height_scale: float = 20.0

    def __post_init__(self) -> None:
        if self.built_area_ratio < 0.0 or self.buildings_per_km2 < 0.0 \
                or self.rayleigh_height_scale <= 0.0:
            raise ValueError("city parameters must be nonnegative (scale positive)")
        if self.built_area_ratio > 1.0:
            raise ValueError("built_area_ratio above 1 cannot be packed")


@dataclass(frozen=True)
class CityModel:
    """Axis-aligned boxes: rows of (xmin, ymin, xmax, ymax, height)."""

    buildings: np.ndarray
    gen_params: CityGenParams
    seed: int
    bounds: tuple

    def __post_init__(self) -> None:
        b = np.asarray(self.buildings, dtype=float).reshape(-1, 5)
        if b.size and not np.all(b[:, 4] > 0.0):
            raise ValueError("building heights must be positive")
        object.__setattr__(self, "buildings", b)

    @property
    def n_buildings(self) -> int:
        return self.buildings.shape[0]


def elevation_deg(q, z: float, gk) -> float:
    """Elevation angle (degrees) seen from the ground user; 90 overhead."""
    q = np.asarray(q, dtype=float)
    gk = np.asarray(gk, dtype=float)
    return math.degrees(math.atan2(z, float(np.linalg.norm(q - gk))))


def plos(theta_deg, params: ChannelParams):
    """LoS probability as a logistic in the elevation angle."""
    th = np.asarray(theta_deg, dtype=float)
    if np.any(th < 0.0) or np.any(th > 90.0):
        raise ValueError("elevation must lie in [0, 90] degrees")
    out = params.A3 + params.A4 / (1.0 + np.exp(-(params.A1 + params.A2 * th)))
    return float(out) if np.isscalar(theta_deg) else out


def rates(d, params: ChannelParams):
    """Conditional spectral efficiencies (R_LoS, R_NLoS) at link distance d."""
    dd = np.asarray(d, dtype=float)
    if np.any(dd <= 0.0):
        raise ValueError("distance must be positive")
    g = params.gamma0
    r_l = np.log2(1.0 + g * dd ** -params.alpha_L)
    r_n = np.log2(1.0 + params.mu0 * g * dd ** -params.alpha_N)
    if np.isscalar(d):
        return float(r_l), float(r_n)
    return r_l, r_n


def _link_distance(q, z, gk) -> float:
    q = np.asarray(q, dtype=float)
    gk = np.asarray(gk, dtype=float)
    return math.hypot(float(np.linalg.norm(q - gk)), z)


def expected_rate(q, z: float, gk, params: ChannelParams) -> float:
    """LoS-probability mixture of the two conditional rates."""
    p = plos(elevation_deg(q, z, gk), params)
    r_l, r_n = rates(_link_distance(q, z, gk), params)
    return p * r_l + (1.0 - p) * r_n


def rate_floor(q, z: float, gk, params: ChannelParams) -> float:
    """Planning lower bound: the NLoS contribution is dropped."""
    p = plos(elevation_deg(q, z, gk), params)
    r_l, _ = rates(_link_distance(q, z, gk), params)
    return p * r_l


def generate_city(gen_params: CityGenParams, bounds, seed: int,
                  users=()) -> CityModel:
    """Grid-with-jitter buildings over bounds = (xmin, xmax, ymin, ymax).

    One building per grid cell, footprint area a fixed fraction of the cell,
    center jittered so the footprint stays inside its cell (hence disjoint
    footprints), Rayleigh heights. Footprints covering a user are dropped.
    """
    xmin, xmax, ymin, ymax = (float(v) for v in bounds)
    if not (xmax > xmin and ymax > ymin):
        raise ValueError("empty area bounds")
    gp = gen_params
    if gp.buildings_per_km2 == 0.0:
        return CityModel(np.empty((0, 5)), gp, int(seed), (xmin, xmax, ymin, ymax))
    pitch = 1000.0 / math.sqrt(gp.buildings_per_km2)
    side = pitch * math.sqrt(gp.built_area_ratio)
    nx = int((xmax - xmin) / pitch)
    ny = int((ymax - ymin) / pitch)
    if nx < 1 or ny < 1:
        raise ValueError("area too small for one building cell at this density")
    rng = np.random.Generator(np.random.PCG64(seed))
    ix, iy = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    ix = ix.ravel()
    iy = iy.ravel()
    slack = pitch - side
    cx = xmin + ix * pitch + side / 2.0 + rng.random(ix.size) * slack
    cy = ymin + iy * pitch + side / 2.0 + rng.random(ix.size) * slack
    h = rng.rayleigh(gp.rayleigh_height_scale, ix.size)
    boxes = np.column_stack([cx - side / 2.0, cy - side / 2.0,
                             cx + side / 2.0, cy + side / 2.0, h])
    keep = np.ones(boxes.shape[0], dtype=bool)
    for u in users:
        pos = u.position if isinstance(u, GroundUser) else np.asarray(u, dtype=float)
        inside = (boxes[:, 0] <= pos[0]) & (pos[0] <= boxes[:, 2]) \
            & (boxes[:, 1] <= pos[1]) & (pos[1] <= boxes[:, 3])
        keep &= ~inside
    return CityModel(boxes[keep], gp, int(seed), (xmin, xmax, ymin, ymax))


def los_blocked(q, z: float, gk, city: CityModel) -> bool:
    """Segment-vs-box test from the user (ground) to the vehicle at altitude z.

    Standard slab method, vectorized over buildings; touching a face counts
    as blocked.
    """
    b = city.buildings
    if b.shape[0] == 0:
        return False
    q = np.asarray(q, dtype=float)
    gk = np.asarray(gk, dtype=float)
    p0 = np.array([gk[0], gk[1], 0.0])
    d = np.array([q[0] - gk[0], q[1] - gk[1], z])
    lo = np.column_stack([b[:, 0], b[:, 1], np.zeros(b.shape[0])])
    hi = np.column_stack([b[:, 2], b[:, 3], b[:, 4]])
    tmin = np.zeros(b.shape[0])
    tmax = np.ones(b.shape[0])
    ok = np.ones(b.shape[0], dtype=bool)
    for ax in range(3):
        if abs(d[ax]) < 1e-12:
            ok &= (lo[:, ax] <= p0[ax]) & (p0[ax] <= hi[:, ax])
        else:
            t1 = (lo[:, ax] - p0[ax]) / d[ax]
            t2 = (hi[:, ax] - p0[ax]) / d[ax]
            tmin = np.maximum(tmin, np.minimum(t1, t2))
            tmax = np.minimum(tmax, np.maximum(t1, t2))
    return bool(np.any(ok & (tmax >= tmin)))


def realized_rate(q, z: float, gk, city: CityModel,
                  params: ChannelParams) -> float:
    """Geometric-LoS rate: the LoS branch if the segment is clear, else NLoS."""
    r_l, r_n = rates(_link_distance(q, z, gk), params)
    return r_n if los_blocked(q, z, gk, city) else r_l


_CITY_FORMAT = "city-v1"


def save_city(city: CityModel, path) -> None:
    gp = city.gen_params
    with open(path, "w") as fh:
        fh.write(f"# {_CITY_FORMAT}\n")
        fh.write(f"# seed {city.seed}\n")
        fh.write("# bounds %r %r %r %r\n" % tuple(city.bounds))
        fh.write("# gen %r %r %r\n" % (gp.built_area_ratio,
                                       gp.buildings_per_km2,
                                       gp.rayleigh_height_scale))
        fh.write("# columns xmin ymin xmax ymax height\n")
        for row in city.buildings:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_city(path) -> CityModel:
    rows = []
    seed = 0
    bounds = None
    gen = None
    with open(path) as fh:
        first = fh.readline().strip()
        if first != f"# {_CITY_FORMAT}":
            raise ValueError(f"unrecognized city file header: {first!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if parts[0] == "seed":
                    seed = int(parts[1])
                elif parts[0] == "bounds":
                    bounds = tuple(float(v) for v in parts[1:5])
                elif parts[0] == "gen":
                    gen = CityGenParams(*(float(v) for v in parts[1:4]))
                continue
            rows.append([float(v) for v in line.split()])
    if bounds is None or gen is None:
        raise ValueError("city file is missing bounds or generation header")
    arr = np.asarray(rows, dtype=float).reshape(-1, 5)
    return CityModel(arr, gen, seed, bounds)
