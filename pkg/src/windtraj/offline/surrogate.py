"""Convex surrogates for the trajectory subproblems and the scheduling LP.

The propulsion bound and the rate floor are nonconvex in the flight path.
Around a feasible iterate both are replaced by convex restrictions that are
tight at the iterate and pessimistic elsewhere:

 * the two quadratic-over-linear auxiliaries are kept as rotated cones and
   their coupling inequalities replaced by tangent under-estimators,
 * the rate floor is replaced by its tangent plane in (exp(-logit), squared
   link distance), a global under-estimator by joint convexity, with the
   exponential reached through chord majorants and the elevation angle
   through an affine (horizontal) or chord-pair (vertical) lower bound,
 * wind along the vertical subproblem is linearized in altitude per sample;
   this is the one modeling step that is not a guaranteed bound, so the
   vertical step runs under a shrinking trust region policed by the exact
   objective.

Each step object solves its fractional program by the parametric method,
reusing one compiled constraint matrix for every objective re-solve.

Rate-block distances are expressed in km (squared: km^2) so cone rows stay
near unit scale; all other quantities are SI.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..airlink import ChannelParams
from ..convex import ProgramBuilder, SolverError, dinkelbach, solve
from ..propulsion import AeroParams
from .exact import tight_slacks
from .scenario import CAP_MARGIN, Scenario, Schedule, Trajectory

__all__ = [
    "lin_quad_over_lin", "lin_speed_sq", "RateTangent", "rate_tangent",
    "rate_floor_lb", "exp_chords", "build_slack_constraints",
    "build_rate_block", "SlackRefs", "HorizontalStep", "VerticalStep",
    "schedule_program",
]

_DEG = 180.0 / math.pi
_ACTIVE_WEIGHT = 1e-12          # schedule weights below this get no rate block


# ------------------------------------------------------- pure bound algebra

def lin_quad_over_lin(s, m, s_t, m_t):
    """Tangent of s^2/m at (s_t, m_t): 2 r s - r^2 m with r = s_t/m_t.

    Under-estimates s^2/m for every m > 0 (weighted AM-GM), with equality
    at the expansion point.
    """
    r = s_t / m_t
    return 2.0 * r * np.asarray(s) - r ** 2 * np.asarray(m)


def lin_speed_sq(v, v_t):
    """Tangent of ||v||^2 at v_t; under-estimates by ||v - v_t||^2 >= 0."""
    v = np.asarray(v, dtype=float)
    v_t = np.asarray(v_t, dtype=float)
    return 2.0 * float(v_t @ v) - float(v_t @ v_t)


@dataclass(frozen=True)
class RateTangent:
    """Tangent-plane data of the rate floor at one (user, slot) iterate.

    The floor  (A3 + A4/(1+zeta)) * log2(1 + gamma0 * phi^(-aL/2))  is
    jointly convex in zeta = exp(-(A1+A2*theta)) and phi = squared link
    distance, so the plane  c0 - c_zeta*(zeta-zeta_t) - c_phi*(phi-phi_t)
    bounds it from below everywhere.
    """

    c0: float
    c_zeta: float
    c_phi: float                # per m^2
    zeta_t: float
    u_t: float
    phi_t: float                # m^2


def rate_tangent(channel: ChannelParams, phi_t: float,
                 theta_t: float) -> RateTangent:
    if phi_t <= 0:
        raise ValueError("squared link distance must be positive")
    u_t = channel.A1 + channel.A2 * theta_t
    zeta_t = math.exp(-u_t)
    xi = 1.0 + zeta_t
    g0 = channel.gamma0
    a_l = channel.alpha_L
    r_l = math.log2(1.0 + g0 * phi_t ** (-a_l / 2.0))
    p_l = channel.A3 + channel.A4 / xi
    c_zeta = channel.A4 / xi ** 2 * r_l
    c_phi = p_l * math.log2(math.e) * g0 * a_l / \
        (2.0 * phi_t * (phi_t ** (a_l / 2.0) + g0))
    return RateTangent(c0=p_l * r_l, c_zeta=c_zeta, c_phi=c_phi,
                       zeta_t=zeta_t, u_t=u_t, phi_t=phi_t)


def rate_floor_lb(tan: RateTangent, zeta, phi):
    """Evaluate the tangent plane (phi in m^2)."""
    return (tan.c0 - tan.c_zeta * (np.asarray(zeta) - tan.zeta_t)
            - tan.c_phi * (np.asarray(phi) - tan.phi_t))


def exp_chords(u_t: float, u_lo: float, u_hi: float) -> list:
    """Chord majorants of exp(-u) on [u_lo, u_t] and [u_t, u_hi].

    Each is returned as (slope, intercept); their pointwise max dominates
    exp(-u) on the whole interval and touches it at u_t. A degenerate side
    collapses to the tangent there, which keeps the touching property.
    """
    if not u_lo <= u_t <= u_hi:
        raise ValueError("expansion point must lie inside the interval")
    out = []
    for a, b in ((u_lo, u_t), (u_t, u_hi)):
        if b - a < 1e-9:
            s = -math.exp(-u_t)
            out.append((s, math.exp(-u_t) - s * u_t))
        else:
            s = (math.exp(-b) - math.exp(-a)) / (b - a)
            out.append((s, math.exp(-a) - s * a))
    return out


# --------------------------------------------------- propulsion-bound block

@dataclass
class SlackRefs:
    """Variable handles of the propulsion block plus its linear cost."""

    load: list
    inflow: list
    blade: list
    induced: list
    climb: list
    drag_r: list
    power_terms: list           # [(ref, coef array)] summing to the power bound

    def power_value(self, sol) -> float:
        return float(sum(np.dot(coef, sol.values[ref.name])
                         for ref, coef in self.power_terms))


def _scalarize(vec_terms, vec_const, w):
    """Project an affine 3-vector expression onto w."""
    terms = [(ref, w @ coef) for ref, coef in vec_terms]
    return terms, float(w @ np.asarray(vec_const))


def _stack_samples(rel_terms, rel_const):
    """Concatenate per-sample affine 3-vectors into one tall expression."""
    n_s = len(rel_terms)
    acc, order = {}, []
    for i, terms in enumerate(rel_terms):
        for ref, coef in terms:
            if id(ref) not in acc:
                acc[id(ref)] = (ref, np.zeros((3 * n_s, coef.shape[1])))
                order.append(id(ref))
            acc[id(ref)][1][3 * i:3 * i + 3] += coef
    return [acc[k] for k in order], np.asarray(rel_const).reshape(-1)


@dataclass
class _IntervalModel:
    """Affine descriptions of one interval's kinematics in the subproblem's
    decision variables: full 3-d velocity, acceleration, and the per-sample
    velocity relative to (possibly linearized) wind."""

    vel_terms: list
    vel_const: np.ndarray
    acc_terms: list
    acc_const: np.ndarray
    rel_terms: list             # one term-list per wind sample
    rel_const: np.ndarray       # (n_samples, 3)


def build_slack_constraints(b: ProgramBuilder, models: list,
                            tight, v_iter: np.ndarray, acc_iter: np.ndarray,
                            winds: np.ndarray, aero: AeroParams,
                            tag: str = "") -> SlackRefs:
    """Emit the propulsion-bound block for every interval model.

    Every auxiliary is expressed as a multiple of its value at the iterate
    (`tight` plus the iterate kinematics), so at the iterate each variable
    equals one and every cone sits at unit scale; without this the raw
    quantities span seven orders of magnitude and the interior-point solver
    stalls. In anchored variables the two power couplings reduce to the
    tangent of s^2/m at (1, 1), which is 2s - m. Rejects non-positive
    anchors.
    """
    if np.any(tight.load <= 0) or np.any(tight.inflow <= 0):
        raise ValueError("iterate slack anchors must be positive")
    bc = aero.delta * aero.rho * aero.s_solidity * aero.A_disc / 8.0
    ic = 2.0 * (1.0 + aero.c_f) * aero.rho * aero.A_disc
    dc = 0.5 * aero.rho * aero.S_FP
    two_rho_a = 2.0 * aero.rho * aero.A_disc
    k = 2.0 / aero.c_T
    one = np.ones(1)
    refs = SlackRefs([], [], [], [], [], [], [])
    for n, mod in enumerate(models):
        n_s = len(mod.rel_terms)
        a_load = float(tight.load[n])
        a_inf = float(tight.inflow[n])
        a_blade = float(tight.blade_scale[n])
        a_ind = float(tight.induced_scale[n])
        nu_t = float(v_iter[n] @ v_iter[n])
        sig1 = k * a_load + 3.0 * nu_t
        a_nu = max(nu_t, 1.0)
        a_climb = max(math.sqrt(nu_t), 1.0)
        body_t = aero.m * acc_iter[n] + np.array([0.0, 0.0, aero.weight])
        a_thr = max(float(np.linalg.norm(body_t)), 1.0)
        rel_t = v_iter[n] - winds[:, n, :]
        a_rel = np.maximum(np.linalg.norm(rel_t, axis=1), 1.0)
        a_tw = max(float((np.linalg.norm(rel_t, axis=1) ** 2).mean()), 1.0)

        load = b.add_var(f"load{tag}{n}", 1, lb=0)
        inflow = b.add_var(f"inflow{tag}{n}", 1, lb=0)
        blade = b.add_var(f"blade{tag}{n}", 1, lb=0)
        induced = b.add_var(f"induced{tag}{n}", 1, lb=0)
        nu = b.add_var(f"speedsq{tag}{n}", 1, lb=0)
        climb = b.add_var(f"climb{tag}{n}", 1, lb=0)
        s_t = b.add_var(f"thrust{tag}{n}", 1, lb=0)
        t_w = b.add_var(f"relsq{tag}{n}", 1, lb=0)
        u_d = b.add_var(f"rel{tag}{n}", n_s, lb=0)
        r_d = b.add_var(f"relcube{tag}{n}", n_s, lb=0)

        def scaled(terms, f):
            return [(ref, coef * f) for ref, coef in terms]

        b.add_norm_le(scaled(mod.vel_terms, 1.0 / a_climb),
                      mod.vel_const / a_climb, [(climb, one)], 0.0)
        rt_nu = 1.0 / math.sqrt(a_nu)
        b.add_square_over_lin(scaled(mod.vel_terms, rt_nu),
                              mod.vel_const * rt_nu, [(nu, one)], 0.0,
                              [], 1.0)
        b.add_norm_le(scaled(mod.acc_terms, aero.m / a_thr),
                      (aero.m * mod.acc_const
                       + np.array([0.0, 0.0, aero.weight])) / a_thr,
                      [(s_t, one)], 0.0)
        for i in range(n_s):
            e_i = np.zeros(n_s)
            e_i[i] = 1.0
            b.add_norm_le(scaled(mod.rel_terms[i], 1.0 / a_rel[i]),
                          mod.rel_const[i] / a_rel[i], [(u_d, e_i)], 0.0)
            b.add_pow_cube([(u_d, e_i)], 0.0, [(r_d, e_i)], 0.0)
        stack_t, stack_c = _stack_samples(mod.rel_terms, mod.rel_const)
        rt_tw = 1.0 / math.sqrt(n_s * a_tw)
        b.add_square_over_lin(scaled(stack_t, rt_tw), stack_c * rt_tw,
                              [(t_w, one)], 0.0, [], 1.0)
        # load floor: thrust plus mean-square drag, in units of the anchor
        den = two_rho_a * a_load
        b.add_ineq([(s_t, np.array([[a_thr / den]])),
                    (t_w, np.array([[dc * a_tw / den]])),
                    (load, np.full((1, 1), -1.0))], [0.0])
        # blade-power coupling: anchored tangent of the quad-over-lin
        b.add_square_over_lin(
            [(load, np.array([[k * a_load / sig1]])),
             (nu, np.array([[3.0 * a_nu / sig1]]))], [0.0],
            [(blade, np.array([2.0])), (load, np.array([-1.0]))], 0.0,
            [], 1.0)
        # induced-flow coupling, speed squared linearized at the iterate
        vt = v_iter[n]
        f_l2 = a_inf / a_load ** 2
        y_terms, y_const = _scalarize(mod.vel_terms, mod.vel_const,
                                      2.0 * f_l2 * vt)
        b.add_square_over_lin(
            [(load, np.ones((1, 1)))], [0.0], [(inflow, one)], 0.0,
            [(inflow, np.array([a_inf * f_l2]))] + y_terms,
            y_const - f_l2 * float(vt @ vt))
        # induced-power coupling: anchored tangent again
        b.add_square_over_lin(
            [(load, np.ones((1, 1)))], [0.0],
            [(induced, np.array([2.0])), (inflow, np.array([-1.0]))], 0.0,
            [], 1.0)

        refs.load.append(load)
        refs.inflow.append(inflow)
        refs.blade.append(blade)
        refs.induced.append(induced)
        refs.climb.append(climb)
        refs.drag_r.append(r_d)
        refs.power_terms += [(blade, np.array([bc * a_blade])),
                             (induced, np.array([ic * a_ind])),
                             (climb, np.array([aero.weight * a_climb])),
                             (r_d, dc / n_s * a_rel ** 3)]
    return refs


# ----------------------------------------------------------- rate machinery

def build_rate_block(b: ProgramBuilder, tag: str, channel: ChannelParams,
                     tan: RateTangent, *, q_ref=None, g_xy=None, z_fix=None,
                     q_t=None, z_ref=None, x_fix=None, z_t=None,
                     z_lo=None, z_hi=None):
    """Emit one (user, slot) rate block; returns (terms, const) for the
    affine rate lower bound.

    Horizontal form (q_ref/g_xy/z_fix/q_t): the elevation bound is the
    tangent of arctan in the horizontal distance. Vertical form
    (z_ref/x_fix/z_t/z_lo/z_hi): the elevation is concave in altitude, so a
    chord pair below it is used. The exponential chord majorants always
    span the full elevation range, so they stay valid wherever the solver
    puts the slot.
    """
    one = np.ones(1)
    x_km = None
    if q_ref is not None:
        x_km = b.add_var(f"dist{tag}", 1, lb=0)
        b.add_norm_le([(q_ref, np.eye(2))], -np.asarray(g_xy, dtype=float),
                      [(x_km, np.array([1000.0]))], 0.0)
    phi = b.add_var(f"phi{tag}", 1, lb=0)
    theta = b.add_var(f"elev{tag}", 1)
    zeta = b.add_var(f"zeta{tag}", 1, lb=0)
    if q_ref is not None:
        # phi >= x^2 + z^2 (km^2) with z fixed
        b.add_square_over_lin([(x_km, np.ones((1, 1)))], [0.0],
                              [(phi, one)], -(z_fix / 1000.0) ** 2, [], 1.0)
        x_t = float(np.linalg.norm(np.asarray(q_t, dtype=float)
                                   - np.asarray(g_xy, dtype=float)))
        # theta <= tangent of atan(z/x) at x_t, in degrees
        slope = _DEG * z_fix / tan.phi_t          # -d theta / d x_m
        b.add_ineq([(theta, np.ones((1, 1))),
                    (x_km, np.array([[slope * 1000.0]]))],
                   [_DEG * math.atan2(z_fix, x_t) + slope * x_t])
    else:
        # phi >= x^2 + z^2 (km^2) with horizontal distance fixed
        b.add_square_over_lin([(z_ref, np.full((1, 1), 1e-3))], [0.0],
                              [(phi, one)], -(x_fix / 1000.0) ** 2, [], 1.0)
        # chord pair under the concave elevation-vs-altitude curve
        for a, c in ((z_lo, z_t), (z_t, z_hi)):
            if c - a < 1e-9:
                s = _DEG * x_fix / (x_fix ** 2 + z_t ** 2)
                icpt = _DEG * math.atan2(z_t, x_fix) - s * z_t
            else:
                s = _DEG * (math.atan2(c, x_fix) - math.atan2(a, x_fix)) / (c - a)
                icpt = _DEG * math.atan2(a, x_fix) - s * a
            b.add_ineq([(theta, np.ones((1, 1))),
                        (z_ref, np.array([[-s]]))], [icpt])
    # zeta >= each chord majorant of exp(-(A1 + A2*theta)) over [0, 90] deg
    for s, icpt in exp_chords(tan.u_t, channel.A1, channel.A1 + 90.0 * channel.A2):
        b.add_ineq([(theta, np.array([[s * channel.A2]])),
                    (zeta, np.full((1, 1), -1.0))],
                   [-(icpt + s * channel.A1)])
    terms = [(zeta, np.array([-tan.c_zeta])),
             (phi, np.array([-tan.c_phi * 1e6]))]
    const = tan.c0 + tan.c_zeta * tan.zeta_t + tan.c_phi * tan.phi_t
    return terms, const


def _emit_rate_coupling(b, rmin, schedule: Schedule, pair_rates: dict):
    """R_min below each user's scheduled rate-bound sum."""
    w = schedule.weights
    for k in range(w.shape[0]):
        terms = [(rmin, np.ones((1, 1)))]
        rhs = 0.0
        for n in range(w.shape[1]):
            if w[k, n] <= _ACTIVE_WEIGHT:
                continue
            r_terms, r_const = pair_rates[(k, n)]
            terms += [(ref, -w[k, n] * coef.reshape(1, -1))
                      for ref, coef in r_terms]
            rhs += w[k, n] * r_const
        b.add_ineq(terms, [rhs])


def _dense_cost(n: int, terms) -> np.ndarray:
    c = np.zeros(n)
    for ref, coef in terms:
        c[ref.offset:ref.offset + ref.size] += coef
    return c


# ------------------------------------------------------------ step objects

class _FractionalStep:
    """Shared parametric-solve driver for the two trajectory steps."""

    def __init__(self, q_init: float, dink_tol: float = 1e-4):
        self._q_init = float(q_init)
        self._dink_tol = float(dink_tol)

    def _run(self, prog, rmin_ref, slack_refs):
        c_r = np.zeros(prog.n)
        c_r[rmin_ref.offset] = 1.0
        c_p = _dense_cost(prog.n, slack_refs.power_terms)

        def inner(q):
            sol = solve(prog, objective_override=c_r - q * c_p)
            if sol.status == "infeasible" or sol.achieved_tol > 1e-5:
                raise SolverError(
                    f"trajectory subproblem: {sol.status} "
                    f"(residual {sol.achieved_tol:.2e})")
            return sol

        res = dinkelbach(lambda s: s.value(rmin_ref),
                         lambda s: slack_refs.power_value(s),
                         inner, q_init=self._q_init, tol=self._dink_tol)
        return res.x


class HorizontalStep(_FractionalStep):
    """One convex step of the horizontal path at fixed altitude profile.

    Builds the full surrogate around `traj`, maximizes the bounded rate
    over bounded power by the parametric method, and returns the updated
    trajectory with endpoints snapped exactly.
    """

    def __init__(self, traj: Trajectory, schedule: Schedule,
                 winds: np.ndarray, scenario: Scenario, r_tr: float = 80.0,
                 q_init: float = 0.0, dink_tol: float = 1e-4):
        super().__init__(q_init, dink_tol)
        self._traj = traj
        n = scenario.n_pos
        dt = scenario.slot_dt
        b = ProgramBuilder()
        qs = [b.add_var(f"q{i}", 2) for i in range(n)]
        vs = [b.add_var(f"v{i}", 2) for i in range(n - 1)]
        eye2, eye23 = np.eye(2), np.vstack([np.eye(2), np.zeros((1, 2))])
        b.add_eq([(qs[0], eye2)], scenario.q_start[:2])
        b.add_eq([(qs[-1], eye2)], scenario.q_end[:2])
        pos_t = traj.positions
        v_t = traj.velocities()
        vz = v_t[:, 2]
        for i in range(n - 1):
            b.add_eq([(qs[i + 1], eye2), (qs[i], -eye2), (vs[i], -dt * eye2)],
                     np.zeros(2))
            b.add_norm_le([(vs[i], eye2)], np.zeros(2),
                          [], scenario.v_h_max - CAP_MARGIN)
        for i in range(1, n - 1):
            b.add_norm_le([(qs[i], eye2)], -pos_t[i, :2], [], r_tr)
        models = []
        for i in range(n - 1):
            j = min(i, n - 3)       # tail interval reuses the previous slope
            acc_terms = [(vs[j + 1], eye23 / dt), (vs[j], -eye23 / dt)]
            acc_const = np.array([0.0, 0.0, (vz[j + 1] - vz[j]) / dt])
            rel_terms = [[(vs[i], eye23)] for _ in range(winds.shape[0])]
            rel_const = np.array([0.0, 0.0, vz[i]]) - winds[:, i, :]
            models.append(_IntervalModel([(vs[i], eye23)],
                                         np.array([0.0, 0.0, vz[i]]),
                                         acc_terms, acc_const,
                                         rel_terms, rel_const))
        slacks = build_slack_constraints(
            b, models, tight_slacks(traj, winds, scenario.aero),
            v_t, traj.accelerations(), winds, scenario.aero)
        rmin = b.add_var("rmin", 1, lb=0)
        pair_rates = {}
        g = scenario.user_xy()
        w = schedule.weights
        for k in range(scenario.n_users):
            for i in range(n):
                if w[k, i] <= _ACTIVE_WEIGHT:
                    continue
                z_i = pos_t[i, 2]
                phi_t = float((pos_t[i, :2] - g[k]) @ (pos_t[i, :2] - g[k])
                              + z_i ** 2)
                theta_t = _DEG * math.atan2(
                    z_i, float(np.linalg.norm(pos_t[i, :2] - g[k])))
                tan = rate_tangent(scenario.channel, phi_t, theta_t)
                pair_rates[(k, i)] = build_rate_block(
                    b, f"_{k}_{i}", scenario.channel, tan,
                    q_ref=qs[i], g_xy=g[k], z_fix=z_i, q_t=pos_t[i, :2])
        _emit_rate_coupling(b, rmin, schedule, pair_rates)
        b.maximize([(rmin, np.ones(1))])
        self._prog = b.build()
        self._qs = qs
        self._rmin = rmin
        self._slacks = slacks

    def solve(self) -> Trajectory:
        sol = self._run(self._prog, self._rmin, self._slacks)
        xy = np.vstack([sol.values[q.name] for q in self._qs])
        xy[0] = self._traj.positions[0, :2]
        xy[-1] = self._traj.positions[-1, :2]
        return self._traj.with_horizontal(xy)


class VerticalStep(_FractionalStep):
    """One convex step of the altitude profile at fixed ground track.

    Wind is linearized in altitude around the iterate per sample, which is
    why this step must run inside a trust region of half-width `tau` and be
    accepted against the exact objective.
    """

    def __init__(self, traj: Trajectory, schedule: Schedule,
                 winds: np.ndarray, scenario: Scenario, tau: float = 50.0,
                 q_init: float = 0.0, dink_tol: float = 1e-4):
        super().__init__(q_init, dink_tol)
        self._traj = traj
        self._scenario = scenario
        n = scenario.n_pos
        dt = scenario.slot_dt
        pos_t = traj.positions
        z_t = pos_t[:, 2]
        band = scenario.h_max - scenario.h_min
        pad = CAP_MARGIN if band > 2 * CAP_MARGIN else 0.0
        lo = np.maximum(scenario.h_min + pad, z_t - tau)
        hi = np.minimum(scenario.h_max - pad, z_t + tau)
        lo[0] = hi[0] = scenario.q_start[2]
        lo[-1] = hi[-1] = scenario.q_end[2]
        b = ProgramBuilder()
        zs = [b.add_var(f"z{i}", 1, lb=lo[i], ub=hi[i]) for i in range(n)]
        ws = [b.add_var(f"vz{i}", 1, lb=-scenario.v_v_max + CAP_MARGIN,
                        ub=scenario.v_v_max - CAP_MARGIN)
              for i in range(n - 1)]
        one = np.ones((1, 1))
        b.add_eq([(zs[0], one)], [scenario.q_start[2]])
        b.add_eq([(zs[-1], one)], [scenario.q_end[2]])
        for i in range(n - 1):
            b.add_eq([(zs[i + 1], one), (zs[i], -one), (ws[i], -dt * one)],
                     [0.0])
        v_t = traj.velocities()
        col = np.array([[0.0], [0.0], [1.0]])
        p_exp = scenario.wind.p_exp if scenario.wind is not None else 0.0
        models = []
        for i in range(n - 1):
            j = min(i, n - 3)
            acc_terms = [(ws[j + 1], col / dt), (ws[j], -col / dt)]
            acc_const = np.array([(v_t[j + 1, 0] - v_t[j, 0]) / dt,
                                  (v_t[j + 1, 1] - v_t[j, 1]) / dt, 0.0])
            vel_const = np.array([v_t[i, 0], v_t[i, 1], 0.0])
            rel_terms, rel_const = [], []
            for s in range(winds.shape[0]):
                w_t = winds[s, i]
                dw = (p_exp / z_t[i]) * w_t
                rel_terms.append([(ws[i], col), (zs[i], -dw.reshape(3, 1))])
                rel_const.append(vel_const - w_t + dw * z_t[i])
            models.append(_IntervalModel([(ws[i], col)], vel_const,
                                         acc_terms, acc_const,
                                         rel_terms, np.array(rel_const)))
        slacks = build_slack_constraints(
            b, models, tight_slacks(traj, winds, scenario.aero),
            v_t, traj.accelerations(), winds, scenario.aero)
        rmin = b.add_var("rmin", 1, lb=0)
        pair_rates = {}
        g = scenario.user_xy()
        w = schedule.weights
        for k in range(scenario.n_users):
            for i in range(n):
                if w[k, i] <= _ACTIVE_WEIGHT:
                    continue
                x_fix = max(float(np.linalg.norm(pos_t[i, :2] - g[k])), 1e-9)
                phi_t = x_fix ** 2 + z_t[i] ** 2
                theta_t = _DEG * math.atan2(z_t[i], x_fix)
                tan = rate_tangent(scenario.channel, phi_t, theta_t)
                pair_rates[(k, i)] = build_rate_block(
                    b, f"_{k}_{i}", scenario.channel, tan,
                    z_ref=zs[i], x_fix=x_fix, z_t=z_t[i],
                    z_lo=float(lo[i]), z_hi=float(hi[i]))
        _emit_rate_coupling(b, rmin, schedule, pair_rates)
        b.maximize([(rmin, np.ones(1))])
        self._prog = b.build()
        self._zs = zs
        self._rmin = rmin
        self._slacks = slacks

    def solve(self) -> Trajectory:
        sol = self._run(self._prog, self._rmin, self._slacks)
        z = np.array([float(sol.values[zr.name][0]) for zr in self._zs])
        z = np.clip(z, self._scenario.h_min, self._scenario.h_max)
        z[0] = self._traj.positions[0, 2]
        z[-1] = self._traj.positions[-1, 2]
        return self._traj.with_vertical(z)


# -------------------------------------------------------------- schedule LP

def schedule_program(rates_kn: np.ndarray):
    """LP maximizing the minimum scheduled rate sum at fixed rates.

    Returns (program, weight refs per user, r_min ref).
    """
    rates_kn = np.asarray(rates_kn, dtype=float)
    n_k, n = rates_kn.shape
    b = ProgramBuilder()
    a_refs = [b.add_var(f"a{k}", n, lb=0.0, ub=1.0) for k in range(n_k)]
    rmin = b.add_var("rmin", 1, lb=0.0)
    b.add_ineq([(a, np.eye(n)) for a in a_refs], np.ones(n))
    for k in range(n_k):
        b.add_ineq([(rmin, np.ones((1, 1))),
                    (a_refs[k], -rates_kn[k][None, :])], [0.0])
    b.maximize([(rmin, np.ones(1))])
    return b.build(), a_refs, rmin
