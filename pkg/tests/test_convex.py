import math

import numpy as np
import pytest

from windtraj.convex import (AffineEq, ProgramBuilder, SolverError,
                             SurrogateValidityError, dinkelbach, dump,
                             sca_drive, solve)

I3 = np.eye(3)


def build_projection(c=(5.0, -2.0, 0.5)):
    b = ProgramBuilder()
    x = b.add_var("x", 3, lb=0.0, ub=1.0)
    t = b.add_var("t", 1)
    b.add_norm_le([(x, I3)], -np.asarray(c, float), [(t, np.ones(1))], 0.0)
    b.minimize([(t, np.ones(1))])
    return b.build(), x, t


# ------------------------------------------------------------------- solve

def test_min_square_with_active_bound():
    b = ProgramBuilder()
    x = b.add_var("x", 1, lb=3.0)
    t = b.add_var("t", 1)
    b.add_square_over_lin([(x, np.ones((1, 1)))], [0.0],
                          [(t, np.ones(1))], 0.0, [], 1.0)
    b.minimize([(t, np.ones(1))])
    sol = solve(b.build())
    assert sol.is_optimal
    assert sol.value(x) == pytest.approx(3.0, abs=1e-5)
    assert sol.objective == pytest.approx(9.0, rel=1e-5)
    assert sol.achieved_tol <= 1e-6


def test_norm_projection_onto_box():
    prog, x, t = build_projection()
    sol = solve(prog)
    assert sol.is_optimal
    np.testing.assert_allclose(sol.values["x"], [1.0, 0.0, 0.5], atol=1e-5)
    assert sol.objective == pytest.approx(math.sqrt(20.0), rel=1e-6)


def test_cube_of_norm_epigraph():
    b = ProgramBuilder()
    v = b.add_var("v", 3)
    u = b.add_var("u", 1)
    t = b.add_var("t", 1)
    b.add_eq([(v, I3)], [3.0, 4.0, 0.0])
    b.add_norm_le([(v, I3)], np.zeros(3), [(u, np.ones(1))], 0.0)
    b.add_pow_cube([(u, np.ones(1))], 0.0, [(t, np.ones(1))], 0.0)
    b.minimize([(t, np.ones(1))])
    sol = solve(b.build())
    assert sol.is_optimal
    assert sol.value(u) == pytest.approx(5.0, rel=1e-5)
    assert sol.objective == pytest.approx(125.0, rel=1e-4)


def test_infeasible_box():
    b = ProgramBuilder()
    x = b.add_var("x", 1, lb=3.0, ub=2.0)
    b.minimize([(x, np.ones(1))])
    sol = solve(b.build())
    assert sol.status == "infeasible"
    assert math.isnan(sol.objective)


def test_lp_vertex_and_objective_override():
    b = ProgramBuilder()
    xy = b.add_var("xy", 2, lb=0.0)
    b.add_ineq([(xy, np.array([[1.0, 1.0]]))], [1.0])
    b.maximize([(xy, np.array([1.0, 2.0]))])
    prog = b.build()
    sol = solve(prog)
    np.testing.assert_allclose(sol.values["xy"], [0.0, 1.0], atol=1e-6)
    assert sol.objective == pytest.approx(2.0, rel=1e-6)
    # same matrices, swapped objective vector
    swapped = solve(prog, objective_override=np.array([2.0, 1.0]))
    np.testing.assert_allclose(swapped.values["xy"], [1.0, 0.0], atol=1e-6)
    assert swapped.objective == pytest.approx(2.0, rel=1e-6)


def test_solver_determinism_bitstream():
    a = solve(build_projection()[0])
    b = solve(build_projection()[0])
    assert np.array_equal(a.values["x"], b.values["x"])
    assert np.array_equal(a.values["t"], b.values["t"])
    assert a.objective == b.objective
    assert a.iterations == b.iterations


def test_builder_rejects_outside_catalog():
    b = ProgramBuilder()
    x = b.add_var("x", 2)
    with pytest.raises(TypeError):
        b.add("x * log(x) <= 1")
    with pytest.raises(TypeError):
        b.add(object())
    b.add(AffineEq(((x, np.eye(2)),), np.zeros(2)))  # catalog member passes
    with pytest.raises(ValueError):
        b.add_var("x", 1)  # duplicate name
    other = ProgramBuilder()
    y = other.add_var("y", 2)
    with pytest.raises(ValueError):
        b.add_ineq([(y, np.eye(2))], np.zeros(2))  # foreign variable
    with pytest.raises(ValueError):
        b.add_ineq([(x, np.eye(3))], np.zeros(3))  # shape mismatch
    with pytest.raises(ValueError):
        b.build()  # no objective yet
    b.minimize([(x, np.ones(2))])
    with pytest.raises(ValueError):
        b.maximize([(x, np.ones(2))])  # objective already set


def test_dump_listing():
    prog, _, _ = build_projection()
    text = dump(prog)
    assert "var x[3]" in text
    assert "NormLeAffine" in text
    assert "min" in text


# -------------------------------------------------------------- dinkelbach

def toy_inner(q):
    # argmax over [0,1] of 1 - (x - 1/2)^2 - q (1 + x)
    return min(1.0, max(0.0, 0.5 - q / 2.0))


def toy_num(x):
    return 1.0 - (x - 0.5) ** 2


def toy_den(x):
    return 1.0 + x


def test_dinkelbach_constant_denominator():
    res = dinkelbach(lambda x: x, lambda x: 1.0,
                     lambda q: 1.0, q_init=0.0, tol=1e-9)
    assert res.converged
    assert res.q_star == pytest.approx(1.0, abs=1e-12)
    assert res.iterations <= 2


def test_dinkelbach_toy_matches_grid_oracle():
    res = dinkelbach(toy_num, toy_den, toy_inner, q_init=0.0, tol=1e-6)
    assert res.converged
    grid = np.linspace(0.0, 1.0, 1_000_001)
    q_grid = float(np.max((1.0 - (grid - 0.5) ** 2) / (1.0 + grid)))
    assert abs(res.q_star - q_grid) <= 1e-4
    assert abs(res.f_trace[-1]) <= 1e-6
    assert res.q_star == pytest.approx(3.0 - math.sqrt(5.0), abs=1e-9)
    assert res.x == pytest.approx((math.sqrt(5.0) - 2.0) / 2.0, abs=1e-6)


def test_dinkelbach_from_above_and_f_monotone_in_q():
    for q0 in (0.0, 2.0):
        res = dinkelbach(toy_num, toy_den, toy_inner, q_init=q0, tol=1e-8)
        assert res.converged
        assert res.q_star == pytest.approx(3.0 - math.sqrt(5.0), abs=1e-7)
        if q0 == 2.0:
            assert res.f_trace[0] < 0.0
        pairs = sorted(zip(res.q_trace, res.f_trace))
        fs = [f for _, f in pairs]
        assert all(b <= a + 1e-12 for a, b in zip(fs, fs[1:]))


def test_dinkelbach_surfaces_failures():
    def failing(q):
        raise SolverError("inner model went infeasible")
    with pytest.raises(SolverError):
        dinkelbach(toy_num, toy_den, failing)
    with pytest.raises(ValueError):
        dinkelbach(lambda x: 1.0, lambda x: 0.0, lambda q: 0.5)


def test_dinkelbach_max_iter_returns_best():
    res = dinkelbach(toy_num, toy_den, toy_inner, q_init=0.0,
                     tol=-1.0, max_iter=3)
    assert not res.converged
    assert res.iterations == 3
    assert res.q_star == pytest.approx(3.0 - math.sqrt(5.0), abs=1e-3)


# --------------------------------------------------------------------- sca

def quad_surrogate_factory():
    """Exact epigraph model of max -(x-3)^2 over [0, 10]."""
    def build(xt):
        b = ProgramBuilder()
        x = b.add_var("x", 1, lb=0.0, ub=10.0)
        t = b.add_var("t", 1)
        b.add_square_over_lin([(x, np.ones((1, 1)))], [-3.0],
                              [(t, np.ones(1))], 0.0, [], 1.0)
        b.maximize([(t, -np.ones(1))])
        return b.build(), (lambda sol: sol.value(x))
    return build


def test_sca_exact_surrogate_converges_immediately():
    res = sca_drive(quad_surrogate_factory(), lambda x: -(x - 3.0) ** 2,
                    x0=0.0, eps_conv=1e-6)
    assert res.converged
    assert res.x == pytest.approx(3.0, abs=1e-4)
    assert len(res.trace) == 2  # a single real step reaches the optimum
    assert all(b >= a - 1e-9 for a, b in zip(res.trace, res.trace[1:]))


def test_sca_linearized_concave_constraint():
    # maximize x over [0,10] with (x-2)^2 >= 1 kept via its tangent
    def g(x):
        return 1.0 - (x - 2.0) ** 2

    def build(xt):
        b = ProgramBuilder()
        x = b.add_var("x", 1, lb=0.0, ub=10.0)
        gp = -2.0 * (xt - 2.0)
        b.add_ineq([(x, np.array([[gp]]))], [gp * xt - g(xt)])
        b.maximize([(x, np.ones(1))])
        return b.build(), (lambda sol: sol.value(x))

    res = sca_drive(build, lambda x: x, x0=4.0, eps_conv=1e-9)
    assert res.converged
    assert res.x == pytest.approx(10.0, abs=1e-6)
    assert all(b >= a - 1e-9 for a, b in zip(res.trace, res.trace[1:]))


def forced_step_surrogate(step_size):
    """Deliberately invalid: always walks +step regardless of the objective."""
    def build(xt):
        class Step:
            def solve(self):
                return xt + step_size[0]
        return Step()
    return build


def test_sca_invalid_surrogate_aborts():
    with pytest.raises(SurrogateValidityError) as err:
        sca_drive(forced_step_surrogate([1.0]), lambda x: -(x - 3.0) ** 2,
                  x0=3.5, eps_conv=1e-6)
    assert "fell" in str(err.value)


def test_sca_on_reject_shrinks_then_stalls():
    step = [1.0]

    def on_reject(x, x_new, drop):
        step[0] *= 0.5
        return step[0] >= 0.01

    res = sca_drive(forced_step_surrogate(step), lambda x: -(x - 3.0) ** 2,
                    x0=3.0, eps_conv=1e-6, on_reject=on_reject)
    assert res.stalled and not res.converged
    assert res.x == 3.0
    assert res.trace == [0.0]


def test_sca_minimize_sense():
    def build(xt):
        b = ProgramBuilder()
        x = b.add_var("x", 1, lb=0.0, ub=10.0)
        t = b.add_var("t", 1)
        b.add_square_over_lin([(x, np.ones((1, 1)))], [-3.0],
                              [(t, np.ones(1))], 0.0, [], 1.0)
        b.minimize([(t, np.ones(1))])
        return b.build(), (lambda sol: sol.value(x))

    res = sca_drive(build, lambda x: (x - 3.0) ** 2, x0=9.0,
                    eps_conv=1e-8, sense="min")
    assert res.converged
    assert res.x == pytest.approx(3.0, abs=1e-4)