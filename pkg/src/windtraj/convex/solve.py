"""Conic solve of a catalog program, with explicit feasibility verification.

The interior-point backend is trusted for the search but not for the verdict:
a solution is only reported `optimal` after this module re-checks every
original constraint at the returned point (1e-6, relative with an absolute
floor at unit scale). Re-solves of one
compiled program with different objective vectors share the assembled
matrices, which is what the fractional-programming driver leans on.
"""
from __future__ import annotations

from dataclasses import dataclass

import clarabel
import numpy as np
from scipy import sparse

from .program import ConvexProgram, VarRef

__all__ = ["Solution", "SolverError", "solve", "FEAS_TOL"]

FEAS_TOL = 1e-6

_OK_STATUSES = ("Solved", "AlmostSolved")
_INFEASIBLE_STATUSES = ("PrimalInfeasible", "DualInfeasible",
                        "AlmostPrimalInfeasible", "AlmostDualInfeasible")


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class Solution:
    values: dict
    objective: float
    status: str              # optimal | infeasible | max-iterations
    achieved_tol: float
    iterations: int

    def value(self, ref: VarRef):
        v = self.values[ref.name]
        return float(v[0]) if ref.size == 1 else v

    @property
    def is_optimal(self) -> bool:
        return self.status == "optimal"


def _cones_for(spec):
    out = []
    for kind, size in spec:
        if kind == "zero":
            out.append(clarabel.ZeroConeT(size))
        elif kind == "nonneg":
            out.append(clarabel.NonnegativeConeT(size))
        elif kind == "soc":
            out.append(clarabel.SecondOrderConeT(size))
        else:
            out.append(clarabel.PowerConeT(1.0 / 3.0))
    return out


def _attempt(prog: ConvexProgram, comp, c: np.ndarray, q: np.ndarray,
             tol: float, equilibrate: bool) -> Solution:
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.tol_feas = 1e-8
    settings.tol_gap_abs = tol
    settings.tol_gap_rel = tol
    settings.equilibrate_enable = equilibrate

    p_zero = sparse.csc_matrix((prog.n, prog.n))
    solver = clarabel.DefaultSolver(p_zero, q, comp.A, comp.b,
                                    _cones_for(comp.cone_spec), settings)
    res = solver.solve()
    status_name = str(res.status)
    x = np.asarray(res.x, dtype=float)
    values = {name: x[ref.offset:ref.offset + ref.size].copy()
              for name, ref in prog.var_refs.items()}
    iters = int(res.iterations)

    if status_name in _INFEASIBLE_STATUSES:
        return Solution(values=values, objective=float("nan"),
                        status="infeasible",
                        achieved_tol=float(prog.max_violation(x)),
                        iterations=iters)

    violation = float(prog.max_violation(x))
    obj = float(c @ x) + prog.obj_const
    if status_name in _OK_STATUSES and violation <= FEAS_TOL:
        return Solution(values=values, objective=obj, status="optimal",
                        achieved_tol=violation, iterations=iters)
    return Solution(values=values, objective=obj, status="max-iterations",
                    achieved_tol=violation, iterations=iters)


def solve(prog: ConvexProgram, tol: float = 1e-6,
          objective_override: np.ndarray | None = None) -> Solution:
    """Solve to epsilon-optimality; deterministic for identical inputs.

    objective_override replaces the linear objective vector (same sense,
    same constant) without re-assembling constraint matrices.

    Catalog programs are anchored to unit scale when they are built, and
    the backend's Ruiz pass has been seen to undo that and stall solves
    that converge cleanly without it. The reverse also happens on some
    iterates, so a stalled first attempt is retried once with
    equilibration flipped on and the better of the two results kept.
    """
    comp = prog.compiled()
    c = prog.c if objective_override is None else \
        np.asarray(objective_override, dtype=float)
    if c.shape != (prog.n,):
        raise ValueError("objective vector has the wrong length")
    q = -c if prog.sense == "max" else c

    sol = _attempt(prog, comp, c, q, tol, equilibrate=False)
    if sol.status != "max-iterations":
        return sol
    retry = _attempt(prog, comp, c, q, tol, equilibrate=True)
    if retry.status == "max-iterations" and sol.achieved_tol < retry.achieved_tol:
        return sol
    return retry
