"""Successive convex approximation outer loop with validity policing.

Each outer iteration asks build_surrogate for a convex model tight at the
current iterate, solves it, and re-evaluates the TRUE objective at the
candidate. A valid surrogate can never decrease the true objective; a drop
beyond tolerance therefore means the surrogate is not a global bound and
the loop refuses to continue (or hands the decision to on_reject, which
may shrink a trust region and retry).
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .solve import solve

__all__ = ["SCAResult", "SurrogateValidityError", "sca_drive"]


class SurrogateValidityError(RuntimeError):
    pass


@dataclass
class SCAResult:
    x: object
    trace: list = field(default_factory=list)
    outer_iterations: int = 0
    converged: bool = False
    stalled: bool = False


def _take_step(step, x):
    """Accept the three surrogate forms: (program, extract), a step object
    with .solve(), or a bare program whose Solution is the next iterate."""
    if isinstance(step, tuple):
        prog, extract = step
        return extract(solve(prog))
    if hasattr(step, "solve"):
        return step.solve()
    return solve(step)


def sca_drive(build_surrogate, objective, x0, eps_conv: float = 1e-3,
              max_outer: int = 50, sense: str = "max", on_reject=None,
              noise_tol: float = 1e-5) -> SCAResult:
    """Drive surrogate iterations until relative improvement < eps_conv.

    objective evaluates the true (non-surrogate) merit of an iterate. A
    candidate is accepted only if it improves, so the trace of accepted
    iterates is monotone by construction. Candidates worse by up to
    noise_tol are written off as interior-point wobble and end the loop as
    converged; anything beyond that is a surrogate-validity violation and
    either aborts or is handed to on_reject(x, x_candidate, drop), which
    may adjust surrogate state (say, shrink a trust region) and return True
    to retry. on_reject returning False stops at the current iterate.
    """
    if sense not in ("max", "min"):
        raise ValueError("sense must be 'max' or 'min'")
    sgn = 1.0 if sense == "max" else -1.0
    x = x0
    out = SCAResult(x=x0, trace=[float(objective(x0))])
    f = sgn * out.trace[0]
    for outer in range(1, max_outer + 1):
        out.outer_iterations = outer
        x_new = _take_step(build_surrogate(x), x)
        f_true = float(objective(x_new))
        f_new = sgn * f_true
        gain = f_new - f
        if gain < -noise_tol:
            if on_reject is not None:
                if on_reject(x, x_new, -gain):
                    continue
                out.stalled = True
                return out
            raise SurrogateValidityError(
                f"true objective fell by {-gain:.3e} (beyond the {noise_tol:.0e} "
                f"solver-noise allowance) at outer iteration {outer}; the "
                f"surrogate is not a valid bound at the iterate")
        if gain > 0.0:
            x, f = x_new, f_new
            out.x = x
            out.trace.append(f_true)
        if max(gain, 0.0) / max(1.0, abs(f)) < eps_conv:
            out.converged = True
            return out
    return out
