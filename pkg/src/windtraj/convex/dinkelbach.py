"""Parametric (Dinkelbach) driver for concave/affine fractional programs.

Maximizing N(x)/D(x) with D > 0 is driven through the auxiliary problem
F(q) = max_x N(x) - q D(x): the root of F is the fractional optimum, and
updating q to the current ratio converges superlinearly from either side.
"""
from __future__ import annotations

from dataclasses import dataclass, field

__all__ = ["DinkelbachResult", "dinkelbach"]


@dataclass
class DinkelbachResult:
    x: object
    q_star: float
    f_trace: list = field(default_factory=list)
    q_trace: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


def dinkelbach(numerator, denominator, inner_solve, q_init: float = 0.0,
               tol: float = 1e-6, max_iter: int = 30) -> DinkelbachResult:
    """Iterate x_t = argmax N - q_t D, q_{t+1} = N(x_t)/D(x_t).

    inner_solve(q) must return a maximizer of N - q D over the feasible
    set; its failures propagate. numerator/denominator evaluate N and D at
    a returned point, with D required positive. Stops once
    |N(x_t) - q_t D(x_t)| <= tol, else returns the best ratio seen with
    converged=False.
    """
    q = float(q_init)
    out = DinkelbachResult(x=None, q_star=q)
    for it in range(1, max_iter + 1):
        x = inner_solve(q)
        num = float(numerator(x))
        den = float(denominator(x))
        if not den > 0.0:
            raise ValueError(f"denominator must stay positive, got {den!r}")
        f_val = num - q * den
        out.q_trace.append(q)
        out.f_trace.append(f_val)
        out.x = x
        out.q_star = num / den
        out.iterations = it
        if abs(f_val) <= tol:
            out.converged = True
            return out
        q = num / den
    return out
