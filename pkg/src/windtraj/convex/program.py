"""Structured convex programs over a closed constraint catalog.

A program is assembled through ProgramBuilder from exactly four constraint
shapes: affine (eq/ineq), Euclidean norm below an affine scalar, squared
norm below a product of two affine scalars, and cube of a scalar below an
affine scalar (power-cone form). Anything else is rejected, which is what
keeps every assembled program convex by construction.

Compilation targets the conic form  A x + s = b,  s in K  with K a product
of zero, nonnegative, second-order, and power cones.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

__all__ = [
    "VarRef",
    "AffineEq",
    "AffineIneq",
    "NormLeAffine",
    "SquareOverLin",
    "PowCube",
    "ProgramBuilder",
    "ConvexProgram",
    "CompiledCone",
    "dump",
]

# terms: list of (VarRef, coefficient array). Vector rows are (m, ref.size),
# scalar rows are (ref.size,).


@dataclass(frozen=True)
class VarRef:
    name: str
    offset: int
    size: int


@dataclass(frozen=True)
class AffineEq:
    terms: tuple
    rhs: np.ndarray


@dataclass(frozen=True)
class AffineIneq:
    """rows: sum_i M_i x_i <= rhs."""

    terms: tuple
    rhs: np.ndarray


@dataclass(frozen=True)
class NormLeAffine:
    """|| sum F_i x_i + g || <= sum h_i . x_i + k."""

    vec_terms: tuple
    vec_const: np.ndarray
    scal_terms: tuple
    scal_const: float


@dataclass(frozen=True)
class SquareOverLin:
    """|| w ||^2 <= x * y with affine w (vector) and x, y (scalars >= 0)."""

    w_terms: tuple
    w_const: np.ndarray
    x_terms: tuple
    x_const: float
    y_terms: tuple
    y_const: float


@dataclass(frozen=True)
class PowCube:
    """|u|^3 <= r with affine scalars u and r."""

    u_terms: tuple
    u_const: float
    r_terms: tuple
    r_const: float


_CONE_TYPES = (NormLeAffine, SquareOverLin, PowCube)


class ProgramBuilder:
    def __init__(self) -> None:
        self._vars: dict[str, VarRef] = {}
        self._n = 0
        self._lb: list = []
        self._ub: list = []
        self.eqs: list[AffineEq] = []
        self.ineqs: list[AffineIneq] = []
        self.cones: list = []
        self._objective = None

    # ------------------------------------------------------------ variables

    def add_var(self, name: str, size: int, lb=None, ub=None) -> VarRef:
        if name in self._vars:
            raise ValueError(f"variable {name!r} already declared")
        if size < 1:
            raise ValueError("variable size must be at least 1")
        ref = VarRef(name, self._n, int(size))
        self._vars[name] = ref
        self._n += size
        self._lb.append(None if lb is None else np.broadcast_to(
            np.asarray(lb, dtype=float), (size,)).copy())
        self._ub.append(None if ub is None else np.broadcast_to(
            np.asarray(ub, dtype=float), (size,)).copy())
        return ref

    def _check_terms(self, terms, rows=None):
        out = []
        for ref, mat in terms:
            if not isinstance(ref, VarRef) or self._vars.get(ref.name) is not ref:
                raise ValueError("term references a variable not in this program")
            mat = np.asarray(mat, dtype=float)
            if rows is None:  # scalar expression
                if mat.shape != (ref.size,):
                    raise ValueError(
                        f"scalar coefficient for {ref.name} must have shape ({ref.size},)")
            else:
                if mat.shape != (rows, ref.size):
                    raise ValueError(
                        f"coefficient for {ref.name} must have shape ({rows}, {ref.size})")
            out.append((ref, mat))
        return tuple(out)

    # ----------------------------------------------------------- constraints

    def add_eq(self, terms, rhs) -> None:
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        self.eqs.append(AffineEq(self._check_terms(terms, rhs.size), rhs))

    def add_ineq(self, terms, rhs) -> None:
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        self.ineqs.append(AffineIneq(self._check_terms(terms, rhs.size), rhs))

    def add_norm_le(self, vec_terms, vec_const, scal_terms, scal_const) -> None:
        vec_const = np.atleast_1d(np.asarray(vec_const, dtype=float))
        self.cones.append(NormLeAffine(
            self._check_terms(vec_terms, vec_const.size), vec_const,
            self._check_terms(scal_terms), float(scal_const)))

    def add_square_over_lin(self, w_terms, w_const, x_terms, x_const,
                            y_terms, y_const) -> None:
        w_const = np.atleast_1d(np.asarray(w_const, dtype=float))
        self.cones.append(SquareOverLin(
            self._check_terms(w_terms, w_const.size), w_const,
            self._check_terms(x_terms), float(x_const),
            self._check_terms(y_terms), float(y_const)))

    def add_pow_cube(self, u_terms, u_const, r_terms, r_const) -> None:
        self.cones.append(PowCube(
            self._check_terms(u_terms), float(u_const),
            self._check_terms(r_terms), float(r_const)))

    def add(self, constraint) -> None:
        """Catalog gate: accepts only the four known constraint shapes."""
        if isinstance(constraint, AffineEq):
            self.eqs.append(constraint)
        elif isinstance(constraint, AffineIneq):
            self.ineqs.append(constraint)
        elif isinstance(constraint, _CONE_TYPES):
            self.cones.append(constraint)
        else:
            raise TypeError(
                f"constraint type {type(constraint).__name__} is outside the catalog")

    # ------------------------------------------------------------- objective

    def minimize(self, terms, const=0.0) -> None:
        self._set_objective("min", terms, const)

    def maximize(self, terms, const=0.0) -> None:
        self._set_objective("max", terms, const)

    def _set_objective(self, sense, terms, const) -> None:
        if self._objective is not None:
            raise ValueError("objective already set")
        c = np.zeros(self._n)
        for ref, coef in self._check_terms(terms):
            c[ref.offset:ref.offset + ref.size] += coef
        self._objective = (sense, c, float(const))

    def build(self) -> "ConvexProgram":
        if self._objective is None:
            raise ValueError("objective not set")
        sense, c, const = self._objective
        return ConvexProgram(
            var_refs={n: r for n, r in self._vars.items()},
            n=self._n,
            lb=tuple(self._lb), ub=tuple(self._ub),
            eqs=tuple(self.eqs), ineqs=tuple(self.ineqs),
            cones=tuple(self.cones),
            sense=sense, c=c, obj_const=const)


@dataclass
class CompiledCone:
    """Conic-form data shared by every solve of one program."""

    A: sparse.csc_matrix
    b: np.ndarray
    cone_spec: list        # (kind, size) with kind in {"zero", "nonneg", "soc", "pow3"}
    n: int


@dataclass(frozen=True)
class ConvexProgram:
    var_refs: dict
    n: int
    lb: tuple
    ub: tuple
    eqs: tuple
    ineqs: tuple
    cones: tuple
    sense: str
    c: np.ndarray
    obj_const: float
    _cache: list = field(default_factory=list, repr=False, compare=False)

    # ----------------------------------------------------------- compilation

    def compiled(self) -> CompiledCone:
        if self._cache:
            return self._cache[0]
        rows, cols, vals, b_parts = [], [], [], []
        cursor = 0

        def emit_rows(terms, b_vec, a_scale):
            # rows of  A x + s = b  with A = a_scale * M. Affine constraints
            # use a_scale=+1 (s is the residual b - Mx); cone blocks use
            # a_scale=-1 so that s recovers the expression Mx + const.
            nonlocal cursor
            m = b_vec.size
            for ref, mat in terms:
                mat2 = mat.reshape(m, ref.size)
                r, c_ = np.nonzero(mat2)
                if r.size:
                    rows.append(cursor + r)
                    cols.append(ref.offset + c_)
                    vals.append(a_scale * mat2[r, c_])
            b_parts.append(np.asarray(b_vec, dtype=float))
            cursor += m

        spec = []
        # zero cone: equalities
        m_eq = sum(e.rhs.size for e in self.eqs)
        for e in self.eqs:
            emit_rows(e.terms, e.rhs, 1.0)
        if m_eq:
            spec.append(("zero", m_eq))
        # nonnegative cone: inequalities then bounds
        m_nn = 0
        for iq in self.ineqs:
            emit_rows(iq.terms, iq.rhs, 1.0)
            m_nn += iq.rhs.size
        for i, ref in enumerate(self.var_refs.values()):
            lo, hi = self.lb[i], self.ub[i]
            idx = np.arange(ref.size)
            if lo is not None:
                # x >= lo  ->  s = x - lo >= 0  ->  A = -I, b = -lo
                rows.append(cursor + idx)
                cols.append(ref.offset + idx)
                vals.append(np.full(ref.size, -1.0))
                b_parts.append(-lo)
                cursor += ref.size
                m_nn += ref.size
            if hi is not None:
                rows.append(cursor + idx)
                cols.append(ref.offset + idx)
                vals.append(np.full(ref.size, 1.0))
                b_parts.append(hi.copy())
                cursor += ref.size
                m_nn += ref.size
        if m_nn:
            spec.append(("nonneg", m_nn))
        # cone blocks in insertion order
        for con in self.cones:
            if isinstance(con, NormLeAffine):
                d = con.vec_const.size
                emit_rows(con.scal_terms, np.array([con.scal_const]), -1.0)
                emit_rows(con.vec_terms, con.vec_const, -1.0)
                spec.append(("soc", d + 1))
            elif isinstance(con, SquareOverLin):
                d = con.w_const.size
                # ||(2w, x - y)|| <= x + y
                xy_sum = _combine(con.x_terms, con.y_terms, 1.0)
                xy_dif = _combine(con.x_terms, con.y_terms, -1.0)
                emit_rows(xy_sum, np.array([con.x_const + con.y_const]), -1.0)
                emit_rows(con.w_terms, 2.0 * con.w_const, -2.0)
                emit_rows(xy_dif, np.array([con.x_const - con.y_const]), -1.0)
                spec.append(("soc", d + 2))
            elif isinstance(con, PowCube):
                # power cone rows (r, 1, u) with exponent 1/3
                emit_rows(con.r_terms, np.array([con.r_const]), -1.0)
                b_parts.append(np.array([1.0]))
                cursor += 1
                emit_rows(con.u_terms, np.array([con.u_const]), -1.0)
                spec.append(("pow3", 3))
            else:  # pragma: no cover - builder prevents this
                raise TypeError(f"unknown cone constraint {type(con).__name__}")
        if rows:
            a_mat = sparse.csc_matrix(
                (np.concatenate(vals), (np.concatenate(rows).astype(np.int64),
                                        np.concatenate(cols).astype(np.int64))),
                shape=(cursor, self.n))
        else:
            a_mat = sparse.csc_matrix((cursor, self.n))
        b = np.concatenate(b_parts) if b_parts else np.zeros(0)
        comp = CompiledCone(A=a_mat, b=b, cone_spec=spec, n=self.n)
        self._cache.append(comp)
        return comp

    # ------------------------------------------------------------- residuals

    def max_violation(self, x: np.ndarray) -> float:
        """Largest relative infeasibility of x across all constraints.

        Each residual is normalized by the magnitude of the quantities it
        compares, floored at 1, so the verdict is meaningful whether the
        constraint trades in O(1) velocities or O(1e6) squared distances.
        For small-scale data this reduces to the absolute residual.
        """
        worst = 0.0

        def val(terms, const):
            out = np.asarray(const, dtype=float).copy()
            for ref, mat in terms:
                seg = x[ref.offset:ref.offset + ref.size]
                out += mat @ seg if mat.ndim == 2 else float(mat @ seg)
            return out

        def rel(gap, *scales):
            return gap / max(1.0, *(abs(s) for s in scales))

        for e in self.eqs:
            lhs = val(e.terms, np.zeros_like(e.rhs))
            gap = float(np.max(np.abs(lhs - e.rhs)))
            worst = max(worst, rel(gap, np.max(np.abs(lhs)), np.max(np.abs(e.rhs))))
        for iq in self.ineqs:
            lhs = val(iq.terms, np.zeros_like(iq.rhs))
            gap = float(np.max(np.maximum(lhs - iq.rhs, 0.0)))
            worst = max(worst, rel(gap, np.max(np.abs(lhs)), np.max(np.abs(iq.rhs))))
        for i, ref in enumerate(self.var_refs.values()):
            seg = x[ref.offset:ref.offset + ref.size]
            if self.lb[i] is not None:
                gap = float(np.max(np.maximum(self.lb[i] - seg, 0.0)))
                worst = max(worst, rel(gap, np.max(np.abs(self.lb[i]))))
            if self.ub[i] is not None:
                gap = float(np.max(np.maximum(seg - self.ub[i], 0.0)))
                worst = max(worst, rel(gap, np.max(np.abs(self.ub[i]))))
        for con in self.cones:
            if isinstance(con, NormLeAffine):
                lhs = float(np.linalg.norm(val(con.vec_terms, con.vec_const)))
                rhs = float(val(con.scal_terms, con.scal_const))
                worst = max(worst, rel(max(lhs - rhs, 0.0), lhs, rhs))
            elif isinstance(con, SquareOverLin):
                w = val(con.w_terms, con.w_const)
                xs = float(val(con.x_terms, con.x_const))
                ys = float(val(con.y_terms, con.y_const))
                ww = float(w @ w)
                worst = max(worst, max(-xs, 0.0), max(-ys, 0.0),
                            rel(max(ww - xs * ys, 0.0), ww, xs * ys))
            else:
                u = float(val(con.u_terms, con.u_const))
                r = float(val(con.r_terms, con.r_const))
                worst = max(worst, rel(max(abs(u) ** 3 - r, 0.0), abs(u) ** 3, r))
        return worst

    def objective_value(self, x: np.ndarray) -> float:
        return float(self.c @ x) + self.obj_const


def _combine(terms_a, terms_b, sign_b):
    """Merge two scalar-affine term lists into one (a + sign_b * b)."""
    acc: dict[int, list] = {}
    order: list = []
    for sgn, terms in ((1.0, terms_a), (sign_b, terms_b)):
        for ref, coef in terms:
            key = id(ref)
            if key not in acc:
                acc[key] = [ref, sgn * coef.astype(float)]
                order.append(key)
            else:
                acc[key][1] = acc[key][1] + sgn * coef
    return tuple((acc[k][0], acc[k][1]) for k in order)


def dump(prog: ConvexProgram) -> str:
    """Plain-text listing for inspection; format not stability-guaranteed."""
    lines = [f"{prog.sense} {np.count_nonzero(prog.c)} objective terms "
             f"+ {prog.obj_const!r}"]
    for i, ref in enumerate(prog.var_refs.values()):
        lo = "-inf" if prog.lb[i] is None else np.array2string(prog.lb[i], threshold=4)
        hi = "+inf" if prog.ub[i] is None else np.array2string(prog.ub[i], threshold=4)
        lines.append(f"var {ref.name}[{ref.size}] in [{lo}, {hi}]")
    lines.append(f"eq blocks: {len(prog.eqs)} "
                 f"({sum(e.rhs.size for e in prog.eqs)} rows)")
    lines.append(f"ineq blocks: {len(prog.ineqs)} "
                 f"({sum(q.rhs.size for q in prog.ineqs)} rows)")
    kinds = {}
    for con in prog.cones:
        kinds[type(con).__name__] = kinds.get(type(con).__name__, 0) + 1
    for k, v in sorted(kinds.items()):
        lines.append(f"cone {k}: {v}")
    return "\n".join(lines)
