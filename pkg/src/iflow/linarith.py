"""Linear-arithmetic satisfiability over the rationals.

Used to prune unreachable cases during obligation discharge: a set of atoms
(branch conditions, recorded equalities, guard literals) is translated into
linear constraints and tested with Gaussian elimination for equalities
followed by Fourier-Motzkin elimination for inequalities.  Disequalities are
handled by a convexity argument: the system plus ``d != 0`` is satisfiable
iff the relaxed system is and does not force ``d = 0``.

Everything here is rational-valued.  UNSAT over the rationals implies UNSAT
over the integers, so using a verdict of "inconsistent" to skip a proof case
is always sound; SAT over the rationals may overshoot the integers, which
can only make the checker report a spurious violation, never miss one.
Non-linear atoms (``%``, products of variables) are opaque: they are dropped
from the constraint set and the result is downgraded from "satisfiable" to
"unknown" accordingly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import InternalError
from .lang import BinOp, Expr, Lit, Var

VAR_CAP = 30
CONSTRAINT_CAP = 600

LinForm = tuple[dict[str, Fraction], Fraction]


def linearize(e: Expr) -> LinForm | None:
    """``e`` as an affine form (coefficients, constant), or None if non-linear."""
    match e:
        case Lit(value):
            return {}, Fraction(value)
        case Var(name):
            return {name: Fraction(1)}, Fraction(0)
        case BinOp("+", left, right):
            return _combine(linearize(left), linearize(right), 1)
        case BinOp("-", left, right):
            return _combine(linearize(left), linearize(right), -1)
        case BinOp("*", left, right):
            lf, rf = linearize(left), linearize(right)
            if lf is None or rf is None:
                return None
            if not lf[0]:
                return _scale(rf, lf[1])
            if not rf[0]:
                return _scale(lf, rf[1])
            return None
        case _:
            return None


def _combine(a: LinForm | None, b: LinForm | None, sign: int) -> LinForm | None:
    if a is None or b is None:
        return None
    coeffs = dict(a[0])
    for var, c in b[0].items():
        nc = coeffs.get(var, Fraction(0)) + sign * c
        if nc == 0:
            coeffs.pop(var, None)
        else:
            coeffs[var] = nc
    return coeffs, a[1] + sign * b[1]


def _scale(f: LinForm, k: Fraction) -> LinForm:
    if k == 0:
        return {}, Fraction(0)
    return {v: c * k for v, c in f[0].items()}, f[1] * k


@dataclass
class Constraint:
    """coeffs . vars + const REL 0, REL one of le, lt, eq, ne."""

    coeffs: dict[str, Fraction]
    const: Fraction
    rel: str


_NEGATED = {"==": "!=", "!=": "==", "<": ">=", "<=": ">", ">": "<=", ">=": "<"}
_CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")


def atom_constraints(e: Expr, truth: bool) -> tuple[list[Constraint], bool]:
    """Constraints asserting that ``e`` evaluated to nonzero (or zero).

    Returns (constraints, complete); ``complete`` is False when part of the
    atom could not be represented linearly and was dropped.
    """
    match e:
        case BinOp(op, left, right) if op in _CMP_OPS:
            if not truth:
                op = _NEGATED[op]
            diff = _combine(linearize(left), linearize(right), -1)
            if diff is None:
                return [], False
            coeffs, const = diff
            if op == "==":
                return [Constraint(coeffs, const, "eq")], True
            if op == "!=":
                return [Constraint(coeffs, const, "ne")], True
            if op == "<":
                return [Constraint(coeffs, const, "lt")], True
            if op == "<=":
                return [Constraint(coeffs, const, "le")], True
            if op == ">":
                return [Constraint(_neg(coeffs), -const, "lt")], True
            if op == ">=":
                return [Constraint(_neg(coeffs), -const, "le")], True
        case BinOp("&&", left, right) if truth:
            c1, ok1 = atom_constraints(left, True)
            c2, ok2 = atom_constraints(right, True)
            return c1 + c2, ok1 and ok2
        case BinOp("||", left, right) if not truth:
            c1, ok1 = atom_constraints(left, False)
            c2, ok2 = atom_constraints(right, False)
            return c1 + c2, ok1 and ok2
        case BinOp("&&", _, _) | BinOp("||", _, _):
            # a disjunction of cases; out of scope for a conjunctive solver
            return [], False
        case _:
            form = linearize(e)
            if form is None:
                return [], False
            coeffs, const = form
            rel = "ne" if truth else "eq"
            return [Constraint(coeffs, const, rel)], True
    raise InternalError(f"unhandled atom {e!r}")


def _neg(coeffs: dict[str, Fraction]) -> dict[str, Fraction]:
    return {v: -c for v, c in coeffs.items()}


def satisfiable(constraints: list[Constraint]) -> bool | None:
    """True/False for a definite answer, None when the size cap was hit."""
    base: list[Constraint] = []
    disequalities: list[Constraint] = []
    for c in constraints:
        (disequalities if c.rel == "ne" else base).append(_copy(c))

    result = _sat_convex(base)
    if result is not True:
        return result
    for d in disequalities:
        below = _sat_convex(base + [Constraint(dict(d.coeffs), d.const, "lt")])
        above = _sat_convex(base + [Constraint(_neg(d.coeffs), -d.const, "lt")])
        if below is None or above is None:
            return None
        if not below and not above:
            return False
    return True


def _copy(c: Constraint) -> Constraint:
    return Constraint(dict(c.coeffs), c.const, c.rel)


def _sat_convex(constraints: list[Constraint]) -> bool | None:
    cons = [_copy(c) for c in constraints]

    # Gaussian elimination of equalities.
    while True:
        eq = next((c for c in cons if c.rel == "eq" and c.coeffs), None)
        if eq is None:
            break
        var = sorted(eq.coeffs)[0]
        pivot = eq.coeffs[var]
        # var = -(rest + const) / pivot
        cons.remove(eq)
        for c in cons:
            factor = c.coeffs.pop(var, Fraction(0))
            if factor == 0:
                continue
            scale = factor / pivot
            for v, coef in eq.coeffs.items():
                if v == var:
                    continue
                nc = c.coeffs.get(v, Fraction(0)) - scale * coef
                if nc == 0:
                    c.coeffs.pop(v, None)
                else:
                    c.coeffs[v] = nc
            c.const -= scale * eq.const
    for c in [c for c in cons if c.rel == "eq"]:
        if c.const != 0:
            return False
        cons.remove(c)

    # Fourier-Motzkin elimination of the remaining inequality variables.
    while True:
        variables = sorted({v for c in cons for v in c.coeffs})
        if not variables:
            break
        if len(variables) > VAR_CAP or len(cons) > CONSTRAINT_CAP:
            return None
        var = variables[0]
        uppers = [c for c in cons if c.coeffs.get(var, 0) > 0]
        lowers = [c for c in cons if c.coeffs.get(var, 0) < 0]
        rest = [c for c in cons if var not in c.coeffs]
        new: list[Constraint] = []
        for up in uppers:
            for lo in lowers:
                a = up.coeffs[var]
                b = -lo.coeffs[var]
                coeffs: dict[str, Fraction] = {}
                for v, coef in up.coeffs.items():
                    if v != var:
                        coeffs[v] = coef * b
                for v, coef in lo.coeffs.items():
                    if v == var:
                        continue
                    nc = coeffs.get(v, Fraction(0)) + coef * a
                    if nc == 0:
                        coeffs.pop(v, None)
                    else:
                        coeffs[v] = nc
                const = up.const * b + lo.const * a
                rel = "lt" if (up.rel == "lt" or lo.rel == "lt") else "le"
                new.append(Constraint(coeffs, const, rel))
        cons = rest + new
        if len(cons) > CONSTRAINT_CAP:
            return None

    for c in cons:
        if c.rel == "le" and c.const > 0:
            return False
        if c.rel == "lt" and c.const >= 0:
            return False
    return True
