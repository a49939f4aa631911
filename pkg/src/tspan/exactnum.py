"""Exact rational arithmetic, linear programming and vertex enumeration.

Every numeric value in tspan is a :class:`fractions.Fraction`.  The simplex
solver and the double-description enumerator convert to ``gmpy2.mpq`` and
plain integers internally for speed and convert back on the way out, so no
floating point value ever enters a computation.

The LP solver is a dense two-phase tableau simplex.  Bland's rule is the
default pivot rule; it terminates on degenerate problems and makes the
returned optimal vertex reproducible.  Setting ``TSK_LP_PIVOT=dantzig`` in the
environment switches to the largest-coefficient rule (testing only).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational as _RationalABC
from typing import Iterable, Sequence

import gmpy2
from gmpy2 import mpq

from .errors import InfeasibleError, InputError, ResourceLimitError, UnboundedError

Rational = Fraction

GE, LE, EQ = ">=", "<=", "="
_RELATIONS = (GE, LE, EQ)

DEFAULT_RAY_CAP = 100_000


def to_rational(value) -> Fraction:
    """Convert ``value`` to a Fraction, refusing anything inexact.

    Accepts ints, Fractions, gmpy2 rationals and strings such as ``"3"``,
    ``"-7/2"``.  Floats (and bools) are rejected: exactness is the point.
    """
    if isinstance(value, bool):
        raise InputError(f"boolean is not a rational number: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, _RationalABC):
        return Fraction(int(value.numerator), int(value.denominator))
    if type(value).__name__ in ("mpq", "mpz"):
        return Fraction(int(value.numerator), int(value.denominator))
    if isinstance(value, str):
        text = value.strip()
        if not text or any(c in text for c in ".eE"):
            raise InputError(f"not an exact rational: {value!r}")
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"not an exact rational: {value!r}") from exc
    raise InputError(f"not an exact rational: {value!r} ({type(value).__name__})")


def format_rational(q: Fraction) -> str:
    """Render ``q`` as ``"p"`` or ``"p/q"``."""
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def _to_fraction(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


@dataclass(frozen=True)
class Constraint:
    """``coeffs . x  rel  rhs`` with ``rel`` one of ``>=``, ``<=``, ``=``."""

    coeffs: tuple[Fraction, ...]
    rel: str
    rhs: Fraction

    def __post_init__(self):
        if self.rel not in _RELATIONS:
            raise InputError(f"unknown relation {self.rel!r}")
        object.__setattr__(self, "coeffs", tuple(to_rational(c) for c in self.coeffs))
        object.__setattr__(self, "rhs", to_rational(self.rhs))

    def lhs(self, point: Sequence[Fraction]) -> Fraction:
        return sum((c * p for c, p in zip(self.coeffs, point) if c), Fraction(0))

    def holds(self, point: Sequence[Fraction]) -> bool:
        v = self.lhs(point)
        if self.rel == GE:
            return v >= self.rhs
        if self.rel == LE:
            return v <= self.rhs
        return v == self.rhs

    def is_tight(self, point: Sequence[Fraction]) -> bool:
        return self.lhs(point) == self.rhs


@dataclass(frozen=True)
class Polyhedron:
    """H-representation ``{x in Q^n : every constraint holds}``."""

    n: int
    constraints: tuple[Constraint, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        for c in self.constraints:
            if len(c.coeffs) != self.n:
                raise InputError(
                    f"constraint has {len(c.coeffs)} coefficients, expected {self.n}"
                )

    def contains(self, point: Sequence[Fraction]) -> bool:
        if len(point) != self.n:
            raise InputError("point dimension does not match polyhedron")
        return all(c.holds(point) for c in self.constraints)

    def add(self, *constraints: Constraint) -> "Polyhedron":
        return Polyhedron(self.n, self.constraints + tuple(constraints))

    def tight_rank(self, point: Sequence[Fraction]) -> int:
        """Rank of the constraint rows tight at ``point``."""
        rows = [c.coeffs for c in self.constraints if c.is_tight(point)]
        return matrix_rank(rows)


def constraint(coeffs: Iterable, rel: str, rhs) -> Constraint:
    return Constraint(tuple(coeffs), rel, rhs)


def unit(n: int, j: int, value=1) -> list[Fraction]:
    row = [Fraction(0)] * n
    row[j] = to_rational(value)
    return row


@dataclass(frozen=True)
class LinearProgram:
    """Minimise ``objective . x`` over ``polyhedron``.  Variables are free."""

    polyhedron: Polyhedron
    objective: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "objective", tuple(to_rational(c) for c in self.objective))
        if len(self.objective) != self.polyhedron.n:
            raise InputError("objective length does not match the number of variables")


@dataclass(frozen=True)
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    value: Fraction | None = None
    point: tuple[Fraction, ...] | None = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def matrix_rank(rows: Sequence[Sequence[Fraction]]) -> int:
    """Exact rank by fraction-free Gaussian elimination."""
    m = [[mpq(v) for v in r] for r in rows]
    if not m:
        return 0
    rank, ncols = 0, len(m[0])
    for col in range(ncols):
        piv = next((i for i in range(rank, len(m)) if m[i][col]), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        p = m[rank][col]
        for i in range(rank + 1, len(m)):
            if m[i][col]:
                f = m[i][col] / p
                m[i] = [a - f * b for a, b in zip(m[i], m[rank])]
        rank += 1
        if rank == len(m):
            break
    return rank


# --------------------------------------------------------------------------
# simplex


def _pivot_rule() -> str:
    rule = os.environ.get("TSK_LP_PIVOT", "bland").strip().lower()
    if rule not in ("bland", "dantzig"):
        raise InputError(f"TSK_LP_PIVOT must be 'bland' or 'dantzig', got {rule!r}")
    return rule


class _Tableau:
    """Dense simplex tableau over mpq; the last column is the right-hand side."""

    def __init__(self, rows, basis, ncols, rule):
        self.rows = rows
        self.basis = basis
        self.ncols = ncols
        self.rule = rule
        self.cost: list = []
        self.banned: set[int] = set()

    def set_cost(self, c):
        cost = list(c) + [mpq(0)]
        for i, b in enumerate(self.basis):
            cb = cost[b]
            if cb:
                row = self.rows[i]
                for j, v in enumerate(row):
                    if v:
                        cost[j] -= cb * v
        self.cost = cost

    def pivot(self, r, c):
        row = self.rows[r]
        p = row[c]
        if p != 1:
            row = [v / p if v else v for v in row]
            self.rows[r] = row
        nz = [j for j, v in enumerate(row) if v]
        for i, other in enumerate(self.rows):
            if i != r:
                f = other[c]
                if f:
                    for j in nz:
                        other[j] -= f * row[j]
        f = self.cost[c]
        if f:
            cost = self.cost
            for j in nz:
                cost[j] -= f * row[j]
        self.basis[r] = c

    def _entering(self, bland: bool):
        cost, banned = self.cost, self.banned
        if bland:
            for j in range(self.ncols):
                if cost[j] < 0 and j not in banned:
                    return j
            return None
        best, best_j = 0, None
        for j in range(self.ncols):
            if cost[j] < best and j not in banned:
                best, best_j = cost[j], j
        return best_j

    def _leaving(self, c):
        best, best_i = None, None
        for i, row in enumerate(self.rows):
            a = row[c]
            if a > 0:
                ratio = row[-1] / a
                if (
                    best is None
                    or ratio < best
                    or (ratio == best and self.basis[i] < self.basis[best_i])
                ):
                    best, best_i = ratio, i
        return best_i

    def run(self) -> str:
        degenerate_run = 0
        while True:
            bland = self.rule == "bland" or degenerate_run > 50
            c = self._entering(bland)
            if c is None:
                return "optimal"
            r = self._leaving(c)
            if r is None:
                return "unbounded"
            degenerate_run = degenerate_run + 1 if self.rows[r][-1] == 0 else 0
            self.pivot(r, c)


def solve_lp(lp: LinearProgram) -> LPResult:
    """Solve ``lp`` exactly.

    Returns an :class:`LPResult` whose status is ``optimal`` (with the
    optimal value and a certifying vertex), ``infeasible`` or ``unbounded``.
    """
    poly = lp.polyhedron
    n = poly.n
    rule = _pivot_rule()

    # Single-variable ">=" rows become variable lower bounds (x = lo + y, y >= 0);
    # every other variable is split as y+ - y-.
    lower: list[Fraction | None] = [None] * n
    rows_in: list[Constraint] = []
    for con in poly.constraints:
        nz = [j for j, v in enumerate(con.coeffs) if v]
        if len(nz) == 1 and con.rel != EQ:
            j = nz[0]
            a = con.coeffs[j]
            is_lower = (con.rel == GE) == (a > 0)
            if is_lower:
                bound = con.rhs / a
                if lower[j] is None or bound > lower[j]:
                    lower[j] = bound
                continue
        if not nz:
            if not con.holds([Fraction(0)] * n):
                return LPResult("infeasible")
            continue
        rows_in.append(con)

    # column layout: structural columns first
    col_of: list[tuple[int, int | None]] = []
    ncol = 0
    for j in range(n):
        if lower[j] is not None:
            col_of.append((ncol, None))
            ncol += 1
        else:
            col_of.append((ncol, ncol + 1))
            ncol += 2
    n_struct = ncol

    m = len(rows_in)
    slack_col: list[int | None] = []
    for con in rows_in:
        if con.rel == EQ:
            slack_col.append(None)
        else:
            slack_col.append(ncol)
            ncol += 1

    rows = []
    basis: list[int | None] = []
    needs_art: list[int] = []
    for i, con in enumerate(rows_in):
        row = [mpq(0)] * ncol
        rhs = mpq(con.rhs)
        for j, a in enumerate(con.coeffs):
            if not a:
                continue
            aq = mpq(a)
            pos, neg = col_of[j]
            row[pos] = aq
            if neg is not None:
                row[neg] = -aq
            else:
                rhs -= aq * mpq(lower[j])
        s = slack_col[i]
        if s is not None:
            row[s] = mpq(-1) if con.rel == GE else mpq(1)
        if rhs < 0:
            row = [-v for v in row]
            rhs = -rhs
        row.append(rhs)
        rows.append(row)
        if s is not None and row[s] == 1:
            basis.append(s)
        else:
            basis.append(None)
            needs_art.append(i)

    art_start = ncol
    n_art = len(needs_art)
    total = ncol + n_art
    for i, row in enumerate(rows):
        rhs = row.pop()
        row.extend([mpq(0)] * n_art)
        row.append(rhs)
    for k, i in enumerate(needs_art):
        rows[i][art_start + k] = mpq(1)
        basis[i] = art_start + k

    tab = _Tableau(rows, basis, total, rule)

    if n_art:
        c1 = [mpq(0)] * total
        for k in range(n_art):
            c1[art_start + k] = mpq(1)
        tab.set_cost(c1)
        tab.run()
        if -tab.cost[-1] != 0:
            return LPResult("infeasible")
        # drive remaining (zero-valued) artificials out of the basis
        i = 0
        while i < len(tab.rows):
            b = tab.basis[i]
            if b is not None and b >= art_start:
                row = tab.rows[i]
                c = next((j for j in range(art_start) if row[j]), None)
                if c is None:
                    del tab.rows[i]
                    del tab.basis[i]
                    continue
                tab.pivot(i, c)
            i += 1
        tab.banned = set(range(art_start, total))

    c2 = [mpq(0)] * total
    for j in range(n):
        cj = lp.objective[j]
        if cj:
            pos, neg = col_of[j]
            c2[pos] = mpq(cj)
            if neg is not None:
                c2[neg] = -mpq(cj)
    tab.set_cost(c2)
    status = tab.run()
    if status == "unbounded":
        return LPResult("unbounded")

    values = [mpq(0)] * total
    for i, b in enumerate(tab.basis):
        values[b] = tab.rows[i][-1]
    point = []
    for j in range(n):
        pos, neg = col_of[j]
        if neg is None:
            point.append(_to_fraction(values[pos]) + lower[j])
        else:
            point.append(_to_fraction(values[pos] - values[neg]))
    point_t = tuple(point)
    value = sum((c * x for c, x in zip(lp.objective, point_t) if c), Fraction(0))
    return LPResult("optimal", value, point_t)


def minimize(poly: Polyhedron, objective: Sequence) -> LPResult:
    return solve_lp(LinearProgram(poly, tuple(objective)))


def lex_minimize(poly: Polyhedron, priority: Sequence[int] | None = None) -> tuple[Fraction, ...]:
    """Lexicographic minimum of ``poly`` under the variable order ``priority``.

    Minimise the first variable, fix it at its optimum as an equality, move
    on to the next.  Variables missing from ``priority`` take whatever value
    the final LP returns.
    """
    order = list(range(poly.n)) if priority is None else list(priority)
    if sorted(set(order)) != sorted(order) or any(not 0 <= j < poly.n for j in order):
        raise InputError("priority must list distinct variable indices")
    current = poly
    point = None
    for j in order:
        res = minimize(current, unit(poly.n, j))
        if res.status == "infeasible":
            raise InfeasibleError("lex_minimize: the polyhedron is empty")
        if res.status == "unbounded":
            raise UnboundedError(f"lex_minimize: variable {j} has no finite minimum")
        point = res.point
        current = current.add(Constraint(tuple(unit(poly.n, j)), EQ, res.value))
    if point is None:
        res = minimize(current, [0] * poly.n)
        if res.status == "infeasible":
            raise InfeasibleError("lex_minimize: the polyhedron is empty")
        point = res.point
    return point


# --------------------------------------------------------------------------
# double description


def _int_row(coeffs: Sequence[Fraction], rhs: Fraction) -> tuple[int, ...]:
    """Scale ``(coeffs, -rhs)`` to a primitive integer row (homogenised ``a.x - b t >= 0``)."""
    vals = [Fraction(c) for c in coeffs] + [-Fraction(rhs)]
    den = 1
    for v in vals:
        den = den * v.denominator // math.gcd(den, v.denominator)
    ints = [int(v * den) for v in vals]
    return _primitive(ints)


def _primitive(vec) -> tuple[int, ...]:
    g = 0
    for v in vec:
        g = math.gcd(g, v)
    if g > 1:
        return tuple(v // g for v in vec)
    return tuple(vec)


def _dot(a, r) -> int:
    return sum(x * y for x, y in zip(a, r) if x and y)


@dataclass(frozen=True)
class VRepresentation:
    vertices: frozenset[tuple[Fraction, ...]]
    rays: frozenset[tuple[Fraction, ...]]
    lineality_dim: int = 0
    empty: bool = False


def vertices_and_rays(poly: Polyhedron, cap: int = DEFAULT_RAY_CAP) -> VRepresentation:
    """Double-description conversion of ``poly`` to vertices and extreme rays.

    Works on the homogenised cone ``{(x, t): a.x - b t >= 0, t >= 0}`` with
    integer arithmetic.  Raises :class:`ResourceLimitError` once the number
    of intermediate rays exceeds ``cap``.
    """
    n = poly.n
    dim = n + 1
    hrows: list[tuple[int, ...]] = [tuple([0] * n + [1])]  # t >= 0
    for con in poly.constraints:
        row = _int_row(con.coeffs, con.rhs)
        if con.rel in (GE, EQ):
            hrows.append(row)
        if con.rel in (LE, EQ):
            hrows.append(tuple(-v for v in row))

    lineality: list[tuple[int, ...]] = [tuple(1 if i == j else 0 for i in range(dim)) for j in range(dim)]
    rays: list[tuple[int, ...]] = []
    tight: list[frozenset[int]] = []

    for k, a in enumerate(hrows):
        if not any(a):
            continue
        li = next((idx for idx, l in enumerate(lineality) if _dot(a, l)), None)
        if li is not None:
            l = lineality.pop(li)
            al = _dot(a, l)
            if al < 0:
                l = tuple(-v for v in l)
                al = -al
            lineality = [_primitive([al * x - _dot(a, lp) * y for x, y in zip(lp, l)]) for lp in lineality]
            new_rays = []
            for r in rays:
                ar = _dot(a, r)
                new_rays.append(_primitive([al * x - ar * y for x, y in zip(r, l)]))
            tight = [t | {k} for t in tight]
            rays = new_rays + [l]
            tight.append(frozenset(range(k)))
            continue

        vals = [_dot(a, r) for r in rays]
        pos = [i for i, v in enumerate(vals) if v > 0]
        neg = [i for i, v in enumerate(vals) if v < 0]
        zero = [i for i, v in enumerate(vals) if v == 0]
        new_rays = [rays[i] for i in pos] + [rays[i] for i in zero]
        new_tight = [tight[i] for i in pos] + [tight[i] | {k} for i in zero]
        for i in pos:
            for j in neg:
                common = tight[i] & tight[j]
                adjacent = True
                for u in range(len(rays)):
                    if u != i and u != j and common <= tight[u]:
                        adjacent = False
                        break
                if not adjacent:
                    continue
                vi, vj = vals[i], vals[j]
                r = _primitive([vi * y - vj * x for x, y in zip(rays[i], rays[j])])
                new_rays.append(r)
                new_tight.append(common | {k})
                if len(new_rays) > cap:
                    raise ResourceLimitError(f"double description exceeded {cap} rays")
        rays, tight = new_rays, new_tight

    if not rays and not lineality:
        return VRepresentation(frozenset(), frozenset(), 0, empty=True)
    has_point = any(r[-1] > 0 for r in rays)
    if not has_point:
        # only t = 0 generators: the polyhedron is empty
        return VRepresentation(frozenset(), frozenset(), len(lineality), empty=True)
    if lineality:
        return VRepresentation(frozenset(), frozenset(), len(lineality))
    verts = set()
    rs = set()
    for r in rays:
        t = r[-1]
        if t > 0:
            verts.add(tuple(Fraction(x, t) for x in r[:-1]))
        else:
            rs.add(tuple(Fraction(x) for x in _primitive(list(r[:-1]))))
    return VRepresentation(frozenset(verts), frozenset(rs), 0)


def enumerate_vertices(poly: Polyhedron, cap: int = DEFAULT_RAY_CAP) -> set[tuple[Fraction, ...]]:
    """Exact vertex set of ``poly`` (empty if it has none)."""
    return set(vertices_and_rays(poly, cap).vertices)


__all__ = [
    "Rational",
    "GE",
    "LE",
    "EQ",
    "Constraint",
    "Polyhedron",
    "LinearProgram",
    "LPResult",
    "VRepresentation",
    "constraint",
    "unit",
    "to_rational",
    "format_rational",
    "matrix_rank",
    "solve_lp",
    "minimize",
    "lex_minimize",
    "vertices_and_rays",
    "enumerate_vertices",
    "gmpy2",
]
