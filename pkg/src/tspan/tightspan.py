"""Points of P_d and of the tight span T_d of a finite distance space.

A point function is a tuple of Fractions indexed like ``d.labels``.

* ``P_d`` is ``{f : f(x) + f(y) >= d(x, y) for all x, y}`` (``x = y`` included,
  so every member is nonnegative).
* ``T_d`` is the set of pointwise-minimal elements of ``P_d``; for finite X
  this is exactly the set of fixed points of ``f -> f#`` with
  ``f#(x) = max_y d(x, y) - f(y)``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping, Sequence

from .distance import DistanceSpace, check_extended_four_point
from .errors import (
    DimensionMismatch,
    InputError,
    NonUniqueError,
    NotInSetError,
    PreconditionError,
    ResourceLimitError,
    VerificationError,
)
from .exactnum import (
    EQ,
    GE,
    LE,
    Constraint,
    Polyhedron,
    minimize,
    to_rational,
    unit,
)

PointFunction = tuple  # tuple[Fraction, ...]

DEFAULT_TOL = Fraction(1, 2**40)
DEFAULT_MAX_ITER = 10_000


def as_point(d: DistanceSpace, f) -> PointFunction:
    """Coerce a sequence, a label mapping or a TightSpanPoint to a point function."""
    if isinstance(f, TightSpanPoint):
        f = f.values
    if isinstance(f, Mapping):
        missing = [l for l in d.labels if l not in f]
        extra = [k for k in f if k not in d._index]
        if missing or extra:
            raise DimensionMismatch(
                f"point function keys do not match labels (missing {missing}, extra {extra})"
            )
        return tuple(to_rational(f[l]) for l in d.labels)
    vals = tuple(to_rational(v) for v in f)
    if len(vals) != d.n:
        raise DimensionMismatch(f"point function has {len(vals)} entries, expected {d.n}")
    return vals


def _vec(f) -> PointFunction:
    if isinstance(f, TightSpanPoint):
        return f.values
    return tuple(to_rational(v) for v in f)


@dataclass(frozen=True)
class TightSpanPoint:
    """A verified member of T_d together with its attaining sets.

    ``support[i]`` lists the labels ``y`` attaining ``max_y d(x_i, y) - f(y)``.
    Build with :func:`tight_span_point`, which recomputes the support.
    """

    values: PointFunction
    support: tuple[tuple[str, ...], ...]

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]


def support_sets(d: DistanceSpace, f) -> tuple[tuple[str, ...], ...]:
    f = as_point(d, f)
    out = []
    for i in range(d.n):
        row = d.table[i]
        vals = [row[j] - f[j] for j in range(d.n)]
        m = max(vals)
        out.append(tuple(d.labels[j] for j, v in enumerate(vals) if v == m))
    return tuple(out)


def tight_span_point(d: DistanceSpace, f) -> TightSpanPoint:
    """Wrap ``f`` as a TightSpanPoint, raising NotInSetError unless ``f`` is in T_d."""
    f = as_point(d, f)
    if not in_Td(d, f):
        raise NotInSetError("point is not in the tight span", certificate=f)
    return TightSpanPoint(f, support_sets(d, f))


# --------------------------------------------------------------------------
# membership


def pd_violation(d: DistanceSpace, f) -> tuple[str, str] | None:
    """First pair ``(x, y)`` with ``f(x) + f(y) < d(x, y)``, or None."""
    f = as_point(d, f)
    for i in range(d.n):
        row = d.table[i]
        for j in range(i, d.n):
            if f[i] + f[j] < row[j]:
                return d.labels[i], d.labels[j]
    return None


def in_Pd(d: DistanceSpace, f) -> bool:
    return pd_violation(d, f) is None


def f_sharp(d: DistanceSpace, f) -> PointFunction:
    """``x -> max_y d(x, y) - f(y)``."""
    f = as_point(d, f)
    return tuple(max(row[j] - f[j] for j in range(d.n)) for row in d.table)


def in_Td(d: DistanceSpace, f) -> bool:
    f = as_point(d, f)
    return f_sharp(d, f) == f


def in_kappa(d: DistanceSpace, f, x: str) -> bool:
    f = as_point(d, f)
    return f[d.index(x)] == 0 and in_Td(d, f)


def leq(f, g) -> bool:
    """Pointwise ``f <= g``."""
    return all(a <= b for a, b in zip(_vec(f), _vec(g)))


# --------------------------------------------------------------------------
# distances


def d_inf(f, g) -> Fraction:
    f, g = _vec(f), _vec(g)
    if len(f) != len(g):
        raise DimensionMismatch("point functions have different lengths")
    return max((abs(a - b) for a, b in zip(f, g)), default=Fraction(0))


def d_inf_by_formula(d: DistanceSpace, f, g) -> Fraction:
    """``max_{x,y} d(x, y) - f(x) - g(y)``; equals ``d_inf`` on T_d."""
    f, g = as_point(d, f), as_point(d, g)
    for h in (f, g):
        if not in_Td(d, h):
            raise NotInSetError("d_inf_by_formula needs tight-span points", certificate=h)
    return max(
        d.table[i][j] - f[i] - g[j] for i in range(d.n) for j in range(d.n)
    )


# --------------------------------------------------------------------------
# retractions


def pd_polyhedron(d: DistanceSpace) -> Polyhedron:
    """P_d as an explicit polyhedron in R^n."""
    n = d.n
    cons = []
    for i in range(n):
        cons.append(Constraint(tuple(unit(n, i)), GE, 0))
    for i in range(n):
        for j in range(i + 1, n):
            row = [Fraction(0)] * n
            row[i] = row[j] = Fraction(1)
            cons.append(Constraint(tuple(row), GE, d.table[i][j]))
    return Polyhedron(n, tuple(cons))


def retract_to_Td(d: DistanceSpace, f0, weights: Sequence | None = None) -> TightSpanPoint:
    """A minimal element of P_d below ``f0``.

    Solves ``min sum_x w(x) g(x)`` over ``{g in P_d : g <= f0}`` exactly.  Any
    optimum is pointwise-minimal in P_d as long as all weights are positive
    (default: all ones), because a dominated point has a smaller objective.
    """
    f0 = as_point(d, f0)
    bad = pd_violation(d, f0)
    if bad is not None:
        raise NotInSetError(f"start point is not in P_d (pair {bad[0]}, {bad[1]})", certificate=bad)
    if in_Td(d, f0):
        return tight_span_point(d, f0)
    n = d.n
    w = [Fraction(1)] * n if weights is None else [to_rational(v) for v in weights]
    if len(w) != n or any(v <= 0 for v in w):
        raise InputError("retraction weights must be positive, one per label")
    poly = pd_polyhedron(d).add(*(Constraint(tuple(unit(n, i)), LE, f0[i]) for i in range(n)))
    res = minimize(poly, w)
    if not res.optimal:
        raise VerificationError(f"retraction LP returned {res.status}")
    g = res.point
    if not in_Td(d, g) or not leq(g, f0):
        raise VerificationError("retraction LP optimum is not a tight-span point below f0")
    return tight_span_point(d, g)


def contraction_iterates(d: DistanceSpace, f0) -> Iterator[tuple[PointFunction, PointFunction]]:
    """Yield ``(f_k, f_k#)`` for ``f_{k+1} = (f_k + f_k#) / 2`` starting at ``f0``."""
    f = as_point(d, f0)
    while True:
        fs = f_sharp(d, f)
        yield f, fs
        f = tuple((a + b) / 2 for a, b in zip(f, fs))


def _argmax_pattern(d: DistanceSpace, f: PointFunction) -> tuple[int, ...]:
    pat = []
    for row in d.table:
        best, arg = None, 0
        for j, v in enumerate(row):
            val = v - f[j]
            if best is None or val > best:
                best, arg = val, j
        pat.append(arg)
    return tuple(pat)


def _nullspace(rows: list[list[Fraction]], ncols: int) -> list[list[Fraction]]:
    """Basis of ``{v : rows v = 0}`` by exact reduced row echelon form."""
    m = [list(r) for r in rows]
    pivots = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        pv = m[r][c]
        m[r] = [v / pv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * ncols
        v[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -m[i][fc]
        basis.append(v)
    return basis


def _solve_square(a: list[list[Fraction]], b: list[Fraction]) -> list[Fraction] | None:
    """Unique solution of ``a x = b`` (a may have extra consistent rows), else None."""
    n = len(a[0])
    m = [list(r) + [bv] for r, bv in zip(a, b)]
    r = 0
    where = [-1] * n
    for c in range(n):
        p = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if p is None:
            return None
        m[r], m[p] = m[p], m[r]
        pv = m[r][c]
        m[r] = [v / pv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        where[c] = r
        r += 1
    for i in range(r, len(m)):
        if m[i][-1] != 0:
            return None
    return [m[where[c]][-1] for c in range(n)]


def _snap(d: DistanceSpace, f: PointFunction, pattern: tuple[int, ...]) -> PointFunction | None:
    """Exact limit of the iteration, assuming the argmax pattern never changes again.

    With ``a = pattern`` the step is affine, ``f -> (f + c - P f) / 2`` where
    ``P`` selects ``f(a_x)``.  Its limit solves ``f(x) + f(a_x) = d(x, a_x)``;
    directions the step leaves invariant (left eigenvectors of ``P`` for -1,
    which come from even cycles of ``a``) keep their current value.
    """
    n = d.n
    rows = []
    rhs = []
    for x in range(n):
        row = [Fraction(0)] * n
        row[x] += 1
        row[pattern[x]] += 1
        rows.append(row)
        rhs.append(d.table[x][pattern[x]])
    # u^T (I + P) = 0
    transpose = [[rows[r][c] for r in range(n)] for c in range(n)]
    for u in _nullspace(transpose, n):
        rows.append(u)
        rhs.append(sum((a * b for a, b in zip(u, f)), Fraction(0)))
    sol = _solve_square(rows, rhs)
    return None if sol is None else tuple(sol)


@dataclass(frozen=True)
class RetractionResult:
    point: PointFunction
    iterations: int
    exact: bool  # True when the returned point was verified to lie in T_d


def contraction_retract(
    d: DistanceSpace,
    f0,
    tol: Fraction = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    snap: bool = True,
) -> RetractionResult:
    """Non-expansive retraction of P_d onto T_d by averaging ``f`` and ``f#``.

    Iterates ``f_{k+1} = (f_k + f_k#)/2`` until ``d_inf(f_k, f_k#) <= tol``.
    With ``snap`` on, whenever the per-coordinate argmax pattern has been
    the same for two consecutive steps the exact limit under that pattern is
    computed and accepted if it lies in T_d, below ``f0`` and between
    ``f_k#`` and ``f_k``.
    """
    tol = to_rational(tol)
    if tol <= 0:
        raise InputError("tolerance must be positive")
    f0 = as_point(d, f0)
    bad = pd_violation(d, f0)
    if bad is not None:
        raise NotInSetError(f"start point is not in P_d (pair {bad[0]}, {bad[1]})", certificate=bad)
    history: list[tuple[int, ...]] = []
    tried: set[tuple[int, ...]] = set()
    for k, (f, fs) in enumerate(contraction_iterates(d, f0)):
        if fs == f:
            return RetractionResult(f, k, True)
        if snap:
            pat = _argmax_pattern(d, f)
            history.append(pat)
            stable = len(history) >= 3 and history[-1] == history[-2] == history[-3]
            if stable and pat not in tried:
                tried.add(pat)
                cand = _snap(d, f, pat)
                if (
                    cand is not None
                    and leq(fs, cand)
                    and leq(cand, f)
                    and leq(cand, f0)
                    and in_Td(d, cand)
                ):
                    return RetractionResult(cand, k, True)
        if d_inf(f, fs) <= tol:
            if snap:
                cand = _snap(d, f, _argmax_pattern(d, f))
                if cand is not None and leq(fs, cand) and leq(cand, f) and in_Td(d, cand):
                    return RetractionResult(cand, k, True)
            return RetractionResult(f, k, False)
        if k >= max_iter:
            raise ResourceLimitError(f"contraction did not reach tolerance in {max_iter} iterations")
        # keep the snap bookkeeping bounded
        if len(history) > 3:
            history.pop(0)
    raise AssertionError("unreachable")


# --------------------------------------------------------------------------
# geodesics and kappa sets


def _require_ext4pt(d: DistanceSpace):
    cert = check_extended_four_point(d)
    if not cert.ok:
        raise PreconditionError(
            "distance space violates the extended four-point condition", certificate=cert
        )


def geodesic_point(
    d: DistanceSpace,
    x: str,
    y: str,
    t,
    method: str = "formula",
    check: bool = True,
) -> TightSpanPoint:
    """The tight-span point ``f`` with ``f(x) = t`` and ``f(y) = d(x, y) - t``.

    Every ``g`` in P_d with those two values satisfies
    ``g(z) >= max(0, d(z,x) - t, d(z,y) - (d(x,y) - t))``; when that lower
    envelope is itself in P_d it is the least element of the slice, hence
    the unique tight-span point there.  ``method="lp"`` instead minimises the
    coordinate sum over the slice and then confirms the optimum is the least
    element coordinate by coordinate.  Either way the output is checked,
    and failure raises NonUniqueError.
    """
    t = to_rational(t)
    i, j = d.index(x), d.index(y)
    D = d.table[i][j]
    if D <= 0:
        raise PreconditionError(f"geodesic_point needs d({x},{y}) > 0")
    if not 0 <= t <= D:
        raise PreconditionError(f"parameter {t} outside [0, {D}]")
    if check:
        _require_ext4pt(d)
    if method == "formula":
        s = D - t
        f = [
            max(Fraction(0), d.table[k][i] - t, d.table[k][j] - s) for k in range(d.n)
        ]
        f[i], f[j] = t, s
        f = tuple(f)
    elif method == "lp":
        f = _geodesic_lp(d, i, j, t)
    else:
        raise InputError(f"unknown geodesic method {method!r}")
    if not in_Td(d, f) or f[i] != t or f[j] != D - t:
        raise NonUniqueError(
            f"no unique tight-span point on the {x}-{y} geodesic at {t}; "
            "the extended four-point condition must fail",
            certificate=f,
        )
    return tight_span_point(d, f)


def _geodesic_lp(d: DistanceSpace, i: int, j: int, t: Fraction) -> PointFunction:
    n = d.n
    D = d.table[i][j]
    poly = pd_polyhedron(d).add(
        Constraint(tuple(unit(n, i)), EQ, t), Constraint(tuple(unit(n, j)), EQ, D - t)
    )
    res = minimize(poly, [1] * n)
    if not res.optimal:
        raise NonUniqueError(f"geodesic slice LP is {res.status}")
    g = res.point
    # the sum-minimiser must be the least element: no coordinate can go lower
    for k in range(n):
        low = minimize(poly, unit(n, k))
        if low.value != g[k]:
            raise NonUniqueError("geodesic slice has no least element", certificate=(g, k))
    return g


def geodesic_between(d: DistanceSpace, f, g, s) -> TightSpanPoint:
    """Point at distance ``s`` from ``f`` on the tree geodesic from ``f`` to ``g``.

    Valid when T_d is a real tree (extended four-point condition).  Uses the
    tree identity ``h(z) = max(f(z) - s, g(z) - (L - s), 0)`` with
    ``L = d_inf(f, g)`` (the distance from a point to the subtree kappa(z)
    along a geodesic) and verifies the result.
    """
    f, g = as_point(d, f), as_point(d, g)
    s = to_rational(s)
    L = d_inf(f, g)
    if not 0 <= s <= L:
        raise PreconditionError(f"parameter {s} outside [0, {L}]")
    h = tuple(max(a - s, b - (L - s), Fraction(0)) for a, b in zip(f, g))
    if not in_Td(d, h) or d_inf(f, h) != s or d_inf(h, g) != L - s:
        raise NonUniqueError("tight span is not a tree along this geodesic", certificate=h)
    return tight_span_point(d, h)


def nearest_kappa_point(d: DistanceSpace, f, x: str) -> TightSpanPoint:
    """A point ``g`` of kappa(x) with ``d_inf(f, g) = f(x)``.

    Retracts the row at ``x`` of the metric ``rho(u, v) = f(u) + f(v)``.
    Every ``g`` in P_d below that row lies within ``f(x)`` of ``f``, and
    ``g(x) = 0``, so the distance is exactly ``f(x)``.
    """
    f = as_point(d, f)
    if not in_Td(d, f):
        raise NotInSetError("nearest_kappa_point needs a tight-span point", certificate=f)
    i = d.index(x)
    h = tuple(Fraction(0) if k == i else f[i] + f[k] for k in range(d.n))
    g = retract_to_Td(d, h)
    if g.values[i] != 0 or d_inf(f, g) != f[i]:
        raise VerificationError("nearest kappa point construction failed")
    return g


def kappa_gates(d: DistanceSpace, x: str, check: bool = True) -> list[TightSpanPoint]:
    """``f_(x,y,0)`` for every ``y`` with ``d(x, y) > 0``, in label order.

    Empty exactly when ``x`` is at distance 0 from everything; then every
    tight-span point vanishes at ``x`` and kappa(x) is all of T_d.
    """
    if check:
        _require_ext4pt(d)
    i = d.index(x)
    return [
        geodesic_point(d, x, y, 0, check=False)
        for j, y in enumerate(d.labels)
        if d.table[i][j] > 0
    ]


@dataclass(frozen=True)
class KappaWitness:
    f: TightSpanPoint  # in kappa(y)
    g: TightSpanPoint  # in kappa(x)
    distance: Fraction


def verify_kappa_distance(d: DistanceSpace, x: str, y: str) -> KappaWitness:
    """Witnesses ``g in kappa(x)``, ``f in kappa(y)`` with ``d_inf(f, g) = d(x, y)``.

    Pin the pair (x, y) in a dominating metric, retract its row at y into
    kappa(y), then move to the nearest point of kappa(x).  Since any pair in
    kappa(x) x kappa(y) is at least ``d(x, y)`` apart, this certifies the
    distance between the two sets.
    """
    from .domination import kuratowski, pin_pair, some_dominating_metric

    dxy = d(x, y)
    if x == y:
        base = retract_to_Td(d, kuratowski(some_dominating_metric(d), x))
        return KappaWitness(base, base, Fraction(0))
    rho = pin_pair(some_dominating_metric(d), x, y)
    f = retract_to_Td(d, kuratowski(rho, y))
    g = nearest_kappa_point(d, f, x)
    dist = d_inf(f, g)
    ix, iy = d.index(x), d.index(y)
    if f.values[iy] != 0 or g.values[ix] != 0:
        raise VerificationError("kappa witnesses do not vanish at their labels")
    if dist != f.values[ix] or dist > dxy:
        raise VerificationError("kappa witness distance exceeds d(x, y)")
    if dist < dxy:
        raise VerificationError("kappa witnesses closer than d(x, y)")
    return KappaWitness(f, g, dist)


# --------------------------------------------------------------------------
# sampling (tests, fuzzing)


def random_pd_point(d: DistanceSpace, rng: random.Random, spread: int = 5) -> PointFunction:
    """A random member of P_d: half the diameter plus random nonnegative noise."""
    base = d.diameter() / 2
    return tuple(base + Fraction(rng.randint(0, spread * 4), 4) for _ in range(d.n))


def random_td_point(d: DistanceSpace, rng: random.Random) -> TightSpanPoint:
    weights = [rng.randint(1, 9) for _ in range(d.n)]
    return retract_to_Td(d, random_pd_point(d, rng), weights)


def random_kappa_point(d: DistanceSpace, x: str, rng: random.Random) -> TightSpanPoint:
    """A random member of kappa(x)."""
    i = d.index(x)
    top = d.diameter()
    f0 = tuple(
        Fraction(0) if k == i else top + Fraction(rng.randint(0, 20), 4) for k in range(d.n)
    )
    weights = [rng.randint(1, 9) for _ in range(d.n)]
    return retract_to_Td(d, f0, weights)


__all__ = [
    "PointFunction",
    "TightSpanPoint",
    "RetractionResult",
    "KappaWitness",
    "DEFAULT_TOL",
    "as_point",
    "tight_span_point",
    "support_sets",
    "pd_violation",
    "in_Pd",
    "in_Td",
    "in_kappa",
    "leq",
    "f_sharp",
    "d_inf",
    "d_inf_by_formula",
    "pd_polyhedron",
    "retract_to_Td",
    "contraction_iterates",
    "contraction_retract",
    "geodesic_point",
    "geodesic_between",
    "nearest_kappa_point",
    "kappa_gates",
    "verify_kappa_distance",
    "random_pd_point",
    "random_td_point",
    "random_kappa_point",
]
