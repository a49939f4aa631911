"""Metrics dominating a distance space.

``M(d)`` is the set of metrics ``rho`` on the labels of ``d`` with
``rho(x, y) >= d(x, y)`` everywhere.  It is never empty for finite X (the
constant-diameter metric belongs to it), and its minimal elements embed into
the tight span of ``d``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .distance import DistanceSpace, check_metric
from .errors import InputError, NotInSetError, PreconditionError, VerificationError
from .exactnum import GE, LE, Constraint, Polyhedron, lex_minimize, minimize, to_rational
from .tightspan import (
    DEFAULT_TOL,
    PointFunction,
    as_point,
    contraction_retract,
    d_inf,
    in_Td,
)


@dataclass(frozen=True)
class DominatingMetric:
    """A metric ``metric`` with ``metric >= base`` entrywise."""

    metric: DistanceSpace
    base: DistanceSpace

    def __post_init__(self):
        if self.metric.labels != self.base.labels:
            raise InputError("dominating metric and base use different labels")
        for i, j in self.base.pairs():
            if self.metric.table[i][j] < self.base.table[i][j]:
                a, b = self.base.labels[i], self.base.labels[j]
                raise NotInSetError(f"metric does not dominate the base at ({a}, {b})", certificate=(a, b))
        cert = check_metric(self.metric)
        if not cert.ok:
            raise NotInSetError("dominating table violates the triangle inequality", certificate=cert)

    def __call__(self, a: str, b: str) -> Fraction:
        return self.metric(a, b)

    @property
    def labels(self) -> tuple[str, ...]:
        return self.metric.labels


def some_dominating_metric(d: DistanceSpace) -> DominatingMetric:
    """Constant ``diam(d)`` off the diagonal (the zero metric when d is null)."""
    top = d.diameter()
    return DominatingMetric(DistanceSpace.from_function(d.labels, lambda a, b: top), d)


def pin_pair(p: DominatingMetric, x: str, y: str, force: bool = False) -> DominatingMetric:
    """Edit ``p`` so that the pair ``(x, y)`` sits at ``d(x, y)``, staying in M(d).

    ``rho(x, y) = d(x, y)``, ``rho(x, u) = p(x, u) + p(x, y) - d(x, y)``,
    ``rho(y, u) = p(x, u) + p(x, y)`` and every other pair unchanged.  An
    already pinned pair is returned untouched unless ``force`` is set.
    """
    d = p.base
    ix, iy = d.index(x), d.index(y)
    if ix == iy:
        raise InputError("pin_pair needs two distinct labels")
    dxy = d.table[ix][iy]
    pxy = p.metric.table[ix][iy]
    if pxy == dxy and not force:
        return p
    n = d.n
    m = [list(r) for r in p.metric.table]
    for u in range(n):
        if u in (ix, iy):
            continue
        pxu = p.metric.table[ix][u]
        m[ix][u] = m[u][ix] = pxu + pxy - dxy
        m[iy][u] = m[u][iy] = pxu + pxy
    m[ix][iy] = m[iy][ix] = dxy
    try:
        return DominatingMetric(DistanceSpace.from_matrix(d.labels, m), d)
    except NotInSetError as exc:  # the construction always lands in M(d)
        raise VerificationError(f"pin_pair produced a table outside M(d): {exc}") from exc


def _pair_index(d: DistanceSpace) -> dict[tuple[int, int], int]:
    return {pair: k for k, pair in enumerate(d.pairs())}


def _metric_cone(d: DistanceSpace, pair_pos: dict[tuple[int, int], int]) -> list[Constraint]:
    """Triangle inequalities on pair variables (``rho(i,k) <= rho(i,j) + rho(j,k)``)."""
    n = d.n
    nv = len(pair_pos)

    def var(a, b):
        return pair_pos[(a, b) if a < b else (b, a)]

    cons = []
    for i in range(n):
        for k in range(i + 1, n):
            for j in range(n):
                if j in (i, k):
                    continue
                row = [Fraction(0)] * nv
                row[var(i, j)] += 1
                row[var(j, k)] += 1
                row[var(i, k)] -= 1
                cons.append(Constraint(tuple(row), GE, 0))
    return cons


def _lower_bounds(d: DistanceSpace, pair_pos) -> list[Constraint]:
    nv = len(pair_pos)
    cons = []
    for (i, j), k in pair_pos.items():
        row = [Fraction(0)] * nv
        row[k] = Fraction(1)
        cons.append(Constraint(tuple(row), GE, d.table[i][j]))
    return cons


def _from_pair_values(d: DistanceSpace, pair_pos, values) -> DistanceSpace:
    n = d.n
    m = [[Fraction(0)] * n for _ in range(n)]
    for (i, j), k in pair_pos.items():
        m[i][j] = m[j][i] = values[k]
    return DistanceSpace.from_matrix(d.labels, m)


def minimal_dominating_metric(
    d: DistanceSpace, pair_order: Sequence[tuple[str, str]] | None = None
) -> DominatingMetric:
    """Lexicographic minimum of M(d) under ``pair_order`` (default: label order).

    Minimising each pair in turn and freezing its value yields a metric with
    no distinct dominated metric below it in M(d).
    """
    pos = _pair_index(d)
    if pair_order is None:
        priority = list(range(len(pos)))
    else:
        priority = []
        for a, b in pair_order:
            i, j = d.index(a), d.index(b)
            if i == j:
                raise InputError(f"pair ({a}, {b}) is not a pair of distinct labels")
            priority.append(pos[(min(i, j), max(i, j))])
        if sorted(priority) != list(range(len(pos))):
            raise InputError("pair_order must list every unordered pair exactly once")
    if not pos:
        return DominatingMetric(d, d)
    poly = Polyhedron(len(pos), tuple(_lower_bounds(d, pos) + _metric_cone(d, pos)))
    values = lex_minimize(poly, priority)
    return DominatingMetric(_from_pair_values(d, pos, values), d)


def smaller_dominating_metric(rho: DominatingMetric) -> DistanceSpace | None:
    """A metric in M(d) strictly below ``rho``, or None when ``rho`` is minimal.

    Solves ``min sum sigma`` over ``{sigma in M(d) : sigma <= rho}``.
    """
    d = rho.base
    pos = _pair_index(d)
    if not pos:
        return None
    nv = len(pos)
    upper = []
    for (i, j), k in pos.items():
        row = [Fraction(0)] * nv
        row[k] = Fraction(1)
        upper.append(Constraint(tuple(row), LE, rho.metric.table[i][j]))
    poly = Polyhedron(nv, tuple(_lower_bounds(d, pos) + _metric_cone(d, pos) + upper))
    res = minimize(poly, [1] * nv)
    if not res.optimal:
        raise VerificationError(f"minimality LP returned {res.status}")
    total = sum(rho.metric.table[i][j] for (i, j) in pos)
    if res.value == total:
        return None
    return _from_pair_values(d, pos, res.point)


def verify_minimal(rho: DominatingMetric) -> bool:
    """True iff no metric in M(d) other than ``rho`` lies below ``rho``."""
    return smaller_dominating_metric(rho) is None


def kuratowski(rho, x: str) -> PointFunction:
    """The row ``y -> rho(x, y)``."""
    metric = rho.metric if isinstance(rho, DominatingMetric) else rho
    return metric.row(x)


@dataclass(frozen=True)
class MetricEmbedding:
    points: dict  # label -> PointFunction
    exact: bool


def embed_minimal_metric(
    d: DistanceSpace, rho: DominatingMetric, tol: Fraction = DEFAULT_TOL, certified: bool = False
) -> MetricEmbedding:
    """Map each label ``x`` to a point of kappa(x) so that ``d_inf`` reproduces ``rho``.

    ``psi(x)`` is the non-expansive retraction of the row of ``rho`` at ``x``.
    The pairwise distances are compared exactly when every retraction
    snapped to an exact point, and up to ``2 * tol`` otherwise.
    """
    if rho.base != d:
        raise InputError("dominating metric belongs to a different distance space")
    if not certified and not verify_minimal(rho):
        raise PreconditionError("metric is not minimal in M(d)")
    points = {}
    exact = True
    for x in d.labels:
        res = contraction_retract(d, kuratowski(rho, x), tol)
        if res.point[d.index(x)] != 0:
            raise VerificationError(f"image of {x} left kappa({x})")
        points[x] = res.point
        exact = exact and res.exact
    slack = Fraction(0) if exact else 2 * Fraction(tol)
    for i, j in d.pairs():
        a, b = d.labels[i], d.labels[j]
        if abs(d_inf(points[a], points[b]) - rho.metric.table[i][j]) > slack:
            raise VerificationError(
                f"embedding distance for ({a}, {b}) is {d_inf(points[a], points[b])}, "
                f"expected {rho.metric.table[i][j]}"
            )
    return MetricEmbedding(points, exact)


def metric_from_point(d: DistanceSpace, f) -> DominatingMetric:
    """``rho_f(x, y) = f(x) + f(y)`` off the diagonal."""
    f = as_point(d, f)
    if not in_Td(d, f):
        raise NotInSetError("metric_from_point needs a tight-span point", certificate=f)
    n = d.n
    m = [[Fraction(0) if i == j else f[i] + f[j] for j in range(n)] for i in range(n)]
    return DominatingMetric(DistanceSpace.from_matrix(d.labels, m), d)


__all__ = [
    "DominatingMetric",
    "MetricEmbedding",
    "some_dominating_metric",
    "pin_pair",
    "minimal_dominating_metric",
    "smaller_dominating_metric",
    "verify_minimal",
    "kuratowski",
    "embed_minimal_metric",
    "metric_from_point",
]
