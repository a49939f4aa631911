"""Finite distance spaces and the triangle / four-point condition checkers.

A distance space is a labelled symmetric table of nonnegative rationals with
zero diagonal.  Nothing else is required: the triangle inequality may fail
and distinct points may be at distance zero.

The quadruple scans are vectorised with numpy on an integer rescaling of the
table (all entries multiplied by twice the common denominator so the halved
terms stay integral).  Scans run in lexicographic order of label indices and
report the first violation, so results are deterministic.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch, InputError, UnknownLabel
from .exactnum import to_rational

OK = "ok"
METRIC_VIOLATION = "metric-violation"
FOURPOINT_VIOLATION = "fourpoint-violation"
EXT_FOURPOINT_VIOLATION = "ext-fourpoint-violation"


@dataclass(frozen=True)
class Certificate:
    """Outcome of a check.  For a violation, ``lhs > rhs`` on ``witness``."""

    kind: str
    witness: tuple = ()
    lhs: Fraction | None = None
    rhs: Fraction | None = None
    note: str = ""

    @property
    def ok(self) -> bool:
        return self.kind == OK

    def __bool__(self) -> bool:  # truthiness reads as "the check passed"
        return self.ok


OK_CERTIFICATE = Certificate(OK)


def _validate_label(label) -> str:
    if not isinstance(label, str):
        raise InputError(f"labels must be strings, got {label!r}")
    if not label.strip():
        raise InputError("empty label")
    return label


@dataclass(frozen=True)
class DistanceSpace:
    labels: tuple[str, ...]
    table: tuple[tuple[Fraction, ...], ...]
    _index: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        labels = tuple(_validate_label(l) for l in self.labels)
        if not labels:
            raise InputError("a distance space needs at least one point")
        if len(set(labels)) != len(labels):
            dup = sorted({l for l in labels if labels.count(l) > 1})
            raise InputError(f"duplicate labels: {', '.join(dup)}")
        n = len(labels)
        if len(self.table) != n:
            raise DimensionMismatch(f"table has {len(self.table)} rows, expected {n}")
        rows = []
        for i, row in enumerate(self.table):
            if len(row) != n:
                raise DimensionMismatch(f"row {labels[i]!r} has {len(row)} entries, expected {n}")
            rows.append(tuple(to_rational(v) for v in row))
        for i in range(n):
            if rows[i][i] != 0:
                raise InputError(f"nonzero diagonal entry at {labels[i]!r}")
            for j in range(i + 1, n):
                if rows[i][j] != rows[j][i]:
                    raise InputError(f"table is not symmetric at ({labels[i]!r}, {labels[j]!r})")
                if rows[i][j] < 0:
                    raise InputError(f"negative distance at ({labels[i]!r}, {labels[j]!r})")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "table", tuple(rows))
        object.__setattr__(self, "_index", {l: i for i, l in enumerate(labels)})

    # construction helpers -------------------------------------------------

    @classmethod
    def from_matrix(cls, labels: Sequence[str], matrix: Sequence[Sequence]) -> "DistanceSpace":
        return cls(tuple(labels), tuple(tuple(r) for r in matrix))

    @classmethod
    def from_pairs(cls, labels: Sequence[str], pairs: Mapping[tuple[str, str], object]) -> "DistanceSpace":
        """Build from a sparse map of unordered pairs; missing pairs are 0."""
        idx = {l: i for i, l in enumerate(labels)}
        n = len(labels)
        m = [[Fraction(0)] * n for _ in range(n)]
        for (a, b), v in pairs.items():
            if a not in idx or b not in idx:
                raise UnknownLabel(f"unknown label in pair ({a!r}, {b!r})")
            q = to_rational(v)
            m[idx[a]][idx[b]] = q
            m[idx[b]][idx[a]] = q
        return cls.from_matrix(labels, m)

    @classmethod
    def from_function(cls, labels: Sequence[str], fn: Callable[[str, str], object]) -> "DistanceSpace":
        return cls.from_matrix(
            labels, [[0 if a == b else fn(a, b) for b in labels] for a in labels]
        )

    # access ---------------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise UnknownLabel(f"unknown label {label!r}") from None

    def __call__(self, a: str, b: str) -> Fraction:
        return self.table[self.index(a)][self.index(b)]

    def row(self, label: str) -> tuple[Fraction, ...]:
        return self.table[self.index(label)]

    def pairs(self) -> Iterable[tuple[int, int]]:
        n = self.n
        return ((i, j) for i in range(n) for j in range(i + 1, n))

    def is_null(self) -> bool:
        return all(v == 0 for row in self.table for v in row)

    def diameter(self) -> Fraction:
        return max((v for row in self.table for v in row), default=Fraction(0))

    def restrict(self, subset: Sequence[str]) -> "DistanceSpace":
        return restrict(self, subset)

    def to_dict(self) -> dict:
        from .exactnum import format_rational

        return {
            "labels": list(self.labels),
            "matrix": [[format_rational(v) for v in row] for row in self.table],
        }


def restrict(d: DistanceSpace, subset: Sequence[str]) -> DistanceSpace:
    """Principal submatrix on ``subset`` (in the given order)."""
    if not subset:
        raise InputError("restrict: subset must be non-empty")
    idx = [d.index(l) for l in subset]
    return DistanceSpace(tuple(subset), tuple(tuple(d.table[i][j] for j in idx) for i in idx))


# --------------------------------------------------------------------------
# integer rescaling for vectorised scans


def _scaled(d: DistanceSpace) -> tuple[np.ndarray, int]:
    """Integer array ``D = d * scale`` with ``scale`` even, plus the scale."""
    den = 1
    for row in d.table:
        for v in row:
            den = den * v.denominator // math.gcd(den, v.denominator)
    scale = 2 * den
    ints = [[int(v * scale) for v in row] for row in d.table]
    biggest = max((abs(v) for row in ints for v in row), default=0)
    dtype = np.int64 if biggest < (1 << 58) else object
    return np.array(ints, dtype=dtype), scale


def _first_true(mask: np.ndarray):
    if not mask.any():
        return None
    return np.unravel_index(int(np.argmax(mask)), mask.shape)


# --------------------------------------------------------------------------
# triangle inequality


def triangle_terms(d: DistanceSpace, a: str, b: str, c: str) -> tuple[Fraction, Fraction]:
    """``(d(a,c), d(a,b) + d(b,c))``."""
    return d(a, c), d(a, b) + d(b, c)


def check_metric(d: DistanceSpace) -> Certificate:
    """First triple ``(a, b, c)`` with ``d(a,c) > d(a,b) + d(b,c)``, or ok."""
    D, _ = _scaled(d)
    n = d.n
    for a in range(n):
        # block[b, c] = d(a,c) - d(a,b) - d(b,c)
        block = D[a][None, :] - D[a][:, None] - D
        hit = _first_true(block > 0)
        if hit is not None:
            b, c = (int(v) for v in hit)
            w = (d.labels[a], d.labels[b], d.labels[c])
            lhs, rhs = triangle_terms(d, *w)
            return Certificate(METRIC_VIOLATION, w, lhs, rhs)
    return OK_CERTIFICATE


def is_metric(d: DistanceSpace) -> bool:
    return check_metric(d).ok


# --------------------------------------------------------------------------
# four-point conditions


def four_point_terms(d: DistanceSpace, w: str, x: str, y: str, z: str) -> tuple[Fraction, Fraction]:
    """Both sides of ``d(x,y) + d(w,z) <= max{d(w,x)+d(y,z), d(x,z)+d(w,y)}``."""
    lhs = d(x, y) + d(w, z)
    rhs = max(d(w, x) + d(y, z), d(x, z) + d(w, y))
    return lhs, rhs


def ext_four_point_terms(d: DistanceSpace, w: str, x: str, y: str, z: str) -> tuple[Fraction, Fraction]:
    """Both sides of the extended four-point inequality for ``(w, x, y, z)``.

    ``d(x,y) + d(z,w)`` is compared with the maximum of eight terms: the two
    single distances, the two cross sums and four triangle half-perimeters.
    """
    lhs = d(x, y) + d(z, w)
    half = Fraction(1, 2)
    rhs = max(
        d(x, y),
        d(w, z),
        d(w, x) + d(y, z),
        d(x, z) + d(w, y),
        (d(x, y) + d(y, z) + d(z, x)) * half,
        (d(x, y) + d(y, w) + d(w, x)) * half,
        (d(x, z) + d(z, w) + d(w, x)) * half,
        (d(y, z) + d(z, w) + d(w, y)) * half,
    )
    return lhs, rhs


def _scan_quadruples(d: DistanceSpace, extended: bool):
    D, _ = _scaled(d)
    n = d.n
    # axes of each block: [x, y, z] for a fixed w
    Dxy = D[:, :, None]
    Dyz = D[None, :, :]
    Dxz = D[:, None, :]
    H = D // 2  # scale is even, so halving is exact
    Hxy = H[:, :, None]
    Hyz = H[None, :, :]
    Hxz = H[:, None, :]
    tri_xyz = Hxy + Hyz + Hxz
    for w in range(n):
        Dwz = D[w][None, None, :]
        Dwx = D[w][:, None, None]
        Dwy = D[w][None, :, None]
        lhs = Dxy + Dwz
        rhs = np.maximum(Dwx + Dyz, Dxz + Dwy)
        if extended:
            Hw = H[w]
            rhs = np.maximum(rhs, np.maximum(Dxy, Dwz))
            rhs = np.maximum(rhs, tri_xyz)
            rhs = np.maximum(rhs, Hxy + Hw[None, :, None] + Hw[:, None, None])
            rhs = np.maximum(rhs, Hxz + Hw[None, None, :] + Hw[:, None, None])
            rhs = np.maximum(rhs, Hyz + Hw[None, None, :] + Hw[None, :, None])
        hit = _first_true(lhs > rhs)
        if hit is not None:
            x, y, z = (int(v) for v in hit)
            return (d.labels[w], d.labels[x], d.labels[y], d.labels[z])
    return None


def check_four_point(d: DistanceSpace) -> Certificate:
    """Classical four-point condition over all ordered quadruples (with repeats).

    The witness is reported in the order ``(w, x, y, z)`` of
    ``d(x,y) + d(w,z) <= max{d(w,x) + d(y,z), d(x,z) + d(w,y)}``.
    """
    hit = _scan_quadruples(d, extended=False)
    if hit is None:
        return OK_CERTIFICATE
    lhs, rhs = four_point_terms(d, *hit)
    return Certificate(FOURPOINT_VIOLATION, hit, lhs, rhs)


def check_extended_four_point(d: DistanceSpace) -> Certificate:
    """Extended four-point condition over all ordered quadruples (with repeats)."""
    hit = _scan_quadruples(d, extended=True)
    if hit is None:
        return OK_CERTIFICATE
    lhs, rhs = ext_four_point_terms(d, *hit)
    return Certificate(EXT_FOURPOINT_VIOLATION, hit, lhs, rhs)


def recheck(d: DistanceSpace, cert: Certificate) -> bool:
    """Re-evaluate a violation certificate on ``d``; True iff it reproduces."""
    terms = {
        METRIC_VIOLATION: triangle_terms,
        FOURPOINT_VIOLATION: four_point_terms,
        EXT_FOURPOINT_VIOLATION: ext_four_point_terms,
    }.get(cert.kind)
    if terms is None:
        return False
    lhs, rhs = terms(d, *cert.witness)
    return lhs == cert.lhs and rhs == cert.rhs and lhs > rhs


# --------------------------------------------------------------------------
# random instances (tests, fuzzing)


def default_labels(n: int) -> tuple[str, ...]:
    base = "abcdefghijklmnopqrstuvwxyz"
    if n <= len(base):
        return tuple(base[:n])
    return tuple(f"p{i}" for i in range(n))


def random_distance_space(
    rng: random.Random, n: int, max_value: int = 10, denominator: int = 1, zero_prob: float = 0.15
) -> DistanceSpace:
    """Uniform random table; some entries forced to zero."""
    m = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            v = Fraction(0) if rng.random() < zero_prob else Fraction(rng.randint(0, max_value * denominator), denominator)
            m[i][j] = m[j][i] = v
    return DistanceSpace.from_matrix(default_labels(n), m)


def metric_closure(d: DistanceSpace) -> DistanceSpace:
    """Shortest-path (Floyd-Warshall) closure: the largest metric below ``d``."""
    n = d.n
    m = [list(r) for r in d.table]
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if m[i][k] + m[k][j] < m[i][j]:
                    m[i][j] = m[i][k] + m[k][j]
    return DistanceSpace.from_matrix(d.labels, m)


def random_metric(rng: random.Random, n: int, max_value: int = 10) -> DistanceSpace:
    """A random metric: half the time a tree metric, otherwise a path closure."""
    if rng.random() < 0.5:
        from .realtree import random_tree_metric

        return random_tree_metric(rng, n)
    return metric_closure(random_distance_space(rng, n, max_value, zero_prob=0.05))


__all__ = [
    "Certificate",
    "DistanceSpace",
    "OK",
    "OK_CERTIFICATE",
    "METRIC_VIOLATION",
    "FOURPOINT_VIOLATION",
    "EXT_FOURPOINT_VIOLATION",
    "restrict",
    "check_metric",
    "is_metric",
    "check_four_point",
    "check_extended_four_point",
    "four_point_terms",
    "ext_four_point_terms",
    "triangle_terms",
    "recheck",
    "default_labels",
    "random_distance_space",
    "random_metric",
    "metric_closure",
]
