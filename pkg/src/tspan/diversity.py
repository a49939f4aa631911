"""Finite diversities, their induced subset distance and tight-span tests.

A diversity on a ground set X assigns a value to every subset.  Tables are
dense: subset ``A`` is stored at the bitmask with bit ``i`` set when the
``i``-th element belongs to ``A``.  Subset functions (candidate tight-span
points) use the same indexing.

P_delta is cut out by one inequality per collection of non-empty subsets,
``sum_{C} f(C) >= delta(union)``.  Only irredundant collections matter (no
member is covered by the union of the others), and there are few of them
for the ground sets handled here (813 at n = 5).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from .distance import (
    Certificate,
    DistanceSpace,
    OK_CERTIFICATE,
    check_extended_four_point,
    check_four_point,
    check_metric,
    default_labels,
)
from .errors import (
    InputError,
    NotInSetError,
    PreconditionError,
    ResourceLimitError,
    UnknownLabel,
    VerificationError,
)
from .exactnum import GE, LE, Constraint, Polyhedron, enumerate_vertices, minimize, to_rational
from .realtree import WeightedTree, additive_tree_reconstruction, hull_length
from .tightspan import in_Td

DEFAULT_CAP = 5

DIVERSITY_VIOLATION = "diversity-violation"


# --------------------------------------------------------------------------
# subsets


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def subset_order(n: int) -> list[int]:
    """All ``2^n`` masks ordered by size, then lexicographically by element index."""
    out = []
    for k in range(n + 1):
        for combo in itertools.combinations(range(n), k):
            out.append(sum(1 << i for i in combo))
    return out


def mask_elements(mask: int) -> list[int]:
    return [i for i in range(mask.bit_length()) if mask >> i & 1]


@lru_cache(maxsize=None)
def irredundant_collections(n: int) -> tuple[tuple[int, ...], ...]:
    """Collections of non-empty subsets in which every member has a private element.

    Includes the empty collection.  Members are listed in increasing mask order.
    """
    masks = list(range(1, 1 << n))
    out: list[tuple[int, ...]] = []

    def private_ok(coll):
        for i, c in enumerate(coll):
            rest = 0
            for j, c2 in enumerate(coll):
                if j != i:
                    rest |= c2
            if c & ~rest == 0:
                return False
        return True

    def rec(start, coll, union):
        out.append(tuple(coll))
        for k in range(start, len(masks)):
            m = masks[k]
            if m & ~union == 0:
                continue
            coll.append(m)
            if private_ok(coll):
                rec(k + 1, coll, union | m)
            coll.pop()

    rec(0, [], 0)
    return tuple(out)


# --------------------------------------------------------------------------
# the diversity type


def table_from_mapping(elements: Sequence[str], table: Mapping) -> tuple[Fraction, ...]:
    """Mask-indexed value table from ``{subset: value}``, without checking the axioms."""
    elements = tuple(elements)
    index = {e: i for i, e in enumerate(elements)}
    vals: list[Fraction | None] = [None] * (1 << len(elements))
    for key, v in table.items():
        m = 0
        for e in key:
            if e not in index:
                raise UnknownLabel(f"unknown element {e!r}")
            m |= 1 << index[e]
        if vals[m] is not None and vals[m] != to_rational(v):
            raise InputError(f"conflicting values for subset {sorted(key)}")
        vals[m] = to_rational(v)
    for m in range(1 << len(elements)):
        if vals[m] is None:
            if popcount(m) <= 1:
                vals[m] = Fraction(0)
            else:
                names = ",".join(elements[i] for i in mask_elements(m))
                raise InputError(f"diversity table is missing subset {{{names}}}")
    return tuple(vals)


@dataclass(frozen=True)
class Diversity:
    elements: tuple[str, ...]
    values: tuple[Fraction, ...]  # indexed by bitmask

    def __post_init__(self):
        elements = tuple(self.elements)
        if not elements:
            raise InputError("a diversity needs at least one element")
        if len(set(elements)) != len(elements) or any(not str(e).strip() for e in elements):
            raise InputError("elements must be distinct non-empty labels")
        if any("," in e or "{" in e or "}" in e for e in elements):
            raise InputError("element labels may not contain ',', '{' or '}'")
        values = tuple(to_rational(v) for v in self.values)
        if len(values) != 1 << len(elements):
            raise InputError(
                f"diversity table has {len(values)} entries, expected {1 << len(elements)}"
            )
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "values", values)
        cert = check_diversity_axioms(self)
        if not cert.ok:
            raise NotInSetError(f"table is not a diversity: {cert.note}", certificate=cert)

    @property
    def n(self) -> int:
        return len(self.elements)

    def mask(self, subset: Iterable[str]) -> int:
        m = 0
        for e in subset:
            try:
                m |= 1 << self.elements.index(e)
            except ValueError:
                raise UnknownLabel(f"unknown element {e!r}") from None
        return m

    def subset(self, mask: int) -> tuple[str, ...]:
        return tuple(self.elements[i] for i in mask_elements(mask))

    def subset_label(self, mask: int) -> str:
        return "{" + ",".join(self.subset(mask)) + "}"

    def __call__(self, subset) -> Fraction:
        m = subset if isinstance(subset, int) else self.mask(subset)
        return self.values[m]

    @property
    def full(self) -> int:
        return (1 << self.n) - 1

    @classmethod
    def from_mapping(cls, elements: Sequence[str], table: Mapping) -> "Diversity":
        """Build from ``{subset: value}`` where subsets are iterables of labels.

        Every subset with at least two elements must be present; subsets of
        size at most one default to 0.
        """
        return cls(tuple(elements), table_from_mapping(elements, table))

    def to_mapping(self) -> dict[str, Fraction]:
        return {",".join(self.subset(m)): self.values[m] for m in subset_order(self.n) if m}


def check_diversity_axioms(delta, values: Sequence | None = None) -> Certificate:
    """Check the diversity axioms for a Diversity or for ``(elements, values)``.

    Zero axiom: ``delta(A) = 0`` iff ``|A| <= 1``.  Triangle axiom:
    ``delta(A | C) <= delta(A | B) + delta(B | C)`` whenever B is non-empty.

    Violations are reported with subset labels as the witness; for the
    triangle axiom the witness is ``(A, B, C)`` with ``lhs = delta(A|C)`` and
    ``rhs = delta(A|B) + delta(B|C)``.
    """
    if values is None:
        elements, values = delta.elements, delta.values
    else:
        elements = tuple(delta)
        values = tuple(to_rational(v) for v in values)
        if len(values) != 1 << len(elements):
            raise InputError("incomplete diversity table")
    n = len(elements)

    def lab(m):
        return "{" + ",".join(elements[i] for i in mask_elements(m)) + "}"

    order = subset_order(n)
    for m in order:
        small = popcount(m) <= 1
        if (values[m] == 0) != small:
            return Certificate(
                DIVERSITY_VIOLATION,
                (lab(m),),
                values[m],
                Fraction(0),
                note=f"zero axiom fails at {lab(m)}",
            )
    den = 1
    for v in values:
        den = den * v.denominator // math.gcd(den, v.denominator)
    ints = [int(v * den) for v in values]
    dtype = np.int64 if max(abs(v) for v in ints) < (1 << 60) else object
    size = 1 << n
    idx = np.arange(size)
    vals = np.array(ints, dtype=dtype)
    union = vals[idx[:, None] | idx[None, :]]  # union[A, C] = delta(A | C)
    pos = np.empty(size, dtype=np.int64)
    pos[order] = np.arange(size)
    for B in order[1:]:
        ab = union[:, B]
        mask = union > ab[:, None] + ab[None, :]
        if mask.any():
            hits = np.argwhere(mask)
            # first violation in subset order of (A, C)
            key = pos[hits[:, 0]] * size + pos[hits[:, 1]]
            A, C = (int(v) for v in hits[int(np.argmin(key))])
            return Certificate(
                DIVERSITY_VIOLATION,
                (lab(A), lab(B), lab(C)),
                values[A | C],
                values[A | B] + values[B | C],
                note=f"triangle axiom fails at A={lab(A)}, B={lab(B)}, C={lab(C)}",
            )
    return OK_CERTIFICATE


def _require_cap(delta: Diversity, cap: int):
    if delta.n > cap:
        raise ResourceLimitError(f"ground set has {delta.n} elements; the cap is {cap}")


# --------------------------------------------------------------------------
# constructors


def diameter_diversity(rho: DistanceSpace) -> Diversity:
    """``delta(A) = max_{x, y in A} rho(x, y)`` for a metric with no zero distances."""
    for i, j in rho.pairs():
        if rho.table[i][j] <= 0:
            raise PreconditionError(
                f"diameter diversity needs positive distances ({rho.labels[i]}, {rho.labels[j]})"
            )
    cert = check_metric(rho)
    if not cert.ok:
        raise PreconditionError("diameter diversity needs a metric", certificate=cert)
    n = rho.n
    vals = []
    for m in range(1 << n):
        el = mask_elements(m)
        vals.append(max((rho.table[a][b] for a in el for b in el), default=Fraction(0)))
    return Diversity(rho.labels, tuple(vals))


def l1_diversity(points: Sequence[Sequence], labels: Sequence[str] | None = None) -> Diversity:
    """``delta(A) = sum_i (max_{a in A} a_i - min_{a in A} a_i)``."""
    pts = [tuple(to_rational(v) for v in p) for p in points]
    if not pts:
        raise InputError("l1_diversity needs at least one point")
    dim = len(pts[0])
    if any(len(p) != dim for p in pts):
        raise InputError("points have different dimensions")
    if len(set(pts)) != len(pts):
        raise PreconditionError("l1_diversity needs distinct points")
    labels = default_labels(len(pts)) if labels is None else tuple(labels)
    vals = []
    for m in range(1 << len(pts)):
        el = mask_elements(m)
        if len(el) <= 1:
            vals.append(Fraction(0))
            continue
        vals.append(
            sum(
                (max(pts[a][k] for a in el) - min(pts[a][k] for a in el) for k in range(dim)),
                Fraction(0),
            )
        )
    return Diversity(labels, tuple(vals))


def phylogenetic_diversity(T: WeightedTree, placement: Mapping[str, object]) -> Diversity:
    """``delta(A)`` = total length of the subtree spanned by the placed points of ``A``."""
    labels = tuple(placement)
    verts = [T.resolve(placement[l]) for l in labels]
    vals = []
    for m in range(1 << len(labels)):
        vals.append(hull_length(T, [verts[i] for i in mask_elements(m)]))
    return Diversity(labels, tuple(vals))


# --------------------------------------------------------------------------
# induced distance on subsets


def d_delta(delta: Diversity) -> DistanceSpace:
    """``D(A, B) = max(delta(A | B) - delta(A) - delta(B), 0)`` on all subsets.

    Labels are ``"{}"``, ``"{a}"``, ``"{a,b}"``, ... ordered by size and then
    lexicographically.
    """
    order = subset_order(delta.n)
    v = delta.values
    labels = [delta.subset_label(m) for m in order]
    table = [
        [max(v[a | b] - v[a] - v[b], Fraction(0)) for b in order] for a in order
    ]
    return DistanceSpace.from_matrix(labels, table)


# --------------------------------------------------------------------------
# subset functions and P/T sets

SubsetFunction = tuple  # tuple[Fraction, ...] indexed by bitmask


def as_subset_function(delta: Diversity, f) -> SubsetFunction:
    """Coerce a mask-indexed sequence or a ``{label-tuple or "a,b": value}`` map."""
    size = 1 << delta.n
    if isinstance(f, Mapping):
        vals: list[Fraction | None] = [None] * size
        for key, v in f.items():
            if isinstance(key, str):
                key = [k for k in key.strip("{}").split(",") if k]
            vals[delta.mask(key)] = to_rational(v)
        missing = [delta.subset_label(m) for m in range(1, size) if vals[m] is None]
        if missing:
            raise InputError(f"subset function is missing {', '.join(missing)}")
        if vals[0] is None:
            vals[0] = Fraction(0)
        return tuple(vals)
    vals = tuple(to_rational(v) for v in f)
    if len(vals) != size:
        raise InputError(f"subset function has {len(vals)} entries, expected {size}")
    return vals


def _p_delta_rows(n: int, pairs_only: bool) -> list[tuple[int, ...]]:
    if pairs_only:
        masks = range(1, 1 << n)
        rows = [(a,) for a in masks]
        rows += [(a, b) for a, b in itertools.combinations(masks, 2)]
        return rows
    return [c for c in irredundant_collections(n) if c]


def _violated_row(delta: Diversity, f: SubsetFunction, pairs_only: bool):
    v = delta.values
    for coll in _p_delta_rows(delta.n, pairs_only):
        union = 0
        for c in coll:
            union |= c
        if sum(f[c] for c in coll) < v[union]:
            return coll
    return None


def in_P_delta(delta: Diversity, f) -> bool:
    f = as_subset_function(delta, f)
    return f[0] == 0 and _violated_row(delta, f, pairs_only=False) is None


def in_P2(delta: Diversity, f) -> bool:
    f = as_subset_function(delta, f)
    return f[0] == 0 and _violated_row(delta, f, pairs_only=True) is None


def _row_constraint(n: int, coll: Sequence[int], rhs) -> Constraint:
    """Constraint over the ``2^n - 1`` non-empty-subset variables (mask - 1)."""
    row = [Fraction(0)] * ((1 << n) - 1)
    for c in coll:
        row[c - 1] += 1
    return Constraint(tuple(row), GE, rhs)


def p_polyhedron(delta: Diversity, pairs_only: bool = False) -> Polyhedron:
    """P_delta (or P2 with ``pairs_only``) over the non-empty subsets (variable ``mask - 1``)."""
    n = delta.n
    cons = []
    for coll in _p_delta_rows(n, pairs_only):
        union = 0
        for c in coll:
            union |= c
        cons.append(_row_constraint(n, coll, delta.values[union]))
    return Polyhedron((1 << n) - 1, tuple(cons))


def _minimal_below(delta: Diversity, f: SubsetFunction, pairs_only: bool) -> SubsetFunction:
    """``argmin sum g`` over ``{g in P : g <= f}`` by constraint generation."""
    n = delta.n
    nv = (1 << n) - 1
    cons = [_row_constraint(n, (m,), delta.values[m]) for m in range(1, 1 << n)]
    for m in range(1, 1 << n):
        row = [Fraction(0)] * nv
        row[m - 1] = Fraction(1)
        cons.append(Constraint(tuple(row), LE, f[m]))
    while True:
        res = minimize(Polyhedron(nv, tuple(cons)), [1] * nv)
        if not res.optimal:
            raise NotInSetError(f"minimality LP is {res.status}")
        g = (Fraction(0),) + res.point
        coll = _violated_row(delta, g, pairs_only)
        if coll is None:
            return g
        union = 0
        for c in coll:
            union |= c
        cons.append(_row_constraint(n, coll, delta.values[union]))


def _tight_cover(delta: Diversity, f: SubsetFunction, pairs_only: bool) -> bool:
    """Every non-empty subset appears in a constraint that holds with equality.

    All constraint coefficients are nonnegative, so this is equivalent to
    pointwise minimality.
    """
    v = delta.values
    need = set(range(1, 1 << delta.n))
    for coll in _p_delta_rows(delta.n, pairs_only):
        union = 0
        for c in coll:
            union |= c
        if sum(f[c] for c in coll) == v[union]:
            for c in coll:
                need.discard(c)
            if not need:
                return True
    return not need


def _in_T(delta: Diversity, f, pairs_only: bool, method: str) -> bool:
    f = as_subset_function(delta, f)
    member = in_P2 if pairs_only else in_P_delta
    if not member(delta, f):
        raise NotInSetError("function is not in the corresponding P-set", certificate=f)
    if method == "lp":
        g = _minimal_below(delta, f, pairs_only)
        return sum(g) == sum(f)
    if method == "tight":
        return _tight_cover(delta, f, pairs_only)
    raise InputError(f"unknown method {method!r}")


def in_T_delta(delta: Diversity, f, method: str = "lp") -> bool:
    """Minimality of ``f`` in P_delta, certified by an exact LP."""
    return _in_T(delta, f, False, method)


def in_T2(delta: Diversity, f, method: str = "lp") -> bool:
    return _in_T(delta, f, True, method)


def retract_to_T_delta(delta: Diversity, f) -> SubsetFunction:
    """A minimal element of P_delta below ``f``."""
    f = as_subset_function(delta, f)
    if not in_P_delta(delta, f):
        raise NotInSetError("function is not in P_delta", certificate=f)
    return _minimal_below(delta, f, pairs_only=False)


def g_map(delta: Diversity, x: str) -> SubsetFunction:
    """``A -> delta(A | {x})``."""
    bit = delta.mask([x])
    return tuple(delta.values[m | bit] for m in range(1 << delta.n))


def delta_T(delta: Diversity, F: Sequence, check: bool = True) -> Fraction:
    """Induced diversity on tight-span points.

    ``max over irredundant collections C of delta(union C) - sum_{A in C} min_{f in F} f(A)``
    (the empty collection contributes 0).
    """
    F = [as_subset_function(delta, f) for f in F]
    if not F:
        return Fraction(0)
    if check:
        for f in F:
            if not in_T_delta(delta, f, method="tight"):
                raise NotInSetError("delta_T needs tight-span points", certificate=f)
    low = [min(f[m] for f in F) for m in range(1 << delta.n)]
    best = Fraction(0)
    for coll in irredundant_collections(delta.n):
        union = 0
        for c in coll:
            union |= c
        val = delta.values[union] - sum((low[c] for c in coll), Fraction(0))
        if val > best:
            best = val
    return best


def to_d_delta_point(delta: Diversity, g: SubsetFunction) -> tuple[Fraction, ...]:
    """Reorder a mask-indexed function into the label order of :func:`d_delta`."""
    return tuple(g[m] for m in subset_order(delta.n))


def embed_into_TD(delta: Diversity, f) -> tuple[Fraction, ...]:
    """``f - delta`` as a point of the tight span of ``d_delta(delta)`` (d_delta label order)."""
    f = as_subset_function(delta, f)
    if not in_T_delta(delta, f):
        raise NotInSetError("embed_into_TD needs a member of T_delta", certificate=f)
    g = to_d_delta_point(delta, tuple(a - b for a, b in zip(f, delta.values)))
    if not in_Td(d_delta(delta), g):
        raise VerificationError("f - delta is not in the tight span of D_delta")
    return g


# --------------------------------------------------------------------------
# nice, arboreal and phylogenetic diversities


@dataclass(frozen=True)
class NiceResult:
    P_eq_P2: bool
    collection: tuple[str, ...] = ()  # violated collection (subset labels)
    witness: tuple[Fraction, ...] | None = None  # point of P2 outside P_delta, mask-indexed
    lhs: Fraction | None = None  # sum of witness over the collection
    rhs: Fraction | None = None  # delta of the union


def check_nice(delta: Diversity, cap: int = DEFAULT_CAP, method: str = "lp") -> NiceResult:
    """Decide whether P_delta equals its pairwise relaxation P2.

    ``method="lp"``: for every irredundant collection with at least three
    members, minimise its left-hand side over P2.  Only constraints among
    the collection's own members can bind (every other coordinate can be
    raised freely), so each check is a tiny LP.  A violation is then turned
    into a vertex of P2 outside P_delta by one LP over all of P2.

    ``method="vertices"``: enumerate the vertices of P2 by double
    description and test each against P_delta (small ground sets only).
    """
    _require_cap(delta, cap)
    n = delta.n
    v = delta.values
    if method == "vertices":
        for vert in sorted(enumerate_vertices(p_polyhedron(delta, pairs_only=True))):
            f = (Fraction(0),) + vert
            coll = _violated_row(delta, f, pairs_only=False)
            if coll is not None:
                return _nice_violation(delta, coll, f)
        return NiceResult(True)
    if method != "lp":
        raise InputError(f"unknown method {method!r}")
    for coll in irredundant_collections(n):
        if len(coll) < 3:
            continue
        k = len(coll)
        cons = []
        for a in range(k):
            row = [Fraction(0)] * k
            row[a] = Fraction(1)
            cons.append(Constraint(tuple(row), GE, v[coll[a]]))
            for b in range(a + 1, k):
                row = [Fraction(0)] * k
                row[a] = row[b] = Fraction(1)
                cons.append(Constraint(tuple(row), GE, v[coll[a] | coll[b]]))
        union = 0
        for c in coll:
            union |= c
        res = minimize(Polyhedron(k, tuple(cons)), [1] * k)
        if res.value < v[union]:
            nv = (1 << n) - 1
            obj = [Fraction(0)] * nv
            for c in coll:
                obj[c - 1] = Fraction(1)
            full = minimize(p_polyhedron(delta, pairs_only=True), obj)
            return _nice_violation(delta, coll, (Fraction(0),) + full.point)
    return NiceResult(True)


def _nice_violation(delta: Diversity, coll, f) -> NiceResult:
    union = 0
    for c in coll:
        union |= c
    return NiceResult(
        False,
        tuple(delta.subset_label(c) for c in coll),
        tuple(f),
        sum((f[c] for c in coll), Fraction(0)),
        delta.values[union],
    )


def is_arboreal(delta: Diversity, cap: int = DEFAULT_CAP) -> Certificate:
    """Extended four-point condition for ``d_delta(delta)`` (witness: subset labels)."""
    _require_cap(delta, cap)
    return check_extended_four_point(d_delta(delta))


def B_set(delta: Diversity, A: Iterable[str]) -> tuple[str, ...]:
    """Elements whose addition to ``A`` does not increase its diversity."""
    m = delta.mask(A)
    if m == 0:
        raise InputError("B_set needs a non-empty subset")
    return tuple(
        e for i, e in enumerate(delta.elements) if delta.values[m | 1 << i] <= delta.values[m]
    )


@dataclass(frozen=True)
class PhyloResult:
    verdict: bool
    witness: tuple[str, ...] | None = None  # first subset where delta and hull length differ
    delta_value: Fraction | None = None
    hull_value: Fraction | None = None
    tree: WeightedTree | None = None
    certificate: Certificate | None = None  # four-point violation of the pair metric


def pair_metric(delta: Diversity) -> DistanceSpace:
    """``(x, y) -> delta({x, y})``."""
    return DistanceSpace.from_function(delta.elements, lambda a, b: delta([a, b]))


def is_phylogenetic(delta: Diversity, cap: int = DEFAULT_CAP) -> PhyloResult:
    """Exact test: realise the pair metric as a tree and compare hull lengths.

    A phylogenetic diversity's pair metric is a tree metric whose realisation
    is unique on the hull of the points, so ``delta`` is phylogenetic iff
    every ``delta(A)`` equals the length of the subtree spanned by ``A`` in
    that realisation.
    """
    _require_cap(delta, cap)
    rho = pair_metric(delta)
    cert = check_four_point(rho)
    if not cert.ok:
        return PhyloResult(False, certificate=cert)
    T = additive_tree_reconstruction(rho)
    for m in subset_order(delta.n):
        names = delta.subset(m)
        h = hull_length(T, names)
        if h != delta.values[m]:
            return PhyloResult(False, names, delta.values[m], h, T)
    return PhyloResult(True, tree=T)


__all__ = [
    "Diversity",
    "NiceResult",
    "PhyloResult",
    "SubsetFunction",
    "DEFAULT_CAP",
    "DIVERSITY_VIOLATION",
    "subset_order",
    "irredundant_collections",
    "check_diversity_axioms",
    "table_from_mapping",
    "diameter_diversity",
    "l1_diversity",
    "phylogenetic_diversity",
    "d_delta",
    "as_subset_function",
    "in_P_delta",
    "in_P2",
    "in_T_delta",
    "in_T2",
    "p_polyhedron",
    "retract_to_T_delta",
    "g_map",
    "delta_T",
    "to_d_delta_point",
    "embed_into_TD",
    "check_nice",
    "is_arboreal",
    "B_set",
    "pair_metric",
    "is_phylogenetic",
]
