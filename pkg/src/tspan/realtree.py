"""Finite edge-weighted trees, tree realisations and subtree representations.

Trees have integer vertex ids and exact positive edge lengths.  Points in the
interior of an edge are materialised by subdividing the edge, so a closed
subtree is always stored as a connected vertex set: the subtree is the union
of those vertices and of every edge joining two of them.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .distance import (
    Certificate,
    DistanceSpace,
    OK_CERTIFICATE,
    check_extended_four_point,
    check_four_point,
    default_labels,
)
from .errors import InputError, PreconditionError, UnknownLabel, VerificationError
from .exactnum import format_rational, to_rational
from .tightspan import d_inf, geodesic_between, geodesic_point

log = logging.getLogger(__name__)

REPRESENTATION_MISMATCH = "representation-mismatch"


@dataclass(frozen=True)
class EdgePoint:
    """The point at distance ``offset`` from ``u`` on the edge ``{u, v}``."""

    u: int
    v: int
    offset: Fraction


class WeightedTree:
    """Adjacency-map tree with exact edge lengths and named anchor vertices."""

    def __init__(self):
        self._adj: dict[int, dict[int, Fraction]] = {}
        self.anchors: dict[str, int] = {}
        self._next = 0

    # construction ---------------------------------------------------------

    def add_vertex(self) -> int:
        v = self._next
        self._next += 1
        self._adj[v] = {}
        return v

    def add_edge(self, u: int, v: int, length) -> None:
        length = to_rational(length)
        if length <= 0:
            raise InputError(f"edge ({u}, {v}) must have positive length, got {length}")
        if u == v or u not in self._adj or v not in self._adj:
            raise InputError(f"bad edge ({u}, {v})")
        if v in self._adj[u]:
            raise InputError(f"duplicate edge ({u}, {v})")
        self._adj[u][v] = length
        self._adj[v][u] = length

    def remove_edge(self, u: int, v: int) -> None:
        del self._adj[u][v]
        del self._adj[v][u]

    def subdivide(self, u: int, v: int, offset) -> int:
        """Vertex at distance ``offset`` from ``u`` on edge ``{u, v}`` (created if interior)."""
        offset = to_rational(offset)
        length = self.length(u, v)
        if offset == 0:
            return u
        if offset == length:
            return v
        if not 0 < offset < length:
            raise InputError(f"offset {offset} outside edge ({u}, {v}) of length {length}")
        w = self.add_vertex()
        self.remove_edge(u, v)
        self.add_edge(u, w, offset)
        self.add_edge(w, v, length - offset)
        return w

    def copy(self) -> "WeightedTree":
        t = WeightedTree()
        t._adj = {v: dict(nb) for v, nb in self._adj.items()}
        t.anchors = dict(self.anchors)
        t._next = self._next
        return t

    # access ---------------------------------------------------------------

    @property
    def vertices(self) -> list[int]:
        return sorted(self._adj)

    @property
    def edges(self) -> list[tuple[int, int, Fraction]]:
        return sorted((u, v, l) for u, nb in self._adj.items() for v, l in nb.items() if u < v)

    def neighbors(self, v: int) -> dict[int, Fraction]:
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def length(self, u: int, v: int) -> Fraction:
        try:
            return self._adj[u][v]
        except KeyError:
            raise InputError(f"no edge ({u}, {v})") from None

    def resolve(self, p) -> int:
        """Vertex id for an anchor name or a vertex id."""
        if isinstance(p, str):
            try:
                return self.anchors[p]
            except KeyError:
                raise UnknownLabel(f"unknown anchor {p!r}") from None
        if isinstance(p, int) and p in self._adj:
            return p
        raise UnknownLabel(f"unknown tree point {p!r}")

    def distances_from(self, sources: Iterable[int]) -> dict[int, Fraction]:
        """Distance from the vertex set ``sources`` to every vertex."""
        dist: dict[int, Fraction] = {}
        stack = []
        for s in sources:
            dist[s] = Fraction(0)
            stack.append(s)
        if not stack:
            raise InputError("distances_from needs at least one source")
        # relax along tree edges; a vertex is revisited only if a closer source shows up
        while stack:
            u = stack.pop()
            du = dist[u]
            for v, l in self._adj[u].items():
                nd = du + l
                if v not in dist or nd < dist[v]:
                    dist[v] = nd
                    stack.append(v)
        return dist

    def path(self, u: int, v: int) -> list[int]:
        parent = {u: None}
        stack = [u]
        while stack:
            a = stack.pop()
            if a == v:
                break
            for b in self._adj[a]:
                if b not in parent:
                    parent[b] = a
                    stack.append(b)
        if v not in parent:
            raise InputError(f"vertices {u} and {v} are not connected")
        out = [v]
        while out[-1] != u:
            out.append(parent[out[-1]])
        return out[::-1]

    def is_tree(self) -> bool:
        if not self._adj:
            return False
        n_edges = sum(len(nb) for nb in self._adj.values()) // 2
        if n_edges != len(self._adj) - 1:
            return False
        return len(self.distances_from([next(iter(self._adj))])) == len(self._adj)

    def point_on_path(self, u: int, v: int, dist) -> int:
        """Vertex at distance ``dist`` from ``u`` on the path to ``v`` (subdividing if needed)."""
        dist = to_rational(dist)
        path = self.path(u, v)
        acc = Fraction(0)
        for a, b in zip(path, path[1:]):
            l = self._adj[a][b]
            if dist == acc:
                return a
            if dist < acc + l:
                return self.subdivide(a, b, dist - acc)
            acc += l
        if dist == acc:
            return path[-1]
        raise InputError(f"distance {dist} exceeds path length {acc}")


def tree_distance(T: WeightedTree, p, q) -> Fraction:
    """Exact path length between two points (vertex ids, anchor names or EdgePoints)."""
    if isinstance(p, EdgePoint) and isinstance(q, EdgePoint) and {p.u, p.v} == {q.u, q.v}:
        qo = q.offset if q.u == p.u else T.length(q.u, q.v) - q.offset
        return abs(p.offset - qo)
    if isinstance(p, EdgePoint) and isinstance(q, EdgePoint):
        lq = T.length(q.u, q.v)
        return min(q.offset + tree_distance(T, p, q.u), lq - q.offset + tree_distance(T, p, q.v))
    if isinstance(q, EdgePoint):
        p, q = q, p
    qv = T.resolve(q)
    if isinstance(p, EdgePoint):
        l = T.length(p.u, p.v)
        if not 0 <= p.offset <= l:
            raise InputError("edge point offset outside its edge")
        dist = T.distances_from([qv])
        return min(p.offset + dist[p.u], l - p.offset + dist[p.v])
    pv = T.resolve(p)
    return T.distances_from([pv])[qv]


def _check_subtree(T: WeightedTree, S) -> frozenset[int]:
    S = frozenset(S)
    if not S:
        raise InputError("subtree must be non-empty")
    for v in S:
        if v not in T._adj:
            raise InputError(f"subtree vertex {v} not in tree")
    start = next(iter(S))
    seen = {start}
    stack = [start]
    while stack:
        a = stack.pop()
        for b in T._adj[a]:
            if b in S and b not in seen:
                seen.add(b)
                stack.append(b)
    if seen != S:
        raise InputError("subtree is not connected")
    return S


def subtree_distance(T: WeightedTree, S1, S2) -> Fraction:
    """Minimum path length between two closed subtrees (0 when they meet)."""
    S1, S2 = _check_subtree(T, S1), _check_subtree(T, S2)
    if S1 & S2:
        return Fraction(0)
    dist = T.distances_from(S1)
    return min(dist[v] for v in S2)


def total_length(T: WeightedTree) -> Fraction:
    return sum((l for _, _, l in T.edges), Fraction(0))


def hull_length(T: WeightedTree, points: Iterable) -> Fraction:
    """Length of the union of the paths between the given points."""
    terminals = {T.resolve(p) for p in points}
    if len(terminals) <= 1:
        return Fraction(0)
    root = next(iter(sorted(terminals)))
    order, parent = [], {root: None}
    stack = [root]
    while stack:
        a = stack.pop()
        order.append(a)
        for b in T._adj[a]:
            if b not in parent:
                parent[b] = a
                stack.append(b)
    below = {v: (1 if v in terminals else 0) for v in order}
    total = Fraction(0)
    k = len(terminals)
    for v in reversed(order):
        p = parent[v]
        if p is None:
            continue
        if 0 < below[v] < k:
            total += T._adj[v][p]
        below[p] += below[v]
    return total


def hull_vertices(T: WeightedTree, points: Iterable) -> frozenset[int]:
    """Vertex set of the convex hull (smallest subtree) of the given points."""
    terminals = {T.resolve(p) for p in points}
    if not terminals:
        return frozenset()
    out = set(terminals)
    ts = sorted(terminals)
    for a in ts[1:]:
        out.update(T.path(ts[0], a))
    return frozenset(out)


# --------------------------------------------------------------------------
# additive (four-point) realisation


def additive_tree_reconstruction(rho: DistanceSpace) -> WeightedTree:
    """Edge-weighted tree whose anchor-to-anchor distances equal ``rho``.

    Labels are inserted in order.  A new label ``c`` hangs off the current
    tree at distance ``a = max_j (rho(c,i) + rho(i,j) - rho(c,j)) / 2`` from
    the first label ``i`` along the path towards the maximising ``j``, on a
    pendant edge of length ``rho(c,i) - a``.  The result is checked against
    ``rho``; a mismatch means ``rho`` is not a tree metric.
    """
    T = WeightedTree()
    labels = rho.labels
    first = labels[0]
    T.anchors[first] = T.add_vertex()
    placed = [first]
    for c in labels[1:]:
        twin = next((l for l in placed if rho(c, l) == 0), None)
        if twin is not None:
            T.anchors[c] = T.anchors[twin]
            placed.append(c)
            continue
        i = first
        best_a, best_j = None, None
        for j in placed:
            a = (rho(c, i) + rho(i, j) - rho(c, j)) / 2
            if best_a is None or a > best_a:
                best_a, best_j = a, j
        a = max(best_a, Fraction(0))
        h = rho(c, i) - a
        reach = rho(i, best_j)
        if h < 0 or a > reach:
            raise PreconditionError(
                f"{rho.labels} is not a tree metric (inserting {c})",
                certificate=check_four_point(rho),
            )
        at = T.point_on_path(T.anchors[i], T.anchors[best_j], a)
        if h == 0:
            T.anchors[c] = at
        else:
            leaf = T.add_vertex()
            T.add_edge(at, leaf, h)
            T.anchors[c] = leaf
        placed.append(c)
    for a_idx, a in enumerate(labels):
        dist = T.distances_from([T.anchors[a]])
        for b in labels[a_idx + 1 :]:
            if dist[T.anchors[b]] != rho(a, b):
                raise PreconditionError(
                    f"not a tree metric: realised distance for ({a}, {b}) is "
                    f"{dist[T.anchors[b]]}, expected {rho(a, b)}",
                    certificate=check_four_point(rho),
                )
    return T


# --------------------------------------------------------------------------
# subtree representations


@dataclass
class SubtreeRepresentation:
    """A tree plus one closed subtree (connected vertex set) per label.

    ``points`` optionally records, for each vertex, the tight-span point it
    stands for (present on representations built from a distance space).
    """

    tree: WeightedTree
    subtrees: dict[str, frozenset[int]]
    points: dict[int, tuple] = field(default_factory=dict)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self.subtrees)

    def distance(self, x: str, y: str) -> Fraction:
        return subtree_distance(self.tree, self.subtrees[x], self.subtrees[y])

    def induced_distance(self, labels: Sequence[str] | None = None) -> DistanceSpace:
        labels = tuple(self.subtrees) if labels is None else tuple(labels)
        dists = {x: self.tree.distances_from(_check_subtree(self.tree, self.subtrees[x])) for x in labels}
        return DistanceSpace.from_function(
            labels, lambda a, b: min(dists[a][v] for v in self.subtrees[b])
        )


def verify_subtree_representation(rep: SubtreeRepresentation, d: DistanceSpace) -> Certificate:
    """ok iff every pairwise subtree distance equals the corresponding entry of ``d``."""
    if set(rep.subtrees) != set(d.labels):
        raise InputError("representation labels do not match the distance space")
    if not rep.tree.is_tree():
        return Certificate(REPRESENTATION_MISMATCH, (), note="underlying graph is not a tree")
    dists = {}
    for x in d.labels:
        try:
            dists[x] = rep.tree.distances_from(_check_subtree(rep.tree, rep.subtrees[x]))
        except InputError as exc:
            return Certificate(REPRESENTATION_MISMATCH, (x,), note=str(exc))
    for i, j in d.pairs():
        x, y = d.labels[i], d.labels[j]
        got = min(dists[x][v] for v in rep.subtrees[y])
        if got != d.table[i][j]:
            return Certificate(REPRESENTATION_MISMATCH, (x, y), got, d.table[i][j])
    return OK_CERTIFICATE


def _locate(T: WeightedTree, v: int, anchors: Sequence[int]):
    """Two anchors ``a, b`` with ``v`` on the path between them, and ``dist(a, v)``."""
    dist_v = T.distances_from([v])
    for ia, a in enumerate(anchors):
        da = T.distances_from([a])
        for b in anchors[ia + 1 :]:
            if dist_v[a] + dist_v[b] == da[b]:
                return a, b, dist_v[a]
    raise VerificationError(f"vertex {v} is not between two gate points")


def build_subtree_representation(
    d: DistanceSpace, check: bool = True, rule: str = "kappa"
) -> SubtreeRepresentation:
    """Subtree representation of ``d`` built inside its tight span.

    The gate points ``f_(x,y,0)`` (one per ordered pair at positive distance)
    are placed in a tree realising their sup-distances.  Every tree vertex
    is then identified with a tight-span point, edges are cut where some
    kappa(x) starts or stops, and the subtree for ``x`` is the set of
    vertices vanishing at ``x``.  ``rule="hull"`` uses the convex hull of
    the gates of ``x`` instead, which can fail to represent ``d``.  The
    result is always verified.
    """
    if rule not in ("kappa", "hull"):
        raise InputError(f"unknown subtree rule {rule!r}")
    if check:
        cert = check_extended_four_point(d)
        if not cert.ok:
            raise PreconditionError(
                "distance space violates the extended four-point condition", certificate=cert
            )
    if d.is_null():
        T = WeightedTree()
        v = T.add_vertex()
        zero = tuple(Fraction(0) for _ in d.labels)
        return SubtreeRepresentation(T, {x: frozenset([v]) for x in d.labels}, {v: zero})

    gates: dict[tuple, int] = {}
    gate_of: dict[str, list[int]] = {x: [] for x in d.labels}
    for i, x in enumerate(d.labels):
        for j, y in enumerate(d.labels):
            if d.table[i][j] > 0:
                g = geodesic_point(d, x, y, 0, check=False).values
                k = gates.setdefault(g, len(gates))
                gate_of[x].append(k)
    gate_list = list(gates)
    names = [f"g{k}" for k in range(len(gate_list))]
    gd = DistanceSpace.from_function(
        names, lambda a, b: d_inf(gate_list[int(a[1:])], gate_list[int(b[1:])])
    )
    try:
        T = additive_tree_reconstruction(gd)
    except PreconditionError as exc:
        raise VerificationError(f"gate points do not span a tree: {exc}") from exc

    points: dict[int, tuple] = {}
    for k, name in enumerate(names):
        points[T.anchors[name]] = gate_list[k]
    anchor_vertices = sorted(set(T.anchors.values()))
    for v in T.vertices:
        if v not in points:
            a, b, s = _locate(T, v, anchor_vertices)
            points[v] = geodesic_between(d, points[a], points[b], s).values

    # cut edges where some kappa(x) begins or ends in the interior
    for u, v, L in list(T.edges):
        Fu, Fv = points[u], points[v]
        cuts = set()
        for a, b in zip(Fu, Fv):
            if a + b <= L:
                for s in (a, L - b):
                    if 0 < s < L:
                        cuts.add(s)
        prev, prev_off = u, Fraction(0)
        for s in sorted(cuts):
            w = T.subdivide(prev, v, s - prev_off)
            points[w] = geodesic_between(d, Fu, Fv, s).values
            prev, prev_off = w, s

    subtrees: dict[str, frozenset[int]] = {}
    for i, x in enumerate(d.labels):
        zero = frozenset(v for v, f in points.items() if f[i] == 0)
        hull = hull_vertices(T, [T.anchors[names[k]] for k in gate_of[x]]) if gate_of[x] else frozenset(T.vertices)
        if hull != zero:
            log.info(
                "gate hull of %s differs from its kappa set (%d vs %d vertices)", x, len(hull), len(zero)
            )
        subtrees[x] = zero if rule == "kappa" else hull
    rep = SubtreeRepresentation(T, subtrees, points)
    cert = verify_subtree_representation(rep, d)
    if not cert.ok:
        raise VerificationError(
            f"constructed representation fails at {cert.witness}: {cert.lhs} vs {cert.rhs}"
        )
    return rep


# --------------------------------------------------------------------------
# random instances


def random_weighted_tree(
    rng: random.Random, n_edges: int, max_len: int = 5, denominators: Sequence[int] = (1, 2)
) -> WeightedTree:
    T = WeightedTree()
    T.add_vertex()
    for _ in range(n_edges):
        parent = rng.choice(T.vertices)
        v = T.add_vertex()
        den = rng.choice(denominators)
        T.add_edge(parent, v, Fraction(rng.randint(1, max_len * den), den))
    return T


def random_tree_metric(rng: random.Random, n: int, extra_edges: int = 4) -> DistanceSpace:
    """Distances between ``n`` random vertices of a random tree."""
    T = random_weighted_tree(rng, max(n - 1, 0) + extra_edges)
    verts = T.vertices
    chosen = [rng.choice(verts) for _ in range(n)]
    labels = default_labels(n)
    dist = {v: T.distances_from([v]) for v in set(chosen)}
    return DistanceSpace.from_function(
        labels, lambda a, b: dist[chosen[labels.index(a)]][chosen[labels.index(b)]]
    )


def _grow_subtree(rng: random.Random, T: WeightedTree, subtrees: list[set[int]]) -> set[int]:
    start = rng.choice(T.vertices)
    S = {start}
    for _ in range(rng.randint(0, 3)):
        frontier = sorted({b for a in S for b in T.neighbors(a) if b not in S})
        if not frontier:
            break
        S.add(rng.choice(frontier))
    if rng.random() < 0.5:
        # stretch part of the way along a boundary edge
        boundary = sorted((a, b) for a in S for b in T.neighbors(a) if b not in S)
        if boundary:
            a, b = rng.choice(boundary)
            L = T.length(a, b)
            off = L * Fraction(rng.randint(1, 3), 4)
            w = T.subdivide(a, b, off)
            for other in subtrees:
                if a in other and b in other:
                    other.add(w)
            S.add(w)
    return S


def random_subtree_distance(
    seed, n_points: int, tree_size: int
) -> tuple[DistanceSpace, SubtreeRepresentation]:
    """Random tree with ``tree_size`` edges and ``n_points`` random subtrees.

    Returns the induced distance together with the generating representation.
    Subtrees may end part-way along an edge (the edge is subdivided there).
    """
    if n_points < 1 or tree_size < 0:
        raise InputError("n_points must be positive and tree_size nonnegative")
    rng = random.Random(seed)
    T = random_weighted_tree(rng, tree_size)
    subtrees: list[set[int]] = []
    for _ in range(n_points):
        if subtrees and rng.random() < 0.1:
            subtrees.append(set(rng.choice(subtrees)))
            continue
        subtrees.append(_grow_subtree(rng, T, subtrees))
    labels = default_labels(n_points)
    rep = SubtreeRepresentation(T, {l: frozenset(S) for l, S in zip(labels, subtrees)})
    return rep.induced_distance(labels), rep


# --------------------------------------------------------------------------
# serialisation


def representation_to_json(rep: SubtreeRepresentation) -> dict:
    T = rep.tree
    out = {
        "vertices": T.vertices,
        "edges": [[u, v, format_rational(l)] for u, v, l in T.edges],
        "anchors": {k: v for k, v in sorted(T.anchors.items())},
        "subtrees": {
            x: {"vertices": sorted(S), "segments": []} for x, S in rep.subtrees.items()
        },
    }
    if rep.points:
        out["points"] = {
            str(v): [format_rational(q) for q in f] for v, f in sorted(rep.points.items())
        }
    return out


def representation_from_json(data: Mapping) -> SubtreeRepresentation:
    """Inverse of :func:`representation_to_json`.

    Partial segments ``{"edge": [u, v], "from_offset": a, "to_offset": b}``
    (offsets measured from ``u``) are materialised by subdividing the edge.
    """
    try:
        T = WeightedTree()
        ids = [int(v) for v in data["vertices"]]
        if len(set(ids)) != len(ids):
            raise InputError("duplicate vertex ids")
        for v in ids:
            T._adj[v] = {}
        T._next = max(ids, default=-1) + 1
        for e in data["edges"]:
            u, v, l = e
            T.add_edge(int(u), int(v), to_rational(l))
        T.anchors = {str(k): int(v) for k, v in data.get("anchors", {}).items()}
        subtrees: dict[str, frozenset[int]] = {}
        pending = []
        for x, entry in data["subtrees"].items():
            verts = set(int(v) for v in entry.get("vertices", []))
            subtrees[x] = verts
            for seg in entry.get("segments", []):
                pending.append((x, seg))
        for x, seg in pending:
            u, v = (int(a) for a in seg["edge"])
            lo, hi = to_rational(seg["from_offset"]), to_rational(seg["to_offset"])
            if not 0 <= lo <= hi <= T.length(u, v):
                raise InputError(f"segment offsets out of range on edge ({u}, {v})")
            a = T.subdivide(u, v, lo)
            b = T.subdivide(a, v, hi - lo) if a != v else v
            for S in subtrees.values():
                if u in S and v in S:
                    S.update({a, b})
            subtrees[x].update({a, b})
        points = {}
        for k, vals in data.get("points", {}).items():
            points[int(k)] = tuple(to_rational(q) for q in vals)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed representation JSON: {exc}") from exc
    if not T.is_tree():
        raise InputError("edges do not form a tree")
    rep = SubtreeRepresentation(T, {x: frozenset(S) for x, S in subtrees.items()}, points)
    for x, S in rep.subtrees.items():
        _check_subtree(T, S)
    return rep


def to_newick(rep: SubtreeRepresentation) -> str:
    """Extended Newick text; each node is named by the labels whose subtree holds it.

    Branch lengths are written as exact rationals (``p/q``).
    """
    T = rep.tree
    members: dict[int, list[str]] = {v: [] for v in T.vertices}
    for x, S in rep.subtrees.items():
        for v in S:
            members[v].append(x)

    def name(v):
        return "'" + ",".join(members[v]) + "'" if members[v] else ""

    root = T.vertices[0]

    def render(v, parent):
        kids = [c for c in sorted(T.neighbors(v)) if c != parent]
        body = ""
        if kids:
            body = "(" + ",".join(
                render(c, v) + ":" + format_rational(T.length(v, c)) for c in kids
            ) + ")"
        return body + name(v)

    return render(root, None) + ";"


__all__ = [
    "EdgePoint",
    "WeightedTree",
    "SubtreeRepresentation",
    "REPRESENTATION_MISMATCH",
    "tree_distance",
    "subtree_distance",
    "total_length",
    "hull_length",
    "hull_vertices",
    "additive_tree_reconstruction",
    "build_subtree_representation",
    "verify_subtree_representation",
    "random_weighted_tree",
    "random_tree_metric",
    "random_subtree_distance",
    "representation_to_json",
    "representation_from_json",
    "to_newick",
]
