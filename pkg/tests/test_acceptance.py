"""Acceptance criteria, one test each.

Every test records a single PASS/FAIL line; the lines are printed as they
happen (visible with ``-s``) and repeated in the terminal summary.  All
comparisons are exact (tolerance 0).
"""

from __future__ import annotations

import itertools
import random
import time
from contextlib import contextmanager
from fractions import Fraction

from conftest import load_distance, load_diversity
from oracles import is_fixed_point, pd_rows, polyhedron_vertices
from tspan.distance import (
    check_extended_four_point,
    check_four_point,
    check_metric,
    random_distance_space,
    random_metric,
)
from tspan.diversity import (
    check_nice,
    d_delta,
    delta_T,
    diameter_diversity,
    embed_into_TD,
    g_map,
    in_T_delta,
    is_arboreal,
    is_phylogenetic,
    l1_diversity,
    phylogenetic_diversity,
    retract_to_T_delta,
    subset_order,
)
from tspan.domination import DominatingMetric, verify_minimal
from tspan.exactnum import enumerate_vertices
from tspan.realtree import (
    build_subtree_representation,
    hull_length,
    random_subtree_distance,
    random_weighted_tree,
    verify_subtree_representation,
)
from tspan.tightspan import (
    contraction_iterates,
    contraction_retract,
    d_inf,
    in_Pd,
    in_Td,
    leq,
    pd_polyhedron,
    random_kappa_point,
    random_pd_point,
    retract_to_Td,
    verify_kappa_distance,
)

F = Fraction
RESULTS: list[str] = []


@contextmanager
def criterion(number: int, title: str):
    start = time.perf_counter()
    try:
        yield
    except BaseException as exc:
        line = f"[FAIL] criterion {number}: {title} ({type(exc).__name__}: {exc})"
        RESULTS.append(line)
        print(line)
        raise
    line = f"[PASS] criterion {number}: {title} ({time.perf_counter() - start:.2f}s)"
    RESULTS.append(line)
    print(line)


def test_criterion_1_five_point_regression():
    with criterion(1, "five-point table: ext-4pt ok, subtree representation exact, triangle violation at (x,z,y)"):
        start = time.perf_counter()
        d = load_distance("five_point.json")
        assert check_extended_four_point(d).ok
        rep = build_subtree_representation(d)
        pairs = list(itertools.combinations(d.labels, 2))
        assert len(pairs) == 10
        for a, b in pairs:
            assert rep.distance(a, b) == d(a, b)
        assert verify_subtree_representation(rep, d).ok
        cert = check_metric(d)
        assert cert.witness == ("x", "z", "y")
        assert cert.lhs == d("x", "y") == 9
        assert cert.rhs == d("x", "z") + d("z", "y") == 4
        assert time.perf_counter() - start < 1.0


def test_criterion_2_example_tight_spans():
    with criterion(2, "3-point families in T_d, off-family points not, octagon violation and 8 extreme points"):
        start = time.perf_counter()
        d = load_distance("three_point.json")
        dxy, dxz, dyz = d("x", "y"), d("x", "z"), d("y", "z")
        rng = random.Random(20)
        families = [
            # the first family's parameter runs over [0, d(x,z)]
            lambda t: (t, dxy - t, dxz - t),
            lambda t: (t, dxy - t, F(0)),
            lambda t: (dxy - t, t, dyz - t),
        ]
        ranges = [(F(0), dxz), (dxz, dxy - dyz), (F(0), dyz)]
        sampled = 0
        for k in range(20):
            fam = k % 3
            lo, hi = ranges[fam]
            t = lo + (hi - lo) * F(rng.randint(0, 12), 12)
            f = families[fam](t)
            assert in_Td(d, f), f
            assert is_fixed_point(d, f)
            # raising one coordinate stays in P_d but leaves T_d
            g = tuple(v + (1 if i == k % 3 else 0) for i, v in enumerate(f))
            assert in_Pd(d, g) and not in_Td(d, g)
            sampled += 1
        assert sampled == 20
        for t in (F(5, 4), F(2), F(3)):
            assert not in_Td(d, (t, dxy - t, dxz - t))
        for f in [(1, 2, 1), (0, 3, 2), (2, 2, 0), (0, 0, 0)]:
            assert not in_Td(d, f)

        octagon = load_distance("octagon.json")
        cert = check_extended_four_point(octagon)
        assert not cert.ok and (cert.lhs, cert.rhs) == (6, 3)
        verts = enumerate_vertices(pd_polyhedron(octagon))
        assert len(verts) == 8
        assert verts == polyhedron_vertices(*pd_rows(octagon))
        assert all(in_Td(octagon, v) for v in verts)
        assert time.perf_counter() - start < 5.0


def test_criterion_3_strict_inclusion():
    with criterion(3, "strict inclusion: rho minimal, h_w not tight, retraction gives [0,1,3,0]"):
        d = load_distance("strict_inclusion.json")
        rho = DominatingMetric(load_distance("strict_inclusion_rho.json"), d)
        assert verify_minimal(rho)
        h_w = rho.metric.row("w")
        assert h_w == (0, 1, 3, 2)
        assert not in_Td(d, h_w)
        assert retract_to_Td(d, h_w).values == (0, 1, 3, 0)
        assert contraction_retract(d, h_w).point == (0, 1, 3, 0)


def test_criterion_4_kappa_distances():
    with criterion(4, "kappa sets: 50 random spaces at exact distance d(x,y), 100 sampled pairs never closer"):
        rng = random.Random(404)
        sampled = 0
        for k in range(50):
            n = rng.randint(1, 6)
            d = random_distance_space(rng, n, 10, denominator=rng.choice([1, 2]))
            for x in d.labels:
                for y in d.labels:
                    assert verify_kappa_distance(d, x, y).distance == d(x, y)
            for _ in range(2):
                x, y = rng.choice(d.labels), rng.choice(d.labels)
                f = random_kappa_point(d, x, rng)
                g = random_kappa_point(d, y, rng)
                assert f.values[d.index(x)] == 0 and g.values[d.index(y)] == 0
                assert d_inf(f.values, g.values) >= d(x, y)
                sampled += 1
        assert sampled == 100


def test_criterion_5_subtree_roundtrip():
    with criterion(5, "200 random subtree distances: ext-4pt ok and representation verified"):
        start = time.perf_counter()
        rng = random.Random(505)
        for k in range(200):
            d, _ = random_subtree_distance(rng.getrandbits(32), rng.randint(1, 6), rng.randint(0, 20))
            assert check_extended_four_point(d).ok
            rep = build_subtree_representation(d)
            assert verify_subtree_representation(rep, d).ok
        assert time.perf_counter() - start < 60.0


def test_criterion_6_metric_equivalence():
    with criterion(6, "200 random metrics: four-point and extended four-point agree"):
        rng = random.Random(606)
        verdicts = set()
        for _ in range(200):
            d = random_metric(rng, rng.randint(1, 6))
            four = check_four_point(d).ok
            assert four == check_extended_four_point(d).ok
            verdicts.add(four)
        # the sample exercises both outcomes
        assert verdicts == {True, False}


def test_criterion_7_contraction():
    with criterion(7, "50 contraction runs: sandwich chain holds, snapped point tight and below f0, LP agrees"):
        rng = random.Random(707)
        for _ in range(50):
            d = random_distance_space(rng, rng.randint(1, 6), 10, denominator=rng.choice([1, 2, 3]))
            f0 = random_pd_point(d, rng)
            res = contraction_retract(d, f0)
            prev = None
            for k, (f, fs) in enumerate(contraction_iterates(d, f0)):
                assert leq(fs, f)
                if prev is not None:
                    assert leq(prev[1], fs) and leq(f, prev[0])
                prev = (f, fs)
                if k >= res.iterations + 5:
                    break
            assert res.exact
            assert in_Td(d, res.point) and leq(res.point, f0)
            lp = retract_to_Td(d, f0).values
            assert in_Td(d, lp) and leq(lp, f0)


def _random_l1(rng, n):
    pts = set()
    while len(pts) < n:
        pts.add((rng.randint(0, 6), rng.randint(0, 6)))
    return l1_diversity(sorted(pts))


def _random_diameter(rng, n):
    while True:
        rho = random_metric(rng, n)
        if all(rho.table[i][j] > 0 for i, j in rho.pairs()):
            return diameter_diversity(rho)


def test_criterion_8_diversities():
    with criterion(8, "diversity suite: 4/4/4/5 arboreal not phylogenetic, |A|-1 not nice, diameter/l1 nice, embedding"):
        delta = load_diversity("four_four_five.json")
        assert is_arboreal(delta).ok
        res = is_phylogenetic(delta)
        assert not res.verdict and res.witness == ("a", "b", "c")
        assert (res.delta_value, res.hull_value) == (5, 6)
        assert d_delta(delta)("{a,b}", "{c}") == 1

        minus = load_diversity("size_minus_one.json")
        assert not check_nice(minus).P_eq_P2
        assert not check_nice(minus, method="vertices").P_eq_P2
        assert not is_arboreal(minus).ok

        rng = random.Random(808)
        for _ in range(10):
            assert check_nice(_random_diameter(rng, rng.randint(2, 4))).P_eq_P2
            assert check_nice(_random_l1(rng, rng.randint(2, 4))).P_eq_P2

        for dv in (delta, minus, _random_l1(rng, 3), _random_diameter(rng, 3)):
            top = dv.values[dv.full]
            members = [g_map(dv, x) for x in dv.elements]
            for _ in range(4):
                f = (F(0),) + tuple(top + F(rng.randint(0, 6), 2) for _ in range(dv.full))
                members.append(retract_to_T_delta(dv, f))
            D = d_delta(dv)
            images = []
            for f in members:
                assert in_T_delta(dv, f, method="lp")
                img = embed_into_TD(dv, f)
                assert in_Td(D, img)
                images.append(img)
            for (f, fi), (g, gi) in itertools.product(zip(members, images), repeat=2):
                assert delta_T(dv, [f, g]) == d_inf(fi, gi)


def test_criterion_9_phylogenetic_roundtrip():
    with criterion(9, "50 random phylogenetic diversities recognised with matching hull lengths, all arboreal"):
        rng = random.Random(909)
        for _ in range(50):
            T = random_weighted_tree(rng, rng.randint(1, 12))
            n = rng.randint(1, min(5, len(T.vertices)))
            verts = rng.sample(T.vertices, n)
            delta = phylogenetic_diversity(T, dict(zip("abcde", verts)))
            res = is_phylogenetic(delta)
            assert res.verdict and res.tree is not None
            for m in subset_order(delta.n):
                assert hull_length(res.tree, delta.subset(m)) == delta.values[m]
            assert is_arboreal(delta).ok
