from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import polyhedron_vertices
from tspan.errors import InfeasibleError, InputError, ResourceLimitError, UnboundedError
from tspan.exactnum import (
    EQ,
    GE,
    LE,
    Constraint,
    LinearProgram,
    Polyhedron,
    constraint,
    enumerate_vertices,
    format_rational,
    lex_minimize,
    matrix_rank,
    minimize,
    solve_lp,
    to_rational,
    vertices_and_rays,
)


def poly(n, *rows):
    return Polyhedron(n, tuple(constraint(c, rel, b) for c, rel, b in rows))


class TestRationals:
    @pytest.mark.parametrize(
        "raw, expected",
        [(3, Fraction(3)), ("3/4", Fraction(3, 4)), (" -2/6 ", Fraction(-1, 3)), (Fraction(5, 2), Fraction(5, 2))],
    )
    def test_accepts_exact_values(self, raw, expected):
        assert to_rational(raw) == expected

    @pytest.mark.parametrize("raw", [0.5, "0.5", "1e3", True, "x", "1/0", None])
    def test_rejects_inexact_or_malformed(self, raw):
        with pytest.raises(InputError):
            to_rational(raw)

    def test_format(self):
        assert format_rational(Fraction(6, 4)) == "3/2"
        assert format_rational(Fraction(-4, 2)) == "-2"

    @given(st.fractions())
    def test_roundtrip(self, q):
        assert to_rational(format_rational(q)) == q


class TestSimplex:
    def test_single_bound(self):
        res = minimize(poly(1, ([1], GE, 3)), [1])
        assert res.optimal and res.value == 3 and res.point == (3,)

    def test_free_variables_and_equalities(self):
        # min x - y  s.t.  x + y = 4, x - y >= -2, y <= 5
        p = poly(2, ([1, 1], EQ, 4), ([1, -1], GE, -2), ([0, 1], LE, 5))
        res = minimize(p, [1, -1])
        assert res.value == -2
        assert p.contains(res.point)

    def test_infeasible(self):
        res = minimize(poly(1, ([1], GE, 2), ([1], LE, 1)), [1])
        assert res.status == "infeasible"

    def test_unbounded(self):
        res = minimize(poly(2, ([1, 1], GE, 0)), [1, 0])
        assert res.status == "unbounded"

    def test_maximize_by_negation(self):
        p = poly(2, ([1, 0], LE, 3), ([0, 1], LE, 2), ([1, 1], LE, 4), ([1, 0], GE, 0), ([0, 1], GE, 0))
        res = solve_lp(LinearProgram(p, (-1, -1)))
        assert res.value == -4

    def test_degenerate_cycling_example(self):
        # Beale's example cycles under the textbook rule without anti-cycling
        p = poly(
            4,
            ([Fraction(-1, 4), 60, Fraction(1, 25), -9], GE, 0),
            ([Fraction(-1, 2), 90, Fraction(1, 50), -3], GE, 0),
            ([0, 0, -1, 0], GE, -1),
            *[([1 if k == j else 0 for k in range(4)], GE, 0) for j in range(4)],
        )
        res = minimize(p, [Fraction(-3, 4), 150, Fraction(-1, 50), 6])
        assert res.value == Fraction(-1, 20)
        assert res.point == (Fraction(1, 25), 0, 1, 0)

    @pytest.mark.parametrize("rule", ["bland", "dantzig"])
    def test_pivot_rules_agree(self, monkeypatch, rule):
        monkeypatch.setenv("TSK_LP_PIVOT", rule)
        rng = random.Random(7)
        for _ in range(20):
            n = 3
            rows = [([rng.randint(-3, 3) for _ in range(n)], GE, rng.randint(-5, 2)) for _ in range(5)]
            rows += [([1 if k == j else 0 for k in range(n)], GE, 0) for j in range(n)]
            p = poly(n, *rows)
            obj = [rng.randint(0, 4) for _ in range(n)]
            res = minimize(p, obj)
            if res.optimal:
                verts = polyhedron_vertices([r[0] for r in rows], [r[2] for r in rows])
                assert res.value == min(sum(c * v for c, v in zip(obj, x)) for x in verts)


class TestLexMinimize:
    def test_priority_changes_the_answer(self):
        p = poly(2, ([1, 1], GE, 4), ([1, 0], GE, 0), ([0, 1], GE, 0))
        assert lex_minimize(p, [0, 1]) == (0, 4)
        assert lex_minimize(p, [1, 0]) == (4, 0)

    def test_infeasible_and_unbounded(self):
        with pytest.raises(InfeasibleError):
            lex_minimize(poly(1, ([1], GE, 2), ([1], LE, 1)), [0])
        with pytest.raises(UnboundedError):
            lex_minimize(poly(1, ([1], LE, 1)), [0])


class TestVertexEnumeration:
    def test_square(self):
        p = poly(2, ([1, 0], GE, 0), ([0, 1], GE, 0), ([1, 0], LE, 1), ([0, 1], LE, 1))
        assert enumerate_vertices(p) == {(0, 0), (0, 1), (1, 0), (1, 1)}

    def test_cone_has_rays(self):
        vr = vertices_and_rays(poly(2, ([1, 0], GE, 1), ([0, 1], GE, 2)))
        assert vr.vertices == {(1, 2)}
        assert set(vr.rays) == {(1, 0), (0, 1)}

    def test_empty(self):
        vr = vertices_and_rays(poly(1, ([1], GE, 2), ([1], LE, 1)))
        assert vr.empty

    def test_lineality(self):
        vr = vertices_and_rays(poly(2, ([1, 1], GE, 1)))
        assert vr.lineality_dim == 1

    def test_cap(self):
        rows = [([1 if k == j else 0 for k in range(6)], GE, 0) for j in range(6)]
        rows += [([1 if k == j else 0 for k in range(6)], LE, 1) for j in range(6)]
        with pytest.raises(ResourceLimitError):
            vertices_and_rays(poly(6, *rows), cap=10)

    @settings(max_examples=30, deadline=None)
    @given(st.randoms(use_true_random=False))
    def test_matches_brute_force(self, rng):
        n = 3
        rows = [[rng.randint(-3, 3) for _ in range(n)] for _ in range(4)]
        rhs = [rng.randint(-4, 1) for _ in rows]
        # a box keeps the polyhedron bounded
        for j in range(n):
            for sign, b in ((1, -3), (-1, -3)):
                rows.append([sign if k == j else 0 for k in range(n)])
                rhs.append(b)
        p = Polyhedron(n, tuple(Constraint(tuple(map(Fraction, r)), GE, Fraction(b)) for r, b in zip(rows, rhs)))
        assert enumerate_vertices(p) == polyhedron_vertices(rows, rhs)


def test_matrix_rank():
    assert matrix_rank([[1, 2], [2, 4]]) == 1
    assert matrix_rank([[1, 0, 1], [0, 1, 1], [1, 1, 2]]) == 2
    assert matrix_rank([]) == 0
