from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import ext_four_point_brute, four_point_brute
from tspan.distance import (
    EXT_FOURPOINT_VIOLATION,
    METRIC_VIOLATION,
    DistanceSpace,
    check_extended_four_point,
    check_four_point,
    check_metric,
    ext_four_point_terms,
    metric_closure,
    random_distance_space,
    random_metric,
    recheck,
    restrict,
)
from tspan.errors import InputError, UnknownLabel


@st.composite
def distance_spaces(draw, max_n=6, max_value=8):
    n = draw(st.integers(1, max_n))
    seed = draw(st.integers(0, 2**32))
    return random_distance_space(random.Random(seed), n, max_value)


class TestConstruction:
    def test_rejects_asymmetric(self):
        with pytest.raises(InputError):
            DistanceSpace.from_matrix(["a", "b"], [[0, 1], [2, 0]])

    def test_rejects_nonzero_diagonal(self):
        with pytest.raises(InputError):
            DistanceSpace.from_matrix(["a", "b"], [[1, 1], [1, 0]])

    def test_rejects_negative(self):
        with pytest.raises(InputError):
            DistanceSpace.from_matrix(["a", "b"], [[0, -1], [-1, 0]])

    def test_rejects_duplicate_labels(self):
        with pytest.raises(InputError):
            DistanceSpace.from_matrix(["a", "a"], [[0, 1], [1, 0]])

    def test_rejects_floats(self):
        with pytest.raises(InputError):
            DistanceSpace.from_matrix(["a", "b"], [[0, 0.5], [0.5, 0]])

    def test_from_pairs_defaults_to_zero(self):
        d = DistanceSpace.from_pairs(["x", "y", "z"], {("x", "y"): 4})
        assert d("x", "y") == d("y", "x") == 4
        assert d("x", "z") == 0

    def test_unknown_label(self, five_point):
        with pytest.raises(UnknownLabel):
            five_point("x", "q")

    def test_five_point_values(self, five_point):
        assert five_point("x", "y") == 9
        assert five_point("v", "z") == 0
        assert five_point.diameter() == 10

    def test_restrict(self, five_point):
        r = restrict(five_point, ["x", "y", "z"])
        assert r.labels == ("x", "y", "z")
        assert [r("x", "y"), r("x", "z"), r("y", "z")] == [9, 1, 3]


class TestMetric:
    def test_five_point_violation(self, five_point):
        cert = check_metric(five_point)
        assert cert.kind == METRIC_VIOLATION
        assert cert.witness == ("x", "z", "y")
        assert (cert.lhs, cert.rhs) == (9, 4)
        assert recheck(five_point, cert)

    def test_closure_is_metric(self, five_point):
        assert check_metric(metric_closure(five_point)).ok


class TestFourPoint:
    def test_five_point_is_ext4pt(self, five_point):
        assert check_extended_four_point(five_point).ok

    def test_octagon_violation(self, octagon):
        cert = check_extended_four_point(octagon)
        assert cert.kind == EXT_FOURPOINT_VIOLATION
        assert set(cert.witness) == {"w", "x", "y", "z"}
        assert (cert.lhs, cert.rhs) == (6, 3)
        assert recheck(octagon, cert)

    def test_octagon_first_witness_in_scan_order(self, octagon):
        # first violating (w, x, y, z) in label order; the pairs summed on the
        # left are (x, y) = (x, z) and (z, w) = (y, w), the two long diagonals
        cert = check_extended_four_point(octagon)
        assert cert.witness == ("w", "x", "z", "y")
        assert ext_four_point_terms(octagon, *cert.witness) == (6, 3)

    def test_every_three_point_space_is_ext4pt(self):
        rng = random.Random(3)
        for _ in range(100):
            assert check_extended_four_point(random_distance_space(rng, 3, 20)).ok

    @settings(max_examples=60, deadline=None)
    @given(distance_spaces())
    def test_ext4pt_matches_brute_force(self, d):
        cert = check_extended_four_point(d)
        assert cert.ok == ext_four_point_brute(d)
        if not cert.ok:
            assert recheck(d, cert)

    @settings(max_examples=60, deadline=None)
    @given(distance_spaces())
    def test_4pt_matches_brute_force(self, d):
        cert = check_four_point(d)
        assert cert.ok == four_point_brute(d)
        if not cert.ok:
            assert recheck(d, cert)

    @settings(max_examples=80, deadline=None)
    @given(st.integers(0, 2**32), st.integers(1, 6))
    def test_metrics_agree(self, seed, n):
        d = random_metric(random.Random(seed), n)
        assert check_four_point(d).ok == check_extended_four_point(d).ok

    def test_large_values_use_exact_fallback(self):
        big = 2**70
        d = DistanceSpace.from_matrix(
            ["a", "b", "c", "e"],
            [[0, big, big, 1], [big, 0, 1, big], [big, 1, 0, big], [1, big, big, 0]],
        )
        assert check_four_point(d).ok == four_point_brute(d)
        assert check_extended_four_point(d).ok == ext_four_point_brute(d)

    def test_rational_entries(self):
        d = DistanceSpace.from_matrix(["a", "b", "c"], [[0, "1/3", "1/2"], ["1/3", 0, "1/7"], ["1/2", "1/7", 0]])
        cert = check_metric(d)
        assert not cert.ok and cert.lhs == Fraction(1, 2)


def test_recheck_rejects_tampered_certificate(octagon):
    cert = check_extended_four_point(octagon)
    forged = type(cert)(cert.kind, cert.witness, cert.lhs + 1, cert.rhs)
    assert not recheck(octagon, forged)
