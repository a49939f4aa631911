from __future__ import annotations

import pytest

from tspan import example_path
from tspan.io import parse_distance, parse_diversity


def load_distance(name: str):
    return parse_distance(example_path(name).read_text())


def load_diversity(name: str):
    return parse_diversity(example_path(name).read_text())


@pytest.fixture
def five_point():
    return load_distance("five_point.json")


@pytest.fixture
def octagon():
    return load_distance("octagon.json")


@pytest.fixture
def three_point():
    return load_distance("three_point.json")


@pytest.fixture
def strict_d():
    return load_distance("strict_inclusion.json")


@pytest.fixture
def strict_rho():
    return load_distance("strict_inclusion_rho.json")


@pytest.fixture
def four_four_five():
    return load_diversity("four_four_five.json")


@pytest.fixture
def size_minus_one():
    return load_diversity("size_minus_one.json")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
