"""Exact tight spans of finite distance spaces, subtree representations and diversities."""

from __future__ import annotations

from importlib import resources

from .distance import (
    Certificate,
    DistanceSpace,
    check_extended_four_point,
    check_four_point,
    check_metric,
)
from .diversity import Diversity, check_nice, d_delta, is_arboreal, is_phylogenetic
from .domination import DominatingMetric, embed_minimal_metric, minimal_dominating_metric, pin_pair
from .errors import (
    InfeasibleError,
    InputError,
    NonUniqueError,
    NotInSetError,
    PreconditionError,
    ResourceLimitError,
    TspanError,
    UnboundedError,
    VerificationError,
)
from .realtree import SubtreeRepresentation, WeightedTree, build_subtree_representation
from .tightspan import contraction_retract, d_inf, geodesic_point, in_Pd, in_Td, retract_to_Td

__version__ = "0.1.0"


def example_path(name: str):
    """Path of a bundled example file, e.g. ``example_path("five_point.json")``."""
    return resources.files(__name__).joinpath("data", name)


__all__ = [
    "Certificate",
    "DistanceSpace",
    "Diversity",
    "DominatingMetric",
    "SubtreeRepresentation",
    "WeightedTree",
    "TspanError",
    "InputError",
    "InfeasibleError",
    "UnboundedError",
    "ResourceLimitError",
    "PreconditionError",
    "NonUniqueError",
    "NotInSetError",
    "VerificationError",
    "check_metric",
    "check_four_point",
    "check_extended_four_point",
    "in_Pd",
    "in_Td",
    "d_inf",
    "retract_to_Td",
    "contraction_retract",
    "geodesic_point",
    "pin_pair",
    "minimal_dominating_metric",
    "embed_minimal_metric",
    "build_subtree_representation",
    "d_delta",
    "check_nice",
    "is_arboreal",
    "is_phylogenetic",
    "example_path",
]
