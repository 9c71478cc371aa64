"""Amenity allocation for walkability on pedestrian networks."""

from walkopt.exact import exact_solve
from walkopt.greedy import greedy_solve
from walkopt.instance import (
    WALKSCORE_CURVE,
    Allocation,
    AmenityTypeSpec,
    Instance,
    PwlCurve,
    available_choices,
    normalize_weights,
    read_instance,
    rounded_weights,
    validate_instance,
    write_instance,
)
from walkopt.report import SolveReport
from walkopt.scoring import EvalState, marginal_gain, objective, pwl_score, weighted_distance

__version__ = "0.1.0"

__all__ = [
    "WALKSCORE_CURVE",
    "Allocation",
    "AmenityTypeSpec",
    "EvalState",
    "Instance",
    "PwlCurve",
    "SolveReport",
    "available_choices",
    "exact_solve",
    "greedy_solve",
    "marginal_gain",
    "normalize_weights",
    "objective",
    "pwl_score",
    "read_instance",
    "rounded_weights",
    "validate_instance",
    "weighted_distance",
    "write_instance",
]
