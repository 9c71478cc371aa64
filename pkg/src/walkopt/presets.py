"""Built-in amenity configurations and the depth-of-choice counter-example."""

from __future__ import annotations

import numpy as np

from walkopt.instance import (
    DEFAULT_D_INFINITY,
    WALKSCORE_CURVE,
    AmenityTypeSpec,
    Allocation,
    Instance,
)

GROCERY, RESTAURANT, SCHOOL = 0, 1, 2

RESTAURANT_WEIGHTS = (0.75, 0.45, 0.25, 0.25, 0.225, 0.225, 0.225, 0.225, 0.2, 0.2)


def toronto3(budget: int = 0) -> list[AmenityTypeSpec]:
    """Grocery, restaurants (10 options) and schools with WalkScore raw weights."""
    return [
        AmenityTypeSpec(GROCERY, "grocery", (3.0,), budget),
        AmenityTypeSpec(RESTAURANT, "restaurant", RESTAURANT_WEIGHTS, budget),
        AmenityTypeSpec(SCHOOL, "school", (1.0,), budget),
    ]


PRESETS = {"toronto3": toronto3}


def preset_specs(name: str, budget: int = 0) -> list[AmenityTypeSpec]:
    try:
        return PRESETS[name](budget)
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


# One resident; every existing amenity 2000 m away; six candidates at 1800 m
# and one at 1 m. Node 0 is the resident, 1..7 the candidates, 8.. existing.
COUNTEREXAMPLE_NEAR = 7


def counterexample_instance(restaurant_budget: int = 7) -> Instance:
    specs = toronto3()
    specs[RESTAURANT] = AmenityTypeSpec(RESTAURANT, "restaurant", RESTAURANT_WEIGHTS, restaurant_budget)
    candidates = list(range(1, 8))
    existing = {GROCERY: (8,), RESTAURANT: tuple(range(9, 15)), SCHOOL: (15,)}
    row = [1800.0] * 6 + [1.0] + [2000.0] * 8
    return Instance(
        residents=(0,),
        candidates=candidates,
        capacities=[1] * 7,
        existing=existing,
        dist=np.array([row]),
        amenity_specs=specs,
        curve=WALKSCORE_CURVE,
        d_infinity=DEFAULT_D_INFINITY,
        name="depth-counterexample",
    )


def counterexample_sets() -> dict[str, Allocation]:
    """The nested solutions S and T, the extra element e, and their unions."""
    S = Allocation.from_pairs((RESTAURANT, j) for j in (1, 2, 3, 4))
    T = Allocation.from_pairs((RESTAURANT, j) for j in (1, 2, 3, 4, 5, 6))
    return {
        "S": S,
        "T": T,
        "S+e": S.add(RESTAURANT, COUNTEREXAMPLE_NEAR),
        "T+e": T.add(RESTAURANT, COUNTEREXAMPLE_NEAR),
    }
