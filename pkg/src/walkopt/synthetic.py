"""Random desk-scale instances with Euclidean distances on a square."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from walkopt.instance import WALKSCORE_CURVE, AmenityTypeSpec, Instance


def random_instance(
    rng: np.random.Generator,
    n_residents: int = 5,
    n_candidates: int = 4,
    options: Sequence[int] = (1,),
    budgets: Sequence[int] | int = 1,
    max_capacity: int = 2,
    max_existing: int = 2,
    side: float = 3000.0,
) -> Instance:
    """Residents, candidates and existing amenities placed uniformly on a square.

    ``options[t]`` is the number of scored options of type ``t`` (1 = plain).
    Depth weights are random and non-increasing. Capacities are drawn from
    ``0..max_capacity``.
    """
    if isinstance(budgets, int):
        budgets = [budgets] * len(options)
    specs = []
    for t, r in enumerate(options):
        raw = np.sort(rng.uniform(0.1, 3.0, size=r))[::-1]
        specs.append(AmenityTypeSpec(t, f"type{t}", tuple(float(x) for x in raw), int(budgets[t])))
    n_existing = [int(rng.integers(0, max_existing + 1)) for _ in options]

    res_xy = rng.uniform(0, side, size=(n_residents, 2))
    cand_xy = rng.uniform(0, side, size=(n_candidates, 2))
    ex_xy = [rng.uniform(0, side, size=(k, 2)) for k in n_existing]
    cols = np.vstack([cand_xy] + ex_xy) if (n_candidates or sum(n_existing)) else np.zeros((0, 2))
    dist = np.linalg.norm(res_xy[:, None, :] - cols[None, :, :], axis=2) if len(cols) else np.zeros((n_residents, 0))

    node = n_residents + n_candidates
    existing = {}
    for t, k in enumerate(n_existing):
        existing[t] = tuple(range(node, node + k))
        node += k
    return Instance(
        residents=range(n_residents),
        candidates=range(n_residents, n_residents + n_candidates),
        capacities=[int(c) for c in rng.integers(0, max_capacity + 1, size=n_candidates)],
        existing=existing,
        dist=dist.reshape(n_residents, len(cols)),
        amenity_specs=specs,
        curve=WALKSCORE_CURVE,
        name="random",
    )
