"""Exhaustive enumeration of feasible allocations for desk-scale instances."""

from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from walkopt.errors import EnumerationLimitError
from walkopt.instance import Allocation, Instance
from walkopt.report import SolveReport
from walkopt.scoring import WeightMap, objective, pwl_score, resolve_weights

DEFAULT_LIMIT = 10**7
TIE_TOL = 1e-9


def enumeration_estimate(instance: Instance) -> int:
    m = instance.n_candidates
    est = 1
    for s in instance.amenity_specs:
        if s.budget > 0:
            est *= math.comb(m + s.budget - 1, s.budget)
    return est


class _TypeTable:
    """All multisets of one type with their weighted-distance contribution."""

    def __init__(self, instance: Instance, type_id: int, w: np.ndarray):
        spec = instance.spec(type_id)
        m = instance.n_candidates
        D = np.minimum(instance.dist, instance.d_infinity)
        ex_cols = list(instance.existing_columns.get(type_id, ()))
        avail = instance.available(type_id)
        r = spec.options
        combos = [()]
        for size in range(1, spec.budget + 1):
            combos.extend(itertools.combinations_with_replacement(range(m), size))
        combos.sort()
        self.combos = combos
        n = instance.n_residents
        self.contrib = np.empty((len(combos), n))
        self.usage = np.zeros((len(combos), m), dtype=int)
        for t, combo in enumerate(combos):
            cols = ex_cols + list(combo)
            block = np.full((n, r), instance.d_infinity)
            if cols:
                near = np.sort(D[:, cols], axis=1)[:, :r]
                block[:, : near.shape[1]] = near
            block[:, avail:] = instance.d_infinity
            self.contrib[t] = block @ w
            for j in combo:
                self.usage[t, j] += 1


def _search(tables, caps, curve, first_range):
    """Best (F, key) over allocations whose first-type index lies in ``first_range``."""
    n_types = len(tables)
    best_F = -math.inf
    best_key = None
    count = 0

    def rec(depth, weighted, used, key):
        nonlocal best_F, best_key, count
        table = tables[depth]
        if depth == n_types - 1:
            ok = np.all(table.usage + used <= caps, axis=1)
            idx = np.flatnonzero(ok)
            if idx.size == 0:
                return
            count += idx.size
            scores = pwl_score(weighted[None, :] + table.contrib[idx], curve)
            F = scores.mean(axis=1) if scores.shape[1] else np.zeros(idx.size)
            top = F.max()
            k = int(np.flatnonzero(F >= top - TIE_TOL)[0])
            if F[k] > best_F + TIE_TOL:
                best_F, best_key = float(F[k]), key + (table.combos[idx[k]],)
            return
        rng = first_range if depth == 0 else range(len(table.combos))
        for t in rng:
            u = used + table.usage[t]
            if np.any(u > caps):
                continue
            rec(depth + 1, weighted + table.contrib[t], u, key + (table.combos[t],))

    n = tables[0].contrib.shape[1]
    rec(0, np.zeros(n), np.zeros(len(caps), dtype=int), ())
    return best_F, best_key, count


def _search_job(args):
    return _search(*args)


def exact_solve(
    instance: Instance,
    limit: int = DEFAULT_LIMIT,
    weights: WeightMap | None = None,
    workers: int = 1,
) -> SolveReport:
    """Maximize the objective by enumerating every feasible allocation.

    Among allocations within 1e-9 of the best objective, the lexicographically
    smallest (per-type sorted candidate indices, types by id) is returned.
    """
    start = time.perf_counter()
    instance = instance.canonical()
    estimate = enumeration_estimate(instance)
    if estimate > limit:
        raise EnumerationLimitError(estimate, limit)
    w = resolve_weights(instance, weights)

    if not instance.amenity_specs or instance.n_candidates == 0:
        F, _ = objective(instance, Allocation(), weights)
        return SolveReport(Allocation(), F, "exact", wall_time=time.perf_counter() - start,
                           extra={"estimate": estimate, "enumerated": 1})

    tables = [_TypeTable(instance, s.id, w[s.id]) for s in instance.amenity_specs]
    caps = np.array(instance.capacities, dtype=int)
    n_first = len(tables[0].combos)
    if workers > 1 and n_first > 1:
        chunks = [range(k, min(k + max(1, n_first // (4 * workers)), n_first))
                  for k in range(0, n_first, max(1, n_first // (4 * workers)))]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_search_job, [(tables, caps, instance.curve, c) for c in chunks]))
    else:
        parts = [_search(tables, caps, instance.curve, range(n_first))]

    best_F, best_key, total = -math.inf, None, 0
    for F, key, count in parts:  # partitions arrive in lexicographic order
        total += count
        if key is not None and F > best_F + TIE_TOL:
            best_F, best_key = F, key

    pairs = [
        (spec.id, instance.candidates[j])
        for spec, combo in zip(instance.amenity_specs, best_key)
        for j in combo
    ]
    allocation = Allocation.from_pairs(pairs)
    F, _ = objective(instance, allocation, weights)
    return SolveReport(
        allocation,
        F,
        "exact",
        wall_time=time.perf_counter() - start,
        extra={"estimate": estimate, "enumerated": total},
    )
