"""Greedy allocation: repeatedly place the (type, location) pair with the largest gain."""

from __future__ import annotations

import heapq
import logging
import time

import numpy as np

from walkopt.instance import Instance
from walkopt.report import SolveReport, Step
from walkopt.scoring import EvalState, WeightMap

log = logging.getLogger(__name__)


def greedy_solve(
    instance: Instance, weights: WeightMap | None = None, lazy: bool = False
) -> SolveReport:
    """Run the greedy heuristic until budgets or capacities are exhausted.

    Every available placement is made, including zero-gain ones. Ties go to
    the smallest type id, then the smallest candidate index in canonical
    order. ``lazy=True`` re-evaluates gains from a priority queue of stale
    upper bounds; stale bounds are only sound for a single plain type (with
    several types, adding one type can raise the gain of another), so any
    other instance falls back to full re-evaluation.
    """
    start = time.perf_counter()
    instance = instance.canonical()
    state = EvalState(instance, weights)
    if lazy and (instance.has_depth or len(instance.amenity_specs) > 1):
        log.info("lazy evaluation disabled: needs a single plain amenity type")
        lazy = False
    pick = _LazyPicker(state) if lazy else None

    steps: list[Step] = []
    while state.open_types() and state.remaining.max(initial=0) > 0:
        if pick is not None:
            a, j, gain = pick.next(len(steps))
        else:
            a, j, gain = _best_pair(state)
        state.commit(a, j)
        steps.append(Step(len(steps) + 1, a, instance.candidates[j], gain, state.objective))

    return SolveReport(
        allocation=state.allocation,
        objective=state.objective,
        method="greedy-lazy" if lazy else "greedy",
        iterations=steps,
        wall_time=time.perf_counter() - start,
    )


def _best_pair(state: EvalState) -> tuple[int, int, float]:
    open_cols = np.flatnonzero(state.remaining > 0)
    best = None
    for a in state.open_types():
        g = state.gains(a, open_cols)
        k = int(np.argmax(g))
        if best is None or g[k] > best[2]:
            best = (a, int(open_cols[k]), float(g[k]))
    return best


class _LazyPicker:
    """Stale-bound priority queue; sound only for a single plain type."""

    def __init__(self, state: EvalState):
        self.state = state
        self.heap: list[tuple[float, int, int, int]] = []
        for a in state.open_types():
            g = state.gains(a)
            for j in range(state.instance.n_candidates):
                if state.remaining[j] > 0:
                    self.heap.append((-float(g[j]), a, j, 0))
        heapq.heapify(self.heap)

    def next(self, iteration: int) -> tuple[int, int, float]:
        state = self.state
        open_types = set(state.open_types())
        while self.heap:
            neg, a, j, stamp = heapq.heappop(self.heap)
            if a not in open_types or state.remaining[j] <= 0:
                continue
            if stamp == iteration:
                # keep the pair available for duplicate placements later
                heapq.heappush(self.heap, (neg, a, j, -1))
                return a, j, -neg
            fresh = float(state.gains(a, [j])[0])
            heapq.heappush(self.heap, (-fresh, a, j, iteration))
        raise RuntimeError("no feasible placement left")
