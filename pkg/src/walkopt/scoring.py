"""Weighted walking distances, the piecewise-linear score, and marginal gains.

Distances are capped at ``d_infinity`` on use: an instance farther away than
the cutoff is worth exactly as much as a missing one. Depth-of-choice types
pair their ascending distances with their (non-increasing) option weights.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from walkopt.errors import InfeasibleAllocationError, InvalidWeightsError
from walkopt.instance import (
    Allocation,
    Instance,
    NodeId,
    PwlCurve,
    check_feasible,
    normalize_weights,
)

WeightMap = Mapping[int, Sequence[float]]


def pwl_score(distance, curve: PwlCurve):
    """Evaluate the score curve; scalars in, scalar out, arrays in, array out.

    Beyond the last breakpoint the last score (0) is returned.
    """
    x = np.asarray(distance, dtype=float)
    out = np.interp(x, curve.distances, curve.scores)
    if out.ndim == 0:
        return float(out)
    return out


def resolve_weights(instance: Instance, weights: WeightMap | None = None) -> dict[int, np.ndarray]:
    """Normalized weights of the instance, or a caller-supplied override.

    An override must give, for every type, exactly as many weights as the
    type has options; this is how externally rounded weights are injected.
    """
    if weights is None:
        resolved = normalize_weights(instance.amenity_specs)
    else:
        resolved = {int(a): tuple(w) for a, w in weights.items()}
        for s in instance.amenity_specs:
            if s.id not in resolved:
                raise InvalidWeightsError(f"weight override lacks type {s.id}")
            if len(resolved[s.id]) != s.options:
                raise InvalidWeightsError(
                    f"type {s.id}: {len(resolved[s.id])} weights for {s.options} options"
                )
    return {a: np.asarray(w, dtype=float) for a, w in resolved.items()}


@dataclass
class ScoreBreakdown:
    """Per-resident weighted distance and score plus the mean objective.

    ``assigned[a]`` is an ``(n_residents, options)`` array of the distances
    charged for each option of type ``a`` (one column for plain types).
    """

    weighted: np.ndarray
    scores: np.ndarray
    objective: float
    assigned: dict[int, np.ndarray]
    residents: tuple[NodeId, ...] = ()

    def to_dict(self) -> dict:
        return {
            "objective": self.objective,
            "residents": [
                {
                    "id": node,
                    "weighted_distance": float(self.weighted[i]),
                    "score": float(self.scores[i]),
                    "assigned": {str(a): self.assigned[a][i].tolist() for a in self.assigned},
                }
                for i, node in enumerate(self.residents)
            ],
        }


def _capped(instance: Instance) -> np.ndarray:
    return np.minimum(instance.dist, instance.d_infinity)


def _assigned_distances(instance: Instance, allocation: Allocation) -> dict[int, np.ndarray]:
    D = _capped(instance)
    n = instance.n_residents
    out = {}
    for spec in instance.amenity_specs:
        cols = list(instance.existing_columns.get(spec.id, ()))
        for (a, node), y in allocation.counts.items():
            if a == spec.id:
                cols.extend([instance.candidate_index[node]] * y)
        r = spec.options
        block = np.full((n, r), instance.d_infinity)
        if cols:
            near = np.sort(D[:, cols], axis=1, kind="stable")[:, :r]
            block[:, : near.shape[1]] = near
        avail = instance.available(spec.id)
        block[:, avail:] = instance.d_infinity
        out[spec.id] = block
    return out


def objective(
    instance: Instance, allocation: Allocation | None = None, weights: WeightMap | None = None
) -> tuple[float, ScoreBreakdown]:
    """Mean score over residents, computed from scratch."""
    allocation = allocation or Allocation()
    check_feasible(instance, allocation)
    w = resolve_weights(instance, weights)
    assigned = _assigned_distances(instance, allocation)
    weighted = np.zeros(instance.n_residents)
    for a, block in assigned.items():
        weighted = weighted + block @ w[a]
    scores = pwl_score(weighted, instance.curve)
    F = float(np.mean(scores)) if instance.n_residents else 0.0
    return F, ScoreBreakdown(weighted, np.asarray(scores), F, assigned, instance.residents)


def weighted_distance(
    instance: Instance, allocation: Allocation, resident: int, weights: WeightMap | None = None
) -> float:
    """Weighted walking distance of the resident at row ``resident``."""
    _, bd = objective(instance, allocation, weights)
    return float(bd.weighted[resident])


class EvalState:
    """Incremental evaluator used by the greedy solver.

    Holds, per resident, the nearest distance of each plain type and the
    sorted ``r`` nearest distances of each depth type, together with the
    remaining budgets and capacities. :meth:`gains` and :meth:`marginal_gain`
    are read-only; :meth:`commit` is the only mutation.
    """

    def __init__(self, instance: Instance, weights: WeightMap | None = None):
        self.instance = instance
        self.weights = resolve_weights(instance, weights)
        self._D = _capped(instance)
        self._Dm = self._D[:, : instance.n_candidates]
        self.allocation = Allocation()
        self.placed = {s.id: 0 for s in instance.amenity_specs}
        self.remaining = np.array(instance.capacities, dtype=int)
        self.nearest: dict[int, np.ndarray] = {}
        empty = Allocation()
        for a, block in _assigned_distances(instance, empty).items():
            if instance.spec(a).is_depth:
                self.nearest[a] = block.copy()
            else:
                self.nearest[a] = block[:, 0].copy()
        self._refresh()

    def _refresh(self):
        weighted = np.zeros(self.instance.n_residents)
        for a, near in self.nearest.items():
            if near.ndim == 2:
                weighted = weighted + near @ self.weights[a]
            else:
                weighted = weighted + self.weights[a][0] * near
        self.weighted = weighted
        self.scores = np.asarray(pwl_score(weighted, self.instance.curve))

    @property
    def objective(self) -> float:
        return float(np.mean(self.scores)) if self.instance.n_residents else 0.0

    def open_types(self) -> list[int]:
        return [s.id for s in self.instance.amenity_specs if self.placed[s.id] < s.budget]

    def _new_weighted(self, type_id: int, cols: np.ndarray) -> np.ndarray:
        """Weighted distances after adding one instance at each candidate in ``cols``."""
        v = self._Dm[:, cols]
        w = self.weights[type_id]
        near = self.nearest[type_id]
        if near.ndim == 1:
            return self.weighted[:, None] - w[0] * (near[:, None] - np.minimum(near[:, None], v))
        r = near.shape[1]
        part = near * w
        prefix = np.zeros((near.shape[0], r + 1))
        np.cumsum(part, axis=1, out=prefix[:, 1:])
        # shifted[q] = sum_{p=q+1}^{r-1} w_p * near_{p-1}
        shifted = np.zeros((near.shape[0], r + 1))
        if r > 1:
            u = w[1:] * near[:, :-1]
            tail = np.cumsum(u[:, ::-1], axis=1)[:, ::-1]
            shifted[:, : r - 1] = tail
        q = np.sum(near[:, :, None] <= v[:, None, :], axis=1)
        w_ext = np.append(w, 0.0)
        new_sum = (
            np.take_along_axis(prefix, q, axis=1)
            + w_ext[q] * np.where(q < r, v, 0.0)
            + np.take_along_axis(shifted, q, axis=1)
        )
        return self.weighted[:, None] - prefix[:, r][:, None] + new_sum

    def gains(self, type_id: int, cols: Sequence[int] | np.ndarray | None = None) -> np.ndarray:
        """Objective increase for one more instance of ``type_id`` at each column.

        Ignores budgets and capacities; callers mask infeasible columns.
        """
        if cols is None:
            cols = np.arange(self.instance.n_candidates)
        cols = np.asarray(cols, dtype=int)
        n = self.instance.n_residents
        if n == 0 or cols.size == 0:
            return np.zeros(cols.size)
        new_scores = pwl_score(self._new_weighted(type_id, cols), self.instance.curve)
        return np.sum(new_scores - self.scores[:, None], axis=0) / n

    def _check(self, type_id: int, col: int):
        spec = self.instance.spec(type_id)
        if self.placed[type_id] >= spec.budget:
            raise InfeasibleAllocationError(f"type {type_id} budget {spec.budget} exhausted")
        if not 0 <= col < self.instance.n_candidates:
            raise InfeasibleAllocationError(f"column {col} is not a candidate")
        if self.remaining[col] <= 0:
            raise InfeasibleAllocationError(
                f"candidate {self.instance.candidates[col]!r} has no capacity left"
            )

    def marginal_gain(self, type_id: int, col: int) -> float:
        self._check(type_id, col)
        return float(self.gains(type_id, [col])[0])

    def commit(self, type_id: int, col: int) -> None:
        self._check(type_id, col)
        v = self._Dm[:, col]
        near = self.nearest[type_id]
        if near.ndim == 1:
            np.minimum(near, v, out=near)
        else:
            merged = np.concatenate([near, v[:, None]], axis=1)
            self.nearest[type_id] = np.sort(merged, axis=1, kind="stable")[:, : near.shape[1]]
        self.placed[type_id] += 1
        self.remaining[col] -= 1
        self.allocation = self.allocation.add(type_id, self.instance.candidates[col])
        self._refresh()


def marginal_gain(instance: Instance, state: EvalState, e: tuple[int, NodeId]) -> float:
    """F(S + e) - F(S) for the allocation held by ``state``; ``state`` is unchanged."""
    type_id, node = e
    if node not in instance.candidate_index:
        raise InfeasibleAllocationError(f"node {node!r} is not a candidate location")
    return state.marginal_gain(type_id, instance.candidate_index[node])
