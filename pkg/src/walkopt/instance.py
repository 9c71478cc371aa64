"""Problem data model: amenity types, the score curve, instances and allocations.

Column layout of the distance matrix is fixed: candidate locations first, then
existing amenities grouped by type id ascending. Within each group nodes are
sorted by id in the canonical form (see :meth:`Instance.canonical`).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from types import MappingProxyType
from typing import Any, Iterable, Mapping, Sequence, Union

import numpy as np

from walkopt.errors import (
    CurveError,
    InfeasibleAllocationError,
    InstanceFormatError,
    InvalidWeightsError,
)

NodeId = Union[int, str]

DEFAULT_D_INFINITY = 2400.0


def node_sort_key(node: NodeId) -> tuple:
    # ints before strings, ints numerically
    if isinstance(node, (int, np.integer)) and not isinstance(node, bool):
        return (0, int(node), "")
    return (1, 0, str(node))


@dataclass(frozen=True)
class AmenityTypeSpec:
    """One amenity type.

    A single raw weight makes a plain type (only the nearest instance counts);
    several raw weights make a depth-of-choice type whose ``r`` nearest
    instances are weighted in order.
    """

    id: int
    name: str
    raw_weights: tuple[float, ...]
    budget: int = 0

    def __post_init__(self):
        object.__setattr__(self, "raw_weights", tuple(float(w) for w in self.raw_weights))

    @property
    def options(self) -> int:
        return len(self.raw_weights)

    @property
    def is_depth(self) -> bool:
        return len(self.raw_weights) > 1

    def truncated(self) -> "AmenityTypeSpec":
        """Plain copy keeping only the nearest-option weight."""
        return replace(self, raw_weights=self.raw_weights[:1])


@dataclass(frozen=True)
class PwlCurve:
    """Non-increasing piecewise-linear score curve given by (meters, points) breakpoints."""

    breakpoints: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(d), float(s)) for d, s in self.breakpoints)
        object.__setattr__(self, "breakpoints", pts)
        if len(pts) < 2:
            raise CurveError("curve needs at least two breakpoints")
        dists = [d for d, _ in pts]
        scores = [s for _, s in pts]
        if dists[0] != 0.0:
            raise CurveError("first breakpoint distance must be 0")
        if any(b <= a for a, b in zip(dists, dists[1:])):
            raise CurveError("breakpoint distances must be strictly increasing")
        if any(b > a for a, b in zip(scores, scores[1:])):
            raise CurveError("breakpoint scores must be non-increasing")
        if any(not 0.0 <= s <= 100.0 for s in scores):
            raise CurveError("scores must lie in [0, 100]")
        if scores[-1] != 0.0:
            raise CurveError("last breakpoint score must be 0")

    @cached_property
    def distances(self) -> np.ndarray:
        return np.array([d for d, _ in self.breakpoints])

    @cached_property
    def scores(self) -> np.ndarray:
        return np.array([s for _, s in self.breakpoints])

    @property
    def cutoff(self) -> float:
        return self.breakpoints[-1][0]

    def slopes(self) -> list[float]:
        return [
            (s1 - s0) / (d1 - d0)
            for (d0, s0), (d1, s1) in zip(self.breakpoints, self.breakpoints[1:])
        ]


WALKSCORE_CURVE = PwlCurve(((0.0, 100.0), (400.0, 95.0), (1800.0, 10.0), (2400.0, 0.0)))


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    path: str = ""


@dataclass(frozen=True, eq=False)
class Instance:
    """Immutable problem statement.

    ``dist`` has one row per resident and one column per candidate followed by
    one column per existing amenity (grouped by type id). Node ids of the three
    sets may coincide; columns are identified by position.
    """

    residents: tuple[NodeId, ...]
    candidates: tuple[NodeId, ...]
    capacities: tuple[int, ...]
    existing: Mapping[int, tuple[NodeId, ...]]
    dist: np.ndarray
    amenity_specs: tuple[AmenityTypeSpec, ...]
    curve: PwlCurve = WALKSCORE_CURVE
    d_infinity: float = DEFAULT_D_INFINITY
    name: str = "instance"
    crs: str = "EPSG:4326"
    coords: Mapping[NodeId, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("residents", tuple(self.residents))
        set_("candidates", tuple(self.candidates))
        set_("capacities", tuple(int(c) for c in self.capacities))
        set_("amenity_specs", tuple(self.amenity_specs))
        ex = {int(a): tuple(nodes) for a, nodes in self.existing.items()}
        for spec in self.amenity_specs:
            ex.setdefault(spec.id, ())
        set_("existing", MappingProxyType(dict(sorted(ex.items()))))
        dist = np.array(self.dist, dtype=float, copy=True)
        if dist.ndim != 2:
            dist = dist.reshape(len(self.residents), -1) if dist.size else np.zeros(
                (len(self.residents), self.n_columns)
            )
        dist.setflags(write=False)
        set_("dist", dist)
        set_("d_infinity", float(self.d_infinity))
        set_("coords", MappingProxyType(dict(self.coords)))

    # -- layout -----------------------------------------------------------

    @property
    def n_residents(self) -> int:
        return len(self.residents)

    @property
    def n_candidates(self) -> int:
        return len(self.candidates)

    @property
    def n_columns(self) -> int:
        return len(self.candidates) + sum(len(v) for v in self.existing.values())

    @cached_property
    def existing_columns(self) -> Mapping[int, np.ndarray]:
        cols = {}
        start = len(self.candidates)
        for a, nodes in self.existing.items():
            cols[a] = np.arange(start, start + len(nodes))
            start += len(nodes)
        return MappingProxyType(cols)

    @cached_property
    def _spec_by_id(self) -> dict[int, AmenityTypeSpec]:
        return {s.id: s for s in self.amenity_specs}

    def spec(self, type_id: int) -> AmenityTypeSpec:
        return self._spec_by_id[type_id]

    @property
    def type_ids(self) -> list[int]:
        return sorted(self._spec_by_id)

    @cached_property
    def candidate_index(self) -> Mapping[NodeId, int]:
        return MappingProxyType({node: j for j, node in enumerate(self.candidates)})

    @property
    def has_depth(self) -> bool:
        return any(s.is_depth for s in self.amenity_specs)

    def available(self, type_id: int) -> int:
        return available_choices(self.spec(type_id), len(self.existing.get(type_id, ())))

    # -- derived instances -------------------------------------------------

    def with_specs(self, specs: Iterable[AmenityTypeSpec]) -> "Instance":
        return replace(self, amenity_specs=tuple(specs))

    def with_budgets(self, budgets: int | Mapping[int, int]) -> "Instance":
        if isinstance(budgets, Mapping):
            specs = [replace(s, budget=int(budgets.get(s.id, s.budget))) for s in self.amenity_specs]
        else:
            specs = [replace(s, budget=int(budgets)) for s in self.amenity_specs]
        return self.with_specs(specs)

    def is_canonical(self) -> bool:
        def ordered(seq):
            keys = [node_sort_key(n) for n in seq]
            return keys == sorted(keys)

        return (
            ordered(self.residents)
            and ordered(self.candidates)
            and all(ordered(v) for v in self.existing.values())
            and [s.id for s in self.amenity_specs] == sorted(s.id for s in self.amenity_specs)
        )

    def canonical(self) -> "Instance":
        """Return the instance with rows and columns in canonical order."""
        if self.is_canonical():
            return self

        def order(seq):
            return sorted(range(len(seq)), key=lambda k: node_sort_key(seq[k]))

        rows = order(self.residents)
        cand = order(self.candidates)
        cols = list(cand)
        existing = {}
        start = len(self.candidates)
        for a, nodes in self.existing.items():
            perm = order(nodes)
            cols.extend(start + k for k in perm)
            existing[a] = tuple(nodes[k] for k in perm)
            start += len(nodes)
        dist = self.dist[np.ix_(rows, cols)] if self.dist.size else self.dist
        return replace(
            self,
            residents=tuple(self.residents[k] for k in rows),
            candidates=tuple(self.candidates[k] for k in cand),
            capacities=tuple(self.capacities[k] for k in cand),
            existing=existing,
            dist=dist,
            amenity_specs=tuple(sorted(self.amenity_specs, key=lambda s: s.id)),
        )


@dataclass(frozen=True)
class Allocation:
    """Multiset of placements: ``counts[(type_id, candidate node)] = y``."""

    counts: Mapping[tuple[int, NodeId], int] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for (a, node), y in self.counts.items():
            y = int(y)
            if y < 0:
                raise ValueError(f"negative placement count for {(a, node)}")
            if y:
                clean[(int(a), node)] = y
        items = sorted(clean.items(), key=lambda kv: (kv[0][0], node_sort_key(kv[0][1])))
        object.__setattr__(self, "counts", MappingProxyType(dict(items)))

    def __hash__(self):
        return hash(frozenset(self.counts.items()))

    def __len__(self) -> int:
        return sum(self.counts.values())

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, NodeId]]) -> "Allocation":
        counts: dict[tuple[int, NodeId], int] = {}
        for a, node in pairs:
            counts[(a, node)] = counts.get((a, node), 0) + 1
        return cls(counts)

    def add(self, type_id: int, node: NodeId, count: int = 1) -> "Allocation":
        counts = dict(self.counts)
        counts[(type_id, node)] = counts.get((type_id, node), 0) + count
        return Allocation(counts)

    def pairs(self) -> list[tuple[int, NodeId]]:
        return [key for key, y in self.counts.items() for _ in range(y)]

    def totals(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for (a, _), y in self.counts.items():
            out[a] = out.get(a, 0) + y
        return out

    def load(self) -> dict[NodeId, int]:
        out: dict[NodeId, int] = {}
        for (_, node), y in self.counts.items():
            out[node] = out.get(node, 0) + y
        return out

    def to_list(self) -> list[dict]:
        return [{"type": a, "node": node, "count": y} for (a, node), y in self.counts.items()]

    @classmethod
    def from_list(cls, rows: Iterable[Mapping]) -> "Allocation":
        return cls({(int(r["type"]), r["node"]): int(r.get("count", 1)) for r in rows})


def check_feasible(instance: Instance, allocation: Allocation) -> None:
    """Raise :class:`InfeasibleAllocationError` unless budgets and capacities hold."""
    known = set(instance.type_ids)
    for a, node in allocation.counts:
        if a not in known:
            raise InfeasibleAllocationError(f"unknown amenity type {a}")
        if node not in instance.candidate_index:
            raise InfeasibleAllocationError(f"node {node!r} is not a candidate location")
    for a, n in allocation.totals().items():
        if n > instance.spec(a).budget:
            raise InfeasibleAllocationError(
                f"type {a}: {n} placements exceed budget {instance.spec(a).budget}"
            )
    for node, n in allocation.load().items():
        cap = instance.capacities[instance.candidate_index[node]]
        if n > cap:
            raise InfeasibleAllocationError(f"node {node!r}: {n} placements exceed capacity {cap}")


def normalize_weights(specs: Sequence[AmenityTypeSpec]) -> dict[int, tuple[float, ...]]:
    """Divide every raw weight by the grand total over all types and options."""
    if not specs:
        raise InvalidWeightsError("no amenity types given")
    for s in specs:
        if not s.raw_weights:
            raise InvalidWeightsError(f"type {s.id} has no weights")
        if any(not (w > 0) or not math.isfinite(w) for w in s.raw_weights):
            raise InvalidWeightsError(f"type {s.id} has non-positive weights")
    total = math.fsum(w for s in specs for w in s.raw_weights)
    return {s.id: tuple(w / total for w in s.raw_weights) for s in specs}


def rounded_weights(specs: Sequence[AmenityTypeSpec], decimals: int = 2) -> dict[int, tuple[float, ...]]:
    """Normalized weights rounded to ``decimals`` places, as printed in reports."""
    return {a: tuple(round(w, decimals) for w in ws) for a, ws in normalize_weights(specs).items()}


def available_choices(spec: AmenityTypeSpec, existing_count: int) -> int:
    """Number of options of a type that can be filled by existing plus new instances."""
    if existing_count < 0:
        raise ValueError("existing_count must be non-negative")
    return min(spec.budget + existing_count, spec.options)


def validate_instance(instance: Instance) -> list[Violation]:
    out: list[Violation] = []

    def add(code, message, path=""):
        out.append(Violation(code, message, path))

    for k, node in enumerate(instance.residents + instance.candidates):
        if not isinstance(node, (int, str, np.integer)) or isinstance(node, bool):
            add("invalid_node_id", f"node id {node!r} must be an int or str", f"nodes[{k}]")
    if len(set(instance.residents)) != len(instance.residents):
        add("duplicate_resident", "resident node ids repeat", "residents")
    if len(set(instance.candidates)) != len(instance.candidates):
        add("duplicate_candidate", "candidate node ids repeat", "candidates")
    if len(instance.capacities) != len(instance.candidates):
        add("dimension_mismatch", "one capacity per candidate required", "candidates")
    for j, c in enumerate(instance.capacities):
        if c < 0:
            add("negative_capacity", f"capacity {c} < 0", f"candidates[{j}].capacity")

    ids = [s.id for s in instance.amenity_specs]
    if len(set(ids)) != len(ids):
        add("duplicate_type_id", "amenity type ids repeat", "amenity_types")
    for t, s in enumerate(instance.amenity_specs):
        path = f"amenity_types[{t}]"
        if not s.raw_weights:
            add("empty_weights", f"type {s.id} has no weights", path + ".raw_weights")
        elif any(not (w > 0) or not math.isfinite(w) for w in s.raw_weights):
            add("nonpositive_weight", f"type {s.id} has non-positive weights", path + ".raw_weights")
        elif any(b > a for a, b in zip(s.raw_weights, s.raw_weights[1:])):
            add("increasing_depth_weights", f"type {s.id} option weights increase", path + ".raw_weights")
        if s.budget < 0:
            add("negative_budget", f"type {s.id} budget {s.budget} < 0", path + ".budget")
    for a in instance.existing:
        if a not in set(ids):
            add("unknown_amenity_type", f"existing amenities reference unknown type {a}", f"existing.{a}")

    if not (instance.d_infinity > 0) or not math.isfinite(instance.d_infinity):
        add("nonpositive_d_infinity", "d_infinity must be positive and finite", "d_infinity")
    if instance.curve.cutoff != instance.d_infinity:
        add("curve_cutoff_mismatch", "last curve breakpoint must sit at d_infinity", "curve")

    expected = (instance.n_residents, instance.n_columns)
    if instance.dist.shape != expected:
        add("dimension_mismatch", f"distance matrix is {instance.dist.shape}, expected {expected}", "distances")
    elif instance.dist.size:
        if not np.all(np.isfinite(instance.dist)):
            add("nonfinite_distance", "distances must be finite", "distances")
        elif np.any(instance.dist < 0):
            add("negative_distance", "distances must be non-negative", "distances")

    if not any(v.code in ("empty_weights", "nonpositive_weight") for v in out) and ids:
        total = sum(sum(w) for w in normalize_weights(instance.amenity_specs).values())
        if abs(total - 1.0) > 1e-12:
            add("weights_not_normalized", f"normalized weights sum to {total}", "amenity_types")
    return out


# -- serialization ----------------------------------------------------------


def _require(doc: Mapping, key: str, path: str = "") -> Any:
    if key not in doc:
        raise InstanceFormatError(path + key, "missing required field")
    return doc[key]


def _node(value: Any, path: str) -> NodeId:
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise InstanceFormatError(path, f"node id must be an int or str, got {value!r}")
    return value


def _number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InstanceFormatError(path, f"expected a number, got {value!r}")
    return float(value)


def _int(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InstanceFormatError(path, f"expected an integer, got {value!r}")
    return value


def instance_to_dict(instance: Instance) -> dict:
    def record(node, extra=None):
        rec = {"id": node}
        if extra:
            rec.update(extra)
        if node in instance.coords:
            rec["lon"], rec["lat"] = instance.coords[node]
        return rec

    return {
        "meta": {"name": instance.name, "crs": instance.crs, "units": "meters"},
        "residents": [record(n) for n in instance.residents],
        "candidates": [
            record(n, {"capacity": c}) for n, c in zip(instance.candidates, instance.capacities)
        ],
        "amenity_types": [
            {"id": s.id, "name": s.name, "raw_weights": list(s.raw_weights), "budget": s.budget}
            for s in instance.amenity_specs
        ],
        "existing": {str(a): list(nodes) for a, nodes in instance.existing.items()},
        "curve": [list(bp) for bp in instance.curve.breakpoints],
        "d_infinity": instance.d_infinity,
        "distances": instance.dist.tolist(),
    }


def instance_from_dict(doc: Any) -> Instance:
    if not isinstance(doc, Mapping):
        raise InstanceFormatError("$", "instance document must be a JSON object")
    meta = doc.get("meta", {})
    if not isinstance(meta, Mapping):
        raise InstanceFormatError("meta", "must be an object")
    if meta.get("units", "meters") != "meters":
        raise InstanceFormatError("meta.units", "only meters are supported")

    coords: dict[NodeId, tuple[float, float]] = {}

    def nodes_of(key):
        recs = _require(doc, key)
        if not isinstance(recs, list):
            raise InstanceFormatError(key, "must be an array")
        out = []
        for k, rec in enumerate(recs):
            path = f"{key}[{k}]"
            if not isinstance(rec, Mapping):
                raise InstanceFormatError(path, "must be an object")
            node = _node(_require(rec, "id", path + "."), path + ".id")
            if "lon" in rec or "lat" in rec:
                coords[node] = (
                    _number(_require(rec, "lon", path + "."), path + ".lon"),
                    _number(_require(rec, "lat", path + "."), path + ".lat"),
                )
            out.append((node, rec))
        return out

    residents = [n for n, _ in nodes_of("residents")]
    cand = nodes_of("candidates")
    candidates = [n for n, _ in cand]
    capacities = [
        _int(_require(rec, "capacity", f"candidates[{k}]."), f"candidates[{k}].capacity")
        for k, (_, rec) in enumerate(cand)
    ]

    specs = []
    raw_types = _require(doc, "amenity_types")
    if not isinstance(raw_types, list):
        raise InstanceFormatError("amenity_types", "must be an array")
    for k, t in enumerate(raw_types):
        path = f"amenity_types[{k}]."
        if not isinstance(t, Mapping):
            raise InstanceFormatError(path[:-1], "must be an object")
        weights = _require(t, "raw_weights", path)
        if not isinstance(weights, list):
            raise InstanceFormatError(path + "raw_weights", "must be an array")
        specs.append(
            AmenityTypeSpec(
                id=_int(_require(t, "id", path), path + "id"),
                name=str(t.get("name", "")),
                raw_weights=tuple(_number(w, f"{path}raw_weights[{q}]") for q, w in enumerate(weights)),
                budget=_int(t.get("budget", 0), path + "budget"),
            )
        )

    raw_existing = doc.get("existing", {})
    if not isinstance(raw_existing, Mapping):
        raise InstanceFormatError("existing", "must be an object keyed by type id")
    existing = {}
    for key, nodes in raw_existing.items():
        try:
            a = int(key)
        except ValueError:
            raise InstanceFormatError(f"existing.{key}", "key must be an integer type id") from None
        if not isinstance(nodes, list):
            raise InstanceFormatError(f"existing.{key}", "must be an array of node ids")
        existing[a] = tuple(_node(n, f"existing.{key}[{q}]") for q, n in enumerate(nodes))

    raw_curve = _require(doc, "curve")
    if not isinstance(raw_curve, list) or not all(isinstance(p, list) and len(p) == 2 for p in raw_curve):
        raise InstanceFormatError("curve", "must be an array of [distance, score] pairs")
    try:
        curve = PwlCurve(
            tuple((_number(d, f"curve[{q}][0]"), _number(s, f"curve[{q}][1]")) for q, (d, s) in enumerate(raw_curve))
        )
    except CurveError as exc:
        raise InstanceFormatError("curve", str(exc)) from None

    d_inf = _number(_require(doc, "d_infinity"), "d_infinity")

    rows = _require(doc, "distances")
    if not isinstance(rows, list):
        raise InstanceFormatError("distances", "must be an array of rows")
    width = None
    for r, row in enumerate(rows):
        if not isinstance(row, list):
            raise InstanceFormatError(f"distances[{r}]", "must be an array")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise InstanceFormatError(f"distances[{r}]", "ragged row")
        for c, v in enumerate(row):
            _number(v, f"distances[{r}][{c}]")
    n_cols = len(candidates) + sum(len(v) for v in existing.values())
    dist = np.array(rows, dtype=float) if rows else np.zeros((0, n_cols))

    return Instance(
        residents=residents,
        candidates=candidates,
        capacities=capacities,
        existing=existing,
        dist=dist,
        amenity_specs=specs,
        curve=curve,
        d_infinity=d_inf,
        name=str(meta.get("name", "instance")),
        crs=str(meta.get("crs", "EPSG:4326")),
        coords=coords,
    )


def read_instance(path: str | Path) -> Instance:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError("$", f"invalid JSON: {exc}") from None
    return instance_from_dict(doc)


def write_instance(instance: Instance, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(instance_to_dict(instance), fh, indent=1)
        fh.write("\n")
