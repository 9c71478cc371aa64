"""Evaluation metrics and parameter sweeps."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from walkopt.errors import EnumerationLimitError, MetricError
from walkopt.exact import DEFAULT_LIMIT, enumeration_estimate, exact_solve
from walkopt.greedy import greedy_solve
from walkopt.instance import Instance
from walkopt.scoring import ScoreBreakdown, objective

WALK_SPEED_MPS = 1.2
DEFAULT_SHIFT_S = 10.0


def mre(best: Mapping[str, float | None]) -> dict[str, float]:
    """Percent gap of each method's objective to the best across methods.

    Methods mapped to ``None`` found no feasible solution and are left out.
    """
    feasible = {m: float(v) for m, v in best.items() if v is not None}
    if not feasible:
        raise MetricError("no method has a feasible objective")
    ref = max(feasible.values())
    if ref <= 0:
        raise MetricError(f"reference objective {ref} is not positive")
    return {m: 100.0 * (ref - v) / ref for m, v in feasible.items()}


def shifted_geomean(values: Sequence[float], shift: float = DEFAULT_SHIFT_S) -> float:
    if len(values) == 0:
        raise MetricError("shifted geometric mean of an empty sequence")
    if shift <= 0:
        raise MetricError("shift must be positive")
    v = np.asarray(values, dtype=float)
    if np.any(v < 0):
        raise MetricError("values must be non-negative")
    return float(np.exp(np.mean(np.log(v + shift))) - shift)


def meters_to_minutes(meters, speed: float = WALK_SPEED_MPS):
    return np.asarray(meters, dtype=float) / (speed * 60.0)


@dataclass
class MethodTally:
    method: str
    mre_pct: float
    feasible: int
    optimal: int


def method_summary(records: Iterable[Mapping]) -> list[MethodTally]:
    """Aggregate per-instance results into mean MRE and feasibility/optimality counts.

    Each record has keys ``instance``, ``method``, ``objective`` (``None`` if
    infeasible) and optionally ``optimal``.
    """
    by_inst: dict[str, dict[str, float | None]] = {}
    feas: dict[str, int] = {}
    opt: dict[str, int] = {}
    for r in records:
        m = r["method"]
        by_inst.setdefault(r["instance"], {})[m] = r["objective"]
        feas[m] = feas.get(m, 0) + (r["objective"] is not None)
        opt[m] = opt.get(m, 0) + bool(r.get("optimal", False))
    gaps: dict[str, list[float]] = {m: [] for m in feas}
    for res in by_inst.values():
        try:
            for m, g in mre(res).items():
                gaps[m].append(g)
        except MetricError:
            continue
    return [
        MethodTally(m, float(np.mean(gaps[m])) if gaps[m] else math.nan, feas[m], opt[m])
        for m in sorted(feas)
    ]


@dataclass
class Histogram:
    type_id: int
    option: int
    bin_start: np.ndarray
    counts: np.ndarray
    mean: float
    max: float
    p75: float


def walk_time_histogram(breakdowns: Iterable[ScoreBreakdown], bin_minutes: float = 5.0) -> list[Histogram]:
    """Walking-time distribution per (type, option) over all residents of all breakdowns.

    Percentiles use linear interpolation between closest ranks.
    """
    pooled: dict[tuple[int, int], list[np.ndarray]] = {}
    for bd in breakdowns:
        for a, block in bd.assigned.items():
            for p in range(block.shape[1]):
                pooled.setdefault((a, p), []).append(meters_to_minutes(block[:, p]))
    out = []
    for (a, p), chunks in sorted(pooled.items()):
        minutes = np.concatenate(chunks)
        if minutes.size == 0:
            continue
        edges_top = math.floor(minutes.max() / bin_minutes) + 1
        edges = np.arange(edges_top + 1) * bin_minutes
        counts, _ = np.histogram(minutes, bins=edges)
        out.append(
            Histogram(
                a, p, edges[:-1], counts,
                float(minutes.mean()), float(minutes.max()), float(np.percentile(minutes, 75)),
            )
        )
    return out


def single_choice(instance: Instance) -> Instance:
    """Keep only the nearest-option weight of every depth type (weights renormalize on use)."""
    return instance.with_specs(s.truncated() for s in instance.amenity_specs)


@dataclass
class SweepRow:
    k: int
    scenario: str
    method: str
    objective: float
    mean_distance: dict[tuple[int, int], float] = field(default_factory=dict)


def sweep_k(
    instance: Instance,
    ks: Iterable[int],
    scenario: str = "multi",
    method: str = "greedy",
    limit: int = DEFAULT_LIMIT,
) -> list[SweepRow]:
    """Solve with every budget set to k for each k.

    ``method`` is ``greedy``, ``exact``, or ``auto`` (exact when the
    enumeration estimate fits under ``limit``, greedy otherwise).
    """
    ks = list(ks)
    if not ks:
        raise ValueError("k range is empty")
    if scenario not in ("single", "multi"):
        raise ValueError(f"unknown scenario {scenario!r}")
    base = single_choice(instance) if scenario == "single" else instance
    rows = []
    for k in ks:
        inst = base.with_budgets(k)
        use = method
        if method == "auto":
            use = "exact" if enumeration_estimate(inst) <= limit else "greedy"
        if use == "exact":
            report = exact_solve(inst, limit=limit)
        elif use == "greedy":
            report = greedy_solve(inst)
        else:
            raise ValueError(f"unknown method {method!r}")
        _, bd = objective(inst, report.allocation)
        means = {(a, p): float(block[:, p].mean()) if block.shape[0] else math.nan
                 for a, block in bd.assigned.items() for p in range(block.shape[1])}
        rows.append(SweepRow(k, scenario, use, report.objective, means))
    return rows


def write_sweep_csv(rows: Sequence[SweepRow], path) -> None:
    keys = sorted({key for r in rows for key in r.mean_distance})
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "scenario", "method", "F"] + [f"mean_dist_{a}_{p}" for a, p in keys])
        for r in rows:
            w.writerow([r.k, r.scenario, r.method, repr(r.objective)]
                       + [repr(r.mean_distance.get(key, math.nan)) for key in keys])


def write_hist_csv(hists: Sequence[Histogram], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["type", "option", "bin_start_min", "count"])
        for h in hists:
            for start, c in zip(h.bin_start, h.counts):
                w.writerow([h.type_id, h.option, repr(float(start)), int(c)])


def write_mre_csv(tallies: Sequence[MethodTally], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "mre_pct", "feasible", "optimal"])
        for t in tallies:
            w.writerow([t.method, repr(t.mre_pct), t.feasible, t.optimal])


def write_summary_json(path, sweep=(), hists=(), tallies=()) -> None:
    doc = {
        "sweep": [
            {"k": r.k, "scenario": r.scenario, "method": r.method, "F": r.objective,
             "mean_distance": {f"{a}_{p}": v for (a, p), v in r.mean_distance.items()}}
            for r in sweep
        ],
        "hist": [
            {"type": h.type_id, "option": h.option, "bin_start_min": h.bin_start.tolist(),
             "count": h.counts.tolist(), "mean": h.mean, "max": h.max, "p75": h.p75}
            for h in hists
        ],
        "mre": [t.__dict__ for t in tallies],
    }
    Path(path).write_text(json.dumps(doc, indent=1), encoding="utf-8")


def compare_methods(instances: Mapping[str, Instance], limit: int = DEFAULT_LIMIT) -> list[dict]:
    """Greedy and (where it fits) exact results per instance, as ``method_summary`` records."""
    records = []
    for name, inst in instances.items():
        records.append({"instance": name, "method": "greedy", "objective": greedy_solve(inst).objective})
        try:
            F = exact_solve(inst, limit=limit).objective
            records.append({"instance": name, "method": "exact", "objective": F, "optimal": True})
        except EnumerationLimitError:
            records.append({"instance": name, "method": "exact", "objective": None})
    return records


def improvement(instance: Instance, allocation) -> tuple[float, float]:
    """(baseline F with existing amenities only, F after ``allocation``)."""
    return objective(instance)[0], objective(instance, allocation)[0]
