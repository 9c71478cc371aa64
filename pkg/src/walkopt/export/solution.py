"""Read solver solutions back and re-score them independently of the solver."""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from walkopt.errors import SolutionFormatError
from walkopt.instance import Allocation, Instance, check_feasible
from walkopt.scoring import WeightMap, objective

_NAME = re.compile(
    r"^(?:y_(\d+)_(\d+)|x_\d+_\d+_\d+|xp_\d+_\d+_\d+_\d+|l_\d+|f_\d+|lam_\d+_\d+|seg_\d+_\d+)$"
)
_OBJ = re.compile(r"^#\s*objective value\s*[=:]\s*(\S+)", re.IGNORECASE)
_LP_TOKEN = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


@dataclass
class ImportResult:
    allocation: Allocation
    reported: float | None
    reevaluated: float

    @property
    def delta(self) -> float | None:
        return None if self.reported is None else abs(self.reported - self.reevaluated)


def lp_variable_names(path: str | Path) -> set[str]:
    return set(_LP_TOKEN.findall(Path(path).read_text(encoding="utf-8")))


def parse_solution(text: str) -> tuple[dict[str, float], float | None]:
    values: dict[str, float] = {}
    reported = None
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = _OBJ.match(line)
            if m:
                reported = float(m.group(1))
            continue
        parts = line.split()
        if len(parts) != 2:
            raise SolutionFormatError(line, "expected 'name value'")
        name, raw = parts
        if not _NAME.match(name):
            raise SolutionFormatError(name, "unknown variable name")
        try:
            values[name] = float(raw)
        except ValueError:
            raise SolutionFormatError(raw, f"value of {name} is not a number") from None
    return values, reported


def import_solution(
    instance: Instance,
    solution: str | Path,
    model: str | Path | None = None,
    weights: WeightMap | None = None,
) -> ImportResult:
    """Rebuild the allocation from ``y_{j}_{a}`` values and re-score it.

    Raises :class:`SolutionFormatError` for names outside the export scheme
    (or absent from ``model`` when given) and
    :class:`~walkopt.errors.InfeasibleAllocationError` if the rebuilt
    allocation breaks a budget or capacity.
    """
    instance = instance.canonical()
    values, reported = parse_solution(Path(solution).read_text(encoding="utf-8"))
    declared = lp_variable_names(model) if model is not None else None
    known_types = set(instance.type_ids)
    counts = {}
    for name, value in values.items():
        if declared is not None and name not in declared:
            raise SolutionFormatError(name, "not a variable of the model")
        m = _NAME.match(name)
        if m.group(1) is None:
            continue
        j, a = int(m.group(1)), int(m.group(2))
        if j >= instance.n_candidates or a not in known_types:
            raise SolutionFormatError(name, "index outside the instance")
        y = round(value)
        if abs(value - y) > 1e-6:
            raise SolutionFormatError(name, f"non-integral allocation value {value}")
        if y:
            counts[(a, instance.candidates[j])] = y
    allocation = Allocation(counts)
    check_feasible(instance, allocation)
    F, _ = objective(instance, allocation, weights)
    return ImportResult(allocation, reported, F)
