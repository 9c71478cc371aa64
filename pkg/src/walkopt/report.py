from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from walkopt.instance import Allocation, NodeId


@dataclass(frozen=True)
class Step:
    step: int
    type_id: int
    node: NodeId
    gain: float
    cumulative: float


@dataclass
class SolveReport:
    """Outcome of one solver run."""

    allocation: Allocation
    objective: float
    method: str
    iterations: list[Step] = field(default_factory=list)
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "objective": self.objective,
            "allocation": self.allocation.to_list(),
            "iterations": [
                {
                    "step": s.step,
                    "type": s.type_id,
                    "node": s.node,
                    "gain": s.gain,
                    "cumulative": s.cumulative,
                }
                for s in self.iterations
            ],
            "wall_time": self.wall_time,
            **({"extra": self.extra} if self.extra else {}),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def iterations_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["step", "type", "node", "gain", "cumulative"])
        for s in self.iterations:
            writer.writerow([s.step, s.type_id, s.node, repr(s.gain), repr(s.cumulative)])
        return buf.getvalue()

    @classmethod
    def from_dict(cls, doc: dict) -> "SolveReport":
        return cls(
            allocation=Allocation.from_list(doc["allocation"]),
            objective=float(doc["objective"]),
            method=doc["method"],
            iterations=[
                Step(int(s["step"]), int(s["type"]), s["node"], float(s["gain"]), float(s["cumulative"]))
                for s in doc.get("iterations", [])
            ],
            wall_time=float(doc.get("wall_time", 0.0)),
            extra=doc.get("extra", {}),
        )
