"""Binary MILP formulation written in CPLEX LP format.

Variable names (``i`` resident row, ``j`` distance-matrix column, ``a`` type
id, ``p`` option index from 0, ``b`` breakpoint, ``s`` segment)::

    y_{j}_{a}          integer   instances of type a placed at candidate j
    x_{i}_{j}_{a}      binary    resident i uses column j for plain type a
    xp_{i}_{j}_{a}_{p} binary    resident i uses column j as option p of depth type a
    l_{i}, f_{i}       continuous weighted distance and score of resident i
    lam_{i}_{b}        continuous convex-combination weight of breakpoint b
    seg_{i}_{s}        binary    resident i's weighted distance lies on segment s

Assignment rows are ``<= 1``; an unassigned option is charged ``d_infinity``
through the constant on the right-hand side of ``wdist_{i}``. With distances
capped at ``d_infinity`` this is the same objective the scoring module
evaluates, including for types that have no instance at all.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from walkopt.instance import Instance
from walkopt.scoring import WeightMap, resolve_weights

BINARY, INTEGER, CONTINUOUS = "binary", "integer", "continuous"


@dataclass
class Variable:
    name: str
    kind: str
    lb: float = 0.0
    ub: float | None = None


@dataclass
class Constraint:
    name: str
    terms: list[tuple[str, float]]
    sense: str
    rhs: float
    family: str


@dataclass
class MilpModel:
    name: str
    variables: dict[str, Variable] = field(default_factory=dict)
    constraints: list[Constraint] = field(default_factory=list)
    objective: list[tuple[str, float]] = field(default_factory=list)
    breakpoints: tuple[tuple[float, float], ...] = ()

    def var(self, name, kind, lb=0.0, ub=None):
        self.variables[name] = Variable(name, kind, lb, ub)
        return name

    def add(self, family, name, terms, sense, rhs):
        terms = [(v, c) for v, c in terms if c != 0.0]
        if terms:
            self.constraints.append(Constraint(name, terms, sense, float(rhs), family))

    def kind_counts(self) -> Counter:
        return Counter(v.kind for v in self.variables.values())

    def family_counts(self) -> Counter:
        return Counter(c.family for c in self.constraints)


@dataclass
class ExportSummary:
    path: str
    format: str
    binary: int = 0
    integer: int = 0
    continuous: int = 0
    constraints: int = 0
    families: dict = field(default_factory=dict)

    @property
    def discrete(self) -> int:
        return self.binary + self.integer


def _pwl_breakpoints(instance: Instance, l_max: float):
    pts = list(instance.curve.breakpoints)
    if l_max > pts[-1][0] * (1 + 1e-12):
        pts.append((l_max, pts[-1][1]))
    return tuple(pts)


def build_milp(instance: Instance, weights: WeightMap | None = None) -> MilpModel:
    instance = instance.canonical()
    w = resolve_weights(instance, weights)
    d_inf = instance.d_infinity
    D = np.minimum(instance.dist, d_inf)
    n, m = instance.n_residents, instance.n_candidates
    specs = instance.amenity_specs
    total_w = float(sum(ws.sum() for ws in w.values()))
    l_max = d_inf * total_w
    bps = _pwl_breakpoints(instance, l_max)
    model = MilpModel(instance.name, breakpoints=bps)

    for j in range(m):
        for s in specs:
            model.var(f"y_{j}_{s.id}", INTEGER, 0, min(instance.capacities[j], s.budget))

    cols = {s.id: list(range(m)) + list(instance.existing_columns.get(s.id, ())) for s in specs}
    avail = {s.id: instance.available(s.id) for s in specs if s.is_depth}

    for s in specs:
        a = s.id
        if s.is_depth:
            for i in range(n):
                for p in range(avail[a]):
                    for j in cols[a]:
                        model.var(f"xp_{i}_{j}_{a}_{p}", BINARY)
        else:
            for i in range(n):
                for j in cols[a]:
                    model.var(f"x_{i}_{j}_{a}", BINARY)
    for i in range(n):
        model.var(f"l_{i}", CONTINUOUS, 0.0, max(l_max, bps[-1][0]))
        model.var(f"f_{i}", CONTINUOUS, float(min(sc for _, sc in bps)), float(max(sc for _, sc in bps)))
        for b in range(len(bps)):
            model.var(f"lam_{i}_{b}", CONTINUOUS, 0.0, 1.0)
        for sg in range(len(bps) - 1):
            model.var(f"seg_{i}_{sg}", BINARY)

    for s in specs:
        model.add("budget", f"budget_{s.id}", [(f"y_{j}_{s.id}", 1.0) for j in range(m)], "<=", s.budget)
    for j in range(m):
        model.add("capacity", f"capacity_{j}", [(f"y_{j}_{s.id}", 1.0) for s in specs], "<=",
                  instance.capacities[j])

    for s in specs:
        a = s.id
        if not s.is_depth:
            for i in range(n):
                model.add("plain_assign", f"assign_{i}_{a}", [(f"x_{i}_{j}_{a}", 1.0) for j in cols[a]], "<=", 1)
            for i in range(n):
                for j in range(m):
                    model.add("plain_before_assign", f"before_{i}_{j}_{a}",
                              [(f"x_{i}_{j}_{a}", 1.0), (f"y_{j}_{a}", -1.0)], "<=", 0)
            continue
        P = avail[a]
        if P == 0:
            continue
        for i in range(n):
            for p in range(P):
                model.add("depth_assign", f"assignp_{i}_{a}_{p}",
                          [(f"xp_{i}_{j}_{a}_{p}", 1.0) for j in cols[a]], "<=", 1)
        for i in range(n):
            for j in instance.existing_columns.get(a, ()):
                model.add("existing_choice", f"uniq_{i}_{j}_{a}",
                          [(f"xp_{i}_{j}_{a}_{p}", 1.0) for p in range(P)], "<=", 1)
            for j in range(m):
                model.add("allocated_choice", f"choicecap_{i}_{j}_{a}",
                          [(f"xp_{i}_{j}_{a}_{p}", 1.0) for p in range(P)] + [(f"y_{j}_{a}", -1.0)], "<=", 0)
        for i in range(n):
            for j in range(m):
                for p in range(P):
                    model.add("depth_before_assign", f"beforep_{i}_{j}_{a}_{p}",
                              [(f"xp_{i}_{j}_{a}_{p}", 1.0), (f"y_{j}_{a}", -1.0)], "<=", 0)

    for i in range(n):
        terms = [(f"l_{i}", 1.0)]
        for s in specs:
            a = s.id
            if s.is_depth:
                for p in range(avail[a]):
                    for j in cols[a]:
                        terms.append((f"xp_{i}_{j}_{a}_{p}", -float(w[a][p]) * (D[i, j] - d_inf)))
            else:
                for j in cols[a]:
                    terms.append((f"x_{i}_{j}_{a}", -float(w[a][0]) * (D[i, j] - d_inf)))
        model.add("weighted_distance", f"wdist_{i}", terms, "=", l_max)

    nb = len(bps)
    for i in range(n):
        lam = [f"lam_{i}_{b}" for b in range(nb)]
        seg = [f"seg_{i}_{sg}" for sg in range(nb - 1)]
        model.add("pwl", f"pwl_l_{i}", [(f"l_{i}", 1.0)] + [(v, -t) for v, (t, _) in zip(lam, bps)], "=", 0)
        model.add("pwl", f"pwl_f_{i}", [(f"f_{i}", 1.0)] + [(v, -sc) for v, (_, sc) in zip(lam, bps)], "=", 0)
        model.add("pwl", f"pwl_lam_{i}", [(v, 1.0) for v in lam], "=", 1)
        model.add("pwl", f"pwl_seg_{i}", [(v, 1.0) for v in seg], "=", 1)
        for b in range(nb):
            near = [sg for sg in (b - 1, b) if 0 <= sg < nb - 1]
            model.add("pwl", f"pwl_link_{i}_{b}", [(lam[b], 1.0)] + [(seg[sg], -1.0) for sg in near], "<=", 0)

    if n:
        model.objective = [(f"f_{i}", 1.0 / n) for i in range(n)]
    return model


def _num(x: float) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() and abs(x) < 1e15 else repr(x)


def _expr(terms) -> list[str]:
    out = []
    for v, c in terms:
        out.append(f"{'-' if c < 0 else '+'} {_num(abs(c))} {v}")
    return out


def _wrapped(head: str, pieces: list[str], tail: str = "", width: int = 200) -> list[str]:
    lines, cur = [], head
    for piece in pieces:
        if len(cur) + len(piece) + 1 > width and cur.strip():
            lines.append(cur)
            cur = "   "
        cur += " " + piece
    cur += tail
    lines.append(cur)
    return lines


def render_lp(model: MilpModel) -> str:
    lines = [f"\\ walkopt MILP: {model.name}", "Maximize"]
    lines += _wrapped(" obj:", _expr(model.objective))
    lines.append("Subject To")
    for c in model.constraints:
        lines += _wrapped(f" {c.name}:", _expr(c.terms), f" {c.sense} {_num(c.rhs)}")
    lines.append("Bounds")
    for v in model.variables.values():
        if v.kind == BINARY:
            continue
        ub = "+inf" if v.ub is None else _num(v.ub)
        lines.append(f" {_num(v.lb)} <= {v.name} <= {ub}")
    gens = [v.name for v in model.variables.values() if v.kind == INTEGER]
    bins = [v.name for v in model.variables.values() if v.kind == BINARY]
    if gens:
        lines.append("Generals")
        lines += _wrapped("", gens)
    if bins:
        lines.append("Binaries")
        lines += _wrapped("", bins)
    lines.append("End")
    return "\n".join(lines) + "\n"


def export_milp(instance: Instance, path: str | Path, weights: WeightMap | None = None) -> ExportSummary:
    """Write the MILP for ``instance`` to ``path`` and return its size."""
    model = build_milp(instance, weights)
    Path(path).write_text(render_lp(model), encoding="utf-8")
    kinds = model.kind_counts()
    return ExportSummary(
        path=str(path),
        format="lp",
        binary=kinds[BINARY],
        integer=kinds[INTEGER],
        continuous=kinds[CONTINUOUS],
        constraints=len(model.constraints),
        families=dict(model.family_counts()),
    )
