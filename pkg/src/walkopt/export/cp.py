"""Index-based constraint model rendered as MiniZinc source.

Columns of the distance array are numbered from 1: candidates ``1..NM`` then
existing amenities. ``y_a[k]`` is the column of the k-th new instance of type
``a`` or ``DUMMY`` (0) when it is not placed; the dummy has no capacity limit
and no distance row, so residents can never use it. Depth options may take
the extra value ``NONE`` (distance ``DINF``), which stands for an option left
unavailable because fewer instances exist than options are scored.

The output block prints ``y_{j}_{a} <count>`` lines with 0-based candidate
columns, the same names the LP export uses, so either solution can be read
back with :func:`walkopt.export.solution.import_solution`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from walkopt.export.milp import ExportSummary
from walkopt.instance import Instance
from walkopt.scoring import WeightMap, resolve_weights

DUMMY = 0


@dataclass
class CpModelText:
    source: str
    discrete: int
    continuous: int
    dummy: int = DUMMY
    meta: dict = field(default_factory=dict)


def _f(x: float) -> str:
    x = float(x)
    return repr(x) if not x.is_integer() else f"{x:.1f}"


def _set(cols) -> str:
    return "{" + ", ".join(str(c) for c in cols) + "}"


def _pwl_expr(var: str, instance: Instance) -> str:
    bps = instance.curve.breakpoints
    parts = []
    for (d0, s0), (d1, s1) in zip(bps, bps[1:]):
        slope = (s1 - s0) / (d1 - d0)
        parts.append(f"if {var} <= {_f(d1)} then {_f(s0)} + ({_f(slope)}) * ({var} - {_f(d0)})")
    return " else ".join(parts) + f" else {_f(bps[-1][1])}" + " endif" * len(parts)


def build_cp(instance: Instance, weights: WeightMap | None = None) -> CpModelText:
    instance = instance.canonical()
    n, m = instance.n_residents, instance.n_candidates
    if n == 0:
        raise ValueError("constraint model needs at least one resident")
    w = resolve_weights(instance, weights)
    d_inf = instance.d_infinity
    D = np.minimum(instance.dist, d_inf)
    nc = instance.n_columns

    out = [
        f"% walkopt constraint model: {instance.name}",
        'include "globals.mzn";',
        "",
        f"int: NR = {n};",
        f"int: NM = {m};",
        f"int: NC = {nc};",
        f"int: DUMMY = {DUMMY};",
        "int: NONE = NC + 1;",
        f"float: DINF = {_f(d_inf)};",
        "% column NONE carries DINF for unavailable depth options",
        "array[1..NR, 1..NC + 1] of float: d = [|"
        + " |".join(" " + ", ".join(_f(v) for v in list(row) + [d_inf]) for row in D)
        + " |];",
        f"array[1..NM] of int: cap = [{', '.join(str(c) for c in instance.capacities)}];",
        "",
    ]

    discrete = 0
    continuous = 0
    y_arrays = []
    l_terms = {}
    const = 0.0

    for s in instance.amenity_specs:
        a, k = s.id, s.budget
        ex = [int(c) + 1 for c in instance.existing_columns.get(a, ())]
        kind = f"depth, {s.options} options" if s.is_depth else "plain"
        out.append(f"% type {a} ({s.name}): {kind}, budget {k}")
        out.append(f"set of int: L_{a} = {_set(ex)};")
        if k > 0:
            out.append(f"array[1..{k}] of var 0..NM: y_{a};")
            out.append(f"constraint forall(k1, k2 in 1..{k} where k1 < k2)(y_{a}[k1] <= y_{a}[k2]);")
            y_arrays.append(f"y_{a}")
            discrete += k
        if not s.is_depth:
            mins = ["[DINF]"]
            if k > 0:
                out.append(f"array[1..NR, 1..{k}] of var 0.0..DINF: z_{a};")
                out.append(
                    f"constraint forall(i in 1..NR, k in 1..{k})("
                    f"z_{a}[i, k] = if y_{a}[k] = DUMMY then DINF else d[i, y_{a}[k]] endif);"
                )
                mins.append(f"[z_{a}[i, k] | k in 1..{k}]")
                continuous += n * k
            if ex:
                mins.append(f"[d[i, j] | j in L_{a}]")
            l_terms[a] = f"{_f(w[a][0])} * min({' ++ '.join(mins)})"
            out.append("")
            continue

        P = instance.available(a)
        const += d_inf * float(w[a][P:].sum())
        if P == 0:
            out.append("")
            continue
        dom = f"1..NM union L_{a} union {{NONE}}" if k > 0 else f"L_{a} union {{NONE}}"
        out.append(f"set of int: X_{a} = {dom};")
        out.append(f"array[1..NR, 1..{P}] of var X_{a}: x_{a};")
        out.append(f"array[1..NR, 1..{P}] of var 0.0..DINF: zp_{a};")
        out.append(f"constraint forall(i in 1..NR, p in 1..{P})(zp_{a}[i, p] = d[i, x_{a}[i, p]]);")
        out.append(
            f"constraint forall(i in 1..NR, j in L_{a})(count([x_{a}[i, p] | p in 1..{P}], j) <= 1);"
        )
        if k > 0:
            out.append(
                f"constraint forall(i in 1..NR, j in 1..NM)("
                f"count([x_{a}[i, p] | p in 1..{P}], j) <= count(y_{a}, j));"
            )
            out.append(
                f"constraint forall(j in 1..NM)("
                f"exists(i in 1..NR, p in 1..{P})(x_{a}[i, p] = j) -> exists(k in 1..{k})(y_{a}[k] = j));"
            )
        out.append(f"array[1..{P}] of float: w_{a} = [{', '.join(_f(v) for v in w[a][:P])}];")
        l_terms[a] = f"sum(p in 1..{P})(w_{a}[p] * zp_{a}[i, p])"
        discrete += n * P
        continuous += n * P
        out.append("")

    if y_arrays:
        out.append(f"array[int] of var 0..NM: Y = {' ++ '.join(y_arrays)};")
        out.append("constraint forall(j in 1..NM)(count(Y, j) <= cap[j]);")
        out.append("")

    terms = [l_terms[a] for a in sorted(l_terms)] + [_f(const)]
    out.append("array[1..NR] of var float: l;")
    out.append(f"constraint forall(i in 1..NR)(l[i] = {' + '.join(terms)});")
    out.append("array[1..NR] of var 0.0..100.0: f;")
    out.append(f"constraint forall(i in 1..NR)(f[i] = {_pwl_expr('l[i]', instance)});")
    out.append("var float: F = sum(f) / NR;")
    out.append("solve maximize F;")
    continuous += 2 * n + 1

    show = []
    for s in instance.amenity_specs:
        if s.budget > 0:
            cnt = f"sum(k in 1..{s.budget})(bool2int(fix(y_{s.id}[k]) = j))"
        else:
            cnt = "0"
        show.append(f'["y_\\(j - 1)_{s.id} \\({cnt})\\n" | j in 1..NM]')
    show.append('["# Objective value = \\(F)\\n"]')
    out.append("output " + " ++ ".join(show) + ";")

    return CpModelText(
        source="\n".join(out) + "\n",
        discrete=discrete,
        continuous=continuous,
        meta={"residents": n, "candidates": m, "columns": nc, "none_column": nc + 1},
    )


def export_cp(instance: Instance, path: str | Path, weights: WeightMap | None = None) -> ExportSummary:
    model = build_cp(instance, weights)
    Path(path).write_text(model.source, encoding="utf-8")
    return ExportSummary(
        path=str(path),
        format="mzn",
        integer=model.discrete,
        continuous=model.continuous,
        families={"dummy": model.dummy},
    )
