"""Minimal CPLEX LP-format reader used to validate exported models.

Independent of walkopt's writer: it knows the LP grammar, not the model. It
raises LPSyntaxError on anything outside the subset below and returns the
parsed model otherwise.

    file     := [objsense objective] [constraints] [bounds] [generals] [binaries] End
    objsense := Maximize | Maximum | Max | Minimize | Minimum | Min
    row      := [name ':'] expr sense number
    expr     := term { ('+'|'-') term }     term := [number] name
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

SECTIONS = {
    "maximize": "max", "maximum": "max", "max": "max",
    "minimize": "min", "minimum": "min", "min": "min",
    "subject to": "st", "such that": "st", "st": "st", "s.t.": "st",
    "bounds": "bounds", "bound": "bounds",
    "generals": "gen", "general": "gen", "gen": "gen",
    "binaries": "bin", "binary": "bin", "bin": "bin",
    "end": "end",
}
ORDER = ["max", "st", "bounds", "gen", "bin", "end"]

NAME_FIRST = r"A-Za-z!\"#$%&()/,;?@_`'{}|~"
NAME_RE = re.compile(rf"[{NAME_FIRST}][{NAME_FIRST}0-9.]*")
NUM_RE = re.compile(r"[0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?|[0-9]+\.")
TOKEN_RE = re.compile(
    rf"\s*(?:(?P<sense><=|>=|=<|=>|<|>|=)|(?P<colon>:)|(?P<sign>[+-])"
    rf"|(?P<num>{NUM_RE.pattern})(?![A-Za-z_])|(?P<inf>[+-]?inf(?:inity)?\b)|(?P<name>{NAME_RE.pattern}))",
    re.IGNORECASE,
)


class LPSyntaxError(ValueError):
    pass


@dataclass
class Row:
    name: str
    coeffs: dict[str, float]
    sense: str
    rhs: float


@dataclass
class LPModel:
    sense: str = "max"
    objective: dict[str, float] = field(default_factory=dict)
    rows: list[Row] = field(default_factory=list)
    bounds: dict[str, tuple[float, float]] = field(default_factory=dict)
    generals: list[str] = field(default_factory=list)
    binaries: list[str] = field(default_factory=list)

    @property
    def variables(self) -> set[str]:
        names = set(self.objective) | set(self.bounds) | set(self.generals) | set(self.binaries)
        for r in self.rows:
            names |= set(r.coeffs)
        return names


def _tokens(text: str, where: str):
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            raise LPSyntaxError(f"{where}: cannot tokenize near {text[pos:pos + 30]!r}")
        kind = m.lastgroup
        val = m.group(kind)
        if kind == "name" and re.match(r"[eE][0-9eE]", val):
            raise LPSyntaxError(f"{where}: name {val!r} looks like an exponent")
        out.append((kind, val))
        pos = m.end()
    return out


def _norm_sense(s: str) -> str:
    return {"<": "<=", "=<": "<=", ">": ">=", "=>": ">="}.get(s, s)


def _expr(toks, i, where):
    coeffs: dict[str, float] = {}
    sign, coef, expect_term = 1.0, None, True
    dangling = False
    while i < len(toks) and toks[i][0] in ("sign", "num", "name"):
        kind, val = toks[i]
        if kind == "sign":
            if coef is not None:
                raise LPSyntaxError(f"{where}: dangling coefficient")
            sign = sign * (-1.0 if val == "-" else 1.0)
            expect_term, dangling = True, True
        elif kind == "num":
            if coef is not None:
                raise LPSyntaxError(f"{where}: two numbers in a row")
            if not expect_term:
                break
            coef = float(val)
        else:
            if not expect_term:
                raise LPSyntaxError(f"{where}: missing operator before {val!r}")
            coeffs[val] = coeffs.get(val, 0.0) + sign * (1.0 if coef is None else coef)
            sign, coef, expect_term, dangling = 1.0, None, False, False
        i += 1
    if coef is not None:
        i -= 1  # a trailing number belongs to the caller (rhs)
        if toks[i - 1][0] == "sign":
            i -= 1
    elif dangling:
        raise LPSyntaxError(f"{where}: operator without a following term")
    return coeffs, i


def _number(toks, i, where):
    sign = 1.0
    if i < len(toks) and toks[i][0] == "sign":
        sign = -1.0 if toks[i][1] == "-" else 1.0
        i += 1
    if i >= len(toks):
        raise LPSyntaxError(f"{where}: expected a number")
    kind, val = toks[i]
    if kind == "num":
        return sign * float(val), i + 1
    if kind == "inf":
        return sign * (float("-inf") if val.startswith("-") else float("inf")), i + 1
    raise LPSyntaxError(f"{where}: expected a number, got {val!r}")


def _rows(text: str, where: str) -> list[Row]:
    toks = _tokens(text, where)
    rows, i, k = [], 0, 0
    while i < len(toks):
        name = f"R{k}"
        if i + 1 < len(toks) and toks[i][0] == "name" and toks[i + 1][0] == "colon":
            name, i = toks[i][1], i + 2
        coeffs, i = _expr(toks, i, f"{where} {name}")
        if not coeffs:
            raise LPSyntaxError(f"{where} {name}: empty left-hand side")
        if i >= len(toks) or toks[i][0] != "sense":
            raise LPSyntaxError(f"{where} {name}: missing comparison operator")
        sense = _norm_sense(toks[i][1])
        rhs, i = _number(toks, i + 1, f"{where} {name}")
        rows.append(Row(name, coeffs, sense, rhs))
        k += 1
    return rows


def _bounds(lines: list[str], model: LPModel):
    for line in lines:
        toks = _tokens(line, "bounds")
        kinds = [t[0] for t in toks]
        vals = [t[1] for t in toks]
        if len(toks) == 2 and kinds[0] == "name" and vals[1].lower() == "free":
            model.bounds[vals[0]] = (float("-inf"), float("inf"))
            continue
        names = [k for k, kind in enumerate(kinds) if kind == "name"]
        if len(names) != 1:
            raise LPSyntaxError(f"bounds: cannot read {line!r}")
        v = vals[names[0]]
        lo, hi = model.bounds.get(v, (0.0, float("inf")))
        if names[0] == 0:
            if len(toks) < 3 or kinds[1] != "sense":
                raise LPSyntaxError(f"bounds: cannot read {line!r}")
            num, end = _number(toks, 2, "bounds")
            s = _norm_sense(vals[1])
            lo, hi = (lo, num) if s == "<=" else (num, hi) if s == ">=" else (num, num)
        else:
            num, j = _number(toks, 0, "bounds")
            if j != names[0] - 1 or kinds[j] != "sense":
                raise LPSyntaxError(f"bounds: cannot read {line!r}")
            s = _norm_sense(vals[j])
            lo, hi = (num, hi) if s == "<=" else (lo, num) if s == ">=" else (num, num)
            end = names[0] + 1
            if end < len(toks):
                if kinds[end] != "sense":
                    raise LPSyntaxError(f"bounds: cannot read {line!r}")
                num2, end = _number(toks, end + 1, "bounds")
                s2 = _norm_sense(vals[names[0] + 1])
                lo, hi = (lo, num2) if s2 == "<=" else (num2, hi)
        if end != len(toks):
            raise LPSyntaxError(f"bounds: trailing tokens in {line!r}")
        model.bounds[v] = (lo, hi)


def parse_lp(text: str) -> LPModel:
    model = LPModel()
    chunks: dict[str, list[str]] = {}
    current = None
    seen = []
    for raw in text.splitlines():
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        key = SECTIONS.get(line.lower())
        if key is not None:
            if key == "min":
                model.sense = "min"
                key = "max"
            if seen and ORDER.index(key) <= ORDER.index(seen[-1]):
                raise LPSyntaxError(f"section {line!r} out of order")
            seen.append(key)
            current = key
            chunks[key] = []
            if key == "end":
                break
            continue
        if current is None:
            raise LPSyntaxError(f"text before the first section: {line!r}")
        if current == "end":
            raise LPSyntaxError("text after End")
        chunks[current].append(line)
    if not seen or seen[-1] != "end":
        raise LPSyntaxError("missing End")
    if "max" not in chunks:
        raise LPSyntaxError("missing objective section")

    obj_toks = _tokens(" ".join(chunks["max"]), "objective")
    if len(obj_toks) >= 2 and obj_toks[0][0] == "name" and obj_toks[1][0] == "colon":
        obj_toks = obj_toks[2:]
    coeffs, i = _expr(obj_toks, 0, "objective")
    if i != len(obj_toks):
        raise LPSyntaxError("objective: trailing tokens")
    model.objective = coeffs

    model.rows = _rows(" ".join(chunks.get("st", [])), "constraint")
    names = [r.name for r in model.rows]
    if len(set(names)) != len(names):
        raise LPSyntaxError("duplicate constraint names")
    _bounds(chunks.get("bounds", []), model)
    for key, target in (("gen", model.generals), ("bin", model.binaries)):
        for tok_kind, val in _tokens(" ".join(chunks.get(key, [])), key):
            if tok_kind != "name":
                raise LPSyntaxError(f"{key}: unexpected token {val!r}")
            target.append(val)
    if set(model.generals) & set(model.binaries):
        raise LPSyntaxError("variable declared both general and binary")
    return model


def solve_with_highs(model: LPModel):
    """Solve a parsed model with scipy's HiGHS MILP; returns (objective, values)."""
    import numpy as np
    from scipy.optimize import Bounds, LinearConstraint, milp
    from scipy.sparse import lil_matrix

    names = sorted(model.variables)
    idx = {v: k for k, v in enumerate(names)}
    n = len(names)
    sign = -1.0 if model.sense == "max" else 1.0
    c = np.zeros(n)
    for v, a in model.objective.items():
        c[idx[v]] = sign * a
    A = lil_matrix((len(model.rows), n))
    lo = np.full(len(model.rows), -np.inf)
    hi = np.full(len(model.rows), np.inf)
    for r, row in enumerate(model.rows):
        for v, a in row.coeffs.items():
            A[r, idx[v]] = a
        if row.sense in ("<=", "="):
            hi[r] = row.rhs
        if row.sense in (">=", "="):
            lo[r] = row.rhs
    lb = np.zeros(n)
    ub = np.full(n, np.inf)
    integrality = np.zeros(n)
    for v, (a, b) in model.bounds.items():
        lb[idx[v]], ub[idx[v]] = a, b
    for v in model.generals:
        integrality[idx[v]] = 1
    for v in model.binaries:
        integrality[idx[v]] = 1
        lb[idx[v]], ub[idx[v]] = max(lb[idx[v]], 0.0), min(ub[idx[v]], 1.0)
    cons = [LinearConstraint(A.tocsr(), lo, hi)] if model.rows else []
    res = milp(c, constraints=cons, integrality=integrality, bounds=Bounds(lb, ub),
               options={"mip_rel_gap": 1e-10})
    if res.status != 0:
        raise RuntimeError(f"HiGHS failed: {res.message}")
    return sign * res.fun, dict(zip(names, res.x))
