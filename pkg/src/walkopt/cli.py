"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 infeasible or size limit.
Set ``WALKOPT_LOG_LEVEL`` (e.g. ``INFO``) for log output.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from walkopt.errors import (
    EnumerationLimitError,
    InfeasibleAllocationError,
    WalkOptError,
)
from walkopt.exact import DEFAULT_LIMIT, exact_solve
from walkopt.experiments import (
    single_choice,
    sweep_k,
    walk_time_histogram,
    write_hist_csv,
    write_summary_json,
    write_sweep_csv,
)
from walkopt.export import export_cp, export_milp, import_solution
from walkopt.geo import build_instance, load_geojson
from walkopt.greedy import greedy_solve
from walkopt.instance import (
    WALKSCORE_CURVE,
    Allocation,
    AmenityTypeSpec,
    read_instance,
    rounded_weights,
    validate_instance,
    write_instance,
)
from walkopt.presets import counterexample_instance, counterexample_sets, preset_specs
from walkopt.scoring import EvalState, objective
from walkopt.synthetic import random_instance

EXIT_USAGE, EXIT_DATA, EXIT_INFEASIBLE = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load(path):
    inst = read_instance(path)
    problems = validate_instance(inst)
    if problems:
        for v in problems:
            print(f"invalid instance: {v.code} at {v.path}: {v.message}", file=sys.stderr)
        raise SystemExit(EXIT_DATA)
    return inst.canonical()


def _write_json(doc, path):
    text = json.dumps(doc, indent=1)
    if path:
        Path(path).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def cmd_ingest(args):
    graph, layer = load_geojson(args.network, *args.points)
    if args.spec:
        doc = json.loads(Path(args.spec).read_text(encoding="utf-8"))
        specs = [AmenityTypeSpec(t["id"], t.get("name", ""), tuple(t["raw_weights"]), t.get("budget", args.k))
                 for t in doc]
    else:
        specs = preset_specs(args.preset, args.k)
    inst, rep = build_instance(graph, layer, specs, WALKSCORE_CURVE, args.d_infinity,
                               name=args.name or Path(args.out).stem)
    write_instance(inst, args.out)
    print(f"residents={inst.n_residents} candidates={inst.n_candidates} "
          f"existing={sum(len(v) for v in inst.existing.values())} "
          f"far_points={len(rep.snap.far)} isolated_nodes={rep.isolated_nodes} "
          f"dropped_segments={rep.dropped_segments}")
    return 0


def _read_allocation(path) -> Allocation:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    rows = doc["allocation"] if isinstance(doc, dict) else doc
    return Allocation.from_list(rows)


def cmd_score(args):
    inst = _load(args.instance)
    alloc = _read_allocation(args.allocation) if args.allocation else Allocation()
    weights = rounded_weights(inst.amenity_specs, args.round_weights) if args.round_weights is not None else None
    F, bd = objective(inst, alloc, weights)
    print(f"F = {F:.2f}")
    if args.out or args.breakdown:
        _write_json(bd.to_dict(), args.out)
    return 0


def cmd_solve(args):
    inst = _load(args.instance)
    if args.scenario == "single":
        inst = single_choice(inst)
    if args.k is not None:
        inst = inst.with_budgets(args.k)
    if args.method == "exact":
        report = exact_solve(inst, limit=args.limit, workers=args.threads)
    else:
        report = greedy_solve(inst, lazy=args.lazy)
    _write_json(report.to_dict(), args.out)
    if args.iterations_csv:
        Path(args.iterations_csv).write_text(report.iterations_csv(), encoding="utf-8")
    print(f"{report.method}: F = {report.objective:.4f} placements={len(report.allocation)} "
          f"time={report.wall_time:.3f}s", file=sys.stderr)
    return 0


def cmd_export(args):
    inst = _load(args.instance)
    if args.format == "lp":
        s = export_milp(inst, args.out)
        print(f"wrote {s.path}: binary={s.binary} integer={s.integer} "
              f"continuous={s.continuous} constraints={s.constraints}")
    else:
        s = export_cp(inst, args.out)
        print(f"wrote {s.path}: discrete={s.discrete} continuous={s.continuous}")
    return 0


def cmd_import(args):
    inst = _load(args.instance)
    res = import_solution(inst, args.sol, model=args.model)
    print(f"re-evaluated F = {res.reevaluated:.6f}")
    if res.reported is not None:
        print(f"reported F = {res.reported:.6f}  |delta| = {res.delta:.3g}")
    _write_json({"allocation": res.allocation.to_list(), "reported": res.reported,
                 "reevaluated": res.reevaluated, "delta": res.delta}, args.out)
    return 0


def cmd_sweep(args):
    inst = _load(args.instance)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = sweep_k(inst, range(args.k_max + 1), args.scenario, args.method)
    base = single_choice(inst) if args.scenario == "single" else inst
    bds = []
    for r in rows:
        if r.k == args.k_max:
            solved = (exact_solve if r.method == "exact" else greedy_solve)(base.with_budgets(r.k))
            bds.append(objective(base.with_budgets(r.k), solved.allocation)[1])
    hists = walk_time_histogram(bds, args.bin_minutes)
    write_sweep_csv(rows, out / "sweep.csv")
    write_hist_csv(hists, out / "hist.csv")
    write_summary_json(out / "summary.json", rows, hists)
    for r in rows:
        print(f"k={r.k} F={r.objective:.4f}")
    return 0


def selftest() -> bool:
    inst = counterexample_instance()
    w = rounded_weights(inst.amenity_specs, 2)
    sets = counterexample_sets()
    l, f = {}, {}
    for key, alloc in sets.items():
        F, bd = objective(inst, alloc, w)
        l[key], f[key] = float(bd.weighted[0]), F
    d_s, d_t = f["S+e"] - f["S"], f["T+e"] - f["T"]
    expect_l = {"S": 1950.0, "T": 1938.0, "S+e": 1746.11, "T+e": 1734.11}
    expect_f = {"S": 7.5, "T": 7.7, "S+e": 13.27, "T+e": 14.00}
    ok = all(abs(l[k] - expect_l[k]) <= 0.01 and abs(f[k] - expect_f[k]) <= 0.01 for k in sets)
    ok &= abs(d_s - 5.77) <= 0.01 and abs(d_t - 6.30) <= 0.01 and d_s < d_t

    state = EvalState(inst, w)
    for _, node in sets["S"].pairs():
        state.commit(1, inst.candidate_index[node])
    ok &= abs(state.marginal_gain(1, inst.candidate_index[7]) - d_s) <= 1e-9

    for k in sets:
        print(f"{k:4s} l = {l[k]:8.2f}  f = {f[k]:6.2f}")
    print(f"Δ(e|S)={d_s:.2f}, Δ(e|T)={d_t:.2f}, {'PASS' if ok else 'FAIL'}")
    return bool(ok)


def cmd_selftest(args):
    return 0 if selftest() else 1


def cmd_generate(args):
    rng = np.random.default_rng(args.seed)
    inst = random_instance(rng, args.residents, args.candidates, args.options, args.k,
                           max_capacity=args.max_capacity)
    write_instance(inst, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="walkopt", description="Walkability-driven amenity allocation")
    p.add_argument("--threads", type=int, default=1, help="worker processes for exact enumeration")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("ingest", help="build an instance from GeoJSON")
    s.add_argument("--network", required=True)
    s.add_argument("--points", required=True, nargs="+")
    s.add_argument("--preset", default="toronto3")
    s.add_argument("--spec", help="JSON list of amenity types; overrides --preset")
    s.add_argument("--k", type=int, default=0, help="budget per amenity type")
    s.add_argument("--d-infinity", type=float, default=2400.0)
    s.add_argument("--name")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("score", help="print the objective of an allocation")
    s.add_argument("--instance", required=True)
    s.add_argument("--allocation")
    s.add_argument("--round-weights", type=int, metavar="DECIMALS")
    s.add_argument("--breakdown", action="store_true", help="print the per-resident breakdown")
    s.add_argument("--out")
    s.set_defaults(func=cmd_score)

    s = sub.add_parser("solve", help="run the greedy or exact solver")
    s.add_argument("--instance", required=True)
    s.add_argument("--method", choices=["greedy", "exact"], default="greedy")
    s.add_argument("--scenario", choices=["single", "multi"], default="multi")
    s.add_argument("--k", type=int)
    s.add_argument("--lazy", action="store_true")
    s.add_argument("--limit", type=int, default=DEFAULT_LIMIT)
    s.add_argument("--iterations-csv")
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("export", help="write the MILP (LP format) or CP (MiniZinc) model")
    s.add_argument("--instance", required=True)
    s.add_argument("--format", choices=["lp", "mzn"], required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_export)

    s = sub.add_parser("import-solution", help="re-score an external solver solution")
    s.add_argument("--instance", required=True)
    s.add_argument("--model")
    s.add_argument("--sol", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_import)

    s = sub.add_parser("sweep", help="objective and distances for k = 0..k-max")
    s.add_argument("--instance", required=True)
    s.add_argument("--k-max", type=int, required=True)
    s.add_argument("--scenario", choices=["single", "multi"], default="multi")
    s.add_argument("--method", choices=["greedy", "exact", "auto"], default="greedy")
    s.add_argument("--bin-minutes", type=float, default=5.0)
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("selftest", help="check the depth-of-choice counter-example")
    s.set_defaults(func=cmd_selftest)

    s = sub.add_parser("generate", help="write a random desk-scale instance")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--residents", type=int, default=8)
    s.add_argument("--candidates", type=int, default=6)
    s.add_argument("--options", type=int, nargs="+", default=[1, 3, 1])
    s.add_argument("--k", type=int, default=1)
    s.add_argument("--max-capacity", type=int, default=2)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_generate)
    return p


def main(argv=None) -> int:
    level = os.environ.get("WALKOPT_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except EnumerationLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except InfeasibleAllocationError as exc:
        print(f"error: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (WalkOptError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
