"""Command-line front end.

Commands: ``generate`` and ``knapsack`` write instance documents,
``solve`` runs the dual solver on a document, ``round`` rounds a solution
document into the fixed-fee feasible set, and ``bench`` sweeps the
order-routing grid into a CSV.

Exit codes: 0 success, 2 invalid input, 3 solver non-convergence (the
best-effort solution is still written).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import bench, fees, model, solver
from .errors import ConvexFlowError


def _write_json(doc: dict, path: str | None):
    text = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    if path is None:
        print(text)
    else:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text + "\n")


def _load_instance(path: str) -> model.Instance:
    with open(path, encoding="utf-8") as handle:
        return model.loads(handle.read())


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _cmd_generate(args) -> int:
    config = bench.BenchConfig(n=args.n, mu=args.mu, q0=args.q0, seed=args.seed)
    instance = bench.gen_bench_instance(config)
    _write_json(model.to_document(instance, meta=bench.bench_meta(config)), args.out)
    return 0


def _cmd_knapsack(args) -> int:
    instance = bench.gen_knapsack_instance(_ints(args.c), args.b)
    meta = {"generator": "knapsack", "c": _ints(args.c), "b": args.b}
    _write_json(model.to_document(instance, meta=meta), args.out)
    return 0


def _solver_options(args) -> solver.SolverOptions:
    opts = solver.SolverOptions()
    if getattr(args, "tol", None) is not None:
        opts.grad_tol = args.tol
    if getattr(args, "max_iter", None) is not None:
        opts.max_iter = args.max_iter
    return opts


def _cmd_solve(args) -> int:
    instance = _load_instance(args.input)
    report = solver.solve(instance, _solver_options(args))
    _write_json(solver.report_to_document(report), args.out)
    return 0 if report.converged else 3


def _cmd_round(args) -> int:
    instance = _load_instance(args.input)
    with open(args.solution, encoding="utf-8") as handle:
        doc = json.load(handle)
    points = [(np.asarray(e["x"], dtype=float), float(e["lambda"]))
              for e in doc["edges"]]
    rounded = fees.round_relaxation(instance, points)
    _write_json({
        "objective": rounded.objective,
        "fee_delta": rounded.fee_delta,
        "y": [float(v) for v in rounded.y_hat],
        "edges": [{"x": [float(v) for v in x], "lambda": float(lam)}
                  for x, lam in zip(rounded.flows, rounded.activations)],
    }, args.out)
    return 0


def _cmd_bench(args) -> int:
    seeds = range(args.seeds) if args.seed is None else [args.seed]
    configs = bench.grid_configs(_ints(args.n), _floats(args.mu),
                                 _floats(args.q0), seeds)
    rows = bench.run_bench(configs, csv_path=args.csv, opts=_solver_options(args))
    bad = [row for row in rows if row.status != "ok"]
    if bad:
        print(f"{len(bad)} of {len(rows)} cells did not converge", file=sys.stderr)
        return 3
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="convexflow",
                                     description="Convex network flow toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a routing benchmark instance")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--mu", type=float, default=0.0)
    gen.add_argument("--q0", type=float, default=0.01)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", default=None)
    gen.set_defaults(func=_cmd_generate)

    knap = sub.add_parser("knapsack", help="write a knapsack reduction instance")
    knap.add_argument("--c", required=True, help="comma-separated item weights")
    knap.add_argument("--b", type=int, required=True, help="target sum")
    knap.add_argument("--out", default=None)
    knap.set_defaults(func=_cmd_knapsack)

    slv = sub.add_parser("solve", help="solve an instance document")
    slv.add_argument("--input", required=True)
    slv.add_argument("--tol", type=float, default=None)
    slv.add_argument("--max-iter", type=int, default=None)
    slv.add_argument("--out", default=None)
    slv.set_defaults(func=_cmd_solve)

    rnd = sub.add_parser("round", help="round a relaxation solution into the fee set")
    rnd.add_argument("--input", required=True, help="instance document")
    rnd.add_argument("--solution", required=True, help="solution document")
    rnd.add_argument("--out", default=None)
    rnd.set_defaults(func=_cmd_round)

    bch = sub.add_parser("bench", help="sweep the routing grid into a CSV")
    bch.add_argument("--n", default="10,17,28", help="comma-separated node counts")
    bch.add_argument("--mu", default="0,0.01", help="comma-separated risk aversions")
    bch.add_argument("--q0", default="0.01,1.0", help="comma-separated fee levels")
    bch.add_argument("--seeds", type=int, default=1, help="seeds 0..k-1 per cell")
    bch.add_argument("--seed", type=int, default=None, help="run one seed only")
    bch.add_argument("--tol", type=float, default=None)
    bch.add_argument("--max-iter", type=int, default=None)
    bch.add_argument("--csv", required=True)
    bch.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConvexFlowError, FileNotFoundError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
