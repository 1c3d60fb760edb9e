"""Instance generators and the order-routing benchmark harness.

The benchmark builds a market network of ``n`` assets and
``m = round(n^2 / 4)`` constant-product markets over random asset pairs,
every market charging the same fixed fee ``q0``.  The trader maximizes
``c @ y`` (mu = 0) or ``c @ y - (mu / 2) * |y|^2`` of the net trade.

Distribution conventions (not dictated anywhere, so they are recorded in
the instance document's ``meta`` block): utility weights c are uniform on
[0.5, 1.5), reserves are log-uniform on [1, 100).

Randomness comes from the counter-based Philox 4x64 bit generator keyed
by the cell seed, so documents are reproducible bit for bit across runs
and platforms.
"""

from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import solver
from .model import (Edge, Instance, LinearUtility, QuadraticUtility,
                    ThresholdUtility)
from .sets import HalfLineEdge, ProductMarketEdge

RESERVE_RANGE = (1.0, 100.0)
WEIGHT_RANGE = (0.5, 1.5)
THREAD_ENV_VAR = "CONVEXFLOW_THREADS"

CSV_COLUMNS = ("n", "m", "mu", "q0", "seed", "dual_opt", "primal_heur",
               "rel_gap", "tie_count", "runtime_ms", "status")


@dataclass(frozen=True)
class BenchConfig:
    n: int
    mu: float = 0.0
    q0: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need at least two assets")
        if self.q0 < 0.0 or self.mu < 0.0:
            raise ValueError("mu and q0 must be nonnegative")

    @property
    def m(self) -> int:
        return max(1, round(self.n * self.n / 4))


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


def _draw_pairs(rng: np.random.Generator, n: int, m: int,
                max_attempts: int = 1000) -> list[tuple[int, int]]:
    for _ in range(max_attempts):
        pairs = []
        touched = np.zeros(n, dtype=bool)
        for _ in range(m):
            a = int(rng.integers(0, n))
            b = int(rng.integers(0, n - 1))
            if b >= a:
                b += 1
            pair = (a, b) if a < b else (b, a)
            pairs.append(pair)
            touched[[a, b]] = True
        if touched.all():
            return pairs
    raise RuntimeError("could not cover every node; raise m or n")


def gen_bench_instance(config: BenchConfig) -> Instance:
    """Random routing instance; identical seeds give identical documents."""
    rng = _rng(config.seed)
    c = WEIGHT_RANGE[0] + rng.random(config.n) * (WEIGHT_RANGE[1] - WEIGHT_RANGE[0])
    pairs = _draw_pairs(rng, config.n, config.m)
    log_hi = math.log(RESERVE_RANGE[1] / RESERVE_RANGE[0])
    edges = []
    for pair in pairs:
        reserves = RESERVE_RANGE[0] * np.exp(rng.random(2) * log_hi)
        edges.append(Edge(flow_set=ProductMarketEdge(reserves), nodes=pair,
                          fee=config.q0))
    if config.mu == 0.0:
        utility = LinearUtility(c)
    else:
        utility = QuadraticUtility(c, config.mu)
    return Instance(n=config.n, edges=tuple(edges), utility=utility)


def bench_meta(config: BenchConfig) -> dict:
    return {"generator": "routing_bench", "seed": config.seed, "n": config.n,
            "m": config.m, "mu": config.mu, "q0": config.q0,
            "weight_range": list(WEIGHT_RANGE), "reserve_range": list(RESERVE_RANGE),
            "rng": "philox4x64"}


def gen_knapsack_instance(weights: Sequence[int], target: int) -> Instance:
    """Single-node fixed-fee instance encoding subset sum.

    One half-line edge per item with supply and fee both equal to the
    item weight; the utility demands net flow at least the target, so the
    optimum is exactly -target when some subset of weights sums to it.
    """
    ws = [int(w) for w in weights]
    if any(w < 1 for w in ws):
        raise ValueError("weights must be positive integers")
    if int(target) < 0:
        raise ValueError("target must be nonnegative")
    edges = tuple(Edge(flow_set=HalfLineEdge(float(w)), nodes=(0,), fee=float(w))
                  for w in ws)
    return Instance(n=1, edges=edges, utility=ThresholdUtility(float(int(target))))


@dataclass
class ReportRow:
    n: int
    m: int
    mu: float
    q0: float
    seed: int
    dual_opt: float
    primal_heur: float
    rel_gap: float
    tie_count: int
    runtime_ms: float
    status: str = "ok"

    def as_csv(self) -> list[str]:
        def fmt(v: float) -> str:
            return "nan" if not math.isfinite(v) else f"{v:.10g}"

        return [str(self.n), str(self.m), fmt(self.mu), fmt(self.q0),
                str(self.seed), fmt(self.dual_opt), fmt(self.primal_heur),
                fmt(self.rel_gap), str(self.tie_count), fmt(self.runtime_ms),
                self.status]


def grid_configs(ns: Iterable[int], mus: Iterable[float], q0s: Iterable[float],
                 seeds: Iterable[int]) -> list[BenchConfig]:
    """All grid cells in sweep order: n, then mu, then q0, then seed."""
    return [BenchConfig(n=n, mu=mu, q0=q0, seed=seed)
            for n in ns for mu in mus for q0 in q0s for seed in seeds]


def run_cell(config: BenchConfig, opts: solver.SolverOptions | None = None) -> ReportRow:
    instance = gen_bench_instance(config)
    started = time.perf_counter()
    try:
        report = solver.solve(instance, opts)
    except Exception as exc:  # keep the sweep alive; the row records the failure
        return ReportRow(n=config.n, m=config.m, mu=config.mu, q0=config.q0,
                         seed=config.seed, dual_opt=math.nan, primal_heur=math.nan,
                         rel_gap=math.nan, tie_count=0,
                         runtime_ms=(time.perf_counter() - started) * 1e3,
                         status=f"failed:{type(exc).__name__}")
    status = "ok" if report.converged else "nonconverged"
    return ReportRow(n=config.n, m=config.m, mu=config.mu, q0=config.q0,
                     seed=config.seed, dual_opt=report.dual_value,
                     primal_heur=report.primal_value, rel_gap=report.rel_gap,
                     tie_count=report.tie_count, runtime_ms=report.runtime_ms,
                     status=status)


def _pool_size() -> int:
    env = os.environ.get(THREAD_ENV_VAR)
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def run_bench(configs: Sequence[BenchConfig], csv_path: str | None = None,
              opts: solver.SolverOptions | None = None) -> list[ReportRow]:
    """Run every grid cell (in a thread pool) and assemble rows in grid order."""
    workers = _pool_size()
    if workers == 1 or len(configs) == 1:
        rows = [run_cell(cfg, opts) for cfg in configs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda cfg: run_cell(cfg, opts), configs))
    if csv_path is not None:
        write_csv(rows, csv_path)
    return rows


def write_csv(rows: Sequence[ReportRow], path: str):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow(row.as_csv())


def read_csv(path: str) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))
