"""Parameter sweeps over synthetic and trace-derived instances.

Every instance seed is derived from (seed base, sweep value index, instance
index), so a row can be regenerated on its own.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import Instance, weighted_completion
from .data import ContactLog, SyntheticConfig, estimate_lambdas, gen_synthetic, instance_for_workers, positive_normal
from .greedy import TieRule, lrf_schedule
from .lp_relax import solve_instance
from .oracle import brute_optimum
from .rounding import dis_schedule, mdis_schedule, ris_round
from .simplex import LpError

log = logging.getLogger(__name__)

CSV_FIELDS = ["param", "value", "algorithm", "mean_ratio", "stderr", "mean_wct", "mean_lp", "seed_base"]
ALGORITHMS = ("lrf", "mdis", "ris", "dis")
SWEEP_PARAMS = {
    "p": "p",
    "ratio": "ratio_nm",
    "workers": "m",
    "rst-mean": "rst_mean",
    "rst-std": "rst_std",
}
DEFAULT_VALUES = {
    "p": [0.2, 0.4, 0.6, 0.8, 1.0],
    "ratio": list(range(1, 11)),
    "workers": [5, 10, 15, 20, 25],
    "rst-mean": [5, 10, 15, 20, 25, 30, 35, 40, 45, 50],
    "rst-std": list(range(20, 40, 2)),
}


@dataclass
class SweepConfig:
    param: str
    values: list[float]
    instances: int = 100
    algorithms: tuple[str, ...] = ("lrf", "mdis", "ris")
    eta: float = 0.5
    seed_base: int = 0
    denominator: str = "lp"
    base: SyntheticConfig = field(default_factory=SyntheticConfig)
    lp_backend: str = "revised"

    def __post_init__(self):
        if self.param not in SWEEP_PARAMS and self.param != "dataset":
            raise ValueError(f"unknown sweep parameter {self.param!r}")
        if self.instances < 1:
            raise ValueError("instances per point must be at least 1")
        if not self.values:
            raise ValueError("sweep values must be nonempty")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithms {sorted(unknown)}")
        if self.denominator not in ("lp", "brute"):
            raise ValueError(f"denominator must be lp or brute, not {self.denominator!r}")

    def digest(self) -> str:
        blob = json.dumps(dataclasses.asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class SweepRow:
    param: str
    value: float
    algorithm: str
    mean_ratio: float
    stderr: float
    mean_wct: float
    mean_lp: float
    seed_base: int
    mean_runtime: float = 0.0
    failures: int = 0

    def csv_row(self) -> dict:
        return {"param": self.param, "value": f"{self.value:g}", "algorithm": self.algorithm,
                "mean_ratio": f"{self.mean_ratio:.10g}", "stderr": f"{self.stderr:.10g}",
                "mean_wct": f"{self.mean_wct:.10g}", "mean_lp": f"{self.mean_lp:.10g}",
                "seed_base": str(self.seed_base)}


@dataclass
class SweepResult:
    rows: list[SweepRow]
    ratios: dict[tuple[float, str], list[float]]  # per-instance ratios for statistics
    seed_base: int
    eta: float
    config_hash: str
    violations: list[str] = field(default_factory=list)

    def row(self, value: float, algorithm: str) -> SweepRow:
        return next(r for r in self.rows if r.value == value and r.algorithm == algorithm)

    def spread(self, value: float) -> float:
        means = [r.mean_ratio for r in self.rows if r.value == value]
        return max(means) - min(means)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
            writer.writeheader()
            for r in self.rows:
                writer.writerow(r.csv_row())


def instance_seed(seed_base: int, value_index: int, k: int) -> int:
    return int(np.random.SeedSequence([seed_base, value_index, k]).generate_state(1)[0])


def config_for(cfg: SweepConfig, value: float, seed: int) -> SyntheticConfig:
    base = cfg.base
    if cfg.param != "p":
        # only the weight sweep mixes in random weights; the rest use w = tau
        base = dataclasses.replace(base, p=1.0)
    field_name = SWEEP_PARAMS[cfg.param]
    if field_name in ("m", "ratio_nm"):
        value = int(value)
    return dataclasses.replace(base, **{field_name: value, "seed": seed})


def run_algorithms(inst: Instance, algorithms: Sequence[str], eta: float, seed: int,
                   denominator: str = "lp", lp_backend: str = "revised") -> dict:
    """WCT and runtime of each algorithm plus the ratio denominator."""
    out: dict = {"wct": {}, "time": {}}
    t0 = time.perf_counter()
    lpsol = solve_instance(inst, eta, backend=lp_backend)
    out["lp"] = lpsol.objective
    out["lp_time"] = time.perf_counter() - t0
    out["ref"] = brute_optimum(inst)[1] if denominator == "brute" else lpsol.objective
    runners: dict[str, Callable] = {
        "lrf": lambda: lrf_schedule(inst, TieRule.SMALLEST_INDEX),
        "mdis": lambda: mdis_schedule(inst, lpsol),
        "ris": lambda: ris_round(inst, lpsol, seed),
        "dis": lambda: dis_schedule(inst, lpsol),
    }
    for alg in algorithms:
        t0 = time.perf_counter()
        sched = runners[alg]()
        out["time"][alg] = time.perf_counter() - t0
        out["wct"][alg] = weighted_completion(inst, sched)
    return out


def _one(args):
    inst, algorithms, eta, seed, denominator, backend = args
    try:
        return run_algorithms(inst, algorithms, eta, seed, denominator, backend)
    except LpError as exc:
        return {"error": str(exc)}


def _aggregate(param, value, algorithms, results, seed_base, floor, violations) -> list[SweepRow]:
    good = [r for r in results if "error" not in r]
    failures = len(results) - len(good)
    rows = []
    for alg in algorithms:
        ratios = [r["wct"][alg] / r["ref"] for r in good]
        for q in ratios:
            if q < floor:
                violations.append(f"{param}={value:g} {alg}: ratio {q:.9f} below {floor}")
        k = len(ratios)
        mean = float(np.mean(ratios)) if k else math.nan
        se = float(np.std(ratios, ddof=1) / math.sqrt(k)) if k > 1 else 0.0
        rows.append(SweepRow(param, float(value), alg, mean, se,
                             float(np.mean([r["wct"][alg] for r in good])) if k else math.nan,
                             float(np.mean([r["lp"] for r in good])) if k else math.nan,
                             seed_base,
                             float(np.mean([r["time"][alg] for r in good])) if k else math.nan,
                             failures))
    return rows


def _ratio_floor(denominator: str) -> float:
    return 1 - 1e-9 if denominator == "brute" else 1 - 1e-6


def run_sweep(cfg: SweepConfig, jobs: int = 1) -> SweepResult:
    rows, ratios, violations = [], {}, []
    floor = _ratio_floor(cfg.denominator)
    pool = ProcessPoolExecutor(jobs) if jobs > 1 else None
    try:
        for vi, value in enumerate(cfg.values):
            tasks = []
            for k in range(cfg.instances):
                seed = instance_seed(cfg.seed_base, vi, k)
                inst = gen_synthetic(config_for(cfg, value, seed))
                tasks.append((inst, cfg.algorithms, cfg.eta, seed, cfg.denominator, cfg.lp_backend))
            results = list(pool.map(_one, tasks)) if pool else [_one(t) for t in tasks]
            for r in results:
                if "error" in r:
                    log.warning("%s=%g: solver failure: %s", cfg.param, value, r["error"])
            point = _aggregate(cfg.param, value, cfg.algorithms, results, cfg.seed_base, floor, violations)
            rows.extend(point)
            good = [r for r in results if "error" not in r]
            for alg in cfg.algorithms:
                ratios[(float(value), alg)] = [r["wct"][alg] / r["ref"] for r in good]
    finally:
        if pool:
            pool.shutdown()
    return SweepResult(rows, ratios, cfg.seed_base, cfg.eta, cfg.digest(), violations)


def run_trace_sweep(cfg: SweepConfig, logs: Sequence[tuple[ContactLog, str]], *, top_k: int = 128) -> SweepResult:
    """Sweep n/m over workers estimated from contact traces.

    ``logs`` pairs each parsed trace with one requester id. Per requester
    the workers are fixed; tasks are drawn as in the synthetic setting with
    w = tau. Ratios are averaged per requester first, then across
    requesters.
    """
    floor = _ratio_floor(cfg.denominator)
    violations: list[str] = []
    per_req = []
    for ri, (contact_log, requester) in enumerate(logs):
        workers = estimate_lambdas(contact_log, requester, top_k)
        if len(workers) < 2:
            log.warning("requester %s has %d worker(s); skipped", requester, len(workers))
            continue
        per_req.append((ri, workers))
    rows, ratios = [], {}
    for vi, value in enumerate(cfg.values):
        by_alg: dict[str, list[float]] = {a: [] for a in cfg.algorithms}
        wct: dict[str, list[float]] = {a: [] for a in cfg.algorithms}
        lp_means, failures = [], 0
        for ri, workers in per_req:
            results = []
            n = int(round(value * len(workers)))
            for k in range(cfg.instances):
                seed = instance_seed(cfg.seed_base, vi, ri * 1_000_003 + k)
                rng = np.random.default_rng(seed)
                rst = positive_normal(rng, cfg.base.rst_mean, cfg.base.rst_std, n)
                inst = instance_for_workers(workers, rst, rst)
                results.append(_one((inst, cfg.algorithms, cfg.eta, seed, cfg.denominator, cfg.lp_backend)))
            good = [r for r in results if "error" not in r]
            failures += len(results) - len(good)
            if not good:
                continue
            lp_means.append(np.mean([r["lp"] for r in good]))
            for alg in cfg.algorithms:
                qs = [r["wct"][alg] / r["ref"] for r in good]
                violations += [f"ratio={value:g} {alg}: ratio {q:.9f} below {floor}" for q in qs if q < floor]
                by_alg[alg].append(float(np.mean(qs)))
                wct[alg].append(float(np.mean([r["wct"][alg] for r in good])))
        for alg in cfg.algorithms:
            vals = by_alg[alg]
            k = len(vals)
            rows.append(SweepRow("dataset", float(value), alg,
                                 float(np.mean(vals)) if k else math.nan,
                                 float(np.std(vals, ddof=1) / math.sqrt(k)) if k > 1 else 0.0,
                                 float(np.mean(wct[alg])) if k else math.nan,
                                 float(np.mean(lp_means)) if k else math.nan,
                                 cfg.seed_base, failures=failures))
            ratios[(float(value), alg)] = vals
    return SweepResult(rows, ratios, cfg.seed_base, cfg.eta, cfg.digest(), violations)
