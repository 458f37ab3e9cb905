"""``msn-sched`` command line."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .bench import ALGORITHMS, DEFAULT_VALUES, SweepConfig, run_sweep, run_trace_sweep
from .core import Instance, weighted_completion
from .data import SyntheticConfig, estimate_lambdas, gen_synthetic, parse_trace
from .greedy import TieRule, lrf_schedule
from .lp_relax import lp_model, solve_instance
from .online import cosmos, evaluate, odis, sample_meetings
from .oracle import (OracleLimitError, audit_bounds, brute_optimum, check_contact_lower_bound)
from .rounding import dis_round, mdis_schedule, ris_round


def _emit(obj, out=None) -> None:
    text = json.dumps(obj, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def cmd_gen(args) -> int:
    cfg = SyntheticConfig(m=args.m, ratio_nm=args.ratio, p=args.p, rst_mean=args.rst_mean,
                          rst_std=args.rst_std, lambda_range=(args.lambda_lo, args.lambda_hi),
                          seed=args.seed)
    inst = gen_synthetic(cfg)
    _emit(inst.to_dict(), args.output)
    return 0


def cmd_parse_trace(args) -> int:
    contact_log = parse_trace(args.file, strict=args.strict)
    for err in contact_log.errors:
        print(f"malformed: {err}", file=sys.stderr)
    workers = estimate_lambdas(contact_log, args.requester, args.top_k,
                               from_trace_start=not args.from_first_contact)
    _emit({"workers": [{"lambda": w.rate} for w in workers]}, args.output)
    return 0


def _schedule_json(inst, sched, wct) -> dict:
    return {"schedule": sched.to_dict(), "wct": wct}


def cmd_run(args) -> int:
    inst = Instance.load(args.instance)
    tie = TieRule(args.tie)
    alg = args.alg
    if alg == "lrf":
        sched = lrf_schedule(inst, tie)
        _emit(_schedule_json(inst, sched, weighted_completion(inst, sched)))
        return 0
    if alg in ("ris", "dis", "mdis"):
        lpsol = solve_instance(inst, args.eta)
        print(f"# eta={args.eta}: ris expected bound {1.5 + args.eta / 2:g}, "
              f"dis bound {max(2.5, 1 + args.eta):g} (1.5+eta={1.5 + args.eta:g} when its hypothesis holds)",
              file=sys.stderr)
        if alg == "ris":
            trials = []
            for k in range(args.trials):
                sched = ris_round(inst, lpsol, None if args.seed is None else args.seed + k)
                trials.append(weighted_completion(inst, sched))
            out = _schedule_json(inst, sched, trials[-1])
            out.update({"trials": trials, "mean_wct": float(np.mean(trials)),
                        "lp_objective": lpsol.objective})
            _emit(out)
            return 0
        if alg == "dis":
            res = dis_round(inst, lpsol)
            sched = res.schedule
            out = _schedule_json(inst, sched, weighted_completion(inst, sched))
            out["initial_expectation"] = res.initial_expectation
        else:
            sched = mdis_schedule(inst, lpsol, tie)
            out = _schedule_json(inst, sched, weighted_completion(inst, sched))
        out["lp_objective"] = lpsol.objective
        _emit(out)
        return 0
    trace = sample_meetings(inst.rates, args.seed)
    if alg == "cosmos":
        sched, steplog = cosmos(inst, trace, tie=tie)
    else:
        sched, steplog = odis(inst, trace, args.eta)
    out = _schedule_json(inst, sched, evaluate(inst, sched, trace, args.eval, args.seed))
    out["eval"] = args.eval
    out["meetings"] = [{"worker": j + 1, "time": t} for j, t in zip(trace.workers, trace.times)]
    _emit(out)
    if args.log:
        rows = steplog.to_rows()
        with open(args.log, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
    return 0


def cmd_solve_lp(args) -> int:
    inst = Instance.load(args.instance)
    model, scale = lp_model(inst, args.eta)
    if args.dump_lp:
        # rows are in the rescaled time units when some task is shorter than 1
        model.dump(args.dump_lp)
    sol = solve_instance(inst, args.eta, backend=args.backend)
    triplets = [[int(i) + 1, int(j) + 1, int(l), float(sol.y[i, j, l])]
                for i, j, l in zip(*np.nonzero(sol.y > 1e-12))]
    _emit({"objective": sol.objective, "cbar": sol.cbar.tolist(), "y": triplets,
           "eta": args.eta, "L": sol.grid.L, "time_scale": scale})
    return 0


def _parse_range(text: str) -> list[float]:
    lo, hi, step = (float(x) for x in text.split(":"))
    count = int(round((hi - lo) / step))
    return [lo + k * step for k in range(count + 1)]


def cmd_verify(args) -> int:
    failed = False
    if args.theorem1:
        rows = []
        for T in _parse_range(args.t_range):
            rep = check_contact_lower_bound(T)
            print(rep.line())
            rows.append(rep)
        print("note: the contact term comes from the greedy schedule, not the optimum")
        if args.csv:
            with open(args.csv, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["T", "M1", "Mn", "M_lambda", "wct_opt", "rhs", "violated"])
                for r in rows:
                    w.writerow([r.T, r.terms.M1, r.terms.Mn, r.terms.M_lambda, r.wct_opt, r.rhs, int(r.violated)])
    if args.bounds:
        if not args.instance:
            print("--bounds needs --instance", file=sys.stderr)
            return 2
        inst = Instance.load(args.instance)
        lpsol = solve_instance(inst, args.eta)
        try:
            opt = brute_optimum(inst)[1]
        except OracleLimitError as exc:
            print(f"# {exc}; greedy bounds use the LP value", file=sys.stderr)
            opt = None
        ris = np.mean([weighted_completion(inst, ris_round(inst, lpsol, s)) for s in range(args.trials)])
        wcts = {"lrf": weighted_completion(inst, lrf_schedule(inst)),
                "ris": float(ris),
                "dis": weighted_completion(inst, dis_round(inst, lpsol).schedule)}
        reports = audit_bounds(inst, wcts, lpsol.objective, args.eta, opt)
        for r in reports:
            print(r.line())
        failed = any(not r.passed for r in reports)
        if args.csv:
            with open(args.csv, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["bound", "wct_alg", "ref_kind", "wct_ref", "ratio", "alpha", "applicable", "passed"])
                for r in reports:
                    w.writerow([r.name, r.wct_alg, r.ref_kind, r.wct_ref, r.ratio, r.alpha,
                                int(r.applicable), int(r.passed)])
    return 1 if failed else 0


def cmd_bench(args) -> int:
    algs = tuple(a for a in args.algs.split(",") if a)
    if args.trace:
        contact_log = parse_trace(args.trace)
        requesters = args.requesters.split(",") if args.requesters else sorted(contact_log.devices())
        values = [float(v) for v in args.values.split(",")] if args.values else [2, 4, 6, 8, 10]
        cfg = SweepConfig("dataset", values, args.instances, algs, args.eta, args.seed_base,
                          args.denominator, lp_backend=args.backend)
        res = run_trace_sweep(cfg, [(contact_log, r) for r in requesters], top_k=args.top_k)
    else:
        values = [float(v) for v in args.values.split(",")] if args.values else DEFAULT_VALUES[args.sweep]
        cfg = SweepConfig(args.sweep, values, args.instances, algs, args.eta, args.seed_base,
                          args.denominator, lp_backend=args.backend)
        res = run_sweep(cfg, jobs=args.jobs)
    res.write_csv(args.out)
    for r in res.rows:
        print(f"{r.param}={r.value:g} {r.algorithm}: ratio {r.mean_ratio:.4f} +- {r.stderr:.4f} "
              f"runtime {r.mean_runtime * 1000:.1f} ms" + (f" failures {r.failures}" if r.failures else ""))
    print(f"# config {res.config_hash} seed_base {res.seed_base} eta {res.eta}")
    for v in res.violations:
        print(f"violation: {v}", file=sys.stderr)
    return 1 if res.violations else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="msn-sched", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic instance")
    p.add_argument("--m", type=int, default=10)
    p.add_argument("--ratio", type=int, default=5)
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--rst-mean", type=float, default=30.0)
    p.add_argument("--rst-std", type=float, default=30.0 ** 0.5)
    p.add_argument("--lambda-lo", type=float, default=1.0)
    p.add_argument("--lambda-hi", type=float, default=30.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("parse-trace", help="estimate worker rates from a contact trace")
    p.add_argument("--file", required=True)
    p.add_argument("--requester", required=True)
    p.add_argument("--top-k", type=int, default=128)
    p.add_argument("--strict", action="store_true")
    p.add_argument("--from-first-contact", action="store_true",
                   help="measure gaps from the first contact instead of the trace start")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_parse_trace)

    p = sub.add_parser("run", help="schedule one instance")
    p.add_argument("--alg", required=True, choices=["lrf", "ris", "dis", "mdis", "cosmos", "odis"])
    p.add_argument("--instance", required=True)
    p.add_argument("--tie", choices=[t.value for t in TieRule], default="smallest")
    p.add_argument("--eta", type=float, default=0.5)
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--eval", choices=["realized", "expected", "sampled"], default="realized")
    p.add_argument("--log", help="write the online step log as CSV")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("solve-lp", help="solve the interval-indexed LP")
    p.add_argument("--instance", required=True)
    p.add_argument("--eta", type=float, default=0.5)
    p.add_argument("--backend", choices=["revised", "tableau", "highs"], default="revised")
    p.add_argument("--dump-lp")
    p.set_defaults(func=cmd_solve_lp)

    p = sub.add_parser("verify", help="check the counterexample and bounds")
    p.add_argument("--theorem1", action="store_true",
                   help="check the contact-extended lower bound on the four-task instance")
    p.add_argument("--t-range", default="1:30:0.5")
    p.add_argument("--bounds", action="store_true")
    p.add_argument("--instance")
    p.add_argument("--eta", type=float, default=0.5)
    p.add_argument("--trials", type=int, default=200, help="RIS draws for the expected-ratio bound")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="run a parameter sweep")
    p.add_argument("--sweep", choices=sorted(DEFAULT_VALUES), default="p")
    p.add_argument("--values", help="comma-separated sweep values")
    p.add_argument("--out", required=True)
    p.add_argument("--algs", default="lrf,mdis,ris", help=f"subset of {','.join(ALGORITHMS)}")
    p.add_argument("--eta", type=float, default=0.5)
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--seed-base", type=int, default=0)
    p.add_argument("--denominator", choices=["lp", "brute"], default="lp")
    p.add_argument("--backend", choices=["revised", "tableau", "highs"], default="revised")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--trace")
    p.add_argument("--requesters")
    p.add_argument("--top-k", type=int, default=128)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
