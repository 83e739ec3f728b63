"""Command-line interface.

Exit codes: 0 success, 1 infeasible, 2 invalid input, 3 resource budget
exceeded.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .errors import InfeasibleError, InvalidInstance, ModelTooLarge
from .instance import load_instance, save_instance, validate
from .patterns import PatternRuleSet, dump_patterns, enumerate_rules, generate_family
from .pipeline import DEFAULT_BUDGET, RunOptions, RunReport, run
from .simgen import MIXES, SIZES, SimConfig, emergency_like, simulate

EXIT_OK, EXIT_INFEASIBLE, EXIT_INVALID, EXIT_BUDGET = 0, 1, 2, 3
FAMILIES = ("FX260", "FL15", "FL135", "FX29", "STOLLETZ", "CUSTOM")


def _rho(text: str):
    if text == "auto":
        return "auto"
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("rho must be 'auto' or a positive integer") from None
    if value < 1:
        raise argparse.ArgumentTypeError("rho must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="istsp", description="Two-stage shift and task scheduling.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("patterns", help="generate a shift-pattern family")
    p.add_argument("family", choices=FAMILIES)
    p.add_argument("--rules", help="JSON rule set (required for CUSTOM)")
    p.add_argument("--out", help="write the pattern JSON here instead of stdout")

    p = sub.add_parser("validate", help="check an instance file")
    p.add_argument("instance")

    p = sub.add_parser("solve", help="run the two-stage method")
    p.add_argument("instance")
    p.add_argument("--objective", choices=("workers", "cost", "overcover"), default="workers")
    p.add_argument("--rho", type=_rho, default="auto")
    p.add_argument("--time-limit", type=float, default=120.0, help="seconds per stage")
    p.add_argument("--overlap", choices=("cyclic", "linear"), default="cyclic")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="stage-2 row budget")
    p.add_argument("--refine", choices=("auto", "on", "off"), default="auto")
    p.add_argument("--backend", choices=("builtin", "highs"), default="builtin")
    p.add_argument("--out", help="report JSON path")
    p.add_argument("--roster", help="roster JSON path")

    p = sub.add_parser("simulate", help="generate a simulated instance")
    p.add_argument("--size", choices=sorted(SIZES), default="small")
    p.add_argument("--mix", choices=sorted(MIXES), default="S1")
    p.add_argument("--window-mode", choices=("clustered", "uniform"))
    p.add_argument("--mix-basis", choices=("hours", "tasks"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--emergency", type=float, metavar="SCALE", help="emergency-shaped instance instead")
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", help="summarize or plot a run report")
    p.add_argument("report")
    p.add_argument("--plot", choices=("demand", "supply", "gantt"))
    p.add_argument("--out", help="output .svg or .csv")
    return ap


def _cmd_patterns(args) -> int:
    if args.family == "CUSTOM":
        if not args.rules:
            print("CUSTOM needs --rules", file=sys.stderr)
            return EXIT_INVALID
        rules = PatternRuleSet.from_dict(json.loads(Path(args.rules).read_text()))
        pats = enumerate_rules(rules)
    elif args.rules:
        pats = generate_family(args.family, PatternRuleSet.from_dict(json.loads(Path(args.rules).read_text())))
    else:
        pats = generate_family(args.family)
    text = json.dumps(dump_patterns(pats, args.family), indent=1)
    if args.out:
        Path(args.out).write_text(text)
        print(f"{len(pats)} patterns -> {args.out}")
    else:
        print(text)
    return EXIT_OK


def _cmd_validate(args) -> int:
    inst = load_instance(args.instance)
    problems = validate(inst)
    for v in problems:
        print(v)
    if not problems:
        print(f"ok: T={inst.T} K={inst.K} demand={inst.total_demand_hours():g} worker-hours")
    return EXIT_INVALID if problems else EXIT_OK


def _cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    opts = RunOptions(objective=args.objective, rho=args.rho, stage1_time_limit=args.time_limit,
                      stage2_time_limit=args.time_limit, overlap_mode=args.overlap, budget=args.budget,
                      refine=args.refine, backend=args.backend)
    res = run(inst, opts, args.out, args.roster)
    m = res.report.metrics
    util = "n/a" if m["utilization"] is None else f"{m['utilization']:.1f}"
    print(f"method={res.report.method} tau={res.report.stage1['tau']} workers={m['workers']} "
          f"lower_bound={m['worker_lower_bound']} mu={m['mu_workers']} utilization={util}")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    if args.emergency is not None:
        inst = emergency_like(args.emergency, seed=args.seed)
    else:
        inst = simulate(SimConfig(size=args.size, mix=args.mix, window_mode=args.window_mode,
                                  mix_basis=args.mix_basis, seed=args.seed))
    save_instance(inst, args.out)
    print(f"{inst.name}: K={inst.K} pairs={len(inst.precedence)} demand={inst.total_demand_hours():g} "
          f"worker-hours -> {args.out}")
    return EXIT_OK


def _write_csv(path: str, header: list, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _cmd_report(args) -> int:
    rep = RunReport.load(args.report)
    if not args.plot:
        m = rep.metrics
        print(f"{rep.instance.get('name') or 'instance'}: method={rep.method}")
        print(f"  stage 1: {rep.stage1['value']} (bound {rep.stage1['bound']}, tau {rep.stage1['tau']})")
        print(f"  workers: {m['workers']} (lower bound {m['worker_lower_bound']}, mu {m['mu_workers']})")
        if m["utilization"] is not None:
            print(f"  utilization: {m['utilization']:.1f}%")
        print(f"  time: {rep.times['total']:.1f} s")
        return EXIT_OK
    out = args.out or f"{args.plot}.svg"
    if args.plot in ("demand", "supply"):
        series = rep.demand if args.plot == "demand" else rep.supply
        if out.endswith(".csv"):
            _write_csv(out, ["tp", args.plot], enumerate(series, start=1))
        else:
            _plot_series(out, rep.demand, rep.supply if args.plot == "supply" else None, rep.instance["omega"])
    else:
        bars = [(w["index"], j, pid) for w in rep.roster["workers"] for pid, j in w["schedules"]]
        if out.endswith(".csv"):
            _write_csv(out, ["worker", "start_tp", "pattern_id"], bars)
        else:
            _plot_gantt(out, rep, bars)
    print(f"wrote {out}")
    return EXIT_OK


def _plot_series(out: str, demand, supply, omega: int):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(12, 3.5))
    ax.step(range(1, len(demand) + 1), demand, where="post", label="demand")
    if supply is not None:
        ax.step(range(1, len(supply) + 1), supply, where="post", label="supply")
    ax.set_xlabel(f"TP ({omega} min)")
    ax.set_ylabel("workers")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)


def _plot_gantt(out: str, rep: RunReport, bars):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    T = rep.instance["T"]
    fig, ax = plt.subplots(figsize=(12, 0.25 * max(len(rep.roster["workers"]), 4) + 1))
    length = rep.roster.get("lengths", {})
    for u, j, pid in bars:
        m = length.get(str(pid), 1)
        ax.broken_barh([(j - 1, min(m, T - j + 1))] + ([(0, m - (T - j + 1))] if j + m - 1 > T else []),
                       (u - 0.4, 0.8))
    ax.set_xlim(0, T)
    ax.set_xlabel("TP")
    ax.set_ylabel("worker")
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)


COMMANDS = {"patterns": _cmd_patterns, "validate": _cmd_validate, "solve": _cmd_solve,
            "simulate": _cmd_simulate, "report": _cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.cmd](args)
    except InvalidInstance as e:
        print(f"invalid instance: {e}", file=sys.stderr)
        return EXIT_INVALID
    except InfeasibleError as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ModelTooLarge as e:
        print(f"budget exceeded: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (FileNotFoundError, json.JSONDecodeError, ValueError, KeyError) as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
