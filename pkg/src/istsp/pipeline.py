"""End-to-end two-stage run: stage 1, split decision, stage 2, metrics."""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

from .errors import InvalidInstance, ModelTooLarge
from .horizon import PeriodVector, dominates
from .instance import UNIFORM_COST, Instance, validate
from .ipcore import LPInfeasible, SolveOptions, lp_relax
from .split import CombinedRoster, recommend_rho, solve_with_split
from .stage1 import Stage1Solution, build_stage1, expand_schedules, solve_stage1, supply_from_counts
from .stage2 import AssignmentProblem, Roster, heuristic_roster, problem_size, solve_stage2

DEFAULT_BUDGET = 2_000_000


# ----------------------------------------------------------------------------- metrics


def worker_lower_bound(B: float, b: int) -> int:
    """Workers needed to carry at least B shift schedules at b shifts each."""
    if b < 1:
        raise ValueError("b must be >= 1")
    if B < 0:
        raise ValueError("B must be >= 0")
    return math.ceil(Fraction(B).limit_denominator(10**6) / b)


def hours_lower_bound(demand_tps: int, max_hours_tps: int) -> int:
    """Workers needed when each may cover at most ``max_hours_tps`` TPs."""
    if max_hours_tps < 1:
        raise ValueError("H must be >= 1")
    return math.ceil(Fraction(demand_tps) / max_hours_tps)


def optimality_mu(O_S: float, O_L: float) -> float:
    """Guaranteed optimality percentage of objective O_S against bound O_L."""
    if O_L <= 0:
        raise ValueError("metric undefined for a nonpositive lower bound")
    if O_S < O_L:
        raise ValueError("objective below its lower bound")
    return round(100 - (O_S - O_L) / O_L * 100, 1)


def utilization(total_demand: float, total_supply: float) -> float:
    """Percentage of supplied time that is demanded (same units for both)."""
    if total_supply <= 0:
        raise ValueError("utilization undefined for zero supply")
    return 100.0 * float(total_demand) / float(total_supply)


# ----------------------------------------------------------------------------- run


OBJECTIVE_MAP = {"workers": "count", "cost": "cost", "overcover": "overcover"}


@dataclass
class RunOptions:
    objective: str = "workers"  # workers | cost | overcover
    rho: int | str = "auto"
    stage1_time_limit: float = 120.0
    stage2_time_limit: float = 120.0
    overlap_mode: str = "cyclic"
    budget: int = DEFAULT_BUDGET
    refine: str = "auto"  # auto | on | off: peak-demand bound from the max-coverage model
    cap_peak: bool = False  # re-solve stage 1 with max_j R_j capped at the refined peak
    backend: str = "builtin"
    seed: int = 0
    symmetry: bool = True

    def __post_init__(self):
        if self.objective not in OBJECTIVE_MAP:
            raise ValueError(f"objective must be one of {sorted(OBJECTIVE_MAP)}")
        if self.rho != "auto" and (not isinstance(self.rho, int) or self.rho < 1):
            raise ValueError("rho must be 'auto' or an integer >= 1")
        if self.refine not in ("auto", "on", "off"):
            raise ValueError("refine must be auto, on or off")


@dataclass
class RunReport:
    instance: dict
    stage1: dict
    stage2: dict
    split: dict | None
    metrics: dict
    method: str
    times: dict
    demand: list = field(default_factory=list)
    supply: list = field(default_factory=list)
    roster: dict = field(default_factory=dict)

    @property
    def workers(self) -> int:
        return self.stage2["workers"]

    @property
    def total_time(self) -> float:
        return self.times["total"]

    def to_dict(self) -> dict:
        return asdict(self)

    def save(self, path: str | Path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path: str | Path) -> "RunReport":
        return cls(**json.loads(Path(path).read_text()))


@dataclass
class RunResult:
    report: RunReport
    roster: Roster
    stage1: Stage1Solution
    combined: CombinedRoster | None = None


def _tau_bound(instance: Instance, patterns, stage1: Stage1Solution, objective: str) -> float:
    """Lower bound B on the number of shift schedules of any feasible plan."""
    if objective == "count":
        return stage1.lower_bound
    try:
        value, _ = lp_relax(build_stage1(instance, patterns, "cost", costs=UNIFORM_COST))
    except LPInfeasible:
        return 0.0
    return float(math.ceil(value - 1e-6))


def _peak_bound(instance: Instance, opts: RunOptions) -> tuple[int | None, float]:
    """Smallest achievable max_j R_j and the time it took."""
    t0 = time.perf_counter()
    if not instance.tasks:
        peak = int(instance.fixed_demand.peak()) if instance.fixed_demand is not None else 0
        return peak, time.perf_counter() - t0
    want = opts.refine == "on" or (opts.refine == "auto" and instance.policy.days_off != "none")
    if not want:
        return None, 0.0
    sol = solve_stage1(instance, [], "max_coverage",
                       SolveOptions(time_limit_s=opts.stage1_time_limit, seed=opts.seed), backend=opts.backend)
    # only a proven optimum is a valid bound; otherwise use the solver bound
    peak = int(sol.objective_value) if sol.status == "optimal" else int(math.ceil(sol.lower_bound - 1e-9))
    return peak, time.perf_counter() - t0


def worker_bound(instance: Instance, B: float, peak: int | None) -> tuple[int, str]:
    pol = instance.policy
    if pol.load_kind == "hours" and pol.max_hours:
        lb, kind = hours_lower_bound(instance.total_demand_tps(), pol.max_hours), "hours"
    elif pol.max_shifts:
        lb, kind = worker_lower_bound(B, pol.max_shifts), "shifts"
    else:
        lb, kind = 0, "none"
    if peak is not None and peak > lb:
        lb, kind = peak, "peak"
    return lb, kind


def run(instance: Instance, opts: RunOptions | None = None, report_path=None, roster_path=None) -> RunResult:
    opts = opts or RunOptions()
    t_start = time.perf_counter()
    problems = validate(instance)
    if problems:
        raise InvalidInstance(problems)
    patterns = instance.patterns()
    objective = OBJECTIVE_MAP[opts.objective]
    o1 = SolveOptions(time_limit_s=opts.stage1_time_limit, seed=opts.seed)
    o2 = SolveOptions(time_limit_s=opts.stage2_time_limit, seed=opts.seed)

    peak, t_peak = _peak_bound(instance, opts)
    cap = peak if (opts.cap_peak and peak is not None and instance.tasks) else None
    t0 = time.perf_counter()
    s1 = solve_stage1(instance, patterns, objective, o1, coverage_cap=cap, backend=opts.backend)
    B = _tau_bound(instance, patterns, s1, objective)
    t_stage1 = time.perf_counter() - t0
    lb, lb_kind = worker_bound(instance, B, peak)

    t0 = time.perf_counter()
    problem = AssignmentProblem(expand_schedules(s1), patterns, instance.policy, instance.T,
                                instance.horizon.tps_per_day, opts.overlap_mode)
    w = heuristic_roster(problem, opts.seed).workers_used if problem.tau else 0
    size = problem_size(problem, w)
    rho = recommend_rho(size["constraints"], opts.budget) if opts.rho == "auto" else opts.rho
    if opts.rho != "auto" and rho == 1 and size["constraints"] > opts.budget:
        raise ModelTooLarge(size["constraints"], opts.budget)
    combined = None
    split_rec = None
    if rho == 1:
        roster = solve_stage2(problem, o2, symmetry=opts.symmetry, backend=opts.backend)
    else:
        while True:
            if int(s1.demand.peak()) < rho:
                raise ModelTooLarge(size["constraints"], opts.budget)
            try:
                combined = solve_with_split(instance, rho, s1.demand, patterns, objective, o1, o2,
                                            opts.overlap_mode, opts.budget, opts.backend)
                break
            except ModelTooLarge:
                if opts.rho != "auto":
                    raise
                rho += 1
        roster = combined.roster
        split_rec = {
            "rho": rho,
            "r1_total": int(combined.plan.r1.total()),
            "r2_total": int(combined.plan.r2.total()),
            "w1": combined.part1.workers,
            "w2": combined.part2.workers,
            "tau1": combined.part1.stage1.num_schedules if combined.part1.stage1 else 0,
            "tau2": combined.part2.stage1.num_schedules if combined.part2.stage1 else 0,
        }
    t_stage2 = time.perf_counter() - t0

    counts: dict = {}
    for s in roster.schedules:
        counts[(s.pattern_id, s.start_tp)] = counts.get((s.pattern_id, s.start_tp), 0) + 1
    supply = supply_from_counts(patterns, counts, instance.T) if counts else PeriodVector.zeros(instance.T)
    if not dominates(supply, s1.demand):
        raise RuntimeError("final roster does not cover the demand")
    workers = roster.workers_used
    demand_total = s1.demand.total()
    metrics = {
        "workers": workers,
        "worker_lower_bound": lb,
        "lower_bound_kind": lb_kind,
        "tau_bound": B,
        "peak_bound": peak,
        "mu_workers": optimality_mu(workers, lb) if lb > 0 and workers >= lb else None,
        "mu_stage1": optimality_mu(s1.objective_value, s1.lower_bound)
        if s1.lower_bound > 0 and s1.objective_value >= s1.lower_bound else None,
        "utilization": utilization(demand_total, supply.total()) if supply.total() > 0 else None,
    }
    times = {"peak": t_peak, "stage1": t_stage1, "stage2": t_stage2}
    times["total"] = sum(times.values())
    report = RunReport(
        instance={"name": instance.name, "T": instance.T, "omega": instance.horizon.omega, "K": instance.K,
                  "precedence": len(instance.precedence), "demand_hours": instance.total_demand_hours(),
                  "family": instance.pattern_family if instance.custom_patterns is None else "CUSTOM"},
        stage1={"objective": opts.objective, "value": s1.objective_value, "bound": s1.lower_bound,
                "tau": s1.num_schedules, "status": s1.status, "time": s1.wall_time, "nodes": s1.nodes},
        stage2={"workers": workers, "status": roster.status, "bound": roster.bound, "tau": len(roster.schedules),
                "model_size": size, "worker_cap": w, "time": t_stage2},
        split=split_rec,
        metrics=metrics,
        method="direct" if rho == 1 else f"split({rho})",
        times=times,
        demand=s1.demand.to_list(),
        supply=supply.to_list(),
        roster=roster.to_dict(),
    )
    report.roster["lengths"] = {str(pid): patterns[pid - 1].length for pid in sorted({pid for pid, _ in counts})}
    report.times["wall"] = time.perf_counter() - t_start
    if report_path:
        report.save(report_path)
    if roster_path:
        roster.save(roster_path)
    return RunResult(report, roster, s1, combined)
