"""Demand splitting for instances too large for a direct stage-2 solve.

R is written as (rho-1)·R1 + R2 with R1 = floor(R/rho). Both parts are
solved with the two-stage method; the R1 roster is replicated rho-1 times
over fresh worker indices and merged with the R2 roster.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from .horizon import PeriodVector, add_scaled, dominates
from .instance import Instance
from .ipcore import SolveOptions
from .patterns import ShiftSchedule
from .stage1 import Stage1Solution, expand_schedules, solve_stage1, supply_from_counts
from .stage2 import AssignmentProblem, Roster, solve_stage2, validate_roster


@dataclass(frozen=True)
class SplitPlan:
    rho: int
    r1: PeriodVector
    r2: PeriodVector

    @property
    def multiplicity(self) -> int:
        return self.rho - 1

    def reconstruct(self) -> PeriodVector:
        return add_scaled(self.r2, self.r1, self.multiplicity)


def split_demand(R: PeriodVector, rho: int) -> SplitPlan:
    if rho < 2:
        raise ValueError("splitting factor must be >= 2")
    if not R.is_integral:
        raise ValueError("demand must be integral to split")
    r = R.as_ints()
    if (r < 0).any():
        raise ValueError("demand must be nonnegative")
    r1 = r // rho
    r2 = r - (rho - 1) * r1
    return SplitPlan(rho, PeriodVector(2 * r1), PeriodVector(2 * r2))


def recommend_rho(estimated_size: float, budget: float, scaling: float = 2.0) -> int:
    """Smallest rho whose per-subproblem size, taken as size / rho**scaling,
    fits the budget; 1 means no split is needed."""
    if budget <= 0:
        raise ValueError("budget must be positive")
    if estimated_size <= budget:
        return 1
    rho = max(2, math.ceil((estimated_size / budget) ** (1.0 / scaling) - 1e-12))
    while estimated_size / rho ** scaling > budget:
        rho += 1
    return rho


@dataclass
class SubResult:
    stage1: Stage1Solution | None
    roster: Roster
    problem: AssignmentProblem | None

    @property
    def workers(self) -> int:
        return self.roster.workers_used


@dataclass
class CombinedRoster:
    plan: SplitPlan
    part1: SubResult
    part2: SubResult
    roster: Roster
    supply: PeriodVector
    wall_time: float = 0.0
    violations: list = field(default_factory=list)

    @property
    def total_workers(self) -> int:
        return self.plan.multiplicity * self.part1.workers + self.part2.workers

    @property
    def num_schedules(self) -> int:
        return len(self.roster.schedules)


def merge_rosters(plan: SplitPlan, r1: Roster, r2: Roster) -> tuple[Roster, list]:
    """Replicate ``r1`` over disjoint worker blocks and append ``r2``.

    Returns the merged roster with schedules sorted by start, plus the list
    of (copy, worker offset) blocks used.
    """
    w1 = r1.workers_used
    items = []  # (schedule, worker)
    blocks = []
    for c in range(1, plan.multiplicity + 1):
        off = (c - 1) * w1
        blocks.append((c, off))
        for u, vs in r1.assignment.items():
            items.extend((r1.schedules[v], off + u) for v in vs)
    off2 = plan.multiplicity * w1
    blocks.append((plan.rho, off2))
    for u, vs in r2.assignment.items():
        items.extend((r2.schedules[v], off2 + u) for v in vs)
    items.sort(key=lambda it: (it[0].key(), it[1]))
    schedules = [s for s, _ in items]
    assignment: dict[int, list[int]] = {}
    for pos, (_, u) in enumerate(items):
        assignment.setdefault(u, []).append(pos)
    day_off = {}
    for c, off in blocks[:-1]:
        day_off.update({off + u: d for u, d in r1.day_off.items()})
    day_off.update({off2 + u: d for u, d in r2.day_off.items()})
    status = "optimal" if r1.status == r2.status == "optimal" else "feasible"
    return Roster(schedules, assignment, day_off, status=status), blocks


def _solve_part(instance: Instance, demand: PeriodVector, patterns, objective, opts1, opts2, mode,
                budget, backend) -> SubResult:
    sub = instance.with_demand(demand)
    if demand.total() == 0:
        return SubResult(None, Roster([], {}, status="optimal"), None)
    sol = solve_stage1(sub, patterns, objective, opts1, backend=backend)
    problem = AssignmentProblem(expand_schedules(sol), patterns, instance.policy, instance.T,
                                instance.horizon.tps_per_day, mode)
    roster = solve_stage2(problem, opts2, budget=budget, backend=backend)
    return SubResult(sol, roster, problem)


def solve_with_split(
    instance: Instance,
    rho: int,
    demand: PeriodVector | None = None,
    patterns=None,
    objective: str = "count",
    opts1: SolveOptions | None = None,
    opts2: SolveOptions | None = None,
    mode: str = "cyclic",
    budget: int | None = None,
    backend: str = "builtin",
) -> CombinedRoster:
    """Two-stage solve of R1 and R2, recombined into one roster.

    ``demand`` defaults to the instance's fixed demand; instances with tasks
    must pass the demand vector of a stage-1 solution.
    """
    t0 = time.perf_counter()
    if demand is None:
        if instance.tasks or instance.fixed_demand is None:
            raise ValueError("splitting needs a fixed demand vector")
        demand = instance.fixed_demand
    patterns = instance.patterns() if patterns is None else list(patterns)
    plan = split_demand(demand, rho)
    args = (patterns, objective, opts1, opts2, mode, budget, backend)
    part1 = _solve_part(instance, plan.r1, *args)
    part2 = _solve_part(instance, plan.r2, *args)
    merged, _ = merge_rosters(plan, part1.roster, part2.roster)
    supply = supply_from_counts(patterns, combined_counts(merged.schedules), instance.T)
    problem = AssignmentProblem(merged.schedules, patterns, instance.policy, instance.T,
                                instance.horizon.tps_per_day, mode)
    violations = validate_roster(merged, problem)
    if not dominates(supply, demand):
        violations.append("combined supply does not cover the demand")
    merged.violations = violations
    if violations:
        raise RuntimeError("combined roster failed validation: " + "; ".join(violations))
    merged.wall_time = time.perf_counter() - t0
    return CombinedRoster(plan, part1, part2, merged, supply, merged.wall_time, violations)


def combined_counts(schedules: list[ShiftSchedule]) -> dict:
    out: dict = {}
    for s in schedules:
        out[(s.pattern_id, s.start_tp)] = out.get((s.pattern_id, s.start_tp), 0) + 1
    return out

