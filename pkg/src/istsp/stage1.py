"""Stage 1: choose task starts and shift-schedule counts jointly.

Covering rows are written in half units (coefficients 2·s_t and 2·r) so a
0.5 availability cell stays an exact integer coefficient.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import InfeasibleError
from .horizon import PeriodVector, wrap
from .instance import UNIFORM_COST, CostModel, Instance, induced_demand
from .ipcore import IPModel, SolveOptions, SolveResult, get_backend
from .patterns import ShiftPattern, ShiftSchedule, daily_starts

OBJECTIVES = ("cost", "overcover", "max_coverage")


def admissible_starts(instance: Instance, pattern: ShiftPattern) -> list[int]:
    """Horizon start TPs for which an x variable is created."""
    window = instance.daily_shift_window()
    T = instance.T
    last = T if instance.horizon.cyclic else T - pattern.length + 1
    if window is None:
        return list(range(1, last + 1))
    tpd = instance.horizon.tps_per_day
    allowed = set(daily_starts(pattern, tpd, window))
    return [j for j in range(1, last + 1) if (j - 1) % tpd + 1 in allowed]


def _covers(big: tuple, small: tuple, delta: int) -> bool:
    return all(b >= a for a, b in zip(small, big[delta:delta + len(small)]))


def schedule_columns(instance: Instance, patterns: Sequence[ShiftPattern], price,
                     reduce: bool = True) -> dict[int, list[int]]:
    """Start TPs that get an x variable, per 1-based pattern id.

    ``price(pid, j)`` is the objective coefficient of schedule (pid, j). With
    ``reduce`` a schedule is dropped when another admissible schedule supplies
    at least as much at every TP for no more cost; the optimum is unchanged.
    """
    T = instance.T
    starts = {pid: admissible_starts(instance, p) for pid, p in enumerate(patterns, start=1)}
    if not reduce:
        return starts
    allowed = {pid: set(js) for pid, js in starts.items()}
    cyclic = instance.horizon.cyclic
    out = {}
    for pid, p in enumerate(patterns, start=1):
        # identical duplicates: only the lower id survives
        covers = [(qid, d) for qid, q in enumerate(patterns, start=1)
                  if qid != pid and not (q.halves == p.halves and qid > pid)
                  for d in range(q.length - p.length + 1) if _covers(q.halves, p.halves, d)]
        keep = []
        for j in starts[pid]:
            c = price(pid, j)
            for qid, d in covers:
                jq = wrap(j - d, T) if cyclic else j - d
                if jq in allowed[qid] and price(qid, jq) <= c:
                    break
            else:
                keep.append(j)
        out[pid] = keep
    return out


def demand_upper_bound(instance: Instance) -> np.ndarray:
    """Per-TP upper bound on R_j over every admissible start map."""
    T = instance.T
    U = np.zeros(T, dtype=np.int64)
    for t in instance.tasks:
        best = np.zeros(T, dtype=np.int64)
        r = np.asarray(t.resource, dtype=np.int64)
        for j in range(t.l, t.u + 1):
            idx = np.arange(j - 1, j - 1 + t.duration) % T
            np.maximum.at(best, idx, r)
        U += best
    if instance.fixed_demand is not None:
        U += instance.fixed_demand.as_ints()
    return U


def build_stage1(
    instance: Instance,
    patterns: Sequence[ShiftPattern],
    objective: str = "cost",
    coverage_cap: int | None = None,
    costs: CostModel | None = None,
    reduce: bool = True,
) -> IPModel:
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}")
    for p in patterns:
        if p.omega != instance.horizon.omega:
            raise ValueError(f"pattern omega {p.omega} != horizon omega {instance.horizon.omega}")
    costs = costs or instance.costs
    T = instance.T
    model = IPModel(f"stage1[{objective}]")
    fixed = instance.fixed_demand.as_ints() if instance.fixed_demand is not None else np.zeros(T, dtype=np.int64)
    U = demand_upper_bound(instance)
    peak = int(U.max()) if T else 0

    # task-start binaries, only inside windows
    y_index: dict[tuple[int, int], int] = {}
    demand_terms: list[list] = [[] for _ in range(T)]  # (var, workers) per TP
    for t in instance.tasks:
        for j in range(t.l, t.u + 1):
            v = model.add_var(f"y[{t.id},{j}]", "binary")
            y_index[(t.id, j)] = v
            for i, r in enumerate(t.resource):
                if r:
                    demand_terms[wrap(j + i, T) - 1].append((v, r))

    x_index: dict[tuple[int, int], int] = {}
    supply_terms: list[list] = [[] for _ in range(T)]
    M = None
    if objective == "max_coverage":
        M = model.add_var("M", "integer", 0, max(peak, 0))
    else:
        if objective == "overcover":
            price = lambda pid, j: float(patterns[pid - 1].work)  # noqa: E731
        else:
            price = lambda pid, j: float(costs.cost(pid, patterns[pid - 1], j))  # noqa: E731
        columns = schedule_columns(instance, patterns, price, reduce)
        for pid, p in enumerate(patterns, start=1):
            min_cell = min(h for h in p.halves if h > 0)
            ub = math.ceil(peak * 2 / min_cell)
            for j in columns[pid]:
                v = model.add_var(f"x[{pid},{j}]", "integer", 0, ub)
                x_index[(pid, j)] = v
                for t, h in enumerate(p.halves):
                    if h:
                        supply_terms[wrap(j + t, T) - 1].append((v, h))

    for j in range(T):
        dem = [(v, -2.0 * r) for v, r in demand_terms[j]]
        if M is not None:
            if demand_terms[j] or fixed[j]:
                model.add_constraint([(v, float(r)) for v, r in demand_terms[j]] + [(M, -1.0)], "<=",
                                     -float(fixed[j]), f"peak[{j + 1}]")
        else:
            if supply_terms[j] or dem or fixed[j]:
                model.add_constraint([(v, float(h)) for v, h in supply_terms[j]] + dem, ">=",
                                     2.0 * fixed[j], f"cover[{j + 1}]")
        if coverage_cap is not None and (demand_terms[j] or fixed[j]):
            model.add_constraint([(v, float(r)) for v, r in demand_terms[j]], "<=",
                                 float(coverage_cap - fixed[j]), f"cap[{j + 1}]")

    tm = instance.task_map()
    for a, b in instance.precedence:
        ta, tb = tm[a], tm[b]
        terms = [(y_index[(a, j)], float(j + ta.duration - 1)) for j in range(ta.l, ta.u + 1)]
        terms += [(y_index[(b, j)], -float(j)) for j in range(tb.l, tb.u + 1)]
        model.add_constraint(terms, "<=", 0.0, f"prec[{a},{b}]")
    for t in instance.tasks:
        model.add_constraint([(y_index[(t.id, j)], 1.0) for j in range(t.l, t.u + 1)], "==", 1.0,
                             f"assign[{t.id}]")

    if objective == "max_coverage":
        model.set_objective({M: 1.0})
    else:
        model.set_objective({v: price(pid, j) for (pid, j), v in x_index.items()})
    model.meta = {"y": y_index, "x": x_index, "M": M, "objective": objective}
    return model


@dataclass
class Stage1Solution:
    starts: dict
    schedule_counts: dict  # (pattern id, start TP) -> count
    objective_value: float
    lower_bound: float
    demand: PeriodVector
    supply: PeriodVector
    num_schedules: int
    status: str = "optimal"
    objective: str = "cost"
    wall_time: float = 0.0
    nodes: int = 0
    trace: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "starts": {str(k): v for k, v in sorted(self.starts.items())},
            "schedules": [[i, j, n] for (i, j), n in sorted(self.schedule_counts.items(), key=lambda kv: (kv[0][1], kv[0][0]))],
            "objective": self.objective_value,
            "bound": self.lower_bound,
            "status": self.status,
        }

    def save(self, path: str | Path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))


def supply_from_counts(
    patterns: Sequence[ShiftPattern], counts: Mapping[tuple[int, int], int], T: int
) -> PeriodVector:
    S = np.zeros(T, dtype=np.int64)
    for (pid, j), n in counts.items():
        if n <= 0:
            continue
        h = np.asarray(patterns[pid - 1].halves, dtype=np.int64)
        idx = np.arange(j - 1, j - 1 + len(h)) % T
        np.add.at(S, idx, n * h)
    return PeriodVector(S)


def solve_stage1(
    instance: Instance,
    patterns: Sequence[ShiftPattern] | None = None,
    objective: str = "cost",
    opts: SolveOptions | None = None,
    coverage_cap: int | None = None,
    costs: CostModel | None = None,
    backend: str = "builtin",
) -> Stage1Solution:
    """Build and solve stage 1; ``objective='count'`` counts schedules."""
    patterns = instance.patterns() if patterns is None else list(patterns)
    if objective == "count":
        objective, costs = "cost", UNIFORM_COST
    model = build_stage1(instance, patterns, objective, coverage_cap, costs)
    res: SolveResult = get_backend(backend)(model, opts)
    if res.x is None:
        if res.status == "infeasible":
            raise InfeasibleError("stage1", res.certificate)
        raise InfeasibleError("stage1", f"no incumbent within limits ({res.status})")
    starts = {k: j for (k, j), v in model.meta["y"].items() if res.value(v) == 1}
    counts = {key: res.value(v) for key, v in model.meta["x"].items() if res.value(v) > 0}
    demand = induced_demand(instance, starts)
    supply = supply_from_counts(patterns, counts, instance.T)
    return Stage1Solution(
        starts=starts,
        schedule_counts=counts,
        objective_value=float(res.objective),
        lower_bound=float(res.best_bound),
        demand=demand,
        supply=supply,
        num_schedules=int(sum(counts.values())),
        status=res.status,
        objective=objective,
        wall_time=res.wall_time,
        nodes=res.nodes,
        trace=res.trace,
    )


def expand_schedules(sol: Stage1Solution | Mapping) -> list[ShiftSchedule]:
    """List each (pattern, start) ``count`` times, ascending by start then pattern."""
    counts = sol.schedule_counts if isinstance(sol, Stage1Solution) else sol
    out = []
    for (pid, j), n in sorted(counts.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        out.extend([ShiftSchedule(pid, j)] * n)
    return out
