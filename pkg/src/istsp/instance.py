"""Instance data model, validation, demand induction and file I/O."""
from __future__ import annotations

import csv
import graphlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .horizon import Horizon, PeriodVector, wrap
from .patterns import (
    PatternRuleSet,
    ShiftPattern,
    family_omega,
    family_start_window,
    generate_family,
    patterns_from_doc,
)

DAYS_OFF_MODES = ("none", "two_consecutive", "two_any")


@dataclass(frozen=True)
class Task:
    id: int
    window: tuple
    duration: int
    resource: tuple

    def __post_init__(self):
        object.__setattr__(self, "window", tuple(self.window))
        object.__setattr__(self, "resource", tuple(int(r) for r in self.resource))

    @property
    def l(self) -> int:
        return self.window[0]

    @property
    def u(self) -> int:
        return self.window[1]

    @property
    def work(self) -> int:
        """Worker-TPs required by the task."""
        return sum(self.resource)

    def to_dict(self) -> dict:
        return {"id": self.id, "window": list(self.window), "duration": self.duration,
                "resource": list(self.resource)}


@dataclass(frozen=True)
class Stage2Policy:
    """Worker-level rules for assigning shift schedules.

    ``load_kind`` says which load cap drives the worker lower bound; it is
    inferred from the caps present when left as ``None``.
    """

    max_shifts: int | None = 5
    rest_gap: int = 0
    max_hours: int | None = None  # in TPs
    days_off: str = "none"
    max_workers: int | None = None
    load_kind: str | None = None

    def __post_init__(self):
        if self.days_off not in DAYS_OFF_MODES:
            raise ValueError(f"days_off must be one of {DAYS_OFF_MODES}")
        if self.load_kind is None:
            kind = "hours" if self.max_hours is not None and self.max_shifts is None else "shifts"
            object.__setattr__(self, "load_kind", kind)
        if self.load_kind not in ("shifts", "hours"):
            raise ValueError("load_kind must be 'shifts' or 'hours'")

    def to_dict(self) -> dict:
        return {
            "max_shifts": self.max_shifts,
            "rest_gap": self.rest_gap,
            "max_hours": self.max_hours,
            "days_off": self.days_off,
            "max_workers": self.max_workers,
            "load_kind": self.load_kind,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Stage2Policy":
        days_off = d.get("days_off", "none") or "none"
        return cls(
            max_shifts=d.get("max_shifts", 5),
            rest_gap=d.get("rest_gap", 0),
            max_hours=d.get("max_hours"),
            days_off=days_off,
            max_workers=d.get("max_workers"),
            load_kind=d.get("load_kind"),
        )


@dataclass(frozen=True)
class CostModel:
    """Cost of a shift schedule: uniform, by pattern length, or per (pattern, start)."""

    kind: str = "duration"
    table: Mapping | None = None  # length (TPs) -> cost
    matrix: Mapping | None = None  # (pattern id, start TP) -> cost

    def __post_init__(self):
        if self.kind not in ("uniform", "duration", "matrix"):
            raise ValueError(f"unknown cost kind {self.kind!r}")
        if self.kind == "matrix" and not self.matrix:
            raise ValueError("matrix cost model needs a matrix")

    def cost(self, pattern_id: int, pattern: ShiftPattern, start: int) -> float:
        if self.kind == "uniform":
            return 1
        if self.kind == "duration":
            if self.table and pattern.length in self.table:
                return self.table[pattern.length]
            return pattern.length
        return self.matrix[(pattern_id, start)]

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.table:
            d["table"] = {str(k): v for k, v in self.table.items()}
        if self.matrix:
            d["matrix"] = [[i, j, c] for (i, j), c in sorted(self.matrix.items())]
        return d

    @classmethod
    def from_dict(cls, d: Mapping | None) -> "CostModel":
        if not d:
            return cls()
        table = {int(k): v for k, v in d["table"].items()} if d.get("table") else None
        matrix = {(int(i), int(j)): c for i, j, c in d["matrix"]} if d.get("matrix") else None
        return cls(kind=d.get("kind", "duration"), table=table, matrix=matrix)


UNIFORM_COST = CostModel("uniform")


@dataclass(frozen=True)
class Instance:
    horizon: Horizon
    tasks: tuple = ()
    precedence: tuple = ()
    fixed_demand: PeriodVector | None = None
    pattern_family: str = "FX260"
    custom_patterns: tuple | None = None
    pattern_rules: PatternRuleSet | None = None
    costs: CostModel = field(default_factory=CostModel)
    policy: Stage2Policy = field(default_factory=Stage2Policy)
    shift_window: tuple | None = None  # daily (first start, last occupied TP)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "tasks", tuple(self.tasks))
        object.__setattr__(self, "precedence", tuple(tuple(p) for p in self.precedence))
        if self.fixed_demand is not None and not isinstance(self.fixed_demand, PeriodVector):
            object.__setattr__(self, "fixed_demand", PeriodVector.from_values(self.fixed_demand))

    @property
    def T(self) -> int:
        return self.horizon.T

    @property
    def K(self) -> int:
        return len(self.tasks)

    def task_map(self) -> dict:
        return {t.id: t for t in self.tasks}

    def patterns(self) -> list[ShiftPattern]:
        if self.custom_patterns is not None:
            return list(self.custom_patterns)
        return generate_family(self.pattern_family, self.pattern_rules)

    def daily_shift_window(self) -> tuple | None:
        if self.shift_window is not None:
            return self.shift_window
        if self.pattern_rules is not None:
            return self.pattern_rules.start_window
        if self.custom_patterns is None:
            return family_start_window(self.pattern_family)
        return None

    def total_demand_tps(self) -> int:
        """Sum of R_j; independent of the chosen task starts."""
        base = int(self.fixed_demand.total()) if self.fixed_demand is not None else 0
        return base + sum(t.work for t in self.tasks)

    def total_demand_hours(self) -> float:
        return self.horizon.hours(self.total_demand_tps())

    def with_demand(self, demand: PeriodVector, name: str = "") -> "Instance":
        """Demand-only copy of this instance with a fixed demand vector."""
        return replace(self, tasks=(), precedence=(), fixed_demand=demand, name=name or self.name)


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    task: int | None = None
    tp: int | None = None

    def __str__(self) -> str:
        return self.message


def validate(instance: Instance) -> list[Violation]:
    """All schema and invariant violations; an empty list means valid."""
    out: list[Violation] = []
    T = instance.T
    ids = [t.id for t in instance.tasks]
    seen = set()
    for t in instance.tasks:
        if t.id in seen:
            out.append(Violation("duplicate_task", f"duplicate task id {t.id}", t.id))
        seen.add(t.id)
        if len(t.window) != 2:
            out.append(Violation("bad_window", f"task {t.id}: window must be [l, u]", t.id))
            continue
        l, u = t.window
        if u < l:
            out.append(Violation("window_inverted", f"task {t.id}: window inverted ({l} > {u})", t.id, l))
        if not (1 <= l <= T and 1 <= u <= T):
            out.append(Violation("window_range", f"task {t.id}: window [{l}, {u}] outside [1, {T}]", t.id))
        if t.duration < 1:
            out.append(Violation("duration", f"task {t.id}: duration must be >= 1", t.id))
        if len(t.resource) != t.duration:
            out.append(Violation("resource_length",
                                 f"task {t.id}: resource length {len(t.resource)} != duration {t.duration}", t.id))
        if any(r < 0 for r in t.resource):
            out.append(Violation("resource_negative", f"task {t.id}: negative resource level", t.id))
        elif not any(r > 0 for r in t.resource):
            out.append(Violation("resource_zero", f"task {t.id}: all resource levels are zero", t.id))

    known = set(ids)
    graph: dict = {k: set() for k in known}
    for pair in instance.precedence:
        if len(pair) != 2:
            out.append(Violation("precedence_shape", f"precedence entry {pair} is not a pair"))
            continue
        a, b = pair
        missing = [k for k in (a, b) if k not in known]
        if missing:
            out.append(Violation("precedence_unknown", f"precedence ({a}, {b}) references unknown task(s) {missing}"))
            continue
        graph[b].add(a)
    try:
        tuple(graphlib.TopologicalSorter(graph).static_order())
    except graphlib.CycleError as exc:
        cyc = exc.args[1] if len(exc.args) > 1 else []
        out.append(Violation("precedence_cycle", f"precedence cycle through tasks {list(cyc)}"))

    if instance.fixed_demand is not None:
        if len(instance.fixed_demand) != T:
            out.append(Violation("demand_length", f"fixed demand has length {len(instance.fixed_demand)}, expected {T}"))
        elif not instance.fixed_demand.is_integral:
            out.append(Violation("demand_integral", "fixed demand must be integral"))
    elif not instance.tasks:
        out.append(Violation("no_demand", "instance without tasks needs a fixed demand vector"))

    try:
        patterns = instance.patterns()
    except ValueError as exc:
        out.append(Violation("patterns", f"pattern family: {exc}"))
        patterns = []
    for i, p in enumerate(patterns, start=1):
        if p.omega != instance.horizon.omega:
            out.append(Violation("omega_mismatch",
                                 f"pattern {i} uses omega={p.omega}, horizon uses {instance.horizon.omega}"))
            break
    if instance.custom_patterns is None and instance.pattern_rules is None:
        try:
            fam_omega = family_omega(instance.pattern_family)
        except KeyError:
            fam_omega = None
        if fam_omega is not None and fam_omega != instance.horizon.omega and not any(
            v.code == "omega_mismatch" for v in out
        ):
            out.append(Violation("omega_mismatch", f"family {instance.pattern_family} needs omega={fam_omega}"))

    pol = instance.policy
    if pol.days_off != "none":
        if pol.max_shifts is None and pol.max_hours is None:
            out.append(Violation("policy", "days-off policy needs max_shifts or max_hours"))
        if instance.horizon.days < 2:
            out.append(Violation("policy", "days-off policy needs a horizon of at least two days"))
    if pol.max_shifts is not None and pol.max_shifts < 1:
        out.append(Violation("policy", "max_shifts must be >= 1"))
    if pol.rest_gap < 0:
        out.append(Violation("policy", "rest_gap must be >= 0"))
    if pol.max_hours is not None and patterns and pol.max_hours < max(p.length for p in patterns):
        out.append(Violation("policy", "max_hours is shorter than the longest shift pattern"))
    return out


def induced_demand(instance: Instance, starts: Mapping[int, int]) -> PeriodVector:
    """Demand vector induced by task start TPs, plus any fixed demand."""
    T = instance.T
    R = np.zeros(T, dtype=np.int64)
    for t in instance.tasks:
        j = starts[t.id]
        if not t.l <= j <= t.u:
            raise ValueError(f"task {t.id} start {j} outside window [{t.l}, {t.u}]")
        idx = (np.arange(j - 1, j - 1 + t.duration)) % T
        np.add.at(R, idx, np.asarray(t.resource, dtype=np.int64))
    if instance.fixed_demand is not None:
        R = R + instance.fixed_demand.as_ints()
    return PeriodVector(2 * R)


def precedence_satisfied(instance: Instance, starts: Mapping[int, int]) -> bool:
    # start_k + d_k - 1 <= start_k'
    tm = instance.task_map()
    return all(starts[a] + tm[a].duration - 1 <= starts[b] for a, b in instance.precedence)


# ----------------------------------------------------------------------------- I/O


def instance_to_dict(instance: Instance) -> dict:
    d = {
        "name": instance.name,
        "horizon": {"T": instance.T, "omega": instance.horizon.omega, "cyclic": instance.horizon.cyclic},
        "tasks": [t.to_dict() for t in instance.tasks],
        "precedence": [list(p) for p in instance.precedence],
        "pattern_family": instance.pattern_family,
        "costs": instance.costs.to_dict(),
        "policy": instance.policy.to_dict(),
    }
    if instance.fixed_demand is not None:
        d["fixed_demand"] = instance.fixed_demand.to_list()
    if instance.custom_patterns is not None:
        d["patterns"] = [p.to_dict() for p in instance.custom_patterns]
    if instance.pattern_rules is not None:
        d["pattern_rules"] = instance.pattern_rules.to_dict()
    if instance.shift_window is not None:
        d["shift_window"] = list(instance.shift_window)
    return d


def instance_from_dict(d: Mapping) -> Instance:
    h = d["horizon"]
    horizon = Horizon(T=h["T"], omega=h.get("omega", 30), cyclic=h.get("cyclic", True))
    tasks = tuple(
        Task(t["id"], tuple(t["window"]), t["duration"], tuple(t["resource"])) for t in d.get("tasks", [])
    )
    custom = None
    if d.get("patterns"):
        custom = tuple(patterns_from_doc({"omega": horizon.omega, "patterns": d["patterns"]}))
    rules = PatternRuleSet.from_dict(d["pattern_rules"]) if d.get("pattern_rules") else None
    fd = d.get("fixed_demand")
    return Instance(
        horizon=horizon,
        tasks=tasks,
        precedence=tuple(tuple(p) for p in d.get("precedence", [])),
        fixed_demand=PeriodVector.from_values(fd) if fd is not None else None,
        pattern_family=d.get("pattern_family", "FX260"),
        custom_patterns=custom,
        pattern_rules=rules,
        costs=CostModel.from_dict(d.get("costs")),
        policy=Stage2Policy.from_dict(d.get("policy", {})),
        shift_window=tuple(d["shift_window"]) if d.get("shift_window") else None,
        name=d.get("name", ""),
    )


def dumps_instance(instance: Instance) -> str:
    return json.dumps(instance_to_dict(instance), sort_keys=True, separators=(",", ":"))


def save_instance(instance: Instance, path: str | Path):
    Path(path).write_text(dumps_instance(instance), encoding="utf-8")


def load_instance(path: str | Path, omega: int = 30, family: str = "FX260") -> Instance:
    """Load a JSON instance, or a CSV demand vector (one integer per TP)."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".csv":
        values = [int(float(v)) for row in csv.reader(text.splitlines()) for v in row if v.strip()]
        return Instance(
            horizon=Horizon(T=len(values), omega=omega),
            fixed_demand=PeriodVector.from_values(values),
            pattern_family=family,
            name=path.stem,
        )
    return instance_from_dict(json.loads(text))


def demand_only(demand: Sequence[int], omega: int = 30, family: str = "FX260", **kw) -> Instance:
    return Instance(horizon=Horizon(T=len(demand), omega=omega), fixed_demand=PeriodVector.from_values(demand),
                    pattern_family=family, **kw)
