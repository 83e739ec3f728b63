"""Instance simulator for benchmarking.

Three task types are generated: day-long tasks (long, low staffing), peak
tasks (short, high staffing) and precedence chains. Every distribution knob
is an explicit field with an artifact default; only the aggregate targets
(sizes, mix triples, the emergency-data shape) come from published figures.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .horizon import Horizon
from .instance import Instance, Stage2Policy, Task, UNIFORM_COST

SIZES = {"small": 600, "medium": 1000, "large": 1400}
MIXES = {
    "S1": (81, 17, 2),
    "S2": (79, 17, 4),
    "S3": (72, 16, 12),
    "S4": (81, 17, 2),
    "S5": (79, 17, 4),
    "S6": (72, 16, 12),
}
# S1-S3 share hours; S4-S6 apply the same triples to task counts, uniform windows
MIX_DEFAULTS = {
    "S1": ("hours", "clustered"), "S2": ("hours", "clustered"), "S3": ("hours", "clustered"),
    "S4": ("tasks", "uniform"), "S5": ("tasks", "uniform"), "S6": ("tasks", "uniform"),
}
TYPES = ("day_long", "peak", "precedence")


@dataclass(frozen=True)
class TaskKnobs:
    duration: tuple  # TPs, inclusive range
    resource: tuple  # workers per TP, inclusive range
    width: tuple  # u - l, inclusive range
    centers: tuple = ()  # clustered mode: preferred start hours of day
    spread_h: float = 1.0  # clustered mode: std dev of start around a center, hours


@dataclass(frozen=True)
class SimConfig:
    size: str = "small"
    mix: str | tuple = "S1"
    mix_basis: str | None = None  # hours | tasks; None takes the mix's default
    window_mode: str | None = None  # clustered | uniform; None takes the mix's default
    seed: int = 0
    omega: int = 15
    T: int = 672
    target_hours: float | None = None  # overrides size
    family: str = "FX29"
    day_long: TaskKnobs = TaskKnobs((24, 48), (1, 2), (0, 8), centers=(6.0, 8.0, 14.0), spread_h=1.0)
    peak: TaskKnobs = TaskKnobs((2, 8), (2, 5), (2, 12), centers=(9.0, 13.0, 18.0), spread_h=1.0)
    precedence: TaskKnobs = TaskKnobs((2, 12), (1, 3), (4, 16), centers=(10.0, 15.0), spread_h=2.0)
    chain_length: tuple = (2, 4)
    policy: Stage2Policy = field(default_factory=lambda: Stage2Policy(max_shifts=5, rest_gap=44))

    def resolved(self) -> "SimConfig":
        basis, mode = MIX_DEFAULTS.get(self.mix, ("hours", "clustered")) if isinstance(self.mix, str) \
            else ("hours", "clustered")
        return replace(self, mix_basis=self.mix_basis or basis, window_mode=self.window_mode or mode)

    @property
    def shares(self) -> tuple:
        triple = MIXES[self.mix] if isinstance(self.mix, str) else tuple(self.mix)
        return tuple(float(x) for x in triple)

    def validate(self):
        if isinstance(self.mix, str) and self.mix not in MIXES:
            raise ValueError(f"unknown mix {self.mix!r}")
        if len(self.shares) != 3 or abs(sum(self.shares) - 100) > 1e-9 or min(self.shares) < 0:
            raise ValueError("mix must be three nonnegative percentages summing to 100")
        if self.target_hours is None and self.size not in SIZES:
            raise ValueError(f"size must be one of {sorted(SIZES)}")
        if self.mix_basis not in (None, "hours", "tasks"):
            raise ValueError("mix_basis must be hours or tasks")
        if self.window_mode not in (None, "clustered", "uniform"):
            raise ValueError("window_mode must be clustered or uniform")
        for knobs in (self.day_long, self.peak, self.precedence):
            lo, hi = knobs.duration
            if not 1 <= lo <= hi or hi > self.T:
                raise ValueError("task durations must lie in [1, T]")
            if not 1 <= knobs.resource[0] <= knobs.resource[1]:
                raise ValueError("resource levels must be >= 1")
            if not 0 <= knobs.width[0] <= knobs.width[1] < self.T:
                raise ValueError("window widths must lie in [0, T)")
        lo, hi = self.chain_length
        if not 2 <= lo <= hi:
            raise ValueError("precedence chains need at least two tasks")
        pk = self.precedence
        if hi * (pk.duration[1] + pk.width[1]) >= self.T:
            raise ValueError("precedence chains do not fit in the horizon")


class _Builder:
    def __init__(self, cfg: SimConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.rng = rng
        self.tasks: list[Task] = []
        self.precedence: list[tuple[int, int]] = []
        self.work = {t: 0 for t in TYPES}
        self.count = {t: 0 for t in TYPES}
        self.kinds = {t: [] for t in TYPES}
        self.tpd = 1440 // cfg.omega

    def _int(self, lo_hi) -> int:
        return int(self.rng.integers(lo_hi[0], lo_hi[1] + 1))

    def _start(self, knobs: TaskKnobs, latest: int) -> int:
        """Earliest start TP of a window; ``latest`` is the largest allowed."""
        cfg = self.cfg
        if cfg.window_mode == "clustered" and knobs.centers:
            day = int(self.rng.integers(0, cfg.T // self.tpd))
            c = knobs.centers[int(self.rng.integers(0, len(knobs.centers)))]
            tp = day * self.tpd + int(round((c + self.rng.normal(0, knobs.spread_h)) * 60 / cfg.omega)) + 1
        else:
            tp = int(self.rng.integers(1, cfg.T + 1))
        return min(max(tp, 1), latest)

    def _add(self, kind: str, l: int, width: int, duration: int, level: int, limit: int | None) -> Task:
        if limit is not None:  # trim the task so the type's work lands on its target
            duration = max(1, min(duration, math.ceil(limit / level)))
            level = max(1, min(level, math.ceil(limit / duration)))
        u = min(l + width, self.cfg.T)
        t = Task(len(self.tasks) + 1, (l, u), duration, (level,) * duration)
        self.tasks.append(t)
        self.work[kind] += t.work
        self.count[kind] += 1
        self.kinds[kind].append(t.id)
        return t

    def single(self, kind: str, limit: int | None = None):
        knobs = getattr(self.cfg, kind)
        self._add(kind, self._start(knobs, self.cfg.T), self._int(knobs.width), self._int(knobs.duration),
                  self._int(knobs.resource), limit)

    def chain(self, limit: int | None = None):
        knobs = self.cfg.precedence
        n = self._int(self.cfg.chain_length)
        durs = [self._int(knobs.duration) for _ in range(n)]
        width = self._int(knobs.width)
        l = self._start(knobs, self.cfg.T - sum(durs) - width)
        base = self.work["precedence"]
        prev = None
        for d in durs:
            rem = None if limit is None else limit - (self.work["precedence"] - base)
            if rem is not None and rem <= 0:
                break
            t = self._add("precedence", l, width, d, self._int(knobs.resource), rem)
            if prev is not None:
                self.precedence.append((prev.id, t.id))
            prev = t
            l += t.duration  # successor may start once the predecessor has finished


def _generate(cfg: SimConfig) -> _Builder:
    rng = np.random.default_rng(cfg.seed)
    target_h = cfg.target_hours if cfg.target_hours is not None else SIZES[cfg.size]
    target = int(round(target_h * 60 / cfg.omega))  # worker-TPs
    b = _Builder(cfg, rng)
    shares = np.array(cfg.shares) / 100.0

    def emit(kind, rem):
        if kind == "precedence":
            b.chain(limit=rem)
        else:
            b.single(kind, limit=rem)

    if cfg.mix_basis == "hours":
        goals = {k: int(round(target * s)) for k, s in zip(TYPES, shares)}
        goals["day_long"] = target - goals["peak"] - goals["precedence"]
        for kind in TYPES:
            while b.work[kind] < goals[kind]:
                emit(kind, goals[kind] - b.work[kind])
    else:
        # largest deficit in task-count share picks the next type
        while sum(b.work.values()) < target:
            total = sum(b.count.values()) + 1
            deficit = [shares[i] * total - b.count[k] for i, k in enumerate(TYPES)]
            emit(TYPES[int(np.argmax(deficit))], target - sum(b.work.values()))
    return b


def simulate_detailed(config: SimConfig) -> tuple[Instance, dict]:
    """Simulated instance plus the task ids of each task type."""
    cfg = config.resolved()
    cfg.validate()
    b = _generate(cfg)
    label = cfg.size if cfg.target_hours is None else f"{cfg.target_hours:g}h"
    mix = cfg.mix if isinstance(cfg.mix, str) else "custom"
    inst = Instance(
        horizon=Horizon(cfg.T, cfg.omega),
        tasks=tuple(b.tasks),
        precedence=tuple(b.precedence),
        pattern_family=cfg.family,
        costs=UNIFORM_COST,
        policy=cfg.policy,
        name=f"sim-{label}-{mix}-{cfg.window_mode}-s{cfg.seed}",
    )
    return inst, {k: list(v) for k, v in b.kinds.items()}


def simulate(config: SimConfig) -> Instance:
    """Deterministic simulated instance for ``config`` (seeded)."""
    return simulate_detailed(config)[0]


# ----------------------------------------------------------------------------- emergency-shaped data

EMERGENCY_K = 588
EMERGENCY_PREC_TASKS = 116
EMERGENCY_PAIRS = 113
EMERGENCY_DEMAND_TPS = 4603


def emergency_like(scale: float = 1.0, seed: int = 0) -> Instance:
    """Instance shaped like the live medical-emergency week.

    T=672 at 15 minutes, floor(588*scale) tasks with unit staffing, windows of
    width at most 4 TPs outside precedence, and about 116/588 of the tasks in
    three-task pathways (arrival, treatment, handover). Chain edges plus some
    first-to-last edges give 113 precedence pairs at full scale.
    """
    if not 0 < scale <= 1:
        raise ValueError("scale must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    T, omega, tpd = 672, 15, 96
    K = int(math.floor(EMERGENCY_K * scale))
    n_prec = min(K, int(round(EMERGENCY_PREC_TASKS * K / EMERGENCY_K)))
    n_pairs = int(round(EMERGENCY_PAIRS * K / EMERGENCY_K))
    demand = int(round(EMERGENCY_DEMAND_TPS * K / EMERGENCY_K))
    # durations: mean demand per task, spread 2..16 TPs, then nudged to the total
    mean = demand / max(K, 1)
    dur = np.clip(np.round(rng.gamma(4.0, mean / 4.0, K)), 2, 16).astype(int)
    diff = demand - int(dur.sum())
    i = 0
    while diff != 0 and K:
        k = i % K
        if diff > 0 and dur[k] < 16:
            dur[k] += 1
            diff -= 1
        elif diff < 0 and dur[k] > 2:
            dur[k] -= 1
            diff += 1
        i += 1
        if i > 100 * K:
            break
    # arrivals follow a day/night profile
    hours = np.arange(24)
    weight = 1.0 + 0.8 * np.exp(-((hours - 11) ** 2) / 18.0) + 0.5 * np.exp(-((hours - 19) ** 2) / 8.0)
    p = np.repeat(weight / weight.sum(), tpd // 24) / (tpd // 24)
    chains = []
    left = n_prec
    while left >= 3:
        chains.append(3)
        left -= 3
    if left == 2:
        chains.append(2)
    elif left == 1 and chains:
        chains[-1] += 1
    n_extra = max(0, n_pairs - sum(n - 1 for n in chains))  # first-to-last edges still needed
    tasks, prec = [], []
    tid = 0
    pos = 0
    for n in chains:
        ds = [int(d) for d in dur[pos:pos + n]]
        pos += n
        width = int(rng.integers(2, 9))
        day = int(rng.integers(0, 7))
        l = day * tpd + int(rng.choice(tpd, p=p)) + 1
        l = min(max(l, 1), T - sum(ds) - width)
        ids = []
        for d in ds:
            tid += 1
            tasks.append(Task(tid, (l, l + width), d, (1,) * d))
            ids.append(tid)
            l += d
        prec.extend(zip(ids, ids[1:]))
        if n >= 3 and n_extra > 0:
            prec.append((ids[0], ids[-1]))
            n_extra -= 1
    for k in range(pos, K):
        d = int(dur[k])
        day = int(rng.integers(0, 7))
        l = day * tpd + int(rng.choice(tpd, p=p)) + 1
        width = int(rng.integers(0, 5))
        tid += 1
        tasks.append(Task(tid, (l, min(l + width, T)), d, (1,) * d))
    return Instance(
        horizon=Horizon(T, omega),
        tasks=tuple(tasks),
        precedence=tuple(prec),
        pattern_family="FX29",
        costs=UNIFORM_COST,
        policy=Stage2Policy(max_shifts=5, rest_gap=44),
        name=f"emergency-like-{scale:g}",
    )
