"""Stage 2: assign the stage-1 shift schedules to workers.

The list U_1..U_tau is fixed; each schedule goes to one worker so that the
per-worker rules hold, minimizing the largest worker index in use (xi).
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InfeasibleError, ModelTooLarge
from .instance import Stage2Policy
from .ipcore import IPModel, SolveOptions, get_backend
from .patterns import ShiftPattern, ShiftSchedule

MODES = ("cyclic", "linear")


def overlap(j_v: int, m_v: int, j_w: int, m_w: int, g: int = 0, T: int | None = None,
            mode: str = "cyclic") -> bool:
    """Can schedules (j_v, m_v) and (j_w, m_w) not share a worker?

    Requires j_v <= j_w. Linear mode is the plain predicate
    ``j_w <= j_v + m_v - 1 + g``; cyclic mode also catches the later
    schedule (plus rest) wrapping around the week into the earlier one.
    """
    if j_w < j_v:
        raise ValueError("schedules must be ordered by start")
    if j_w <= j_v + m_v - 1 + g:
        return True
    if mode == "cyclic":
        if T is None:
            raise ValueError("cyclic mode needs T")
        return T - (j_w - j_v) % T <= m_w - 1 + g
    return False


def overlap_pairs(starts, lengths, g: int, T: int, mode: str = "cyclic", chunk: int = 2048) -> np.ndarray:
    """All (v, v') with v < v' meeting the overlap predicate; starts sorted."""
    s = np.asarray(starts, dtype=np.int64)
    m = np.asarray(lengths, dtype=np.int64)
    n = len(s)
    if n and np.any(np.diff(s) < 0):
        raise ValueError("starts must be sorted")
    out = []
    for a in range(0, n, chunk):
        rows = np.arange(a, min(a + chunk, n))
        d = s[None, :] - s[rows, None]  # >= 0 above the diagonal
        hit = d <= (m[rows, None] - 1 + g)
        if mode == "cyclic":
            hit |= (T - d) <= (m[None, :] - 1 + g)
        hit &= np.arange(n)[None, :] > rows[:, None]
        r, c = np.nonzero(hit)
        out.append(np.column_stack((rows[r], c)))
    return np.concatenate(out) if out else np.zeros((0, 2), dtype=np.int64)


def _span(start: int, length: int, T: int, cyclic: bool) -> np.ndarray:
    idx = np.arange(start - 1, start - 1 + length)
    return idx % T if cyclic else idx


@dataclass(frozen=True)
class DayOff:
    days: tuple  # 1-based day numbers
    start: int
    span: int


class AssignmentProblem:
    """Schedules, policy and the derived overlap structure for stage 2."""

    def __init__(self, schedules: Sequence[ShiftSchedule], patterns: Sequence[ShiftPattern],
                 policy: Stage2Policy, T: int, tps_per_day: int = 48, mode: str = "cyclic"):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        self.schedules = sorted(schedules, key=ShiftSchedule.key)
        self.patterns = list(patterns)
        self.policy = policy
        self.T = T
        self.tps_per_day = tps_per_day
        self.mode = mode
        self.starts = np.array([s.start_tp for s in self.schedules], dtype=np.int64)
        self.lengths = np.array([self.patterns[s.pattern_id - 1].length for s in self.schedules], dtype=np.int64)

    @property
    def tau(self) -> int:
        return len(self.schedules)

    @property
    def cyclic(self) -> bool:
        return self.mode == "cyclic"

    @cached_property
    def pairs(self) -> np.ndarray:
        return overlap_pairs(self.starts, self.lengths, self.policy.rest_gap, self.T, self.mode)

    @cached_property
    def dummies(self) -> list[DayOff]:
        kind = self.policy.days_off
        if kind == "none":
            return []
        days = self.T // self.tps_per_day
        if days < 3:
            raise ValueError("days off need a horizon of at least three days")
        tpd = self.tps_per_day
        if kind == "two_any":
            return [DayOff((d,), (d - 1) * tpd + 1, tpd) for d in range(1, days + 1)]
        last = days if self.cyclic else days - 1
        return [DayOff((d, d % days + 1), (d - 1) * tpd + 1, 2 * tpd) for d in range(1, last + 1)]

    @cached_property
    def dummy_pairs(self) -> list[tuple[int, int]]:
        """(schedule v, dummy index) whose spans intersect, without rest gap."""
        out = []
        for q, dmy in enumerate(self.dummies):
            lo = dmy.start
            for v in range(self.tau):
                j, m = int(self.starts[v]), int(self.lengths[v])
                if self.cyclic:
                    hit = (j - lo) % self.T < dmy.span or (lo - j) % self.T < m
                else:
                    hit = j < lo + dmy.span and lo < j + m
                if hit:
                    out.append((v, q))
        return out

    @property
    def days_off_needed(self) -> int:
        return {"none": 0, "two_consecutive": 1, "two_any": 2}[self.policy.days_off]

    def xi_lower_bound(self) -> int:
        """Valid lower bound on the worker count, used to tighten xi."""
        if self.tau == 0:
            return 0
        pol = self.policy
        lb = 1
        if pol.max_shifts:
            lb = max(lb, math.ceil(self.tau / pol.max_shifts))
        if pol.max_hours:
            lb = max(lb, math.ceil(int(self.lengths.sum()) / pol.max_hours))
        cover = np.zeros(self.T + int(self.lengths.max()), dtype=np.int64)
        for j, m in zip(self.starts, self.lengths):
            cover[_span(int(j), int(m), self.T, self.cyclic)] += 1
        return max(lb, int(cover.max()))


def estimate_stage2_size(tau: int, w: int, policy: Stage2Policy, pairs: int = 0, dummies: int = 0,
                         dummy_pairs: int = 0, symmetry: bool = False) -> dict:
    """Closed-form variable and row counts of the stage-2 model."""
    if tau == 0:
        return {"variables": 1, "constraints": 0}
    caps = int(policy.max_shifts is not None) + int(policy.max_hours is not None)
    rows = 2 * tau + w * caps + w * pairs
    if dummies:
        rows += w + w * dummy_pairs
    if symmetry:
        rows += max(w - 1, 0)
    return {"variables": w * (tau + dummies) + 1, "constraints": rows}


def problem_size(problem: AssignmentProblem, w: int, symmetry: bool = False) -> dict:
    return estimate_stage2_size(problem.tau, w, problem.policy, len(problem.pairs), len(problem.dummies),
                                len(problem.dummy_pairs), symmetry)


def build_stage2(problem: AssignmentProblem, w: int, symmetry: bool = True, xi_lb: int = 0,
                 budget: int | None = None) -> IPModel:
    if problem.tau < 1:
        raise ValueError("stage 2 needs at least one schedule")
    if w < 1:
        raise ValueError("worker cap must be >= 1")
    if budget is not None:
        est = problem_size(problem, w, symmetry)["constraints"]
        if est > budget:
            raise ModelTooLarge(est, budget)
    pol = problem.policy
    tau, D = problem.tau, len(problem.dummies)
    model = IPModel("stage2")
    z = np.empty((w, tau + D), dtype=np.int64)
    for u in range(w):
        for v in range(tau + D):
            z[u, v] = model.add_var(f"z[{u + 1},{v + 1}]", "binary")
    xi = model.add_var("xi", "integer", min(xi_lb, w), w)
    ones = np.ones(w)
    for v in range(tau):
        model.add_constraint(zip(z[:, v], ones), "==", 1.0, f"assign[{v + 1}]")
    weights = np.arange(1, w + 1, dtype=float)
    for v in range(tau):
        model.add_constraint(list(zip(z[:, v], weights)) + [(xi, -1.0)], "<=", 0.0, f"xi[{v + 1}]")
    for u in range(w):
        if pol.max_shifts is not None:
            model.add_constraint(zip(z[u, :tau], np.ones(tau)), "<=", float(pol.max_shifts), f"shifts[{u + 1}]")
        if pol.max_hours is not None:
            model.add_constraint(zip(z[u, :tau], problem.lengths.astype(float)), "<=", float(pol.max_hours),
                                 f"hours[{u + 1}]")
    for u in range(w):
        for a, b in problem.pairs:
            model.add_constraint(((z[u, a], 1.0), (z[u, b], 1.0)), "<=", 1.0, f"rest[{u + 1},{a + 1},{b + 1}]")
    if D:
        need = float(problem.days_off_needed)
        for u in range(w):
            model.add_constraint(zip(z[u, tau:], np.ones(D)), "==", need, f"dayoff[{u + 1}]")
        for u in range(w):
            for v, q in problem.dummy_pairs:
                model.add_constraint(((z[u, v], 1.0), (z[u, tau + q], 1.0)), "<=", 1.0,
                                     f"off[{u + 1},{v + 1},{q + 1}]")
    if symmetry:
        big = float(min(pol.max_shifts, tau) if pol.max_shifts else tau)
        for u in range(1, w):
            terms = [(i, 1.0) for i in z[u, :tau]] + [(i, -big) for i in z[u - 1, :tau]]
            model.add_constraint(terms, "<=", 0.0, f"sym[{u + 1}]")
    model.set_objective({xi: 1.0})
    model.meta = {"z": z, "xi": xi, "w": w}
    return model


@dataclass
class Roster:
    """Worker assignment; ``assignment`` maps 1-based worker to 0-based
    positions in ``schedules`` (which is sorted by start, then pattern)."""

    schedules: list
    assignment: dict
    day_off: dict = field(default_factory=dict)  # worker -> tuple of days
    status: str = "optimal"
    bound: float = 0.0
    wall_time: float = 0.0
    size: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)

    @property
    def workers_used(self) -> int:
        return max((u for u, vs in self.assignment.items() if vs), default=0)

    @property
    def feasible(self) -> bool:
        return not self.violations

    def worker_of(self) -> dict:
        return {v: u for u, vs in self.assignment.items() for v in vs}

    def to_dict(self) -> dict:
        workers = []
        for u in sorted(self.assignment):
            rec = {"index": u, "schedules": [[self.schedules[v].pattern_id, self.schedules[v].start_tp]
                                             for v in sorted(self.assignment[u])]}
            if u in self.day_off:
                rec["day_off"] = self.day_off[u][0]
                rec["days_off"] = list(self.day_off[u])
            workers.append(rec)
        return {"workers": workers, "workers_used": self.workers_used, "violations": list(self.violations),
                "status": self.status}

    def save(self, path: str | Path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))


def roster_from_dict(d: dict) -> Roster:
    schedules, assignment, day_off = [], {}, {}
    for rec in d["workers"]:
        u = rec["index"]
        assignment[u] = []
        for pid, j in rec["schedules"]:
            assignment[u].append(len(schedules))
            schedules.append(ShiftSchedule(pid, j))
        if "days_off" in rec:
            day_off[u] = tuple(rec["days_off"])
    order = sorted(range(len(schedules)), key=lambda i: schedules[i].key())
    pos = {old: new for new, old in enumerate(order)}
    return Roster([schedules[i] for i in order], {u: sorted(pos[v] for v in vs) for u, vs in assignment.items()},
                  day_off, d.get("status", "optimal"), violations=list(d.get("violations", [])))


# ----------------------------------------------------------------------------- validation


def _mask_len(problem: AssignmentProblem) -> int:
    if problem.cyclic:
        return problem.T
    return problem.T + int(problem.lengths.max(initial=0)) + problem.policy.rest_gap + 1


def _masks(problem: AssignmentProblem, extra: int = 0) -> list[np.ndarray]:
    out = []
    for j, m in zip(problem.starts, problem.lengths):
        mk = np.zeros(_mask_len(problem), dtype=bool)
        mk[_span(int(j), int(m) + extra, problem.T, problem.cyclic)] = True
        out.append(mk)
    return out


def _day_mask(problem: AssignmentProblem, days: Sequence[int]) -> np.ndarray:
    mk = np.zeros(_mask_len(problem), dtype=bool)
    tpd = problem.tps_per_day
    for d in days:
        mk[np.arange((d - 1) * tpd, d * tpd)] = True
    return mk


def validate_roster(roster: Roster, problem: AssignmentProblem) -> list[str]:
    """Re-check every worker rule from raw schedule footprints."""
    out = []
    pol = problem.policy
    if [s.key() for s in roster.schedules] != [s.key() for s in problem.schedules]:
        out.append("roster schedules differ from the problem's schedule list")
        return out
    seen = np.zeros(problem.tau, dtype=np.int64)
    for vs in roster.assignment.values():
        for v in vs:
            seen[v] += 1
    for v in np.flatnonzero(seen != 1):
        out.append(f"schedule {v + 1} assigned {seen[v]} times")
    span = _masks(problem)
    rest = _masks(problem, pol.rest_gap)
    days = problem.T // problem.tps_per_day
    for u, vs in sorted(roster.assignment.items()):
        vs = sorted(vs)
        if pol.max_shifts is not None and len(vs) > pol.max_shifts:
            out.append(f"worker {u}: {len(vs)} shifts > {pol.max_shifts}")
        hours = int(sum(span[v].sum() for v in vs))
        if pol.max_hours is not None and hours > pol.max_hours:
            out.append(f"worker {u}: {hours} TPs > {pol.max_hours}")
        for i, a in enumerate(vs):
            for b in vs[i + 1:]:
                if (rest[a] & span[b]).any() or (rest[b] & span[a]).any():
                    out.append(f"worker {u}: schedules {a + 1} and {b + 1} violate the rest gap")
        if pol.days_off != "none":
            off = roster.day_off.get(u)
            if off is None:
                out.append(f"worker {u}: no day off recorded")
                continue
            off = tuple(off)
            if pol.days_off == "two_consecutive":
                ok = len(off) == 2 and off[1] == off[0] % days + 1 and (problem.cyclic or off[0] < days)
            else:
                ok = len(off) == 2 and off[0] != off[1]
            if not ok or not all(1 <= d <= days for d in off):
                out.append(f"worker {u}: malformed day off {off}")
                continue
            dm = _day_mask(problem, off)
            for v in vs:
                if (dm & span[v]).any():
                    out.append(f"worker {u}: schedule {v + 1} falls on day off {off}")
    return out


# ----------------------------------------------------------------------------- greedy


def _clash_bits(problem: AssignmentProblem) -> list[int]:
    """Per schedule, a bit set of the day-off dummies its span touches."""
    bits = [0] * problem.tau
    for v, q in problem.dummy_pairs:
        bits[v] |= 1 << q
    return bits


def _free_blocks(problem: AssignmentProblem, clash: int) -> list[int]:
    return [q for q in range(len(problem.dummies)) if not clash >> q & 1]


def greedy_first_fit(problem: AssignmentProblem) -> Roster:
    """Give each schedule, in start order, to the lowest worker that can take it."""
    pol = problem.policy
    adj: dict[int, set] = {v: set() for v in range(problem.tau)}
    for a, b in problem.pairs:
        adj[int(a)].add(int(b))
        adj[int(b)].add(int(a))
    need = problem.days_off_needed
    bits = _clash_bits(problem) if need else []
    D = len(problem.dummies)
    workers: list[list[int]] = []
    hours: list[int] = []
    clash: list[int] = []
    for v in range(problem.tau):
        m = int(problem.lengths[v])
        placed = False
        for u, vs in enumerate(workers):
            if pol.max_shifts is not None and len(vs) >= pol.max_shifts:
                continue
            if pol.max_hours is not None and hours[u] + m > pol.max_hours:
                continue
            if adj[v].intersection(vs):
                continue
            if need and D - bin(clash[u] | bits[v]).count("1") < need:
                continue
            vs.append(v)
            hours[u] += m
            if need:
                clash[u] |= bits[v]
            placed = True
            break
        if not placed:
            if (pol.max_hours is not None and m > pol.max_hours) or (
                    need and D - bin(bits[v]).count("1") < need) or pol.max_shifts == 0:
                raise InfeasibleError("stage2", f"schedule {v + 1} fits no worker on its own")
            workers.append([v])
            hours.append(m)
            clash.append(bits[v] if need else 0)
    assignment = {u + 1: vs for u, vs in enumerate(workers)}
    day_off = {}
    if need:
        for u in assignment:
            day_off[u] = _days_of(problem, _free_blocks(problem, clash[u - 1])[:need])
    return Roster(problem.schedules, assignment, day_off, status="feasible")


def _adjacency(problem: AssignmentProblem) -> list[set]:
    adj = [set() for _ in range(problem.tau)]
    for a, b in problem.pairs:
        adj[int(a)].add(int(b))
        adj[int(b)].add(int(a))
    return adj


def balanced_fit(problem: AssignmentProblem, W: int, rng: np.random.Generator | None = None,
                 adj: list[set] | None = None) -> Roster | None:
    """Try to place every schedule on one of exactly ``W`` workers.

    Each schedule goes to the admissible worker that loses the fewest free
    day-off blocks, then has the fewest shifts so far (ties: latest finishing
    previous shift, or random with ``rng``). Returns
    None when some schedule finds no admissible worker.
    """
    pol = problem.policy
    adj = adj if adj is not None else _adjacency(problem)
    need = problem.days_off_needed
    bits = _clash_bits(problem) if need else [0] * problem.tau
    D = len(problem.dummies)
    workers: list[list[int]] = [[] for _ in range(W)]
    hours, clash, last = [0] * W, [0] * W, [-math.inf] * W
    for v in range(problem.tau):
        m = int(problem.lengths[v])
        best, best_key = None, None
        for u, vs in enumerate(workers):
            if pol.max_shifts is not None and len(vs) >= pol.max_shifts:
                continue
            if pol.max_hours is not None and hours[u] + m > pol.max_hours:
                continue
            if adj[v].intersection(vs):
                continue
            if need and D - bin(clash[u] | bits[v]).count("1") < need:
                continue
            lost = bin(bits[v] & ~clash[u]).count("1")  # day-off blocks this shift would newly rule out
            key = (lost, len(vs), -last[u] if rng is None else rng.random())
            if best_key is None or key < best_key:
                best, best_key = u, key
        if best is None:
            return None
        workers[best].append(v)
        hours[best] += m
        clash[best] |= bits[v]
        last[best] = int(problem.starts[v] + problem.lengths[v])
    workers = [vs for vs in workers if vs]
    assignment = {u + 1: vs for u, vs in enumerate(workers)}
    day_off = {}
    if need:
        for u, vs in assignment.items():
            c = 0
            for v in vs:
                c |= bits[v]
            day_off[u] = _days_of(problem, _free_blocks(problem, c)[:need])
    return Roster(problem.schedules, assignment, day_off, status="feasible")


def heuristic_roster(problem: AssignmentProblem, seed: int = 0, restarts: int = 50) -> Roster:
    """Best of first-fit and a balanced search from the lower bound upward."""
    best = greedy_first_fit(problem)
    adj = _adjacency(problem)
    rng = np.random.default_rng(seed)
    for W in range(problem.xi_lower_bound(), best.workers_used):
        r = balanced_fit(problem, W, adj=adj)
        for _ in range(restarts if r is None else 0):
            r = balanced_fit(problem, W, rng, adj)
            if r is not None:
                break
        if r is not None:
            return r
    return best


def _days_of(problem: AssignmentProblem, qs: Sequence[int]) -> tuple:
    days = []
    for q in qs:
        days.extend(problem.dummies[q].days)
    return tuple(days)


# ----------------------------------------------------------------------------- solve


def _initial_vector(model: IPModel, problem: AssignmentProblem, roster: Roster) -> np.ndarray | None:
    z, xi, w = model.meta["z"], model.meta["xi"], model.meta["w"]
    if roster.workers_used > w:
        return None
    x = np.zeros(model.num_vars)
    for u, vs in roster.assignment.items():
        x[z[u - 1, vs]] = 1
    for u, days in roster.day_off.items():
        for q, d in enumerate(problem.dummies):
            if set(d.days) <= set(days) and (problem.days_off_needed == 2 or d.days == days):
                x[z[u - 1, problem.tau + q]] = 1
    x[xi] = roster.workers_used
    return x


def solve_stage2(problem: AssignmentProblem, opts: SolveOptions | None = None, budget: int | None = None,
                 symmetry: bool = True, backend: str = "builtin") -> Roster:
    """Exact (or time-limited) worker assignment, checked by the validator."""
    t0 = time.perf_counter()
    if problem.tau == 0:
        return Roster([], {}, status="optimal")
    warm = heuristic_roster(problem, seed=opts.seed if opts else 0)
    pol = problem.policy
    w = warm.workers_used if pol.max_workers is None else min(pol.max_workers, warm.workers_used)
    lb = problem.xi_lower_bound()
    if pol.max_shifts is not None and pol.max_shifts * w < problem.tau:
        raise InfeasibleError("stage2", f"b*w = {pol.max_shifts}*{w} < tau = {problem.tau}")
    if budget is not None:
        est = problem_size(problem, w, symmetry)["constraints"]
        if est > budget:
            raise ModelTooLarge(est, budget)
    if warm.workers_used <= lb and w == warm.workers_used:
        warm.status, warm.bound = "optimal", float(lb)
        warm.size = problem_size(problem, w, symmetry)
        warm.violations = validate_roster(warm, problem)
        warm.wall_time = time.perf_counter() - t0
        _check(warm)
        return warm
    model = build_stage2(problem, w, symmetry, xi_lb=lb, budget=budget)
    res = get_backend(backend)(model, opts, _initial_vector(model, problem, warm))
    if res.x is None:
        if res.status == "infeasible":
            raise InfeasibleError("stage2", f"{res.certificate}; worker cap w={w}")
        raise InfeasibleError("stage2", f"no roster within limits ({res.status})")
    z = model.meta["z"]
    vals = np.round(res.x[z]).astype(int)
    used = [u for u in range(w) if vals[u, :problem.tau].any()]  # renumbered 1..n in index order
    assignment = {k + 1: [int(v) for v in np.flatnonzero(vals[u, :problem.tau])] for k, u in enumerate(used)}
    day_off = {}
    if problem.dummies:
        for k, u in enumerate(used):
            day_off[k + 1] = _days_of(problem, list(np.flatnonzero(vals[u, problem.tau:])))
    roster = Roster(problem.schedules, assignment, day_off, status=res.status, bound=float(res.best_bound),
                    wall_time=time.perf_counter() - t0, size={"variables": model.num_vars, "constraints": model.num_constraints})
    roster.violations = validate_roster(roster, problem)
    _check(roster)
    return roster


def _check(roster: Roster):
    if roster.violations:
        raise RuntimeError("stage-2 roster failed validation: " + "; ".join(roster.violations))
