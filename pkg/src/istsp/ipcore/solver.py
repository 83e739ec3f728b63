"""LP relaxation and best-bound branch and bound.

The LP core is HiGHS (``highspy``) with primal feasibility tolerance 1e-7,
warm-started from node to node. The root relaxation is tightened by rounds of
Gomory mixed-integer cuts. Incumbents are rounded to integers and re-checked
against every row before they are accepted, so an LP tolerance can never turn
into a reported infeasible solution.
"""
from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .cuts import gmi_cuts
from .lp import LPCore, LPError, LPResult
from .model import IPModel, locks

__all__ = ["BranchAndBound", "Checkpoint", "LPError", "LPInfeasible", "LPResult", "LPUnbounded",
           "SolveOptions", "SolveResult", "lp_relax", "solve"]

INT_TOL = 1e-6


class LPInfeasible(Exception):
    pass


class LPUnbounded(Exception):
    pass


def lp_relax(model: IPModel) -> tuple[float, np.ndarray]:
    """Optimal value and solution of the continuous relaxation."""
    model.validate()
    _, _, _, lb, ub = model.arrays()
    r = LPCore(model).solve(lb, ub)
    if r.status == "infeasible":
        raise LPInfeasible(model.name)
    if r.status == "unbounded":
        raise LPUnbounded(model.name)
    return r.value, r.x


@dataclass
class SolveOptions:
    time_limit_s: float = 60.0
    abs_gap: float = 1e-6
    rel_gap: float = 0.0
    node_limit: int | None = None
    seed: int = 0
    randomized_rounding: int = 0  # random rounding trials per heuristic call
    dive_every: int = 50
    max_dive_depth: int = 300
    cut_rounds: int = 50  # root Gomory rounds; 0 disables cuts
    cuts_per_round: int = 100
    cut_time_frac: float = 0.25  # share of the time limit the root cut loop may use
    rins_every: int = 500  # nodes between neighborhood searches; 0 disables them
    rins_nodes: int = 500


@dataclass
class Checkpoint:
    nodes: int
    time: float
    bound: float
    incumbent: float


@dataclass
class SolveResult:
    status: str  # optimal | feasible | infeasible | limit_reached
    objective: float | None
    x: np.ndarray | None
    best_bound: float
    nodes: int = 0
    wall_time: float = 0.0
    trace: list = field(default_factory=list)
    certificate: str = ""

    @property
    def has_incumbent(self) -> bool:
        return self.x is not None

    @property
    def gap(self) -> float:
        if self.objective is None:
            return math.inf
        return self.objective - self.best_bound

    def value(self, i: int) -> int:
        return int(round(self.x[i]))


class BranchAndBound:
    """Best-bound search, most-fractional branching (ties: lowest index)."""

    def __init__(self, model: IPModel, opts: SolveOptions | None = None, bounds=None):
        self.model = model
        self.opts = opts or SolveOptions()
        self.lp = LPCore(model)
        self.cuts_added = 0
        self.integral_obj = model.objective_is_integral()
        self.up_ok, self.down_ok = locks(model)
        self.rng = np.random.default_rng(self.opts.seed)
        self.best_x = None
        self.best_f = math.inf
        self.nodes = 0
        self.trace: list[Checkpoint] = []
        self.t0 = 0.0
        self._active = math.inf  # bound of the node being processed
        c, (Aub, bub), (Aeq, _), lb0, ub0 = model.arrays()
        self.lb0, self.ub0 = (lb0, ub0) if bounds is None else (np.asarray(bounds[0], float), np.asarray(bounds[1], float))
        self._c = c
        self._Aub = Aub.tocsc() if Aub is not None else None
        self._bub = bub
        self._free = np.ones(model.num_vars, dtype=bool)  # not in any equality row
        if Aeq is not None:
            self._free[Aeq.tocoo().col] = False
        self._opt_order = [i for i in np.argsort(-np.abs(c), kind="stable") if c[i] != 0 and self._free[i]]

    # -- helpers -------------------------------------------------------------
    def _elapsed(self) -> float:
        return time.perf_counter() - self.t0

    def _out_of_time(self) -> bool:
        return self._elapsed() >= self.opts.time_limit_s

    def _node_bound(self, value: float) -> float:
        return math.ceil(value - INT_TOL) if self.integral_obj else value

    def _tol(self) -> float:
        return max(self.opts.abs_gap, self.opts.rel_gap * abs(self.best_f)) if self.best_x is not None else 0.0

    def _prunable(self, bound: float) -> bool:
        return self.best_x is not None and bound >= self.best_f - self._tol()

    def _one_opt(self, x: np.ndarray) -> np.ndarray:
        """Move each costly variable toward cheaper values while all rows hold."""
        _, _, _, lb, ub = self.model.arrays()
        x = x.copy()
        slack = self._bub - self._Aub @ x if self._Aub is not None else None
        for i in self._opt_order:
            step = -1.0 if self._c[i] > 0 else 1.0
            room = x[i] - lb[i] if step < 0 else ub[i] - x[i]
            if room <= 0:
                continue
            if slack is not None:
                lo, hi = self._Aub.indptr[i], self._Aub.indptr[i + 1]
                rows, vals = self._Aub.indices[lo:hi], self._Aub.data[lo:hi] * step
                grow = vals > 0  # rows whose activity rises with the move
                if grow.any():
                    room = min(room, math.floor(np.min(slack[rows[grow]] / vals[grow]) + 1e-9))
                if room <= 0:
                    continue
                slack[rows] -= vals * room
            x[i] += step * room
        return x

    def _try_incumbent(self, x) -> bool:
        xr = np.round(np.asarray(x, dtype=float))
        if not self.model.is_feasible(xr):
            return False
        xr = self._one_opt(xr)
        f = self.model.evaluate(xr)
        if f < self.best_f - 1e-9:
            self.best_f, self.best_x = f, xr
            return True
        return False

    def _checkpoint(self, heap):
        open_min = heap[0][0] if heap else math.inf
        bound = min(open_min, self._active, self.best_f)
        self.trace.append(Checkpoint(self.nodes, self._elapsed(), bound, self.best_f))

    def _fractional(self, x) -> np.ndarray:
        return np.flatnonzero(np.abs(x - np.round(x)) > INT_TOL)

    def _simple_round(self, x) -> bool:
        frac = self._fractional(x)
        xr = x.copy()
        for i in frac:
            if self.up_ok[i]:
                xr[i] = math.ceil(x[i])
            elif self.down_ok[i]:
                xr[i] = math.floor(x[i])
            else:
                return False
        return self._try_incumbent(xr)

    def _random_round(self, x) -> bool:
        improved = False
        for _ in range(self.opts.randomized_rounding):
            f = x - np.floor(x)
            xr = np.floor(x) + (self.rng.random(len(x)) < f)
            improved |= self._try_incumbent(xr)
        return improved

    def _dive(self, lb, ub, x, heap):
        lb, ub = lb.copy(), ub.copy()
        for _ in range(self.opts.max_dive_depth):
            if self._out_of_time():
                return
            frac = self._fractional(x)
            if len(frac) == 0:
                if self._try_incumbent(x):
                    self._checkpoint(heap)
                return
            if self._simple_round(x):
                self._checkpoint(heap)
            dist = np.abs(x[frac] - np.round(x[frac]))
            near = frac[dist <= 0.1]
            single = frac[np.argmin(dist)]
            for batch in ([near] if len(near) > 1 else []) + [np.array([single])]:
                nlb, nub = lb.copy(), ub.copy()
                for i in batch:
                    v = x[i]
                    target = round(v)
                    if abs(v - math.floor(v) - 0.5) < INT_TOL:
                        target = math.ceil(v) if self.up_ok[i] else math.floor(v)
                    target = min(max(target, nlb[i]), nub[i])
                    nlb[i] = nub[i] = target
                lp = self.lp.solve(nlb, nub)
                if lp.status == "optimal":
                    break
            else:
                return
            lb, ub, x = nlb, nub, lp.x
            if self._prunable(self._node_bound(lp.value)):
                return

    def _root_cuts(self, lb0, ub0):
        """Add Gomory rounds at the root until the bound stalls, then drop slack cuts."""
        o = self.opts
        budget = o.time_limit_s * o.cut_time_frac
        stall = 0
        last = -math.inf
        lp = None
        for _ in range(o.cut_rounds):
            if self._elapsed() >= budget:
                break
            # cold solves give less degenerate vertices and markedly better cuts
            lp = self.lp.cold_solve(lb0, ub0)
            if lp.status != "optimal" or len(self._fractional(lp.x)) == 0:
                break
            if self._prunable(self._node_bound(lp.value)):
                break
            stall = stall + 1 if lp.value - last < 1e-4 * max(1.0, abs(lp.value)) else 0
            if stall >= 5:
                break
            last = lp.value
            G, h = gmi_cuts(self.lp, lp.x, lb0, ub0, o.cuts_per_round)
            if self.best_x is not None and G.shape[0]:
                keep = G @ self.best_x <= h + 1e-6  # guard: never cut off a known solution
                G, h = G[keep], h[keep]
            if G.shape[0] == 0:
                break
            self.lp.add_cuts(G, h)
            self.cuts_added += G.shape[0]
        if self.lp.n_cuts:
            lp = self.lp.solve(lb0, ub0)
            if lp.status == "optimal":
                k = self.lp.num_ub_rows - self.lp.n_cuts
                slack = self.lp.bub[k:] - self.lp.Aub[k:] @ lp.x
                self.lp.drop_cuts(slack <= 1e-6 * (1 + np.abs(self.lp.bub[k:])))

    def _rins(self, x):
        """Solve the sub-problem where the LP point agrees with the incumbent."""
        if self.best_x is None or self.opts.rins_every <= 0:
            return
        fix = np.abs(self.best_x - x) < INT_TOL
        if fix.mean() < 0.3 or fix.all():
            return
        left = self.opts.time_limit_s - self._elapsed()
        limit = min(0.2 * left, max(5.0, 0.05 * self.opts.time_limit_s))
        if limit <= 0.5:
            return
        lb, ub = self.lb0.copy(), self.ub0.copy()
        lb[fix] = ub[fix] = self.best_x[fix]
        sub_opts = SolveOptions(time_limit_s=limit, node_limit=self.opts.rins_nodes, seed=self.opts.seed,
                                cut_rounds=min(self.opts.cut_rounds, 10), rins_every=0, dive_every=20)
        sub = BranchAndBound(self.model, sub_opts, bounds=(lb, ub)).run(initial=self.best_x)
        if sub.x is not None:
            self._try_incumbent(sub.x)

    # -- main loop -----------------------------------------------------------
    def run(self, initial=None) -> SolveResult:
        self.model.validate()
        self.t0 = time.perf_counter()
        lb0, ub0 = self.lb0, self.ub0
        if initial is not None:
            self._try_incumbent(initial)
        heap = [(-math.inf, 0, ())]
        searching = self.opts.node_limit is None or self.opts.node_limit > 0
        if searching and self.opts.cut_rounds > 0 and self.model.num_vars > 0:
            # a dive on the plain relaxation first: cuts tend to make dives fail early
            lp = self.lp.solve(lb0, ub0)
            if lp.status == "optimal":
                self._dive(lb0, ub0, lp.x, heap)
            self._root_cuts(lb0, ub0)
        seq = 1
        limit_hit = False
        root_infeasible = False
        self._checkpoint(heap)
        while heap:
            if self._out_of_time() or (self.opts.node_limit is not None and self.nodes >= self.opts.node_limit):
                limit_hit = True
                break
            bound, _, changes = heap[0]
            if self._prunable(bound):
                heapq.heappop(heap)
                continue
            heapq.heappop(heap)
            self._active = bound
            lb, ub = lb0.copy(), ub0.copy()
            for i, lo, hi in changes:
                lb[i] = max(lb[i], lo)
                ub[i] = min(ub[i], hi)
            lp = self.lp.solve(lb, ub)
            self.nodes += 1
            if lp.status == "unbounded":
                raise LPError(f"relaxation of {self.model.name!r} is unbounded")
            if lp.status == "infeasible":
                if self.nodes == 1:
                    root_infeasible = True
                continue
            v = max(self._node_bound(lp.value), bound)
            self._active = v
            if self._prunable(v):
                continue
            x = lp.x
            frac = self._fractional(x)
            if len(frac) == 0:
                if self._try_incumbent(x):
                    self._checkpoint(heap)
                continue
            improved = self._simple_round(x)
            if self.opts.randomized_rounding:
                improved |= self._random_round(x)
            if improved:
                self._checkpoint(heap)
            if self.nodes == 1 or self.nodes % self.opts.dive_every == 0:
                self._dive(lb, ub, x, heap)
            if self.opts.rins_every and (self.nodes == 1 or self.nodes % self.opts.rins_every == 0):
                self._rins(x)
                self._checkpoint(heap)
            if self._prunable(v):
                continue
            score = np.minimum(x[frac] - np.floor(x[frac]), np.ceil(x[frac]) - x[frac])
            i = int(frac[np.argmax(score)])
            down = changes + ((i, -math.inf, math.floor(x[i])),)
            up = changes + ((i, math.ceil(x[i]), math.inf),)
            heapq.heappush(heap, (v, seq, down))
            heapq.heappush(heap, (v, seq + 1, up))
            seq += 2
            self._active = math.inf
            if self.nodes % 100 == 0:
                self._checkpoint(heap)
        self._active = math.inf
        # drop open nodes that can no longer improve
        heap = [h for h in heap if not self._prunable(h[0])]
        heapq.heapify(heap)
        self._checkpoint(heap)
        final_bound = self.trace[-1].bound
        if limit_hit and heap:
            status = "feasible" if self.best_x is not None else "limit_reached"
        elif self.best_x is not None:
            status = "optimal"
        else:
            status = "infeasible"
        cert = ""
        if status == "infeasible":
            cert = "root LP relaxation infeasible" if root_infeasible else (
                f"every branch infeasible after {self.nodes} nodes")
            final_bound = math.inf
        return SolveResult(
            status=status,
            objective=self.best_f if self.best_x is not None else None,
            x=self.best_x,
            best_bound=final_bound,
            nodes=self.nodes,
            wall_time=self._elapsed(),
            trace=self.trace,
            certificate=cert,
        )


def solve(model: IPModel, opts: SolveOptions | None = None, initial=None) -> SolveResult:
    """Solve ``model`` with the built-in branch and bound."""
    return BranchAndBound(model, opts).run(initial)
