"""Solver backends behind one ``solve(model, opts, initial)`` signature.

``builtin`` is the reference engine. ``highs`` hands the whole model to the
HiGHS MILP solver via ``scipy.optimize.milp`` for users with larger models.
"""
from __future__ import annotations

import math
import time
from typing import Protocol

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from .model import IPModel
from .solver import SolveOptions, SolveResult, solve as builtin_solve


class Backend(Protocol):
    def __call__(self, model: IPModel, opts: SolveOptions | None = None, initial=None) -> SolveResult: ...


def highs_solve(model: IPModel, opts: SolveOptions | None = None, initial=None) -> SolveResult:
    opts = opts or SolveOptions()
    t0 = time.perf_counter()
    c, (Aub, bub), (Aeq, beq), lb, ub = model.arrays()
    cons = []
    if Aub is not None:
        cons.append(LinearConstraint(Aub, -np.inf, bub))
    if Aeq is not None:
        cons.append(LinearConstraint(Aeq, beq, beq))
    options = {"time_limit": opts.time_limit_s, "mip_rel_gap": opts.rel_gap, "disp": False}
    if opts.node_limit is not None:
        options["node_limit"] = opts.node_limit
    res = milp(c, constraints=cons, integrality=np.ones(len(c)), bounds=Bounds(lb, ub), options=options)
    x = None
    obj = None
    if res.x is not None:
        xr = np.round(res.x)
        if model.is_feasible(xr):
            x, obj = xr, model.evaluate(xr)
    if x is None and initial is not None and model.is_feasible(np.round(initial)):
        x = np.round(np.asarray(initial, dtype=float))
        obj = model.evaluate(x)
    bound = getattr(res, "mip_dual_bound", None)
    if bound is None or not math.isfinite(bound):
        bound = obj if res.status == 0 else -math.inf
    else:
        bound += model.objective_constant
    if model.objective_is_integral() and math.isfinite(bound):
        bound = math.ceil(bound - 1e-6)
    if res.status == 0 and x is not None:
        status = "optimal"
    elif res.status == 2:
        status = "infeasible"
        bound = math.inf
    else:
        status = "feasible" if x is not None else "limit_reached"
    if obj is not None:
        bound = min(bound, obj)
    return SolveResult(status, obj, x, bound, wall_time=time.perf_counter() - t0,
                       certificate="HiGHS reports infeasible" if status == "infeasible" else "")


BACKENDS = {"builtin": builtin_solve, "highs": highs_solve}


def get_backend(name: str) -> Backend:
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; choose from {sorted(BACKENDS)}") from None
