from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

SENSES = ("<=", "==", ">=")
FEAS_TOL = 1e-7


class ModelError(ValueError):
    """The model is malformed (unbounded integer variable, bad sense, ...)."""


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str  # binary | integer
    lower: float
    upper: float


@dataclass
class Constraint:
    indices: np.ndarray
    coeffs: np.ndarray
    sense: str
    rhs: float
    name: str = ""


class IPModel:
    """Pure integer linear program, minimized.

    Variables are referenced by the integer index returned from
    :meth:`add_var`; names are kept for reporting.
    """

    def __init__(self, name: str = ""):
        self.name = name
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self._names: dict[str, int] = {}
        self.objective: dict[int, float] = {}
        self.objective_constant = 0.0
        self.meta: dict = {}  # builder-specific index maps
        self._arrays = None

    # -- construction --------------------------------------------------------
    def add_var(self, name: str, kind: str = "integer", lower: float = 0, upper: float | None = None) -> int:
        if kind not in ("binary", "integer"):
            raise ModelError(f"unknown variable kind {kind!r}")
        if name in self._names:
            raise ModelError(f"duplicate variable name {name!r}")
        if kind == "binary":
            lower, upper = max(0, lower), 1 if upper is None else min(1, upper)
        if upper is None or not math.isfinite(upper) or not math.isfinite(lower):
            raise ModelError(f"variable {name!r} needs finite bounds")
        idx = len(self.variables)
        self.variables.append(Variable(name, kind, float(lower), float(upper)))
        self._names[name] = idx
        self._arrays = None
        return idx

    def var(self, name: str) -> int:
        return self._names[name]

    def add_constraint(self, terms, sense: str, rhs: float, name: str = "") -> int:
        if sense not in SENSES:
            raise ModelError(f"unknown sense {sense!r}")
        if isinstance(terms, Mapping):
            items = list(terms.items())
        else:
            items = list(terms)
        merged: dict[int, float] = {}
        for i, c in items:
            merged[i] = merged.get(i, 0.0) + c
        idx = np.fromiter(merged.keys(), dtype=np.int64, count=len(merged))
        coef = np.fromiter(merged.values(), dtype=np.float64, count=len(merged))
        if len(idx) and (idx.min() < 0 or idx.max() >= len(self.variables)):
            raise ModelError("constraint references unknown variable")
        if not (np.isfinite(coef).all() and math.isfinite(rhs)):
            raise ModelError("non-finite coefficient")
        self.constraints.append(Constraint(idx, coef, sense, float(rhs), name))
        self._arrays = None
        return len(self.constraints) - 1

    def set_objective(self, terms, constant: float = 0.0):
        items = terms.items() if isinstance(terms, Mapping) else terms
        obj: dict[int, float] = {}
        for i, c in items:
            obj[i] = obj.get(i, 0.0) + c
        self.objective = obj
        self.objective_constant = constant
        self._arrays = None

    # -- introspection -------------------------------------------------------
    @property
    def num_vars(self) -> int:
        return len(self.variables)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def validate(self):
        for v in self.variables:
            if v.lower > v.upper:
                raise ModelError(f"variable {v.name!r} has empty domain")

    def objective_is_integral(self) -> bool:
        """True when every feasible objective value is an integer."""
        return float(self.objective_constant).is_integer() and all(
            float(c).is_integer() for c in self.objective.values()
        )

    def arrays(self):
        """Cached dense objective, sparse constraint blocks and bounds."""
        if self._arrays is not None:
            return self._arrays
        n = self.num_vars
        c = np.zeros(n)
        for i, v in self.objective.items():
            c[i] = v
        blocks = {"ub": ([], [], [], []), "eq": ([], [], [], [])}
        for con in self.constraints:
            key = "eq" if con.sense == "==" else "ub"
            rows, cols, data, rhs = blocks[key]
            sign = -1.0 if con.sense == ">=" else 1.0
            r = len(rhs)
            rows.append(np.full(len(con.indices), r, dtype=np.int64))
            cols.append(con.indices)
            data.append(sign * con.coeffs)
            rhs.append(sign * con.rhs)
        mats = {}
        for key, (rows, cols, data, rhs) in blocks.items():
            if rhs:
                A = sp.csr_matrix(
                    (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                    shape=(len(rhs), n),
                )
                mats[key] = (A, np.asarray(rhs, dtype=float))
            else:
                mats[key] = (None, None)
        lb = np.array([v.lower for v in self.variables], dtype=float)
        ub = np.array([v.upper for v in self.variables], dtype=float)
        self._arrays = (c, mats["ub"], mats["eq"], lb, ub)
        return self._arrays

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(sum(c * x[i] for i, c in self.objective.items()) + self.objective_constant)

    def violations(self, x, tol: float = FEAS_TOL) -> list[str]:
        """Constraints, bounds and integrality violated by ``x``."""
        x = np.asarray(x, dtype=float)
        out = []
        for i, v in enumerate(self.variables):
            if x[i] < v.lower - tol or x[i] > v.upper + tol:
                out.append(f"bound {v.name}={x[i]}")
            if abs(x[i] - round(x[i])) > tol:
                out.append(f"integrality {v.name}={x[i]}")
        for k, con in enumerate(self.constraints):
            act = float(con.coeffs @ x[con.indices]) if len(con.indices) else 0.0
            ok = (
                act <= con.rhs + tol if con.sense == "<="
                else act >= con.rhs - tol if con.sense == ">="
                else abs(act - con.rhs) <= tol
            )
            if not ok:
                out.append(f"row {con.name or k}: {act} {con.sense} {con.rhs}")
        return out

    def is_feasible(self, x, tol: float = FEAS_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        c, (Aub, bub), (Aeq, beq), lb, ub = self.arrays()
        if (x < lb - tol).any() or (x > ub + tol).any():
            return False
        if (np.abs(x - np.round(x)) > tol).any():
            return False
        if Aub is not None and (Aub @ x > bub + tol).any():
            return False
        if Aeq is not None and (np.abs(Aeq @ x - beq) > tol).any():
            return False
        return True

    def solution_dict(self, x) -> dict[str, int]:
        return {v.name: int(round(x[i])) for i, v in enumerate(self.variables)}

    def __repr__(self) -> str:
        return f"IPModel({self.name!r}, vars={self.num_vars}, rows={self.num_constraints})"


def locks(model: IPModel):
    """Per-variable flags: can the value be rounded up / down without
    violating any row?"""
    c, (Aub, _), (Aeq, _), lb, ub = model.arrays()
    n = model.num_vars
    up_ok = np.ones(n, dtype=bool)
    down_ok = np.ones(n, dtype=bool)
    if Aub is not None:
        coo = Aub.tocoo()
        up_ok[coo.col[coo.data > 0]] = False
        down_ok[coo.col[coo.data < 0]] = False
    if Aeq is not None:
        coo = Aeq.tocoo()
        up_ok[coo.col] = False
        down_ok[coo.col] = False
    return up_ok, down_ok
