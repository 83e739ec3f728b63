"""Warm-started LP core on HiGHS (``highspy``) with simplex basis access.

One :class:`LPCore` holds the relaxation of a model for the whole search:
node solves only change column bounds, so HiGHS restarts from the previous
basis. Cuts are appended as extra ``<=`` rows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import highspy
import numpy as np
import scipy.sparse as sp

from .model import FEAS_TOL, IPModel

INF = highspy.kHighsInf
_STATUS = highspy.HighsModelStatus
_BASIC = highspy.HighsBasisStatus.kBasic


class LPError(RuntimeError):
    """The LP core failed numerically; never silently ignored."""


@dataclass
class LPResult:
    status: str  # optimal | infeasible | unbounded
    value: float = math.nan
    x: np.ndarray | None = None


class LPCore:
    def __init__(self, model: IPModel):
        c, (Aub, bub), (Aeq, beq), lb, ub = model.arrays()
        self.name = model.name
        self.n = model.num_vars
        self.const = model.objective_constant
        self.Aub = Aub if Aub is not None else sp.csr_matrix((0, self.n))
        self.bub = bub if bub is not None else np.zeros(0)
        self.Aeq = Aeq if Aeq is not None else sp.csr_matrix((0, self.n))
        self.beq = beq if beq is not None else np.zeros(0)
        self.n_cuts = 0
        self.h = highspy.Highs()
        for key, val in (("output_flag", False), ("threads", 1), ("presolve", "off"),
                         ("primal_feasibility_tolerance", FEAS_TOL), ("random_seed", 0)):
            self.h.setOptionValue(key, val)
        lp = highspy.HighsLp()
        lp.num_col_ = self.n
        lp.num_row_ = self.Aub.shape[0] + self.Aeq.shape[0]
        lp.col_cost_ = np.asarray(c, dtype=float)
        lp.col_lower_ = np.asarray(lb, dtype=float)
        lp.col_upper_ = np.asarray(ub, dtype=float)
        lp.row_lower_ = np.r_[np.full(self.Aub.shape[0], -INF), self.beq]
        lp.row_upper_ = np.r_[self.bub, self.beq]
        M = sp.vstack([self.Aub, self.Aeq]).tocsc()
        M.sort_indices()
        lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
        lp.a_matrix_.start_ = M.indptr
        lp.a_matrix_.index_ = M.indices
        lp.a_matrix_.value_ = M.data
        self.h.passModel(lp)
        self._idx = np.arange(self.n, dtype=np.int32)

    @property
    def num_ub_rows(self) -> int:
        return self.Aub.shape[0]

    def solve(self, lb: np.ndarray, ub: np.ndarray) -> LPResult:
        if self.n == 0:
            return LPResult("optimal", self.const, np.zeros(0))
        self.h.changeColsBounds(self.n, self._idx, np.asarray(lb, dtype=float), np.asarray(ub, dtype=float))
        self.h.run()
        st = self.h.getModelStatus()
        if st not in (_STATUS.kOptimal, _STATUS.kInfeasible):
            # a warm start can stall or leave infeasible/unbounded ambiguous; retry cold
            self.h.clearSolver()
            self.h.run()
            st = self.h.getModelStatus()
        if st == _STATUS.kOptimal:
            x = np.array(self.h.getSolution().col_value)
            return LPResult("optimal", self.h.getInfo().objective_function_value + self.const, x)
        if st == _STATUS.kInfeasible:
            return LPResult("infeasible")
        if st in (_STATUS.kUnbounded, _STATUS.kUnboundedOrInfeasible):
            return LPResult("unbounded")
        raise LPError(f"LP core failed on {self.name!r}: {self.h.modelStatusToString(st)}")

    def basis(self) -> tuple[np.ndarray, np.ndarray]:
        """Basic flags for the columns and for the rows (ub rows, eq rows, cuts)."""
        b = self.h.getBasis()
        cols = np.array([s == _BASIC for s in b.col_status], dtype=bool)
        rows = np.array([s == _BASIC for s in b.row_status], dtype=bool)
        return cols, rows

    def add_cuts(self, G: sp.csr_matrix, rhs: np.ndarray):
        """Append rows ``G x <= rhs``."""
        G = G.tocsr()
        G.sort_indices()
        k = G.shape[0]
        if k == 0:
            return
        self.h.addRows(k, np.full(k, -INF), np.asarray(rhs, dtype=float), G.nnz,
                       G.indptr[:-1].astype(np.int32), G.indices.astype(np.int32), G.data.astype(float))
        self.Aub = sp.vstack([self.Aub, G]).tocsr()
        self.bub = np.r_[self.bub, rhs]
        self.n_cuts += k

    def drop_cuts(self, keep: np.ndarray):
        """Delete the cuts whose entry in the boolean mask ``keep`` is False."""
        keep = np.asarray(keep, dtype=bool)
        if keep.all():
            return
        n_ub0 = self.num_ub_rows - self.n_cuts
        gone = np.flatnonzero(~keep)
        self.h.deleteRows(len(gone), (n_ub0 + self.Aeq.shape[0] + gone).astype(np.int32))
        rows = np.r_[np.ones(n_ub0, dtype=bool), keep]
        self.Aub = self.Aub[rows]
        self.bub = self.bub[rows]
        self.n_cuts = int(keep.sum())

    def cold_solve(self, lb: np.ndarray, ub: np.ndarray) -> LPResult:
        """Solve from scratch; gives a fresh vertex instead of a warm-started one."""
        self.h.clearSolver()
        return self.solve(lb, ub)

    def rows_matrix(self) -> sp.csc_matrix:
        """All rows in HiGHS order: ub rows (including cuts) first, then eq rows.

        Cuts are appended after the eq rows inside HiGHS; :meth:`row_order`
        maps between the two orders.
        """
        return sp.vstack([self.Aub, self.Aeq]).tocsc()

    def row_order(self) -> np.ndarray:
        """For each row of :meth:`rows_matrix`, its HiGHS row index."""
        n_ub0 = self.num_ub_rows - self.n_cuts
        n_eq = self.Aeq.shape[0]
        ub0 = np.arange(n_ub0)
        cuts = n_ub0 + n_eq + np.arange(self.n_cuts)
        eq = n_ub0 + np.arange(n_eq)
        return np.r_[ub0, cuts, eq]
