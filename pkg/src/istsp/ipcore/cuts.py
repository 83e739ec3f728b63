"""Gomory mixed-integer cuts read off the optimal simplex basis.

Every variable of an :class:`IPModel` is integer. The slack of a ``<=`` row
is integer too when the row has integral coefficients and right-hand side,
which makes the cuts on such rows stronger. Cuts are returned in ``x`` space
as rows ``G x <= h`` after substituting the slacks out.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .lp import LPCore

F0_MIN = 0.01  # skip rows whose fractional part is this close to an integer
MAX_DYNAMISM = 1e6
MIN_VIOLATION = 1e-4


def _integral_rows(A: sp.csr_matrix, b: np.ndarray) -> np.ndarray:
    A = A.tocsr()
    ok = np.isclose(b, np.round(b), atol=1e-12, rtol=0)
    frac = np.abs(A.data - np.round(A.data)) > 1e-12
    bad_rows = np.repeat(np.arange(A.shape[0]), np.diff(A.indptr))[frac]
    ok[bad_rows] = False
    return ok


def gmi_cuts(core: LPCore, x: np.ndarray, lb: np.ndarray, ub: np.ndarray,
             max_cuts: int = 100) -> tuple[sp.csr_matrix, np.ndarray]:
    """Cuts ``G x <= h`` that separate the current basic solution ``x``.

    ``lb`` and ``ub`` must be the bounds the basis was computed under; cuts
    are globally valid only when those are the model's own bounds.
    """
    n = core.n
    A, b = core.Aub.tocsr(), core.bub
    mu, me = A.shape[0], core.Aeq.shape[0]
    m = mu + me
    empty = (sp.csr_matrix((0, n)), np.zeros(0))
    if m == 0:
        return empty
    col_basic, row_basic_h = core.basis()
    basic = np.r_[col_basic, row_basic_h[core.row_order()]]
    if basic.sum() != m:
        return empty
    full = sp.hstack([core.rows_matrix(), sp.identity(m, format="csc")]).tocsc()
    vals = np.r_[x, b - A @ x, np.zeros(me)]
    lo = np.r_[lb, np.zeros(m)]
    hi = np.r_[ub, np.full(mu, np.inf), np.zeros(me)]
    is_int = np.r_[np.ones(n, bool), _integral_rows(A, b), np.zeros(me, bool)]

    basis = np.flatnonzero(basic)
    nonb = np.flatnonzero(~basic)
    try:
        lu = splu(full[:, basis].tocsc())
    except RuntimeError:  # singular factor: no cuts this round
        return empty
    at_up = np.abs(vals[nonb] - hi[nonb]) < np.abs(vals[nonb] - lo[nonb])
    N = full[:, nonb].tocsc()

    bv = vals[basis]
    f_all = bv - np.floor(bv)
    rows = np.flatnonzero(is_int[basis] & (f_all >= F0_MIN) & (f_all <= 1 - F0_MIN))
    rows = rows[np.argsort(-np.minimum(f_all[rows], 1 - f_all[rows]), kind="stable")][:max_cuts]

    out_G, out_h = [], []
    for r in rows:
        f0 = f_all[r]
        e = np.zeros(m)
        e[r] = 1.0
        abar = N.T @ lu.solve(e, trans="T")
        # in the shifted space every nonbasic moves up from zero
        a = np.where(at_up, -abar, abar)
        fj = a - np.floor(a)
        coef = np.where(is_int[nonb],
                        np.where(fj <= f0, fj / f0, (1 - fj) / (1 - f0)),
                        np.where(a > 0, a / f0, -a / (1 - f0)))
        coef[np.abs(coef) < 1e-11] = 0.0
        g = np.zeros(n + m)
        rhs = 1.0
        up = at_up & (coef != 0)
        dn = ~at_up & (coef != 0)
        g[nonb[up]] -= coef[up]
        rhs -= coef[up] @ hi[nonb[up]]
        g[nonb[dn]] += coef[dn]
        rhs += coef[dn] @ lo[nonb[dn]]
        gs = g[n:n + mu]  # eq slacks are fixed at zero and drop out
        gx = g[:n] - A.T @ gs
        rhs -= gs @ b
        if not np.isfinite(rhs) or not np.all(np.isfinite(gx)):
            continue
        big = np.abs(gx).max(initial=0.0)
        if big == 0:
            continue
        # drop negligible terms, weakening rhs by their largest possible value
        tiny = (np.abs(gx) < big * 1e-9) & (gx != 0)
        if tiny.any():
            rhs -= np.maximum(gx[tiny] * lb[tiny], gx[tiny] * ub[tiny]).sum()
            gx[tiny] = 0.0
        nz = np.abs(gx[gx != 0])
        if nz.max() / nz.min() > MAX_DYNAMISM:
            continue
        gx, rhs = gx / big, rhs / big
        rhs -= 1e-6 * max(1.0, abs(rhs))
        if rhs - gx @ x < MIN_VIOLATION:
            continue
        out_G.append(-gx)
        out_h.append(-rhs)
    if not out_G:
        return empty
    return sp.csr_matrix(np.array(out_G)), np.array(out_h)
