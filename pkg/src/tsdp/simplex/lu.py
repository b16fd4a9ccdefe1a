"""Bounded-variable revised simplex on an explicit sparse LU factorization.

General purpose: it only sees ``A x = b, 0 <= x <= u``. Basis inverses are
kept as a sparse LU of the basis matrix followed by a product-form eta
file, refactorized every ``refactor_interval`` pivots. Pricing is Dantzig,
switching to Bland's smallest-index rule after ``10 n`` consecutive
degenerate pivots.

Each constraint row r owns an artificial column ``sign(b_r) e_r``. The
perturbation LP has rank 2n - 1, so at least one artificial stays basic at
zero in phase 2, with both bounds fixed at 0.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..errors import BackendError, Infeasible, PivotLimit, Unbounded
from ..lp import LpProblem, LpSolution, Status
from .basis import BackendOptions, Basis


class _Factor:
    def __init__(self, B: sp.csc_array):
        try:
            self.lu = spla.splu(sp.csc_matrix(B))
        except RuntimeError as exc:  # exactly singular
            raise BackendError(f"singular basis: {exc}") from exc
        self.etas: list[tuple[int, np.ndarray]] = []

    def ftran(self, v):
        x = self.lu.solve(np.asarray(v, dtype=np.float64))
        for r, w in self.etas:
            xr = x[r] / w[r]
            x -= w * xr
            x[r] = xr
        return x

    def btran(self, c):
        y = np.array(c, dtype=np.float64)
        for r, w in reversed(self.etas):
            yr = y[r]
            y[r] = (yr - (w @ y - w[r] * yr)) / w[r]
        return self.lu.solve(y, trans="T")

    def update(self, r, w):
        self.etas.append((r, w.copy()))


class _Lp:
    def __init__(self, problem: LpProblem):
        A = problem.constraint_matrix()
        self.m, self.p = A.shape
        b = problem.rhs
        sgn = np.where(b >= 0, 1.0, -1.0)
        art = sp.csc_array((sgn, (np.arange(self.m), np.arange(self.m))), shape=(self.m, self.m))
        self.A = sp.hstack([A, art], format="csc")
        self.AT = self.A.T.tocsr()
        self.b = b
        self.upper = np.concatenate([problem.upper, np.full(self.m, np.inf)])
        self.ncols = self.p + self.m

    def column(self, j):
        v = np.zeros(self.m)
        lo, hi = self.A.indptr[j], self.A.indptr[j + 1]
        v[self.A.indices[lo:hi]] = self.A.data[lo:hi]
        return v


def solve_lu(problem: LpProblem, warm: Basis | None, opts: BackendOptions) -> LpSolution:
    lp = _Lp(problem)
    m, p = lp.m, lp.p
    keys = problem.keys
    limit = opts.pivot_limit(problem.n)

    at_upper = np.zeros(lp.ncols, bool)
    basic = None
    if warm is not None:
        basic, at_upper = _warm(lp, keys, warm)
    if basic is None:
        basic = np.arange(p, p + m)
        at_upper[:] = False

    is_basic = np.zeros(lp.ncols, bool)
    is_basic[basic] = True
    fac = _Factor(lp.A[:, basic])
    xb = _basic_values(lp, fac, basic, at_upper)
    if warm is not None and (xb.min() < -opts.feas_tol or
                             np.any(xb > lp.upper[basic] + opts.feas_tol)):
        basic = np.arange(p, p + m)
        at_upper[:] = False
        is_basic[:] = False
        is_basic[basic] = True
        fac = _Factor(lp.A[:, basic])
        xb = _basic_values(lp, fac, basic, at_upper)

    state = dict(basic=basic, is_basic=is_basic, at_upper=at_upper, fac=fac, xb=xb, pivots=0)
    art_basic = basic >= p
    piv1 = 0
    if np.any(xb[art_basic] > opts.feas_tol):
        cost = np.zeros(lp.ncols)
        cost[p:] = 1.0
        _iterate(lp, cost, state, opts, limit)
        piv1 = state["pivots"]
        b_ = state["basic"]
        if state["xb"][b_ >= p].sum() > opts.feas_tol:
            raise Infeasible("no perturbation on this support reaches the target "
                             f"(phase-1 residual {state['xb'][b_ >= p].sum():.3e})")
    lp.upper[p:] = 0.0
    state["xb"][state["basic"] >= p] = 0.0
    cost = np.zeros(lp.ncols)
    cost[:p] = 1.0
    y = _iterate(lp, cost, state, opts, limit)

    basic, at_upper, xb = state["basic"], state["at_upper"], state["xb"]
    x = np.zeros(lp.ncols)
    x[at_upper] = lp.upper[at_upper]
    x[basic] = xb
    x = x[:p]
    x[np.abs(x) <= 1e-13] = 0.0
    up = problem.upper
    near = np.isfinite(up) & (np.abs(x - up) <= 1e-13)
    x[near] = up[near]
    if x.size and (x.min() < -opts.feas_tol or np.any(x > up + opts.feas_tol)):
        raise BackendError("basic values left their bounds")
    x = np.clip(x, 0.0, up)

    status = np.full(p, Status.AT_LOWER, np.int8)
    status[at_upper[:p]] = Status.AT_UPPER
    real_basic = basic[basic < p]
    status[real_basic] = Status.BASIC
    basic_keys = np.concatenate([keys[real_basic], -(basic[basic >= p] - p + 1)])
    basis = Basis(np.sort(basic_keys), keys[at_upper[:p]])
    n = problem.n
    return LpSolution(x, y[:n].copy(), y[n:].copy(), status, float(x.sum()), basis,
                      state["pivots"], piv1, "lu")


def _warm(lp: _Lp, keys, warm: Basis):
    p, m = lp.p, lp.m
    bk = np.asarray(warm.basic_keys, dtype=np.int64)
    if bk.size != m:
        return None, np.zeros(lp.ncols, bool)
    real = bk[bk >= 0]
    arts = -bk[bk < 0] - 1
    pos = np.searchsorted(keys, real)
    if np.any(pos >= p) or np.any(keys[np.minimum(pos, max(p - 1, 0))] != real):
        return None, np.zeros(lp.ncols, bool)
    at_upper = np.zeros(lp.ncols, bool)
    up = np.asarray(warm.upper_keys, dtype=np.int64)
    if up.size:
        upos = np.searchsorted(keys, up)
        if np.any(upos >= p) or np.any(keys[np.minimum(upos, p - 1)] != up):
            return None, np.zeros(lp.ncols, bool)
        at_upper[upos] = True
    basic = np.concatenate([pos, p + arts]).astype(np.int64)
    try:
        _Factor(lp.A[:, basic])
    except BackendError:
        return None, np.zeros(lp.ncols, bool)
    return basic, at_upper


def _basic_values(lp: _Lp, fac: _Factor, basic, at_upper):
    xn = np.where(at_upper, lp.upper, 0.0)
    xn[basic] = 0.0
    rhs = lp.b - lp.A @ np.where(np.isfinite(xn), xn, 0.0)
    return fac.ftran(rhs)


def _iterate(lp: _Lp, cost, st, opts: BackendOptions, limit):
    m = lp.m
    basic, is_basic, at_upper = st["basic"], st["is_basic"], st["at_upper"]
    fac, xb = st["fac"], st["xb"]
    upper = lp.upper
    degenerate_run = 0
    bland_after = 10 * (m // 2)
    since_refactor = len(fac.etas)
    while True:
        y = fac.btran(cost[basic])
        d = cost - lp.AT @ y
        movable = ~is_basic & (upper > 0)
        viol = np.where(at_upper, d, -d)
        elig = movable & (viol > opts.opt_tol)
        if not elig.any():
            st.update(basic=basic, fac=fac, xb=xb)
            return y
        if st["pivots"] >= limit:
            raise PivotLimit(f"pivot limit {limit} reached")
        bland = degenerate_run >= bland_after
        q = int(np.flatnonzero(elig)[0]) if bland else int(np.argmax(np.where(elig, viol, -np.inf)))
        dirn = -1.0 if at_upper[q] else 1.0  # +1 increases x_q
        w = fac.ftran(lp.column(q))
        # x_B(t) = x_B - dirn * t * w
        step = np.inf
        leave = -1
        leave_to_upper = False
        g = dirn * w
        tol = 1e-11
        dec = g > tol
        inc = g < -tol
        ub = upper[basic]
        cand = np.full(m, np.inf)
        cand[dec] = np.maximum(xb[dec], 0.0) / g[dec]
        fin = inc & np.isfinite(ub)
        cand[fin] = np.maximum(ub[fin] - xb[fin], 0.0) / -g[fin]
        if np.isfinite(cand).any():
            tmin = cand.min()
            ties = np.flatnonzero(cand <= tmin + 1e-14)
            if bland:
                r = int(ties[np.argmin(basic[ties])])
            else:
                r = int(ties[np.argmax(np.abs(g[ties]))])
            step, leave, leave_to_upper = float(cand[r]), r, bool(fin[r])
        if upper[q] < step:
            step, leave = float(upper[q]), -1
        if not np.isfinite(step):
            raise Unbounded("unbounded direction in the perturbation LP")
        st["pivots"] += 1
        degenerate_run = degenerate_run + 1 if step <= 0.0 else 0
        xb -= dirn * step * w
        if leave < 0:
            at_upper[q] = not at_upper[q]
            continue
        out = basic[leave]
        is_basic[out] = False
        at_upper[out] = leave_to_upper
        is_basic[q] = True
        entering_value = (upper[q] if at_upper[q] else 0.0) + dirn * step
        at_upper[q] = False
        basic[leave] = q
        xb[leave] = entering_value
        since_refactor += 1
        if since_refactor >= opts.refactor_interval:
            fac = _Factor(lp.A[:, basic])
            xb = _basic_values(lp, fac, basic, at_upper)
            since_refactor = 0
        else:
            fac.update(leave, w)
