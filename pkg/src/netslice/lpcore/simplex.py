"""Bounded-variable revised simplex.

Every row gets a slack column (``a.x + s = b``) whose bounds encode the
relation, so the all-slack basis is always available as a starting point.
Primal infeasibility is handled by a composite phase one that minimises the
sum of bound violations of the basic variables; the same loop then switches
to the true objective once the basis is feasible. That also makes the solver
warm-startable from any basis.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg.blas import dger
from scipy.sparse.linalg import splu

from .model import LPModel, LPSolution, NumericalFailure, Relation, Status

AT_LOWER, AT_UPPER, AT_ZERO, BASIC = 0, 1, 2, 3

PIVOT_TOL = 1e-9
TIE_TOL = 1e-12


@dataclass
class Basis:
    basic: np.ndarray
    state: np.ndarray


class _Tableau:
    def __init__(self, model: LPModel):
        a = model.matrix.tocsc()
        self.m, self.n = a.shape
        m = self.m
        self.a_ext = sp.hstack([a, sp.identity(m, format="csc")], format="csc")
        self.a_t = a.T.tocsr()
        slo = np.zeros(m)
        shi = np.zeros(m)
        for i, rel in enumerate(model.relation):
            if rel is Relation.LE:
                shi[i] = np.inf
            elif rel is Relation.GE:
                slo[i] = -np.inf
        self.lo = np.concatenate([model.lower, slo])
        self.hi = np.concatenate([model.upper, shi])
        self.c = np.concatenate([model.cost, np.zeros(m)])
        self.b = model.rhs.astype(float)
        self.fixed = self.lo == self.hi

    def column(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.a_ext.indptr[j], self.a_ext.indptr[j + 1]
        return self.a_ext.indices[lo:hi], self.a_ext.data[lo:hi]

    def reduced_costs(self, cost: np.ndarray, pi: np.ndarray) -> np.ndarray:
        d = cost.copy()
        d[: self.n] -= self.a_t @ pi
        d[self.n:] -= pi
        return d


def _nonbasic_value(lo: float, hi: float, state: int) -> tuple[float, int]:
    if state == AT_UPPER and np.isfinite(hi):
        return hi, AT_UPPER
    if np.isfinite(lo):
        return lo, AT_LOWER
    if np.isfinite(hi):
        return hi, AT_UPPER
    return 0.0, AT_ZERO


def solve_simplex(model: LPModel, basis: Basis | None = None, *,
                  feas_tol: float = 1e-9, opt_tol: float = 1e-7,
                  max_iter: int | None = None, refactor_every: int = 100,
                  stall_limit: int = 50) -> LPSolution:
    """Solve ``model`` to optimality; raise NumericalFailure when that cannot be done."""
    t = _Tableau(model)
    m, n = t.m, t.n
    total = n + m
    if max_iter is None:
        max_iter = 50 * (m + n)

    state = np.full(total, AT_LOWER, dtype=np.int8)
    x = np.zeros(total)
    if basis is not None and len(basis.basic) == m and len(basis.state) == total:
        basic = basis.basic.astype(np.int64).copy()
        state[:] = basis.state
    else:
        basic = np.arange(n, total)
    state[basic] = BASIC
    for j in np.nonzero(state != BASIC)[0]:
        x[j], state[j] = _nonbasic_value(t.lo[j], t.hi[j], state[j])

    def factor() -> np.ndarray:
        if m == 0:
            return np.zeros((0, 0))
        bmat = t.a_ext[:, basic].tocsc()
        try:
            lu = splu(bmat)
        except RuntimeError as exc:
            raise np.linalg.LinAlgError(str(exc)) from exc
        return np.asfortranarray(lu.solve(np.eye(m)))

    def recompute_basics(binv: np.ndarray) -> None:
        x[basic] = 0.0
        x[basic] = binv @ (t.b - t.a_ext @ x)

    try:
        binv = factor()
        if basis is not None and not np.isfinite(binv).all():
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        basic = np.arange(n, total)
        state[:] = AT_LOWER
        state[basic] = BASIC
        for j in range(n):
            x[j], state[j] = _nonbasic_value(t.lo[j], t.hi[j], AT_LOWER)
        binv = factor()
    recompute_basics(binv)

    it = 0
    since_factor = 0
    degenerate_run = 0
    verified = False
    while True:
        if it >= max_iter:
            raise NumericalFailure(f"iteration cap {max_iter} reached")
        xb = x[basic]
        lb, ub = t.lo[basic], t.hi[basic]
        below = xb < lb - feas_tol
        above = xb > ub + feas_tol
        phase_one = bool(below.any() or above.any())
        if phase_one:
            cost = np.zeros(total)
            cost[basic] = np.where(below, -1.0, np.where(above, 1.0, 0.0))
        else:
            cost = t.c
        pi = cost[basic] @ binv if m else np.zeros(0)
        d = t.reduced_costs(cost, pi)
        d[basic] = 0.0

        tol = opt_tol if not phase_one else 1e-9
        can_up = ((state == AT_LOWER) | (state == AT_ZERO)) & ~t.fixed & (d < -tol)
        can_down = ((state == AT_UPPER) | (state == AT_ZERO)) & ~t.fixed & (d > tol)
        eligible = np.nonzero(can_up | can_down)[0]
        if eligible.size == 0:
            if not verified:
                # confirm on a fresh factorisation before declaring termination
                binv = factor()
                recompute_basics(binv)
                since_factor = 0
                verified = True
                continue
            if phase_one:
                return LPSolution(Status.INFEASIBLE, duals=pi, iterations=it,
                                  basis=Basis(basic.copy(), state.copy()))
            values = x[:n].copy()
            obj = float(t.c[:n] @ values)
            return LPSolution(Status.OPTIMAL, values, obj, duals=pi,
                              dual_bound=_dual_bound(t, pi, d, obj), iterations=it,
                              basis=Basis(basic.copy(), state.copy()))
        verified = False

        bland = degenerate_run > stall_limit
        if bland:
            j = int(eligible[0])
        else:
            j = int(eligible[np.argmax(np.abs(d[eligible]))])
        direction = 1.0 if can_up[j] else -1.0

        rows, vals = t.column(j)
        alpha = binv[:, rows] @ vals if m else np.zeros(0)
        rate = -direction * alpha
        step = np.full(m, np.inf)
        hit_upper = np.zeros(m, dtype=bool)
        dec = rate < -PIVOT_TOL
        inc = rate > PIVOT_TOL
        if phase_one:
            ok = ~below & ~above
            # decreasing: infeasible-above stops at its upper bound, feasible at lower
            sel = dec & above
            step[sel] = (xb[sel] - ub[sel]) / -rate[sel]
            hit_upper[sel] = True
            sel = dec & ok & np.isfinite(lb)
            step[sel] = (xb[sel] - lb[sel]) / -rate[sel]
            sel = inc & below
            step[sel] = (lb[sel] - xb[sel]) / rate[sel]
            sel = inc & ok & np.isfinite(ub)
            step[sel] = (ub[sel] - xb[sel]) / rate[sel]
            hit_upper[sel] = True
        else:
            sel = dec & np.isfinite(lb)
            step[sel] = (xb[sel] - lb[sel]) / -rate[sel]
            sel = inc & np.isfinite(ub)
            step[sel] = (ub[sel] - xb[sel]) / rate[sel]
            hit_upper[sel] = True
        np.maximum(step, 0.0, out=step)

        t_min = float(step.min()) if m else np.inf
        flip = t.hi[j] - t.lo[j]
        if np.isfinite(flip) and flip <= t_min:
            theta = float(flip)
            leave = -1
        elif np.isinf(t_min):
            if phase_one:
                raise NumericalFailure("unbounded ray during phase one")
            return LPSolution(Status.UNBOUNDED, iterations=it,
                              basis=Basis(basic.copy(), state.copy()))
        else:
            theta = t_min
            ties = np.nonzero(step <= t_min + TIE_TOL)[0]
            if bland:
                leave = int(ties[np.argmin(basic[ties])])
            else:
                leave = int(ties[np.argmax(np.abs(alpha[ties]))])

        it += 1
        degenerate_run = degenerate_run + 1 if theta <= TIE_TOL else 0
        x[j] += direction * theta
        x[basic] += rate * theta
        if leave < 0:
            if direction > 0:
                x[j], state[j] = t.hi[j], AT_UPPER
            else:
                x[j], state[j] = t.lo[j], AT_LOWER
            continue

        q = basic[leave]
        if hit_upper[leave]:
            x[q], state[q] = t.hi[q], AT_UPPER
        else:
            x[q], state[q] = t.lo[q], AT_LOWER
        if t.fixed[q]:
            state[q] = AT_LOWER
        basic[leave] = j
        state[j] = BASIC

        since_factor += 1
        if since_factor >= refactor_every:
            try:
                binv = factor()
            except np.linalg.LinAlgError as exc:
                raise NumericalFailure("singular basis") from exc
            recompute_basics(binv)
            since_factor = 0
        else:
            row = binv[leave] / alpha[leave]
            binv = dger(-1.0, alpha, row, a=binv, overwrite_a=True)
            binv[leave] = row


def _dual_bound(t: _Tableau, pi: np.ndarray, d: np.ndarray, obj: float) -> float:
    """Lower bound ``pi.b + sum_j min_{x_j in [lo, hi]} d_j x_j`` valid for every feasible x."""
    bound = float(pi @ t.b)
    for j in np.nonzero(np.abs(d) > 1e-12)[0]:
        edge = t.lo[j] if d[j] > 0 else t.hi[j]
        if np.isfinite(edge):
            bound += d[j] * edge
        elif abs(d[j]) > 1e-9:
            return -np.inf
    return bound
