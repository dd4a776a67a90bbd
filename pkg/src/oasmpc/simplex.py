"""Dense bounded-variable revised simplex.

Two-phase primal method on ``min c@x, A_ub x <= b_ub, A_eq x = b_eq,
lo <= x <= hi``.  Inequalities get nonnegative slacks; phase one minimises
the sum of artificials.  Pricing is Dantzig (largest reduced cost) and falls
back to Bland's rule after a run of degenerate pivots, which rules out
cycling.  Ties always break on the smallest index, so results are
deterministic for identical input.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

__all__ = ["SimplexResult", "solve_bounded_simplex"]

_PIVOT_TOL = 1e-9
_DEGENERATE_RUN = 25


@dataclass
class SimplexResult:
    status: str  # optimal | infeasible | unbounded | numeric-failure
    x: np.ndarray
    objective: float
    iterations: int
    message: str = ""


class _Failure(Exception):
    pass


def _initial_value(lo: float, hi: float) -> float:
    if math.isfinite(lo):
        return lo
    if math.isfinite(hi):
        return hi
    return 0.0


class _Tableau:
    def __init__(self, a, b, cost, lo, hi, basis, x, tol, max_iter):
        self.a, self.b, self.cost = a, b, cost
        self.lo, self.hi = lo, hi
        self.basis = list(basis)
        self.x = x
        self.tol = tol
        self.max_iter = max_iter
        self.iterations = 0

    def _factor(self):
        try:
            lu = lu_factor(self.a[:, self.basis], check_finite=False)
        except (ValueError, np.linalg.LinAlgError) as exc:  # pragma: no cover - defensive
            raise _Failure(f"basis factorisation failed: {exc}")
        if np.min(np.abs(np.diag(lu[0]))) < 1e-13:
            raise _Failure("singular basis")
        return lu

    def _recompute_basic(self, lu):
        nonbasic = np.ones(self.a.shape[1], dtype=bool)
        nonbasic[self.basis] = False
        rhs = self.b - self.a[:, nonbasic] @ self.x[nonbasic]
        self.x[self.basis] = lu_solve(lu, rhs, check_finite=False)

    def run(self) -> str:
        degenerate = 0
        n = self.a.shape[1]
        while True:
            if self.iterations >= self.max_iter:
                raise _Failure(f"iteration limit {self.max_iter} reached")
            lu = self._factor()
            self._recompute_basic(lu)
            y = lu_solve(lu, self.cost[self.basis], trans=1, check_finite=False)
            d = self.cost - self.a.T @ y
            is_basic = np.zeros(n, dtype=bool)
            is_basic[self.basis] = True
            x, lo, hi, tol = self.x, self.lo, self.hi, self.tol
            can_up = (~is_basic) & (x < hi - tol) & (d < -tol)
            can_down = (~is_basic) & (x > lo + tol) & (d > tol)
            eligible = np.flatnonzero(can_up | can_down)
            if eligible.size == 0:
                return "optimal"
            bland = degenerate >= _DEGENERATE_RUN
            if bland:
                j = int(eligible[0])
            else:
                mags = np.abs(d[eligible])
                j = int(eligible[np.flatnonzero(mags == mags.max())[0]])
            direction = 1.0 if d[j] < 0 else -1.0

            col = lu_solve(lu, self.a[:, j], check_finite=False)
            delta = -direction * col  # change of basic vars per unit step
            theta = math.inf
            leave = -1
            leave_to = 0.0
            best_piv = 0.0
            for pos in range(len(self.basis)):
                dv = delta[pos]
                if abs(dv) <= _PIVOT_TOL:
                    continue
                k = self.basis[pos]
                if dv < 0 and math.isfinite(lo[k]):
                    step, bound = (x[k] - lo[k]) / -dv, lo[k]
                elif dv > 0 and math.isfinite(hi[k]):
                    step, bound = (hi[k] - x[k]) / dv, hi[k]
                else:
                    continue
                step = max(step, 0.0)
                if step < theta - 1e-12:
                    theta, leave, leave_to, best_piv = step, pos, bound, abs(dv)
                elif step <= theta + 1e-12:
                    # tie: Bland keeps the smallest variable index, Dantzig the largest pivot
                    if bland:
                        if k < self.basis[leave]:
                            leave, leave_to, best_piv = pos, bound, abs(dv)
                    elif abs(dv) > best_piv * (1 + 1e-9):
                        leave, leave_to, best_piv = pos, bound, abs(dv)
            flip = hi[j] - lo[j] if math.isfinite(hi[j]) and math.isfinite(lo[j]) else math.inf
            if flip <= theta:
                if not math.isfinite(flip):
                    return "unbounded"
                x[j] = hi[j] if direction > 0 else lo[j]
                self.iterations += 1
                degenerate = 0
                continue
            if not math.isfinite(theta):
                return "unbounded"
            x[j] = x[j] + direction * theta
            out = self.basis[leave]
            x[out] = leave_to
            self.basis[leave] = j
            self.iterations += 1
            degenerate = degenerate + 1 if theta <= tol else 0


def solve_bounded_simplex(cost, a_ub, b_ub, a_eq, b_eq, lo, hi, tol: float = 1e-9,
                          max_iter=None) -> SimplexResult:
    cost = np.asarray(cost, dtype=float)
    nv = cost.shape[0]
    a_ub = np.asarray(a_ub, dtype=float).reshape(-1, nv)
    a_eq = np.asarray(a_eq, dtype=float).reshape(-1, nv)
    b_ub = np.asarray(b_ub, dtype=float).ravel()
    b_eq = np.asarray(b_eq, dtype=float).ravel()
    lo = np.asarray(lo, dtype=float).copy()
    hi = np.asarray(hi, dtype=float).copy()
    m_ub, m_eq = a_ub.shape[0], a_eq.shape[0]
    m = m_ub + m_eq
    if m == 0:
        # only bounds: each variable sits at its cheaper bound
        x = np.array([_initial_value(l, h) for l, h in zip(lo, hi)])
        for j in range(nv):
            if cost[j] > 0:
                if not math.isfinite(lo[j]):
                    return SimplexResult("unbounded", x, -math.inf, 0)
                x[j] = lo[j]
            elif cost[j] < 0:
                if not math.isfinite(hi[j]):
                    return SimplexResult("unbounded", x, -math.inf, 0)
                x[j] = hi[j]
        return SimplexResult("optimal", x, float(cost @ x), 0)

    # [x | slacks | artificials]
    a = np.zeros((m, nv + m_ub + m))
    a[:m_ub, :nv] = a_ub
    a[m_ub:, :nv] = a_eq
    a[:m_ub, nv:nv + m_ub] = np.eye(m_ub)
    b = np.concatenate([b_ub, b_eq])
    lo_all = np.concatenate([lo, np.zeros(m_ub), np.zeros(m)])
    hi_all = np.concatenate([hi, np.full(m_ub, math.inf), np.full(m, math.inf)])
    x = np.array([_initial_value(l, h) for l, h in zip(lo_all, hi_all)])
    x[nv + m_ub:] = 0.0
    resid = b - a[:, :nv + m_ub] @ x[:nv + m_ub]
    signs = np.where(resid >= 0.0, 1.0, -1.0)
    art = np.arange(nv + m_ub, nv + m_ub + m)
    a[np.arange(m), art] = signs
    x[art] = np.abs(resid)
    if max_iter is None:
        max_iter = 50 * (m + nv) + 1000

    phase1_cost = np.zeros(a.shape[1])
    phase1_cost[art] = 1.0
    tab = _Tableau(a, b, phase1_cost, lo_all, hi_all, art, x, tol, max_iter)
    try:
        tab.run()
        infeas = float(np.sum(tab.x[art]))
        if infeas > tol * max(1.0, m):
            return SimplexResult("infeasible", tab.x[:nv].copy(), math.nan, tab.iterations,
                                 f"phase one ended with artificial sum {infeas:.3g}")
        # artificials are pinned to zero for phase two
        tab.hi[art] = 0.0
        tab.x[art] = np.minimum(tab.x[art], 0.0)
        tab.cost = np.concatenate([cost, np.zeros(m_ub + m)])
        status = tab.run()
    except _Failure as exc:
        return SimplexResult("numeric-failure", tab.x[:nv].copy(), math.nan, tab.iterations,
                             f"{exc} after {tab.iterations} iterations")
    xs = tab.x[:nv].copy()
    if status == "unbounded":
        return SimplexResult("unbounded", xs, -math.inf, tab.iterations)
    return SimplexResult("optimal", xs, float(cost @ xs), tab.iterations)
