"""Nominal OA-SMPC problem: build and solve one receding-horizon step.

States are eliminated through the stacked dynamics, so the decision vector
is the input sequence ``u(t|t) ... u(t+N-1|t)`` followed by epigraph
auxiliaries for the peak and absolute-value cost terms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .lp import (
    LinearProgram,
    LpSolution,
    LpStatus,
    add_abs_epigraphs,
    add_max_epigraph,
    infeasible_rows,
    solve_lp,
)
from .lti import HorizonData, ShapeError, propagate_nominal

__all__ = [
    "PeakGroup",
    "ObjectiveSpec",
    "MpcStepResult",
    "InfeasibleStepError",
    "SolverFailure",
    "build_nominal_problem",
    "solve_step",
    "input_name",
    "ProblemCache",
]


@dataclass(frozen=True)
class PeakGroup:
    """``rate * max(u_component(k) for k in steps)``, optionally floored at 0."""

    component: int
    steps: tuple
    rate: float
    floor: bool = True
    name: str = "peak"

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("peak rate must be nonnegative")
        object.__setattr__(self, "steps", tuple(int(k) for k in self.steps))


@dataclass
class ObjectiveSpec:
    """LP-representable objective over an ``N``-step input sequence.

    ``linear`` and ``abs_weights`` are ``(N, m)`` arrays of per-step weights
    on ``u_j(t+k|t)`` and ``|u_j(t+k|t)|``.
    """

    linear: np.ndarray
    abs_weights: np.ndarray
    peaks: List[PeakGroup] = field(default_factory=list)
    constant: float = 0.0

    def __post_init__(self):
        self.linear = np.atleast_2d(np.asarray(self.linear, dtype=float))
        self.abs_weights = np.atleast_2d(np.asarray(self.abs_weights, dtype=float))
        if self.linear.shape != self.abs_weights.shape:
            raise ShapeError("linear and abs_weights must have the same (N, m) shape")
        if np.any(self.abs_weights < 0):
            raise ValueError("abs weights must be nonnegative")
        n_steps = self.linear.shape[0]
        for g in self.peaks:
            if any(not 0 <= k < n_steps for k in g.steps):
                raise ValueError(f"peak group {g.name} has steps outside the horizon")

    @classmethod
    def zero(cls, n_steps: int, m: int) -> "ObjectiveSpec":
        return cls(np.zeros((n_steps, m)), np.zeros((n_steps, m)))

    @property
    def horizon(self) -> int:
        return self.linear.shape[0]

    def evaluate(self, u_plan) -> float:
        """Objective value of an input plan, computed directly (no LP)."""
        u = np.asarray(u_plan, dtype=float).reshape(self.linear.shape)
        val = float(np.sum(self.linear * u) + np.sum(self.abs_weights * np.abs(u)) + self.constant)
        for g in self.peaks:
            if not g.steps:
                continue
            peak = float(np.max(u[list(g.steps), g.component]))
            if g.floor:
                peak = max(peak, 0.0)
            val += g.rate * peak
        return val


@dataclass
class MpcStepResult:
    u_first: np.ndarray
    u_plan: np.ndarray
    x_plan: np.ndarray
    objective: float
    status: LpStatus
    lp: Optional[LinearProgram] = None


class InfeasibleStepError(RuntimeError):
    """The nominal problem has no feasible input sequence."""

    def __init__(self, message: str, report: Sequence[str], lp: LinearProgram):
        super().__init__(message)
        self.report = list(report)
        self.lp = lp


class SolverFailure(RuntimeError):
    """The LP solver returned neither an optimum nor a clean infeasibility."""

    def __init__(self, solution: LpSolution, lp: LinearProgram):
        super().__init__(
            f"LP solver status {solution.status.value} after {solution.iterations} iterations "
            f"(worst residual {solution.max_residual:.3g}): {solution.message}"
        )
        self.solution = solution
        self.lp = lp


def input_name(j: int, k: int) -> str:
    return f"u{j + 1}({k})"


def _split_input_rows(spec):
    """Indices of ``S`` rows acting on one input (bounds) and on several (rows)."""
    single, multi = [], []
    for i, row in enumerate(spec.s_mat):
        nz = np.flatnonzero(row)
        if nz.size == 1:
            single.append(i)
        elif nz.size > 1:
            multi.append(i)
    return single, multi


def _check_inputs(data: HorizonData, objective: ObjectiveSpec, x0):
    x0 = data.x0 if x0 is None else np.asarray(x0, dtype=float).ravel()
    if x0.shape != (data.system.n,):
        raise ShapeError(f"x0 must have length {data.system.n}")
    if objective.linear.shape != (data.horizon_n, data.system.m):
        raise ShapeError(f"objective is for shape {objective.linear.shape}, "
                         f"horizon needs {(data.horizon_n, data.system.m)}")
    if np.any(data.stacked_h > 0):
        raise ValueError("relaxation h must be componentwise <= 0")
    return x0


def _nominal_rhs(data: HorizonData, objective: ObjectiveSpec, x0):
    """Right-hand sides of every row family, in the order the rows are built.

    Returns ``(ineq_parts, eq_rhs)``; ``ineq_parts`` maps a family name to
    its rhs vector.
    """
    spec, big_n = data.spec, data.horizon_n
    parts = {}
    _, multi = _split_input_rows(spec)
    if multi:
        parts["input"] = np.tile(spec.s_vec[multi], big_n)
    parts["state"] = data.state_rhs - data.stacked_g @ (data.stacked_a @ x0)
    if spec.terminal_lb is not None:
        n = data.system.n
        x_free = data.stacked_a[(big_n - 1) * n:big_n * n] @ x0
        idx = np.flatnonzero(np.isfinite(spec.terminal_lb))
        parts["terminal"] = x_free[idx] - spec.terminal_lb[idx]
    n_abs = int(np.count_nonzero(objective.abs_weights > 0))
    if n_abs:
        parts["abs"] = np.zeros(2 * n_abs)
    for gi, g in enumerate(objective.peaks):
        if g.steps:
            member = np.zeros(big_n, dtype=bool)
            member[list(g.steps)] = True
            parts[f"peak{gi}"] = np.where(member, 0.0, np.inf)
    return parts, np.asarray(data.coupling_rhs, dtype=float)


def build_nominal_problem(data: HorizonData, objective: ObjectiveSpec, x0=None) -> LinearProgram:
    """Assemble the deterministic LP for one MPC step.

    State rows ``G x(t+k|t) <= g - h`` are imposed for ``k = 1..N`` only.
    Input rows of ``S`` with a single nonzero become variable bounds.
    """
    sys, spec = data.system, data.spec
    big_n, m = data.horizon_n, sys.m
    x0 = _check_inputs(data, objective, x0)
    parts, eq_rhs = _nominal_rhs(data, objective, x0)

    nu = big_n * m
    lp = LinearProgram()
    lower = np.full(nu, -math.inf)
    upper = np.full(nu, math.inf)
    single, multi = _split_input_rows(spec)
    for i in single:
        row = spec.s_mat[i]
        j = int(np.flatnonzero(row)[0])
        bound = spec.s_vec[i] / row[j]
        idx = np.arange(big_n) * m + j
        if row[j] > 0:
            upper[idx] = np.minimum(upper[idx], bound)
        else:
            lower[idx] = np.maximum(lower[idx], bound)
    names = [input_name(j, k) for k in range(big_n) for j in range(m)]
    lp.add_variables(names, lower, upper, objective.linear.ravel())

    if multi:
        lp.add_ineq(np.kron(np.eye(big_n), spec.s_mat[multi]), parts["input"],
                    [f"input[{k},{i}]" for k in range(big_n) for i in multi])

    lp.add_eq(data.stacked_m, eq_rhs, [f"coupling[{k},{i}]" for k in range(big_n) for i in range(spec.d)])

    lp.add_ineq(data.stacked_g @ data.stacked_b, parts["state"],
                [f"state[{k + 1},{i}]" for k in range(big_n) for i in range(spec.r)])

    if "terminal" in parts:
        n = sys.n
        b_last = data.stacked_b[(big_n - 1) * n:big_n * n]
        idx = np.flatnonzero(np.isfinite(spec.terminal_lb))
        lp.add_ineq(-b_last[idx], parts["terminal"], [f"terminal[{i}]" for i in idx])

    w = objective.abs_weights.ravel()
    abs_idx = np.flatnonzero(w > 0)
    if abs_idx.size:
        add_abs_epigraphs(lp, abs_idx, w[abs_idx], [f"abs({names[i]})" for i in abs_idx])

    for g in objective.peaks:
        if not g.steps:
            continue
        candidates = np.arange(big_n) * m + g.component
        add_max_epigraph(lp, [k * m + g.component for k in g.steps], g.rate,
                         floor_at_zero=g.floor, name=g.name, candidates=candidates)
    lp.constant = objective.constant
    return lp


class ProblemCache:
    """Builds the nominal LP once per structure and afterwards swaps in new rhs.

    Between MPC steps only ``x0``, ``h``, the coupling forecast and the
    membership of peak groups change; those all live in right-hand sides.
    The returned LPs share a structure token, which lets a
    :class:`oasmpc.lp.HighsSession` warm-start.
    """

    def __init__(self):
        self._key = None
        self._base: Optional[LinearProgram] = None
        self._keep = None

    @staticmethod
    def _signature(data: HorizonData, objective: ObjectiveSpec):
        peaks = tuple((g.component, g.rate, g.floor, g.name, bool(g.steps)) for g in objective.peaks)
        return (id(data.system), id(data.spec), data.horizon_n, objective.linear.tobytes(),
                objective.abs_weights.tobytes(), peaks, objective.constant)

    def build(self, data: HorizonData, objective: ObjectiveSpec, x0=None) -> LinearProgram:
        key = self._signature(data, objective)
        if key != self._key:
            self._base = build_nominal_problem(data, objective, x0)
            self._key = key
            self._keep = (data.system, data.spec)  # ids in the key stay valid while referenced
        x0 = _check_inputs(data, objective, x0)
        parts, eq_rhs = _nominal_rhs(data, objective, x0)
        return self._base.with_rhs(np.concatenate(list(parts.values())), eq_rhs)


def solve_step(data: HorizonData, objective: ObjectiveSpec, x0=None, solver=None,
               cache: Optional[ProblemCache] = None) -> MpcStepResult:
    """Solve the nominal problem; only ``u_first`` is meant to be applied.

    ``solver`` is ``None`` (fresh HiGHS solve), a method name accepted by
    :func:`oasmpc.lp.solve_lp`, or an object with a ``solve(lp)`` method such
    as :class:`oasmpc.lp.HighsSession`.
    """
    lp = cache.build(data, objective, x0) if cache is not None else build_nominal_problem(data, objective, x0)
    if solver is None or isinstance(solver, str):
        sol = solve_lp(lp, method=solver or "highs")
    else:
        sol = solver.solve(lp)
    if sol.status is LpStatus.INFEASIBLE:
        report = infeasible_rows(lp)
        raise InfeasibleStepError(
            f"nominal MPC problem infeasible; rows needing relaxation: {', '.join(report[:10])}"
            + (" ..." if len(report) > 10 else ""),
            report, lp,
        )
    if not sol.ok:
        raise SolverFailure(sol, lp)
    m = data.system.m
    u_plan = sol.primal[: data.horizon_n * m].reshape(data.horizon_n, m)
    x0 = data.x0 if x0 is None else x0
    x_plan = propagate_nominal(data, x0, u_plan)
    return MpcStepResult(u_plan[0].copy(), u_plan, x_plan, sol.objective, sol.status, lp)
