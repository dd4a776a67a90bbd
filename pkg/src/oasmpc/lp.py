"""Linear programs: representation, epigraph helpers and solvers.

A :class:`LinearProgram` is::

    minimize    cost @ z + constant
    subject to  ineq_lhs @ z <= ineq_rhs
                eq_lhs @ z   == eq_rhs
                var_lower <= z <= var_upper

Inequality rows with ``+inf`` right-hand side are inactive.  They let a
receding-horizon loop keep one constraint-matrix structure while the set of
binding rows moves, which is what makes warm-starting possible.

Two backends are available through :func:`solve_lp`: ``"highs"`` (HiGHS dual
simplex, the default) and ``"simplex"`` (the built-in bounded-variable revised
simplex in :mod:`oasmpc.simplex`).
"""
from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, TextIO, Union

import numpy as np

__all__ = [
    "FEAS_TOL",
    "LpStatus",
    "LpSolution",
    "LinearProgram",
    "add_max_epigraph",
    "add_abs_epigraph",
    "solve_lp",
    "HighsSession",
    "infeasible_rows",
]

FEAS_TOL = 1e-7

Number = Union[int, float]


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERIC_FAILURE = "numeric-failure"


@dataclass
class LpSolution:
    status: LpStatus
    primal: np.ndarray
    objective: float
    iterations: int = 0
    max_residual: float = 0.0
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status is LpStatus.OPTIMAL


class LinearProgram:
    """Incrementally built LP with a variable-name registry.

    Constraint rows are stored as dense blocks and padded with zero columns
    when variables are added later.
    """

    def __init__(self):
        self.names: List[str] = []
        self._cost: List[float] = []
        self._lower: List[float] = []
        self._upper: List[float] = []
        self.constant = 0.0
        self._ineq: list = []  # (block, rhs, labels)
        self._eq: list = []
        self._cache: dict = {}
        self._frozen = False
        self.structure_token: Optional[object] = None

    def _mutating(self) -> None:
        if self._frozen:
            raise RuntimeError("LP derived with with_rhs() shares structure and cannot be modified")
        self._cache.clear()
        self.structure_token = None

    def with_rhs(self, ineq_rhs=None, eq_rhs=None) -> "LinearProgram":
        """Copy sharing constraint matrices, cost and bounds, with new right-hand sides.

        The copy carries the same ``structure_token`` so solvers can reuse
        factorisations; it cannot be modified further.
        """
        a_ub, b_ub, l_ub = self._assemble(self._ineq, "ineq")
        a_eq, b_eq, l_eq = self._assemble(self._eq, "eq")
        if self.structure_token is None:
            self.structure_token = object()
        self.row_scales()
        self._bounds()
        out = LinearProgram.__new__(LinearProgram)
        out.names, out._cost, out._lower, out._upper = self.names, self._cost, self._lower, self._upper
        out.constant = self.constant
        out._ineq, out._eq = self._ineq, self._eq
        out._frozen = True
        out.structure_token = self.structure_token
        b_ub = b_ub if ineq_rhs is None else np.asarray(ineq_rhs, dtype=float)
        b_eq = b_eq if eq_rhs is None else np.asarray(eq_rhs, dtype=float)
        if b_ub.shape != (a_ub.shape[0],) or b_eq.shape != (a_eq.shape[0],):
            raise ValueError("new right-hand sides must keep the row counts")
        if np.any(np.isnan(b_ub)) or np.any(b_ub == -math.inf) or not np.all(np.isfinite(b_eq)):
            raise ValueError("invalid right-hand side values")
        out._cache = {"ineq": (a_ub, b_ub, l_ub), "eq": (a_eq, b_eq, l_eq), "cost": self.cost}
        for key in ("scale_ineq", "scale_eq", "bounds"):
            if key in self._cache:
                out._cache[key] = self._cache[key]
        return out

    # -- variables -----------------------------------------------------------------
    @property
    def num_vars(self) -> int:
        return len(self.names)

    def add_variable(self, name: str, lower: Number = -math.inf, upper: Number = math.inf,
                     cost: Number = 0.0) -> int:
        return int(self.add_variables([name], lower, upper, cost)[0])

    def add_variables(self, names: Sequence[str], lower=-math.inf, upper=math.inf,
                      cost=0.0) -> np.ndarray:
        k = len(names)
        lower = np.broadcast_to(np.asarray(lower, dtype=float), (k,))
        upper = np.broadcast_to(np.asarray(upper, dtype=float), (k,))
        cost = np.broadcast_to(np.asarray(cost, dtype=float), (k,))
        if np.any(lower > upper):
            raise ValueError("variable lower bound exceeds upper bound")
        if not np.all(np.isfinite(cost)):
            raise ValueError("cost coefficients must be finite")
        self._mutating()
        start = self.num_vars
        self.names.extend(names)
        self._lower.extend(lower.tolist())
        self._upper.extend(upper.tolist())
        self._cost.extend(cost.tolist())
        return np.arange(start, start + k)

    def add_cost(self, index: int, value: float) -> None:
        if not math.isfinite(value):
            raise ValueError("cost coefficients must be finite")
        self._mutating()
        self._cost[index] += value

    def set_bounds(self, index: int, lower: Number, upper: Number) -> None:
        if lower > upper:
            raise ValueError("lower bound exceeds upper bound")
        self._mutating()
        self._lower[index] = float(lower)
        self._upper[index] = float(upper)

    # -- rows --------------------------------------------------------------------
    def _block(self, lhs, rhs, labels, kind):
        block = np.atleast_2d(np.asarray(lhs, dtype=float))
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float)).ravel()
        if block.shape[1] > self.num_vars:
            raise ValueError(f"row block has {block.shape[1]} columns but LP has {self.num_vars} variables")
        if block.shape[0] != rhs.shape[0]:
            raise ValueError(f"row block has {block.shape[0]} rows but rhs has {rhs.shape[0]} entries")
        if labels is None:
            labels = [f"{kind}{i}" for i in range(rhs.shape[0])]
        elif isinstance(labels, str):
            labels = [f"{labels}[{i}]" for i in range(rhs.shape[0])] if rhs.shape[0] > 1 else [labels]
        if len(labels) != rhs.shape[0]:
            raise ValueError("one label per row required")
        return block, rhs, list(labels)

    def add_ineq(self, lhs, rhs, labels=None) -> None:
        """Append rows ``lhs @ z <= rhs`` (``rhs = +inf`` marks an inactive row)."""
        block, rhs, labels = self._block(lhs, rhs, labels, "ineq")
        if np.any(np.isnan(rhs)) or np.any(rhs == -math.inf):
            raise ValueError("inequality rhs must be finite or +inf")
        self._mutating()
        self._ineq.append((block, rhs, labels))

    def add_eq(self, lhs, rhs, labels=None) -> None:
        block, rhs, labels = self._block(lhs, rhs, labels, "eq")
        if not np.all(np.isfinite(rhs)):
            raise ValueError("equality rhs must be finite")
        self._mutating()
        self._eq.append((block, rhs, labels))

    def add_sparse_ineq(self, coeffs: dict, rhs: float, label: Optional[str] = None) -> None:
        row = np.zeros(self.num_vars)
        for j, v in coeffs.items():
            row[j] += v
        self.add_ineq(row[None, :], [rhs], label)

    def add_sparse_eq(self, coeffs: dict, rhs: float, label: Optional[str] = None) -> None:
        row = np.zeros(self.num_vars)
        for j, v in coeffs.items():
            row[j] += v
        self.add_eq(row[None, :], [rhs], label)

    # -- assembled views ---------------------------------------------------------
    def _assemble(self, blocks, key):
        if key in self._cache:
            return self._cache[key]
        nv = self.num_vars
        if not blocks:
            mat, rhs, labels = np.zeros((0, nv)), np.zeros(0), []
        else:
            mat = np.zeros((sum(b.shape[0] for b, _, _ in blocks), nv))
            r = 0
            for b, _, _ in blocks:
                mat[r:r + b.shape[0], :b.shape[1]] = b
                r += b.shape[0]
            rhs = np.concatenate([x for _, x, _ in blocks])
            labels = [lab for _, _, ls in blocks for lab in ls]
        self._cache[key] = (mat, rhs, labels)
        return mat, rhs, labels

    @property
    def cost(self) -> np.ndarray:
        if "cost" not in self._cache:
            self._cache["cost"] = np.array(self._cost, dtype=float)
        return self._cache["cost"]

    def _bounds(self):
        if "bounds" not in self._cache:
            self._cache["bounds"] = (np.array(self._lower, dtype=float), np.array(self._upper, dtype=float))
        return self._cache["bounds"]

    @property
    def var_lower(self) -> np.ndarray:
        return self._bounds()[0].copy()

    @property
    def var_upper(self) -> np.ndarray:
        return self._bounds()[1].copy()

    def row_scales(self):
        """Unit row-scaling factors ``(ineq, eq)``; cached per structure."""
        if "scale_ineq" not in self._cache:
            self._cache["scale_ineq"] = _row_scale(self.ineq_lhs)
            self._cache["scale_eq"] = _row_scale(self.eq_lhs)
        return self._cache["scale_ineq"], self._cache["scale_eq"]

    @property
    def ineq_lhs(self) -> np.ndarray:
        return self._assemble(self._ineq, "ineq")[0]

    @property
    def ineq_rhs(self) -> np.ndarray:
        return self._assemble(self._ineq, "ineq")[1]

    @property
    def ineq_labels(self) -> List[str]:
        return self._assemble(self._ineq, "ineq")[2]

    @property
    def eq_lhs(self) -> np.ndarray:
        return self._assemble(self._eq, "eq")[0]

    @property
    def eq_rhs(self) -> np.ndarray:
        return self._assemble(self._eq, "eq")[1]

    @property
    def eq_labels(self) -> List[str]:
        return self._assemble(self._eq, "eq")[2]

    def index(self, name: str) -> int:
        return self.names.index(name)

    def objective_value(self, z) -> float:
        return float(self.cost @ np.asarray(z, dtype=float) + self.constant)

    def residuals(self, z) -> dict:
        """Worst violation per constraint family, on unit-scaled rows."""
        z = np.asarray(z, dtype=float)
        out = {"ineq": 0.0, "eq": 0.0, "bounds": 0.0}
        s_ub, s_eq = self.row_scales()
        a, b, _ = self._assemble(self._ineq, "ineq")
        if a.shape[0]:
            active = np.isfinite(b)
            scale = s_ub
            viol = (a @ z - b) * scale
            viol = viol[active]
            out["ineq"] = float(max(0.0, viol.max())) if viol.size else 0.0
        a, b, _ = self._assemble(self._eq, "eq")
        if a.shape[0]:
            out["eq"] = float(np.max(np.abs((a @ z - b) * s_eq)))
        lo, hi = self._bounds()
        with np.errstate(invalid="ignore"):
            bv = np.maximum(np.nan_to_num(lo - z, nan=0.0, neginf=0.0),
                            np.nan_to_num(z - hi, nan=0.0, neginf=0.0))
        out["bounds"] = float(max(0.0, bv.max())) if bv.size else 0.0
        return out

    def validate(self) -> None:
        nv = self.num_vars
        for mat, what in ((self.ineq_lhs, "ineq"), (self.eq_lhs, "eq")):
            if mat.shape[1] != nv:
                raise ValueError(f"{what} rows inconsistent with {nv} variables")
            if not np.all(np.isfinite(mat)):
                raise ValueError(f"{what} rows contain non-finite coefficients")
        if not np.all(np.isfinite(self.cost)):
            raise ValueError("cost coefficients must be finite")

    # -- debug dump -----------------------------------------------------------------
    def dump(self, target: Union[str, TextIO, None] = None) -> str:
        """Plain-text standard form, one constraint per line."""
        buf = io.StringIO()
        names = self.names

        def expr(row):
            nz = np.flatnonzero(row)
            if nz.size == 0:
                return "0"
            return " ".join(f"{row[j]:+.12g} {names[j]}" for j in nz)

        buf.write("minimize\n")
        buf.write(f"  obj: {expr(self.cost)} {self.constant:+.12g}\n")
        buf.write("subject to\n")
        for row, rhs, lab in zip(self.ineq_lhs, self.ineq_rhs, self.ineq_labels):
            if math.isfinite(rhs):
                buf.write(f"  {lab}: {expr(row)} <= {rhs:.12g}\n")
        for row, rhs, lab in zip(self.eq_lhs, self.eq_rhs, self.eq_labels):
            buf.write(f"  {lab}: {expr(row)} = {rhs:.12g}\n")
        buf.write("bounds\n")
        for name, lo, hi in zip(names, self._lower, self._upper):
            buf.write(f"  {lo:.12g} <= {name} <= {hi:.12g}\n")
        buf.write("end\n")
        text = buf.getvalue()
        if isinstance(target, str):
            with open(target, "w", encoding="utf-8") as fh:
                fh.write(text)
        elif target is not None:
            target.write(text)
        return text


def _row_scale(mat: np.ndarray) -> np.ndarray:
    norms = np.max(np.abs(mat), axis=1) if mat.shape[1] else np.zeros(mat.shape[0])
    return np.where(norms > 0.0, 1.0 / np.where(norms > 0.0, norms, 1.0), 1.0)


def add_max_epigraph(lp: LinearProgram, terms: Iterable[int], weight: float,
                     floor_at_zero: bool = False, name: str = "peak",
                     candidates: Optional[Iterable[int]] = None) -> int:
    """Add ``P >= z_i`` for ``i in terms`` and ``weight * P`` to the cost.

    With ``floor_at_zero`` the auxiliary is also bounded below by zero.  When
    ``candidates`` is given, one row is created per candidate index and those
    outside ``terms`` are left inactive (``rhs = +inf``); the row structure
    then depends only on ``candidates``.
    """
    terms = sorted(set(int(i) for i in terms))
    if not terms:
        raise ValueError("max epigraph needs a nonempty index set")
    if weight < 0:
        raise ValueError("weight must be nonnegative")
    rows = terms if candidates is None else sorted(set(int(i) for i in candidates))
    if not set(terms) <= set(rows):
        raise ValueError("terms must be a subset of candidates")
    for i in rows:
        if not 0 <= i < lp.num_vars:
            raise IndexError(f"term index {i} out of range")
    aux = lp.add_variable(name, 0.0 if floor_at_zero else -math.inf, math.inf, weight)
    block = np.zeros((len(rows), lp.num_vars))
    block[np.arange(len(rows)), rows] = 1.0
    block[:, aux] = -1.0
    member = set(terms)
    rhs = np.array([0.0 if i in member else math.inf for i in rows])
    lp.add_ineq(block, rhs, [f"{name}>={lp.names[i]}" for i in rows])
    return aux


def add_abs_epigraph(lp: LinearProgram, index: int, weight: float, name: Optional[str] = None) -> int:
    """Add ``a >= |z_index|`` and ``weight * a`` to the cost."""
    if not 0 <= index < lp.num_vars:
        raise IndexError(f"index {index} out of range for {lp.num_vars} variables")
    if weight < 0:
        raise ValueError("weight must be nonnegative")
    name = name or f"abs({lp.names[index]})"
    aux = lp.add_variable(name, 0.0, math.inf, weight)
    block = np.zeros((2, lp.num_vars))
    block[0, index], block[0, aux] = 1.0, -1.0
    block[1, index], block[1, aux] = -1.0, -1.0
    lp.add_ineq(block, [0.0, 0.0], [f"{name}+", f"{name}-"])
    return aux


def add_abs_epigraphs(lp: LinearProgram, indices: Sequence[int], weights: Sequence[float],
                      names: Sequence[str]) -> np.ndarray:
    """Vectorised :func:`add_abs_epigraph` for many indices at once."""
    indices = np.asarray(indices, dtype=int)
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0):
        raise ValueError("weights must be nonnegative")
    aux = lp.add_variables(list(names), 0.0, math.inf, weights)
    k = len(indices)
    block = np.zeros((2 * k, lp.num_vars))
    r = np.arange(k)
    block[2 * r, indices] = 1.0
    block[2 * r, aux] = -1.0
    block[2 * r + 1, indices] = -1.0
    block[2 * r + 1, aux] = -1.0
    labels = [f"{n}{s}" for n in names for s in "+-"]
    lp.add_ineq(block, np.zeros(2 * k), labels)
    return aux


# -- solving ------------------------------------------------------------------------

def _finish(lp: LinearProgram, status: LpStatus, x, iterations: int, message: str,
            tol: float) -> LpSolution:
    if status is not LpStatus.OPTIMAL:
        return LpSolution(status, np.full(lp.num_vars, np.nan), math.nan, iterations, math.nan, message)
    x = np.asarray(x, dtype=float)
    res = lp.residuals(x)
    worst = max(res.values())
    if worst > tol:
        return LpSolution(LpStatus.NUMERIC_FAILURE, x, lp.objective_value(x), iterations, worst,
                          f"solution violates constraints by {worst:.3g} ({res}); {message}")
    return LpSolution(LpStatus.OPTIMAL, x, lp.objective_value(x), iterations, worst, message)


def solve_lp(lp: LinearProgram, method: str = "highs", tol: float = FEAS_TOL,
             max_iter: Optional[int] = None) -> LpSolution:
    """Solve ``lp``; infeasible/unbounded outcomes are reported in ``status``."""
    lp.validate()
    if method == "highs":
        return HighsSession(tol=tol).solve(lp)
    if method == "simplex":
        from .simplex import solve_bounded_simplex

        a_ub, b_ub = lp.ineq_lhs, lp.ineq_rhs
        active = np.isfinite(b_ub)
        a_ub, b_ub = a_ub[active], b_ub[active]
        a_eq, b_eq = lp.eq_lhs, lp.eq_rhs
        # unit row scaling
        s_ub, s_eq = _row_scale(a_ub), _row_scale(a_eq)
        res = solve_bounded_simplex(
            lp.cost, a_ub * s_ub[:, None], b_ub * s_ub, a_eq * s_eq[:, None], b_eq * s_eq,
            lp.var_lower, lp.var_upper, tol=tol, max_iter=max_iter,
        )
        return _finish(lp, LpStatus(res.status), res.x, res.iterations, res.message, tol)
    raise ValueError(f"unknown LP method {method!r}")


class HighsSession:
    """Solves a stream of LPs, warm-starting when the structure repeats.

    Two LPs share a structure when their constraint matrices, costs and row
    counts are identical; only bounds and right-hand sides may differ.
    Sessions are not thread-safe; use one per simulation.
    """

    def __init__(self, tol: float = FEAS_TOL):
        import highspy

        self._highspy = highspy
        self.tol = tol
        self._h = None
        self._a_ub = None
        self._a_eq = None
        self._cost = None
        self._scale = None
        self._token = None
        self.cold_starts = 0

    def _new_model(self, lp: LinearProgram, a_ub, a_eq):
        highspy = self._highspy
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        h.setOptionValue("threads", 1)
        h.setOptionValue("random_seed", 0)
        h.setOptionValue("primal_feasibility_tolerance", self.tol * 0.1)
        h.setOptionValue("dual_feasibility_tolerance", self.tol * 0.1)
        a = np.vstack([a_ub, a_eq])
        scale = _row_scale(a) if a.shape[0] else np.zeros(0)
        a = a * scale[:, None]
        model = highspy.HighsLp()
        model.num_col_ = lp.num_vars
        model.num_row_ = a.shape[0]
        model.col_cost_ = lp.cost
        model.col_lower_ = lp.var_lower
        model.col_upper_ = lp.var_upper
        lo, hi = self._row_bounds(lp, scale)
        model.row_lower_ = lo
        model.row_upper_ = hi
        # column-wise sparse storage
        nz_rows, nz_cols = np.nonzero(a.T)
        model.a_matrix_.format_ = highspy.MatrixFormat.kColwise
        model.a_matrix_.start_ = np.concatenate([[0], np.cumsum(np.bincount(nz_rows, minlength=lp.num_vars))]).astype(np.int32)
        model.a_matrix_.index_ = nz_cols.astype(np.int32)
        model.a_matrix_.value_ = a.T[nz_rows, nz_cols]
        model.offset_ = lp.constant
        h.passModel(model)
        self._h = h
        self._a_ub, self._a_eq, self._cost, self._scale = a_ub.copy(), a_eq.copy(), lp.cost.copy(), scale
        self._token = lp.structure_token
        self.cold_starts += 1

    @staticmethod
    def _row_bounds(lp: LinearProgram, scale):
        b_ub, b_eq = lp.ineq_rhs, lp.eq_rhs
        lo = np.concatenate([np.full(b_ub.shape[0], -math.inf), b_eq])
        hi = np.concatenate([b_ub, b_eq])
        return lo * scale, hi * scale

    def _same_structure(self, lp: LinearProgram) -> bool:
        if self._h is None:
            return False
        if lp.structure_token is not None and lp.structure_token is self._token:
            return True
        a_ub, a_eq, cost = lp.ineq_lhs, lp.eq_lhs, lp.cost
        return (
            self._h is not None
            and a_ub.shape == self._a_ub.shape and a_eq.shape == self._a_eq.shape
            and np.array_equal(cost, self._cost)
            and np.array_equal(a_ub, self._a_ub) and np.array_equal(a_eq, self._a_eq)
        )

    def solve(self, lp: LinearProgram) -> LpSolution:
        if self._same_structure(lp):
            h = self._h
            nrow = self._scale.shape[0]
            lo, hi = self._row_bounds(lp, self._scale)
            if nrow:
                h.changeRowsBounds(nrow, np.arange(nrow, dtype=np.int32), lo, hi)
            h.changeColsBounds(lp.num_vars, np.arange(lp.num_vars, dtype=np.int32),
                               lp.var_lower, lp.var_upper)
            h.changeObjectiveOffset(lp.constant)
        else:
            self._new_model(lp, lp.ineq_lhs, lp.eq_lhs)
            h = self._h
        h.run()
        return self._collect(lp, h)

    def _collect(self, lp: LinearProgram, h) -> LpSolution:
        ms = self._highspy.HighsModelStatus
        status = h.getModelStatus()
        info = h.getInfo()
        iters = int(info.simplex_iteration_count)
        msg = h.modelStatusToString(status)
        if status == ms.kOptimal:
            x = np.array(h.getSolution().col_value)
            sol = _finish(lp, LpStatus.OPTIMAL, x, iters, msg, self.tol)
            if sol.status is LpStatus.NUMERIC_FAILURE:
                # stale basis can leave small residuals; retry from scratch once
                self._new_model(lp, lp.ineq_lhs, lp.eq_lhs)
                self._h.run()
                if self._h.getModelStatus() == ms.kOptimal:
                    x = np.array(self._h.getSolution().col_value)
                    sol = _finish(lp, LpStatus.OPTIMAL, x, iters, msg, self.tol)
            return sol
        if status == ms.kInfeasible:
            return _finish(lp, LpStatus.INFEASIBLE, None, iters, msg, self.tol)
        if status == ms.kUnbounded:
            return _finish(lp, LpStatus.UNBOUNDED, None, iters, msg, self.tol)
        if status == ms.kUnboundedOrInfeasible:
            feas = _feasibility_only(lp)
            kind = LpStatus.UNBOUNDED if feas else LpStatus.INFEASIBLE
            return _finish(lp, kind, None, iters, msg, self.tol)
        return LpSolution(LpStatus.NUMERIC_FAILURE, np.full(lp.num_vars, np.nan), math.nan, iters,
                          math.nan, f"HiGHS status {msg} after {iters} iterations")


def _feasibility_only(lp: LinearProgram) -> bool:
    probe = _copy_with_cost(lp, np.zeros(lp.num_vars))
    return HighsSession().solve(probe).ok


def _copy_with_cost(lp: LinearProgram, cost) -> LinearProgram:
    out = LinearProgram()
    out.add_variables(list(lp.names), lp.var_lower, lp.var_upper, cost)
    if lp.ineq_lhs.shape[0]:
        out.add_ineq(lp.ineq_lhs, lp.ineq_rhs, lp.ineq_labels)
    if lp.eq_lhs.shape[0]:
        out.add_eq(lp.eq_lhs, lp.eq_rhs, lp.eq_labels)
    return out


def infeasible_rows(lp: LinearProgram, tol: float = 1e-7) -> List[str]:
    """Labels of rows that must be violated, from an elastic phase-one LP.

    Each active row gets a nonnegative slack that is minimised; rows whose
    slack stays positive form the report.  Variable bounds are kept hard.
    """
    a_ub, b_ub = lp.ineq_lhs, lp.ineq_rhs
    active = np.flatnonzero(np.isfinite(b_ub))
    a_ub, b_ub = a_ub[active], b_ub[active]
    ub_labels = [lp.ineq_labels[i] for i in active]
    a_eq, b_eq = lp.eq_lhs, lp.eq_rhs
    s_ub, s_eq = _row_scale(a_ub), _row_scale(a_eq)
    nv, ku, ke = lp.num_vars, a_ub.shape[0], a_eq.shape[0]
    el = LinearProgram()
    el.add_variables(list(lp.names), lp.var_lower, lp.var_upper, 0.0)
    el.add_variables([f"slack:{lab}" for lab in ub_labels], 0.0, math.inf, 1.0)
    el.add_variables([f"slack+:{lab}" for lab in lp.eq_labels], 0.0, math.inf, 1.0)
    el.add_variables([f"slack-:{lab}" for lab in lp.eq_labels], 0.0, math.inf, 1.0)
    if ku:
        block = np.hstack([a_ub * s_ub[:, None], -np.eye(ku), np.zeros((ku, 2 * ke))])
        el.add_ineq(block, b_ub * s_ub)
    if ke:
        block = np.hstack([a_eq * s_eq[:, None], np.zeros((ke, ku)), np.eye(ke), -np.eye(ke)])
        el.add_eq(block, b_eq * s_eq)
    sol = HighsSession().solve(el)
    if not sol.ok:
        return ["<variable bounds alone are inconsistent>"]
    slack = sol.primal[nv:]
    labels = ub_labels + [f"{lab} (above)" for lab in lp.eq_labels] + [f"{lab} (below)" for lab in lp.eq_labels]
    return [lab for lab, s in zip(labels, slack) if s > tol]
