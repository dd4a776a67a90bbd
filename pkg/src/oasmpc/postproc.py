"""Closed-loop correction of the first optimal input for realized uncertainty.

A primary source (the battery) absorbs the realized uncertainty up to its
hard power limits and the current state design limits; a secondary source
(the grid) closes the coupling equality exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .lti import ConstraintSpec, LtiSystem, ShapeError

__all__ = [
    "PostProcessConfig",
    "ClosedLoopStep",
    "design_limits",
    "correct_for_uncertainty",
    "balance_secondary",
]


@dataclass(frozen=True, eq=False)
class PostProcessConfig:
    primary_index: int
    secondary_index: int
    d_vec: np.ndarray  # m x p gain B^+ E
    primary_limits: Tuple[float, float]

    def __post_init__(self):
        lo, hi = self.primary_limits
        if not lo < hi:
            raise ValueError("primary limits must satisfy lower < upper")
        if self.primary_index == self.secondary_index:
            raise ValueError("primary and secondary inputs must differ")
        object.__setattr__(self, "d_vec", np.atleast_2d(np.asarray(self.d_vec, dtype=float)))

    @classmethod
    def from_system(cls, sys: LtiSystem, primary_index: int, secondary_index: int,
                    primary_limits: Tuple[float, float]) -> "PostProcessConfig":
        b_pinv = sys.right_inverse_b()
        d = b_pinv @ sys.e_mat
        if np.any(np.abs(d[secondary_index]) > 1e-12):
            raise ValueError("the secondary input must not enter B^+ E")
        if np.any(np.abs(sys.b_mat[:, secondary_index]) > 0):
            raise ValueError("the secondary input must not drive the state")
        return cls(primary_index, secondary_index, d, primary_limits)


@dataclass
class ClosedLoopStep:
    u_applied: np.ndarray
    x_next: np.ndarray
    w_realized: np.ndarray
    clamp_flags: tuple  # subset of {"primary", "state-upper", "state-lower"}


def design_limits(spec: ConstraintSpec, h) -> Tuple[np.ndarray, np.ndarray]:
    """Per-state ``(lower, upper)`` bounds implied by ``G x <= g - h``.

    Only rows of ``G`` that are a signed multiple of a unit vector are
    supported; states without a bound get +/-inf.
    """
    h = np.asarray(h, dtype=float)
    n = spec.g_mat.shape[1]
    lower, upper = np.full(n, -np.inf), np.full(n, np.inf)
    rhs = spec.g_vec - h
    for i, row in enumerate(spec.g_mat):
        nz = np.flatnonzero(row)
        if nz.size != 1:
            raise ShapeError(f"state constraint row {i} couples several states")
        j, c = int(nz[0]), row[nz[0]]
        if c > 0:
            upper[j] = min(upper[j], rhs[i] / c)
        else:
            lower[j] = max(lower[j], rhs[i] / c)
    return lower, upper


def correct_for_uncertainty(u_star, x_now, w, cfg: PostProcessConfig, limits, sys: LtiSystem,
                            spec: ConstraintSpec, coupling_now) -> ClosedLoopStep:
    """Apply the realized uncertainty ``w`` to the planned first input.

    ``limits`` is the ``(lower, upper)`` pair from :func:`design_limits` for
    the current ``h``; ``coupling_now`` is the forecast ``m(t)``.
    """
    u = np.array(u_star, dtype=float).ravel()
    x_now = np.atleast_1d(np.asarray(x_now, dtype=float))
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if u.shape != (sys.m,) or x_now.shape != (sys.n,) or w.shape != (sys.p,):
        raise ShapeError("u_star, x_now and w must match the system dimensions")
    lower, upper = (np.asarray(v, dtype=float) for v in limits)
    ip, isec = cfg.primary_index, cfg.secondary_index
    lo_u, hi_u = cfg.primary_limits
    b_p = sys.b_mat[:, ip]
    flags = []

    target = u[ip] + float(cfg.d_vec[ip] @ w)
    u[ip] = min(max(target, lo_u), hi_u)
    if u[ip] != target:
        flags.append("primary")

    drift = sys.a_mat @ x_now
    x_next = drift + b_p * u[ip]
    clamped = np.clip(x_next, lower, upper)
    if np.any(clamped != x_next):
        j = int(np.flatnonzero(clamped != x_next)[0])
        flags.append("state-upper" if x_next[j] > upper[j] else "state-lower")
        if b_p[j] == 0.0:
            raise ZeroDivisionError("primary input does not drive the clamped state")
        u_re = (clamped[j] - drift[j]) / b_p[j]
        u_fit = min(max(u_re, lo_u), hi_u)
        if u_fit != u_re and "primary" not in flags:
            flags.append("primary")
        u[ip] = u_fit
        x_next = clamped if u_fit == u_re else drift + b_p * u_fit

    # secondary source closes M u = m(t) + F w
    rhs = np.atleast_1d(np.asarray(coupling_now, dtype=float)) + spec.f_mat @ w
    row = spec.m_mat[0]
    if spec.d != 1 or row[isec] == 0.0:
        raise ShapeError("balance needs a single coupling row involving the secondary input")
    others = float(row @ u - row[isec] * u[isec])
    u[isec] = (rhs[0] - others) / row[isec]
    return ClosedLoopStep(u, x_next, w, tuple(flags))


def balance_secondary(u1: float, pv_real: float, load_real: float) -> float:
    """Grid import closing ``u1 - u2 = pv - load``."""
    return u1 - (pv_real - load_real)
