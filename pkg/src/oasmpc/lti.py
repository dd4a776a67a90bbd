"""Discrete LTI plant, constraint data and horizon stacking.

The plant is ``x(t+1) = A x(t) + B u(t) + E w(t)`` with polytopic input
constraints ``S u <= s``, coupling equalities ``M u = m(t) + F w`` and state
chance constraints ``P[G x <= g] >= 1 - alpha``.  :func:`stack_horizon` turns
the per-step data into the compact horizon form used by the nominal MPC.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "ShapeError",
    "LtiSystem",
    "ConstraintSpec",
    "HorizonData",
    "stack_horizon",
    "propagate_nominal",
    "simulate_recursive",
]

STRUCTURE_RTOL = 1e-10


class ShapeError(ValueError):
    """Raised when array dimensions are inconsistent."""


def _as_matrix(value, name: str) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(value, dtype=float))
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be a 2-D matrix, got ndim={arr.ndim}")
    return arr


def _as_vector(value, name: str, length: Optional[int] = None) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=float)).ravel()
    if length is not None and arr.shape[0] != length:
        raise ShapeError(f"{name} must have length {length}, got {arr.shape[0]}")
    return arr


@dataclass(frozen=True, eq=False)
class LtiSystem:
    """``x(t+1) = A x(t) + B u(t) + E w(t)``."""

    a_mat: np.ndarray
    b_mat: np.ndarray
    e_mat: np.ndarray

    def __post_init__(self):
        a = _as_matrix(self.a_mat, "a_mat")
        b = _as_matrix(self.b_mat, "b_mat")
        e = _as_matrix(self.e_mat, "e_mat")
        n = a.shape[0]
        if a.shape != (n, n):
            raise ShapeError(f"a_mat must be square, got {a.shape}")
        if b.shape[0] != n:
            raise ShapeError(f"b_mat has {b.shape[0]} rows, expected n={n}")
        if e.shape[0] != n:
            raise ShapeError(f"e_mat has {e.shape[0]} rows, expected n={n}")
        for name, arr in (("a_mat", a), ("b_mat", b), ("e_mat", e)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.a_mat.shape[0]

    @property
    def m(self) -> int:
        return self.b_mat.shape[1]

    @property
    def p(self) -> int:
        return self.e_mat.shape[1]

    def step(self, x, u, w=None) -> np.ndarray:
        x = _as_vector(x, "x", self.n)
        u = _as_vector(u, "u", self.m)
        out = self.a_mat @ x + self.b_mat @ u
        if w is not None:
            out = out + self.e_mat @ _as_vector(w, "w", self.p)
        return out

    def right_inverse_b(self) -> np.ndarray:
        """Right inverse ``B^T (B B^T)^-1``; requires full row rank."""
        b = self.b_mat
        if np.linalg.matrix_rank(b) < self.n:
            raise np.linalg.LinAlgError("b_mat does not have full row rank")
        return b.T @ np.linalg.inv(b @ b.T)


@dataclass(frozen=True, eq=False)
class ConstraintSpec:
    """Input polytope, coupling equalities and state chance constraints.

    ``alpha`` holds the per-row violation levels; ``jcc_alpha`` switches on
    joint-chance-constraint mode where one level covers all rows.
    ``terminal_lb`` is an optional lower bound on ``x(t+N|t)`` (NaN entries
    are unconstrained).
    """

    s_mat: np.ndarray
    s_vec: np.ndarray
    m_mat: np.ndarray
    f_mat: np.ndarray
    g_mat: np.ndarray
    g_vec: np.ndarray
    alpha: np.ndarray
    jcc_alpha: Optional[float] = None
    terminal_lb: Optional[np.ndarray] = None

    def __post_init__(self):
        s_mat = _as_matrix(self.s_mat, "s_mat")
        s_vec = _as_vector(self.s_vec, "s_vec", s_mat.shape[0])
        m_mat = _as_matrix(self.m_mat, "m_mat")
        f_mat = _as_matrix(self.f_mat, "f_mat")
        if f_mat.shape[0] != m_mat.shape[0]:
            raise ShapeError(f"f_mat has {f_mat.shape[0]} rows, m_mat has {m_mat.shape[0]}")
        if m_mat.shape[1] != s_mat.shape[1]:
            raise ShapeError("m_mat and s_mat disagree on the input dimension")
        g_mat = _as_matrix(self.g_mat, "g_mat")
        g_vec = _as_vector(self.g_vec, "g_vec", g_mat.shape[0])
        alpha = _as_vector(self.alpha, "alpha", g_mat.shape[0])
        if np.any(alpha <= 0.0) or np.any(alpha >= 0.5):
            raise ValueError(f"alpha components must lie in (0, 0.5), got {alpha}")
        if self.jcc_alpha is not None and not 0.0 < self.jcc_alpha < 0.5:
            raise ValueError(f"jcc_alpha must lie in (0, 0.5), got {self.jcc_alpha}")
        terminal = None
        if self.terminal_lb is not None:
            terminal = _as_vector(self.terminal_lb, "terminal_lb", g_mat.shape[1])
        for name, arr in (
            ("s_mat", s_mat), ("s_vec", s_vec), ("m_mat", m_mat), ("f_mat", f_mat),
            ("g_mat", g_mat), ("g_vec", g_vec), ("alpha", alpha), ("terminal_lb", terminal),
        ):
            if arr is not None:
                arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def q(self) -> int:
        return self.s_mat.shape[0]

    @property
    def d(self) -> int:
        return self.m_mat.shape[0]

    @property
    def r(self) -> int:
        return self.g_mat.shape[0]

    @property
    def joint(self) -> bool:
        return self.jcc_alpha is not None

    def check_system(self, system: LtiSystem) -> None:
        if self.s_mat.shape[1] != system.m:
            raise ShapeError(f"s_mat has {self.s_mat.shape[1]} columns, system has m={system.m}")
        if self.f_mat.shape[1] != system.p:
            raise ShapeError(f"f_mat has {self.f_mat.shape[1]} columns, system has p={system.p}")
        if self.g_mat.shape[1] != system.n:
            raise ShapeError(f"g_mat has {self.g_mat.shape[1]} columns, system has n={system.n}")


@dataclass(frozen=True, eq=False)
class HorizonData:
    """Compact horizon form of the plant and constraints at one MPC step.

    Row block ``k`` of the state quantities refers to ``x(t+k+1|t)``; row
    block ``k`` of the input quantities to ``u(t+k|t)``.
    """

    system: LtiSystem
    spec: ConstraintSpec
    horizon_n: int
    x0: np.ndarray
    stacked_a: np.ndarray
    stacked_b: np.ndarray
    stacked_e: np.ndarray
    stacked_s: np.ndarray
    stacked_s_vec: np.ndarray
    stacked_m: np.ndarray
    coupling_rhs: np.ndarray
    stacked_g: np.ndarray
    stacked_g_vec: np.ndarray
    stacked_h: np.ndarray

    @property
    def state_rhs(self) -> np.ndarray:
        """Relaxed state bounds ``g - h`` stacked over the horizon."""
        return self.stacked_g_vec - self.stacked_h


_DYNAMICS_CACHE: dict = {}


def _dynamics_blocks(system: LtiSystem, n_steps: int):
    key = (
        system.a_mat.tobytes(), system.b_mat.tobytes(), system.e_mat.tobytes(),
        system.a_mat.shape, system.b_mat.shape, system.e_mat.shape, n_steps,
    )
    hit = _DYNAMICS_CACHE.get(key)
    if hit is not None:
        return hit
    n, m, p = system.n, system.m, system.p
    a, b, e = system.a_mat, system.b_mat, system.e_mat
    powers = [np.eye(n)]
    for _ in range(n_steps):
        powers.append(powers[-1] @ a)
    stacked_a = np.vstack(powers[1:])
    stacked_b = np.zeros((n_steps * n, n_steps * m))
    stacked_e = np.zeros((n_steps * n, n_steps * p))
    for k in range(n_steps):
        for i in range(k + 1):
            stacked_b[k * n:(k + 1) * n, i * m:(i + 1) * m] = powers[k - i] @ b
            stacked_e[k * n:(k + 1) * n, i * p:(i + 1) * p] = powers[k - i] @ e
    for arr in (stacked_a, stacked_b, stacked_e):
        arr.setflags(write=False)
    if len(_DYNAMICS_CACHE) > 64:
        _DYNAMICS_CACHE.clear()
    _DYNAMICS_CACHE[key] = (stacked_a, stacked_b, stacked_e)
    return stacked_a, stacked_b, stacked_e


_CONSTRAINT_CACHE: dict = {}


def _constraint_blocks(spec: ConstraintSpec, n_steps: int):
    key = (id(spec), n_steps)
    hit = _CONSTRAINT_CACHE.get(key)
    if hit is not None and hit[0] is spec:
        return hit[1]
    eye = np.eye(n_steps)
    blocks = tuple(np.kron(eye, mat) for mat in (spec.s_mat, spec.m_mat, spec.g_mat))
    for arr in blocks:
        arr.setflags(write=False)
    if len(_CONSTRAINT_CACHE) > 64:
        _CONSTRAINT_CACHE.clear()
    # keep a reference to spec so its id cannot be reused while cached
    _CONSTRAINT_CACHE[key] = (spec, blocks)
    return blocks


def stack_horizon(
    sys: LtiSystem,
    spec: ConstraintSpec,
    n_steps: int,
    x0,
    m_forecast,
    h_now,
) -> HorizonData:
    """Stack dynamics and constraints over ``n_steps`` prediction steps.

    ``m_forecast`` is the sequence of coupling right-hand sides
    ``m(t|t) ... m(t+N-1|t)``; ``h_now`` the current relaxation vector,
    repeated once per step.
    """
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    spec.check_system(sys)
    x0 = _as_vector(x0, "x0", sys.n)
    m_fc = np.asarray(m_forecast, dtype=float)
    if m_fc.ndim == 1 and spec.d == 1:
        m_fc = m_fc[:, None]
    if m_fc.shape != (n_steps, spec.d):
        raise ShapeError(f"m_forecast must have shape ({n_steps}, {spec.d}), got {m_fc.shape}")
    h_now = _as_vector(h_now, "h_now", spec.r)
    if np.any(h_now > 0.0):
        raise ValueError(f"relaxation h must be componentwise <= 0, got {h_now}")

    stacked_a, stacked_b, stacked_e = _dynamics_blocks(sys, n_steps)
    stacked_s, stacked_m, stacked_g = _constraint_blocks(spec, n_steps)
    return HorizonData(
        system=sys,
        spec=spec,
        horizon_n=n_steps,
        x0=x0,
        stacked_a=stacked_a,
        stacked_b=stacked_b,
        stacked_e=stacked_e,
        stacked_s=stacked_s,
        stacked_s_vec=np.tile(spec.s_vec, n_steps),
        stacked_m=stacked_m,
        coupling_rhs=m_fc.ravel(),
        stacked_g=stacked_g,
        stacked_g_vec=np.tile(spec.g_vec, n_steps),
        stacked_h=np.tile(h_now, n_steps),
    )


def propagate_nominal(data: HorizonData, x0, u_seq) -> np.ndarray:
    """Predicted states ``x(t+1|t) ... x(t+N|t)`` with zero uncertainty.

    Returns an ``(N, n)`` array.
    """
    n, m, big_n = data.system.n, data.system.m, data.horizon_n
    x0 = _as_vector(x0, "x0", n)
    u = np.asarray(u_seq, dtype=float)
    if u.size != big_n * m:
        raise ShapeError(f"u_seq must hold {big_n} inputs of size {m}, got {u.size} values")
    return (data.stacked_a @ x0 + data.stacked_b @ u.ravel()).reshape(big_n, n)


def simulate_recursive(sys: LtiSystem, x0, u_seq: Sequence, w_seq: Optional[Sequence] = None) -> np.ndarray:
    """Step-by-step rollout; the reference the stacked form must reproduce."""
    x = _as_vector(x0, "x0", sys.n)
    out = []
    for k, u in enumerate(u_seq):
        w = None if w_seq is None else w_seq[k]
        x = sys.step(x, u, w)
        out.append(x)
    return np.array(out).reshape(len(out), sys.n)
