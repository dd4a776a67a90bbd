"""Closed-loop violation tracking and the online relaxation update.

``h`` is a nonpositive vector subtracted from the state bounds (``g - h``),
so a more negative ``h`` enlarges the admissible state set.  After each
realized step the violation indicators feed a running time-average ``Y``;
``h`` is then scaled by ``1 + K`` with

    K = (alpha - Y + (2Y - 1) / (2(t + 1))) / gamma

which relaxes when violations are rarer than ``alpha`` and contracts
otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .lti import ConstraintSpec, ShapeError

__all__ = [
    "AdaptationError",
    "AdaptiveState",
    "ViolationRecord",
    "observe_state",
    "update_factor",
    "update_h",
    "apply_onpeak_freeze",
    "check_trigger",
    "H_CAP",
]

# once triggered, h never returns to exactly 0 (the update is multiplicative)
H_CAP = -1e-6


class AdaptationError(ValueError):
    """The update would flip the sign of h (gamma too small for this Y)."""


@dataclass
class AdaptiveState:
    """Mutable adaptation state for one simulation run.

    ``y`` is maintained by the one-step recursion; ``violation_count / t``
    is the exact value it tracks.  ``h_floor`` bounds ``h`` from below so the
    relaxed limits stay physical.
    """

    alpha: np.ndarray
    gamma: np.ndarray
    h: np.ndarray
    h_trigger: np.ndarray
    h_floor: np.ndarray
    epsilon: float = 0.001
    jcc_alpha: Optional[float] = None
    t: int = 0
    triggered: bool = False
    violation_count: np.ndarray = field(default=None)
    y: np.ndarray = field(default=None)
    jcc_count: int = 0
    jcc_y: float = 0.0

    def __post_init__(self):
        self.alpha = np.atleast_1d(np.asarray(self.alpha, dtype=float)).copy()
        r = self.alpha.shape[0]
        self.gamma = np.broadcast_to(np.asarray(self.gamma, dtype=float), (r,)).copy()
        self.h = np.broadcast_to(np.asarray(self.h, dtype=float), (r,)).copy()
        self.h_trigger = np.broadcast_to(np.asarray(self.h_trigger, dtype=float), (r,)).copy()
        self.h_floor = np.broadcast_to(np.asarray(self.h_floor, dtype=float), (r,)).copy()
        if np.any(self.gamma <= 0):
            raise ValueError("gamma must be positive")
        if np.any(self.h > 0) or np.any(self.h_trigger > 0):
            raise ValueError("h must be componentwise <= 0")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.violation_count is None:
            self.violation_count = np.zeros(r, dtype=np.int64)
        if self.y is None:
            self.y = np.zeros(r)

    @classmethod
    def from_spec(cls, spec: ConstraintSpec, gamma, h0, h_trigger, h_floor=None,
                  epsilon: float = 0.001) -> "AdaptiveState":
        if h_floor is None:
            h_floor = np.full(spec.r, -math.inf)
        return cls(alpha=spec.alpha, gamma=gamma, h=h0, h_trigger=h_trigger, h_floor=h_floor,
                   epsilon=epsilon, jcc_alpha=spec.jcc_alpha)

    @property
    def r(self) -> int:
        return self.alpha.shape[0]

    @property
    def joint(self) -> bool:
        return self.jcc_alpha is not None

    def reset_statistics(self) -> None:
        """Restart: ``t``, ``Y`` and the counts return to zero, ``h`` to ``h_trigger``."""
        self.t = 0
        self.violation_count[:] = 0
        self.y[:] = 0.0
        self.jcc_count = 0
        self.jcc_y = 0.0
        self.h = self.h_trigger.copy()

    def exact_y(self) -> np.ndarray:
        return self.violation_count / self.t if self.t else np.zeros(self.r)


@dataclass(frozen=True)
class ViolationRecord:
    step: int
    v: tuple
    v_joint: int


def observe_state(state: AdaptiveState, x_next, spec: ConstraintSpec) -> ViolationRecord:
    """Record whether ``x_next`` violates ``G x <= g + epsilon`` and advance ``t``."""
    x_next = np.atleast_1d(np.asarray(x_next, dtype=float))
    if x_next.shape != (spec.g_mat.shape[1],):
        raise ShapeError(f"x_next must have length {spec.g_mat.shape[1]}")
    v = (spec.g_mat @ x_next > spec.g_vec + state.epsilon).astype(np.int64)
    vj = int(v.max()) if v.size else 0
    t = state.t
    state.violation_count += v
    state.y = t * state.y / (t + 1) + v / (t + 1)
    state.jcc_count += vj
    state.jcc_y = t * state.jcc_y / (t + 1) + vj / (t + 1)
    state.t = t + 1
    return ViolationRecord(t + 1, tuple(int(i) for i in v), vj)


def update_factor(alpha, y, t: int, gamma):
    """``K`` of the update ``h <- h (1 + K)``."""
    return (alpha - y + (2.0 * y - 1.0) / (2.0 * (t + 1))) / gamma


def update_h(state: AdaptiveState) -> np.ndarray:
    """Candidate ``h(t)`` after clamping; the caller decides whether to apply it.

    In joint mode one shared factor (from the joint ``Y`` and ``jcc_alpha``)
    scales every component.
    """
    if not state.triggered:
        raise AdaptationError("update_h called before the relaxation was triggered")
    if state.t < 1:
        raise AdaptationError("update_h needs t >= 1")
    if state.joint:
        k = np.full(state.r, update_factor(state.jcc_alpha, state.jcc_y, state.t, state.gamma[0]))
    else:
        k = update_factor(state.alpha, state.y, state.t, state.gamma)
    if np.any(k <= -1.0):
        raise AdaptationError(f"update factor K={k} <= -1 would flip the sign of h; increase gamma")
    h = state.h * (1.0 + k)
    h = np.minimum(h, H_CAP)
    return np.maximum(h, state.h_floor)


def apply_onpeak_freeze(state: AdaptiveState, h_candidate, h_previous, now_in_onpeak: bool) -> np.ndarray:
    """Reject increases of ``h`` while in the on-peak window; decreases pass."""
    h_candidate = np.asarray(h_candidate, dtype=float)
    if not now_in_onpeak:
        return h_candidate.copy()
    return np.where(h_candidate > h_previous, h_previous, h_candidate)


def check_trigger(state: AdaptiveState, x_now, spec: ConstraintSpec, tol: float = 1e-6) -> bool:
    """Trigger the relaxation once ``x_now`` touches any hard state bound.

    On the first touch ``h`` is set to ``h_trigger``.
    """
    if state.triggered:
        return False
    x_now = np.atleast_1d(np.asarray(x_now, dtype=float))
    if np.any(spec.g_mat @ x_now >= spec.g_vec - tol):
        state.triggered = True
        state.h = state.h_trigger.copy()
        return True
    return False
