"""Convergence diagnostics for the violation time-average ``Y``.

``Z(t) = |alpha - Y(t)|`` is the distance to the target level.  Under an
ideal policy that can force (``p* = 1``) or prevent (``p* = 0``) a violation,
the sign of ``beta`` decides which action shrinks ``Z`` in expectation.
Inside the critical region ``kappa(alpha, t)`` no action can keep ``Z`` from
growing for one step.  The oracle here uses exact rational arithmetic.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Union

import numpy as np

__all__ = [
    "CriticalRegion",
    "OracleStep",
    "OracleTrace",
    "HypothesisError",
    "critical_region",
    "critical_region_exact",
    "beta",
    "delta_expected",
    "run_ideal_oracle",
    "alpha_guideline_failures",
    "kappa_crossings",
    "step_bound_holds",
]

Number = Union[float, Fraction]


class HypothesisError(ValueError):
    """A precondition of the convergence results does not hold."""


def _exact(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, float):
        # repr round-trips the literal the user wrote, so 0.1 becomes 1/10
        return Fraction(repr(v))
    return Fraction(v)


def _unit(base, t: int):
    return Fraction(1, t + 1) if isinstance(base, Fraction) else 1 / (t + 1)


@dataclass(frozen=True)
class CriticalRegion:
    lower: Number
    upper: Number
    width: Number

    def contains(self, y: Number) -> bool:
        return self.lower < y < self.upper


def _check_alpha(alpha) -> None:
    if not 0 < alpha < 0.5:
        raise ValueError(f"alpha must lie in (0, 0.5), got {alpha}")


def critical_region(alpha: float, t: int) -> CriticalRegion:
    if t < 1:
        raise ValueError("t must be >= 1")
    _check_alpha(alpha)
    c = 1.0 / (2.0 * (t + 1))
    lower = (alpha - c) / (1.0 - c)
    upper = alpha / (1.0 - c)
    return CriticalRegion(lower, upper, 1.0 / (2 * t + 1))


def critical_region_exact(alpha, t: int) -> CriticalRegion:
    if t < 1:
        raise ValueError("t must be >= 1")
    a = _exact(alpha)
    _check_alpha(a)
    c = Fraction(1, 2 * (t + 1))
    lower = (a - c) / (1 - c)
    upper = a / (1 - c)
    return CriticalRegion(lower, upper, upper - lower)


def beta(alpha: Number, y: Number, t: int) -> Number:
    """Change in ``Z(t+1)`` caused by a violation versus no violation."""
    base = alpha - t * y / (t + 1)
    return abs(base - _unit(base, t)) - abs(base)


def delta_expected(alpha: Number, y: Number, t: int, p: Number) -> Number:
    """Expected one-step change of ``Z`` when a violation occurs with probability ``p``."""
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    base = alpha - t * y / (t + 1)
    return p * abs(base - _unit(base, t)) + (1 - p) * abs(base) - abs(alpha - y)


@dataclass(frozen=True)
class OracleStep:
    """One oracle step.  ``Y(t) = s / (d t)`` with integers ``s`` and ``d``.

    The rational quantities are rebuilt on access; ``z_grew`` and
    ``inside_kappa`` were decided in integer arithmetic during the run.
    """

    t: int
    s: int
    d: int
    alpha: Fraction
    p_star: int
    v: int  # V(t+1)
    inside_kappa: bool
    tie: bool
    z_grew: bool

    @property
    def y(self) -> Fraction:
        """``Y(t)`` before the step."""
        return Fraction(self.s, self.d * self.t)

    @property
    def y_next(self) -> Fraction:
        return Fraction(self.s + self.d * self.v, self.d * (self.t + 1))

    @property
    def beta(self) -> Fraction:
        return beta(self.alpha, self.y, self.t)

    @property
    def z(self) -> Fraction:
        """``|alpha - Y(t)|``."""
        return abs(self.alpha - self.y)

    @property
    def z_next(self) -> Fraction:
        return abs(self.alpha - self.y_next)


@dataclass
class OracleTrace:
    alpha: Fraction
    y0: Fraction
    t0: int
    steps: List[OracleStep] = field(default_factory=list)
    final_t: int = 0
    final_y: Fraction = Fraction(0)
    ties: List[int] = field(default_factory=list)
    guideline_failures: List[int] = field(default_factory=list)

    @property
    def final_error(self) -> float:
        return float(abs(self.final_y - self.alpha))

    def monotone_outside_kappa(self) -> bool:
        return not any(s.z_grew for s in self.steps if not s.inside_kappa)

    def increases(self) -> List[int]:
        """Steps at which ``Z`` grew."""
        return [s.t for s in self.steps if s.z_grew]

    def to_rows(self) -> List[dict]:
        return [
            {
                "t": s.t, "y": float(s.y), "beta": float(s.beta), "p_star": s.p_star, "v": s.v,
                "z": float(s.z), "z_next": float(s.z_next), "inside_kappa": int(s.inside_kappa),
                "tie": int(s.tie),
            }
            for s in self.steps
        ]

    def to_csv(self, path) -> None:
        rows = self.to_rows()
        fields = ["t", "y", "beta", "p_star", "v", "z", "z_next", "inside_kappa", "tie"]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def alpha_guideline_failures(alpha, t_start: int, t_end: int) -> List[int]:
    """Times ``t`` in ``[t_start, t_end)`` where ``(t+1) alpha - 1/2`` is an integer."""
    a = _exact(alpha)
    p, q = a.numerator, a.denominator
    # (t+1) p/q - 1/2 = (2 (t+1) p - q) / (2 q)
    return [t for t in range(t_start, t_end) if (2 * (t + 1) * p - q) >= 0 and (2 * (t + 1) * p - q) % (2 * q) == 0]


def run_ideal_oracle(alpha, y0, t0: int, steps: int) -> OracleTrace:
    """Drive ``Y`` with the ideal policy for ``steps`` steps starting at ``(t0, y0)``.

    ``beta < 0`` forces a violation, ``beta > 0`` prevents one and the tie
    ``beta = 0`` picks ``p* = 0`` (logged in ``ties``).
    """
    a = _exact(alpha)
    y = _exact(y0)
    _check_alpha(a)
    if t0 < 1:
        raise HypothesisError(f"t0 must be >= 1, got {t0}")
    if not 0 <= y <= 1:
        raise HypothesisError(f"y0 must lie in [0, 1], got {y0}")
    if not a > Fraction(1, 2 * (t0 + 1)):
        raise HypothesisError(f"alpha > 1/(2(t0+1)) fails: alpha={float(a)}, t0={t0}")
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    trace = OracleTrace(a, y, t0)
    trace.guideline_failures = alpha_guideline_failures(a, t0, t0 + steps)
    # integers only inside the loop: alpha = p/q, Y(t) = s/(d t)
    p, q = a.numerator, a.denominator
    d = y.denominator
    s = y.numerator * t0
    t = t0
    for _ in range(steps):
        # beta sign: base = B / (q d (t+1)) with B = p (t+1) d - q s; beta ~ |B - q d| - |B|
        big_b = p * (t + 1) * d - q * s
        b_sign = abs(big_b - q * d) - abs(big_b)
        tie = b_sign == 0
        pv = 1 if b_sign < 0 else 0
        if tie:
            trace.ties.append(t)
        # lower < Y < upper with lower = (2 alpha (t+1) - 1)/(2t+1), upper = 2 alpha (t+1)/(2t+1)
        mid = s * q * (2 * t + 1)
        inside = (2 * p * (t + 1) - q) * d * t < mid < 2 * p * (t + 1) * d * t
        s_next = s + d * pv
        # Z(t) = |p t d - q s| / (q t d), Z(t+1) = |p (t+1) d - q s'| / (q (t+1) d)
        grew = abs(p * (t + 1) * d - q * s_next) * t > abs(p * t * d - q * s) * (t + 1)
        trace.steps.append(OracleStep(t, s, d, a, pv, pv, inside, tie, grew))
        s, t = s_next, t + 1
    y = Fraction(s, d * t)
    trace.final_t, trace.final_y = t, y
    return trace


def kappa_crossings(trace: OracleTrace):
    """``(entries, exits)``: steps at which ``Y`` enters or leaves the critical region."""
    entries, exits = [], []
    prev = None
    for s in trace.steps:
        if prev is not None and s.inside_kappa != prev:
            (entries if s.inside_kappa else exits).append(s.t)
        prev = s.inside_kappa
    return entries, exits


def step_bound_holds(counts, ts) -> bool:
    """Exact check of ``|Y(t+1) - Y(t)| <= 1/(t+1)`` on a violation-count record.

    ``counts`` and ``ts`` are integer columns with ``Y = count / t``; pairs
    where ``t`` does not advance by one (restarts) are skipped.
    """
    counts = np.asarray(counts, dtype=np.int64)
    ts = np.asarray(ts, dtype=np.int64)
    for i in range(len(ts) - 1):
        t, t1 = int(ts[i]), int(ts[i + 1])
        if t < 1 or t1 != t + 1:
            continue
        dy = Fraction(int(counts[i + 1]), t1) - Fraction(int(counts[i]), t)
        if abs(dy) > Fraction(1, t1):
            return False
    return True
