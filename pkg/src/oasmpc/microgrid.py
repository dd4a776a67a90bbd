"""Battery-scheduling case study: plant, tariff objective and monthly billing.

State: battery SOC.  Inputs: ``u1`` battery power (kW, + charges) and ``u2``
grid import (kW).  The coupling ``u1 - u2 = PV - load`` balances the site.
"""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import pandas as pd

from .lti import ConstraintSpec, LtiSystem
from .mpc import ObjectiveSpec, PeakGroup
from .postproc import PostProcessConfig

__all__ = [
    "Tariff",
    "BessSpec",
    "MonthlyBill",
    "build_mg_system",
    "onpeak_mask",
    "mg_objective",
    "monthly_bill",
    "bills_by_month",
    "yearly_total",
]


@dataclass(frozen=True)
class Tariff:
    r_nc: float = 24.48  # $/kW, monthly max import
    r_op: float = 19.19  # $/kW, monthly max import inside the on-peak window
    r_ec: float = 0.1  # $/kWh
    onpeak_start: dt.time = dt.time(16, 0)
    onpeak_end: dt.time = dt.time(21, 0)

    def __post_init__(self):
        if min(self.r_nc, self.r_op, self.r_ec) < 0:
            raise ValueError("tariff rates must be nonnegative")
        if self.onpeak_start == self.onpeak_end:
            raise ValueError("on-peak window is empty")


@dataclass(frozen=True)
class BessSpec:
    energy_kwh: float = 2500.0
    power_kw: float = 700.0
    eta: float = 0.8
    soc_min: float = 0.2
    soc_max: float = 0.8
    x_hat: float = 0.5
    dt_hours: float = 0.25

    def __post_init__(self):
        if not 0 < self.eta <= 1:
            raise ValueError("eta must lie in (0, 1]")
        if not 0 <= self.soc_min < self.soc_max <= 1:
            raise ValueError("need 0 <= soc_min < soc_max <= 1")
        if self.energy_kwh <= 0 or self.power_kw <= 0 or self.dt_hours <= 0:
            raise ValueError("energy, power and step length must be positive")
        if self.dt_hours * self.power_kw / self.energy_kwh > self.soc_max - self.soc_min:
            raise ValueError("one step at full power would sweep the whole SOC band")

    @property
    def b11(self) -> float:
        return self.dt_hours / self.energy_kwh

    @property
    def steps_per_day(self) -> int:
        return int(round(24.0 / self.dt_hours))

    @property
    def h_floor(self) -> np.ndarray:
        """Most negative relaxation that keeps the design limits in [0, 1]."""
        return np.array([self.soc_max - 1.0, -self.soc_min])


@dataclass(frozen=True)
class MonthlyBill:
    month: str
    ncdc: float
    opdc: float
    energy_cost: float
    bess_loss_cost: float
    bess_cycles: float

    @property
    def total(self) -> float:
        return self.ncdc + self.opdc + self.energy_cost + self.bess_loss_cost


def build_mg_system(bess: BessSpec, alpha: float = 0.1) -> Tuple[LtiSystem, ConstraintSpec, PostProcessConfig]:
    """Plant, joint chance constraint on both SOC bounds, and the post-processing split."""
    b11 = bess.b11
    sys = LtiSystem([[1.0]], [[b11, 0.0]], [[b11]])
    spec = ConstraintSpec(
        s_mat=[[1.0, 0.0], [-1.0, 0.0]],
        s_vec=[bess.power_kw, bess.power_kw],
        m_mat=[[1.0, -1.0]],
        f_mat=[[1.0]],
        g_mat=[[1.0], [-1.0]],
        g_vec=[bess.soc_max, -bess.soc_min],
        alpha=[alpha, alpha],
        jcc_alpha=alpha,
        terminal_lb=[bess.x_hat],
    )
    cfg = PostProcessConfig.from_system(sys, 0, 1, (-bess.power_kw, bess.power_kw))
    return sys, spec, cfg


def onpeak_mask(timestamps, tariff: Tariff) -> np.ndarray:
    """True where the local clock time lies in ``[onpeak_start, onpeak_end)``."""
    ts = pd.DatetimeIndex(timestamps)
    minutes = ts.hour * 60 + ts.minute + ts.second / 60.0
    lo = tariff.onpeak_start.hour * 60 + tariff.onpeak_start.minute
    hi = tariff.onpeak_end.hour * 60 + tariff.onpeak_end.minute
    if lo < hi:
        return np.asarray((minutes >= lo) & (minutes < hi))
    return np.asarray((minutes >= lo) | (minutes < hi))


def mg_objective(tariff: Tariff, bess: BessSpec, horizon_timestamps, onpeak=None) -> ObjectiveSpec:
    """Demand charges on the horizon peaks plus energy and battery-loss cost.

    ``onpeak`` optionally supplies the precomputed on-peak mask of the horizon.
    """
    n = len(horizon_timestamps)
    e = tariff.r_ec * bess.dt_hours
    linear = np.zeros((n, 2))
    linear[:, 1] = e
    abs_w = np.zeros((n, 2))
    abs_w[:, 0] = e * (1.0 - bess.eta) / 2.0
    if onpeak is None:
        onpeak = onpeak_mask(horizon_timestamps, tariff)
    op_steps = np.flatnonzero(onpeak)
    peaks = [PeakGroup(1, range(n), tariff.r_nc, True, "ncdc")]
    if op_steps.size:
        peaks.append(PeakGroup(1, op_steps, tariff.r_op, True, "opdc"))
    return ObjectiveSpec(linear, abs_w, peaks)


def _month_key(ts: pd.DatetimeIndex) -> np.ndarray:
    """``year * 100 + month`` per timestamp."""
    return np.asarray(ts.year * 100 + ts.month)


def _parse_month(month: str) -> int:
    try:
        year, mon = (int(p) for p in month.split("-"))
    except ValueError:
        raise ValueError(f"month must look like YYYY-MM, got {month!r}") from None
    return year * 100 + mon


def monthly_bill(trace: pd.DataFrame, tariff: Tariff, bess: BessSpec, month: str) -> MonthlyBill:
    """Bill for calendar month ``month`` (``"YYYY-MM"``) from realized ``u1``/``u2``.

    ``trace`` needs ``timestamp``, ``u1`` and ``u2`` columns.
    """
    ts = pd.DatetimeIndex(trace["timestamp"])
    sel = _month_key(ts) == _parse_month(month)
    if not sel.any():
        raise ValueError(f"trace does not cover month {month}")
    u1 = np.asarray(trace["u1"], dtype=float)[sel]
    u2 = np.asarray(trace["u2"], dtype=float)[sel]
    op = onpeak_mask(ts[sel], tariff)
    peak = max(0.0, float(u2.max()))
    op_peak = max(0.0, float(u2[op].max())) if op.any() else 0.0
    throughput = float(np.abs(u1).sum())
    e = tariff.r_ec * bess.dt_hours
    return MonthlyBill(
        month=month,
        ncdc=tariff.r_nc * peak,
        opdc=tariff.r_op * op_peak,
        energy_cost=e * float(u2.sum()),
        bess_loss_cost=e * (1.0 - bess.eta) / 2.0 * throughput,
        bess_cycles=throughput * bess.dt_hours / (2.0 * bess.energy_kwh),
    )


def bills_by_month(trace: pd.DataFrame, tariff: Tariff, bess: BessSpec) -> List[MonthlyBill]:
    keys = _month_key(pd.DatetimeIndex(trace["timestamp"]))
    months = list(dict.fromkeys(keys.tolist()))
    return [monthly_bill(trace, tariff, bess, f"{m // 100:04d}-{m % 100:02d}") for m in months]


def yearly_total(bills: Sequence[MonthlyBill]) -> MonthlyBill:
    """Component-wise sum; demand charges are added per month, never re-maximised."""
    return MonthlyBill(
        month="total",
        ncdc=sum(b.ncdc for b in bills),
        opdc=sum(b.opdc for b in bills),
        energy_cost=sum(b.energy_cost for b in bills),
        bess_loss_cost=sum(b.bess_loss_cost for b in bills),
        bess_cycles=sum(b.bess_cycles for b in bills),
    )
