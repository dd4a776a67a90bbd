"""Self-check suites behind ``oasmpc verify``.

Each suite returns :class:`CheckResult` values; nothing here raises on a
failed property, so the CLI can report every outcome.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List

import numpy as np
import pandas as pd

from .adaptation import AdaptiveState, update_h
from .lti import stack_horizon
from .microgrid import BessSpec, Tariff, build_mg_system, mg_objective, monthly_bill, onpeak_mask
from .mpc import solve_step
from .simulation import RunConfig, run_simulation
from .theory import critical_region, run_ideal_oracle, step_bound_holds

__all__ = ["CheckResult", "SUITES", "run_suites", "grid_search_n2", "random_n2_instance"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _oracle_suite() -> List[CheckResult]:
    out = []
    for alpha in (0.1, 0.2, 0.3):
        for y0 in (0, 0.5, 1):
            t0 = time.perf_counter()
            tr = run_ideal_oracle(alpha, y0, 9, 10_000)
            secs = time.perf_counter() - t0
            big_t = tr.final_t
            bound = Fraction(1, big_t) + Fraction(1, 2 * big_t + 1)
            err = abs(tr.final_y - tr.alpha)
            out.append(CheckResult(f"oracle alpha={alpha} y0={y0}", err <= bound and tr.monotone_outside_kappa(),
                                   f"|Y-alpha|={float(err):.3g} bound={float(bound):.3g} "
                                   f"monotone outside kappa={tr.monotone_outside_kappa()} {secs:.2f}s"))
    return out


def _region_suite() -> List[CheckResult]:
    worst, prev, decreasing = 0.0, math.inf, True
    for t in range(1, 10_001):
        r = critical_region(0.1, t)
        worst = max(worst, abs((r.upper - r.lower) - 1.0 / (2 * t + 1)))
        decreasing &= r.width < prev
        prev = r.width
    return [CheckResult("critical region width", worst <= 1e-12 and decreasing,
                        f"max |width - 1/(2t+1)| = {worst:.2e}, strictly decreasing={decreasing}")]


def _h_update_suite() -> List[CheckResult]:
    out = []
    for y, want in ((0.2, -0.1 * (1 - 0.13 / 15)), (0.05, -0.1 * (1 + 0.005 / 15))):
        st = AdaptiveState(alpha=[0.1, 0.1], gamma=15.0, h=[-0.1, -0.1], h_trigger=[-0.1, -0.1],
                           h_floor=[-0.2, -0.2], jcc_alpha=0.1, t=9, triggered=True)
        st.jcc_y = y
        got = update_h(st)[0]
        out.append(CheckResult(f"h update Y={y}", abs(got - want) <= 1e-9, f"h={got:.10f} expected {want:.10f}"))
    rng = np.random.default_rng(0)
    bess = BessSpec()
    ok = True
    for _ in range(100_000 // 100):
        st = AdaptiveState(alpha=[0.1, 0.1], gamma=15.0, h=[-0.1, -0.1], h_trigger=[-0.1, -0.1],
                           h_floor=bess.h_floor, jcc_alpha=0.1, triggered=True)
        for _ in range(100):
            st.t += 1
            st.jcc_y = rng.choice([0.0, 1.0, rng.uniform()])
            st.h = update_h(st)
            ok &= bess.soc_max - st.h[0] <= 1.0 and bess.soc_min + st.h[1] >= 0.0 and np.all(st.h <= 0)
    out.append(CheckResult("h clamps under adversarial Y", bool(ok), "1e5 random updates"))
    return out


def _billing_suite() -> List[CheckResult]:
    ts = pd.date_range("2019-06-01", periods=30 * 96, freq="15min")
    u2 = np.full(len(ts), 100.0)
    flat = monthly_bill(pd.DataFrame({"timestamp": ts, "u1": 0.0, "u2": u2}), Tariff(), BessSpec(), "2019-06")
    u2_op = np.where(onpeak_mask(ts, Tariff()), 50.0, 100.0)
    op = monthly_bill(pd.DataFrame({"timestamp": ts, "u1": 0.0, "u2": u2_op}), Tariff(), BessSpec(), "2019-06")
    good = (abs(flat.ncdc - 2448.0) < 1e-9 and abs(flat.energy_cost - 7200.0) < 1e-9
            and abs(op.ncdc - 2448.0) < 1e-9 and abs(op.opdc - 959.5) < 1e-9)
    return [CheckResult("monthly bill arithmetic", good,
                        f"flat: ncdc={flat.ncdc:.2f} energy={flat.energy_cost:.2f}; "
                        f"50 kW on-peak: ncdc={op.ncdc:.2f} opdc={op.opdc:.2f}")]


def random_n2_instance(rng: np.random.Generator) -> Dict:
    start = pd.Timestamp("2019-03-04") + pd.Timedelta(minutes=15 * int(rng.integers(0, 96)))
    h = float(rng.uniform(-0.15, 0.0))
    return {
        "x0": float(rng.uniform(0.45, 0.8)),
        "m_fc": rng.uniform(-600.0, 600.0, 2),
        "h": np.array([h, h]),
        "timestamps": pd.date_range(start, periods=2, freq="15min"),
    }


def grid_search_n2(inst: Dict, tariff: Tariff, bess: BessSpec, step: float = 1.0) -> float:
    """Exhaustive search over battery power on a ``step`` kW grid for a 2-step horizon."""
    u = np.arange(-bess.power_kw, bess.power_kw + step / 2, step)
    ua, ub = np.meshgrid(u, u, indexing="ij")
    b = bess.b11
    x1 = inst["x0"] + b * ua
    x2 = x1 + b * ub
    upper = bess.soc_max - inst["h"][0]
    lower = bess.soc_min + inst["h"][1]
    feasible = (x1 <= upper) & (x1 >= lower) & (x2 <= upper) & (x2 >= lower) & (x2 >= bess.x_hat)
    if not feasible.any():
        return math.inf
    m = inst["m_fc"]
    va, vb = ua - m[0], ub - m[1]
    e = tariff.r_ec * bess.dt_hours
    cost = tariff.r_nc * np.maximum(0.0, np.maximum(va, vb)) + e * (va + vb)
    cost += e * (1 - bess.eta) / 2 * (np.abs(ua) + np.abs(ub))
    op = onpeak_mask(inst["timestamps"], tariff)
    if op.any():
        op_peak = np.zeros_like(va)
        for k, v in enumerate((va, vb)):
            if op[k]:
                op_peak = np.maximum(op_peak, v)
        cost += tariff.r_op * op_peak
    return float(cost[feasible].min())


def _lp_vs_grid_suite(count: int = 25) -> List[CheckResult]:
    tariff, bess = Tariff(), BessSpec()
    sys, spec, _ = build_mg_system(bess)
    rng = np.random.default_rng(2024)
    worst = -math.inf
    t0 = time.perf_counter()
    for _ in range(count):
        inst = random_n2_instance(rng)
        data = stack_horizon(sys, spec, 2, [inst["x0"]], inst["m_fc"], inst["h"])
        res = solve_step(data, mg_objective(tariff, bess, inst["timestamps"]))
        worst = max(worst, res.objective - grid_search_n2(inst, tariff, bess))
    secs = time.perf_counter() - t0
    return [CheckResult("LP vs grid search (N=2)", worst <= 1e-4,
                        f"{count} instances, max(LP - grid) = {worst:.3g}, {secs:.1f}s")]


def _closed_loop_suite(days: int = 2) -> List[CheckResult]:
    out = []
    for case in ("traditional1", "traditional2", "oasmpc1", "oasmpc2"):
        cfg = RunConfig(test_case=case, days=days, seed=1,
                        restart_step=days * 48 if case == "oasmpc2" else None)
        f = run_simulation(cfg).frame
        balance = float(np.max(np.abs(f.u1 - f.u2 - (f.pv_actual - f.load_actual))))
        in_design = bool(np.all((f.x_next <= f.design_upper + 1e-9) & (f.x_next >= f.design_lower - 1e-9)))
        physical = bool(np.all((f.x_next >= 0) & (f.x_next <= 1)))
        power = bool(np.all(np.abs(f.u1) <= 700.0))
        steps = step_bound_holds(f["count"], f["t"])
        good = balance <= 1e-9 and in_design and physical and power and steps
        out.append(CheckResult(f"closed loop {case} ({days} d)", good,
                               f"balance={balance:.1e} design={in_design} physical={physical} "
                               f"|u1|<=700={power} step bound={steps}"))
    return out


SUITES: Dict[str, Callable[[], List[CheckResult]]] = {
    "oracle": _oracle_suite,
    "region": _region_suite,
    "h-update": _h_update_suite,
    "billing": _billing_suite,
    "lp": _lp_vs_grid_suite,
    "closed-loop": _closed_loop_suite,
}


def run_suites(names=None) -> List[CheckResult]:
    names = list(SUITES) if not names else names
    results = []
    for n in names:
        if n not in SUITES:
            raise KeyError(f"unknown suite {n!r}; choose from {', '.join(SUITES)}")
        results.extend(SUITES[n]())
    return results
