"""Closed-loop year simulation of the four controllers on one scenario.

Per step: solve the nominal problem, post-process the first input against
the realized PV/load, record violations, then trigger or update ``h``.

Controllers:

* ``traditional1`` - hard SOC band, ``h = 0`` throughout
* ``traditional2`` - band relaxed by ``h_trigger`` from the start, no adaptation
* ``oasmpc1`` - ``h = 0`` until the SOC first touches a bound, then adaptive
* ``oasmpc2`` - as ``oasmpc1`` with ``t``, ``Y`` and ``h`` reset at ``restart_step``
"""
from __future__ import annotations

import dataclasses
import logging
import os
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from .adaptation import AdaptiveState, apply_onpeak_freeze, check_trigger, observe_state, update_h
from .forecast import ForecastSet, ScenarioParams, knn_day_ahead, read_forecast_csv, synth_scenario
from .lp import FEAS_TOL, HighsSession
from .lti import stack_horizon
from .microgrid import BessSpec, Tariff, bills_by_month, build_mg_system, mg_objective, onpeak_mask, yearly_total
from .mpc import ProblemCache, solve_step
from .postproc import balance_secondary, correct_for_uncertainty, design_limits

__all__ = ["TEST_CASES", "RunConfig", "SimulationTrace", "StepFailure", "load_scenario", "run_simulation"]

log = logging.getLogger(__name__)

TEST_CASES = ("traditional1", "traditional2", "oasmpc1", "oasmpc2")


class StepFailure(RuntimeError):
    """A step's LP could not be solved; ``dump_path`` holds the LP text if written."""

    def __init__(self, message: str, step: int, dump_path: Optional[str], cause: Exception):
        super().__init__(message)
        self.step = step
        self.dump_path = dump_path
        self.cause = cause


@dataclass
class RunConfig:
    test_case: str = "oasmpc1"
    tariff: Tariff = field(default_factory=Tariff)
    bess: BessSpec = field(default_factory=BessSpec)
    alpha: float = 0.1
    gamma: float = 15.0
    h0: Tuple[float, float] = (0.0, 0.0)
    h_trigger: Tuple[float, float] = (-0.1, -0.1)
    x0: float = 0.5
    epsilon: float = 0.001
    trigger_tol: float = 1e-6
    horizon: int = 96
    onpeak_freeze: bool = True
    restart_step: Optional[int] = None
    # scenario source: CSV path, else synthetic seed/days/params
    scenario_csv: Optional[str] = None
    seed: int = 0
    days: int = 365
    scenario: ScenarioParams = field(default_factory=ScenarioParams)
    forecast: str = "columns"  # columns | knn
    knn_k: int = 29
    max_steps: Optional[int] = None
    solver: str = "highs"  # highs | simplex
    output_dir: str = "out"
    dump_lp_dir: Optional[str] = None

    def __post_init__(self):
        if self.test_case not in TEST_CASES:
            raise ValueError(f"test_case must be one of {TEST_CASES}, got {self.test_case!r}")
        if not 0 < self.alpha < 0.5:
            raise ValueError("alpha must lie in (0, 0.5)")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if any(v > 0 for v in self.h0) or any(v > 0 for v in self.h_trigger):
            raise ValueError("h0 and h_trigger must be <= 0")
        if not 0 <= self.x0 <= 1:
            raise ValueError("x0 must lie in [0, 1]")
        if (self.test_case == "oasmpc2") != (self.restart_step is not None):
            raise ValueError("restart_step is required for oasmpc2 and only allowed there")
        if self.restart_step is not None and self.restart_step < 1:
            raise ValueError("restart_step must be >= 1")
        if self.forecast not in ("columns", "knn"):
            raise ValueError("forecast must be 'columns' or 'knn'")
        if self.solver not in ("highs", "simplex"):
            raise ValueError("solver must be 'highs' or 'simplex'")
        if self.days < 1:
            raise ValueError("days must be >= 1")

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


@dataclass
class SimulationTrace:
    config: RunConfig
    frame: pd.DataFrame

    def __len__(self) -> int:
        return len(self.frame)

    @property
    def bills(self):
        return bills_by_month(self.frame, self.config.tariff, self.config.bess)

    @property
    def yearly(self):
        return yearly_total(self.bills)

    @property
    def final_y(self) -> float:
        last = self.frame.iloc[-1]
        return last["count"] / last["t"] if last["t"] else 0.0

    @property
    def final_soc(self) -> float:
        return float(self.frame["x_next"].iloc[-1])


def load_scenario(cfg: RunConfig) -> ForecastSet:
    if cfg.scenario_csv:
        fs = read_forecast_csv(cfg.scenario_csv, cfg.bess.dt_hours)
    else:
        fs = synth_scenario(cfg.seed, cfg.days, dataclasses.replace(cfg.scenario, dt_hours=cfg.bess.dt_hours))
    if cfg.forecast == "knn":
        spd = cfg.bess.steps_per_day
        fs = fs.with_forecasts(knn_day_ahead(fs.pv_actual, spd, cfg.knn_k),
                               knn_day_ahead(fs.load_actual, spd, cfg.knn_k))
    if len(fs) >= 2 and abs(fs.dt_hours - cfg.bess.dt_hours) > 1e-9:
        raise ValueError(f"scenario step {fs.dt_hours} h differs from configured {cfg.bess.dt_hours} h")
    return fs


def _horizon_window(values: np.ndarray, start: int, n: int, period: int) -> np.ndarray:
    """``values[start:start+n]``, padded past the end by repeating the value one period earlier."""
    out = np.empty(n)
    total = values.shape[0]
    for k in range(n):
        i = start + k
        while i >= total:
            i -= period
        out[k] = values[max(i, 0)]
    return out


def run_simulation(cfg: RunConfig, scenario: Optional[ForecastSet] = None) -> SimulationTrace:
    fs = scenario if scenario is not None else load_scenario(cfg)
    n_steps = len(fs) if cfg.max_steps is None else min(cfg.max_steps, len(fs))
    if len(fs) < cfg.horizon:
        raise ValueError(f"scenario has {len(fs)} steps, fewer than the horizon {cfg.horizon}")
    bess, tariff = cfg.bess, cfg.tariff
    sys, spec, pp = build_mg_system(bess, cfg.alpha)
    spd = bess.steps_per_day
    step_delta = pd.Timedelta(hours=bess.dt_hours)
    all_ts = fs.timestamps.append(pd.DatetimeIndex([fs.timestamps[-1] + step_delta * (k + 1)
                                                    for k in range(cfg.horizon + 1)]))
    onpeak_all = onpeak_mask(all_ts, tariff)
    net_fc = fs.net_forecast
    w_all = fs.uncertainty

    adaptive = cfg.test_case in ("oasmpc1", "oasmpc2")
    h0 = np.array(cfg.h_trigger if cfg.test_case == "traditional2" else
                  (0.0, 0.0) if cfg.test_case == "traditional1" else cfg.h0, dtype=float)
    state = AdaptiveState.from_spec(spec, cfg.gamma, h0, cfg.h_trigger, bess.h_floor, cfg.epsilon)
    if cfg.test_case == "traditional2":
        state.triggered = True

    solver = cfg.solver if cfg.solver == "simplex" else HighsSession(FEAS_TOL)
    cache = ProblemCache()
    cols = {k: np.empty(n_steps) for k in (
        "x", "x_next", "u1_star", "u2_star", "u1", "u2", "pv_actual", "load_actual", "w",
        "h1", "h2", "design_lower", "design_upper", "y", "objective")}
    icols = {k: np.empty(n_steps, dtype=np.int64) for k in ("v_upper", "v_lower", "v_joint", "count", "t")}
    flags = np.empty(n_steps, dtype=object)
    status = np.empty(n_steps, dtype=object)
    triggered = np.zeros(n_steps, dtype=bool)
    x = np.array([cfg.x0])

    for k in range(n_steps):
        if adaptive and cfg.restart_step is not None and k == cfg.restart_step:
            state.reset_statistics()
            state.triggered = True
            log.info("restart at step %d", k)
        h_now = state.h.copy()
        m_fc = _horizon_window(net_fc, k, cfg.horizon, spd)
        data = stack_horizon(sys, spec, cfg.horizon, x, m_fc, h_now)
        obj = mg_objective(tariff, bess, all_ts[k:k + cfg.horizon], onpeak_all[k:k + cfg.horizon])
        try:
            res = solve_step(data, obj, solver=solver, cache=cache)
        except Exception as exc:
            dump = None
            lp = getattr(exc, "lp", None)
            if cfg.dump_lp_dir and lp is not None:
                os.makedirs(cfg.dump_lp_dir, exist_ok=True)
                dump = os.path.join(cfg.dump_lp_dir, f"lp_step{k:06d}.txt")
                lp.dump(dump)
            where = f"; LP written to {dump}" if dump else ""
            raise StepFailure(f"step {k} ({all_ts[k]}): {exc}{where}", k, dump, exc) from exc

        limits = design_limits(spec, h_now)
        cl = correct_for_uncertainty(res.u_first, x, [w_all[k]], pp, limits, sys, spec, [net_fc[k]])
        u1 = float(cl.u_applied[0])
        u2 = balance_secondary(u1, fs.pv_actual[k], fs.load_actual[k])
        rec = observe_state(state, cl.x_next, spec)

        if adaptive:
            if not state.triggered:
                check_trigger(state, cl.x_next, spec, cfg.trigger_tol)
            else:
                cand = update_h(state)
                if cfg.onpeak_freeze:
                    cand = apply_onpeak_freeze(state, cand, state.h, bool(onpeak_all[k + 1]))
                state.h = cand

        cols["x"][k] = x[0]
        cols["x_next"][k] = cl.x_next[0]
        cols["u1_star"][k], cols["u2_star"][k] = res.u_first
        cols["u1"][k], cols["u2"][k] = u1, u2
        cols["pv_actual"][k], cols["load_actual"][k] = fs.pv_actual[k], fs.load_actual[k]
        cols["w"][k] = w_all[k]
        cols["h1"][k], cols["h2"][k] = h_now
        cols["design_lower"][k], cols["design_upper"][k] = limits[0][0], limits[1][0]
        cols["y"][k] = state.jcc_y
        cols["objective"][k] = res.objective
        icols["v_upper"][k], icols["v_lower"][k] = rec.v
        icols["v_joint"][k] = rec.v_joint
        icols["count"][k] = state.jcc_count
        icols["t"][k] = state.t
        flags[k] = "|".join(cl.clamp_flags)
        status[k] = res.status.value
        triggered[k] = state.triggered
        x = cl.x_next

    frame = pd.DataFrame({"timestamp": fs.timestamps[:n_steps]})
    for key in ("x", "u1_star", "u2_star", "u1", "u2", "pv_actual", "load_actual", "w", "x_next"):
        frame[key] = cols[key]
    for key in ("v_upper", "v_lower", "v_joint", "count", "t"):
        frame[key] = icols[key]
    frame["y"] = cols["y"]
    for key in ("h1", "h2", "design_lower", "design_upper", "objective"):
        frame[key] = cols[key]
    frame["triggered"] = triggered
    frame["clamp"] = flags
    frame["status"] = status
    return SimulationTrace(cfg, frame)
