"""PV/load scenarios: CSV exchange, kNN day-ahead forecasting, synthetic data."""
from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

__all__ = [
    "CSV_COLUMNS",
    "ForecastFormatError",
    "ForecastSet",
    "ScenarioParams",
    "read_forecast_csv",
    "write_forecast_csv",
    "knn_forecast",
    "knn_day_ahead",
    "synth_scenario",
]

CSV_COLUMNS = ["timestamp_iso8601", "pv_forecast_kw", "load_forecast_kw", "pv_actual_kw", "load_actual_kw"]


class ForecastFormatError(ValueError):
    """Malformed scenario CSV; ``line`` is the 1-based line number."""

    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


@dataclass(frozen=True, eq=False)
class ForecastSet:
    timestamps: pd.DatetimeIndex
    pv_forecast: np.ndarray
    load_forecast: np.ndarray
    pv_actual: np.ndarray
    load_actual: np.ndarray

    def __post_init__(self):
        ts = pd.DatetimeIndex(self.timestamps)
        object.__setattr__(self, "timestamps", ts)
        n = len(ts)
        for name in ("pv_forecast", "load_forecast", "pv_actual", "load_actual"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            if arr.shape != (n,):
                raise ValueError(f"{name} has shape {arr.shape}, expected ({n},)")
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise ValueError(f"{name} must be finite and nonnegative")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if n > 1 and not ts.is_monotonic_increasing:
            raise ValueError("timestamps must increase")

    def __len__(self) -> int:
        return len(self.timestamps)

    @property
    def dt_hours(self) -> float:
        if len(self) < 2:
            raise ValueError("need at least two samples to infer the step length")
        return (self.timestamps[1] - self.timestamps[0]).total_seconds() / 3600.0

    @property
    def net_forecast(self) -> np.ndarray:
        """Coupling right-hand side ``PV_f - L_f``."""
        return self.pv_forecast - self.load_forecast

    @property
    def net_actual(self) -> np.ndarray:
        return self.pv_actual - self.load_actual

    @property
    def uncertainty(self) -> np.ndarray:
        """``w = (PV_r - PV_f) - (L_r - L_f)``."""
        return (self.pv_actual - self.pv_forecast) - (self.load_actual - self.load_forecast)

    def head(self, n: int) -> "ForecastSet":
        return ForecastSet(self.timestamps[:n], self.pv_forecast[:n], self.load_forecast[:n],
                           self.pv_actual[:n], self.load_actual[:n])

    def with_forecasts(self, pv_forecast, load_forecast) -> "ForecastSet":
        return ForecastSet(self.timestamps, pv_forecast, load_forecast, self.pv_actual, self.load_actual)


def read_forecast_csv(path, dt_hours: float = 0.25) -> ForecastSet:
    """Read the five-column scenario CSV, checking header, values and cadence."""
    stamps, rows = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ForecastFormatError("empty file", 1)
        if [h.strip() for h in header] != CSV_COLUMNS:
            raise ForecastFormatError(f"header must be {','.join(CSV_COLUMNS)}", 1)
        step = dt.timedelta(hours=dt_hours)
        for line_no, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(CSV_COLUMNS):
                raise ForecastFormatError(f"expected {len(CSV_COLUMNS)} fields, got {len(rec)}", line_no)
            try:
                ts = dt.datetime.fromisoformat(rec[0].strip())
            except ValueError:
                raise ForecastFormatError(f"bad timestamp {rec[0]!r}", line_no) from None
            try:
                vals = [float(c) for c in rec[1:]]
            except ValueError:
                raise ForecastFormatError(f"non-numeric value in {rec[1:]}", line_no) from None
            if any(not np.isfinite(v) or v < 0 for v in vals):
                raise ForecastFormatError("values must be finite and nonnegative", line_no)
            if stamps and ts - stamps[-1] != step:
                raise ForecastFormatError(f"timestamp {rec[0]} breaks the {dt_hours} h cadence", line_no)
            stamps.append(ts)
            rows.append(vals)
    if not rows:
        raise ForecastFormatError("no data rows", 2)
    arr = np.array(rows)
    return ForecastSet(pd.DatetimeIndex(stamps), arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3])


def write_forecast_csv(fs: ForecastSet, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for i, ts in enumerate(fs.timestamps):
            writer.writerow([ts.isoformat(), repr(float(fs.pv_forecast[i])), repr(float(fs.load_forecast[i])),
                             repr(float(fs.pv_actual[i])), repr(float(fs.load_actual[i]))])


def knn_forecast(history, feature_window, k: int, horizon: int = 96, stride: int = 1) -> np.ndarray:
    """Mean of the successors of the ``k`` historical windows closest to ``feature_window``.

    Candidate windows start every ``stride`` samples; each is compared by
    Euclidean distance and followed by ``horizon`` samples inside
    ``history``.  Distance ties go to the earlier window.
    """
    history = np.asarray(history, dtype=float).ravel()
    feature = np.asarray(feature_window, dtype=float).ravel()
    w = feature.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    if history.shape[0] < k + w + horizon:
        raise ValueError(f"history has {history.shape[0]} samples, need at least {k + w + horizon}")
    starts = np.arange(0, history.shape[0] - w - horizon + 1, stride)
    if starts.size < k:
        raise ValueError(f"only {starts.size} candidate windows for k={k}")
    windows = np.lib.stride_tricks.sliding_window_view(history, w + horizon)[starts]
    dist = np.sqrt(np.sum((windows[:, :w] - feature) ** 2, axis=1))
    nearest = np.argsort(dist, kind="stable")[:k]
    return windows[nearest, w:].mean(axis=0)


def knn_day_ahead(series, steps_per_day: int = 96, k: int = 29, min_days: Optional[int] = None) -> np.ndarray:
    """Forecast column built one day at a time from the day before.

    Day ``d`` is predicted by :func:`knn_forecast` over days ``0..d-1`` with
    day-aligned candidate windows, using day ``d-1`` as the feature.  Days
    without enough history fall back to the previous day (persistence); the
    first day is copied as is.
    """
    series = np.asarray(series, dtype=float).ravel()
    n_days = series.shape[0] // steps_per_day
    if min_days is None:
        min_days = k + 1
    out = series.copy()
    for d in range(1, n_days):
        lo = d * steps_per_day
        prev = series[lo - steps_per_day:lo]
        if d >= min_days + 1:
            out[lo:lo + steps_per_day] = knn_forecast(series[:lo], prev, k, steps_per_day, stride=steps_per_day)
        else:
            out[lo:lo + steps_per_day] = prev
    tail = n_days * steps_per_day
    if tail < series.shape[0] and n_days >= 1:
        out[tail:] = series[tail - steps_per_day:tail - steps_per_day + (series.shape[0] - tail)]
    return np.maximum(out, 0.0)


@dataclass(frozen=True)
class ScenarioParams:
    """Synthetic site: sinusoidal load, bell-shaped PV, AR(1) forecast errors.

    ``load_std`` is the marginal std (kW) of the load forecast error;
    ``pv_rel_std`` the relative std of the multiplicative PV error.
    """

    load_base: float = 900.0
    load_amplitude: float = 450.0
    load_peak_hour: float = 18.0
    load_day_std: float = 60.0
    load_noise_std: float = 20.0
    pv_capacity: float = 1000.0
    pv_sunrise: float = 6.0
    pv_sunset: float = 19.0
    cloud_min: float = 0.4
    load_std: float = 50.0
    pv_rel_std: float = 0.1
    ar_coef: float = 0.9
    dt_hours: float = 0.25
    start: str = "2019-01-01 00:00"

    def __post_init__(self):
        if not 0 <= self.ar_coef < 1:
            raise ValueError("ar_coef must lie in [0, 1)")
        for name in ("load_base", "load_day_std", "load_noise_std", "pv_capacity", "load_std", "pv_rel_std"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if not 0 <= self.cloud_min <= 1:
            raise ValueError("cloud_min must lie in [0, 1]")
        if not self.pv_sunrise < self.pv_sunset:
            raise ValueError("sunrise must precede sunset")
        if self.dt_hours <= 0 or abs(24.0 / self.dt_hours - round(24.0 / self.dt_hours)) > 1e-9:
            raise ValueError("dt_hours must divide 24 h")


def _ar1(rng: np.random.Generator, n: int, phi: float, std: float) -> np.ndarray:
    """Stationary AR(1) with marginal standard deviation ``std``."""
    if std == 0 or n == 0:
        return np.zeros(n)
    innov = rng.normal(0.0, std * np.sqrt(1.0 - phi * phi), n)
    out = np.empty(n)
    out[0] = rng.normal(0.0, std)
    for i in range(1, n):
        out[i] = phi * out[i - 1] + innov[i]
    return out


def synth_scenario(seed: int, days: int, params: Optional[ScenarioParams] = None) -> ForecastSet:
    """Deterministic synthetic year (or any number of days) for a given seed."""
    p = params or ScenarioParams()
    if days < 1:
        raise ValueError("days must be >= 1")
    rng = np.random.default_rng(seed)
    spd = int(round(24.0 / p.dt_hours))
    n = days * spd
    ts = pd.date_range(pd.Timestamp(p.start), periods=n, freq=pd.Timedelta(hours=p.dt_hours))
    hour = np.arange(n) % spd * p.dt_hours

    day_level = np.repeat(rng.normal(0.0, p.load_day_std, days), spd)
    load_f = (p.load_base + day_level
              + p.load_amplitude * np.cos(2.0 * np.pi * (hour - p.load_peak_hour) / 24.0)
              + _ar1(rng, n, p.ar_coef, p.load_noise_std))
    load_f = np.maximum(load_f, 0.0)

    daylight = np.clip((hour - p.pv_sunrise) / (p.pv_sunset - p.pv_sunrise), 0.0, 1.0)
    bell = np.sin(np.pi * daylight) ** 2
    cloud = np.repeat(rng.uniform(p.cloud_min, 1.0, days), spd)
    pv_f = p.pv_capacity * bell * cloud

    load_a = np.maximum(load_f + _ar1(rng, n, p.ar_coef, p.load_std), 0.0)
    pv_a = np.maximum(pv_f * (1.0 + _ar1(rng, n, p.ar_coef, p.pv_rel_std)), 0.0)
    return ForecastSet(ts, pv_f, load_f, pv_a, load_a)
