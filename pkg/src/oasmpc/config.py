"""Flat ``key = value`` run configuration files.

Keys follow the case-study parameter names (``r_nc``, ``bess_en``,
``soc_max``, ``h_ti`` ...).  Lines starting with ``#`` or ``;`` are
comments.  Vector values are comma separated.
"""
from __future__ import annotations

import configparser
import dataclasses
import datetime as dt
from typing import Dict, Mapping

from .forecast import ScenarioParams
from .simulation import RunConfig

__all__ = ["ConfigError", "CONFIG_KEYS", "read_config_file", "parse_overrides", "build_run_config",
           "config_to_text"]


class ConfigError(ValueError):
    """Unknown key or unparsable value."""


def _pair(text: str):
    parts = [float(p) for p in text.replace(";", ",").split(",") if p.strip()]
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2:
        raise ValueError(f"expected one or two numbers, got {text!r}")
    return tuple(parts)


def _clock(text: str) -> dt.time:
    return dt.datetime.strptime(text.strip(), "%H:%M").time()


def _opt_int(text: str):
    return None if text.strip().lower() in ("", "none") else int(text)


def _opt_str(text: str):
    return None if text.strip().lower() in ("", "none") else text.strip()


def _flag(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (section, field, parser)
CONFIG_KEYS = {
    "test_case": ("run", "test_case", str.strip),
    "alpha": ("run", "alpha", float),
    "gamma": ("run", "gamma", float),
    "h0": ("run", "h0", _pair),
    "h_ti": ("run", "h_trigger", _pair),
    "x0": ("run", "x0", float),
    "epsilon": ("run", "epsilon", float),
    "trigger_tol": ("run", "trigger_tol", float),
    "n": ("run", "horizon", int),
    "onpeak_freeze": ("run", "onpeak_freeze", _flag),
    "restart_step": ("run", "restart_step", _opt_int),
    "scenario_csv": ("run", "scenario_csv", _opt_str),
    "seed": ("run", "seed", int),
    "days": ("run", "days", int),
    "forecast": ("run", "forecast", str.strip),
    "knn_k": ("run", "knn_k", int),
    "max_steps": ("run", "max_steps", _opt_int),
    "solver": ("run", "solver", str.strip),
    "output_dir": ("run", "output_dir", str.strip),
    "dump_lp_dir": ("run", "dump_lp_dir", _opt_str),
    "r_nc": ("tariff", "r_nc", float),
    "r_op": ("tariff", "r_op", float),
    "r_ec": ("tariff", "r_ec", float),
    "onpeak_start": ("tariff", "onpeak_start", _clock),
    "onpeak_end": ("tariff", "onpeak_end", _clock),
    "bess_en": ("bess", "energy_kwh", float),
    "bess_max": ("bess", "power_kw", float),
    "eta": ("bess", "eta", float),
    "soc_min": ("bess", "soc_min", float),
    "soc_max": ("bess", "soc_max", float),
    "x_hat": ("bess", "x_hat", float),
    "dt": ("bess", "dt_hours", float),
}
for _f in dataclasses.fields(ScenarioParams):
    if _f.name != "dt_hours":
        CONFIG_KEYS[f"scenario.{_f.name}"] = ("scenario", _f.name, type(_f.default))


def read_config_file(path) -> Dict[str, str]:
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"),
                                       inline_comment_prefixes=("#",))
    parser.optionxform = str.lower
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_string("[run]\n" + fh.read(), source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return dict(parser["run"])


def parse_overrides(items) -> Dict[str, str]:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, value = item.split("=", 1)
        out[key.strip().lower()] = value.strip()
    return out


def build_run_config(values: Mapping[str, str], base: RunConfig = None) -> RunConfig:
    """Apply string ``values`` on top of ``base`` (defaults when omitted)."""
    base = base or RunConfig()
    groups = {"run": {}, "tariff": {}, "bess": {}, "scenario": {}}
    for key, raw in values.items():
        key = key.strip().lower()
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown configuration key {key!r}")
        section, name, parse = CONFIG_KEYS[key]
        try:
            groups[section][name] = parse(raw) if isinstance(raw, str) else raw
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from None
    try:
        tariff = dataclasses.replace(base.tariff, **groups["tariff"])
        bess = dataclasses.replace(base.bess, **groups["bess"])
        scenario = dataclasses.replace(base.scenario, **groups["scenario"])
        return dataclasses.replace(base, tariff=tariff, bess=bess, scenario=scenario, **groups["run"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def config_to_text(cfg: RunConfig) -> str:
    """Round-trippable ``key = value`` text for a configuration."""
    lines = []
    objs = {"run": cfg, "tariff": cfg.tariff, "bess": cfg.bess, "scenario": cfg.scenario}
    for key, (section, name, _) in CONFIG_KEYS.items():
        v = getattr(objs[section], name)
        if isinstance(v, tuple):
            v = ", ".join(repr(float(x)) for x in v)
        elif isinstance(v, dt.time):
            v = v.strftime("%H:%M")
        elif isinstance(v, float):
            v = repr(v)
        elif v is None:
            v = "none"
        lines.append(f"{key} = {v}")
    return "\n".join(lines) + "\n"
