"""Command-line driver: ``run``, ``sweep``, ``oracle`` and ``verify``.

Exit codes: 0 success, 1 failed verification, 2 infeasible or unsolvable
LP, 3 bad input, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import logging
import os
import sys
from typing import List, Optional

import pandas as pd

from .config import ConfigError, build_run_config, config_to_text, parse_overrides, read_config_file
from .forecast import ForecastFormatError
from .report import format_summary, render_figures, summary_rows, write_outputs
from .simulation import TEST_CASES, RunConfig, StepFailure, run_simulation

EXIT_OK, EXIT_VERIFY, EXIT_INFEASIBLE, EXIT_INPUT, EXIT_IO = 0, 1, 2, 3, 4

log = logging.getLogger("oasmpc")


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", default=[],
                   help="override a configuration key (repeatable)")
    p.add_argument("--scenario-csv", help="scenario CSV instead of the synthetic generator")
    p.add_argument("--days", type=int, help="synthetic scenario length in days")
    p.add_argument("--max-steps", type=int, help="stop after this many steps")
    p.add_argument("--solver", choices=["highs", "simplex"])
    p.add_argument("--forecast", choices=["columns", "knn"],
                   help="use the CSV/synthetic forecast columns or rebuild them by kNN")
    p.add_argument("--dump-lp", metavar="DIR", help="write the LP of a failing step to DIR")
    p.add_argument("--plots", action="store_true", help="also render PNG figures")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oasmpc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one controller")
    p.add_argument("--case", choices=TEST_CASES)
    p.add_argument("--seed", type=int)
    p.add_argument("--restart-step", type=int, help="reset step for oasmpc2 (default: mid-scenario)")
    p.add_argument("--out", help="output directory")
    _add_run_options(p)

    p = sub.add_parser("sweep", help="simulate several seeds and controllers")
    p.add_argument("--seeds", default="0", help="comma list or range a-b (inclusive)")
    p.add_argument("--cases", default=",".join(TEST_CASES))
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--out", default="sweep_out")
    _add_run_options(p)

    p = sub.add_parser("oracle", help="ideal-policy convergence run")
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--y0", type=float, default=0.0)
    p.add_argument("--t0", type=int, default=9)
    p.add_argument("--steps", type=int, default=10_000)
    p.add_argument("--out", help="CSV file for the trace")

    p = sub.add_parser("verify", help="run the built-in invariant checks")
    p.add_argument("--suite", action="append", help="suite name (repeatable); default all")
    return parser


def _parse_seeds(text: str) -> List[int]:
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part[1:]:
            a, b = part.split("-", 1)
            seeds.extend(range(int(a), int(b) + 1))
        elif part:
            seeds.append(int(part))
    return seeds


def _config_from_args(args, case: Optional[str] = None, seed: Optional[int] = None) -> RunConfig:
    values = read_config_file(args.config) if args.config else {}
    values.update(parse_overrides(args.set))
    for key, attr in (("scenario_csv", "scenario_csv"), ("days", "days"), ("max_steps", "max_steps"),
                      ("solver", "solver"), ("forecast", "forecast"), ("dump_lp_dir", "dump_lp")):
        v = getattr(args, attr, None)
        if v is not None:
            values[key] = str(v)
    for key, v in (("test_case", case), ("seed", seed), ("output_dir", getattr(args, "out", None))):
        if v is not None:
            values[key] = str(v)
    restart = getattr(args, "restart_step", None)
    if restart is not None:
        values["restart_step"] = str(restart)
    # oasmpc2 restarts mid-scenario unless told otherwise; other cases never restart
    chosen = values.get("test_case", RunConfig().test_case)
    if chosen != "oasmpc2":
        values["restart_step"] = "none"
    elif str(values.get("restart_step", "none")).lower() == "none":
        base = build_run_config({k: v for k, v in values.items() if k not in ("test_case", "restart_step")})
        steps = base.days * base.bess.steps_per_day if not base.scenario_csv else None
        if steps is None:
            from .forecast import read_forecast_csv

            steps = len(read_forecast_csv(base.scenario_csv, base.bess.dt_hours))
        if base.max_steps:
            steps = min(steps, base.max_steps)
        values["restart_step"] = str(max(1, steps // 2))
    return build_run_config(values)


def _simulate(cfg: RunConfig, figures: bool):
    trace = run_simulation(cfg)
    paths = write_outputs(trace, cfg.output_dir, figures=figures)
    with open(os.path.join(cfg.output_dir, "config.txt"), "w", encoding="utf-8") as fh:
        fh.write(config_to_text(cfg))
    return trace, paths


def _sweep_job(cfg: RunConfig, keep: bool = False):
    trace = run_simulation(cfg)
    write_outputs(trace, cfg.output_dir)
    return cfg.test_case, cfg.seed, summary_rows(trace), trace if keep else None


def cmd_run(args) -> int:
    cfg = _config_from_args(args, args.case, args.seed)
    trace, paths = _simulate(cfg, args.plots)
    print(format_summary({cfg.test_case: summary_rows(trace)}))
    print("---")
    for p in paths:
        print(p)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cases = [c.strip() for c in args.cases.split(",") if c.strip()]
    for c in cases:
        if c not in TEST_CASES:
            raise ConfigError(f"unknown case {c!r}")
    seeds = _parse_seeds(args.seeds)
    cfgs = []
    for seed in seeds:
        for case in cases:
            cfg = _config_from_args(args, case, seed)
            cfgs.append(cfg.replace(output_dir=os.path.join(args.out, f"seed{seed}", case)))
    keep = [args.plots] * len(cfgs)
    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_job, cfgs, keep))
    else:
        results = [_sweep_job(c, k) for c, k in zip(cfgs, keep)]
    rows = [{"seed": seed, "test_case": case, **summary} for case, seed, summary, _ in results]
    frame = pd.DataFrame(rows)
    os.makedirs(args.out, exist_ok=True)
    frame.to_csv(os.path.join(args.out, "sweep_summary.csv"), index=False, lineterminator="\n")
    for seed in seeds:
        print(f"seed {seed}")
        print(format_summary({case: summary for case, s, summary, _ in results if s == seed}))
        print("---")
    if args.plots:
        for seed in seeds:
            traces = {case: tr for case, s, _, tr in results if s == seed}
            for p in render_figures(traces, os.path.join(args.out, f"seed{seed}")):
                print(p)
    print(os.path.join(args.out, "sweep_summary.csv"))
    return EXIT_OK


def cmd_oracle(args) -> int:
    from .theory import kappa_crossings, run_ideal_oracle

    tr = run_ideal_oracle(args.alpha, args.y0, args.t0, args.steps)
    entries, exits = kappa_crossings(tr)
    big_t = tr.final_t
    print(f"alpha={args.alpha} y0={args.y0} t0={args.t0} steps={args.steps}")
    print(f"final t={big_t} Y={float(tr.final_y):.8f} |Y-alpha|={tr.final_error:.3e} "
          f"bound={1 / big_t + 1 / (2 * big_t + 1):.3e}")
    print(f"Z monotone outside critical region: {tr.monotone_outside_kappa()}")
    print(f"critical-region entries={len(entries)} exits={len(exits)} beta ties={len(tr.ties)}")
    if tr.guideline_failures:
        print(f"(t+1)alpha - 1/2 integer at {len(tr.guideline_failures)} steps, first t={tr.guideline_failures[0]}")
    if args.out:
        tr.to_csv(args.out)
        print("---")
        print(args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_suites

    results = run_suites(args.suite)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_VERIFY


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"run": cmd_run, "sweep": cmd_sweep, "oracle": cmd_oracle, "verify": cmd_verify}
    try:
        return handlers[args.command](args)
    except StepFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, ForecastFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
