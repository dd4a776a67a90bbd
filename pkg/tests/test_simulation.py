import filecmp
import os

import numpy as np
import pandas as pd
import pytest

from oasmpc.forecast import synth_scenario, write_forecast_csv
from oasmpc.report import OUTPUT_FILES, SUMMARY_LABELS, format_summary, summary_rows, write_outputs
from oasmpc.simulation import RunConfig, StepFailure, _horizon_window, run_simulation
from oasmpc.theory import step_bound_holds


@pytest.fixture(scope="module")
def short_runs():
    out = {}
    for case in ("traditional1", "traditional2", "oasmpc1", "oasmpc2"):
        cfg = RunConfig(test_case=case, days=3, seed=2, restart_step=144 if case == "oasmpc2" else None)
        out[case] = run_simulation(cfg)
    return out


def test_traditional1_never_violates(short_runs):
    f = short_runs["traditional1"].frame
    assert short_runs["traditional1"].final_y == 0.0
    assert f.x_next.between(0.2 - 1e-9, 0.8 + 1e-9).all()
    assert (f.h1 == 0).all() and (f.h2 == 0).all()


def test_traditional2_keeps_trigger_relaxation(short_runs):
    f = short_runs["traditional2"].frame
    assert np.allclose(f.h1, -0.1) and np.allclose(f.h2, -0.1)
    assert f.triggered.all()


def test_closed_loop_invariants(short_runs):
    for tr in short_runs.values():
        f = tr.frame
        assert np.max(np.abs(f.u1 - f.u2 - (f.pv_actual - f.load_actual))) <= 1e-9
        assert ((f.x_next >= 0) & (f.x_next <= 1)).all()
        assert ((f.x_next <= f.design_upper + 1e-9) & (f.x_next >= f.design_lower - 1e-9)).all()
        assert (f.u1.abs() <= 700).all()
        assert step_bound_holds(f["count"], f["t"])
        assert (f.status == "optimal").all()


def test_state_chain_is_consistent(short_runs):
    f = short_runs["oasmpc1"].frame
    assert np.array_equal(f.x.to_numpy()[1:], f.x_next.to_numpy()[:-1])
    assert np.allclose(f.x_next, f.x + 1e-4 * f.u1)


def test_restart_resets_counters(short_runs):
    f = short_runs["oasmpc2"].frame
    assert f["t"].iloc[144] == 1
    assert f["t"].iloc[143] == 144
    assert f.h1.iloc[144] == pytest.approx(-0.1)
    assert f.triggered.iloc[144:].all()


def test_h_only_moves_after_trigger(short_runs):
    f = short_runs["oasmpc1"].frame
    before = ~f.triggered.shift(1, fill_value=False)
    assert (f.h1[before] == 0).all()


def test_identical_configs_give_identical_files(tmp_path):
    cfg = RunConfig(test_case="oasmpc1", days=1, seed=5)
    a = write_outputs(run_simulation(cfg), str(tmp_path / "a"))
    b = write_outputs(run_simulation(cfg), str(tmp_path / "b"))
    assert [os.path.basename(p) for p in a] == list(OUTPUT_FILES.values())
    for pa, pb in zip(a, b):
        assert filecmp.cmp(pa, pb, shallow=False)


def test_summary_labels_and_table():
    tr = run_simulation(RunConfig(test_case="traditional1", days=1, seed=1))
    rows = summary_rows(tr)
    assert list(rows) == SUMMARY_LABELS
    text = format_summary({"traditional1": rows})
    assert [line.split("  ")[0] for line in text.splitlines()[1:]] == SUMMARY_LABELS
    assert text.splitlines()[-1].endswith("0.0%")


def test_horizon_padding_repeats_previous_day():
    vals = np.arange(10.0)
    assert _horizon_window(vals, 7, 5, 4).tolist() == [7, 8, 9, 6, 7]


def test_csv_scenario_and_knn_forecasts(tmp_path):
    path = tmp_path / "scenario.csv"
    write_forecast_csv(synth_scenario(1, 2), path)
    cfg = RunConfig(test_case="oasmpc1", scenario_csv=str(path), forecast="knn", max_steps=20)
    tr = run_simulation(cfg)
    assert len(tr) == 20
    # with two days of data the kNN column falls back to persistence of day one
    assert np.allclose(tr.frame.w.iloc[:20], 0.0)


def test_simplex_backend_runs():
    cfg = RunConfig(test_case="oasmpc1", days=1, seed=3, horizon=8, max_steps=6, solver="simplex")
    ref = run_simulation(cfg.replace(solver="highs"))
    tr = run_simulation(cfg)
    assert np.allclose(tr.frame.objective, ref.frame.objective, atol=1e-6)


def test_infeasible_start_dumps_lp(tmp_path):
    cfg = RunConfig(test_case="traditional1", days=1, x0=0.0, dump_lp_dir=str(tmp_path))
    with pytest.raises(StepFailure) as err:
        run_simulation(cfg)
    assert err.value.step == 0
    assert os.path.exists(err.value.dump_path)
    with open(err.value.dump_path, encoding="utf-8") as fh:
        assert fh.readline().strip() == "minimize"


@pytest.mark.parametrize("changes", [
    {"test_case": "bogus"},
    {"alpha": 0.6},
    {"test_case": "oasmpc2"},
    {"restart_step": 10},
    {"h0": (0.1, 0.0)},
    {"solver": "cplex"},
])
def test_config_validation(changes):
    with pytest.raises(ValueError):
        RunConfig(**changes)


def test_short_scenario_rejected():
    with pytest.raises(ValueError):
        run_simulation(RunConfig(days=1, horizon=200))


def test_trace_timestamps_follow_scenario(short_runs):
    f = short_runs["traditional1"].frame
    assert f.timestamp.iloc[0] == pd.Timestamp("2019-01-01")
    assert (f.timestamp.diff().dropna() == pd.Timedelta(minutes=15)).all()
