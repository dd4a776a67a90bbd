from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from oasmpc.theory import (
    HypothesisError,
    alpha_guideline_failures,
    beta,
    critical_region,
    critical_region_exact,
    delta_expected,
    kappa_crossings,
    run_ideal_oracle,
    step_bound_holds,
)


def test_region_at_t9():
    r = critical_region(0.1, 9)
    assert r.lower == pytest.approx(0.0526316, abs=1e-7)
    assert r.upper == pytest.approx(0.1052632, abs=1e-7)
    assert r.width == pytest.approx(1 / 19)


def test_region_shrinks_onto_alpha():
    r = critical_region(0.1, 10**8)
    assert r.lower == pytest.approx(0.1, abs=1e-8) and r.upper == pytest.approx(0.1, abs=1e-8)


@settings(max_examples=200)
@given(alpha=st.fractions(Fraction(1, 100), Fraction(49, 100)), t=st.integers(1, 10**6))
def test_exact_width_identity(alpha, t):
    r = critical_region_exact(alpha, t)
    assert r.width == Fraction(1, 2 * t + 1)
    assert r.lower < alpha < r.upper


@pytest.mark.parametrize("y,expected", [(0.0, -0.1), (1.0, 0.1)])
def test_beta_examples(y, expected):
    assert beta(0.1, y, 9) == pytest.approx(expected)


@settings(max_examples=100)
@given(alpha=st.fractions(Fraction(1, 20), Fraction(9, 20)), t=st.integers(2, 10**4))
def test_beta_zero_point(alpha, t):
    y0 = (alpha - Fraction(1, 2 * (t + 1))) / (1 - Fraction(1, t + 1))
    assert beta(alpha, y0, t) == 0


def test_delta_at_alpha_is_positive():
    t = 9
    assert delta_expected(Fraction(1, 10), Fraction(1, 10), t, 0) == Fraction(1, 10) / (t + 1)


def test_delta_vanishes_for_large_t():
    for y in (0.0, 0.3, 1.0):
        for p in (0.0, 0.5, 1.0):
            assert abs(delta_expected(0.1, y, 10**6, p)) <= 2e-6


@settings(max_examples=100)
@given(y=st.fractions(0, 1), p=st.fractions(0, 1), t=st.integers(1, 1000))
def test_delta_linear_in_p(y, p, t):
    a = Fraction(1, 10)
    assert delta_expected(a, y, t, p) == p * beta(a, y, t) + delta_expected(a, y, t, 0)


def test_oracle_bound_after_ten_thousand_steps():
    tr = run_ideal_oracle(0.1, 0.0, 9, 10_000)
    assert tr.final_t == 10_009
    assert tr.final_error <= 2e-4
    assert tr.monotone_outside_kappa()


def test_oracle_descends_until_region():
    tr = run_ideal_oracle(0.3, 1.0, 9, 2000)
    first_in = next(i for i, s in enumerate(tr.steps) if s.inside_kappa)
    ys = [s.y for s in tr.steps[: first_in + 1]]
    assert all(b < a for a, b in zip(ys, ys[1:]))


@pytest.mark.parametrize("t0", [1, 10, 100])
@pytest.mark.parametrize("y0", [Fraction(i, 20) for i in range(0, 21, 5)])
def test_region_entered_and_left(t0, y0):
    alpha = Fraction(3, 10)
    tr = run_ideal_oracle(alpha, y0, t0, 3000)
    entries, exits = kappa_crossings(tr)
    assert entries and exits
    assert tr.monotone_outside_kappa()
    # every increase of Z happens inside the critical region
    inside = {s.t for s in tr.steps if s.inside_kappa}
    assert set(tr.increases()) <= inside


def test_ties_choose_no_violation():
    tr = run_ideal_oracle(0.1, 0.0, 9, 200)
    for s in tr.steps:
        if s.tie:
            assert s.p_star == 0 and s.beta == 0
    assert tr.ties


def test_guideline_failures_for_tenth():
    assert alpha_guideline_failures(0.1, 1, 40) == [4, 14, 24, 34]


def test_oracle_preconditions():
    with pytest.raises(HypothesisError):
        run_ideal_oracle(0.01, 0.0, 9, 10)
    with pytest.raises(HypothesisError):
        run_ideal_oracle(0.1, 1.5, 9, 10)


def test_step_bound_skips_restarts():
    assert step_bound_holds([0, 1, 1, 0, 1], [1, 2, 3, 1, 2])
    assert not step_bound_holds([0, 2], [1, 2])


def test_trace_csv(tmp_path):
    tr = run_ideal_oracle(0.2, 0.5, 9, 5)
    path = tmp_path / "oracle.csv"
    tr.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,y,beta,p_star,v,z,z_next,inside_kappa,tie"
    assert len(lines) == 6
