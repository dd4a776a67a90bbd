import io
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from oasmpc.lp import (
    HighsSession,
    LinearProgram,
    LpStatus,
    add_abs_epigraph,
    add_max_epigraph,
    infeasible_rows,
    solve_lp,
)

from oracles import grid_min, vertex_enumeration

METHODS = ["highs", "simplex"]


def fixed(values):
    lp = LinearProgram()
    for i, v in enumerate(values):
        lp.add_variable(f"z{i}", v, v)
    return lp


@pytest.mark.parametrize("method", METHODS)
def test_max_epigraph_picks_largest(method):
    lp = fixed([3.0, 7.0, 5.0])
    aux = add_max_epigraph(lp, [0, 1, 2], 1.0, floor_at_zero=True)
    sol = solve_lp(lp, method)
    assert sol.ok and sol.primal[aux] == pytest.approx(7.0)


@pytest.mark.parametrize("method", METHODS)
def test_max_epigraph_floor_binds(method):
    lp = fixed([-3.0, -1.0])
    aux = add_max_epigraph(lp, [0, 1], 1.0, floor_at_zero=True)
    sol = solve_lp(lp, method)
    assert sol.primal[aux] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("method", METHODS)
def test_max_epigraph_singleton(method):
    lp = fixed([-2.5])
    aux = add_max_epigraph(lp, [0], 1.0)
    assert solve_lp(lp, method).primal[aux] == pytest.approx(-2.5)


def test_inactive_candidate_rows_are_ignored():
    lp = fixed([3.0, 9.0])
    aux = add_max_epigraph(lp, [0], 1.0, candidates=[0, 1])
    assert math.isinf(lp.ineq_rhs[1])
    for method in METHODS:
        assert solve_lp(lp, method).primal[aux] == pytest.approx(3.0)


@pytest.mark.parametrize("method", METHODS)
@pytest.mark.parametrize("value,expected", [(-4.0, 4.0), (0.0, 0.0)])
def test_abs_epigraph(method, value, expected):
    lp = fixed([value])
    aux = add_abs_epigraph(lp, 0, 1.0)
    assert solve_lp(lp, method).primal[aux] == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("method", METHODS)
def test_two_variable_abs_objective_matches_grid(method):
    # min |x - 0.3| + 2|y + 0.4| + 0.5 max(x, y) + 0.1 x  on [-1, 1]^2
    lp = LinearProgram()
    x = lp.add_variable("x", -1, 1, 0.1)
    y = lp.add_variable("y", -1, 1)
    dx = lp.add_variable("dx", -math.inf, math.inf)
    dy = lp.add_variable("dy", -math.inf, math.inf)
    lp.add_sparse_eq({dx: 1.0, x: -1.0}, -0.3)
    lp.add_sparse_eq({dy: 1.0, y: -1.0}, 0.4)
    add_abs_epigraph(lp, dx, 1.0)
    add_abs_epigraph(lp, dy, 2.0)
    add_max_epigraph(lp, [x, y], 0.5)
    sol = solve_lp(lp, method)
    g = np.arange(-1.0, 1.0 + 1e-9, 0.01)
    ref = grid_min(lambda a, b: np.abs(a - 0.3) + 2 * np.abs(b + 0.4) + 0.5 * np.maximum(a, b) + 0.1 * a,
                   [g, g])
    assert sol.objective == pytest.approx(ref, abs=1e-6)


@pytest.mark.parametrize("method", METHODS)
def test_trivial_programs(method):
    lp = LinearProgram()
    lp.add_variable("x", 1.0, math.inf, 1.0)
    sol = solve_lp(lp, method)
    assert sol.primal[0] == pytest.approx(1.0) and sol.objective == pytest.approx(1.0)

    lp = LinearProgram()
    lp.add_variable("x", 0.0, math.inf, -1.0)
    lp.add_sparse_ineq({0: 1.0}, 5.0)
    assert solve_lp(lp, method).primal[0] == pytest.approx(5.0)

    lp = LinearProgram()
    lp.add_variables(["x", "y"], 0.0, math.inf, 1.0)
    lp.add_sparse_ineq({0: -1.0, 1: -1.0}, -2.0)
    assert solve_lp(lp, method).objective == pytest.approx(2.0)


@pytest.mark.parametrize("method", METHODS)
def test_infeasible_and_unbounded(method):
    lp = LinearProgram()
    lp.add_variable("x", 0.0, 1.0, 1.0)
    lp.add_sparse_ineq({0: -1.0}, -2.0, "x>=2")
    assert solve_lp(lp, method).status is LpStatus.INFEASIBLE
    assert infeasible_rows(lp) == ["x>=2"]

    lp = LinearProgram()
    lp.add_variable("x", -math.inf, 0.0, 1.0)
    assert solve_lp(lp, method).status is LpStatus.UNBOUNDED


def random_bounded_lp(rng, n, k):
    lo = rng.uniform(-5, 0, n)
    hi = rng.uniform(0.1, 5, n)
    a = rng.normal(size=(k, n))
    x_feas = rng.uniform(lo, hi)
    b = a @ x_feas + rng.uniform(0, 2, k)
    c = rng.normal(size=n)
    return c, a, b, lo, hi


def to_program(c, a, b, lo, hi):
    lp = LinearProgram()
    lp.add_variables([f"x{i}" for i in range(len(c))], lo, hi, c)
    lp.add_ineq(a, b)
    return lp


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(n=st.integers(1, 6), k=st.integers(1, 8), seed=st.integers(0, 2**31 - 1))
def test_both_backends_match_vertex_enumeration(n, k, seed):
    c, a, b, lo, hi = random_bounded_lp(np.random.default_rng(seed), n, k)
    ref = vertex_enumeration(c, a, b, lo, hi)
    lp = to_program(c, a, b, lo, hi)
    for method in METHODS:
        sol = solve_lp(lp, method)
        assert sol.ok
        assert sol.objective == pytest.approx(ref, abs=1e-7, rel=1e-7)
        assert float(lp.cost @ sol.primal) == pytest.approx(sol.objective, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("method", METHODS)
def test_repeat_solves_are_bitwise_identical(method):
    c, a, b, lo, hi = random_bounded_lp(np.random.default_rng(11), 6, 8)
    lp = to_program(c, a, b, lo, hi)
    first, second = solve_lp(lp, method), solve_lp(lp, method)
    assert np.array_equal(first.primal, second.primal)


def test_session_warm_start_matches_cold_solve():
    c, a, b, lo, hi = random_bounded_lp(np.random.default_rng(5), 5, 6)
    base = to_program(c, a, b, lo, hi)
    session = HighsSession()
    rng = np.random.default_rng(6)
    for _ in range(10):
        lp = base.with_rhs(b + rng.uniform(0, 1, b.shape))
        assert lp.structure_token is base.structure_token
        warm, cold = session.solve(lp), solve_lp(lp, "highs")
        assert warm.objective == pytest.approx(cold.objective, abs=1e-9)


def test_derived_program_is_frozen():
    lp = to_program(*random_bounded_lp(np.random.default_rng(1), 2, 2))
    child = lp.with_rhs()
    with pytest.raises(RuntimeError):
        child.add_variable("extra")
    with pytest.raises(ValueError):
        lp.with_rhs(np.zeros(5))


def test_dump_lists_each_row_once():
    lp = LinearProgram()
    lp.add_variables(["x", "y"], 0.0, 4.0, [1.0, 2.0])
    lp.add_sparse_ineq({0: 1.0, 1: 1.0}, 3.0, "cap")
    lp.add_sparse_eq({0: 1.0, 1: -1.0}, 0.0, "tie")
    buf = io.StringIO()
    text = lp.dump(buf)
    assert buf.getvalue() == text
    assert "cap: +1 x +1 y <= 3" in text
    assert "tie: +1 x -1 y = 0" in text
    assert text.splitlines()[0] == "minimize" and text.splitlines()[-1] == "end"
