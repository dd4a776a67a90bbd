import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oasmpc.lti import (
    ConstraintSpec,
    LtiSystem,
    ShapeError,
    propagate_nominal,
    simulate_recursive,
    stack_horizon,
)


def scalar_spec(n=1, m=1, p=1):
    return ConstraintSpec(
        s_mat=np.vstack([np.eye(m), -np.eye(m)]),
        s_vec=np.ones(2 * m),
        m_mat=np.zeros((1, m)),
        f_mat=np.zeros((1, p)),
        g_mat=np.vstack([np.eye(n), -np.eye(n)]),
        g_vec=np.ones(2 * n),
        alpha=np.full(2 * n, 0.1),
    )


def data_for(a, b, n_steps, x0=None):
    sys = LtiSystem(a, b, np.zeros((np.shape(a)[0], 1)))
    spec = scalar_spec(sys.n, sys.m)
    x0 = np.zeros(sys.n) if x0 is None else x0
    return stack_horizon(sys, spec, n_steps, x0, np.zeros(n_steps), np.zeros(2 * sys.n))


def test_integrator_two_steps():
    d = data_for([[1.0]], [[1.0]], 2)
    assert np.array_equal(d.stacked_a, [[1.0], [1.0]])
    assert np.array_equal(d.stacked_b, [[1.0, 0.0], [1.0, 1.0]])


def test_single_step_is_identity():
    a = np.array([[0.5, 0.1], [0.0, 0.9]])
    b = np.array([[1.0], [0.3]])
    d = data_for(a, b, 1)
    assert np.array_equal(d.stacked_a, a)
    assert np.array_equal(d.stacked_b, b)


def test_powers_of_a_in_last_row():
    d = data_for([[2.0]], [[1.0]], 3)
    assert np.array_equal(d.stacked_b[2], [4.0, 2.0, 1.0])


def test_propagate_integrator():
    d = data_for([[1.0]], [[1.0]], 2)
    assert np.allclose(propagate_nominal(d, [0.0], [[1.0], [1.0]]).ravel(), [1.0, 2.0])


def test_zero_input_keeps_state():
    d = data_for([[1.0]], [[1.0]], 5)
    assert np.allclose(propagate_nominal(d, [0.3], np.zeros((5, 1))).ravel(), 0.3)


def test_random_2x2_matches_recursion():
    rng = np.random.default_rng(3)
    a, b = rng.normal(size=(2, 2)), rng.normal(size=(2, 2))
    d = data_for(a, b, 4)
    x0, u = rng.normal(size=2), rng.normal(size=(4, 2))
    assert np.allclose(propagate_nominal(d, x0, u), simulate_recursive(d.system, x0, u), atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 3), m=st.integers(1, 3), big_n=st.integers(1, 8), seed=st.integers(0, 2**31 - 1))
def test_stacked_form_equals_recursion(n, m, big_n, seed):
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1, 1, (n, n)) / n
    b = rng.uniform(-1, 1, (n, m))
    d = data_for(a, b, big_n)
    x0, u = rng.uniform(-1, 1, n), rng.uniform(-1, 1, (big_n, m))
    assert np.allclose(propagate_nominal(d, x0, u), simulate_recursive(d.system, x0, u), atol=1e-10)


def test_relaxation_repeated_per_block():
    sys = LtiSystem([[1.0]], [[1.0]], [[1.0]])
    spec = scalar_spec()
    d = stack_horizon(sys, spec, 4, [0.0], np.zeros(4), [-0.1, -0.05])
    assert np.array_equal(d.stacked_h.reshape(4, 2), np.tile([-0.1, -0.05], (4, 1)))
    assert np.allclose(d.state_rhs.reshape(4, 2), [[1.1, 1.05]] * 4)


def test_positive_h_rejected():
    sys = LtiSystem([[1.0]], [[1.0]], [[1.0]])
    with pytest.raises(ValueError):
        stack_horizon(sys, scalar_spec(), 2, [0.0], np.zeros(2), [0.1, 0.0])


def test_shape_errors():
    with pytest.raises(ShapeError):
        LtiSystem([[1.0, 0.0]], [[1.0]], [[1.0]])
    sys = LtiSystem([[1.0]], [[1.0]], [[1.0]])
    with pytest.raises(ShapeError):
        stack_horizon(sys, scalar_spec(), 3, [0.0], np.zeros(2), [0.0, 0.0])
    with pytest.raises(ValueError):
        ConstraintSpec([[1.0]], [1.0], [[1.0]], [[1.0]], [[1.0]], [1.0], alpha=[0.6])


def test_stacked_arrays_are_read_only():
    d = data_for([[1.0]], [[1.0]], 3)
    with pytest.raises(ValueError):
        d.stacked_b[0, 0] = 5.0
