import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fastkm.exceptions import ParameterError, ShapeError
from fastkm.operators import (
    FunctionMap,
    MatrixMap,
    averaged_map,
    dot,
    estimate_operator_norm,
    group_soft_threshold,
    norm,
    project_ball,
    prox_half_sq_dist,
    skew_resolvent_op,
    soft_threshold,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def vec(n):
    return arrays(np.float64, n, elements=finite)


def test_dot_and_norm_flatten_shapes():
    a = np.arange(6.0).reshape(2, 3)
    assert dot(a, a) == pytest.approx(55.0)
    assert norm(a) == pytest.approx(np.sqrt(55.0))


def test_dot_rejects_shape_mismatch():
    with pytest.raises(ShapeError):
        dot(np.ones(3), np.ones(4))


def test_matrix_map_adjoint_view_and_dense():
    A = np.array([[1.0, 2.0, 0.0], [0.0, -1.0, 3.0]])
    M = MatrixMap(A)
    assert np.array_equal(M.to_dense(), A)
    assert np.array_equal(M.T.to_dense(), A.T)
    assert np.allclose(M.T.apply(np.array([1.0, 1.0])), A.T @ np.ones(2))
    with pytest.raises((ValueError, AttributeError)):
        M.matrix[0, 0] = 5.0


def test_function_map_to_dense_matches_callables():
    A = np.array([[2.0, 1.0], [0.0, 1.0], [1.0, -1.0]])
    F = FunctionMap(lambda x: A @ x, lambda y: A.T @ y, 2, 3)
    assert np.allclose(F.to_dense(), A)


def test_operator_norm_of_diagonal():
    M = MatrixMap(np.diag([3.0, 1.0, 0.5]))
    assert estimate_operator_norm(M, iters=200) == pytest.approx(3.0, rel=1e-10)


def test_soft_threshold_examples():
    out = soft_threshold(np.array([3.0, -0.5, -2.0, 0.0]), 1.0)
    assert np.array_equal(out, np.array([2.0, 0.0, -1.0, 0.0]))
    with pytest.raises(ParameterError):
        soft_threshold(np.ones(2), -1.0)


def test_group_soft_threshold_rows():
    s = np.array([[3.0, 4.0], [0.3, 0.4], [0.0, 0.0]])
    out = group_soft_threshold(s, 1.0)
    assert np.allclose(out[0], [2.4, 3.2])
    assert np.array_equal(out[1], [0.0, 0.0])
    assert np.array_equal(out[2], [0.0, 0.0])
    with pytest.raises(ShapeError):
        group_soft_threshold(np.ones(4), 1.0)


def test_project_ball_and_half_sq_dist():
    c = np.array([1.0, 1.0])
    assert np.allclose(project_ball(np.array([4.0, 5.0]), c, 1.0), [1.6, 1.8])
    inside = np.array([1.2, 0.9])
    assert np.array_equal(project_ball(inside, c, 1.0), inside)
    x = np.array([4.0, 5.0])
    out = prox_half_sq_dist(x, lambda z: project_ball(z, c, 1.0), 1.0)
    assert np.allclose(out, 0.5 * (x + np.array([1.6, 1.8])))


def test_skew_resolvent_fixed_point_and_contraction():
    T = skew_resolvent_op(10, 0.1)
    assert np.array_equal(T(np.zeros(10)), np.zeros(10))
    x = np.ones(10)
    assert norm(T(x)) == pytest.approx(norm(x) / np.sqrt(1.01), rel=1e-14)
    with pytest.raises(ParameterError):
        skew_resolvent_op(9, 0.1)


def test_averaged_map_identity_step_and_bounds():
    T = skew_resolvent_op(4, 0.5)
    assert averaged_map(T, 1.0) is T
    x = np.arange(4.0)
    assert np.allclose(averaged_map(T, 0.5)(x), 0.5 * x + 0.5 * T(x))
    for bad in (0.0, 2.5):
        with pytest.raises(ParameterError):
            averaged_map(T, bad)


@settings(max_examples=60, deadline=None)
@given(vec(10), vec(10))
def test_skew_resolvent_is_firmly_nonexpansive(x, y):
    T = skew_resolvent_op(10, 0.1)
    d = T(x) - T(y)
    assert dot(d, d) <= dot(d, x - y) + 1e-9 * (1.0 + dot(x - y, x - y))


@settings(max_examples=60, deadline=None)
@given(vec(6), vec(6), st.floats(0.0, 10.0))
def test_soft_threshold_is_firmly_nonexpansive(x, y, tau):
    d = soft_threshold(x, tau) - soft_threshold(y, tau)
    assert dot(d, d) <= dot(d, x - y) + 1e-9 * (1.0 + dot(x - y, x - y))


@settings(max_examples=60, deadline=None)
@given(vec(8), vec(8), st.floats(0.0, 10.0))
def test_group_soft_threshold_is_firmly_nonexpansive(x, y, tau):
    a, b = x.reshape(4, 2), y.reshape(4, 2)
    d = group_soft_threshold(a, tau) - group_soft_threshold(b, tau)
    assert dot(d, d) <= dot(d, a - b) + 1e-9 * (1.0 + dot(a - b, a - b))


@settings(max_examples=40, deadline=None)
@given(vec(12), vec(5))
def test_matrix_map_adjoint_identity(x, y):
    A = np.random.default_rng(3).standard_normal((5, 12))
    M = MatrixMap(A)
    lhs = dot(M.apply(x), y)
    rhs = dot(x, M.apply_adjoint(y))
    assert lhs == pytest.approx(rhs, abs=1e-9 * (1.0 + norm(x) * norm(y)))
