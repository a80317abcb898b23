import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fastkm.diagnostics import (
    IterationTrace,
    LyapunovState,
    TraceRecord,
    explicit_residual_bound,
    gap_function,
    lyapunov_energy,
    primal_dual_gap,
    rate_slope,
    residual,
)
from fastkm.exceptions import HistoryError, ParameterError, ShapeError
from fastkm.operators import MatrixMap, skew_resolvent_op


def test_trace_rejects_non_increasing_index_and_negative_residual():
    tr = IterationTrace()
    tr.append(TraceRecord(0, 1.0))
    with pytest.raises(ValueError):
        tr.append(TraceRecord(0, 0.5))
    with pytest.raises(ValueError):
        tr.append(TraceRecord(1, -1.0))


def test_trace_csv_layout_and_round_trip():
    tr = IterationTrace()
    tr.append(TraceRecord(0, 0.1, gap=0.2))
    tr.append(TraceRecord(1, 1 / 3, energy=5.0, variance=0.0))
    lines = tr.to_csv().splitlines()
    assert lines[0] == "k,residual,residual_times_k,gap,energy,variance"
    assert lines[1] == "0,0.1,0.0,0.2,,"
    fields = lines[2].split(",")
    assert float(fields[1]) == 1 / 3
    assert fields[3] == ""
    assert np.isnan(tr.gap[1]) and tr.energy[1] == 5.0


def test_trace_extras_stay_aligned():
    tr = IterationTrace()
    tr.append(TraceRecord(0, 1.0))
    tr.append(TraceRecord(1, 1.0), {"feas": 2.0})
    tr.append(TraceRecord(2, 1.0))
    feas = tr.extra("feas")
    assert np.isnan(feas[0]) and feas[1] == 2.0 and np.isnan(feas[2])


def test_residual_and_gap_basics():
    x = np.array([3.0, 4.0])
    assert residual(x, np.zeros(2)) == 5.0
    assert gap_function(x, x, np.zeros(2)) == 0.0
    with pytest.raises(ShapeError):
        residual(np.ones(2), np.ones(3))


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, 10, elements=st.floats(-1e3, 1e3)))
def test_gap_is_nonnegative_for_nonexpansive_map(x):
    T = skew_resolvent_op(10, 0.1)
    assert gap_function(x, T(x), np.zeros(10)) >= -1e-9 * (1.0 + x @ x)


def test_primal_dual_gap_vanishes_at_saddle():
    L = MatrixMap(np.eye(2))

    def f(x):
        return 0.5 * float(np.dot(x, x))

    def gstar(y):
        return 0.5 * float(np.dot(y, y))

    z = np.zeros(2)
    assert primal_dual_gap(f, gstar, L, z, z, z, z) == 0.0
    assert primal_dual_gap(f, gstar, L, np.ones(2), np.ones(2), z, z) == pytest.approx(2.0)


def test_lyapunov_energy_hand_computed():
    st_ = LyapunovState(lam=1.0, eta=0.5, alpha=3.0, sigma=3.0, z_star=np.zeros(1))
    E = lyapunov_energy(1, np.array([2.0]), np.array([1.0]), np.array([0.5]), st_)
    # t = 2, Q = 1, delta = 1, xi = 1, c = 1, v = 0.5 + 2 (0.5 + 0.5) = 2.5
    assert E == pytest.approx(1.0 + 1.0 + 0.125 + 3.125)


def test_lyapunov_state_validation_and_history():
    with pytest.raises(ParameterError):
        LyapunovState(lam=5.0, eta=0.5, alpha=3.0, sigma=3.0, z_star=np.zeros(1))
    with pytest.raises(ParameterError):
        LyapunovState(lam=1.0, eta=1.0, alpha=3.0, sigma=3.0, z_star=np.zeros(1))
    st_ = LyapunovState(lam=1.0, eta=0.5, alpha=3.0, sigma=3.0, z_star=np.zeros(1))
    with pytest.raises(HistoryError):
        lyapunov_energy(0, np.ones(1), np.ones(1), np.ones(1), st_)
    with pytest.raises(HistoryError):
        lyapunov_energy(2, np.ones(1), np.ones(1), None, st_)


def test_explicit_bound_values_and_errors():
    b = explicit_residual_bound(2.0, 0.5, 4.0, alpha=3.0)
    assert b.residual_sq == pytest.approx(1.0)
    assert b.gap == pytest.approx(0.5)
    for eta in (0.0, 1.0):
        with pytest.raises(ParameterError):
            explicit_residual_bound(1.0, eta, 4.0)
    with pytest.raises(ParameterError):
        explicit_residual_bound(1.0, 0.5, 0.0)


def test_rate_slope_recovers_power_law():
    ks = np.arange(1, 1001)
    assert rate_slope(ks, 3.0 / ks, (100, 1000)) == pytest.approx(-1.0, abs=1e-12)
    with pytest.raises(ParameterError):
        rate_slope(ks, 1.0 / ks, (1, 5))


def test_gap_hand_example_negative_identity():
    assert gap_function(np.array([1.0]), np.array([-1.0]), np.zeros(1)) == 0.0


def test_residual_of_skew_first_step():
    T = skew_resolvent_op(10, 0.1)
    x = np.ones(10)
    A = np.block([[np.eye(5), -0.1 * np.eye(5)], [0.1 * np.eye(5), np.eye(5)]]) / 1.01
    assert residual(x, T(x)) == pytest.approx(np.linalg.norm(x - A @ x), rel=1e-14)


def test_rate_slope_flat_and_quadratic():
    ks = np.arange(1, 501)
    assert rate_slope(ks, np.full(500, 2.0), (10, 500)) == pytest.approx(0.0, abs=1e-6)
    assert rate_slope(ks, 1.0 / ks**2, (10, 500)) == pytest.approx(-2.0, abs=1e-6)
    with pytest.raises(ParameterError):
        rate_slope(ks, -np.ones(500), (10, 500))


def test_energy_zero_at_fixed_point_and_nonnegative():
    from fastkm.iteration import ScheduleParams, run_fast_km

    T = skew_resolvent_op(10, 0.1)
    p = ScheduleParams(alpha=4.0, sigma=4.0, eta=0.5)
    tr = run_fast_km(T, np.zeros(10), np.zeros(10), p, 20, z_star=np.zeros(10), energy_lambda=3.0)
    assert np.all(tr.energy == 0.0)
    tr = run_fast_km(T, np.ones(10), np.ones(10), p, 2000, z_star=np.zeros(10), energy_lambda=3.0)
    assert np.all(tr.energy >= 0.0)
    assert np.all(tr.gap >= -1e-12)
    E = tr.energy
    assert np.all(E[1:] <= E[:-1] + 1e-12 * np.maximum(1.0, E[:-1]))
