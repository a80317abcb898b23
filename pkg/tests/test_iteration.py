import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fastkm.exceptions import ParameterError, ParameterWarning, ShapeError
from fastkm.iteration import (
    HalpernForm,
    ScheduleParams,
    TranDinhParams,
    cooling_alpha,
    effective_weights,
    fast_km_step,
    km_reference,
    run_anchored_halpern,
    run_fast_km,
    run_km,
    schedule_coeffs,
    theta_from_eta,
    trandinh_map,
)
from fastkm.operators import skew_resolvent_op


@pytest.fixture
def skew():
    return skew_resolvent_op(10, 0.1)


def test_theta_from_eta_endpoints():
    assert theta_from_eta(0.0, 4.0) == 1.0
    assert theta_from_eta(1.0, 4.0) == 3.0
    assert theta_from_eta(0.5, 4.0) == 2.0
    for eta in np.linspace(0, 1, 11):
        assert theta_from_eta(eta, 2.0) == 1.0


def test_schedule_coeffs_example():
    p = ScheduleParams(alpha=4.0, sigma=4.0, eta=0.5)
    th, ak, tk = schedule_coeffs(0, p)
    assert (th, ak, tk) == (0.5, 0.0, 3.0)
    th, ak, _ = schedule_coeffs(6, p)
    assert th == pytest.approx(0.2) and ak == pytest.approx(0.6)


def test_negative_momentum_is_not_clamped():
    p = ScheduleParams(alpha=16.0, sigma=2.0, eta=0.5)
    assert schedule_coeffs(0, p)[1] == pytest.approx(-7.0)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(alpha=1.5, sigma=1.0, eta=0.5),
        dict(alpha=4.0, sigma=0.0, eta=0.5),
        dict(alpha=4.0, sigma=4.0, eta=0.5, s=2.5),
        dict(alpha=4.0, sigma=4.0),
        dict(alpha=4.0, sigma=4.0, theta=-1.0),
        dict(alpha=4.0, sigma=4.0, eta=0.5, theta=1.5),
        dict(alpha=4.0, sigma=4.0, eta=0.5, cooling="linear"),
    ],
)
def test_schedule_params_rejects(kwargs):
    with pytest.raises(ParameterError):
        ScheduleParams(**kwargs)


def test_schedule_params_warns_outside_interval():
    with pytest.warns(ParameterWarning):
        ScheduleParams(alpha=4.0, sigma=4.0, theta=3.5)
    with pytest.warns(ParameterWarning):
        ScheduleParams(alpha=4.0, sigma=4.0, theta=3.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error", ParameterWarning)
        ScheduleParams(alpha=2.0, sigma=1.0, eta=0.5)
        ScheduleParams(alpha=4.0, sigma=4.0, eta=0.5)


def test_cooling_schedule_reaches_alpha_max_at_half_budget():
    p = ScheduleParams(alpha=4.0, sigma=4.0, eta=0.5, cooling="linear", maxit=2000)
    assert p.alpha_max == 400.0
    assert p.alpha_at(0) == 4.0
    assert p.alpha_at(500) == pytest.approx(202.0)
    assert all(p.alpha_at(k) == 400.0 for k in (1000, 1500, 1999))
    assert p.theta_at(1000) == pytest.approx(1.0 + 0.5 * 398.0)
    assert cooling_alpha(0, 4.0, 400.0, 2000, "log") == 4.0
    assert cooling_alpha(1000, 4.0, 400.0, 2000, "log") == 400.0


def test_fast_km_step_keeps_fixed_point():
    z = np.array([1.0, -2.0])
    assert np.array_equal(fast_km_step(z, z, z, 0.3, 0.7), z)


def test_run_fast_km_counts_operator_evaluations(skew):
    p = ScheduleParams(alpha=4.0, sigma=4.0, eta=0.5)
    tr = run_fast_km(skew, np.ones(10), np.ones(10), p, 50)
    assert tr.metadata["T_evaluations"] == 51
    assert len(tr) == 50
    assert list(tr.k) == list(range(50))
    assert 50 in tr.snapshots


def test_run_fast_km_zero_budget(skew):
    p = ScheduleParams(alpha=4.0, sigma=4.0, eta=0.5)
    tr = run_fast_km(skew, np.ones(10), np.ones(10), p, 0)
    assert len(tr) == 0
    assert np.array_equal(tr.x_final, np.ones(10))
    assert tr.to_csv() == "k,residual,residual_times_k,gap,energy,variance\n"


def test_run_fast_km_started_at_fixed_point_stays_put(skew):
    p = ScheduleParams(alpha=4.0, sigma=4.0, eta=0.5)
    tr = run_fast_km(skew, np.zeros(10), np.zeros(10), p, 20)
    assert np.array_equal(tr.x_final, np.zeros(10))
    assert np.all(tr.residual == 0.0)


def test_run_fast_km_shape_mismatch(skew):
    p = ScheduleParams(alpha=4.0, sigma=4.0, eta=0.5)
    with pytest.raises(ShapeError):
        run_fast_km(skew, np.ones(8), np.ones(10), p, 5)


def test_energy_requires_fixed_point_and_eta(skew):
    p = ScheduleParams(alpha=4.0, sigma=4.0, theta=2.0)
    with pytest.raises(ParameterError):
        run_fast_km(skew, np.ones(10), np.ones(10), p, 5, z_star=np.zeros(10), energy_lambda=3.0)


def test_relaxed_operator_matches_effective_weights(rng):
    A = rng.standard_normal((6, 6))
    A /= np.linalg.norm(A, 2)
    p = ScheduleParams(alpha=3.0, sigma=3.0, eta=0.5, s=0.5)
    x_m1, x0 = rng.standard_normal(6), rng.standard_normal(6)
    tr = run_fast_km(lambda x: A @ x, x_m1, x0, p, 30, snapshot_every=1)
    for k in range(1, 30):
        xk, xkm = tr.iterate(k), tr.iterate(k - 1)
        w1, w2, w3, w4 = effective_weights(k, p)
        pred = w1 * xk + w2 * (xk - xkm) + w3 * (A @ xk) + w4 * (A @ xk - A @ xkm)
        assert np.allclose(tr.iterate(k + 1), pred, rtol=0, atol=1e-13)


def test_alpha_two_traces_do_not_depend_on_eta(skew):
    traces = [
        run_fast_km(skew, np.ones(10), np.ones(10), ScheduleParams(alpha=2.0, sigma=2.0, eta=e), 300).to_csv()
        for e in (0.1, 0.5, 0.9)
    ]
    assert traces[0] == traces[1] == traces[2]


def test_run_km_converges_on_skew(skew):
    tr = run_km(skew, np.ones(10), 0.5, 2000, z_star=np.zeros(10))
    assert tr.residual[-1] < 1e-3
    with pytest.raises(ParameterError):
        run_km(skew, np.ones(10), 1.0, 5)


def test_run_km_tolerance_stops_early(skew):
    tr = run_km(skew, np.ones(10), 0.5, 10**5, tol=1e-6)
    assert "stopped_early" in tr.metadata
    assert tr.residual[-1] <= 1e-6


def test_km_reference_hits_exact_fixed_point():
    x, used = km_reference(lambda x: 0.5 * x, np.ones(3), n=10**4)
    assert np.max(np.abs(x)) < 1e-300
    assert used < 10**4
    assert np.array_equal(x + 0.5 * (0.5 * x - x), x)


def test_halpern_anchor_equivalence_small(skew):
    x_m1, x0 = np.ones(10), np.ones(10)
    p = ScheduleParams(alpha=3.0, sigma=2.0, theta=1.0)
    fast = run_fast_km(skew, x_m1, x0, p, 100, snapshot_every=1)
    h = HalpernForm.from_initial(skew, x_m1, x0, 3.0, 2.0)
    anch = run_anchored_halpern(skew, h, x0, 100, snapshot_every=1)
    for k in range(101):
        assert np.max(np.abs(fast.iterate(k) - anch.iterate(k))) <= 1e-12


def test_trandinh_mapping_parameters():
    p, T = trandinh_map(TranDinhParams(omega=2.0))
    assert (p.alpha, p.theta, p.sigma) == (5.0, 2.0, 6.0)
    assert T is None
    with pytest.raises(ParameterError):
        TranDinhParams(omega=0.25)
    with pytest.raises(ParameterError):
        TranDinhParams(omega=1.0, gamma_bar=2.5)


@settings(max_examples=30, deadline=None)
@given(st.floats(2.0, 40.0), st.floats(0.5, 40.0), st.floats(0.01, 0.99), st.integers(0, 500))
def test_coefficients_follow_closed_forms(alpha, sigma, eta, k):
    p = ScheduleParams(alpha=alpha, sigma=sigma, eta=eta)
    th, ak, tk = schedule_coeffs(k, p)
    assert th == pytest.approx((1.0 + eta * (alpha - 2.0)) / (k + sigma), rel=1e-15)
    assert ak == pytest.approx(1.0 - alpha / (k + sigma), rel=1e-12, abs=1e-15)
    assert tk == k - 1 + sigma
