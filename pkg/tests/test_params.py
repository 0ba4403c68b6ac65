import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize

from nonherm.params import (
    EdgeError,
    ModelParams,
    ParamError,
    c_weak,
    c_weak_ft,
    covariance_pab,
    derive,
    ellipse_strong,
    k_ft,
    k_residual,
    kbar,
    semicircle_cdf,
    semicircle_density,
    solve_k,
    weak_scaling,
)


def test_model_params_validation():
    for bad in (dict(tau=1.0), dict(tau=-1.0), dict(tau=0.1, gamma=-1), dict(tau=0.1, k_p=0),
                dict(tau=0.1, n=1), dict(tau=0.1, n=2.5), dict(tau=0.1, t=math.inf)):
        with pytest.raises(ParamError):
            ModelParams(**bad)


def test_solve_k_examples():
    assert solve_k(0.3, 0.0, 0.5) == 0.5
    for tau, gamma in ((0.0, 1.0), (0.7, 3.0), (-0.4, 0.2)):
        assert solve_k(tau, gamma, 1.0) == 0.0
    # bisection oracle for 4K^3 + 12K^2 + 7K + 1 = 0 with K > -1/2
    cubic = lambda k: 4 * k**3 + 12 * k**2 + 7 * k + 1
    oracle = optimize.bisect(cubic, -0.5 + 1e-12, 1.0, xtol=1e-15)
    assert abs(solve_k(0.0, 1.0, 2.0) - oracle) < 1e-12


@settings(max_examples=200, deadline=None)
@given(tau=st.floats(-0.99, 0.99), gamma=st.floats(0.0, 100.0), k_p=st.floats(0.05, 20.0))
def test_solve_k_residual(tau, gamma, k_p):
    k = solve_k(tau, gamma, k_p)
    assert abs(k_residual(k, tau, gamma, k_p)) <= 1e-12 * max(1.0, k_p)
    assert k > -1.0 / (2 * gamma * (1 + abs(tau))) if gamma > 0 else True
    d = derive(ModelParams(tau, gamma, k_p, 16))
    assert d.a_t.real > abs(d.b)


def test_kbar_examples():
    assert abs(kbar(1.0, 1.0)) < 1e-15
    assert abs(kbar(1.0, 2.0) - (-9 + math.sqrt(65)) / 8) < 1e-15
    assert abs(kbar(1.0, 2.0) + 0.117218) < 1e-6
    for gamma, k_p in ((1.0, 2.0), (0.3, 0.6), (5.0, 1.4)):
        assert abs(solve_k(1 - 1e-6, gamma, k_p) - kbar(gamma, k_p)) < 1e-5


def test_k_ft_examples():
    assert abs(k_ft(0.0, 1.0)) < 1e-15
    assert abs(k_ft(0.0, 2.0) + 0.25) < 1e-15
    for k_p in (0.5, 1.0, 3.0):
        assert abs(k_ft(1 - 1e-9, k_p) - (1 / k_p - 1) / 4) < 1e-7


@pytest.mark.parametrize("tau", [0.0, 0.5])
@pytest.mark.parametrize("k_p", [0.5, 1.0, 2.0])
def test_large_gamma_limit(tau, k_p):
    assert abs(1e4 * solve_k(tau, 1e4, k_p) - k_ft(tau, k_p)) <= 0.01


def test_c_weak_examples():
    assert c_weak(0.0, 0.7) == pytest.approx(1.0, abs=1e-15)
    assert c_weak(3.0, 1.0) == pytest.approx(1.0, abs=1e-14)
    assert abs(c_weak(1.0, 2.0) - (-3.5 + math.sqrt(65) / 2)) < 1e-14
    assert abs(c_weak(1.0, 2.0) - 0.531128) < 1e-6
    assert c_weak_ft(4.0) == 0.25


def test_c_weak_identity_grid():
    for gamma in np.linspace(0.0, 10.0, 20):
        for k_p in np.linspace(0.1, 5.0, 20):
            assert abs(c_weak(gamma, k_p) - (1 + 4 * gamma * kbar(gamma, k_p))) <= 1e-12


def test_ellipse_examples():
    e = ellipse_strong(0.0, 0.0)
    assert e.semi_axes == pytest.approx((1.0, 1.0)) and e.scale_c == 1.0
    e = ellipse_strong(0.5, 0.0)
    assert np.allclose(e.semi_axes, (1.5, 0.5), atol=1e-12)
    assert e.scale_c == pytest.approx(1 / 0.75, rel=1e-15)
    e = ellipse_strong(0.0, k_ft(0.0, 2.0))
    assert np.allclose(e.semi_axes, (math.sqrt(2), math.sqrt(2)), atol=1e-12)
    assert e.scale_c == pytest.approx(0.5)


@given(tau=st.floats(-0.95, 0.95))
def test_elliptic_law_recovered(tau):
    ax, ay = ellipse_strong(tau, 0.0).semi_axes
    assert abs(ax - (1 + tau)) <= 1e-12 and abs(ay - (1 - tau)) <= 1e-12


def test_ellipse_contains():
    e = ellipse_strong(0.5, 0.0)
    assert e.contains(1.49) and not e.contains(1.51) and e.contains(1.51, inflate=1.03)
    assert e.contains(0.49j) and not e.contains(0.51j)


def test_ellipse_rejects_bad_gamma_k():
    with pytest.raises(ParamError):
        ellipse_strong(0.5, -0.5)


def test_covariance_examples():
    n, tau = 10, 0.4
    c = covariance_pab(ModelParams(tau, 0.0, 1.3, n))
    assert c.var_diag_re == pytest.approx((1 + tau) / (2 * n))
    assert c.var_off == pytest.approx(1 / (2 * n))
    assert c.cov_real == pytest.approx(tau / (2 * n))
    c = covariance_pab(ModelParams(0.0, 0.0, 1.0, n))
    assert c.var_diag_re == c.var_diag_im == c.var_off == pytest.approx(1 / (2 * n)) and c.cov_real == 0


@settings(max_examples=100, deadline=None)
@given(tau=st.floats(-0.95, 0.95), gamma=st.floats(0, 50), k_p=st.floats(0.1, 10))
def test_covariance_positivity_and_mean(tau, gamma, k_p):
    p = ModelParams(tau, gamma, k_p, 32)
    c = covariance_pab(p)
    assert min(c.var_diag_re, c.var_diag_im, c.var_off, c.lambda_plus_sq, c.lambda_minus_sq) > 0
    assert abs(c.cov_real) < c.var_off
    # K_p + K = 2 N var_off, so the mean defect is O(1)
    k = solve_k(tau, gamma, k_p)
    assert abs(2 * p.n * c.var_off - (k_p + k)) <= 1e-12 * max(1.0, k_p)
    defect = c.mean_trace_jj - p.n * (k_p + k)
    assert abs(defect - (-2 * p.n * c.var_off + p.n * (c.var_diag_re + c.var_diag_im))) <= 1e-10
    assert abs(defect) <= 5


def test_weak_scaling_examples():
    ws = weak_scaling(0.0, 1.0, 1.0)
    assert ws.nu == pytest.approx(1 / math.pi)
    ws = weak_scaling(1.0, 2.0, 1.0)
    assert ws.nu == pytest.approx(math.sqrt(3) / (2 * math.pi))
    assert abs(ws.nu - 0.27566) < 1e-5
    assert ws.alpha_tilde / ws.alpha == pytest.approx(1.0 / ws.nu)
    ws = weak_scaling(0.3, 1.5, 0.531128)
    assert ws.alpha_tilde / ws.alpha == pytest.approx(0.531128 / ws.nu)
    assert ws.tau_n(200) == pytest.approx(1 - 1.5**2 / (400 * ws.nu**2))
    assert ws.local_scale(200) == pytest.approx(200 * ws.nu)


def test_weak_scaling_edge():
    with pytest.raises(EdgeError):
        weak_scaling(2.0, 1.0, 1.0)


def test_semicircle():
    x = np.linspace(-3, 3, 20001)
    dens = semicircle_density(x, 0.7)
    assert np.trapezoid(dens, x) == pytest.approx(1.0, abs=1e-4)
    assert semicircle_cdf(0.0, 0.7) == pytest.approx(0.5)
    assert semicircle_cdf(10.0) == 1.0 and semicircle_cdf(-10.0) == 0.0


def test_derive_fixed_trace():
    d = derive(ModelParams(0.0, 0.0, 2.0, 64), fixed_trace=True)
    assert d.gamma_k == pytest.approx(-0.25)
    assert d.c_weak == 0.5
    d = derive(ModelParams(0.5, 1.0, 2.0, 64, t=2.0))
    assert d.a_t.imag == -2.0
    assert d.b == pytest.approx(0.5 * 64 / 0.75)
