import math

import numpy as np
import pytest
from scipy import integrate

from nonherm import kernels
from nonherm.ensembles import sample_elliptic
from nonherm.kernels import (
    KernelContext,
    hubbard_stratonovich_check,
    k_strong,
    k_weak,
    k_weak_prop,
    kernel_contour,
    kernel_finite_n,
    kernel_matrix,
    orthonormal_values,
    rho_det,
    tabulate,
    weight_w,
)
from nonherm.params import ModelParams, c_weak, derive, weak_scaling
from nonherm.verify import bulk_pairs, weak_kernel_error


def ctx_for(tau, n, gamma=0.0, k_p=1.0, t=0.0):
    return KernelContext.from_derived(derive(ModelParams(tau, gamma, k_p, n, t)))


def grid(xlim, ylim, nx, ny):
    x = np.linspace(*xlim, nx)
    y = np.linspace(*ylim, ny)
    return x, y, x[None, :] + 1j * y[:, None]


def integrate_grid(vals, x, y):
    return np.trapezoid(np.trapezoid(vals, x, axis=1), y)


def random_points(count, seed, radius=0.8):
    rng = np.random.default_rng(seed)
    return radius * (rng.uniform(-1, 1, count) + 1j * rng.uniform(-1, 1, count))


def test_weight_examples():
    ctx = ctx_for(0.5, 10)
    logm, ph = weight_w(0.0, ctx)
    assert logm == 0.0 and ph == 1.0
    logm, ph = weight_w(0.7, ctx)
    assert ph == 1.0 and math.exp(logm) > 0
    z = 0.3 + 0.2j
    direct = np.exp(-ctx.a.real * abs(z) ** 2 + 0.5 * ctx.b * (z * z + np.conj(z) ** 2))
    assert math.exp(logm := weight_w(z, ctx)[0]) * weight_w(z, ctx)[1] == pytest.approx(direct, rel=1e-14)
    assert logm < 0


def test_context_validation():
    with pytest.raises(ValueError):
        KernelContext(1.0, 2.0, 5)
    with pytest.raises(ValueError):
        KernelContext(2.0, 1.0, 5, regime="weak_limit")
    with pytest.raises(ValueError):
        KernelContext(2.0, 1.0, 0)
    with pytest.raises(ValueError):
        ctx_for(0.5, 20, t=100.0)


@pytest.mark.parametrize("tau", [0.0, 0.5])
def test_hermitian_symmetry(tau):
    ctx = ctx_for(tau, 15)
    z1, z2 = random_points(20, 1), random_points(20, 2)
    assert np.allclose(kernel_finite_n(z1, z2, ctx), np.conj(kernel_finite_n(z2, z1, ctx)), rtol=0, atol=1e-10)


def test_normalization_integral():
    ctx = ctx_for(0.5, 10)
    x, y, z = grid((-3, 3), (-2, 2), 481, 321)
    total = integrate_grid(kernel_finite_n(z, z, ctx).real, x, y)
    assert abs(total / 10 - 1) <= 1e-4


def test_one_point_density_matches_elliptic_histogram():
    n, tau, draws = 50, 0.5, 2000
    ctx = ctx_for(tau, n)
    ev = np.concatenate([np.linalg.eigvals(sample_elliptic(n, tau, 7, i)) for i in range(draws)])
    xe, ye = np.linspace(-1.5, 1.5, 13), np.linspace(-0.5, 0.5, 5)
    counts, _, _ = np.histogram2d(ev.real, ev.imag, bins=[xe, ye])
    # expected counts: K(z, z) integrated over each bin by an 8x8 Gauss rule
    t, w = np.polynomial.legendre.leggauss(8)
    worst = 0.0
    for i in range(len(xe) - 1):
        for j in range(len(ye) - 1):
            hx, hy = (xe[i + 1] - xe[i]) / 2, (ye[j + 1] - ye[j]) / 2
            zx = (xe[i] + hx) + hx * t
            zy = (ye[j] + hy) + hy * t
            z = zx[:, None] + 1j * zy[None, :]
            mass = hx * hy * np.sum(w[:, None] * w[None, :] * kernel_finite_n(z, z, ctx).real)
            expected = draws * mass
            worst = max(worst, abs(counts[i, j] - expected) / math.sqrt(expected))
    assert worst <= 3.0


@pytest.mark.parametrize("t", [0.0, 3.0])
def test_contour_matches_finite_sum(t):
    ctx = ctx_for(0.5, 20, t=t)
    tol = 1e-6 if t == 0 else 1e-5
    # neighbouring bulk pairs; far-apart pairs cancel below the oracle's relative tolerance
    for z1, z2 in bulk_pairs(20, 0.5, 5, np.random.default_rng(11)):
        a = kernel_finite_n(z1, z2, ctx)
        c = kernel_contour(z1, z2, ctx)
        assert abs(a - c) <= tol * abs(c)


def test_single_term_kernel():
    d = derive(ModelParams(0.5, 0.0, 1.0, 2))
    ctx = KernelContext(d.a_t, d.b, 1)
    z1, z2 = 0.2 + 0.1j, -0.3 + 0.25j
    m1, s1 = orthonormal_values(z1, ctx.a, ctx.b, 1)
    m2, s2 = orthonormal_values(np.conj(z2), ctx.a, ctx.b, 1)
    closed = m1[0, 0] * m2[0, 0] * np.exp(s1[0] + s2[0])
    assert kernel_finite_n(z1, z2, ctx) == pytest.approx(closed, rel=1e-14)
    assert kernel_contour(z1, z2, ctx) == pytest.approx(closed, rel=1e-9)


def test_contour_guards():
    with pytest.raises(ValueError):
        kernel_contour(0.1, 0.1, ctx_for(0.0, 5))
    with pytest.raises(ValueError):
        kernel_contour(0.1, 0.1, ctx_for(0.5, 101))


def test_k_strong_examples():
    assert k_strong(0, 0) == pytest.approx(1 / math.pi, rel=1e-15)
    z1, z2 = random_points(10, 3, 2.0), random_points(10, 4, 2.0)
    lhs = np.abs(k_strong(z1, z2)) ** 2
    rhs = (k_strong(z1, z1) * k_strong(z2, z2)).real * np.exp(-np.abs(z1 - z2) ** 2)
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=0)
    g = rho_det([0, 1], k_strong).real / k_strong(0, 0).real ** 2
    assert g == pytest.approx(1 - math.exp(-1), abs=1e-12)
    assert abs(g - 0.63212) < 1e-5


def test_k_weak_origin_against_quadrature():
    ref, _ = integrate.quad(lambda u: math.exp(-u * u / 2), -math.pi, math.pi, epsabs=1e-14)
    ref *= math.sqrt(2) / math.sqrt(math.pi) / (2 * math.pi)
    assert abs(k_weak(0, 0, 1.0) - ref) <= 1e-10
    with pytest.raises(ValueError):
        k_weak(0, 0, 0.0)


def test_gaussian_fourier_matches_erf_form():
    for zeta in (0.0, 1.3 - 0.4j, -2.0 + 1.5j):
        for width in (0.3, 1.0, 5.0):
            a = kernels.gaussian_fourier(zeta, width, -math.pi, math.pi)
            b = kernels.gaussian_fourier_erf(zeta, width, -math.pi, math.pi)
            assert abs(a - b) <= 1e-10 * max(1.0, abs(b))


def test_k_weak_large_alpha_determinants():
    alpha = 50.0
    pts = random_points(6, 5, 1.5)
    for z1, z2 in zip(pts[:3], pts[3:]):
        def kw(u, v):
            return alpha**2 * k_weak(alpha * u, alpha * v, alpha)
        ref = rho_det([z1, z2], k_strong)
        assert abs(rho_det([z1, z2], kw) - ref) <= 1e-2 * abs(ref)


def test_k_weak_prop_interval_and_scale_relation():
    # X = 0, C = 1: interval [-1, 1] and alpha = alpha_tilde / pi
    z1, z2 = 0.4 + 0.3j, -0.2 + 0.1j
    val = k_weak_prop(0.0, z1, z2, 1.0, 1.0)
    re, _ = integrate.quad(lambda u: math.exp(-u * u / 2 - u * 0.4) * math.cos(0.6 * u), -1, 1, epsabs=1e-14)
    im, _ = integrate.quad(lambda u: math.exp(-u * u / 2 - u * 0.4) * math.sin(0.6 * u), -1, 1, epsabs=1e-14)
    direct = complex(re, im) * math.exp(-(0.09 + 0.01)) / (math.pi * math.sqrt(2 * math.pi))
    assert abs(val - direct) <= 1e-10 * abs(direct)
    s = 1 / math.pi
    assert val == pytest.approx(s**2 * k_weak(s * z1, s * z2, s), rel=1e-9)


def test_k_weak_prop_determinants_cancel_phase():
    c, x_global, at = c_weak(1.0, 2.0), 0.7, 1.3
    nu = weak_scaling(x_global, at, c).nu
    s = nu / c
    pts = random_points(8, 6, 1.0)
    for z1, z2 in zip(pts[:4], pts[4:]):
        prop = rho_det([z1, z2], lambda u, v: k_weak_prop(x_global, u, v, at, c))
        weak = rho_det([z1, z2], lambda u, v: s**2 * k_weak(s * u, s * v, at * s))
        assert abs(prop - weak) <= 1e-8 * max(1.0, abs(weak))


def test_k_weak_prop_symmetry_and_edge():
    pts = random_points(8, 8, 1.0)
    for z1, z2 in zip(pts[:4], pts[4:]):
        a = k_weak_prop(0.3, z1, z2, 1.0, 0.8)
        b = k_weak_prop(0.3, z2, z1, 1.0, 0.8)
        assert abs(a - np.conj(b)) <= 1e-10
    with pytest.raises(ValueError):
        k_weak_prop(2.0, 0, 0, 1.0, 1.0)


def test_rho_det_examples():
    ctx = ctx_for(0.5, 8)
    kern = lambda u, v: kernel_finite_n(u, v, ctx)
    z = 0.1 + 0.2j
    assert rho_det([z], kern) == pytest.approx(kern(z, z), rel=1e-14)
    assert abs(rho_det([z, z], kern)) <= 1e-12
    assert rho_det([0, 1], k_strong) == pytest.approx((1 - math.exp(-1)) / math.pi**2, rel=1e-12)
    with pytest.raises(ValueError):
        rho_det(np.zeros(9), k_strong)


@pytest.mark.parametrize("x,gamma,tol", [(0.0, 1.0, 1e-12), (2.0, 1.0, 1e-10), (10.0, 0.25, 1e-8)])
def test_hubbard_stratonovich(x, gamma, tol):
    assert hubbard_stratonovich_check(x, gamma) <= tol


def test_planar_orthonormality():
    a, b = 3.0, 1.0
    x, y, z = grid((-4, 4), (-3, 3), 641, 481)
    mant, scale = orthonormal_values(z.ravel(), a, b, 9)
    p = mant * np.exp(scale)[None, :]
    # p_j(z) sqrt(W) is paired with its value at conj(z): p_l(z) p_k(conj z) W(z)
    mantc, scalec = orthonormal_values(np.conj(z.ravel()), a, b, 9)
    pc = mantc * np.exp(scalec)[None, :]
    gram = np.array([[integrate_grid((p[l] * pc[k]).reshape(z.shape), x, y) for k in range(9)] for l in range(9)])
    assert np.max(np.abs(gram - np.eye(9))) <= 1e-6


def test_projection_property():
    ctx = ctx_for(0.5, 6)
    x, y, z = grid((-3, 3), (-2, 2), 361, 241)
    flat = z.ravel()
    for z1, z2 in ((0.1 + 0.1j, -0.3 + 0.2j), (0.5, 0.2j)):
        lhs = integrate_grid((kernel_finite_n(z1, flat, ctx) * kernel_finite_n(flat, z2, ctx)).reshape(z.shape), x, y)
        ref = kernel_finite_n(z1, z2, ctx)
        assert abs(lhs - ref) <= 1e-4 * abs(ref)


@pytest.mark.parametrize("n,tol", [(200, 0.05), (800, 0.025)])
def test_strong_diagonal_limit(n, tol):
    tau = 0.5
    ctx = ctx_for(tau, n)
    c = 1 / (1 - tau * tau)
    z = np.array([0.0, 0.3 + 0.1j, -0.6 + 0.2j])
    dens = kernel_finite_n(z, z, ctx).real / (c * n)
    assert np.max(np.abs(dens * math.pi - 1)) <= tol


def test_weak_kernel_convergence_rate():
    for n in (200, 800):
        assert weak_kernel_error(n) <= 10 * math.log(n) / math.sqrt(n)


def test_monomial_branch_matches_small_b():
    z1, z2 = random_points(6, 9), random_points(6, 10)
    k0 = kernel_finite_n(z1, z2, KernelContext(2.0, 0.0, 12))
    k1 = kernel_finite_n(z1, z2, KernelContext(2.0, 1e-7, 12))
    assert np.allclose(k0, k1, rtol=1e-5, atol=1e-9)
    assert np.allclose(kernel_matrix(z1, KernelContext(2.0, 0.0, 12)),
                       kernel_finite_n(z1[:, None], z1[None, :], KernelContext(2.0, 0.0, 12)))


def test_large_degree_stays_finite():
    ctx = ctx_for(0.5, 2000)
    val, log_scale = kernel_finite_n(np.array([0.5 + 0.2j]), np.array([0.5 + 0.2j]), ctx, return_log_scale=True)
    assert np.isfinite(val).all() and np.isfinite(log_scale).all()
    assert val.real[0] > 0


def test_tabulate_regimes():
    z = np.array([0.1 + 0.1j, -0.2j])
    ctx = ctx_for(0.5, 10)
    prof = tabulate(z, z, "finite_n_sum", ctx)
    assert prof.provenance == "finite_n_sum" and len(list(prof.rows())) == 2
    assert np.allclose(tabulate(z, z, "strong_limit").values, k_strong(z, z))
    assert np.allclose(tabulate(z, z, "weak_limit", alpha=1.0).values, k_weak(z, z, 1.0))
    with pytest.raises(ValueError):
        tabulate(z, z, "finite_n_sum")
    with pytest.raises(ValueError):
        tabulate(z, z, "edge")
