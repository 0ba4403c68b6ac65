import math
import warnings

import numpy as np
import pytest

from nonherm.ensembles import (
    ChainConfig,
    SamplerWarning,
    coulomb_log_density,
    expected_trace_jj,
    mcmc_coulomb,
    mcmc_ft_elliptic,
    mcmc_trace_squared,
    sample_elliptic,
    sample_ft_ginibre,
    sample_gue,
    sample_pab,
    sample_spectra,
)
from nonherm.params import ModelParams, covariance_pab, solve_k
from nonherm.stats import split_chain_z

SEED = 12345


def mean_se(x):
    x = np.asarray(x, dtype=float)
    return x.mean(axis=0), x.std(axis=0, ddof=1) / math.sqrt(len(x))


def entry_stats(j):
    """Eight second-moment statistics of one matrix, averaged over entries."""
    n = j.shape[0]
    iu = np.triu_indices(n, 1)
    d, u, v = np.diag(j), j[iu], j.T[iu]
    return np.array([
        np.mean(d.real**2), np.mean(d.imag**2),
        np.mean(u.real**2 + v.real**2) / 2, np.mean(u.imag**2 + v.imag**2) / 2,
        np.mean(u.real * v.real), np.mean(u.imag * v.imag),
        np.mean(d.real * d.imag), np.mean(u.real * v.imag),
    ])


def test_gue_examples():
    j = sample_gue(16, SEED)
    assert np.array_equal(j, j.conj().T)
    x = np.array([sample_gue(8, SEED, i)[0, 0].real for i in range(100_000)])
    m, se = mean_se(x**2)
    assert abs(m - 1 / 16) <= 5 * se
    ev = np.concatenate([np.linalg.eigvalsh(sample_gue(256, SEED, i)) for i in range(100)])
    assert np.all(np.abs(ev) <= math.sqrt(2) * 1.05)


def test_elliptic_covariances():
    pairs = np.array([(lambda j: (j[0, 1].real, j[1, 0].real))(sample_elliptic(16, 0.0, SEED, i))
                      for i in range(20_000)])
    m, se = mean_se(pairs[:, 0] * pairs[:, 1])
    assert abs(m) <= 5 * se
    pairs = np.array([(lambda j: (j[0, 1].real, j[1, 0].real))(sample_elliptic(16, 0.5, SEED, i))
                      for i in range(100_000)])
    m, se = mean_se(pairs[:, 0] * pairs[:, 1])
    assert abs(m - 0.5 / 32) <= 5 * se


def test_pab_reduces_to_elliptic():
    p = ModelParams(0.5, 0.0, 1.7, 8)
    a = np.array([entry_stats(sample_pab(p, SEED, i)) for i in range(100_000)])
    b = np.array([entry_stats(sample_elliptic(8, 0.5, SEED + 1, i)) for i in range(100_000)])
    (ma, sa), (mb, sb) = mean_se(a), mean_se(b)
    assert np.all(np.abs(ma - mb) <= 5 * np.hypot(sa, sb))


@pytest.mark.parametrize("tau,gamma,k_p", [(0.5, 1.0, 2.0), (-0.3, 0.5, 0.7)])
def test_pab_entry_covariances(tau, gamma, k_p):
    p = ModelParams(tau, gamma, k_p, 8)
    c = covariance_pab(p)
    s = np.array([entry_stats(sample_pab(p, SEED, i))[:6] for i in range(100_000)])
    m, se = mean_se(s)
    want = np.array([c.var_diag_re, c.var_diag_im, c.var_off, c.var_off, c.cov_real, -c.cov_real])
    assert np.all(np.abs(m - want) <= 5 * se)


def test_pab_trace_moments():
    p = ModelParams(0.5, 1.0, 2.0, 64)
    c = covariance_pab(p)
    tr = np.array([np.vdot(j, j).real for j in (sample_pab(p, SEED, i) for i in range(10_000))])
    m, se = mean_se(tr)
    assert abs(m - c.mean_trace_jj) <= 5 * se
    # variance of the chi-squared decomposition, with the SE of a sample variance
    dev = (tr - m) ** 2
    v, v_se = mean_se(dev)
    assert abs(v - c.var_trace_jj) <= 5 * v_se


def test_pab_mean_defect():
    for n in (64, 128, 256):
        p = ModelParams(0.5, 1.0, 2.0, n)
        tr = [np.vdot(j, j).real for j in (sample_pab(p, SEED, i) for i in range(500))]
        assert abs(np.mean(tr) - n * (p.k_p + solve_k(p.tau, p.gamma, p.k_p))) <= 5


def test_ft_ginibre():
    j = sample_ft_ginibre(32, 2.0, SEED)
    assert abs(np.vdot(j, j).real - 64) <= 1e-12 * 64
    x = np.array([abs(sample_ft_ginibre(8, 2.0, SEED, i)[0, 0]) ** 2 for i in range(100_000)])
    m, se = mean_se(x)
    assert abs(m - 2.0 / 8) <= 5 * se


@pytest.mark.parametrize("method", ["rwm", "geodesic"])
def test_ft_elliptic_walk_at_tau_zero_always_accepts(method):
    p = ModelParams(0.0, 0.0, 1.5, 6)
    gen, st = mcmc_ft_elliptic(p, SEED, 200, ChainConfig(step_size=0.3, burn_in=100, method=method))
    for j in gen:
        assert abs(np.vdot(j, j).real - 9.0) <= 1e-10 * 9.0
    assert st.accept_rate == 1.0


@pytest.mark.parametrize("method", ["radial", "rwm", "geodesic"])
def test_ft_elliptic_stays_on_sphere(method):
    p = ModelParams(0.5, 0.0, 2.0, 8)
    gen, _ = mcmc_ft_elliptic(p, SEED, 300, ChainConfig(burn_in=200, method=method))
    for j in gen:
        assert abs(np.vdot(j, j).real - 16.0) <= 1e-10 * 16.0


def test_ft_elliptic_tilt_is_monotone():
    vals = {}
    for tau in (0.0, 0.5):
        gen, _ = mcmc_ft_elliptic(ModelParams(tau, 0.0, 1.0, 32), SEED, 10_000, ChainConfig(thin=2))
        vals[tau] = mean_se([np.sum(j * j).real for j in gen])
    (m0, s0), (m1, s1) = vals[0.0], vals[0.5]
    assert m1 - m0 >= 5 * math.hypot(s0, s1)


def test_ft_elliptic_methods_agree():
    # the radial kernel and the plain random walk target the same law
    p = ModelParams(0.6, 0.0, 1.0, 3)
    out = {}
    for method, thin in (("radial", 1), ("rwm", 20)):
        gen, _ = mcmc_ft_elliptic(p, SEED, 5000, ChainConfig(step_size=0.3, burn_in=2000, thin=thin, method=method))
        out[method] = np.array([np.sum(j * j).real for j in gen])
    (ma, sa), (mb, sb) = mean_se(out["radial"]), mean_se(out["rwm"])
    # random-walk output is autocorrelated even after thinning, so allow 6 SE
    assert abs(ma - mb) <= 6 * math.hypot(sa, sb)


def test_trace_squared_reduces_to_elliptic():
    p = ModelParams(0.5, 0.0, 2.0, 8)
    gen, _ = mcmc_trace_squared(p, SEED, 20_000)
    a = np.array([entry_stats(j) for j in gen])
    b = np.array([entry_stats(sample_elliptic(8, 0.5, SEED, i)) for i in range(20_000)])
    (ma, sa), (mb, sb) = mean_se(a), mean_se(b)
    assert np.all(np.abs(ma - mb) <= 5 * np.hypot(sa, sb))


def test_trace_squared_mean_trace():
    p = ModelParams(0.5, 1.0, 2.0, 64)
    gen, st = mcmc_trace_squared(p, SEED, 2000)
    tr = np.array([np.vdot(j, j).real for j in gen])
    assert abs(tr.mean() / 64 / (2.0 + solve_k(0.5, 1.0, 2.0)) - 1) <= 0.02
    assert split_chain_z(tr) <= 3.0
    assert 0.05 <= st.accept_rate <= 0.95
    assert expected_trace_jj(p) == pytest.approx(64 * (2.0 + solve_k(0.5, 1.0, 2.0)))


def test_trace_squared_confinement():
    sds = {}
    for gamma in (1.0, 1e3):
        gen, _ = mcmc_trace_squared(ModelParams(0.3, gamma, 1.5, 32), SEED, 4000)
        sds[gamma] = np.std([np.vdot(j, j).real for j in gen])
    assert sds[1.0] >= 5 * sds[1e3]


def test_trace_squared_methods_agree():
    p = ModelParams(0.4, 1.0, 2.0, 3)
    out = {}
    for method, thin in (("radial", 1), ("rwm", 20)):
        gen, _ = mcmc_trace_squared(p, SEED, 5000, ChainConfig(step_size=0.3, burn_in=2000, thin=thin, method=method))
        out[method] = np.array([np.vdot(j, j).real for j in gen])
    (ma, sa), (mb, sb) = mean_se(out["radial"]), mean_se(out["rwm"])
    assert abs(ma - mb) <= 6 * math.hypot(sa, sb)


def test_acceptance_warning():
    p = ModelParams(0.5, 1.0, 2.0, 6)
    with pytest.warns(SamplerWarning):
        gen, _ = mcmc_trace_squared(p, SEED, 200, ChainConfig(step_size=50.0, burn_in=0, method="rwm"))
        list(gen)


def test_coulomb_examples():
    gen, _ = mcmc_coulomb(ModelParams(0.0, 0.0, 1.0, 5), SEED, 2000)
    for z in gen:
        d = np.abs(z[:, None] - z[None, :])[np.triu_indices(5, 1)]
        assert d.min() > 0
    gen, _ = mcmc_coulomb(ModelParams(0.2, 100.0, 1.0, 16), SEED, 3000)
    s = np.mean([np.sum(np.abs(z) ** 2) for z in gen])
    assert abs(s / 16 - 1) <= 0.05


def test_coulomb_log_density():
    p = ModelParams(0.0, 0.0, 1.0, 2)
    z = np.array([0.3 + 0.1j, -0.2 + 0.4j])
    want = 2 * math.log(abs(z[0] - z[1])) - 2 * np.sum(np.abs(z) ** 2)
    assert coulomb_log_density(z, p) == pytest.approx(want)
    assert coulomb_log_density(np.array([0.1, 0.1]), p) == -math.inf


@pytest.mark.parametrize("tag,chains", [("elliptic", 1), ("ft_ginibre", 1), ("trace_squared", 3),
                                        ("ft_elliptic", 3), ("coulomb", 3)])
def test_reproducible_across_threads(tag, chains):
    p = ModelParams(0.3, 1.0, 1.5, 12)
    cfg = ChainConfig(burn_in=50)
    a = sample_spectra(tag, p, SEED, 9, chain=cfg, chains=chains, threads=1)
    b = sample_spectra(tag, p, SEED, 9, chain=cfg, chains=chains, threads=3)
    assert np.array_equal(a.eigenvalues, b.eigenvalues)
    assert np.array_equal(a.trace_jj, b.trace_jj)
    c = sample_spectra(tag, p, SEED + 1, 9, chain=cfg, chains=chains)
    assert not np.array_equal(a.eigenvalues, c.eigenvalues)


def test_fixed_trace_run_metadata():
    run = sample_spectra("ft_ginibre", ModelParams(0.0, 0.0, 2.0, 16), SEED, 5)
    assert np.all(np.abs(run.trace_jj - 32.0) <= 1e-10 * 32)
    s = run.samples()
    assert len(s) == 5 and s[0].ensemble_tag == "ft_ginibre" and len(s[0].eigenvalues) == 16


def test_sample_spectra_rejects_unknown_tag():
    with pytest.raises(ValueError):
        sample_spectra("wishart", ModelParams(0.0), SEED, 1)
    with pytest.raises(ValueError):
        ChainConfig(method="hmc")


def test_no_warning_for_radial_default():
    with warnings.catch_warnings():
        warnings.simplefilter("error", SamplerWarning)
        gen, _ = mcmc_trace_squared(ModelParams(0.5, 1.0, 2.0, 8), SEED, 50)
        list(gen)
