"""Empirical spectral estimators and goodness-of-fit distances."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .kernels import k_weak
from .params import weak_scaling


class EstimatorWarning(UserWarning):
    pass


class InsufficientDataError(ValueError):
    pass


def _as_draws(samples):
    """Samples as a 2D array, one row per draw (a 1D input is one draw)."""
    arr = np.asarray(samples, dtype=complex)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.size == 0:
        raise InsufficientDataError("need a non-empty set of spectra")
    return arr


@dataclass
class Histogram2D:
    x_edges: np.ndarray
    y_edges: np.ndarray
    counts: np.ndarray
    n_samples: int
    n_points: int
    n_out: int
    density: np.ndarray
    se: np.ndarray


def esd_hist(samples, x_edges, y_edges):
    """2D histogram of all eigenvalues; density is per eigenvalue per unit
    area, SEs come from the spread between draws."""
    draws = _as_draws(samples)
    x_edges = np.asarray(x_edges, dtype=float)
    y_edges = np.asarray(y_edges, dtype=float)
    if np.any(np.diff(x_edges) <= 0) or np.any(np.diff(y_edges) <= 0):
        raise ValueError("bin edges must be strictly increasing")
    area = np.outer(np.diff(x_edges), np.diff(y_edges))
    per = np.stack([np.histogram2d(d.real, d.imag, bins=(x_edges, y_edges))[0] for d in draws])
    counts = per.sum(axis=0).astype(np.int64)
    n_draws, n = draws.shape
    dens_per = per / (n * area)
    density = dens_per.mean(axis=0)
    se = dens_per.std(axis=0, ddof=1) / math.sqrt(n_draws) if n_draws > 1 else np.sqrt(counts) / (n * area)
    return Histogram2D(x_edges, y_edges, counts, n_draws, draws.size, int(draws.size - counts.sum()), density, se)


@dataclass
class Marginal1D:
    edges: np.ndarray
    counts: np.ndarray
    density: np.ndarray
    se: np.ndarray
    n_points: int
    n_out: int

    @property
    def centers(self):
        return 0.5 * (self.edges[1:] + self.edges[:-1])


def _marginal(values_per_draw, edges, normalizer):
    edges = np.asarray(edges, dtype=float)
    width = np.diff(edges)
    per = np.stack([np.histogram(v, bins=edges)[0] for v in values_per_draw])
    counts = per.sum(axis=0).astype(np.int64)
    total = sum(len(v) for v in values_per_draw)
    dens_per = per / width
    n_draws = len(values_per_draw)
    density = counts / (normalizer * width)
    if n_draws > 1:
        # ratio estimator SE over whole draws
        sizes = np.array([len(v) for v in values_per_draw], dtype=float)
        mean_size = normalizer / n_draws
        resid = dens_per - np.outer(sizes, density)
        se = resid.std(axis=0, ddof=1) / (mean_size * math.sqrt(n_draws))
    else:
        se = np.sqrt(counts) / (normalizer * width)
    return Marginal1D(edges, counts, density, se, int(total), int(total - counts.sum()))


def marginal_x(samples, edges):
    """Density of Re z, normalized per eigenvalue."""
    draws = _as_draws(samples)
    return _marginal([d.real for d in draws], edges, draws.size)


def off_axis_mass(samples, delta_band):
    """Fraction of eigenvalues with |Im z| > delta_band."""
    if delta_band <= 0:
        raise ValueError("delta_band must be positive")
    draws = _as_draws(samples)
    return float(np.mean(np.abs(draws.imag) > delta_band))


@dataclass
class LocalCorrelationEstimate:
    center: complex
    scale: float
    r_edges: np.ndarray
    g2: np.ndarray
    se: np.ndarray
    intensity: float
    n_window: int

    @property
    def r_mid(self):
        return 0.5 * (self.r_edges[1:] + self.r_edges[:-1])


def _pair_tables(draws, center, scale, r_edges, window):
    n_bins = len(r_edges) - 1
    pairs = np.zeros((len(draws), n_bins))
    in_win = np.zeros(len(draws))
    r_max = r_edges[-1]
    for i, d in enumerate(draws):
        w = (d - center) * scale
        first = np.abs(w) < window
        in_win[i] = first.sum()
        if not in_win[i]:
            continue
        near = np.abs(w) < window + r_max
        dist = np.abs(w[first][:, None] - w[near][None, :])
        dist = dist[dist > 0]
        pairs[i] = np.histogram(dist, bins=r_edges)[0]
    return pairs, in_win


def local_pair_correlation(samples, center, scale, r_edges, window=3.0, n_boot=200, seed=0, support_radius=None):
    """Normalized two-point function around ``center`` on the rescaled plane.

    Points are mapped to w = (z - center) * scale. Each point with |w| < window
    is paired with every other point of the same spectrum; the pair counts per
    separation bin are divided by (points in window) x (local intensity) x
    (annulus area). The intensity is the empirical density inside the window,
    so g2 -> 1 at large separation irrespective of the global density.
    SEs come from ``n_boot`` bootstrap resamples of whole spectra.
    """
    draws = _as_draws(samples)
    if support_radius is not None and abs(center) + (window + r_edges[-1]) / scale >= support_radius:
        warnings.warn(f"local window around {center} reaches beyond the spectral support", EstimatorWarning,
                      stacklevel=2)
    r_edges = np.asarray(r_edges, dtype=float)
    pairs, in_win = _pair_tables(draws, complex(center), float(scale), r_edges, window)
    if in_win.sum() == 0:
        raise InsufficientDataError("no points fall inside the local window")
    area = np.pi * np.diff(r_edges**2)
    win_area = np.pi * window**2

    def estimate(pw, nw, n_draws):
        total = nw.sum()
        rho = total / (n_draws * win_area)
        return pw.sum(axis=0) / (total * rho * area), rho

    g2, rho = estimate(pairs, in_win, len(draws))
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    boots = np.empty((n_boot, len(g2)))
    for b in range(n_boot):
        idx = rng.integers(0, len(draws), len(draws))
        boots[b] = estimate(pairs[idx], in_win[idx], len(draws))[0]
    se = boots.std(axis=0, ddof=1)
    return LocalCorrelationEstimate(complex(center), float(scale), r_edges, g2, se, float(rho), int(in_win.sum()))


def weak_profile(samples, x_center, alpha, c, y_edges, n, min_points=100):
    """Density of y = N nu(X) Im z over eigenvalues with |Re z - X| < 0.2/sqrt(C).

    Returns ``(marginal, reference)`` where reference is the bin average of
    the limiting profile K_weak(iy, iy), itself a probability density in y.
    """
    draws = _as_draws(samples)
    ws = weak_scaling(x_center, alpha, c)
    half = 0.2 / math.sqrt(c)
    ys = []
    for d in draws:
        sel = np.abs(d.real - x_center) < half
        ys.append(ws.local_scale(n) * d.imag[sel])
    total = sum(len(y) for y in ys)
    if total < min_points:
        raise InsufficientDataError(f"only {total} eigenvalues near X = {x_center}")
    marg = _marginal(ys, y_edges, total)
    return marg, weak_profile_reference(y_edges, alpha)


def weak_profile_reference(y_edges, alpha, nodes=16):
    """Bin averages of y -> K_weak(iy, iy) by Gauss-Legendre within each bin."""
    y_edges = np.asarray(y_edges, dtype=float)
    x, w = np.polynomial.legendre.leggauss(nodes)
    out = np.empty(len(y_edges) - 1)
    for i, (lo, hi) in enumerate(zip(y_edges[:-1], y_edges[1:])):
        ys = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        vals = np.real(k_weak(1j * ys, 1j * ys, alpha))
        out[i] = 0.5 * np.sum(w * vals)
    return out


def l1_distance(marginal: Marginal1D, reference_density):
    """sum |empirical - reference| * width plus the mass outside the bins."""
    width = np.diff(marginal.edges)
    inside = float(np.sum(np.abs(marginal.density - reference_density) * width))
    ref_out = max(0.0, 1.0 - float(np.sum(reference_density * width)))
    emp_out = marginal.n_out / marginal.n_points if marginal.n_points else 0.0
    return inside + abs(emp_out - ref_out)


@dataclass
class GofResult:
    ks: float
    l1: float
    chi2_p: float

    def as_dict(self):
        return {"ks": self.ks, "l1": self.l1, "chi2_p": self.chi2_p}


def _chi2_p(observed, expected):
    # merge sparse bins so every expected count is at least 5
    obs_m, exp_m, o, e = [], [], 0.0, 0.0
    for oi, ei in zip(observed, expected):
        o += oi
        e += ei
        if e >= 5:
            obs_m.append(o)
            exp_m.append(e)
            o = e = 0.0
    if e > 0 and exp_m:
        obs_m[-1] += o
        exp_m[-1] += e
    if len(exp_m) < 2:
        return float("nan")
    obs_m, exp_m = np.array(obs_m), np.array(exp_m)
    exp_m *= obs_m.sum() / exp_m.sum()
    return float(sps.chisquare(obs_m, exp_m).pvalue)


def gof(data, reference, edges=None):
    """Distances between data and a reference distribution.

    ``data`` is a 1D sample or a Marginal1D. ``reference`` is a CDF callable
    or a second 1D sample. ks is the Kolmogorov-Smirnov statistic (computed
    on bin edges for binned data), l1 the total-variation style sum of
    absolute bin-probability differences, chi2_p the Pearson chi-square
    p-value after merging bins with fewer than 5 expected counts.
    """
    if isinstance(data, Marginal1D):
        if data.n_points == 0:
            raise InsufficientDataError("empty marginal")
        edges = data.edges
        counts = data.counts.astype(float)
        n_total = data.n_points
    else:
        x = np.asarray(data, dtype=float).ravel()
        if x.size == 0:
            raise InsufficientDataError("empty sample")
        if edges is None:
            edges = np.linspace(x.min(), x.max(), 51) if x.max() > x.min() else np.array([x.min() - 0.5, x.min() + 0.5])
        counts = np.histogram(x, bins=edges)[0].astype(float)
        n_total = x.size
    edges = np.asarray(edges, dtype=float)
    if callable(reference):
        ref_cdf_edges = np.asarray(reference(edges), dtype=float)
        ref_prob = np.diff(ref_cdf_edges)
    else:
        ref = np.asarray(reference, dtype=float).ravel()
        if ref.size == 0:
            raise InsufficientDataError("empty reference sample")
        ref_cdf_edges = np.searchsorted(np.sort(ref), edges, side="right") / ref.size
        ref_prob = np.diff(ref_cdf_edges)
    if isinstance(data, Marginal1D):
        emp_cdf = np.concatenate([[0.0], np.cumsum(counts)]) / n_total
        ks = float(np.max(np.abs(emp_cdf - (ref_cdf_edges - ref_cdf_edges[0]))))
    elif callable(reference):
        ks = float(sps.kstest(x, reference).statistic)
    else:
        ks = float(sps.ks_2samp(x, ref).statistic)
    emp_prob = counts / n_total
    l1 = float(np.sum(np.abs(emp_prob - ref_prob)))
    chi2_p = _chi2_p(counts, ref_prob * n_total)
    return GofResult(ks, l1, chi2_p)


def interior_density_check(hist: Histogram2D, mask, target):
    """Per-bin relative deviation from ``target`` and the coefficient of
    variation over the bins selected by ``mask``."""
    dens = hist.density[mask]
    se = hist.se[mask]
    cv = float(dens.std(ddof=1) / dens.mean()) if dens.size > 1 else float("nan")
    rel = np.abs(dens - target) / target
    z = np.abs(dens - target) / np.where(se > 0, se, np.inf)
    return {"cv": cv, "max_rel_dev": float(rel.max()), "max_z": float(z.max()), "mean": float(dens.mean()),
            "bins": int(dens.size)}


def split_chain_z(values):
    """|mean(first half) - mean(second half)| in units of the combined SE."""
    v = np.asarray(values, dtype=float)
    h = len(v) // 2
    a, b = v[:h], v[h:2 * h]
    se = math.sqrt(a.var(ddof=1) / len(a) + b.var(ddof=1) / len(b))
    return abs(a.mean() - b.mean()) / se if se > 0 else 0.0



def effective_sample_size(values):
    """Geyer initial-positive-sequence ESS of a scalar chain."""
    v = np.asarray(values, dtype=float)
    n = len(v)
    if n < 4:
        raise InsufficientDataError("need at least 4 values")
    x = v - v.mean()
    var = float(np.dot(x, x)) / n
    if var == 0:
        return float(n)
    f = np.fft.rfft(x, 2 * n)
    acf = np.fft.irfft(f * np.conj(f))[:n] / (n * var)
    tau = -1.0
    for k in range(0, n - 1, 2):
        pair = acf[k] + acf[k + 1]
        if pair <= 0:
            break
        tau += 2.0 * pair
    return float(n / max(tau, 1.0 / n))
