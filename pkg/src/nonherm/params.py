"""Scalar model constants: recentering constant K and its limits, the
linearized Gaussian scalars a(t), b, the entry covariances of that Gaussian,
the limiting-support ellipse and the weak-regime scalings.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

BRACKET_EPS = 1e-9


class ParamError(ValueError):
    pass


class EdgeError(ParamError):
    """Requested point lies on or beyond the edge of the semicircle support."""


@dataclass(frozen=True)
class ModelParams:
    tau: float
    gamma: float = 0.0
    k_p: float = 1.0
    n: int = 2
    t: float = 0.0

    def __post_init__(self):
        if not -1.0 < self.tau < 1.0:
            raise ParamError(f"tau must lie in (-1, 1), got {self.tau}")
        if not self.gamma >= 0.0:
            raise ParamError(f"gamma must be >= 0, got {self.gamma}")
        if not self.k_p > 0.0:
            raise ParamError(f"k_p must be > 0, got {self.k_p}")
        if int(self.n) != self.n or self.n < 2:
            raise ParamError(f"n must be an integer >= 2, got {self.n}")
        if not math.isfinite(self.t):
            raise ParamError("t must be finite")


def _k_residual(k, tau, gamma, k_p):
    s = 1.0 - tau * tau
    # factored form of 1 + 4gK + 4g^2K^2(1-t^2); no cancellation near the pole
    den = (1.0 + 2.0 * gamma * k * (1.0 + tau)) * (1.0 + 2.0 * gamma * k * (1.0 - tau))
    return k_p + k - (1.0 + 2.0 * gamma * k * s) / den


def k_residual(k, tau, gamma, k_p):
    """K_p + K - (1 + 2 g K (1-t^2)) / (1 + 4 g K + 4 g^2 K^2 (1-t^2))."""
    return _k_residual(k, tau, gamma, k_p)


def solve_k(tau, gamma, k_p):
    """Recentering constant K: the rightmost real root of the cubic

        4g^2(1-t^2)K^3 + 4g(1 + g(1-t^2)K_p)K^2 + (1 + 4gK_p - 2g(1-t^2))K + K_p - 1 = 0

    on the branch K > max(-1/(2g(1-t)), -1/(2g(1+t))). The residual function
    is increasing on that half-line, so a bracketed root finder picks the
    right branch without case analysis.
    """
    if not -1.0 < tau < 1.0 or gamma < 0 or k_p <= 0:
        raise ParamError(f"invalid (tau, gamma, k_p) = ({tau}, {gamma}, {k_p})")
    if gamma == 0:
        return 1.0 - k_p
    if k_p == 1.0:
        return 0.0
    with np.errstate(over="ignore", divide="ignore"):
        pole = -1.0 / (2.0 * np.float64(gamma) * (1.0 + abs(tau)))
    hi = max(1.0 - k_p, 0.0) + 1.0
    # walk down from the gamma = 0 root; fall back to the pole only if needed
    lo = min(1.0 - k_p, 0.0) - 1.0
    while lo > pole and _k_residual(lo, tau, gamma, k_p) > 0:
        lo *= 2.0
    if not lo > pole:
        eps = BRACKET_EPS * abs(pole)
        lo = pole + eps
        while _k_residual(lo, tau, gamma, k_p) > 0:
            eps *= 0.01
            lo = pole + eps
    k = optimize.brentq(_k_residual, lo, hi, args=(tau, gamma, k_p), xtol=1e-300, rtol=8.9e-16, maxiter=500)
    # one Newton polish step; brentq already brackets to ~1 ulp
    h = 1e-7 * max(abs(k), 1e-12)
    d = (_k_residual(k + h, tau, gamma, k_p) - _k_residual(k - h, tau, gamma, k_p)) / (2 * h)
    k_new = k - _k_residual(k, tau, gamma, k_p) / d
    if k_new > pole and abs(_k_residual(k_new, tau, gamma, k_p)) < abs(_k_residual(k, tau, gamma, k_p)):
        k = k_new
    return float(k)


def kbar(gamma, k_p):
    """Limit of K as tau -> 1; at gamma = 0 the continuous extension 1 - K_p."""
    if gamma < 0 or k_p <= 0:
        raise ParamError(f"invalid (gamma, k_p) = ({gamma}, {k_p})")
    if gamma == 0:
        return 1.0 - k_p
    root = math.sqrt(16 * gamma**2 * k_p**2 - 8 * gamma * k_p + 16 * gamma + 1)
    return -k_p / 2 - 1 / (8 * gamma) + root / (8 * gamma)


def k_ft(tau, k_p):
    """lim gamma*K as gamma -> infinity: rightmost root of
    4(1-t^2)K_p x^2 + (4K_p - 2(1-t^2)) x + K_p - 1."""
    if not -1.0 < tau < 1.0 or k_p <= 0:
        raise ParamError(f"invalid (tau, k_p) = ({tau}, {k_p})")
    s = 1.0 - tau * tau
    qa = 4.0 * s * k_p
    qb = 4.0 * k_p - 2.0 * s
    qc = k_p - 1.0
    disc = math.sqrt(qb * qb - 4 * qa * qc)
    # larger root, written to avoid cancellation
    if qb >= 0:
        return (2 * qc) / (-qb - disc)
    return (-qb + disc) / (2 * qa)


def c_weak(gamma, k_p):
    """Weak-regime constant C = 1/2 - 2 g K_p + sqrt(16g^2K_p^2 - 8gK_p + 16g + 1)/2."""
    if gamma < 0 or k_p <= 0:
        raise ParamError(f"invalid (gamma, k_p) = ({gamma}, {k_p})")
    root = math.sqrt(16 * gamma**2 * k_p**2 - 8 * gamma * k_p + 16 * gamma + 1)
    return 0.5 - 2 * gamma * k_p + 0.5 * root


def c_weak_ft(k_p):
    """Weak-regime constant of the fixed-trace ensembles, 1/K_p."""
    if k_p <= 0:
        raise ParamError(f"k_p must be > 0, got {k_p}")
    return 1.0 / k_p


@dataclass(frozen=True)
class Ellipse:
    """Set {q_re x^2 + q_im y^2 < bound}; density inside is scale_c / pi."""

    q_re: float
    q_im: float
    bound: float
    scale_c: float
    degenerate: bool = False

    @property
    def semi_axes(self):
        return math.sqrt(self.bound / self.q_re), math.sqrt(self.bound / self.q_im)

    def quad_form(self, z):
        z = np.asarray(z)
        return self.q_re * z.real**2 + self.q_im * z.imag**2

    def contains(self, z, inflate=1.0):
        return self.quad_form(z) < self.bound * inflate**2


def ellipse_strong(tau, gamma_k):
    """Limiting support and density constant at fixed tau.

    ``gamma_k`` is the product gamma*K; pass k_ft(tau, k_p) for the
    fixed-trace ensembles.
    """
    if not -1.0 < tau < 1.0:
        raise ParamError(f"tau must lie in (-1, 1), got {tau}")
    if not gamma_k > -1.0 / (2.0 * (1.0 + abs(tau))):
        raise ParamError(f"gamma*K = {gamma_k} below -1/(2(1+|tau|))")
    s = 1.0 - tau * tau
    g = 2.0 * gamma_k * s
    q_re = (1.0 - tau + g) / (1.0 + tau + g)
    scale_c = 1.0 / s + 2.0 * gamma_k
    minor = min(math.sqrt(q_re), math.sqrt(1.0 / q_re)) / math.sqrt(scale_c)
    return Ellipse(q_re, 1.0 / q_re, 1.0 / scale_c, scale_c, degenerate=minor < 1e-6)


@dataclass(frozen=True)
class PabCovariance:
    n: int
    var_diag_re: float
    var_diag_im: float
    var_off: float
    cov_real: float

    @property
    def lambda_plus_sq(self):
        return self.var_off + self.cov_real

    @property
    def lambda_minus_sq(self):
        return self.var_off - self.cov_real

    @property
    def mean_trace_jj(self):
        n = self.n
        return 2 * n * (n - 1) * self.var_off + n * (self.var_diag_re + self.var_diag_im)

    @property
    def var_trace_jj(self):
        n = self.n
        return 2 * n * (n - 1) * (self.lambda_plus_sq**2 + self.lambda_minus_sq**2) + 2 * n * (
            self.var_diag_re**2 + self.var_diag_im**2
        )


def covariance_from_gamma_k(tau, gamma_k, n):
    s = 1.0 - tau * tau
    den = 1.0 + 4.0 * gamma_k + 4.0 * gamma_k**2 * s
    return PabCovariance(
        n=int(n),
        var_diag_re=(1 + tau) / (2 * n * (1 + 2 * gamma_k * (1 + tau))),
        var_diag_im=(1 - tau) / (2 * n * (1 + 2 * gamma_k * (1 - tau))),
        var_off=(1 + 2 * gamma_k * s) / (2 * n * den),
        cov_real=tau / (2 * n * den),
    )


def covariance_pab(params: ModelParams):
    """Entry covariances of the linearized Gaussian at t = 0.

    Off-diagonal pairs (Re J_jk, Re J_kj) have covariance +cov_real and
    (Im J_jk, Im J_kj) covariance -cov_real; all other pairs are independent.
    """
    k = solve_k(params.tau, params.gamma, params.k_p)
    return covariance_from_gamma_k(params.tau, params.gamma * k, params.n)


@dataclass(frozen=True)
class DerivedParams:
    params: ModelParams
    k: float
    gamma_k: float
    a_t: complex
    b: float
    c_at_sq: complex
    c_weak: float
    c_kbar: float
    ellipse: Ellipse
    fixed_trace: bool = False

    @property
    def scale_strong(self):
        return self.ellipse.scale_c


def derive(params: ModelParams, fixed_trace=False):
    """All derived scalars for ``params``.

    With ``fixed_trace`` the product gamma*K is replaced by its gamma -> inf
    limit k_ft and the weak constant becomes 1/K_p.
    """
    tau, n = params.tau, params.n
    s = 1.0 - tau * tau
    if fixed_trace:
        k = 0.0
        gk = k_ft(tau, params.k_p)
        cw = ckb = c_weak_ft(params.k_p)
    else:
        k = solve_k(tau, params.gamma, params.k_p)
        gk = params.gamma * k
        cw = c_weak(params.gamma, params.k_p)
        ckb = 1.0 + 4.0 * params.gamma * kbar(params.gamma, params.k_p)
    a_t = complex(n * (1.0 / s + 2.0 * gk), -params.t)
    b = tau * n / s
    c_sq = (a_t * a_t - b * b) / (2.0 * b) if b != 0 else complex(math.inf)
    return DerivedParams(params, k, gk, a_t, b, c_sq, cw, ckb, ellipse_strong(tau, gk), fixed_trace)


@dataclass(frozen=True)
class WeakScaling:
    x: float
    alpha: float
    c: float
    nu: float
    alpha_tilde: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "alpha_tilde", self.alpha * self.c / self.nu)

    def tau_n(self, n):
        return 1.0 - self.alpha**2 / (2.0 * n * self.nu**2)

    def local_scale(self, n):
        return n * self.nu


def semicircle_density(x, c=1.0):
    """(C / 2pi) sqrt(4/C - x^2) on |x| < 2/sqrt(C), zero outside."""
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) < 2 / np.sqrt(c), c / (2 * np.pi) * np.sqrt(np.clip(4 / c - x * x, 0, None)), 0.0)


def semicircle_cdf(x, c=1.0):
    r = 2.0 / np.sqrt(c)
    u = np.clip(np.asarray(x, dtype=float) / r, -1.0, 1.0)
    return 0.5 + (u * np.sqrt(1 - u * u) + np.arcsin(u)) / np.pi


def weak_scaling(x, alpha, c):
    """nu(X) = (C/2pi) sqrt(4/C - X^2) together with tau_N and the local scale N nu(X)."""
    if alpha <= 0 or c <= 0:
        raise ParamError("alpha and c must be positive")
    if abs(x) >= 2.0 / math.sqrt(c):
        raise EdgeError(f"|X| = {abs(x)} is not inside the support (-{2 / math.sqrt(c)}, {2 / math.sqrt(c)})")
    nu = c / (2 * math.pi) * math.sqrt(4.0 / c - x * x)
    return WeakScaling(float(x), float(alpha), float(c), nu)
