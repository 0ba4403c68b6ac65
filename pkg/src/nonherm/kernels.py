"""Determinantal kernels of the linearized Gaussian model and their limits.

The finite-N kernel is

    K(z1, z2) = sum_{j<N} p_j(z1) p_j(conj z2) sqrt(W(z1)) sqrt(W(conj z2)),
    W(z) = exp(-a|z|^2 + (b/2)(z^2 + conj(z)^2)),

with p_j the orthonormal planar Hermite polynomials of W. Evaluation runs the
three-term recurrence on mantissas with power-of-two rescaling and keeps the
weight in a separate log exponent, so no step overflows for N in the
thousands.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .params import DerivedParams
from .quadrature import QuadratureError, gauss_legendre_checked, tanh_sinh_2d
from .specfun import gamma_q_int

REGIMES = ("finite_n_sum", "contour_oracle", "strong_limit", "weak_limit", "weak_prop")
RESCALE_AT = 2.0**500
CONTOUR_MAX_N = 100


class KernelOverflowError(OverflowError):
    pass


@dataclass(frozen=True)
class KernelContext:
    """Scalars of one kernel: a (complex when t != 0), b, N and the regime."""

    a: complex
    b: float
    n: int
    regime: str = "finite_n_sum"
    alpha: float | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.regime in ("weak_limit", "weak_prop") and not (self.alpha and self.alpha > 0):
            raise ValueError("weak regimes need alpha > 0")
        if not abs(self.b) < complex(self.a).real:
            raise ValueError("need Re a > |b|")

    @classmethod
    def from_derived(cls, d: DerivedParams, regime="finite_n_sum", alpha=None):
        n = d.params.n
        t = d.params.t
        if t != 0 and abs(t) > 10.0 * math.sqrt(math.log(n)):
            raise ValueError(f"|t| = {abs(t)} exceeds 10 sqrt(log N)")
        return cls(complex(d.a_t), float(d.b), n, regime, alpha)


def _a_value(ctx):
    a = complex(ctx.a)
    return a.real if a.imag == 0 else a


def weight_w(z, ctx: KernelContext):
    """W(z) split as (log-magnitude, unit phase)."""
    z = np.asarray(z, dtype=complex)
    e = -_a_value(ctx) * np.abs(z) ** 2 + ctx.b * (z * z).real
    e = np.asarray(e, dtype=complex)
    return e.real, np.exp(1j * e.imag)


def _log_weight_half(z, a, b):
    e = -a * np.abs(z) ** 2 + b * (z * z).real
    e = np.asarray(e, dtype=complex)
    return 0.5 * e.real, np.exp(0.5j * e.imag)


def orthonormal_values(z, a, b, n):
    """Weighted orthonormal polynomials p_j(z) sqrt(W(z)), j < n.

    Returns ``(mant, log_scale)`` with mant of shape (n, len(z)) such that
    p_j(z) sqrt(W(z)) = mant[j] * exp(log_scale). Terms that were tiny when
    a later rescaling happened may have underflowed to zero.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    a = complex(a)
    if a.imag == 0:
        a = a.real
    d2 = a * a - b * b
    cr = np.sqrt(complex(d2 / (4 * a)))
    r2 = b / (2 * a)
    p0 = np.sqrt(np.sqrt(complex(d2)) / np.pi)
    logw, phase = _log_weight_half(z, a, b)
    m = len(z)
    mant = np.empty((n, m), dtype=complex)
    expo = np.zeros((n, m))
    cur_exp = np.zeros(m)
    prev = np.zeros(m, dtype=complex)
    cur = p0 * phase
    mant[0] = cur
    two_cr_z = 2.0 * cr * z
    for j in range(n - 1):
        nxt = (two_cr_z * cur - 2.0 * r2 * math.sqrt(j) * prev) / math.sqrt(j + 1)
        big = np.abs(nxt) > RESCALE_AT
        if np.any(big):
            shift = np.where(big, np.ceil(np.log2(np.abs(nxt) + 1e-300)), 0.0)
            f = np.exp2(-shift)
            nxt = nxt * f
            cur = cur * f
            cur_exp = cur_exp + shift
        if not np.all(np.isfinite(nxt)):
            raise KernelOverflowError(f"orthonormal recurrence overflowed at degree {j + 1}")
        prev, cur = cur, nxt
        mant[j + 1] = cur
        expo[j + 1] = cur_exp
    final = expo[-1]
    mant *= np.exp2(expo - final[None, :])
    return mant, logw + final * math.log(2.0)


def _finite_sum(z1, z2, ctx):
    m1, s1 = orthonormal_values(z1, ctx.a, ctx.b, ctx.n)
    m2, s2 = orthonormal_values(np.conj(z2), ctx.a, ctx.b, ctx.n)
    return m1, s1, m2, s2


def _log_exp_q(n, w):
    """log(exp(w) Q(n, w)) = log sum_{j<n} w^j / j!, stable for large |w|."""
    w = np.asarray(w, dtype=complex)
    out = np.empty(w.shape, dtype=complex)
    inner = np.abs(w) < n + 1.0
    if np.any(inner):
        out[inner] = w[inner] + np.log(gamma_q_int(n, w[inner]))
    outer = ~inner
    if np.any(outer):
        wo = w[outer]
        term = np.ones_like(wo)
        total = np.ones_like(wo)
        for k in range(1, n):
            term = term * ((n - k) / wo)
            total = total + term
        out[outer] = np.log(total) + (n - 1) * np.log(wo) - math.lgamma(n)
    return out


def kernel_monomial(z1, z2, ctx: KernelContext):
    """b = 0 kernel: (a/pi) exp(-a(|z1|^2 + |z2|^2)/2) sum_{j<N} (a z1 conj z2)^j / j!."""
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    a = _a_value(ctx)
    w = a * z1 * np.conj(z2)
    log_val = -0.5 * a * (np.abs(z1) ** 2 + np.abs(z2) ** 2) + _log_exp_q(ctx.n, np.atleast_1d(w)).reshape(w.shape)
    return a / np.pi * np.exp(log_val)


def kernel_finite_n(z1, z2, ctx: KernelContext, return_log_scale=False):
    """Finite-N kernel at pairs (z1[i], z2[i]); inputs broadcast.

    tau = 0 (b = 0) goes through the monomial closed form, other b through the
    rescaled planar-Hermite recurrence.
    """
    z1, z2 = np.broadcast_arrays(np.asarray(z1, dtype=complex), np.asarray(z2, dtype=complex))
    shape = z1.shape
    f1, f2 = z1.ravel(), z2.ravel()
    if ctx.b == 0:
        val = kernel_monomial(f1, f2, ctx)
        log_scale = np.zeros(len(f1))
    else:
        m1, s1, m2, s2 = _finite_sum(f1, f2, ctx)
        acc = np.einsum("ji,ji->i", m1, m2)
        log_scale = s1 + s2
        val = acc * np.exp(log_scale)
    if not np.all(np.isfinite(val)):
        raise KernelOverflowError("kernel value not finite after rescaling")
    val = val.reshape(shape)
    if return_log_scale:
        return val, log_scale.reshape(shape)
    return val


def kernel_matrix(points, ctx: KernelContext):
    """Matrix K(points[i], points[j])."""
    pts = np.atleast_1d(np.asarray(points, dtype=complex))
    if ctx.b == 0:
        return kernel_monomial(pts[:, None], pts[None, :], ctx)
    m1, s1 = orthonormal_values(pts, ctx.a, ctx.b, ctx.n)
    m2, s2 = orthonormal_values(np.conj(pts), ctx.a, ctx.b, ctx.n)
    return (m1.T @ m2) * np.exp(s1[:, None] + s2[None, :])


def kernel_contour(z1, z2, ctx: KernelContext, tol=1e-11):
    """Kernel from its double-integral representation.

    Writes H_j(x) = 2^j / sqrt(pi) int (x + i t)^j exp(-t^2) dt for both
    Hermite factors, sums the series under the integral into
    exp(w) Q(N, w) with w = (2b/a)(x1 + i t)(x2 + i s), x1 = c z1,
    x2 = c conj(z2), c^2 = (a^2 - b^2)/(2b), and integrates over (t, s)
    along real lines shifted through the saddle of the Gaussian part.
    """
    if ctx.b == 0:
        raise ValueError("the contour representation needs b != 0")
    if ctx.n > CONTOUR_MAX_N:
        raise ValueError(f"contour oracle limited to N <= {CONTOUR_MAX_N}")
    a, b, n = _a_value(ctx), ctx.b, ctx.n
    d2 = a * a - b * b
    c = np.sqrt(complex(d2 / (2 * b)))
    beta = 2 * b / a
    p0_sq = np.sqrt(complex(d2)) / np.pi
    z1 = complex(z1)
    z2 = complex(z2)
    x1, x2 = c * z1, c * np.conj(z2)
    den = 4 - beta * beta
    t0 = 1j * beta * (2 * x2 - beta * x1) / den
    s0 = 1j * beta * (2 * x1 - beta * x2) / den
    lw1, ph1 = _log_weight_half(z1, a, b)
    lw2, ph2 = _log_weight_half(np.conj(z2), a, b)
    pref_log = float(lw1 + lw2)
    damp = 1.0 - abs(beta) / 2.0
    half = math.sqrt((4.0 * n + 80.0) / damp)

    def integrand(p, q):
        t = t0 + p
        s = s0 + q
        w = beta * (x1 + 1j * t) * (x2 + 1j * s)
        shape = np.broadcast(t, s).shape
        w_b = np.broadcast_to(w, shape).ravel()
        phi = (-(t * t) - (s * s)).astype(complex)
        phi = np.broadcast_to(phi, shape).ravel()
        return np.exp(phi + _log_exp_q(n, w_b) + pref_log).reshape(shape)

    try:
        val, _ = tanh_sinh_2d(integrand, (-half, half, -half, half), tol=tol, min_level=4, max_level=9)
    except QuadratureError as exc:
        raise QuadratureError(f"contour oracle did not converge at ({z1}, {z2}): {exc}") from exc
    return complex(p0_sq / np.pi * ph1 * ph2 * val)


# ---------------------------------------------------------------------------
# limiting kernels


def k_strong(z1, z2):
    """(1/pi) exp(-(|z1|^2 + |z2|^2)/2 + z1 conj(z2))."""
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    return np.exp(-0.5 * (np.abs(z1) ** 2 + np.abs(z2) ** 2) + z1 * np.conj(z2)) / np.pi


def gaussian_fourier(zeta, width, lo, hi, tol=1e-12):
    """int_lo^hi exp(-width^2 u^2 / 2 + i u zeta) du by composite
    Gauss-Legendre on the part of [lo, hi] where the integrand is not
    negligible, with a panel-doubling error check."""
    zeta = complex(zeta)
    a2 = 0.5 * width * width
    # |integrand| = exp(-a2 u^2 - u Im zeta), peak at u* = -Im zeta / (2 a2)
    if a2 > 0:
        peak = min(max(-zeta.imag / (2 * a2), lo), hi)
        logmax = -a2 * peak * peak - peak * zeta.imag
        reach = math.sqrt(40.0 / a2) + abs(zeta.imag) / a2
        wlo, whi = max(lo, peak - reach), min(hi, peak + reach)
    else:
        logmax = max(-lo * zeta.imag, -hi * zeta.imag)
        wlo, whi = lo, hi

    def f(u):
        return np.exp(-a2 * u * u + 1j * u * zeta - logmax)

    osc = abs(zeta.real) + abs(zeta.imag) + width
    panels = max(1, int(math.ceil((whi - wlo) * osc / 30.0)))
    val, _ = gauss_legendre_checked(f, wlo, whi, order=64, panels=panels, tol=tol)
    return val * math.exp(logmax)


def gaussian_fourier_erf(zeta, width, lo, hi):
    """Closed form of gaussian_fourier via the complex error function."""
    a2 = 0.5 * width * width
    sa = math.sqrt(a2)
    shift = 1j * complex(zeta) / (2 * sa)
    return 0.5 * math.sqrt(math.pi / a2) * np.exp(-complex(zeta) ** 2 / (4 * a2)) * (
        special.erf(sa * hi - shift) - special.erf(sa * lo - shift))


def k_weak(z1, z2, alpha):
    """Weak non-Hermiticity kernel

        sqrt(2)/(sqrt(pi) alpha) exp(-(y1^2 + y2^2)/alpha^2)
            * (1/2pi) int_{-pi}^{pi} exp(-alpha^2 u^2/2 + i u (z1 - conj z2)) du.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    z1a, z2a = np.broadcast_arrays(np.asarray(z1, dtype=complex), np.asarray(z2, dtype=complex))
    out = np.empty(z1a.shape, dtype=complex)
    for idx in np.ndindex(z1a.shape):
        u, v = z1a[idx], z2a[idx]
        integral = gaussian_fourier(u - np.conj(v), alpha, -math.pi, math.pi)
        pref = math.sqrt(2.0) / (math.sqrt(math.pi) * alpha) * math.exp(-(u.imag**2 + v.imag**2) / alpha**2)
        out[idx] = pref * integral / (2 * math.pi)
    return out if out.shape else complex(out)


def k_weak_prop(x_global, z1, z2, alpha_tilde, c):
    """Local kernel at X on the 1/(C N) scale:

        (1/pi) exp(-(y1^2 + y2^2)/at^2 + i X (y1 - y2)/2) / (sqrt(2 pi) at)
            * int_{-L}^{L} exp(-at^2 u^2/2 + i u (x1 - x2) - u (y1 + y2)) du,

    with L = sqrt(4/C - X^2)/2.
    """
    if abs(x_global) >= 2.0 / math.sqrt(c):
        raise ValueError(f"X = {x_global} is at or beyond the edge 2/sqrt(C)")
    if alpha_tilde <= 0:
        raise ValueError("alpha_tilde must be positive")
    half = 0.5 * math.sqrt(4.0 / c - x_global**2)
    z1a, z2a = np.broadcast_arrays(np.asarray(z1, dtype=complex), np.asarray(z2, dtype=complex))
    out = np.empty(z1a.shape, dtype=complex)
    for idx in np.ndindex(z1a.shape):
        u, v = z1a[idx], z2a[idx]
        zeta = (u.real - v.real) + 1j * (u.imag + v.imag)
        integral = gaussian_fourier(zeta, alpha_tilde, -half, half)
        pref = np.exp(-(u.imag**2 + v.imag**2) / alpha_tilde**2 + 0.5j * x_global * (u.imag - v.imag))
        out[idx] = pref * integral / (math.pi * math.sqrt(2 * math.pi) * alpha_tilde)
    return out if out.shape else complex(out)


def rho_det(points, kernel):
    """det(K(z_i, z_j)) for k <= 8 points; ``kernel(z1, z2)`` must broadcast."""
    pts = np.atleast_1d(np.asarray(points, dtype=complex))
    if len(pts) > 8:
        raise ValueError("rho_det supports at most 8 points")
    mat = np.asarray(kernel(pts[:, None], pts[None, :]), dtype=complex)
    return complex(np.linalg.det(mat))


def hubbard_stratonovich_check(x, gamma):
    """|exp(-gamma x^2) - (4 pi gamma)^(-1/2) int exp(i x t - t^2/(4 gamma)) dt|."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    reach = math.sqrt(4.0 * gamma * 80.0)

    def f(t):
        return np.exp(1j * x * t - t * t / (4 * gamma))

    panels = max(1, int(math.ceil(2 * reach * (abs(x) + 1.0) / 20.0)))
    val, _ = gauss_legendre_checked(f, -reach, reach, order=64, panels=panels, tol=1e-15)
    return abs(math.exp(-gamma * x * x) - val / math.sqrt(4 * math.pi * gamma))


# ---------------------------------------------------------------------------
# tabulation


@dataclass
class KernelProfile:
    z1: np.ndarray
    z2: np.ndarray
    values: np.ndarray
    provenance: str
    log_scale: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.log_scale is None:
            self.log_scale = np.zeros(len(self.values))

    def rows(self):
        for a, b, v, s in zip(self.z1, self.z2, self.values, self.log_scale):
            yield a.real, a.imag, b.real, b.imag, v.real, v.imag, s


def tabulate(z1, z2, regime, ctx: KernelContext | None = None, alpha=None, x_global=0.0, c=1.0):
    """Evaluate one kernel regime on paired grids and return a KernelProfile."""
    z1 = np.atleast_1d(np.asarray(z1, dtype=complex))
    z2 = np.atleast_1d(np.asarray(z2, dtype=complex))
    log_scale = None
    if regime == "finite_n_sum":
        if ctx is None:
            raise ValueError("finite_n_sum needs a kernel context")
        vals, log_scale = kernel_finite_n(z1, z2, ctx, return_log_scale=True)
    elif regime == "contour_oracle":
        if ctx is None:
            raise ValueError("contour_oracle needs a kernel context")
        vals = np.array([kernel_contour(u, v, ctx) for u, v in zip(z1, z2)])
    elif regime == "strong_limit":
        vals = k_strong(z1, z2)
    elif regime == "weak_limit":
        vals = k_weak(z1, z2, alpha)
    elif regime == "weak_prop":
        vals = k_weak_prop(x_global, z1, z2, alpha, c)
    else:
        raise ValueError(f"unknown regime {regime!r}")
    return KernelProfile(z1, z2, np.asarray(vals, dtype=complex), regime, log_scale)
