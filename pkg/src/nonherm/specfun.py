"""Complex special functions: erfc, normalized upper incomplete gamma,
the uniform (erfc-based) approximation of Q(w, wz), and Hermite polynomials.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

DEFAULT_DELTA = math.pi / 100
HERMITE_MAX_DEGREE = 500


class DomainError(ValueError):
    """Argument outside the domain of a special function."""


class HermiteOverflowError(OverflowError):
    pass


def erfc_complex(z):
    """Complementary error function 2/sqrt(pi) * int_z^inf exp(-t^2) dt.

    Backed by the Faddeeva-function evaluation shipped with scipy, which is
    accurate to roughly 1e-13 relative over the complex plane.
    """
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError(f"erfc_complex: non-finite argument {z!r}")
    return complex(special.erfc(z))


# ---------------------------------------------------------------------------
# normalized upper incomplete gamma Q(w, z) = Gamma(w, z) / Gamma(w)


def _check_order(w):
    w = float(w)
    if not w > 0 or not math.isfinite(w):
        raise DomainError(f"incomplete gamma order must be positive, got {w}")
    return w


def _is_integer(w):
    return float(w).is_integer() and w < 2**31


def gamma_p_series(w, z, max_terms=100000):
    """Lower regularized gamma P(w, z) by its power series (principal z^w)."""
    w = _check_order(w)
    z = complex(z)
    if z == 0:
        return 0j
    term = 1.0 + 0j
    total = 1.0 + 0j
    n = 0
    while n < max_terms:
        n += 1
        term *= z / (w + n)
        total += term
        if abs(term) < 1e-17 * abs(total):
            break
    log_pref = w * np.log(z) - z - math.lgamma(w + 1.0)
    return complex(np.exp(log_pref) * total)


def gamma_q_series(w, z):
    """Q(w, z) as 1 - P(w, z) with P from the power series."""
    return 1.0 - gamma_p_series(w, z)


def _lentz(b0, coeff, max_terms, tol):
    tiny = 1e-300
    f = b0 if b0 != 0 else tiny
    c, d = f, 0j
    for k in range(1, max_terms):
        ak, bk = coeff(k)
        d = bk + ak * d
        if abs(d) < tiny:
            d = tiny
        c = bk + ak / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < tol:
            return f
    raise ArithmeticError("continued fraction did not converge")


def gamma_q_cf(w, z, max_terms=100000, tol=1e-16):
    """Q(w, z) from continued fractions only.

    Outside |z| < w + 1 the Legendre fraction for Gamma(w, z) is used (it
    needs z off the negative real axis); inside, the Kummer-type fraction for
    the lower function gamma(w, z) = z^w e^-z / (w - w z/(w+1 + z/(w+2 - ...))).
    """
    w = _check_order(w)
    z = complex(z)
    if z == 0:
        return 1.0 + 0j
    if abs(z) >= w + 1.0:
        def coeff(k):
            return -k * (k - w), z + 2 * k + 1.0 - w

        h = 1.0 / _lentz(z + 1.0 - w, coeff, max_terms, tol)
        return complex(np.exp(w * np.log(z) - z - math.lgamma(w)) * h)

    def coeff(k):
        m, odd = divmod(k, 2)
        a = -(w + m) * z if odd else m * z
        return a, w + k

    f = _lentz(w, coeff, max_terms, tol)
    p = np.exp(w * np.log(z) - z - math.lgamma(w)) / f
    return complex(1.0 - p)


def gamma_q_finite(n, z):
    """Q(n, z) = exp(-z) * sum_{j<n} z^j / j! for integer n, summed from the
    top term down so that no partial sum overflows when |z| >= n."""
    if not _is_integer(n) or n < 1:
        raise DomainError(f"gamma_q_finite needs a positive integer order, got {n}")
    n = int(n)
    z = complex(z)
    if z == 0:
        return 1.0 + 0j
    total = 1.0 + 0j
    term = 1.0 + 0j
    for k in range(1, n):
        term *= (n - k) / z
        total += term
    log_pref = -z + (n - 1) * np.log(z) - math.lgamma(n)
    return complex(np.exp(log_pref) * total)


def gamma_q(w, z):
    """Normalized upper incomplete gamma Q(w, z) = Gamma(w, z)/Gamma(w).

    Power series for |z| < w + 1; outside that disc the exact finite sum for
    integer w and the continued fraction otherwise. Non-integer w uses the
    principal branch of z^w.
    """
    w = _check_order(w)
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError(f"gamma_q: non-finite argument {z!r}")
    if z == 0:
        return 1.0 + 0j
    if abs(z) < w + 1.0:
        return gamma_q_series(w, z)
    if _is_integer(w):
        return gamma_q_finite(int(w), z)
    return gamma_q_cf(w, z)


def gamma_q_int(n, z):
    """Vectorised Q(n, z) for a positive integer n and an array of complex z."""
    if not _is_integer(n) or n < 1:
        raise DomainError(f"gamma_q_int needs a positive integer order, got {n}")
    n = int(n)
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape, dtype=complex)
    az = np.abs(z)
    inner = az < n + 1.0
    if np.any(inner):
        zi = z[inner]
        term = np.ones_like(zi)
        total = np.ones_like(zi)
        k = 0
        while True:
            k += 1
            term = term * zi / (n + k)
            total = total + term
            if np.all(np.abs(term) <= 1e-17 * np.abs(total)) or k > 20 * n + 200:
                break
        with np.errstate(divide="ignore", invalid="ignore"):
            log_pref = n * np.log(zi) - zi - math.lgamma(n + 1.0)
        p = np.exp(log_pref) * total
        p[zi == 0] = 0.0
        out[inner] = 1.0 - p
    outer = ~inner
    if np.any(outer):
        zo = z[outer]
        term = np.ones_like(zo)
        total = np.ones_like(zo)
        for k in range(1, n):
            term = term * ((n - k) / zo)
            total = total + term
        out[outer] = np.exp(-zo + (n - 1) * np.log(zo) - math.lgamma(n)) * total
    return out


# ---------------------------------------------------------------------------
# uniform asymptotics


@dataclass(frozen=True)
class EtaValue:
    """eta = sqrt(2 (z - 1 - log z)) on the branch with sign(eta) = sign(z - 1)
    for real z, continued along the path from z = 1.

    At z = 0 the value is -inf and ``at_origin`` is set; Q(w, 0) = 1 there.
    """

    z: complex
    eta: complex
    at_origin: bool = False


def _zm1_minus_log(zm1, log_z):
    # z - 1 - log z, with a series near z = 1 to avoid cancellation
    if abs(zm1) < 1e-3:
        s = 0j
        p = zm1
        for k in range(2, 12):
            p = p * zm1
            s += (-1) ** k * p / k
        return s
    return zm1 - log_z


def eta_branch(z, delta=DEFAULT_DELTA, arg=None, steps=256):
    """Branch-correct eta for the uniform incomplete-gamma expansion.

    ``arg`` selects the sheet: when given, log z = log|z| + i*arg, which lets
    callers reach |arg z| up to 3*pi/2 - delta. The sign is fixed by tracking
    continuity along the path s -> exp(s log z), s in [0, 1].
    """
    z = complex(z)
    if z == 0:
        return EtaValue(z, complex(-math.inf, 0.0), at_origin=True)
    theta = float(np.angle(z)) if arg is None else float(arg)
    if arg is not None and not np.isclose(np.exp(1j * theta) * abs(z), z, rtol=1e-12, atol=1e-300):
        raise DomainError(f"arg={arg} inconsistent with z={z}")
    if abs(theta) > 1.5 * math.pi - delta:
        raise DomainError(f"|arg z| = {abs(theta):.4f} exceeds 3*pi/2 - delta")
    log_z = complex(math.log(abs(z)), theta)
    if z == 1 and theta == 0:
        return EtaValue(z, 0j)
    if z.imag == 0 and z.real > 0 and theta == 0:
        val = math.sqrt(max(2.0 * _zm1_minus_log(z - 1.0, log_z).real, 0.0))
        return EtaValue(z, complex(math.copysign(val, z.real - 1.0), 0.0))

    s = np.linspace(0.0, 1.0, steps + 1)[1:]
    logs = s * log_z
    zs = np.exp(logs)
    zm1 = zs - 1.0
    sq = np.array([_zm1_minus_log(a, b) for a, b in zip(zm1, logs)])
    # eta = (z - 1) * sqrt(2 (z - 1 - log z) / (z - 1)^2) is the regular
    # branch near z = 1; further out only continuity decides the sign
    e = np.sqrt(2.0 * sq)
    seed = zm1[0] * np.sqrt(2.0 * sq[0] / zm1[0] ** 2)
    signs = np.ones(len(e))
    signs[0] = 1.0 if (e[0] * np.conj(seed)).real >= 0 else -1.0
    dots = (e[1:] * np.conj(e[:-1])).real
    flips = np.where(dots < 0, -1.0, 1.0)
    signs[1:] = signs[0] * np.cumprod(flips)
    return EtaValue(z, complex(signs[-1] * e[-1]))


def gamma_q_uniform(w, z, delta=DEFAULT_DELTA, arg=None):
    """Leading uniform approximation Q(w, w z) ~ erfc(eta sqrt(w/2)) / 2.

    The remainder is O(exp(-w eta^2 / 2) / sqrt(w)), uniformly for
    |arg z| <= 3*pi/2 - delta.
    """
    w = float(w)
    if w < 10:
        raise DomainError(f"gamma_q_uniform requires w >= 10, got {w}")
    ev = eta_branch(z, delta=delta, arg=arg)
    if ev.at_origin:
        return 1.0 + 0j
    return 0.5 * erfc_complex(ev.eta * math.sqrt(w / 2.0))


def hermite_h(k, z):
    """Physicists' Hermite polynomial H_k(z) by the three-term recurrence."""
    k = int(k)
    if k < 0 or k > HERMITE_MAX_DEGREE:
        raise DomainError(f"hermite_h degree must lie in [0, {HERMITE_MAX_DEGREE}], got {k}")
    z = complex(z)
    h_prev, h = 0j, 1.0 + 0j
    for j in range(k):
        h_prev, h = h, 2.0 * z * h - 2.0 * j * h_prev
        if not (math.isfinite(h.real) and math.isfinite(h.imag)):
            raise HermiteOverflowError(
                f"H_{j + 1}({z}) overflowed; use the scaled recurrence in "
                "nonherm.kernels.orthonormal_values instead"
            )
    return h
