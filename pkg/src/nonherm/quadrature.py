"""Fixed-order quadrature rules used by the kernel evaluators and self-tests."""
from __future__ import annotations

from functools import lru_cache

import numpy as np


class QuadratureError(ArithmeticError):
    pass


@lru_cache(maxsize=16)
def _leggauss(order):
    return np.polynomial.legendre.leggauss(order)


def gauss_legendre(f, lo, hi, order=64, panels=1):
    """Composite Gauss-Legendre rule on [lo, hi]; ``f`` must accept arrays."""
    x, w = _leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return np.sum(weights * f(nodes))


def gauss_legendre_checked(f, lo, hi, order=64, panels=1, tol=1e-10, max_panels=4096):
    """Composite Gauss-Legendre with a panel-doubling check.

    Returns ``(value, error_estimate)``; the estimate is the difference
    between the last two refinements. Raises QuadratureError if ``tol`` is
    not met before ``max_panels``.
    """
    prev = gauss_legendre(f, lo, hi, order, panels)
    while True:
        panels *= 2
        cur = gauss_legendre(f, lo, hi, order, panels)
        err = abs(cur - prev)
        if err <= tol * max(1.0, abs(cur)):
            return cur, err
        if panels >= max_panels:
            raise QuadratureError(f"Gauss-Legendre did not reach {tol} (last change {err:.3e})")
        prev = cur


@lru_cache(maxsize=16)
def tanh_sinh_rule(level):
    """Nodes and weights of the tanh-sinh rule on [-1, 1] with step 2^-level."""
    h = 2.0 ** (-level)
    kmax = int(np.ceil(3.2 / h))
    t = h * np.arange(-kmax, kmax + 1)
    s = 0.5 * np.pi * np.sinh(t)
    x = np.tanh(s)
    w = h * 0.5 * np.pi * np.cosh(t) / np.cosh(s) ** 2
    keep = w > 1e-300
    return x[keep], w[keep]


def tanh_sinh(f, lo, hi, tol=1e-12, min_level=3, max_level=10):
    """Tanh-sinh quadrature on [lo, hi] with level doubling.

    Returns ``(value, error_estimate)``.
    """
    half, mid = 0.5 * (hi - lo), 0.5 * (hi + lo)
    prev = None
    for level in range(min_level, max_level + 1):
        x, w = tanh_sinh_rule(level)
        cur = half * np.sum(w * f(mid + half * x))
        if prev is not None:
            err = abs(cur - prev)
            if err <= tol * max(abs(cur), 1e-300):
                return cur, err
        prev = cur
    raise QuadratureError(f"tanh-sinh did not reach {tol} (last change {err:.3e})")


def tanh_sinh_2d(f, box, tol=1e-10, min_level=3, max_level=8):
    """Tensor-product tanh-sinh on the box ``(xlo, xhi, ylo, yhi)``.

    ``f(x, y)`` is called with broadcastable 2D arrays.
    """
    xlo, xhi, ylo, yhi = box
    hx, mx = 0.5 * (xhi - xlo), 0.5 * (xhi + xlo)
    hy, my = 0.5 * (yhi - ylo), 0.5 * (yhi + ylo)
    prev = None
    for level in range(min_level, max_level + 1):
        t, w = tanh_sinh_rule(level)
        vals = f((mx + hx * t)[:, None], (my + hy * t)[None, :])
        cur = hx * hy * np.einsum("i,ij,j->", w, vals, w)
        if prev is not None:
            err = abs(cur - prev)
            if err <= tol * max(abs(cur), 1e-300):
                return cur, err
        prev = cur
    raise QuadratureError(f"2D tanh-sinh did not reach {tol} (last change {err:.3e})")
