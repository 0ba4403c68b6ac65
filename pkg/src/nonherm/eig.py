"""Dense complex eigenvalues: Householder Hessenberg reduction followed by
single-shift complex QR iteration with deflation.

``eigenvalues(m, backend="lapack")`` hands the work to LAPACK's zgeev through
numpy instead; both paths share validation and output ordering.
"""
from __future__ import annotations

import numpy as np
from numba import njit

MAX_DIM = 2048
EXCEPTIONAL_EVERY = 10


class EigenConvergenceError(ArithmeticError):
    """QR iteration stalled; ``block`` holds the unresolved index range."""

    def __init__(self, block, iterations):
        self.block = block
        self.iterations = iterations
        super().__init__(
            f"QR iteration did not converge after {iterations} iterations; "
            f"unresolved block rows {block[0]}..{block[1]}"
        )


def as_complex_matrix(m):
    """Validate and return ``m`` as a C-contiguous complex128 square array."""
    a = np.array(m, dtype=np.complex128, order="C", copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
    if a.shape[0] > MAX_DIM:
        raise ValueError(f"matrix dimension {a.shape[0]} exceeds {MAX_DIM}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def sort_spectrum(values):
    """Order eigenvalues by real part, ties broken by imaginary part."""
    values = np.asarray(values, dtype=np.complex128)
    return values[np.lexsort((values.imag, values.real))]


def hessenberg(m):
    """Unitarily similar upper-Hessenberg form by Householder reflections."""
    h = as_complex_matrix(m)
    n = h.shape[0]
    for j in range(n - 2):
        x = h[j + 1:, j].copy()
        nx = np.linalg.norm(x)
        if nx == 0.0:
            continue
        x0 = x[0]
        phase = x0 / abs(x0) if x0 != 0 else 1.0
        v = x
        v[0] += phase * nx
        v /= np.linalg.norm(v)
        h[j + 1:, :] -= 2.0 * np.outer(v, v.conj() @ h[j + 1:, :])
        h[:, j + 1:] -= 2.0 * np.outer(h[:, j + 1:] @ v, v.conj())
        h[j + 2:, j] = 0.0
    return h


@njit(cache=True)
def _wilkinson(a, b, c, d):
    # eigenvalue of [[a, b], [c, d]] closest to d
    tr2 = 0.5 * (a + d)
    disc = np.sqrt((0.5 * (a - d)) ** 2 + b * c)
    e1 = tr2 + disc
    e2 = tr2 - disc
    if abs(e1 - d) <= abs(e2 - d):
        return e1
    return e2


@njit(cache=True)
def _hessenberg_qr(h, max_iter):
    n = h.shape[0]
    eps = 2.220446049250313e-16
    ev = np.zeros(n, dtype=np.complex128)
    cs = np.zeros(n, dtype=np.float64)
    sn = np.zeros(n, dtype=np.complex128)
    hnorm = 0.0
    for i in range(n):
        for j in range(n):
            hnorm = max(hnorm, abs(h[i, j]))
    if hnorm == 0.0:
        return ev, -1, -1, 0
    hi = n - 1
    total = 0
    stall = 0
    while hi >= 0:
        lo = hi
        while lo > 0:
            s = abs(h[lo - 1, lo - 1]) + abs(h[lo, lo])
            if s == 0.0:
                s = hnorm
            if abs(h[lo, lo - 1]) <= eps * s:
                h[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            ev[hi] = h[hi, hi]
            hi -= 1
            stall = 0
            continue
        if total >= max_iter:
            return ev, lo, hi, total
        total += 1
        stall += 1
        if stall % 10 == 0:
            # exceptional shift: kick the iteration off a possible cycle
            ex = abs(h[hi, hi - 1])
            if hi - 2 >= lo:
                ex += abs(h[hi - 1, hi - 2])
            mu = h[hi, hi] + 0.75 * ex * np.exp(1j * stall)
        else:
            mu = _wilkinson(h[hi - 1, hi - 1], h[hi - 1, hi], h[hi, hi - 1], h[hi, hi])
        for k in range(lo, hi + 1):
            h[k, k] -= mu
        # H - mu = QR by Givens rotations on the active block
        for k in range(lo, hi):
            a = h[k, k]
            b = h[k + 1, k]
            r = np.sqrt(abs(a) ** 2 + abs(b) ** 2)
            if r == 0.0:
                c = 1.0
                s = 0.0 + 0.0j
            elif a == 0:
                c = 0.0
                s = 1.0 + 0.0j
            else:
                c = abs(a) / r
                s = (a / abs(a)) * np.conj(b) / r
            cs[k] = c
            sn[k] = s
            for j in range(k, hi + 1):
                x = h[k, j]
                y = h[k + 1, j]
                h[k, j] = c * x + s * y
                h[k + 1, j] = -np.conj(s) * x + c * y
        # RQ
        for k in range(lo, hi):
            c = cs[k]
            s = sn[k]
            top = min(k + 2, hi)
            for i in range(lo, top + 1):
                x = h[i, k]
                y = h[i, k + 1]
                h[i, k] = c * x + np.conj(s) * y
                h[i, k + 1] = -s * x + c * y
        for k in range(lo, hi + 1):
            h[k, k] += mu
    return ev, -1, -1, total


def eigenvalues(m, backend="native"):
    """Eigenvalues of a general complex matrix, sorted by (Re, Im).

    Parameters
    ----------
    m : array_like, shape (n, n)
    backend : {"native", "lapack"}
        "native" runs the Hessenberg + shifted QR code in this module;
        "lapack" calls numpy.linalg.eigvals.

    Raises
    ------
    EigenConvergenceError
        If the native iteration exceeds 30 n sweeps.
    """
    a = as_complex_matrix(m)
    if backend == "lapack":
        return sort_spectrum(np.linalg.eigvals(a))
    if backend != "native":
        raise ValueError(f"unknown eigen backend {backend!r}")
    n = a.shape[0]
    if n == 1:
        return a[0].copy()
    h = hessenberg(a)
    ev, lo, hi, its = _hessenberg_qr(h, 30 * n)
    if lo >= 0:
        raise EigenConvergenceError((int(lo), int(hi)), int(its))
    return sort_spectrum(ev)


def batch_eigenvalues(mats, backend="lapack"):
    """Eigenvalues of a stack of matrices, one sorted row per matrix."""
    mats = np.asarray(mats)
    if backend == "lapack" and mats.ndim == 3:
        if not np.all(np.isfinite(mats)):
            raise ValueError("matrix has non-finite entries")
        ev = np.linalg.eigvals(mats.astype(np.complex128))
        return np.stack([sort_spectrum(row) for row in ev])
    return np.stack([eigenvalues(m, backend=backend) for m in mats])
