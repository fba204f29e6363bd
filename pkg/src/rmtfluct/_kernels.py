"""Hot loops with a numba path and a pure-numpy fallback.

Set ``RMTFLUCT_DISABLE_NUMBA=1`` before import to force the numpy versions.
Both paths compute the same quantities; the numpy versions vectorise over
the query axis and loop over the matrix index, the numba versions loop over
everything.
"""
from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("RMTFLUCT_DISABLE_NUMBA", "").strip().lower()
USE_NUMBA = _FLAG not in ("1", "true", "yes", "on")

if USE_NUMBA:
    try:
        import numba
    except ImportError:  # pragma: no cover - numba is a hard dependency
        USE_NUMBA = False

# Tiny positive pivot used when an LDL^T pivot is exactly zero.
_PIVOT_FLOOR = 1e-300


# Sturm counts for symmetric tridiagonal matrices ---------------------------

def _sturm_counts_np(diag, off2, thresholds):
    """Number of eigenvalues strictly below each threshold.

    ``diag`` has length n, ``off2`` holds the n-1 squared off-diagonals.
    """
    t = np.asarray(thresholds, dtype=np.float64)
    q = diag[0] - t
    count = (q < 0).astype(np.int64)
    for i in range(1, diag.shape[0]):
        q = np.where(q == 0.0, _PIVOT_FLOOR, q)
        q = diag[i] - t - off2[i - 1] / q
        count += q < 0
    return count


def _sturm_counts_loop(diag, off2, thresholds):
    m = thresholds.shape[0]
    n = diag.shape[0]
    out = np.zeros(m, dtype=np.int64)
    for j in range(m):
        t = thresholds[j]
        q = diag[0] - t
        c = 1 if q < 0 else 0
        for i in range(1, n):
            if q == 0.0:
                q = _PIVOT_FLOOR
            q = diag[i] - t - off2[i - 1] / q
            if q < 0:
                c += 1
        out[j] = c
    return out


# Pruefer phase counts for CMV matrices ------------------------------------

def _prufer_counts_np(alpha, thetas):
    """Eigenangle counts in (0, theta] for the CMV matrix of ``alpha``.

    ``alpha[:-1]`` lie in the open unit disk and ``alpha[-1]`` on the circle.
    """
    th = np.asarray(thetas, dtype=np.float64)
    psi = th.copy()
    psi0 = 0.0
    for k in range(alpha.shape[0] - 1):
        a = alpha[k]
        psi = th + psi - 2.0 * np.angle(1.0 - a * np.exp(1j * psi))
        psi0 = psi0 - 2.0 * np.angle(1.0 - a * np.exp(1j * psi0))
    c = np.angle(np.conj(alpha[-1]))
    two_pi = 2.0 * np.pi
    return (np.floor((psi - c) / two_pi) - np.floor((psi0 - c) / two_pi)).astype(np.int64)


def _prufer_counts_loop(alpha, thetas):
    m = thetas.shape[0]
    n = alpha.shape[0]
    out = np.zeros(m, dtype=np.int64)
    two_pi = 2.0 * np.pi
    c = np.arctan2(-alpha[n - 1].imag, alpha[n - 1].real)
    psi0 = 0.0
    for k in range(n - 1):
        z = 1.0 - alpha[k] * np.exp(1j * psi0)
        psi0 = psi0 - 2.0 * np.arctan2(z.imag, z.real)
    base = np.floor((psi0 - c) / two_pi)
    for j in range(m):
        th = thetas[j]
        psi = th
        for k in range(n - 1):
            z = 1.0 - alpha[k] * np.exp(1j * psi)
            psi = th + psi - 2.0 * np.arctan2(z.imag, z.real)
        out[j] = np.int64(np.floor((psi - c) / two_pi) - base)
    return out


# Aberth-Ehrlich polishing for log-scaled polynomials ------------------------

def _aberth_np(z, log_abs_c, phase_c, tol, maxiter):
    """Simultaneous root refinement for p(z) = sum_j c_j z^j.

    Coefficients are given as ``log|c_j|`` and ``c_j/|c_j|`` so that
    polynomials with an enormous coefficient range (random analytic
    functions) are evaluated without overflow. Roots whose last correction
    fell below ``tol`` (relative) are frozen.
    """
    z = np.array(z, dtype=np.complex128)
    n = log_abs_c.shape[0]
    j = np.arange(n, dtype=np.float64)
    active = np.ones(z.shape[0], dtype=bool)
    for it in range(maxiter):
        za = z[active]
        lz = np.log(np.abs(za))[:, None]
        e = log_abs_c[None, :] + j[None, :] * lz
        e -= e.max(axis=1, keepdims=True)
        t = np.exp(e + 1j * np.outer(np.angle(za), j)) * phase_c[None, :]
        p = t.sum(axis=1)
        dp = (t * j[None, :]).sum(axis=1) / za
        r = p / dp
        diff = za[:, None] - z[None, :]
        diff[diff == 0] = np.inf
        s = (1.0 / diff).sum(axis=1)
        w = r / (1.0 - r * s)
        z[active] = za - w
        done = np.abs(w) <= tol * np.maximum(np.abs(za), 1e-300)
        idx = np.flatnonzero(active)
        active[idx[done]] = False
        if not active.any():
            return z, it + 1
    return z, maxiter


def _aberth_loop(z, log_abs_c, phase_c, tol, maxiter):
    z = z.copy()
    m = z.shape[0]
    n = log_abs_c.shape[0]
    active = np.ones(m, dtype=np.bool_)
    for it in range(maxiter):
        n_active = 0
        for i in range(m):
            if not active[i]:
                continue
            zi = z[i]
            lz = np.log(np.abs(zi))
            ang = np.angle(zi)
            emax = -np.inf
            for k in range(n):
                e = log_abs_c[k] + k * lz
                if e > emax:
                    emax = e
            p = 0.0 + 0.0j
            dp = 0.0 + 0.0j
            for k in range(n):
                t = np.exp(log_abs_c[k] + k * lz - emax + 1j * k * ang) * phase_c[k]
                p += t
                dp += k * t
            r = p / (dp / zi)
            s = 0.0 + 0.0j
            for k in range(m):
                if k != i:
                    s += 1.0 / (zi - z[k])
            w = r / (1.0 - r * s)
            z[i] = zi - w
            if np.abs(w) <= tol * max(np.abs(zi), 1e-300):
                active[i] = False
            else:
                n_active += 1
        if n_active == 0:
            return z, it + 1
    return z, maxiter


if USE_NUMBA:
    _sturm_counts_nb = numba.njit(cache=True)(_sturm_counts_loop)
    _prufer_counts_nb = numba.njit(cache=True)(_prufer_counts_loop)
    _aberth_nb = numba.njit(cache=True)(_aberth_loop)


def sturm_counts(diag, off2, thresholds, backend=None):
    diag = np.ascontiguousarray(diag, dtype=np.float64)
    off2 = np.ascontiguousarray(off2, dtype=np.float64)
    thresholds = np.ascontiguousarray(np.atleast_1d(thresholds), dtype=np.float64)
    if _pick(backend) == "numba":
        return _sturm_counts_nb(diag, off2, thresholds)
    return _sturm_counts_np(diag, off2, thresholds)


def prufer_counts(alpha, thetas, backend=None):
    alpha = np.ascontiguousarray(alpha, dtype=np.complex128)
    thetas = np.ascontiguousarray(np.atleast_1d(thetas), dtype=np.float64)
    if _pick(backend) == "numba":
        return _prufer_counts_nb(alpha, thetas)
    return _prufer_counts_np(alpha, thetas)


def aberth(z, log_abs_c, phase_c, tol=1e-12, maxiter=200, backend=None):
    z = np.ascontiguousarray(z, dtype=np.complex128)
    log_abs_c = np.ascontiguousarray(log_abs_c, dtype=np.float64)
    phase_c = np.ascontiguousarray(phase_c, dtype=np.complex128)
    if _pick(backend) == "numba":
        return _aberth_nb(z, log_abs_c, phase_c, tol, maxiter)
    return _aberth_np(z, log_abs_c, phase_c, tol, maxiter)


def _pick(backend):
    if backend is None:
        return "numba" if USE_NUMBA else "numpy"
    if backend == "numba" and not USE_NUMBA:
        raise RuntimeError("numba backend requested but disabled")
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    return backend
