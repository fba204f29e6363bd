"""Planar (Ginibre-type) fluctuation formulas in the global scaling."""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from ..basis import InputError, PlanarPolynomial, PlanarRadial
from ._prediction import Prediction

N_BOUNDARY = 1024


def ellipse_axes(tau: float):
    if not 0 <= tau < 1:
        raise InputError("need 0 <= tau < 1")
    return 1.0 + tau, 1.0 - tau


def ellipse_boundary(tau: float, n: int = N_BOUNDARY):
    """Boundary points x + iy = 2 sqrt(tau) cosh(xi_b + i eta), tanh xi_b = (1-tau)/(1+tau).

    Equivalent to ((1+tau) cos eta, (1-tau) sin eta), which also covers tau = 0.
    """
    a, b = ellipse_axes(tau)
    eta = 2 * np.pi * np.arange(n) / n
    return a * np.cos(eta) + 1j * b * np.sin(eta)


def _boundary_coeffs(f, tau):
    vals = np.asarray(f(ellipse_boundary(tau)), dtype=float)
    return np.fft.fft(vals) / len(vals)


def _gradients(f, x, y):
    if isinstance(f, PlanarPolynomial):
        return f.gradient(x, y)
    if isinstance(f, PlanarRadial):
        r = np.hypot(x, y)
        d = f.dh(r)
        rs = np.where(r == 0, 1.0, r)
        return np.where(r == 0, 0.0, d * x / rs), np.where(r == 0, 0.0, d * y / rs)
    raise InputError(f"unsupported planar statistic {type(f).__name__}")


def _ellipse_nodes(tau, n_rho=96, n_phi=256):
    a, b = ellipse_axes(tau)
    t, w = np.polynomial.legendre.leggauss(n_rho)
    rho = 0.5 * (t + 1)
    wr = 0.5 * w
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    R, P = np.meshgrid(rho, phi, indexing="ij")
    x, y = a * R * np.cos(P), b * R * np.sin(P)
    weights = (wr[:, None] * rho[:, None]) * (2 * np.pi / n_phi) * a * b * np.ones_like(P)
    return x, y, weights


def area_gradient_term(f, g, tau: float = 0.0) -> float:
    """int over the support of grad f . grad g."""
    x, y, w = _ellipse_nodes(tau)
    fx, fy = _gradients(f, x, y)
    gx, gy = _gradients(g, x, y)
    return float(math.fsum((w * (fx * gx + fy * gy)).ravel()))


def boundary_term(f, g, tau: float = 0.0) -> float:
    """sum_n |n| f_n g_{-n} over boundary Fourier components."""
    cf, cg = _boundary_coeffs(f, tau), _boundary_coeffs(g, tau)
    n = np.fft.fftfreq(len(cf), 1.0 / len(cf))
    terms = np.abs(n) * cf * cg[(-np.arange(len(cg))) % len(cg)]
    return float(math.fsum(terms.real))


def _disk_minus_boundary_average(f, tau):
    x, y, w = _ellipse_nodes(tau)
    a, b = ellipse_axes(tau)
    area_avg = math.fsum((w * f(x + 1j * y)).ravel()) / (math.pi * a * b)
    bnd_avg = float(np.mean(f(ellipse_boundary(tau))))
    return area_avg - bnd_avg


def ginue_global_covariance(f, g, beta: float = 2.0, tau: float = 0.0,
                            kappa4: float = 0.0) -> Prediction:
    """(1/(2 pi beta)) int grad f . grad g + (1/beta) sum |n| f_n g_{-n} + kappa4 term."""
    if not beta > 0:
        raise InputError("beta must be positive")
    area = area_gradient_term(f, g, tau) / (2 * math.pi * beta)
    bnd = boundary_term(f, g, tau) / beta
    k4 = 0.0
    if kappa4:
        k4 = kappa4 * _disk_minus_boundary_average(f, tau) * _disk_minus_boundary_average(g, tau)
    extras = {"area": area, "boundary": bnd, "kappa4_term": k4}
    return Prediction(area + bnd + k4, "global_limit", "5.2e" if not kappa4 else "5.2f",
                      {"beta": beta, "tau": tau, "kappa4": kappa4}, extras=extras)


def radial_variance_ginue(h_prime) -> Prediction:
    """(1/2) int_0^1 r h'(r)^2 dr."""
    v, _ = integrate.quad(lambda r: r * h_prime(r) ** 2, 0, 1, epsabs=1e-13, epsrel=1e-12)
    return Prediction(0.5 * v, "global_limit", "3.69a", {})


def linear_elliptic_variance(c10: float, c01: float, beta: float = 2.0, tau: float = 0.0,
                             variant: str = "gradient") -> Prediction:
    """Variance of c10 x + c01 y.

    ``variant="gradient"`` (the default) divides by beta. It is the variance
    implied by the Gaussian characteristic function
    exp(-t^2 (c10^2 (1+tau) + c01^2 (1-tau)) / (2 beta)), agrees with the
    area-plus-boundary formula on the ellipse and with the exact Gaussian
    moment computation. ``variant="quoted"`` divides by 2 beta.
    """
    if variant not in ("gradient", "quoted"):
        raise InputError(f"unknown variant {variant!r}")
    num = c10**2 * (1 + tau) + c01**2 * (1 - tau)
    div = 2 * beta if variant == "quoted" else beta
    return Prediction(num / div, "finite_N", "5.1z",
                      {"c10": c10, "c01": c01, "beta": beta, "tau": tau, "variant": variant})


def disk_overlap(r, R: float):
    """Fraction alpha(r/R) of the disk of radius R overlapping its translate by r."""
    x = np.asarray(r, dtype=float) / (2 * R)
    xc = np.clip(x, 0, 1)
    out = (2 / np.pi) * (np.arccos(xc) - xc * np.sqrt(1 - xc * xc))
    out = np.where(x >= 1, 0.0, out)
    return float(out) if out.ndim == 0 else out


def ginue_disk_variance_bulk(R: float) -> float:
    """Bulk (N -> infinity) count variance for a disk of radius R, density 1/pi.

    Var = R^2 - (R^2 / pi) int_0^{2R} e^{-r^2} alpha(r/R) 2 pi r dr.
    """
    v, _ = integrate.quad(lambda r: math.exp(-r * r) * disk_overlap(r, R) * 2 * math.pi * r,
                          0, min(2 * R, 40.0), epsabs=1e-13, epsrel=1e-12, limit=400)
    return R * R - R * R / math.pi * v


def ginue_disk_counting(R: float) -> Prediction:
    """Large-R count variance R / sqrt(pi) for a disk of radius R (density 1/pi)."""
    if not R > 0:
        raise InputError("R must be positive")
    return Prediction(R / math.sqrt(math.pi), "asymptote", "xr1", {"R": R},
                      extras={"slope": 1 / math.sqrt(math.pi),
                              "bulk_exact": ginue_disk_variance_bulk(R)})

