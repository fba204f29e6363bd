"""Loop-equation resolvents and covariance formulas for interval-supported ensembles.

Coordinates are global: the Gaussian ensemble lives on (-1, 1), Laguerre on
(c, d) = ((1 - sqrt(1+alpha))^2, (1 + sqrt(1+alpha))^2), Jacobi on the
Wachter interval inside (0, 1), and the squared product of two GinUE
matrices on (0, 27/4).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import integrate, optimize

from .basis import (DomainError, Indicator, InputError, Polynomial, chebyshev_coeffs)
from .exact._prediction import Divergence, Prediction, divergent

MODELS = ("Gaussian_beta", "Laguerre_beta", "Jacobi_beta", "Wigner", "GinibreProductSquared")
PRODUCT_EDGE = 27.0 / 4.0


class SingularityError(ArithmeticError):
    """Evaluation at a pole or branch point."""


class ConditioningWarning(RuntimeWarning):
    """Evaluation close to a branch point."""


def wachter_endpoints(gamma1: float, gamma2: float):
    """Support (c, d) of the Jacobi density with exponents gamma1, gamma2."""
    s = gamma1 + gamma2 + 2
    a = math.sqrt((gamma1 + 1) / s * (1 - 1 / s))
    b = math.sqrt(1 / s * (1 - (gamma1 + 1) / s))
    return (a - b) ** 2, (a + b) ** 2


@dataclass(frozen=True)
class ResolventModel:
    model: str = "Gaussian_beta"
    beta: float = 2.0
    alpha: float = 0.0
    gamma1: float = 0.0
    gamma2: float = 0.0
    sigma2: float | None = None
    beta_tilde: float = 0.0
    phi: float | None = None
    m4: float | None = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise InputError(f"unknown model {self.model!r}")
        if not self.beta > 0:
            raise InputError("beta must be positive")
        if self.model == "Laguerre_beta" and not self.alpha > -1:
            raise InputError("Laguerre needs alpha > -1")
        if self.model == "Jacobi_beta" and not (self.gamma1 > -1 and self.gamma2 > -1):
            raise InputError("Jacobi needs gamma1, gamma2 > -1")
        if self.model == "Wigner" and self.phi is not None and self.m4 is None:
            raise InputError("the Phi-dependent Wigner formula needs the fourth moment m4")

    # convenience constructors
    @classmethod
    def gaussian(cls, beta=2.0):
        return cls("Gaussian_beta", beta)

    @classmethod
    def laguerre(cls, alpha=0.0, beta=2.0):
        return cls("Laguerre_beta", beta, alpha=alpha)

    @classmethod
    def jacobi(cls, gamma1=0.0, gamma2=0.0, beta=2.0):
        return cls("Jacobi_beta", beta, gamma1=gamma1, gamma2=gamma2)

    @classmethod
    def wigner(cls, sigma2, beta_tilde=0.0, kappa=0.5, phi=None, m4=None):
        return cls("Wigner", 2.0 * kappa, sigma2=sigma2, beta_tilde=beta_tilde, phi=phi, m4=m4)

    @classmethod
    def product_squared(cls):
        return cls("GinibreProductSquared", 2.0)

    @property
    def kappa(self) -> float:
        return self.beta / 2

    @property
    def support(self):
        if self.model == "Laguerre_beta":
            r = math.sqrt(1 + self.alpha)
            return (1 - r) ** 2, (1 + r) ** 2
        if self.model == "Jacobi_beta":
            return wachter_endpoints(self.gamma1, self.gamma2)
        if self.model == "GinibreProductSquared":
            return 0.0, PRODUCT_EDGE
        return -1.0, 1.0

    @property
    def affine(self):
        c, d = self.support
        return (c + d) / 2, (d - c) / 2

    def params(self) -> dict:
        out = {"model": self.model, "beta": self.beta}
        if self.model == "Laguerre_beta":
            out["alpha"] = self.alpha
        if self.model == "Jacobi_beta":
            out.update(gamma1=self.gamma1, gamma2=self.gamma2)
        if self.model == "Wigner":
            out.update(sigma2=self.sigma2, beta_tilde=self.beta_tilde, phi=self.phi, m4=self.m4)
        return out


# ---------------------------------------------------------------------------
# Resolvents
# ---------------------------------------------------------------------------

def _cut_sqrt(x, c=-1.0, d=1.0):
    """sqrt((x-c)(x-d)) with the cut on [c, d], positive for x > d."""
    x = np.asarray(x, dtype=np.complex128)
    return np.sqrt(x - c) * np.sqrt(x - d)


def _realify(v, x):
    if np.isrealobj(x) and np.all(np.abs(np.imag(v)) <= 1e-12 * (1 + np.abs(v))):
        v = np.real(v)
    return v[()] if np.ndim(v) == 0 else v


def semicircle_m(x):
    """m(x) = x - sqrt(x^2 - 1), the inverse Joukowski variable (m ~ 1/(2x))."""
    # x - s = 1/(x + s) avoids cancellation for large |x|
    return 1 / (x + _cut_sqrt(x))


def resolvent_gaussian(x, order: int = 0, kappa: float = 1.0):
    """Leading (order 0) and first correction (order 1) of the Gaussian resolvent."""
    xa = np.asarray(x)
    if np.isrealobj(xa) and np.any(np.abs(xa) < 1):
        raise DomainError("real evaluation requires |x| >= 1")
    s = _cut_sqrt(xa)
    if order == 0:
        return _realify(2 / (xa + s), x)
    if order == 1:
        if np.any(s == 0):
            raise SingularityError("order-1 resolvent is singular at x = +-1")
        v = 0.5 * (1 - 1 / kappa) * (1 / s - xa / (s * s))
        return _realify(v, x)
    raise InputError("order must be 0 or 1")


def _check_pair(x, y):
    if np.any(np.asarray(x) == np.asarray(y)):
        raise SingularityError("x = y")


def w20_one_cut(x, y, c, d, beta):
    """Universal one-interval two-point resolvent on (c, d)."""
    _check_pair(x, y)
    xa, ya = np.asarray(x, dtype=np.complex128), np.asarray(y, dtype=np.complex128)
    num = xa * ya - (c + d) * (xa + ya) / 2 + c * d
    root = _cut_sqrt(xa, c, d) * _cut_sqrt(ya, c, d)
    v = (2 / beta) * (num / (2 * (xa - ya) ** 2 * root) - 1 / (2 * (xa - ya) ** 2))
    return _realify(v, np.asarray(x) if np.isrealobj(y) else ya)


def w20_gaussian(x, y, beta=2.0, form="L2b"):
    """Gaussian W_{2,0}; ``form="3.36"`` uses (2/beta) m'(x) m'(y) / (1 - m(x) m(y))^2."""
    if form == "L2b":
        return w20_one_cut(x, y, -1.0, 1.0, beta)
    if form == "3.36":
        _check_pair(x, y)
        xa, ya = np.asarray(x, dtype=np.complex128), np.asarray(y, dtype=np.complex128)
        mx, my = semicircle_m(xa), semicircle_m(ya)
        dmx, dmy = 1 - xa / _cut_sqrt(xa), 1 - ya / _cut_sqrt(ya)
        return _realify((2 / beta) * dmx * dmy / (1 - mx * my) ** 2, np.asarray(x))
    raise InputError(f"unknown form {form!r}")


def w20_wigner(x, y, sigma2, beta_tilde, kappa):
    """Wigner W_{2,0}: extra sigma^2 and fourth-cumulant terms on top of the Gaussian one."""
    _check_pair(x, y)
    xa, ya = np.asarray(x, dtype=np.complex128), np.asarray(y, dtype=np.complex128)
    mx, my = semicircle_m(xa), semicircle_m(ya)
    dmx, dmy = 1 - xa / _cut_sqrt(xa), 1 - ya / _cut_sqrt(ya)
    v = dmx * dmy * (sigma2 - 1 / kappa + 2 * beta_tilde * mx * my + (1 / kappa) / (1 - mx * my) ** 2)
    return _realify(v, np.asarray(x))


def cubic_resolvent_g2(x):
    """Root of x^2 W^3 - x W + 1 = 0 with W ~ 1/x at infinity.

    The branch is followed by continuation from a large real point, along an
    arc of large radius and then radially, which never crosses the cut.
    """
    x = complex(x)
    if x.imag == 0 and 0 <= x.real <= PRODUCT_EDGE:
        raise DomainError("x lies on the support cut [0, 27/4]")
    if abs(4 * x - 27) < 1e-6 * 27 or abs(x) < 1e-8:
        warnings.warn("evaluation near a branch point", ConditioningWarning, stacklevel=2)
    R = max(100.0, 10 * abs(x))
    phi = math.atan2(x.imag, x.real)
    path = np.concatenate([R * np.exp(1j * np.linspace(0, phi, 200)),
                           np.exp(1j * phi) * np.geomspace(R, abs(x), 400)[1:]])
    w = 1 / path[0] + 1 / path[0] ** 2
    for p in path:
        r = np.roots([p * p, 0, -p, 1])
        w = r[np.argmin(np.abs(r - w))]
    # polish on the final point
    for _ in range(3):
        f = x * x * w**3 - x * w + 1
        w -= f / (3 * x * x * w * w - x)
    return complex(w)


def _product_z(x):
    """Exterior uniformiser: x = (z+1)^3 / z^2 with z ~ x at infinity."""
    w = cubic_resolvent_g2(x)
    return 1 / (x * w - 1)


def w20_product(x, y):
    """d^2/dxdy log((z(x) - z(y)) / (x - y)) for the squared GinUE product (beta = 2)."""
    if x == y:
        raise SingularityError("x = y")
    zx, zy = _product_z(x), _product_z(y)
    dj = lambda z: (z + 1) ** 2 * (z - 2) / z**3  # noqa: E731
    v = (1 / dj(zx)) * (1 / dj(zy)) / (zx - zy) ** 2 - 1 / (complex(x) - complex(y)) ** 2
    return v.real if np.isreal(x) and np.isreal(y) else v


def w20(model: ResolventModel, x, y):
    if model.model in ("Gaussian_beta", "Laguerre_beta", "Jacobi_beta"):
        c, d = model.support
        return w20_one_cut(x, y, c, d, model.beta)
    if model.model == "Wigner":
        s2 = 2 / model.beta if model.sigma2 is None else model.sigma2
        return w20_wigner(x, y, s2, model.beta_tilde, model.kappa)
    return w20_product(x, y)


# ---------------------------------------------------------------------------
# Smoothed two-point function
# ---------------------------------------------------------------------------

def smoothed_rho2T(model: ResolventModel, x, y, variant: str = "corrected"):
    """Smoothed limiting truncated two-point function on the support.

    For one-interval beta ensembles the value is
    -(1/(beta pi^2)) (-cd + (c+d)(x+y)/2 - xy) / (sqrt((x-c)(d-x)(y-c)(d-y)) (x-y)^2),
    which reduces to the Gaussian kernel at (c, d) = (-1, 1).
    ``variant="printed"`` drops the square root and the (x-y)^2 factor as the
    Laguerre expression is sometimes quoted; it does not match the inverse
    transform of W_{2,0}.
    """
    if model.model == "GinibreProductSquared":
        raise InputError("no closed smoothed correlator for the product model")
    c, d = model.support
    xa, ya = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if np.any((xa <= c) | (xa >= d) | (ya <= c) | (ya >= d)):
        raise DomainError("x, y must lie strictly inside the support")
    _check_pair(xa, ya)
    num = -c * d + (c + d) * (xa + ya) / 2 - xa * ya
    px, py = (xa - c) * (d - xa), (ya - c) * (d - ya)
    if variant == "printed":
        v = -num / (model.beta * math.pi**2 * px * py)
    else:
        v = -num / (model.beta * math.pi**2 * np.sqrt(px * py) * (xa - ya) ** 2)
    if model.model == "Wigner":
        s2 = 2 / model.beta if model.sigma2 is None else model.sigma2
        sx, sy = np.sqrt(1 - xa * xa), np.sqrt(1 - ya * ya)
        sep = 4 * (s2 - 2 / model.beta) * xa * ya + 8 * model.beta_tilde * (1 - 2 * xa * xa) * (1 - 2 * ya * ya)
        v = v + sep / (4 * math.pi**2 * sx * sy)
    return v[()] if np.ndim(v) == 0 else v


def inverse_stieltjes_2pt(w, x, y, eps=1e-6):
    """-(1/4pi^2) sum_{s,t=+-} s t W(x + i s eps, y + i t eps), Richardson-extrapolated in eps."""
    def at(e):
        tot = 0.0
        for s in (1, -1):
            for t in (1, -1):
                tot += s * t * complex(w(x + 1j * s * e, y + 1j * t * e))
        return -(tot / (4 * math.pi**2)).real
    return 2 * at(eps / 2) - at(eps)


def covariance_from_rho2T(model: ResolventModel, f, g, n: int = 160, df=None, dg=None):
    """-(1/2) int int (f(x)-f(y))(g(x)-g(y)) rho2T(x,y) dx dy on the support.

    Uses x = a1 + a2 cos(theta), which removes the endpoint square roots; the
    diagonal uses the derivative limit of the divided differences.
    """
    a1, a2 = model.affine
    t, wt = np.polynomial.legendre.leggauss(n)
    th = 0.5 * math.pi * (t + 1)
    wt = 0.5 * math.pi * wt
    x = a1 + a2 * np.cos(th)
    X, Y = np.meshgrid(x, x, indexing="ij")
    diff = X - Y
    on = np.eye(n, dtype=bool)
    safe = np.where(on, 1.0, diff)
    fx, gx = np.asarray(f(x), float), np.asarray(g(x), float)
    dfx = _derivative(f, x, df)
    dgx = _derivative(g, x, dg)
    qf = np.where(on, dfx[:, None], (fx[:, None] - fx[None, :]) / safe)
    qg = np.where(on, dgx[:, None], (gx[:, None] - gx[None, :]) / safe)
    # rho2T * dx dy * (x - y)^2 in theta variables
    c, d = model.support
    num = -c * d + (c + d) * (X + Y) / 2 - X * Y
    kern = -num / (model.beta * math.pi**2)  # sqrt factors cancel against dx dy
    if model.model == "Wigner":
        s2 = 2 / model.beta if model.sigma2 is None else model.sigma2
        sep = 4 * (s2 - 2 / model.beta) * X * Y + 8 * model.beta_tilde * (1 - 2 * X * X) * (1 - 2 * Y * Y)
        kern = kern + sep * diff**2 / (4 * math.pi**2)
    integrand = -0.5 * qf * qg * kern
    return float(math.fsum((integrand * np.outer(wt, wt)).ravel()))


def _derivative(f, x, df):
    if df is not None:
        return np.asarray(df(x), float)
    if isinstance(f, Polynomial):
        return np.polynomial.polynomial.polyval(x, np.polynomial.polynomial.polyder(f.coeffs))
    h = 1e-5 * max(1.0, float(np.max(np.abs(x))))
    return (np.asarray(f(x + h), float) - np.asarray(f(x - h), float)) / (2 * h)


# ---------------------------------------------------------------------------
# Covariances of linear statistics
# ---------------------------------------------------------------------------

def _theta_endpoints(ind: Indicator, a1, a2):
    """theta-images of the interior endpoints of an indicator, with signs."""
    out = []
    for e, sgn in ((ind.a, -1.0), (ind.b, 1.0)):
        t = (e - a1) / a2
        if -1 < t < 1:
            # x increases as theta decreases, so the sign flips
            out.append((math.acos(t), -sgn))
    return out


def _indicator_pair(f: Indicator, g: Indicator, model: ResolventModel, allow_divergent):
    a1, a2 = model.affine
    ef, eg = _theta_endpoints(f, a1, a2), _theta_endpoints(g, a1, a2)
    # theta-indicator coefficients: (sin(n u_hi) - sin(n u_lo))/(pi n)
    total, coincide = 0.0, 0
    for u, su in ef:
        for v, sv in eg:
            if abs(u - v) < 1e-14:
                coincide += 1
                total += su * sv * 0.5 * math.log(abs(2 * math.sin(u)))
                continue
            total += su * sv * 0.5 * (-math.log(abs(2 * math.sin((u - v) / 2)))
                                      + math.log(abs(2 * math.sin((u + v) / 2))))
    value = (2 / model.beta) * total / math.pi**2
    params = model.params()
    if coincide:
        rate = coincide / (math.pi**2 * model.beta)
        return divergent(Divergence(rate, "N", "log", "G6d"), "4.1a", params, allow_divergent)
    return Prediction(value, "global_limit", "4.1a", params)


def _weights(model: ResolventModel, n):
    n = np.asarray(n, dtype=float)
    if model.model != "Wigner":
        return (2 / model.beta) * n
    s2 = 2 / model.beta if model.sigma2 is None else model.sigma2
    if model.phi is None:
        w = (2 / model.beta) * n
        w = np.where(n == 1, w + (s2 - 2 / model.beta), w)
        return np.where(n == 2, w + 2 * model.beta_tilde, w)
    phi = model.phi
    w = n * (1 + phi**n)
    w = np.where(n == 1, s2, w)
    return np.where(n == 2, w + 2 * (model.m4 - phi**2 - 2), w)


def interval_covariance(f, g, model: ResolventModel, n_max: int = 512,
                        allow_divergent: bool = False) -> Prediction:
    """Limiting covariance (2/beta) sum n f_n^c g_n^c, with Wigner corrections."""
    params = model.params()
    if model.model == "GinibreProductSquared":
        if not (isinstance(f, Polynomial) and isinstance(g, Polynomial)):
            raise InputError("the product model takes polynomial statistics")
        return product_covariance_lambert(f.coeffs, g.coeffs, 2)
    if isinstance(f, Indicator) and isinstance(g, Indicator) and model.model != "Wigner":
        return _indicator_pair(f, g, model, allow_divergent)
    c, d = model.support
    if isinstance(f, Polynomial) and isinstance(g, Polynomial):
        n_max = max(f.degree, g.degree, 2)
    fc = chebyshev_coeffs(f, c, d, n_max).values.real
    gc = chebyshev_coeffs(g, c, d, n_max).values.real
    n = np.arange(1, n_max + 1)
    terms = _weights(model, n) * fc[1:] * gc[1:]
    if model.model == "Wigner":
        formula = "3.36d" if model.phi is None else "3.36d1"
    else:
        formula = "4.1a" if model.model == "Gaussian_beta" else "r.1bY"
    return Prediction(math.fsum(terms), "global_limit", formula, params)


# ---------------------------------------------------------------------------
# Monomial covariances
# ---------------------------------------------------------------------------

def _gaussian_monomial_exact(k1: int, k2: int, variant: str = "corrected") -> Fraction:
    """beta/2 times the limiting Gaussian Cov(sum x^k1, sum x^k2), as a rational."""
    if (k1 - k2) % 2:
        return Fraction(0)
    if k1 == 0 or k2 == 0:
        return Fraction(0)
    f = math.factorial
    if k1 % 2 == 0:
        a, b = k1 // 2, k2 // 2
        v = Fraction(f(2 * a) * f(2 * b), f(a) ** 2 * f(b) ** 2) * Fraction(a * b, a + b)
        return v / 2 ** (2 * a + 2 * b)
    a, b = (k1 - 1) // 2, (k2 - 1) // 2
    tail = Fraction(a * b, a + b + 1) if variant == "printed" else Fraction(1, a + b + 1)
    v = Fraction(f(2 * a + 1) * f(2 * b + 1), f(a) ** 2 * f(b) ** 2) * tail
    return v / 2 ** (2 * a + 2 * b + 2)


def _binomial_shift(k1, k2, a1, a2, beta):
    tot = []
    for p in range(k1 + 1):
        for q in range(k2 + 1):
            mu = float(_gaussian_monomial_exact(p, q))
            if mu:
                tot.append(math.comb(k1, p) * math.comb(k2, q) * a1 ** (k1 - p) * a1 ** (k2 - q)
                           * a2 ** (p + q) * mu)
    return (2 / beta) * math.fsum(tot)


def laguerre_alpha0_closed(k1: int, k2: int, beta: float, variant: str = "corrected") -> float:
    """Closed form of the alpha = 0 Laguerre monomial covariance.

    ``corrected``: (4/beta) k1 k2/(k1+k2) C(2k1-1,k1) C(2k2-1,k2), which equals
    the binomial double sum. ``quoted``: the same with 4 k1 k2 replaced by
    2^(k1+k2+2).
    """
    pref = 4.0 * k1 * k2 if variant == "corrected" else 2.0 ** (k1 + k2 + 2)
    return pref / beta / (k1 + k2) * math.comb(2 * k1 - 1, k1) * math.comb(2 * k2 - 1, k2)


def product_monomial(k1: int, k2: int) -> Fraction:
    return Fraction(2 * k1 * k2, 3 * (k1 + k2)) * math.comb(3 * k1, k1) * math.comb(3 * k2, k2)


def monomial_covariance(k1: int, k2: int, model: ResolventModel | str = "Gaussian_beta",
                        beta: float | None = None, variant: str = "corrected") -> Prediction:
    """Limiting Cov(sum x^k1, sum x^k2)."""
    if isinstance(model, str):
        model = ResolventModel(model, 2.0 if beta is None else beta)
    elif beta is not None and beta != model.beta:
        raise InputError("beta given twice with different values")
    if k1 < 1 or k2 < 1:
        raise InputError("k1, k2 >= 1")
    b = model.beta
    params = {**model.params(), "k1": k1, "k2": k2}
    if model.model == "Gaussian_beta":
        exact = _gaussian_monomial_exact(k1, k2, variant)
        return Prediction((2 / b) * float(exact), "global_limit", "Gm", params,
                          extras={"beta_over_2_times_value": str(exact), "variant": variant})
    if model.model == "GinibreProductSquared":
        v = product_monomial(k1, k2)
        return Prediction(float(v), "global_limit", "3.37", params, extras={"exact": str(v)})
    if model.model in ("Laguerre_beta", "Jacobi_beta"):
        a1, a2 = model.affine
        v = _binomial_shift(k1, k2, a1, a2, b)
        extras = {}
        if model.model == "Laguerre_beta" and model.alpha == 0:
            extras["alpha0_closed"] = laguerre_alpha0_closed(k1, k2, b)
            extras["alpha0_closed_quoted"] = laguerre_alpha0_closed(k1, k2, b, "quoted")
        if model.model == "Jacobi_beta" and model.gamma1 == 0 and model.gamma2 == 0:
            lag = _binomial_shift(k1, k2, 2.0, 2.0, b)
            extras["from_laguerre_4pow"] = 4.0 ** (-k1 - k2) * lag
            extras["from_laguerre_quoted"] = 2.0 ** (-k1 - k2) * lag
        return Prediction(v, "global_limit", "s.1bW", params, extras=extras)
    raise InputError("monomial covariance not available for this model")


# ---------------------------------------------------------------------------
# Finite-N exact laws
# ---------------------------------------------------------------------------

def gaussian_finite_variance(power: int, N: int, beta: float) -> Prediction:
    """Exact finite-N variance of sum x and sum x^2 for the weight e^{-beta N x^2}."""
    if power == 1:
        v = 1 / (2 * beta)
    elif power == 2:
        v = (N + beta * N * (N - 1) / 2) / (2 * beta**2 * N**2)
    else:
        raise InputError("power must be 1 or 2")
    return Prediction(v, "finite_N", "L2cz", {"power": power, "N": N, "beta": beta})


def laguerre_finite_variance(N: int, beta: float, alpha: float | None = None) -> Prediction:
    """Exact finite-N Var sum x for the weight x^{alpha beta N/2} e^{-beta N x/2}.

    With ``alpha=None`` the exponent is the literal one, which corresponds to
    alpha = 1. Otherwise the general-alpha exponent is used.
    """
    a = 1.0 if alpha is None else alpha
    shape = N * (1 + a * beta * N / 2) + beta * N * (N - 1) / 2
    v = 4 * shape / (N * beta) ** 2
    return Prediction(v, "finite_N", "r.1bZ", {"N": N, "beta": beta, "alpha": a,
                                               "literal": alpha is None})


# ---------------------------------------------------------------------------
# Hard edge
# ---------------------------------------------------------------------------

def _hat_s(F, k):
    h = lambda u: F(u * u)  # noqa: E731
    if k == 0:
        return 2 * integrate.quad(h, 0, np.inf, limit=400)[0]
    return 2 * integrate.quad(h, 0, np.inf, weight="cos", wvar=k, limlst=200)[0]


def _hat_e(F, k, x_lo=-60.0, x_hi=None):
    """int e^{ikx} (F(e^x) - F(0) [x<0]) dx + F(0)/(ik) for k != 0."""
    x_hi = math.log(1e8) if x_hi is None else x_hi
    F0 = F(0.0)
    g_lo = lambda x: F(math.exp(x)) - F0  # noqa: E731
    g_hi = lambda x: F(math.exp(x))  # noqa: E731
    re = (integrate.quad(g_lo, x_lo, 0, weight="cos", wvar=k, limit=400)[0]
          + integrate.quad(g_hi, 0, x_hi, weight="cos", wvar=k, limit=400)[0])
    im = (integrate.quad(g_lo, x_lo, 0, weight="sin", wvar=k, limit=400)[0]
          + integrate.quad(g_hi, 0, x_hi, weight="sin", wvar=k, limit=400)[0])
    return complex(re, im) + F0 / (1j * k)


def hard_edge_form(F, G, beta: float, form: str, k_max: float = 40.0):
    """One of the three hard-edge representations, evaluated by quadrature."""
    if form == "4.1aZ1":
        fs = lambda k: _hat_s(F, k)  # noqa: E731
        gs = fs if G is F else (lambda k: _hat_s(G, k))
        v, _ = integrate.quad(lambda k: 2 * k * fs(k) * gs(k), 0, k_max, limit=200)
        return v / (beta * 4 * math.pi**2)
    if form == "4.1aX":
        # sym. in (X, Y): Y = X s^2, s in (0,1)
        def inner(X):
            def h(s):
                om = 1 - s * s
                if om == 0:
                    return 0.0
                dF = F(X) - F(X * s * s)
                dG = G(X) - G(X * s * s)
                return 4 * dF * dG * (1 + s * s) / (X * om * om)
            return integrate.quad(h, 0, 1, limit=200, epsabs=1e-13)[0]
        # the X integral near 0 behaves like X; split at 1 for accuracy
        v = (integrate.quad(inner, 0, 1, limit=200, epsabs=1e-12)[0]
             + integrate.quad(inner, 1, np.inf, limit=400, epsabs=1e-12)[0])
        return v / (beta * 4 * math.pi**2)
    if form == "4.1aZ":
        def h(k):
            if k == 0:
                k = 1e-9
            return (_hat_e(F, k) * _hat_e(G, -k)).real * k * math.tanh(math.pi * k)
        v, _ = integrate.quad(h, 0, k_max, limit=200)
        return 2 * v / (beta * math.pi**2)
    raise InputError(f"unknown form {form!r}")


def hard_edge_covariance(F, G=None, beta: float = 2.0, cross_check: bool = False) -> Prediction:
    """Half-line scaled covariance at the soft-to-hard edge x = -1.

    The main value uses the |k| form with F^s(k) = int F(x^2) e^{ikx} dx.
    ``cross_check=True`` also evaluates the (X, Y) double integral and the
    Mellin-type form; the latter carries an extra factor 2 as quoted, so its
    halved value is reported next to it.
    """
    G = F if G is None else G
    params = {"beta": beta}
    if not callable(F) or not callable(G):
        # a constant statistic has vanishing differences
        return Prediction(0.0, "global_limit", "4.1aZ1", params)
    v = hard_edge_form(F, G, beta, "4.1aZ1")
    if not math.isfinite(v):
        raise ArithmeticError("hard-edge quadrature did not converge")
    extras = {}
    if cross_check:
        extras["4.1aX"] = hard_edge_form(F, G, beta, "4.1aX")
        z = hard_edge_form(F, G, beta, "4.1aZ")
        extras["4.1aZ_quoted"] = z
        extras["4.1aZ_halved"] = z / 2
    return Prediction(v, "global_limit", "4.1aZ1", params, extras=extras)


# ---------------------------------------------------------------------------
# Restricted sums and submatrices
# ---------------------------------------------------------------------------

def semicircle_fraction_above(c: float) -> float:
    """(2/pi) int_c^1 sqrt(1 - x^2) dx."""
    return (math.acos(c) - c * math.sqrt(1 - c * c)) / math.pi


def restricted_threshold(gamma: float) -> float:
    if not 0 < gamma <= 1:
        raise InputError("gamma must lie in (0, 1]")
    if gamma == 1:
        return -1.0
    return optimize.bisect(lambda c: semicircle_fraction_above(c) - gamma, -1.0, 1.0,
                           xtol=1e-14, maxiter=200)


def g6f_value(c: float) -> float:
    A = math.acos(c)
    r = math.sqrt(1 - c * c)
    return (3 * c**4 - 4 * c**3 * r * A + c * c * (-7 + 2 * c * r * A) + 4 + A * A) / (8 * math.pi**2)


G6H_VALUE = (1 + 16 / math.pi**2) / 16


def restricted_series(c: float, n_max: int = 200000) -> float:
    """sum n (f_n^c)^2 for f_c = (x^2 - c^2) [x > c] on (-1, 1), i.e. the beta = 2 value."""
    A = math.acos(c)
    n = np.arange(1, n_max + 1, dtype=float)

    def s(m):
        m = np.asarray(m, float)
        mz = np.where(m == 0, 1.0, m)
        return np.where(m == 0, A, np.sin(mz * A) / mz)

    coef = ((0.5 - c * c) * s(n) + 0.25 * (s(n + 2) + s(np.abs(n - 2)))) / math.pi
    return math.fsum(n * coef * coef)


def restricted_gaussian_variance(gamma: float, beta: float = 2.0) -> Prediction:
    """Limiting variance of the sum of x_j^2 over the top K ~ gamma N eigenvalues."""
    c = restricted_threshold(gamma)
    v = g6f_value(c) * 2 / beta
    extras = {"c": c, "series_check": restricted_series(c) * 2 / beta}
    if abs(c) < 1e-12:
        extras["g6h_value"] = G6H_VALUE * 2 / beta
        extras["ratio_g6h_over_g6f"] = G6H_VALUE / g6f_value(0.0)
    return Prediction(v, "global_limit", "G6f", {"gamma": gamma, "beta": beta}, extras=extras)


def submatrix_covariance(k_p: int, k_q: int, b_p: float, b_q: float, c_pq: float,
                         beta: float = 2.0) -> Prediction:
    if not (0 < b_p <= 1 and 0 < b_q <= 1 and 0 < c_pq <= min(b_p, b_q)):
        raise InputError("need 0 < c_pq <= min(b_p, b_q) <= 1")
    v = 0.0 if k_p != k_q else k_p / (2 * beta) * (c_pq / math.sqrt(b_p * b_q)) ** k_p
    return Prediction(v, "global_limit", "G6i",
                      {"k_p": k_p, "k_q": k_q, "b_p": b_p, "b_q": b_q, "c_pq": c_pq, "beta": beta})


# ---------------------------------------------------------------------------
# Products of Ginibre matrices
# ---------------------------------------------------------------------------

def _rational(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    return Fraction(float(x))


def _laurent_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for i, u in a.items():
        for j, v in b.items():
            out[i + j] = out.get(i + j, 0) + u * v
    return {k: v for k, v in out.items() if v != 0}


def lambert_laurent(p: Sequence, M: int, gammas: Sequence) -> dict:
    """Laurent coefficients of p(z^{-M} prod_{l=0}^{M} (z + gamma_l)), exact."""
    if M < 1 or len(gammas) != M + 1:
        raise InputError("gammas must have M + 1 entries")
    J = {-M: Fraction(1)}
    for g in gammas:
        J = _laurent_mul(J, {1: Fraction(1), 0: _rational(g)})
    out: dict = {}
    power = {0: Fraction(1)}
    for a in p:
        a = _rational(a)
        if a:
            for k, v in power.items():
                out[k] = out.get(k, 0) + a * v
        power = _laurent_mul(power, J)
    return out


def product_covariance_lambert(p: Sequence, q: Sequence, M: int = 2,
                               gammas: Sequence | None = None) -> Prediction:
    """(1/2) sum_{k>=1} k (C_k D_{-k} + D_k C_{-k}) for polynomials p, q (ascending)."""
    gammas = [1] * (M + 1) if gammas is None else list(gammas)
    C = lambert_laurent(p, M, gammas)
    D = C if q is p else lambert_laurent(q, M, gammas)
    exact = sum((Fraction(k, 2) * (C.get(k, 0) * D.get(-k, 0) + D.get(k, 0) * C.get(-k, 0))
                 for k in set(C) | set(D) if k > 0), Fraction(0))
    return Prediction(float(exact), "global_limit", "3.37a",
                      {"M": M, "gammas": [float(g) for g in gammas],
                       "p": [float(a) for a in p], "q": [float(a) for a in q]},
                      extras={"exact": str(exact)})


def product_variance_lambert(p: Sequence, M: int = 2, gammas: Sequence | None = None) -> Prediction:
    """sum_{k>=1} k C_k C_{-k}; p holds ascending polynomial coefficients."""
    return product_covariance_lambert(p, p, M, gammas)


def lambert_identity(l: int):
    """Both sides of sum_k k C(3l,2l+k) C(3l,2l-k) = (l/3) C(3l,l)^2 as exact rationals."""
    lhs = sum(k * math.comb(3 * l, 2 * l + k) * math.comb(3 * l, 2 * l - k) for k in range(1, l + 1))
    return Fraction(lhs), Fraction(l, 3) * math.comb(3 * l, l) ** 2


# ---------------------------------------------------------------------------
# High temperature limits
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _assoc_hermite(n: int, alpha: float):
    P = np.polynomial.polynomial
    prev, cur = np.array([1.0]), np.array([0.0, 1.0])
    if n == 0:
        return prev
    for j in range(1, n):
        prev, cur = cur, P.polysub(P.polymulx(cur), (j + alpha) * prev)
    return cur


@lru_cache(maxsize=None)
def _assoc_laguerre(n: int, alpha1: float, alpha: float):
    P = np.polynomial.polynomial
    prev, cur = np.array([1.0]), np.array([-(alpha + 2 * alpha1 + 1), 1.0])
    if n == 0:
        return prev
    for j in range(1, n):
        nxt = P.polysub(P.polysub(P.polymulx(cur), (alpha + 2 * alpha1 + 2 * j + 1) * cur),
                        (alpha + alpha1 + j) * (alpha1 + j) * prev)
        prev, cur = cur, nxt
    return cur


def associated_polynomial(n: int, alpha: float, family: str = "Hermite", alpha1: float = 1.0,
                          antiderivative: bool = False) -> Polynomial:
    """p_n (or P_n = int^x p_n) from the three-term recurrences, ascending coefficients."""
    if n < 0:
        raise InputError("n >= 0")
    if family == "Hermite":
        c = _assoc_hermite(n, float(alpha))
    elif family == "Laguerre":
        c = _assoc_laguerre(n, float(alpha1), float(alpha))
    else:
        raise InputError(f"unknown family {family!r}")
    if antiderivative:
        c = np.polynomial.polynomial.polyint(c)
    return Polynomial(np.array(c, dtype=float))


def high_temperature_covariance(m: int, n: int, alpha: float, alpha1: float = 1.0,
                                family: str = "Hermite") -> Prediction:
    """Limit of Cov(P_m, P_n)/N at beta = 2 alpha / N."""
    if m < 0 or n < 0:
        raise InputError("m, n >= 0")
    if not alpha >= 0:
        raise InputError("alpha >= 0")
    params = {"m": m, "n": n, "alpha": alpha, "family": family}
    if m != n:
        return Prediction(0.0, "global_limit", "G6p" if family == "Hermite" else "L6p", params)
    if family == "Hermite":
        v = math.prod(alpha + j for j in range(1, n + 1)) / (n + 1)
        return Prediction(v, "global_limit", "G6p", params)
    if family == "Laguerre":
        params["alpha1"] = alpha1
        v = (alpha + alpha1) / (n + 1) * math.prod((alpha1 + j) * (alpha + alpha1 + j)
                                                   for j in range(1, n + 1))
        return Prediction(v, "global_limit", "L6p", params)
    raise InputError(f"unknown family {family!r}")
