"""Fourier weights and covariance sums for circular ensembles.

Cov(sum f, sum g) = sum_l m_l f_l g_{-l}, with the weights m_l of the
ensemble. Limits N -> infinity are encoded by ``N=None``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import digamma

from ..basis import (CircleFourier, DomainError, HalfCircleCosine, Indicator,
                     InputError, circle_fourier_coeffs, cosine_coeffs, trigamma, hurwitz_zeta)
from ._prediction import Divergence, Prediction, divergent

EULER_GAMMA = 0.57721566490153286061

ENSEMBLES = ("CUE", "CUE_alpha", "COE", "CSE", "circular_beta_limit")


@dataclass(frozen=True)
class FourierWeights:
    """Weights m_l of a circular ensemble.

    ``N=None`` selects the N -> infinity weights. ``variant="printed"`` for
    the COE reproduces the harmonic-sum bounds exactly as usually quoted,
    which are off by one in N (see ``coe_weight``).
    """

    ensemble: str
    N: int | None = None
    alpha: float | None = None
    beta: float | None = None
    variant: str = "corrected"

    def __post_init__(self):
        if self.ensemble not in ENSEMBLES:
            raise InputError(f"unknown ensemble {self.ensemble!r}")
        if self.N is not None and self.N < 1:
            raise DomainError("N must be >= 1")
        if self.ensemble == "CUE_alpha":
            if self.alpha is None or not 0 <= self.alpha <= 1:
                raise DomainError("CUE_alpha needs 0 <= alpha < 1")
        if self.ensemble == "circular_beta_limit":
            if self.beta is None or not self.beta > 0:
                raise DomainError("circular_beta_limit needs beta > 0")
            if self.N is not None:
                raise InputError("circular_beta_limit has no finite-N form")

    @property
    def is_limit(self) -> bool:
        return self.N is None

    @property
    def limit_slope(self) -> float:
        """c in m_l ~ c |l| for large |l| in the limit weights."""
        return {"CUE": 1.0, "CUE_alpha": 1.0, "COE": 2.0, "CSE": 0.5}.get(
            self.ensemble, 2.0 / (self.beta or 2.0))

    def label(self) -> str:
        return {"CUE": "3.4c", "CUE_alpha": "S0b" if self.is_limit else "S1c",
                "COE": "2.56", "CSE": "2.56", "circular_beta_limit": "3.4fc"}[self.ensemble]

    def __call__(self, l):
        return fourier_weight(self, l)


def fourier_weight(w: FourierWeights, l):
    """m_l for the given weights (vectorised in l)."""
    l = np.abs(np.asarray(l, dtype=np.int64))
    e, N = w.ensemble, w.N
    if e == "CUE_alpha" and w.alpha == 1 and np.any(l != 0):
        raise DomainError("alpha = 1 gives divergent weights (Poisson limit)")
    if N is None:
        if e == "CUE":
            out = l.astype(float)
        elif e in ("COE", "CSE"):
            out = (2.0 / (1 if e == "COE" else 4)) * l
        elif e == "circular_beta_limit":
            out = 2.0 * l / w.beta
        else:
            a = float(w.alpha)
            lz = np.where(l == 0, 1, l)
            out = np.where(l == 0, 0.0, lz / (1.0 - a ** lz))
        return float(out) if out.ndim == 0 else out
    if e == "CUE":
        out = np.minimum(l, N).astype(float)
    elif e == "COE":
        out = coe_weight(l, N, printed=w.variant == "printed")
    elif e == "CSE":
        out = cse_weight(l, N)
    else:
        out = cue_alpha_finite_weight(l, N, float(w.alpha))
    return float(out) if np.ndim(out) == 0 else out


def coe_weight(l, N: int, printed: bool = False):
    """COE weights.

    m_l = N - (N-|l|)_+ + min(|l|, N) - 2|l| sum_{j=j0}^{|l|} 1/(N + 2j - 1),
    j0 = max(0, |l|-N) + 1. This is the harmonic sum over s = N/2 + j; with
    ``printed=True`` the base is (N+1)/2 and the denominators become N + 2j,
    which reproduces the weights of N+1 rather than N.
    """
    l = np.abs(np.asarray(l, dtype=np.int64))
    off = 0.0 if printed else -1.0
    j0 = np.maximum(0, l - N) + 1
    # sum_{j=j0}^{l} 1/(2j + N + off) = (psi(l + 1 + h) - psi(j0 + h)) / 2, h = (N + off)/2
    h = (N + off) / 2.0
    hs = np.where(l >= j0, 0.5 * (digamma(l + 1 + h) - digamma(j0 + h)), 0.0)
    small = l <= 64
    if np.any(small):
        # exact partial sums where cancellation would cost digits
        ls = l[small] if l.ndim else np.array([l])
        j0s = j0[small] if l.ndim else np.array([j0])
        vals = np.array([math.fsum(1.0 / (2 * j + N + off) for j in range(int(a), int(b) + 1))
                         for a, b in zip(j0s, ls)])
        if l.ndim:
            hs = hs.copy()
            hs[small] = vals
        else:
            hs = vals[0]
    out = N - np.maximum(N - l, 0) + np.minimum(l, N) - 2.0 * l * hs
    out = np.where(l == 0, 0.0, out)
    return float(out) if out.ndim == 0 else out


def cse_weight(l, N: int):
    """CSE weights |l|/2 + (|l|/2) sum_{j=1}^{|l|} 1/(2N - 2j + 1), |l| <= 2N-2; N beyond."""
    l = np.abs(np.asarray(l, dtype=np.int64))
    kmax = int(min(np.max(l, initial=0), 2 * N - 2))
    j = np.arange(1, kmax + 1)
    cum = np.concatenate([[0.0], np.cumsum(1.0 / (2 * N - 2 * j + 1))])
    inside = l <= 2 * N - 2
    lc = np.where(inside, l, 0)
    out = np.where(inside, lc / 2 + (lc / 2) * cum[lc], float(N))
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=64)
def _cue_alpha_series(N: int, alpha: float, pmax: int) -> np.ndarray:
    # a_p = [u^p] sum_{1<=mu1<mu2<=N} prod_{k=mu1}^{mu2-1} (1-alpha^k) u / (1 - alpha^k u)
    acc = np.zeros(pmax + 1)
    powers = alpha ** np.arange(N + 1, dtype=float)
    jj = np.arange(pmax + 1)
    for mu1 in range(1, N):
        r = np.zeros(pmax + 1)
        r[0] = 1.0
        for mu2 in range(mu1 + 1, min(N, mu1 + pmax) + 1):
            k = mu2 - 1
            ak = powers[k]
            g = np.where(jj >= 1, (1.0 - ak) * ak ** np.maximum(jj - 1, 0), 0.0)
            r = np.convolve(r, g)[: pmax + 1]
            acc += r
    return acc


def cue_alpha_finite_weight(l, N: int, alpha: float):
    """Finite-N weights m_p = N - a_p from the Laurent expansion of the
    exact two-point function; a_p is the u^p coefficient of the product sum."""
    l = np.abs(np.asarray(l, dtype=np.int64))
    pmax = int(np.max(l, initial=0))
    a = _cue_alpha_series(int(N), float(alpha), max(pmax, 1))
    out = np.where(l == 0, 0.0, N - a[np.minimum(l, len(a) - 1)])
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# covariance sums
# ---------------------------------------------------------------------------

def _same_angle(x, y, tol=1e-12):
    d = math.remainder(x - y, 2 * math.pi)
    return abs(d) < tol


def _log2sin(t):
    return math.log(abs(2.0 * math.sin(t / 2.0)))


def arc_pair_limit(f: Indicator, g: Indicator, slope: float = 1.0):
    """slope * sum_l |l| f_l g_{-l} for two arcs, as (value, log-rate).

    A nonzero rate means the sum diverges like rate * log N when the weights
    saturate at l ~ N.
    """
    a1, b1, a2, b2 = f.a, f.b, g.a, g.b
    if b1 - a1 >= 2 * math.pi or b2 - a2 >= 2 * math.pi:
        return 0.0, 0.0
    pairs = [((b1, b2), -1.0), ((b1, a2), 1.0), ((a1, b2), 1.0), ((a1, a2), -1.0)]
    value, rate = 0.0, 0.0
    for (x, y), sgn in pairs:
        if _same_angle(x, y):
            rate += -sgn
        else:
            value += sgn * _log2sin(x - y)
    c = slope / (2 * math.pi**2)
    return c * value, c * rate


def _arc_overlap(f: Indicator, g: Indicator) -> float:
    tot = 0.0
    for k in (-2, -1, 0, 1, 2):
        lo = max(f.a, g.a + 2 * math.pi * k)
        hi = min(f.b, g.b + 2 * math.pi * k)
        tot += max(0.0, hi - lo)
    return tot


def _circle_inner(f, g) -> complex:
    """sum_l f_l g_{-l} = (1/2pi) int f g."""
    if isinstance(f, Indicator) and isinstance(g, Indicator):
        return _arc_overlap(f, g) / (2 * math.pi)
    m = 1 << 15
    x = (np.arange(m) + 0.5) * 2 * np.pi / m
    return complex(np.mean(np.asarray(f(x)) * np.asarray(g(x))))


def _pair_sum(fl, gml, wl):
    return complex(math.fsum((wl * fl * gml).real), math.fsum((wl * fl * gml).imag))


def circular_covariance(f, g, weights: FourierWeights, tol: float = 1e-12,
                        allow_divergent: bool = False, n_cap: int = 1 << 16) -> Prediction:
    """sum_l m_l f_l g_{-l}."""
    params = {"ensemble": weights.ensemble, "N": weights.N, "alpha": weights.alpha,
              "beta": weights.beta}
    formula = {"CUE": "3.4e", "COE": "3.4eb", "CSE": "3.4eb", "CUE_alpha": "4.4e1",
               "circular_beta_limit": "3.4eb"}[weights.ensemble] if weights.is_limit else "3.4d"
    regime = "global_limit" if weights.is_limit else "finite_N"

    # exact finite sums when either side is a trigonometric polynomial
    for a, b, swap in ((f, g, False), (g, f, True)):
        if isinstance(a, CircleFourier):
            ls = a.ls
            ta = dict(zip(ls.tolist(), a.coeffs))
            if isinstance(b, CircleFourier):
                tb = dict(zip(b.ls.tolist(), b.coeffs))
                gm = np.array([tb.get(-int(l), 0) for l in ls])
            else:
                cb = circle_fourier_coeffs(b, int(np.max(np.abs(ls), initial=0)))
                gm = cb[-ls]
            fl = np.array([ta[int(l)] for l in ls])
            v = _pair_sum(fl, gm, fourier_weight(weights, ls))
            return Prediction(_real(v), regime, formula, params)

    if weights.is_limit and isinstance(f, Indicator) and isinstance(g, Indicator):
        value, rate = arc_pair_limit(f, g, weights.limit_slope)
        if rate != 0.0:
            return divergent(Divergence(rate, "N", "log", "3.4f"), formula, params, allow_divergent)
        if weights.ensemble == "CUE_alpha":
            value += _residual_sum(f, g, lambda l: fourier_weight(weights, l) - np.abs(l), tol, n_cap)
        return Prediction(value, regime, formula, params)

    if weights.is_limit:
        v = _residual_sum(f, g, lambda l: fourier_weight(weights, l), tol, n_cap)
        return Prediction(v, regime, formula, params)
    # finite N: sum (m_l - N) f_l g_{-l} + N <f, g>; the bracket decays with |l|
    N = weights.N
    v = _residual_sum(f, g, lambda l: np.where(l == 0, 0.0, fourier_weight(weights, l) - N),
                      tol, n_cap, include_zero=True)
    full = N * _circle_inner(f, g) - N * _coeff0(f) * _coeff0(g)
    return Prediction(_real(v + full), regime, formula, params)


def _coeff0(f):
    return complex(circle_fourier_coeffs(f, 0)[0])


def _residual_sum(f, g, weight, tol, n_cap, include_zero=False):
    n = 64
    prev = None
    while n <= n_cap:
        cf = circle_fourier_coeffs(f, n)
        cg = circle_fourier_coeffs(g, n)
        ls = cf.index
        v = _pair_sum(cf.values, cg[-ls], np.asarray(weight(ls), dtype=float))
        if prev is not None and abs(v - prev) <= tol * max(1.0, abs(v)):
            return v.real if abs(v.imag) < 1e-12 * max(1.0, abs(v)) else v
        prev = v
        n *= 2
    raise ArithmeticError("coefficient sum did not converge; use a smoother statistic")


def _real(v):
    v = complex(v)
    return v.real if abs(v.imag) <= 1e-12 * max(1.0, abs(v.real)) else v


def counting_covariance_cue(L1: float, L2: float, allow_divergent: bool = False) -> Prediction:
    """Limiting CUE covariance of counts in the centred arcs [-L1/2, L1/2], [-L2/2, L2/2].

    Equals (1/pi^2) sum_{l>=1} (1/l)(cos(l(L1-L2)/2) - cos(l(L1+L2)/2))
    = (1/pi^2) log|sin((L1+L2)/4) / sin((L1-L2)/4)|.
    """
    params = {"L1": L1, "L2": L2}
    if not (0 < L1 < 2 * math.pi and 0 < L2 < 2 * math.pi):
        raise DomainError("need 0 < L1, L2 < 2 pi")
    if abs(L1 - L2) < 1e-14:
        return divergent(Divergence(1 / math.pi**2, "N", "log", "3.4f"), "3.4g", params,
                         allow_divergent)
    v = (math.log(abs(math.sin((L1 + L2) / 4))) - math.log(abs(math.sin((L1 - L2) / 4)))) / math.pi**2
    return Prediction(v, "global_limit", "3.4g", params)


def counting_covariance_series(L1: float, L2: float, terms: int = 200_000) -> float:
    """Truncated-series evaluation of the counting covariance (oracle).

    Summation by parts gives the tail sum_{l > L} cos(l x) / l =
    -sin((L + 1/2) x) / (2 (L + 1) sin(x/2)) + O(L^-2), which is added on.
    """
    l = np.arange(1, terms + 1, dtype=float)
    a, b = abs(L1 - L2) / 2, (L1 + L2) / 2
    head = math.fsum((np.cos(l * a) - np.cos(l * b)) / l)

    def tail(x):
        return -math.sin((terms + 0.5) * x) / (2 * (terms + 1) * math.sin(x / 2))
    return (head + tail(a) - tail(b)) / math.pi**2


# ---------------------------------------------------------------------------
# O+(N)
# ---------------------------------------------------------------------------

def _k_sin(x, y):
    """sum_{n>=1} sin(nx) sin(ny) / n, or None when divergent."""
    if _is_boundary(x) or _is_boundary(y):
        return 0.0
    if _same_angle(x, y):
        return None
    return 0.5 * (_log2sin(x + y) - _log2sin(x - y))


def _is_boundary(x):
    return abs(math.remainder(x, math.pi)) < 1e-12


def orthogonal_covariance(f, g, tol: float = 1e-12, allow_divergent: bool = False) -> Prediction:
    """Limiting O+(N) covariance sum_{n>=1} n f_n^c g_n^c of statistics on [0, pi]."""
    params = {"ensemble": "O+"}
    if isinstance(f, Indicator) and isinstance(g, Indicator):
        a1, b1 = max(f.a, 0.0), min(f.b, math.pi)
        a2, b2 = max(g.a, 0.0), min(g.b, math.pi)
        value, rate = 0.0, 0.0
        for (x, y), s in (((b1, b2), 1), ((b1, a2), -1), ((a1, b2), -1), ((a1, a2), 1)):
            k = _k_sin(x, y)
            if k is None:
                rate += s * 0.5
            else:
                value += s * k
        if rate != 0.0:
            return divergent(Divergence(rate / math.pi**2, "N", "log", "4.4fO"), "4.4eO", params,
                             allow_divergent)
        return Prediction(value / math.pi**2, "global_limit", "4.4eO", params)
    if isinstance(f, HalfCircleCosine) or isinstance(g, HalfCircleCosine):
        n = max(len(getattr(f, "coeffs", [])), len(getattr(g, "coeffs", []))) - 1
        if isinstance(f, HalfCircleCosine) and isinstance(g, HalfCircleCosine):
            cf, cg = cosine_coeffs(f, n), cosine_coeffs(g, n)
            k = np.arange(n + 1)
            return Prediction(math.fsum(k * cf.values.real * cg.values.real), "global_limit",
                              "4.4eO", params)
    n = 64
    prev = None
    while n <= 1 << 16:
        cf, cg = cosine_coeffs(f, n), cosine_coeffs(g, n)
        k = np.arange(n + 1)
        v = math.fsum(k * cf.values.real * cg.values.real)
        if prev is not None and abs(v - prev) <= tol * max(1.0, abs(v)):
            return Prediction(v, "global_limit", "4.4eO", params)
        prev, n = v, 2 * n
    raise ArithmeticError("cosine sum did not converge")


def orthogonal_finite_covariance(p: int, q: int, N: int) -> Prediction:
    """Finite-N O+(N) covariance of sum cos(p x_j) and sum cos(q x_j), N even.

    p = q <= N/2 gives p/4; off that range the value is 0 for distinct parity,
    1/4 for equal parity with p != q, and min((p+1)/4, (N+2)/4) on the diagonal.
    """
    if N % 2:
        raise DomainError("O+(N) result needs even N")
    params = {"p": p, "q": q, "N": N}
    p, q = abs(p), abs(q)
    if p <= N // 2 and q <= N // 2:
        v = p / 4 if p == q else 0.0
    elif (p - q) % 2:
        v = 0.0
    elif p != q:
        v = 0.25
    else:
        v = min((p + 1) / 4, (N + 2) / 4)
    return Prediction(v, "finite_N", "4.4dO", params)


# ---------------------------------------------------------------------------
# log-gas response
# ---------------------------------------------------------------------------

def loggas_response(u, geometry: str = "circle"):
    """Induced density q_u of the log-gas response to a perturbation u."""
    if geometry == "circle":
        if not isinstance(u, CircleFourier):
            t = circle_fourier_coeffs(u, 256)
            u = CircleFourier(t.index, t.values)
        return CircleFourier(u.ls, -np.abs(u.ls) * u.coeffs / math.pi)
    if geometry == "cosine":
        if not isinstance(u, HalfCircleCosine):
            u = HalfCircleCosine(cosine_coeffs(u, 256).values.real)
        n = np.arange(len(u.coeffs))
        return HalfCircleCosine(-n * u.coeffs / math.pi)
    raise InputError("geometry must be 'circle' or 'cosine'")


def loggas_covariance(f, g, beta: float, geometry: str = "circle", m: int = 4096) -> Prediction:
    """-(1/beta) int f q_g, integrated on a uniform grid."""
    q = loggas_response(g, geometry)
    if geometry == "circle":
        x = 2 * np.pi * np.arange(m) / m
        integral = 2 * np.pi * np.mean(np.asarray(f(x)) * q(x))
    else:
        # periodic even extension keeps the trapezoid rule spectrally accurate
        x = 2 * np.pi * np.arange(m) / m
        xe = np.where(x <= np.pi, x, 2 * np.pi - x)
        integral = np.pi * np.mean(np.asarray(f(xe)) * q(xe))
    v = -float(np.real(integral)) / beta
    return Prediction(v, "global_limit", "C.3c", {"beta": beta, "geometry": geometry})


# ---------------------------------------------------------------------------
# number variance
# ---------------------------------------------------------------------------

B_CLOSED_FORMS = {
    1.0: (2 / math.pi**2) * EULER_GAMMA + (2 / math.pi**2) * (1 + math.log(2 * math.pi)) - 0.25,
    2.0: (EULER_GAMMA + 1 + math.log(2 * math.pi)) / math.pi**2,
    4.0: EULER_GAMMA / (2 * math.pi**2) + (1 + math.log(4 * math.pi)) / (2 * math.pi**2) + 1 / 16,
}
_B_LABELS = {1.0: "3.4dC4", 2.0: "3.4dB3", 4.0: "3.4dC5"}


def b_beta_series(beta: float, variant: str = "corrected") -> float:
    """(2/(pi^2 beta)) (C + log(pi beta) + sum_q [(2/beta) psi1(2q/beta) - 1/q]).

    ``variant="printed"`` uses log(beta) in place of log(pi beta); that form
    misses the beta = 1, 2, 4 closed forms by (2/(pi^2 beta)) log(pi).
    """
    if not beta > 0:
        raise DomainError("beta must be positive")
    if variant not in ("corrected", "printed"):
        raise InputError("variant must be 'corrected' or 'printed'")
    nu = 2.0 / beta
    Q = int(max(200, math.ceil(60.0 / nu)))
    q = np.arange(1, Q, dtype=float)
    head = math.fsum(nu * trigamma(nu * q) - 1.0 / q)
    # tail from q = Q with psi1(x) ~ 1/x + 1/(2x^2) + sum_j B_2j / x^(2j+1)
    from ..basis import _BERNOULLI
    tail = hurwitz_zeta(2.0, Q) / (2 * nu)
    for j, b in enumerate(_BERNOULLI[:8], start=1):
        tail += b * nu ** (-2 * j) * hurwitz_zeta(2 * j + 1.0, Q)
    log_term = math.log(beta) if variant == "printed" else math.log(math.pi * beta)
    return 2.0 / (math.pi**2 * beta) * (EULER_GAMMA + log_term + head + tail)


def number_variance_asymptote(beta: float | str = 2.0, N: int | None = None,
                              theta: float | None = None, L: float | None = None) -> Prediction:
    """Leading log coefficient 2/(pi^2 beta) and constant B_beta.

    With ``L`` (bulk units) the value is 2/(pi^2 beta) log L + B_beta. With
    ``N`` and an arc length ``theta`` the bulk length is replaced by
    N |2 sin(theta/2)| / (2 pi).
    """
    if isinstance(beta, str):
        beta = {"COE": 1.0, "CUE": 2.0, "CSE": 4.0}[beta]
    beta = float(beta)
    if not beta > 0:
        raise DomainError("beta must be positive")
    leading = 2.0 / (math.pi**2 * beta)
    if beta in B_CLOSED_FORMS:
        B, label = B_CLOSED_FORMS[beta], _B_LABELS[beta]
    else:
        B, label = b_beta_series(beta), "z.5"
    extras = {"leading": leading, "B": B}
    params = {"beta": beta}
    if L is None and N is not None and theta is not None:
        L = N * abs(2 * math.sin(theta / 2)) / (2 * math.pi)
        params.update(N=N, theta=theta)
    if L is not None:
        params["L"] = L
        return Prediction(leading * math.log(L) + B, "asymptote", label, params, extras=extras)
    return Prediction(B, "asymptote", label, params, extras=extras)
