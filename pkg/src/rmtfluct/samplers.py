"""Random spectra of the ensembles used to check the predictions.

Scaling is owned here. Circular families give raw angles in [0, 2 pi),
interval families give points with limiting support (-1, 1) (Gaussian,
Wigner) or the Marchenko-Pastur / Wachter interval (Laguerre, Jacobi,
products), planar families give points with unit-disk (or ellipse) support
unless ``scaling="bulk"`` is requested, which keeps density 1/pi.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg

from . import _kernels
from .basis import InputError
from .rng import generator

log = logging.getLogger(__name__)

CIRCULAR = ("CUE", "CUE_alpha", "COE", "CSE", "OplusN", "circular_beta")
REAL = ("Gaussian_beta", "Laguerre_beta", "Jacobi_beta", "Wigner", "GinibreProduct",
        "HighTempGaussian", "HighTempLaguerre")
PLANAR = ("GinUE", "GinOE", "EllipticGinibre", "cGP")
FAMILIES = CIRCULAR + REAL + PLANAR
WIGNER_LAWS = ("gaussian", "rademacher", "uniform")
CGP_MAX_DEGREE = 600
MAX_RETRIES = 3
_TWO_PI = 2 * np.pi


class SamplerError(RuntimeError):
    """Repeated numerical failure while building a sample."""


@dataclass(frozen=True)
class EnsembleSpec:
    family: str
    N: int
    beta: float = 2.0
    alpha: float = 0.0
    tau: float = 0.0
    M: int = 2
    eta: tuple = ()
    law: str = "gaussian"
    sigma2: float | None = None
    complex_entries: bool = False
    phi: float = 0.0
    alpha1: float = 1.0
    gamma1: float = 0.0
    gamma2: float = 0.0
    scaling: str = "global"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InputError(f"unknown family {self.family!r}")
        if int(self.N) != self.N or self.N < 1:
            raise InputError("N must be a positive integer")
        if not self.beta > 0:
            raise InputError("beta must be positive")
        if self.family == "CUE_alpha" and not 0 <= self.alpha < 1:
            raise InputError("CUE_alpha needs 0 <= alpha < 1")
        if not 0 <= self.tau < 1:
            raise InputError("need 0 <= tau < 1")
        if self.family == "OplusN" and self.N % 2:
            raise InputError("OplusN needs even N")
        if self.family == "Wigner" and self.law not in WIGNER_LAWS:
            raise InputError(f"unknown Wigner law {self.law!r}")
        if self.family == "cGP" and self.N > CGP_MAX_DEGREE:
            raise InputError(f"cGP degree is capped at {CGP_MAX_DEGREE}")
        if self.family == "Laguerre_beta" and not self.alpha > -1:
            raise InputError("Laguerre needs alpha > -1")
        if self.family == "GinibreProduct" and self.M < 1:
            raise InputError("M >= 1")
        if self.family == "Jacobi_beta" and self.beta not in (1.0, 2.0):
            raise InputError("Jacobi sampling is by MANOVA transform, beta in {1, 2}")
        if self.scaling not in ("global", "bulk"):
            raise InputError("scaling is 'global' or 'bulk'")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "eta", tuple(int(e) for e in self.eta))

    @property
    def kind(self) -> str:
        if self.family in CIRCULAR:
            return "angles"
        return "reals" if self.family in REAL else "complex"

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "EnsembleSpec":
        d = dict(d)
        if "eta" in d:
            d["eta"] = tuple(d["eta"])
        return cls(**d)


@dataclass(frozen=True, eq=False)
class SpectrumSample:
    kind: str
    values: np.ndarray
    seed: int
    stream: int
    spec: EnsembleSpec
    retries: int = 0
    extras: dict = field(default_factory=dict)

    def to_csv(self, path: str) -> None:
        """One row per point (re, im) plus a JSON sidecar at ``path + '.json'``."""
        v = np.asarray(self.values)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["re", "im"])
            for z in v.astype(np.complex128):
                w.writerow([f"{z.real:.17g}", f"{z.imag:.17g}"])
        with open(path + ".json", "w") as fh:
            json.dump({"spec": self.spec.to_json(), "seed": self.seed, "stream": self.stream,
                       "kind": self.kind, "retries": self.retries}, fh, indent=2)


# ---------------------------------------------------------------------------
# Circular ensembles
# ---------------------------------------------------------------------------

def haar_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def haar_orthogonal(rng: np.random.Generator, n: int, special: bool = True) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.sign(np.diagonal(r))
    if special and np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def symplectic_dual(u: np.ndarray) -> np.ndarray:
    """J u^T J^{-1} with J = [[0, I], [-I, 0]]."""
    n = u.shape[0] // 2
    a, b = u[:n, :n], u[:n, n:]
    c, d = u[n:, :n], u[n:, n:]
    return np.block([[d.T, -b.T], [-c.T, a.T]])


def coe_matrix(rng, n):
    u = haar_unitary(rng, n)
    return u.T @ u


def cse_matrix(rng, n):
    """Self-dual unitary 2n x 2n matrix; each eigenvalue is doubly degenerate."""
    u = haar_unitary(rng, 2 * n)
    return symplectic_dual(u) @ u


def verblunsky(rng: np.random.Generator, n: int, beta: float) -> np.ndarray:
    """alpha_k ~ Theta_nu, nu = beta(n-k-1)+1; the last one is uniform on the circle."""
    k = np.arange(n - 1)
    nu = beta * (n - k - 1) + 1
    r2 = rng.beta(1.0, (nu - 1) / 2)
    ph = rng.uniform(0, _TWO_PI, n)
    out = np.empty(n, dtype=np.complex128)
    out[:-1] = np.sqrt(r2) * np.exp(1j * ph[:-1])
    out[-1] = np.exp(1j * ph[-1])
    return out


def cmv_matrix(alpha: np.ndarray) -> np.ndarray:
    """L M with L = diag(Theta_0, Theta_2, ...), M = diag(1, Theta_1, Theta_3, ...)."""
    n = len(alpha)
    L = np.zeros((n, n), dtype=np.complex128)
    M = np.zeros((n, n), dtype=np.complex128)
    M[0, 0] = 1.0

    def put(mat, k):
        a = alpha[k]
        if k == n - 1:
            mat[k, k] = np.conj(a)
            return
        rho = math.sqrt(max(0.0, 1 - abs(a) ** 2))
        mat[k, k], mat[k, k + 1] = np.conj(a), rho
        mat[k + 1, k], mat[k + 1, k + 1] = rho, -a

    for k in range(n):
        put(L if k % 2 == 0 else M, k)
    return L @ M


def _angles(eigs) -> np.ndarray:
    return np.sort(np.mod(np.angle(eigs), _TWO_PI))


def _dedupe_pairs(angles: np.ndarray, tol=1e-8) -> np.ndarray:
    a = np.sort(angles)
    # order around the circle so a pair split by 0 stays adjacent
    gaps = np.diff(np.concatenate([a, a[:1] + _TWO_PI]))
    start = int(np.argmax(gaps)) + 1
    a = np.roll(a, -start)
    diff = np.abs(np.angle(np.exp(1j * (a[1::2] - a[0::2]))))
    if np.any(diff > tol):
        raise np.linalg.LinAlgError(f"Kramers pairs split by {diff.max():.2e}")
    return np.sort(np.mod(a[0::2], _TWO_PI))


def _partition_parts(rng, n, alpha):
    """Partition with at most n parts drawn with weight alpha^|lambda|, descending."""
    if alpha == 0:
        return np.zeros(n, dtype=np.int64)
    j = np.arange(1, n + 1)
    mult = rng.geometric(1 - alpha ** j) - 1  # multiplicity of part j in the conjugate
    # lambda_i = #{parts of the conjugate >= i}
    lam = np.cumsum(mult[::-1])[::-1]
    return lam.astype(np.int64)


def cue_alpha_frequencies(rng, n, alpha) -> np.ndarray:
    """Fourier support of one projection component of the CUE_alpha mixture."""
    lam = _partition_parts(rng, n, alpha)
    return np.arange(n) + lam[::-1]


def projection_dpp_angles(rng, freqs) -> np.ndarray:
    """Sequential sampling of |det[e^{i p_k x_j}]|^2 by rejection from the uniform law."""
    p = np.asarray(freqs, dtype=np.float64)
    n = len(p)
    V = np.eye(n, dtype=np.complex128)
    out = np.empty(n)
    for step in range(n):
        r = n - step
        while True:
            batch = int(math.ceil(2 * n / r)) + 2
            x = rng.uniform(0, _TWO_PI, batch)
            u = rng.uniform(0, 1, batch)
            phi = np.exp(1j * np.outer(p, x))
            w = V.conj().T @ phi
            dens = np.sum(np.abs(w) ** 2, axis=0) / n
            ok = np.flatnonzero(u < dens)
            if len(ok):
                i = ok[0]
                break
        out[step] = x[i]
        wi = w[:, i]
        if r == 1:
            break
        nrm = np.linalg.norm(wi)
        ph = wi[0] / abs(wi[0]) if wi[0] != 0 else 1.0
        h = wi.copy()
        h[0] += ph * nrm
        V = (V - (2 / np.vdot(h, h).real) * np.outer(V @ h, h.conj()))[:, 1:]
    return np.sort(out)


# ---------------------------------------------------------------------------
# Interval ensembles
# ---------------------------------------------------------------------------

def gaussian_tridiagonal(rng, n, beta, weight="global"):
    """Diagonal and off-diagonal of a tridiagonal matrix with eigen-PDF
    prod e^{-beta n x^2} |Delta|^beta (``weight="global"``) or
    prod e^{-x^2/2} |Delta|^beta (``weight="unit"``)."""
    d = rng.standard_normal(n)
    off = np.sqrt(rng.chisquare(beta * np.arange(n - 1, 0, -1))) / math.sqrt(2)
    if weight == "global":
        s = 1 / math.sqrt(2 * beta * n)
        return d * s, off * s
    return d, off


def laguerre_tridiagonal(rng, n, beta, a_minus_p, scale):
    """BB^T for the bidiagonal model, eigen-PDF prod x^{a-p} e^{-x/(2 scale)} |Delta|^beta."""
    p = 1 + beta * (n - 1) / 2
    a = a_minus_p + p
    dof_d = 2 * a - beta * np.arange(n)
    dg = np.sqrt(rng.chisquare(dof_d))
    sub = np.sqrt(rng.chisquare(beta * np.arange(n - 1, 0, -1)))
    diag = dg * dg
    diag[1:] += sub * sub
    off = dg[:-1] * sub
    return diag * scale, off * scale


def _eig_tridiagonal(d, e):
    return linalg.eigvalsh_tridiagonal(d, e, lapack_driver="stemr")


def gaussian_dense(rng, n, beta):
    """Dense GOE (beta=1) or GUE (beta=2) matrix with eigen-PDF prop. to e^{-beta n x^2}."""
    if beta == 1:
        a = rng.standard_normal((n, n))
        h = (a + a.T) / 2
        return h / math.sqrt(2 * n)
    if beta == 2:
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        h = (a + a.conj().T) / 2
        return h / (2 * math.sqrt(n))
    raise InputError("dense Gaussian matrices for beta in {1, 2}")


def _law_draw(rng, law, shape):
    if law == "gaussian":
        return rng.standard_normal(shape)
    if law == "rademacher":
        return rng.integers(0, 2, shape) * 2.0 - 1.0
    return rng.uniform(-math.sqrt(3), math.sqrt(3), shape)


def law_moments(law: str, complex_entries: bool = False, phi: float = 0.0) -> dict:
    """<|x|^4>, beta_tilde and kappa of the off-diagonal entry law (unit variance)."""
    m4_real = {"gaussian": 3.0, "rademacher": 1.0, "uniform": 9.0 / 5.0}[law]
    if not complex_entries:
        m4, kappa, phi = m4_real, 0.5, 1.0
    else:
        a, b = (1 + phi) / 2, (1 - phi) / 2  # variances of the real and imaginary parts
        m4, kappa = m4_real * (a * a + b * b) + 2 * a * b, 1.0
    # beta_tilde = <(|x|^2 - 1)^2> - 1/kappa
    return {"m4": m4, "beta_tilde": m4 - 1 - 1 / kappa, "kappa": kappa, "phi": phi}


def wigner_matrix(rng, spec: EnsembleSpec) -> np.ndarray:
    n = spec.N
    s2 = spec.sigma2 if spec.sigma2 is not None else (1.0 if spec.complex_entries else 2.0)
    x = _law_draw(rng, spec.law, (n, n))
    if spec.complex_entries:
        a, b = (1 + spec.phi) / 2, (1 - spec.phi) / 2
        x = math.sqrt(a) * x + 1j * math.sqrt(b) * _law_draw(rng, spec.law, (n, n))
    h = np.triu(x, 1)
    h = h + h.conj().T
    h[np.diag_indices(n)] = math.sqrt(s2) * rng.standard_normal(n)
    return h / (2 * math.sqrt(n))


def jacobi_manova(rng, n, beta, gamma1, gamma2):
    """Eigenvalues of (A + B)^{-1} A with Wishart A, B of n(1+gamma) degrees of freedom."""
    n1 = int(round(n * (1 + gamma1)))
    n2 = int(round(n * (1 + gamma2)))

    def wishart(m):
        x = rng.standard_normal((m, n))
        if beta == 2:
            x = (x + 1j * rng.standard_normal((m, n))) / math.sqrt(2)
        return x.conj().T @ x

    a, b = wishart(n1), wishart(n2)
    return np.sort(linalg.eigh(a, a + b, eigvals_only=True))


# ---------------------------------------------------------------------------
# Planar ensembles
# ---------------------------------------------------------------------------

def ginibre(rng, n, real=False):
    if real:
        return rng.standard_normal((n, n))
    return (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)


def elliptic_matrix(rng, n, tau):
    """J = H + i v A, X = H, A with density prop. to exp(-Tr X^2/(1+tau))."""
    v = math.sqrt((1 - tau) / (1 + tau))

    def herm():
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        return (a + a.conj().T) / 2 * math.sqrt((1 + tau) / 2)

    return herm() + 1j * v * herm()


def kostlan_radii(rng, n, scaling="global"):
    """Moduli of the GinUE eigenvalues: |z_j|^2 ~ Gamma(j, 1) independently."""
    r = np.sqrt(rng.gamma(np.arange(1, n + 1), 1.0))
    return r / math.sqrt(n) if scaling == "global" else r


def product_matrix(rng, n, M, eta=()):
    dims = [n] + [n + (eta[j] if j < len(eta) else 0) for j in range(M)]
    w = np.eye(n, dtype=np.complex128)
    for j in range(1, M + 1):
        w = ginibre_rect(rng, dims[j], dims[j - 1]) @ w
    return w, math.prod(dims[1:])


def ginibre_rect(rng, rows, cols):
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / math.sqrt(2)


def cgp_log_coefficients(rng, n):
    """log|c_j| and phases of c_j = a_j / sqrt(j!), a_j standard complex Gaussian."""
    a = (rng.standard_normal(n + 1) + 1j * rng.standard_normal(n + 1)) / math.sqrt(2)
    j = np.arange(n + 1)
    from scipy.special import gammaln
    return np.log(np.abs(a)) - 0.5 * gammaln(j + 1), a / np.abs(a)


def cgp_zeros(log_c, phase_c, polish=True):
    n = len(log_c) - 1
    s = math.sqrt(n)
    # coefficients of q(w) = p(s w), normalised by the largest
    lq = log_c + np.arange(n + 1) * math.log(s)
    lq -= lq.max()
    c = np.exp(lq) * phase_c
    w = np.roots(c[::-1])  # companion eigensolve (LAPACK balances)
    z = w * s
    if polish:
        z, it = _kernels.aberth(z, log_c, phase_c)
        p = _log_poly_residual(z, log_c, phase_c)
        if not np.all(np.isfinite(z)) or np.max(p) > 1e-6:
            raise np.linalg.LinAlgError("root polishing failed")
    return z


def _log_poly_residual(z, log_c, phase_c):
    j = np.arange(len(log_c))
    e = log_c[None, :] + j[None, :] * np.log(np.abs(z))[:, None]
    m = e.max(axis=1, keepdims=True)
    t = np.exp(e - m + 1j * np.outer(np.angle(z), j)) * phase_c[None, :]
    return np.abs(t.sum(axis=1)) / np.abs(t).sum(axis=1)


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------

def _build(spec: EnsembleSpec, rng: np.random.Generator):
    f, n = spec.family, spec.N
    if f == "CUE":
        return _angles(np.linalg.eigvals(haar_unitary(rng, n)))
    if f == "COE":
        return _angles(np.linalg.eigvals(coe_matrix(rng, n)))
    if f == "CSE":
        return _dedupe_pairs(_angles(np.linalg.eigvals(cse_matrix(rng, n))))
    if f == "circular_beta":
        return _angles(np.linalg.eigvals(cmv_matrix(verblunsky(rng, n, spec.beta))))
    if f == "CUE_alpha":
        return projection_dpp_angles(rng, cue_alpha_frequencies(rng, n, spec.alpha))
    if f == "OplusN":
        ev = np.linalg.eigvals(haar_orthogonal(rng, n))
        a = np.sort(np.angle(ev[ev.imag > 0]))
        if len(a) != n // 2:
            raise np.linalg.LinAlgError("unpaired eigenvalues in SO(N)")
        return a
    if f == "Gaussian_beta":
        return _eig_tridiagonal(*gaussian_tridiagonal(rng, n, spec.beta))
    if f == "HighTempGaussian":
        return _eig_tridiagonal(*gaussian_tridiagonal(rng, n, spec.beta, weight="unit"))
    if f == "Laguerre_beta":
        b = spec.beta
        return _eig_tridiagonal(*laguerre_tridiagonal(rng, n, b, spec.alpha * b * n / 2, 1 / (b * n)))
    if f == "HighTempLaguerre":
        return _eig_tridiagonal(*laguerre_tridiagonal(rng, n, spec.beta, spec.alpha1, 0.5))
    if f == "Jacobi_beta":
        return jacobi_manova(rng, n, spec.beta, spec.gamma1, spec.gamma2)
    if f in DENSE_HERMITIAN:
        return np.linalg.eigvalsh(matrix_model(spec, rng))
    if f in ("GinUE", "GinOE", "EllipticGinibre"):
        return np.linalg.eigvals(matrix_model(spec, rng))
    scale = 1 / math.sqrt(n) if spec.scaling == "global" else 1.0
    if f == "cGP":
        return cgp_zeros(*cgp_log_coefficients(rng, n)) * scale
    raise InputError(f"unknown family {f!r}")  # pragma: no cover


DENSE_HERMITIAN = ("Wigner", "GinibreProduct")
DENSE = DENSE_HERMITIAN + ("GinUE", "GinOE", "EllipticGinibre")


def matrix_model(spec: EnsembleSpec, rng) -> np.ndarray:
    """Scaled dense matrix whose eigenvalues are the sample (GinibreProduct: W^* W / prod N_j)."""
    f, n = spec.family, spec.N
    if f == "Wigner":
        return wigner_matrix(rng, spec)
    if f == "GinibreProduct":
        w, norm = product_matrix(rng, n, spec.M, spec.eta)
        return (w.conj().T @ w) / norm
    scale = 1 / math.sqrt(n) if spec.scaling == "global" else 1.0
    if f == "GinUE":
        return ginibre(rng, n) * scale
    if f == "GinOE":
        return ginibre(rng, n, real=True) * scale
    if f == "EllipticGinibre":
        return elliptic_matrix(rng, n, spec.tau) * scale
    raise InputError(f"{f} has no dense matrix model")


def matrix_traces(spec: EnsembleSpec, seed: int, stream: int) -> tuple:
    """(Tr X, Tr X^2) of the matrix model; equal to sum z and sum z^2 over the sample."""
    def run(rng):
        x = matrix_model(spec, rng)
        t2 = np.sum(x * x.T)
        return complex(np.trace(x)), complex(t2)
    return with_retries(run, spec, seed, stream)[0]


def with_retries(fn, spec: EnsembleSpec, seed: int, stream: int):
    """Run ``fn(rng)``; on a numerical failure retry on the next substream."""
    last = None
    for attempt in range(MAX_RETRIES + 1):
        rng = generator(seed, stream, substream=attempt)
        try:
            return fn(rng), attempt
        except (np.linalg.LinAlgError, linalg.LinAlgError, ValueError) as exc:
            if isinstance(exc, InputError):
                raise
            last = exc
            log.warning("resampling %s stream %d after failure: %s", spec.family, stream, exc)
    raise SamplerError(f"{spec.family}: {MAX_RETRIES} retries exhausted ({last})")


def sample(spec: EnsembleSpec, seed: int, stream: int) -> SpectrumSample:
    vals, tries = with_retries(lambda rng: _build(spec, rng), spec, seed, stream)
    return SpectrumSample(spec.kind, np.asarray(vals), int(seed), int(stream), spec, tries)


def thin(s: SpectrumSample, zeta: float, seed: int) -> SpectrumSample:
    """Keep each point independently with probability zeta."""
    if not 0 < zeta < 1:
        raise InputError("need 0 < zeta < 1")
    rng = generator(seed, s.stream, substream=1 << 32)
    keep = rng.random(len(s.values)) < zeta
    return SpectrumSample(s.kind, s.values[keep], s.seed, s.stream, s.spec, s.retries,
                          {**s.extras, "thinned": zeta})


def principal_submatrix_spectra(H: np.ndarray, I_p: Sequence[int], I_q: Sequence[int],
                                spec: EnsembleSpec | None = None, seed: int = 0, stream: int = 0):
    """Spectra of H(I_p), H(I_q), each rescaled to limiting support (-1, 1).

    H is normalised so that its own spectrum fills (-1, 1); a principal block
    of relative size b then has radius sqrt(b).
    """
    n = H.shape[0]
    out = []
    for idx in (I_p, I_q):
        idx = np.asarray(sorted(set(int(i) for i in idx)))
        if len(idx) == 0:
            raise InputError("index sets must be nonempty")
        if idx.min() < 0 or idx.max() >= n:
            raise InputError("index out of range")
        ev = np.linalg.eigvalsh(H[np.ix_(idx, idx)]) / math.sqrt(len(idx) / n)
        sp = spec or EnsembleSpec("Gaussian_beta", n)
        out.append(SpectrumSample("reals", ev, seed, stream, sp, 0, {"size": len(idx)}))
    return tuple(out)


# ---------------------------------------------------------------------------
# Fast paths used by the Monte Carlo layer
# ---------------------------------------------------------------------------

def circular_matrix(spec: EnsembleSpec, rng):
    """Unitary matrix whose spectrum is the sample (CSE: the 2N-dimensional one)."""
    f, n = spec.family, spec.N
    if f == "CUE":
        return haar_unitary(rng, n)
    if f == "COE":
        return coe_matrix(rng, n)
    if f == "CSE":
        return cse_matrix(rng, n)
    if f == "circular_beta":
        return cmv_matrix(verblunsky(rng, n, spec.beta))
    raise InputError(f"no matrix model for {f}")


def power_traces(spec: EnsembleSpec, seed: int, stream: int, m_max: int) -> np.ndarray:
    """sum_j e^{i m x_j} for m = 1..m_max, from traces of matrix powers."""
    def run(rng):
        u = circular_matrix(spec, rng)
        out = np.empty(m_max, dtype=np.complex128)
        ut = u.T
        p = None  # u^{m-1}
        for m in range(1, m_max + 1):
            # Tr(p u) without forming the product
            out[m - 1] = np.trace(u) if p is None else np.sum(p * ut)
            if m < m_max:
                p = u if p is None else p @ u
        return out / 2 if spec.family == "CSE" else out
    return with_retries(run, spec, seed, stream)[0]


def circular_counts(spec: EnsembleSpec, seed: int, stream: int, thetas) -> np.ndarray:
    """Number of eigenangles in (0, theta] for the CUE / circular beta ensemble."""
    if spec.family not in ("CUE", "circular_beta"):
        raise InputError("Pruefer counting is available for CUE and circular_beta")
    beta = 2.0 if spec.family == "CUE" else spec.beta
    rng = generator(seed, stream)
    return _kernels.prufer_counts(verblunsky(rng, spec.N, beta), thetas)


def tridiagonal_model(spec: EnsembleSpec, rng):
    """(diag, off) whose eigenvalues are the sample, for the tridiagonal families."""
    n, b = spec.N, spec.beta
    if spec.family == "Gaussian_beta":
        return gaussian_tridiagonal(rng, n, b)
    if spec.family == "HighTempGaussian":
        return gaussian_tridiagonal(rng, n, b, weight="unit")
    if spec.family == "Laguerre_beta":
        return laguerre_tridiagonal(rng, n, b, spec.alpha * b * n / 2, 1 / (b * n))
    if spec.family == "HighTempLaguerre":
        return laguerre_tridiagonal(rng, n, b, spec.alpha1, 0.5)
    raise InputError(f"{spec.family} has no tridiagonal model")


def tridiagonal_counts(spec: EnsembleSpec, seed: int, stream: int, thresholds) -> np.ndarray:
    d, e = tridiagonal_model(spec, generator(seed, stream))
    return _kernels.sturm_counts(d, e * e, thresholds)


def ginue_radii(spec: EnsembleSpec, seed: int, stream: int) -> np.ndarray:
    if spec.family != "GinUE":
        raise InputError("Kostlan radii are for GinUE")
    return kostlan_radii(generator(seed, stream), spec.N, spec.scaling)


def cgp_disk_counts(spec: EnsembleSpec, seed: int, stream: int, radii, m: int = 8192) -> np.ndarray:
    """Zeros in |z| < R by the argument principle on an m-point circle (no root finding)."""
    log_c, ph = cgp_log_coefficients(generator(seed, stream), spec.N)
    n = spec.N
    j = np.arange(n + 1)
    scale = math.sqrt(n) if spec.scaling == "global" else 1.0
    out = np.empty(len(radii), dtype=np.int64)
    for i, R in enumerate(radii):
        e = log_c + j * math.log(R * scale)
        c = np.exp(e - e.max()) * ph
        buf = np.zeros(m, dtype=np.complex128)
        buf[: n + 1] = c
        vals = np.fft.ifft(buf) * m  # p(R e^{2 pi i k/m})
        dphi = np.angle(vals[np.r_[1:m, 0]] / vals)
        out[i] = int(round(dphi.sum() / _TWO_PI))
    return out
