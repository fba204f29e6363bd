"""Monte Carlo estimates of linear-statistic moments and a small-N quadrature oracle.

Sample ``i`` of an estimate always uses RNG stream ``stream_base + i``, so
results do not depend on the number of worker threads. Sums go through
``math.fsum``, which makes them independent of the order of aggregation.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special

from . import samplers
from .basis import (CircleFourier, CircleIndicator, Grid, HalfCircleCosine, Indicator, InputError,
                    IntervalChebyshev, LinearStatistic, PlanarIndicator, PlanarPolynomial,
                    PlanarRadial, Polynomial)
from .rng import generator
from .samplers import EnsembleSpec

N_BATCHES = 20
MAX_EVALUATIONS = 10**8
_ROTATION_SUBSTREAM = 1 << 33


class PrecisionError(ArithmeticError):
    """The oracle could not reach the requested tolerance."""


# ---------------------------------------------------------------------------
# Statistics that are not pointwise sums
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RestrictedSum(LinearStatistic):
    """sum_{j <= K} f(x_j) over the K = round(fraction N) largest points."""

    f: LinearStatistic
    fraction: float
    kind = "restricted_sum"

    def __post_init__(self):
        if not 0 < self.fraction <= 1:
            raise InputError("fraction must lie in (0, 1]")

    def total(self, x) -> float:
        x = np.sort(np.asarray(x))[::-1]
        k = int(round(self.fraction * len(x)))
        return math.fsum(np.asarray(self.f(x[:k]), dtype=np.float64))

    def __call__(self, x):  # pragma: no cover - not pointwise
        raise InputError("RestrictedSum is evaluated on whole samples via total()")

    def descriptor(self):
        return {"kind": self.kind, "f": self.f.descriptor(), "fraction": self.fraction}


_VALUE_KIND = (
    ((CircleFourier, CircleIndicator, HalfCircleCosine), "angles"),
    ((PlanarRadial, PlanarPolynomial, PlanarIndicator), "complex"),
    ((Indicator, IntervalChebyshev, Polynomial, Grid), "reals"),
)


def _required_kind(stat) -> str | None:
    if isinstance(stat, RestrictedSum):
        return "reals"
    for types, kind in _VALUE_KIND:
        if isinstance(stat, types):
            return kind
    return None  # generic callables go anywhere


def check_compatible(stat: LinearStatistic, spec: EnsembleSpec) -> None:
    need = _required_kind(stat)
    if need is not None and need != spec.kind:
        raise InputError(f"{stat.kind} statistic needs {need} values, {spec.family} gives {spec.kind}")


def total(stat: LinearStatistic, values) -> float:
    """sum_j f(x_j) on one realisation."""
    if isinstance(stat, RestrictedSum):
        return stat.total(values)
    v = np.asarray(stat(values))
    if np.iscomplexobj(v):
        if np.any(np.abs(v.imag) > 1e-9 * (1 + np.abs(v.real))):
            raise InputError("statistic is not real on the sample")
        v = v.real
    return math.fsum(v.astype(np.float64))


# ---------------------------------------------------------------------------
# Per-sample evaluation
# ---------------------------------------------------------------------------

_TRACE_FAMILIES = ("CUE", "COE", "CSE", "circular_beta")


def _fourier_from_traces(stat: CircleFourier, traces: np.ndarray, n: int) -> float:
    acc = 0j
    for l, c in zip(stat.ls.tolist(), stat.coeffs):
        if l == 0:
            acc += c * n
        else:
            t = traces[abs(l) - 1]
            acc += c * (np.conj(t) if l > 0 else t)  # sum_j e^{-ilx_j}
    return float(acc.real)


def _trace_expressible(s, spec) -> bool:
    if isinstance(s, Polynomial):
        return spec.family in samplers.DENSE_HERMITIAN and s.degree <= 2
    if isinstance(s, PlanarPolynomial):
        return all(i + j <= 1 for i, j in s.coeffs)
    return False


def _from_traces(s, n, t1, t2) -> float:
    """sum_j f(z_j) from Tr X and Tr X^2 (degree <= 2 real, or linear planar)."""
    if isinstance(s, Polynomial):
        c = np.zeros(3)
        c[: len(s.coeffs)] = s.coeffs
        return math.fsum([c[0] * n, c[1] * t1.real, c[2] * t2.real])
    return math.fsum([c * (n if (i, j) == (0, 0) else (t1.real if i else t1.imag))
                      for (i, j), c in s.coeffs.items()])


def _evaluator(spec: EnsembleSpec, stats: Sequence[LinearStatistic], seed: int) -> Callable:
    """stream -> vector of statistic totals, using a fast path where one exists."""
    for s in stats:
        check_compatible(s, spec)
    stats = list(stats)
    if spec.family in _TRACE_FAMILIES and all(isinstance(s, CircleFourier) for s in stats):
        m = max(max(s.degree for s in stats), 1)

        def run(stream):
            tr = samplers.power_traces(spec, seed, stream, m)
            return [_fourier_from_traces(s, tr, spec.N) for s in stats]
        return run
    if spec.family in samplers.DENSE and all(_trace_expressible(s, spec) for s in stats):
        def run(stream):
            t1, t2 = samplers.matrix_traces(spec, seed, stream)
            return [_from_traces(s, spec.N, t1, t2) for s in stats]
        return run
    if spec.family == "GinUE" and all(isinstance(s, PlanarRadial) for s in stats):
        def run(stream):
            r = samplers.ginue_radii(spec, seed, stream)
            return [math.fsum(s.h(r)) for s in stats]
        return run

    def run(stream):
        v = samplers.sample(spec, seed, stream).values
        return [total(s, v) for s in stats]
    return run


def _map_streams(fn: Callable, streams: Sequence[int], threads: int) -> np.ndarray:
    if threads <= 1:
        rows = [fn(s) for s in streams]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(fn, streams, chunksize=max(1, len(streams) // (8 * threads))))
    return np.asarray(rows, dtype=np.float64)


def sample_statistics(spec: EnsembleSpec, stats: Sequence[LinearStatistic], n_samples: int,
                      seed: int, stream_base: int = 0, threads: int = 1) -> np.ndarray:
    """(n_samples, len(stats)) array of totals; row i comes from stream ``stream_base + i``."""
    fn = _evaluator(spec, stats, seed)
    return _map_streams(fn, range(stream_base, stream_base + n_samples), threads)


# ---------------------------------------------------------------------------
# Jackknife
# ---------------------------------------------------------------------------

def _fsum_cols(a: np.ndarray) -> np.ndarray:
    return np.array([math.fsum(c) for c in np.asarray(a).T]) if a.ndim == 2 else np.array(math.fsum(a))


def jackknife_moments(data: np.ndarray, n_batches: int = N_BATCHES):
    """Means, covariance matrix and their delete-one-batch jackknife standard errors.

    data has shape (n, k). Batches are consecutive blocks of (nearly) equal size.
    """
    x = np.asarray(data, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    n, k = x.shape
    if n < 2:
        raise InputError("need at least two samples")
    B = min(n_batches, n)
    mean = _fsum_cols(x) / n
    y = x - mean  # shift: keeps the raw-moment sums well conditioned
    blocks = np.array_split(np.arange(n), B)
    s1 = np.array([_fsum_cols(y[b]) for b in blocks])  # (B, k)
    s2 = np.array([[[math.fsum(y[b, i] * y[b, j]) for j in range(k)] for i in range(k)]
                   for b in blocks])  # (B, k, k)
    sizes = np.array([len(b) for b in blocks], dtype=np.float64)
    T1 = np.array([math.fsum(c) for c in s1.T])
    T2 = np.array([[math.fsum(s2[:, i, j]) for j in range(k)] for i in range(k)])

    def cov_from(m, t1, t2):
        mu = t1 / m
        return (t2 - m * np.outer(mu, mu)) / (m - 1)

    cov = cov_from(n, T1, T2)
    jm = np.empty((B, k))
    jc = np.empty((B, k, k))
    for b in range(B):
        m = n - sizes[b]
        jm[b] = mean + (T1 - s1[b]) / m
        jc[b] = cov_from(m, T1 - s1[b], T2 - s2[b])
    f = (B - 1) / B
    mean_se = np.sqrt(f * np.sum((jm - jm.mean(axis=0)) ** 2, axis=0))
    cov_se = np.sqrt(f * np.sum((jc - jc.mean(axis=0)) ** 2, axis=0))
    cov = (cov + cov.T) / 2
    return mean, cov, mean_se, cov_se


@dataclass
class MCEstimate:
    estimate: float
    se: float
    means: list
    mean_se: list
    cov: list
    cov_se: list
    n_samples: int
    seed: int
    stream_base: int
    wall_time: float
    spec: EnsembleSpec
    statistics: list = field(default_factory=list)

    def within(self, target: float, k: float = 3.0) -> bool:
        return abs(self.estimate - target) <= k * self.se

    def z_score(self, target: float) -> float:
        return (self.estimate - target) / self.se if self.se > 0 else math.inf

    def to_json(self) -> dict:
        return {"estimate": self.estimate, "se": self.se, "n": self.n_samples, "seed": self.seed,
                "stream_base": self.stream_base, "means": self.means, "mean_se": self.mean_se,
                "cov": self.cov, "cov_se": self.cov_se, "wall_time": self.wall_time,
                "spec": self.spec.to_json(), "statistics": self.statistics}


def _descr(s):
    return s.descriptor() if hasattr(s, "descriptor") else {"kind": "callable"}


def estimate_from_data(data, spec, seed, stream_base, stats, wall_time=0.0, entry=(0, 1)) -> MCEstimate:
    mean, cov, mean_se, cov_se = jackknife_moments(data)
    i, j = entry if cov.shape[0] > 1 else (0, 0)
    return MCEstimate(float(cov[i, j]), float(cov_se[i, j]), mean.tolist(), mean_se.tolist(),
                      cov.tolist(), cov_se.tolist(), int(len(data)), int(seed), int(stream_base),
                      wall_time, spec, [_descr(s) for s in stats])


def estimate_covariance(f: LinearStatistic, g: LinearStatistic, spec: EnsembleSpec,
                        n_samples: int, seed: int, stream_base: int = 0,
                        threads: int = 1) -> MCEstimate:
    """Sample Cov(sum f, sum g) with a 20-batch jackknife standard error."""
    if n_samples < 100:
        raise InputError("n_samples must be at least 100")
    t0 = time.perf_counter()
    same = f is g
    stats = [f] if same else [f, g]
    data = sample_statistics(spec, stats, n_samples, seed, stream_base, threads)
    if same:
        data = np.column_stack([data[:, 0], data[:, 0]])
    return estimate_from_data(data, spec, seed, stream_base, [f, g], time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# Counting statistics
# ---------------------------------------------------------------------------

def _count_fast(spec: EnsembleSpec, regions, seed: int) -> Callable | None:
    fam = spec.family
    if fam in ("CUE", "circular_beta") and all(type(r) is CircleIndicator and 0 <= r.a
                                               and r.b <= 2 * np.pi for r in regions):
        th = np.array(sorted({t for r in regions for t in (r.a, r.b)}))
        pos = {t: i for i, t in enumerate(th)}

        def run(stream):
            c = samplers.circular_counts(spec, seed, stream, th)
            # counts on (a, b]; the closed-arc difference has probability zero
            return [float(c[pos[r.b]] - (c[pos[r.a]] if r.a > 0 else 0)) for r in regions]
        return run
    if fam in ("Gaussian_beta", "Laguerre_beta", "HighTempGaussian", "HighTempLaguerre") and \
            all(type(r) is Indicator for r in regions):
        th = np.array(sorted({t for r in regions for t in (r.a, r.b)}))
        pos = {t: i for i, t in enumerate(th)}

        def run(stream):
            c = samplers.tridiagonal_counts(spec, seed, stream, th)
            return [float(c[pos[r.b]] - c[pos[r.a]]) for r in regions]
        return run
    disks = all(isinstance(r, PlanarIndicator) and r.shape == "disk" and r.center == 0
                for r in regions)
    if fam == "GinUE" and disks:
        def run(stream):
            rad = samplers.ginue_radii(spec, seed, stream)
            return [float(np.count_nonzero(rad <= r.size)) for r in regions]
        return run
    if fam == "cGP" and disks:
        def run(stream):
            return samplers.cgp_disk_counts(spec, seed, stream, [r.size for r in regions]).astype(float).tolist()
        return run
    return None


def counting_profile(spec: EnsembleSpec, regions: Sequence[LinearStatistic], n_samples: int,
                     seed: int, randomize_rotation: bool = False, stream_base: int = 0,
                     threads: int = 1, rotations: int = 1) -> list:
    """Mean and variance of the number of points in each region.

    With ``randomize_rotation`` every sample is viewed through ``rotations``
    independent uniform rotations (planar regions only); each view is one row.
    """
    regions = list(regions)
    for r in regions:
        check_compatible(r, spec)
    if randomize_rotation and spec.kind != "complex":
        raise InputError("rotation is only defined for planar regions")
    t0 = time.perf_counter()
    fast = None if randomize_rotation else _count_fast(spec, regions, seed)
    if fast is None:
        def fast(stream):
            v = samplers.sample(spec, seed, stream).values
            if not randomize_rotation:
                return [float(np.count_nonzero(r(v))) for r in regions]
            ang = generator(seed, stream, _ROTATION_SUBSTREAM).uniform(0, 2 * np.pi, rotations)
            rows = []
            for a in ang:
                w = v * np.exp(-1j * a)  # rotating the region by a
                rows.append([float(np.count_nonzero(r(w))) for r in regions])
            return rows
    data = _map_streams(fast, range(stream_base, stream_base + n_samples), threads)
    if data.ndim == 3:
        data = data.reshape(-1, len(regions))
    wall = time.perf_counter() - t0
    out = []
    for k, r in enumerate(regions):
        mean, cov, mse, cse = jackknife_moments(data[:, k])
        out.append(MCEstimate(float(cov[0, 0]), float(cse[0, 0]), mean.tolist(), mse.tolist(),
                              cov.tolist(), cse.tolist(), int(len(data)), int(seed),
                              int(stream_base), wall, spec, [_descr(r)]))
    return out


def fit_line(x, y, se=None):
    """Weighted least squares y = a + b x; returns (b, a, se_b)."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    w = np.ones_like(x) if se is None else 1 / np.maximum(np.asarray(se, float), 1e-300) ** 2
    X = np.column_stack([np.ones_like(x), x])
    A = X.T @ (w[:, None] * X)
    coef = np.linalg.solve(A, X.T @ (w * y))
    res = y - X @ coef
    dof = max(len(x) - 2, 1)
    s2 = float(np.sum(w * res * res) / dof) if se is None else 1.0
    cov = np.linalg.inv(A) * s2
    return float(coef[1]), float(coef[0]), float(math.sqrt(cov[1, 1]))


def fit_power(x, y, se=None):
    """Exponent p of y ~ C x^p by a log-log fit; returns (p, C, se_p)."""
    ly = np.log(np.asarray(y, float))
    lse = None if se is None else np.asarray(se, float) / np.asarray(y, float)
    p, a, sp = fit_line(np.log(np.asarray(x, float)), ly, lse)
    return p, math.exp(a), sp


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------

@dataclass
class OracleResult:
    value: float
    error: float
    N: int
    ensemble: str
    nodes: int = 0
    normalization: float = math.nan
    extras: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"value": self.value, "error": self.error, "N": self.N, "ensemble": self.ensemble,
                "nodes": self.nodes, "normalization": self.normalization, "extras": self.extras}


def _vandermonde_abs(x, beta):
    out = np.ones(x.shape[1:])
    n = x.shape[0]
    for j in range(n):
        for k in range(j + 1, n):
            out = out * np.abs(x[k] - x[j]) ** beta
    return out


def _oracle_setup(spec: EnsembleSpec):
    """Integration box, change of variables and log-free weight on the ordered chamber.

    Returns (dims, nodes(n) -> (points (N, ...), jacobian weights), density(points)).
    """
    N, beta = spec.N, spec.beta
    fam = spec.family
    if fam in ("CUE", "CUE_alpha"):
        a = spec.alpha if fam == "CUE_alpha" else 0.0

        def density(x):
            out = np.ones(x.shape[1:])
            for j in range(N):
                for k in range(j + 1, N):
                    num = np.abs(np.exp(1j * x[j]) - np.exp(1j * x[k])) ** 2
                    den = np.abs(np.exp(1j * x[j]) - a * np.exp(1j * x[k])) ** 2
                    out = out * num / den
            return out / (2 * np.pi) ** N

        def grid(n):
            t, w = np.polynomial.legendre.leggauss(n)
            return [(np.pi * (t + 1), np.pi * w)] * N, None
        return density, grid, False
    if fam == "Gaussian_beta":
        s = 1 / math.sqrt(beta * N)
        L = 9 * s

        def density(x):
            return np.exp(-beta * N * np.sum(x * x, axis=0)) * _vandermonde_abs(x, beta)

        def grid(n):
            t, w = np.polynomial.legendre.leggauss(n)
            first = (L * t, L * w)
            # gaps u = v^2, v in [0, sqrt(2 L)]
            V = math.sqrt(2 * L)
            v = V * (t + 1) / 2
            gap = (v * v, V / 2 * w * 2 * v)
            return [first] + [gap] * (N - 1), "chain"
        return density, grid, True
    if fam == "Laguerre_beta":
        a = spec.alpha * beta * N / 2
        X = 120 / (beta * N) + 4 * (1 + math.sqrt(1 + spec.alpha)) ** 2

        def density(x):
            return (np.prod(x ** a, axis=0) * np.exp(-beta * N * np.sum(x, axis=0) / 2)
                    * _vandermonde_abs(x, beta))

        def grid(n):
            t, w = np.polynomial.legendre.leggauss(n)
            V = math.sqrt(X)
            v = V * (t + 1) / 2
            sq = (v * v, V / 2 * w * 2 * v)
            return [sq] * N, "chain"
        return density, grid, True
    raise InputError(f"no explicit joint density for {fam}")


def _tensor_moments(spec, f, g, n, density, grid, ordered, chunk=1 << 20):
    axes, mode = grid(n)
    N = spec.N
    pts = [a[0] for a in axes]
    wts = [a[1] for a in axes]
    mesh_shape = tuple(len(p) for p in pts)
    total_nodes = int(np.prod(mesh_shape))
    acc = np.zeros(4)
    idx_all = np.arange(total_nodes)
    for start in range(0, total_nodes, chunk):
        idx = np.unravel_index(idx_all[start:start + chunk], mesh_shape)
        coords = np.array([pts[d][idx[d]] for d in range(N)])
        w = np.prod([wts[d][idx[d]] for d in range(N)], axis=0)
        if mode == "chain":
            coords = np.cumsum(coords, axis=0)  # x_1 and successive gaps
        p = density(coords) * w
        F = np.sum(np.asarray(f(coords), float).reshape(coords.shape), axis=0) if f is not None else 0
        G = np.sum(np.asarray(g(coords), float).reshape(coords.shape), axis=0) if g is not None else 0
        acc += [math.fsum(p), math.fsum(p * F), math.fsum(p * G), math.fsum(p * F * G)]
    norm = acc[0] * (math.factorial(N) if ordered else 1)
    ef, eg, efg = acc[1] / acc[0], acc[2] / acc[0], acc[3] / acc[0]
    return efg - ef * eg, norm, total_nodes


def brute_force_covariance(spec: EnsembleSpec, f, g, tolerance: float = 1e-8,
                           max_evaluations: int = MAX_EVALUATIONS,
                           n_start: int = 12) -> OracleResult:
    """Cov(sum f, sum g) by tensor Gauss-Legendre quadrature of the joint density, N <= 3.

    Real-line families are integrated over the ordered chamber x_1 < ... < x_N
    in the coordinates (x_1, gaps) with gaps = v^2, which makes the
    Vandermonde factor smooth; the order is doubled until two successive
    values agree to ``tolerance``.
    """
    if spec.N > 3:
        raise InputError("the oracle is limited to N <= 3")
    for s in (f, g):
        check_compatible(s, spec)
    density, grid, ordered = _oracle_setup(spec)
    n = n_start
    prev = None
    evals = 0
    while True:
        if evals + n ** spec.N > max_evaluations:
            raise PrecisionError(f"tolerance {tolerance} not reached within {max_evaluations} evaluations")
        val, norm, nodes = _tensor_moments(spec, f, g, n, density, grid, ordered)
        evals += nodes
        if prev is not None:
            err = abs(val - prev)
            if err <= tolerance:
                return OracleResult(float(val), float(err), spec.N, spec.family, evals, float(norm))
        prev = val
        n *= 2


# ---------------------------------------------------------------------------
# Finite-N references for the oracle
# ---------------------------------------------------------------------------

def cue_alpha_normalization(N: int, alpha: float) -> float:
    """Q_N alpha^{-N(N-1)/2} = (2 pi)^N N! prod (1 - alpha)/(1 - alpha^k)."""
    return (2 * np.pi) ** N * math.factorial(N) * math.prod((1 - alpha) / (1 - alpha ** k)
                                                            for k in range(1, N + 1))


def beta2_kernel_covariance(f, g, spec: EnsembleSpec, n_quad: int = 200) -> float:
    """Finite-N Cov(sum f, sum g) at beta = 2 from the orthogonal-polynomial kernel.

    Cov = sum_{j<N} <f g phi_j^2> - sum_{j,k<N} <f phi_j phi_k><g phi_k phi_j>.
    """
    N = spec.N
    if spec.beta != 2:
        raise InputError("kernel formula is for beta = 2")
    if spec.family == "Gaussian_beta":
        y, w = special.roots_hermite(n_quad)
        x = y / math.sqrt(2 * N)  # weight e^{-2 N x^2}
        phi = np.empty((N, len(y)))
        # orthonormal Hermite functions w.r.t. e^{-y^2}
        phi[0] = np.pi ** -0.25
        if N > 1:
            phi[1] = math.sqrt(2) * y * phi[0]
        for j in range(2, N):
            phi[j] = math.sqrt(2 / j) * y * phi[j - 1] - math.sqrt((j - 1) / j) * phi[j - 2]
    elif spec.family == "Laguerre_beta":
        a = spec.alpha * N  # alpha beta N / 2 at beta = 2
        y, w = special.roots_genlaguerre(n_quad, a)
        x = y / N
        phi = np.array([special.eval_genlaguerre(j, a, y)
                        / math.exp(0.5 * (special.gammaln(j + a + 1) - special.gammaln(j + 1)))
                        for j in range(N)])
    else:
        raise InputError(f"no kernel formula for {spec.family}")
    fx = np.asarray(f(x), float)
    gx = np.asarray(g(x), float)
    F = (phi * w * fx) @ phi.T
    G = (phi * w * gx) @ phi.T
    diag = np.sum(phi * phi * w * fx * gx, axis=1)
    return math.fsum(diag) - float(np.sum(F * G.T))
