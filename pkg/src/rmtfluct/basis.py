"""Linear statistics, coefficient transforms and special functions.

Conventions
-----------
Circle:   f_l = (1/2pi) int_0^{2pi} f(x) e^{ilx} dx, so f(x) = sum_l f_l e^{-ilx}.
Cosine:   f_n^c = (1/pi) int_0^pi f(x) cos(nx) dx, so f = f_0 + 2 sum_{n>=1} f_n^c cos(nx).
Interval: the cosine coefficients of theta -> f(a1 + a2 cos theta), with
          a1 = (a+b)/2, a2 = (b-a)/2.
"""
from __future__ import annotations

import ast
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
from numpy.polynomial import chebyshev as _cheb
from numpy.polynomial import polynomial as _poly


class InputError(ValueError):
    """Malformed or non-finite input."""


class DomainError(ValueError):
    """Argument outside the domain of a function."""


# ---------------------------------------------------------------------------
# Coefficient tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CoefficientTable:
    """Coefficients indexed by ``lo, lo+1, ..., lo+len(values)-1``."""

    lo: int
    values: np.ndarray
    kind: str  # "circle" | "cosine" | "chebyshev"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.ndim != 1:
            raise InputError("coefficient table must be one dimensional")
        if not np.all(np.isfinite(v)):
            raise InputError("non-finite coefficients")
        object.__setattr__(self, "values", v)

    @property
    def hi(self) -> int:
        return self.lo + len(self.values) - 1

    @property
    def index(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1)

    def __getitem__(self, l):
        l = np.asarray(l)
        pos = l - self.lo
        ok = (pos >= 0) & (pos < len(self.values))
        out = np.zeros(l.shape, dtype=np.complex128)
        out[ok] = self.values[pos[ok]]
        return out if out.ndim else complex(out)

    def real(self) -> np.ndarray:
        return self.values.real


# ---------------------------------------------------------------------------
# Linear statistics
# ---------------------------------------------------------------------------

class LinearStatistic:
    """A test function f; ``f(x)`` evaluates it on sample values."""

    kind = "abstract"

    def __call__(self, x):  # pragma: no cover - abstract
        raise NotImplementedError

    def descriptor(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True, eq=False)
class CircleFourier(LinearStatistic):
    """Trigonometric polynomial sum_l f_l e^{-ilx}."""

    ls: np.ndarray
    coeffs: np.ndarray
    kind = "circle_fourier"

    def __post_init__(self):
        ls = np.asarray(self.ls, dtype=np.int64)
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if ls.shape != c.shape:
            raise InputError("ls and coeffs must match")
        if not np.all(np.isfinite(c)):
            raise InputError("non-finite coefficients")
        object.__setattr__(self, "ls", ls)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_dict(cls, table: Mapping[int, complex]):
        ls = sorted(table)
        return cls(np.array(ls), np.array([table[l] for l in ls]))

    @classmethod
    def cos(cls, m: int, amplitude: float = 1.0):
        if m == 0:
            return cls(np.array([0]), np.array([amplitude]))
        return cls(np.array([-m, m]), np.array([amplitude / 2, amplitude / 2]))

    @classmethod
    def sin(cls, m: int, amplitude: float = 1.0):
        return cls(np.array([-m, m]), np.array([-0.5j * amplitude, 0.5j * amplitude]))

    @property
    def degree(self) -> int:
        return int(np.max(np.abs(self.ls))) if len(self.ls) else 0

    def is_real(self, tol=1e-14) -> bool:
        t = dict(zip(self.ls.tolist(), self.coeffs))
        return all(abs(t.get(-l, 0) - np.conj(c)) <= tol * max(1, abs(c)) for l, c in t.items())

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        v = np.exp(-1j * np.multiply.outer(x, self.ls)) @ self.coeffs
        return v.real if self.is_real() else v

    def descriptor(self):
        return {"kind": self.kind, "ls": self.ls.tolist(),
                "re": self.coeffs.real.tolist(), "im": self.coeffs.imag.tolist()}


@dataclass(frozen=True)
class Indicator(LinearStatistic):
    """Indicator of the closed interval [a, b] on the real line.

    On the circle it is the arc from a to b, which requires b - a <= 2 pi.
    """

    a: float
    b: float
    kind = "indicator"

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)) or self.b <= self.a:
            raise InputError("indicator needs finite a < b")

    def __call__(self, x):
        x = np.asarray(x)
        return ((x >= self.a) & (x <= self.b)).astype(np.float64)

    def circle_coeff(self, l):
        l = np.asarray(l, dtype=np.float64)
        out = np.empty(l.shape, dtype=np.complex128)
        zero = l == 0
        lz = np.where(zero, 1.0, l)
        out[...] = (np.exp(1j * lz * self.b) - np.exp(1j * lz * self.a)) / (2j * np.pi * lz)
        out[zero] = (self.b - self.a) / (2 * np.pi)
        return out

    def cosine_coeff(self, n):
        """Coefficients for the restriction to [0, pi]."""
        a, b = max(self.a, 0.0), min(self.b, np.pi)
        n = np.asarray(n, dtype=np.float64)
        nz = np.where(n == 0, 1.0, n)
        out = (np.sin(b * nz) - np.sin(a * nz)) / (np.pi * nz)
        return np.where(n == 0, (b - a) / np.pi, out)

    def endpoints(self):
        return (self.a, self.b)

    def descriptor(self):
        return {"kind": self.kind, "a": self.a, "b": self.b}


@dataclass(frozen=True)
class CircleIndicator(Indicator):
    """Arc indicator evaluated modulo 2 pi."""

    kind = "arc"

    def __post_init__(self):
        super().__post_init__()
        if self.b - self.a > 2 * np.pi:
            raise InputError("arc longer than the circle")

    def __call__(self, x):
        d = np.mod(np.asarray(x, dtype=np.float64) - self.a, 2 * np.pi)
        return (d <= self.b - self.a).astype(np.float64)


@dataclass(frozen=True, eq=False)
class HalfCircleCosine(LinearStatistic):
    """f(x) = c_0 + 2 sum_{n>=1} c_n cos(nx) on [0, pi]."""

    coeffs: np.ndarray
    kind = "half_circle_cosine"

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.float64)
        if not np.all(np.isfinite(c)):
            raise InputError("non-finite coefficients")
        object.__setattr__(self, "coeffs", c)

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        n = np.arange(len(self.coeffs))
        w = np.where(n == 0, 1.0, 2.0) * self.coeffs
        return np.cos(np.multiply.outer(x, n)) @ w

    def descriptor(self):
        return {"kind": self.kind, "coeffs": self.coeffs.tolist()}


@dataclass(frozen=True, eq=False)
class IntervalChebyshev(LinearStatistic):
    """f(x) = c_0 + 2 sum c_n T_n(t), t = (x - a1)/a2 on [a, b]."""

    a: float
    b: float
    coeffs: np.ndarray
    kind = "interval_chebyshev"

    def __post_init__(self):
        if not self.a < self.b:
            raise InputError("IntervalChebyshev requires a < b")
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=np.float64))

    def __call__(self, x):
        t = (np.asarray(x, dtype=np.float64) - (self.a + self.b) / 2) / ((self.b - self.a) / 2)
        c = self.coeffs.copy()
        c[1:] *= 2
        return _cheb.chebval(t, c)

    def descriptor(self):
        return {"kind": self.kind, "a": self.a, "b": self.b, "coeffs": self.coeffs.tolist()}


@dataclass(frozen=True, eq=False)
class Polynomial(LinearStatistic):
    """sum_k c_k x^k with real coefficients in ascending order."""

    coeffs: np.ndarray
    kind = "poly"

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.float64)
        if c.ndim != 1 or not np.all(np.isfinite(c)):
            raise InputError("polynomial coefficients must be a finite vector")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def monomial(cls, k: int):
        c = np.zeros(k + 1)
        c[k] = 1.0
        return cls(c)

    @property
    def degree(self) -> int:
        nz = np.flatnonzero(self.coeffs)
        return int(nz[-1]) if len(nz) else 0

    def __call__(self, x):
        return _poly.polyval(np.asarray(x), self.coeffs)

    def descriptor(self):
        return {"kind": self.kind, "coeffs": self.coeffs.tolist()}


@dataclass(frozen=True, eq=False)
class Grid(LinearStatistic):
    """Uniform samples of a periodic function at x_j = 2 pi j / M."""

    values: np.ndarray
    kind = "grid"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or len(v) < 2 or not np.all(np.isfinite(v)):
            raise InputError("grid must be a finite vector of length >= 2")
        object.__setattr__(self, "values", v)

    def coefficients(self) -> CoefficientTable:
        m = len(self.values)
        c = np.fft.ifft(self.values)
        half = m // 2
        ls = np.arange(-half, m - half)
        if m % 2 == 0:
            # split the Nyquist term evenly over +-m/2
            vals = np.concatenate([c[half:], c[:half]])
            top = vals[0] / 2
            vals = np.concatenate([[top], vals[1:], [top]])
            return CoefficientTable(-half, vals, "circle")
        return CoefficientTable(int(ls[0]), np.concatenate([c[half + 1:], c[:half + 1]]), "circle")

    def __call__(self, x):
        t = self.coefficients()
        return (np.exp(-1j * np.multiply.outer(np.asarray(x, float), t.index)) @ t.values).real

    def descriptor(self):
        return {"kind": self.kind, "values": self.values.tolist()}


@dataclass(frozen=True, eq=False)
class Function(LinearStatistic):
    """Wrapper for an arbitrary vectorised callable."""

    func: Callable
    label: str = "callable"
    kind = "function"

    def __call__(self, x):
        return np.asarray(self.func(np.asarray(x)), dtype=np.float64)

    def descriptor(self):
        return {"kind": self.kind, "label": self.label}


# planar -------------------------------------------------------------------

_SAFE_NAMES = {
    "sqrt": np.sqrt, "exp": np.exp, "log": np.log, "sin": np.sin, "cos": np.cos,
    "tan": np.tan, "arctan": np.arctan, "abs": np.abs, "pi": np.pi, "e": np.e,
    "cosh": np.cosh, "sinh": np.sinh, "tanh": np.tanh,
}
_ALLOWED_NODES = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load, ast.Constant,
    ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd,
)


def compile_expression(expr: str, variables: Sequence[str]) -> Callable:
    """Compile a small arithmetic expression such as ``"r^2"``.

    Only arithmetic, the listed variables and a few numpy functions are
    accepted.
    """
    src = expr.replace("^", "**")
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise InputError(f"cannot parse expression {expr!r}") from exc
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise InputError(f"disallowed syntax in {expr!r}")
        if isinstance(node, ast.Name) and node.id not in _SAFE_NAMES and node.id not in variables:
            raise InputError(f"unknown name {node.id!r} in {expr!r}")
    code = compile(tree, "<expr>", "eval")
    names = dict(_SAFE_NAMES)

    def fn(*args):
        env = dict(names)
        env.update(zip(variables, args))
        out = eval(code, {"__builtins__": {}}, env)
        return np.broadcast_to(np.asarray(out, dtype=np.float64), np.broadcast(*args).shape).copy()

    return fn


@dataclass(frozen=True, eq=False)
class PlanarRadial(LinearStatistic):
    """f(z) = h(|z|) for a radial profile h given as callable or grid on [0, 1].

    ``derivative`` may be supplied; otherwise a central difference is used.
    """

    profile: Callable | np.ndarray
    derivative: Callable | None = None
    expr: str | None = None
    kind = "planar_radial"

    @classmethod
    def from_expr(cls, expr: str):
        return cls(compile_expression(expr, ["r"]), expr=expr)

    def h(self, r):
        r = np.asarray(r, dtype=np.float64)
        if callable(self.profile):
            return np.asarray(self.profile(r), dtype=np.float64)
        grid = np.asarray(self.profile, dtype=np.float64)
        return np.interp(r, np.linspace(0.0, 1.0, len(grid)), grid)

    def dh(self, r):
        r = np.asarray(r, dtype=np.float64)
        if self.derivative is not None:
            return np.asarray(self.derivative(r), dtype=np.float64)
        # fourth-order stencils; one-sided next to r = 0
        s = 1e-3
        c = np.maximum(r, 2 * s)
        central = (self.h(c - 2 * s) - 8 * self.h(c - s) + 8 * self.h(c + s)
                   - self.h(c + 2 * s)) / (12 * s)
        fwd = (-25 * self.h(r) + 48 * self.h(r + s) - 36 * self.h(r + 2 * s)
               + 16 * self.h(r + 3 * s) - 3 * self.h(r + 4 * s)) / (12 * s)
        return np.where(r >= 2 * s, central, fwd)

    def __call__(self, z):
        return self.h(np.abs(np.asarray(z)))

    def descriptor(self):
        return {"kind": self.kind, "expr": self.expr}


@dataclass(frozen=True, eq=False)
class PlanarPolynomial(LinearStatistic):
    """sum c_ij x^i y^j, with coefficients as a mapping (i, j) -> c."""

    coeffs: Mapping[tuple, float]
    kind = "planar_poly"

    def __post_init__(self):
        clean = {}
        for (i, j), c in dict(self.coeffs).items():
            if i < 0 or j < 0 or not math.isfinite(c):
                raise InputError("bad planar polynomial term")
            clean[(int(i), int(j))] = float(c)
        object.__setattr__(self, "coeffs", clean)

    def __call__(self, z):
        z = np.asarray(z, dtype=np.complex128)
        x, y = z.real, z.imag
        out = np.zeros(z.shape)
        for (i, j), c in self.coeffs.items():
            out = out + c * x**i * y**j
        return out

    def gradient(self, x, y):
        gx = np.zeros(np.broadcast(x, y).shape)
        gy = np.zeros_like(gx)
        for (i, j), c in self.coeffs.items():
            if i:
                gx = gx + c * i * x ** (i - 1) * y**j
            if j:
                gy = gy + c * j * x**i * y ** (j - 1)
        return gx, gy

    def descriptor(self):
        return {"kind": self.kind, "terms": [[i, j, c] for (i, j), c in self.coeffs.items()]}


@dataclass(frozen=True)
class PlanarIndicator(LinearStatistic):
    """Disk of radius R, or square of side L rotated by ``angle``, centred at ``center``."""

    shape: str  # "disk" | "square"
    size: float
    angle: float = 0.0
    center: complex = 0j
    kind = "planar_indicator"

    def __post_init__(self):
        if self.shape not in ("disk", "square"):
            raise InputError("shape must be 'disk' or 'square'")
        if not self.size > 0:
            raise InputError("region must have positive measure")

    def rotated(self, angle: float) -> "PlanarIndicator":
        return PlanarIndicator(self.shape, self.size, angle, self.center)

    def __call__(self, z):
        w = np.asarray(z, dtype=np.complex128) - self.center
        if self.shape == "disk":
            return (np.abs(w) <= self.size).astype(np.float64)
        w = w * np.exp(-1j * self.angle)
        h = self.size / 2
        return ((np.abs(w.real) <= h) & (np.abs(w.imag) <= h)).astype(np.float64)

    @property
    def perimeter(self) -> float:
        return 2 * np.pi * self.size if self.shape == "disk" else 4 * self.size

    def descriptor(self):
        return {"kind": self.kind, "shape": self.shape, "size": self.size,
                "angle": self.angle, "center": [self.center.real, self.center.imag]}


# ---------------------------------------------------------------------------
# Transforms
# ---------------------------------------------------------------------------

def _grid_size(n_max: int) -> int:
    return max(256, 4 * n_max)


def circle_fourier_coeffs(f, n_max: int) -> CoefficientTable:
    """Circle Fourier coefficients f_l for |l| <= n_max."""
    if n_max < 0:
        raise InputError("n_max must be non-negative")
    ls = np.arange(-n_max, n_max + 1)
    if isinstance(f, CircleFourier):
        t = dict(zip(f.ls.tolist(), f.coeffs))
        return CoefficientTable(-n_max, np.array([t.get(int(l), 0) for l in ls]), "circle")
    if isinstance(f, Indicator):
        return CoefficientTable(-n_max, f.circle_coeff(ls), "circle")
    if isinstance(f, Grid):
        return CoefficientTable(-n_max, f.coefficients()[ls], "circle")
    fn = f if callable(f) else None
    if fn is None:
        raise InputError("unsupported statistic for circle coefficients")
    m = _grid_size(n_max)
    x = 2 * np.pi * np.arange(m) / m
    v = np.asarray(fn(x), dtype=np.complex128)
    if not np.all(np.isfinite(v)):
        raise InputError("non-finite samples")
    c = np.fft.ifft(v)
    return CoefficientTable(-n_max, c[np.mod(ls, m)], "circle")


def cosine_coeffs(f, n_max: int) -> CoefficientTable:
    """f_n^c = (1/pi) int_0^pi f(x) cos(nx) dx for n = 0..n_max."""
    if n_max < 0:
        raise InputError("n_max must be non-negative")
    n = np.arange(n_max + 1)
    if isinstance(f, HalfCircleCosine):
        c = np.zeros(n_max + 1)
        k = min(len(f.coeffs), n_max + 1)
        c[:k] = f.coeffs[:k]
        return CoefficientTable(0, c, "cosine")
    if isinstance(f, Indicator):
        return CoefficientTable(0, f.cosine_coeff(n), "cosine")
    if isinstance(f, CircleFourier):
        # cos-series content of an even trigonometric polynomial
        t = dict(zip(f.ls.tolist(), f.coeffs))
        if _has_odd_part(t):
            return _cosine_by_fft(f, n_max)
        c = np.array([t.get(int(k), 0) for k in n])
        return CoefficientTable(0, c.real, "cosine")
    if not callable(f):
        raise InputError("unsupported statistic for cosine coefficients")
    return _cosine_by_fft(f, n_max)


def _has_odd_part(t) -> bool:
    return any(abs(t.get(l, 0) - t.get(-l, 0)) > 1e-15 for l in t)


def _cosine_by_fft(f, n_max: int) -> CoefficientTable:
    # even extension g(x) = f(|x|) on [-pi, pi]; g_n = f_n^c
    m = _grid_size(n_max)
    x = 2 * np.pi * np.arange(m) / m
    xe = np.where(x <= np.pi, x, 2 * np.pi - x)
    v = np.asarray(f(xe), dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise InputError("non-finite samples")
    c = np.fft.ifft(v).real
    return CoefficientTable(0, c[: n_max + 1], "cosine")


def chebyshev_coeffs(f, a: float, b: float, n_max: int) -> CoefficientTable:
    """Cosine coefficients of theta -> f(a1 + a2 cos theta)."""
    if not a < b:
        raise InputError("chebyshev_coeffs requires a < b")
    a1, a2 = (a + b) / 2, (b - a) / 2
    if isinstance(f, Polynomial):
        # exact: compose with the affine map then convert to the T basis
        p = np.zeros(1)
        pw = np.ones(1)
        lin = np.array([a1, a2])
        for ck in f.coeffs:
            p = _poly.polyadd(p, ck * pw)
            pw = _poly.polymul(pw, lin)
        t = _cheb.poly2cheb(p)
        out = np.zeros(n_max + 1)
        k = min(len(t), n_max + 1)
        out[:k] = t[:k]
        out[1:] /= 2
        return CoefficientTable(0, out, "chebyshev")
    if isinstance(f, IntervalChebyshev) and (f.a, f.b) == (a, b):
        out = np.zeros(n_max + 1)
        k = min(len(f.coeffs), n_max + 1)
        out[:k] = f.coeffs[:k]
        return CoefficientTable(0, out, "chebyshev")
    if isinstance(f, Indicator):
        # theta-endpoints of the preimage of [f.a, f.b] under x = a1 + a2 cos theta
        lo = np.clip((f.a - a1) / a2, -1, 1)
        hi = np.clip((f.b - a1) / a2, -1, 1)
        arc = Indicator(float(np.arccos(hi)), float(np.arccos(lo))) if hi > lo else None
        if arc is None:
            return CoefficientTable(0, np.zeros(n_max + 1), "chebyshev")
        return CoefficientTable(0, arc.cosine_coeff(np.arange(n_max + 1)), "chebyshev")
    if not callable(f):
        raise InputError("unsupported statistic for chebyshev coefficients")
    t = _cosine_by_fft(lambda th: f(a1 + a2 * np.cos(th)), n_max)
    return CoefficientTable(0, t.values.real, "chebyshev")


def chebyshev_synthesis(coeffs: CoefficientTable, a: float, b: float, x):
    """Inverse of :func:`chebyshev_coeffs` evaluated at points x."""
    return IntervalChebyshev(a, b, coeffs.values.real)(x)


# ---------------------------------------------------------------------------
# Special functions
# ---------------------------------------------------------------------------

# B_2k for k = 1..10
_BERNOULLI = [1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6,
              -3617 / 510, 43867 / 798, -174611 / 330]


def trigamma(x):
    """psi^(1)(x) for x > 0 (vectorised)."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(~(x > 0)):
        raise DomainError("trigamma requires x > 0")
    out = np.zeros_like(x)
    y = x.copy()
    shift = y < 12.0
    while np.any(shift):
        out = out + np.where(shift, 1.0 / np.where(shift, y, 1.0) ** 2, 0.0)
        y = np.where(shift, y + 1.0, y)
        shift = y < 12.0
    inv = 1.0 / y
    inv2 = inv * inv
    series = np.zeros_like(y)
    pw = inv * inv2
    for b in _BERNOULLI[:8]:
        series = series + b * pw
        pw = pw * inv2
    out = out + inv + 0.5 * inv2 + series
    return float(out) if out.ndim == 0 else out


def hurwitz_zeta(s: float, a: float = 1.0, m: int = 16) -> float:
    """zeta(s, a) = sum_{k>=0} (k + a)^{-s} for s > 1, a > 0 (Euler-Maclaurin)."""
    if not s > 1:
        raise DomainError("zeta requires s > 1")
    if not a > 0:
        raise DomainError("hurwitz zeta requires a > 0")
    head = math.fsum((k + a) ** (-s) for k in range(m))
    n = m + a
    tail = n ** (1 - s) / (s - 1) + 0.5 * n ** (-s)
    rising = s  # s (s+1) ... (s+2j-2)
    fact = 2.0  # (2j)!
    pw = n ** (-s - 1)
    for j, b in enumerate(_BERNOULLI, start=1):
        term = b / fact * rising * pw
        tail += term
        rising *= (s + 2 * j - 1) * (s + 2 * j)
        fact *= (2 * j + 1) * (2 * j + 2)
        pw /= n * n
        if abs(term) < 1e-18 * abs(tail):
            break
    return head + tail


def riemann_zeta(s: float) -> float:
    """Riemann zeta(s) for real s > 1."""
    if not s > 1:
        raise DomainError("riemann_zeta requires s > 1")
    return hurwitz_zeta(s, 1.0)


def log_abs_theta1(z, q: float):
    """log |theta_1(z; q)| from the product representation.

    theta_1(z; q) = 2 q^{1/4} sin z prod_{n>=1} (1 - q^{2n})(1 - 2 q^{2n} cos 2z + q^{4n}).
    """
    if not 0 < q < 1:
        raise DomainError("log_abs_theta1 requires 0 < q < 1")
    z = np.asarray(z, dtype=np.float64)
    s = np.abs(np.sin(z))
    if np.any(s < 1e-300) or np.any(np.abs(np.mod(z + np.pi / 2, np.pi) - np.pi / 2) < 1e-15):
        raise DomainError("theta_1 vanishes at z = 0 mod pi")
    c2 = np.cos(2 * z)
    acc = np.zeros_like(z)
    q2n = q * q
    terms = []
    while True:
        t = np.log1p(-q2n) + np.log1p(-2 * q2n * c2 + q2n * q2n)
        terms.append(t)
        if q2n * 4 < 1e-17:
            break
        q2n *= q * q
    acc = np.sum(terms, axis=0) if len(terms) > 1 else terms[0]
    out = math.log(2.0) + 0.25 * math.log(q) + np.log(s) + acc
    return float(out) if out.ndim == 0 else out


def theta1_series(z: float, q: float, terms: int = 200) -> float:
    """theta_1(z; q) = 2 sum_{n>=0} (-1)^n q^{(n+1/2)^2} sin((2n+1) z)."""
    return 2.0 * math.fsum((-1) ** n * q ** ((n + 0.5) ** 2) * math.sin((2 * n + 1) * z)
                           for n in range(terms))


# ---------------------------------------------------------------------------
# JSON construction
# ---------------------------------------------------------------------------

def statistic_from_json(d: Mapping) -> LinearStatistic:
    """Build a statistic from a JSON-style mapping."""
    if not isinstance(d, Mapping) or "kind" not in d:
        raise InputError("statistic descriptor needs a 'kind'")
    kind = d["kind"]
    amp = float(d.get("amplitude", 1.0))
    if kind == "cos":
        return CircleFourier.cos(int(d["m"]), amp)
    if kind == "sin":
        return CircleFourier.sin(int(d["m"]), amp)
    if kind == "circle_fourier":
        c = np.asarray(d["re"], float) + 1j * np.asarray(d.get("im", [0] * len(d["re"])), float)
        return CircleFourier(np.asarray(d["ls"]), c)
    if kind == "indicator":
        return Indicator(float(d["a"]), float(d["b"]))
    if kind == "arc":
        return CircleIndicator(float(d["a"]), float(d["b"]))
    if kind == "half_circle_cosine":
        return HalfCircleCosine(np.asarray(d["coeffs"], float))
    if kind == "cosine_mode":
        c = np.zeros(int(d["m"]) + 1)
        c[int(d["m"])] = 0.5 * amp if int(d["m"]) else amp
        return HalfCircleCosine(c)
    if kind == "interval_chebyshev":
        return IntervalChebyshev(float(d["a"]), float(d["b"]), np.asarray(d["coeffs"], float))
    if kind in ("poly", "polynomial"):
        return Polynomial(np.asarray(d["coeffs"], float))
    if kind == "monomial":
        return Polynomial.monomial(int(d["k"]))
    if kind == "grid":
        return Grid(np.asarray(d["values"], float))
    if kind == "planar_radial":
        return PlanarRadial.from_expr(str(d["expr"]))
    if kind in ("planar_poly", "planar_polynomial"):
        terms = d.get("terms", [])
        return PlanarPolynomial({(int(i), int(j)): float(c) for i, j, c in terms})
    if kind == "planar_indicator":
        ctr = d.get("center", [0.0, 0.0])
        return PlanarIndicator(str(d["shape"]), float(d["size"]), float(d.get("angle", 0.0)),
                               complex(ctr[0], ctr[1]))
    if kind == "expr":
        return Function(compile_expression(str(d["expr"]), ["x"]), label=str(d["expr"]))
    raise InputError(f"unknown statistic kind {kind!r}")
