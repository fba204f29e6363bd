"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5]

The numba timings exclude compilation (one warm-up call). Results are
checked for agreement before timing.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from rmtfluct import _kernels, samplers
from rmtfluct.rng import generator


def best_of(fn, repeat):
    ts = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - t0)
    return min(ts)


def cases():
    d, e = samplers.gaussian_tridiagonal(generator(1, 0), 2000, 2.0)
    t = np.linspace(-1.1, 1.1, 200)
    yield "sturm N=2000 x200", lambda b: _kernels.sturm_counts(d, e * e, t, backend=b)
    alpha = samplers.verblunsky(generator(2, 0), 1000, 2.0)
    th = np.linspace(0.01, 6.27, 100)
    yield "prufer N=1000 x100", lambda b: _kernels.prufer_counts(alpha, th, backend=b)
    lc, ph = samplers.cgp_log_coefficients(generator(3, 0), 300)
    z0 = np.sqrt(300) * np.exp(2j * np.pi * (np.arange(300) + 0.25) / 300)
    yield "aberth deg=300", lambda b: _kernels.aberth(z0, lc, ph, backend=b)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _kernels.USE_NUMBA:
        print("numba disabled (RMTFLUCT_DISABLE_NUMBA); timing numpy only")
    print(f"{'kernel':<22}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}")
    for name, fn in cases():
        t_np = best_of(lambda: fn("numpy"), args.repeat)
        if _kernels.USE_NUMBA:
            a, b = fn("numba"), fn("numpy")  # warm-up and agreement
            if isinstance(a, tuple):
                ok = np.allclose(np.sort_complex(a[0]), np.sort_complex(b[0]), atol=1e-8)
            else:
                ok = np.array_equal(a, b)
            if not ok:
                raise SystemExit(f"{name}: backends disagree")
            t_nb = best_of(lambda: fn("numba"), args.repeat)
            print(f"{name:<22}{t_np:>12.4g}{t_nb:>12.4g}{t_np / t_nb:>10.1f}")
        else:
            print(f"{name:<22}{t_np:>12.4g}{'-':>12}{'-':>10}")


if __name__ == "__main__":
    main()
