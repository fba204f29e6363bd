"""Command line harness: predictions, samples, verification runs and figure data.

    rmtfluct predict|sample|verify|figure|oracle --config FILE [--threads N] [--seed S] [--out PATH]

``--config default`` selects the bundled suite (the acceptance criteria).
Case ``c`` of a run draws its samples from streams ``crc32(c.id) << 32 + i``
under the top-level seed, so any case can be reproduced on its own.
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import math
import platform
import sys
import time
from typing import Callable

import numpy as np
import scipy

from . import __version__, loops, mc, samplers
from .rng import case_stream_base
from .basis import DomainError, InputError, compile_expression, statistic_from_json
from .exact import (B_CLOSED_FORMS, FourierWeights, Prediction, StructureFunctionModel,
                    b_beta_from_structure, b_beta_series, cgp_constants, circular_covariance,
                    counting_covariance_cue, fourier_weight, ginue_disk_counting,
                    ginue_global_covariance, linear_elliptic_variance, number_variance_asymptote,
                    radial_variance_ginue, structure_function)
from .samplers import EnsembleSpec

log = logging.getLogger("rmtfluct")

DEFAULT_SEED = 20240917
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _g(x) -> str:
    """17 significant digits, '.' decimal separator."""
    return "" if x is None else (f"{x:.17g}" if isinstance(x, float) else str(x))


# ---------------------------------------------------------------------------
# Builders from JSON
# ---------------------------------------------------------------------------

def build_statistic(d):
    if d is None:
        return None
    kind = d.get("kind") if isinstance(d, dict) else None
    if kind == "restricted":
        return mc.RestrictedSum(build_statistic(d["f"]), float(d["fraction"]))
    if kind == "associated":
        return loops.associated_polynomial(int(d["n"]), float(d["alpha"]), d.get("family", "Hermite"),
                                           float(d.get("alpha1", 1.0)),
                                           bool(d.get("antiderivative", True)))
    return statistic_from_json(d)


def build_spec(d: dict) -> EnsembleSpec:
    if not isinstance(d, dict) or "family" not in d:
        raise InputError("spec needs a 'family'")
    return EnsembleSpec.from_json(d)


def build_model(d: dict) -> loops.ResolventModel:
    d = dict(d)
    if d.get("model") == "Wigner" and "law" in d:
        mom = samplers.law_moments(d.pop("law"), bool(d.pop("complex_entries", False)),
                                   float(d.pop("phi", 0.0)))
        return loops.ResolventModel.wigner(float(d.get("sigma2", 2.0)), mom["beta_tilde"],
                                           mom["kappa"])
    return loops.ResolventModel(**d)


def _expr_fn(expr: str, var: str = "x") -> Callable:
    f = compile_expression(expr, [var])
    return lambda v: float(f(v))


def _weights(p, finite: bool):
    ens = p.get("ensemble", "CUE")
    if ens == "circular_beta":
        return FourierWeights("circular_beta_limit", beta=float(p["beta"]))
    return FourierWeights(ens, int(p["N"]) if finite else None, alpha=p.get("alpha"),
                          variant=p.get("variant", "corrected"))


def _circular(p, finite):
    w = _weights(p, finite)
    if "f" in p:
        f = build_statistic(p["f"])
        g = build_statistic(p.get("g", p["f"]))
        return circular_covariance(f, g, w, allow_divergent=bool(p.get("allow_divergent")))
    return Prediction(float(fourier_weight(w, int(p["l"]))), "finite_N" if finite else "global_limit",
                      w.label(), {"l": int(p["l"])})


def _interval(p):
    f = build_statistic(p["f"])
    g = build_statistic(p.get("g", p["f"]))
    pred = loops.interval_covariance(f, g, build_model(p.get("model", {})),
                                     allow_divergent=bool(p.get("allow_divergent")))
    if pred.divergence is not None and p.get("rate"):
        return Prediction(pred.divergence.rate, "asymptote", pred.formula, pred.params,
                          extras={"divergence": pred.divergence.to_json()})
    return pred


def _value(v, formula, regime="global_limit", **params):
    return Prediction(float(v), regime, formula, params)


FORMULAS: dict[str, Callable[[dict], Prediction]] = {
    "3.4c": lambda p: _circular({**p, "ensemble": "CUE"}, True),
    "3.4d": lambda p: _circular(p, True),
    "2.56": lambda p: _circular(p, True),
    "S1c": lambda p: _circular({**p, "ensemble": "CUE_alpha"}, True),
    "3.4e": lambda p: _circular({**p, "ensemble": "CUE"}, False),
    "3.4eb": lambda p: _circular(p, False),
    "S0b": lambda p: _circular({**p, "ensemble": "CUE_alpha"}, False),
    "4.4e1": lambda p: _circular({**p, "ensemble": "CUE_alpha"}, False),
    "3.4f": lambda p: _value(number_variance_asymptote(float(p.get("beta", 2))).extras["leading"],
                             "3.4f", "asymptote", beta=float(p.get("beta", 2))),
    "3.4g": lambda p: counting_covariance_cue(float(p["L1"]), float(p["L2"]),
                                              bool(p.get("allow_divergent"))),
    "z.5": lambda p: _value(b_beta_series(float(p["beta"]), p.get("variant", "corrected")), "z.5",
                            "asymptote", beta=float(p["beta"]), variant=p.get("variant", "corrected")),
    "3.4dB3": lambda p: _value(B_CLOSED_FORMS[2.0], "3.4dB3", "asymptote"),
    "3.4dC4": lambda p: _value(B_CLOSED_FORMS[1.0], "3.4dC4", "asymptote"),
    "3.4dC5": lambda p: _value(B_CLOSED_FORMS[4.0], "3.4dC5", "asymptote"),
    "B_structure": lambda p: _value(b_beta_from_structure(
        StructureFunctionModel(p["model"], p.get("params", {}))), "3.4dB", "asymptote"),
    "S": lambda p: _value(float(structure_function(
        StructureFunctionModel(p["model"], p.get("params", {})), float(p["k"]))), "3.1D",
        "bulk_scaled", model=p["model"], k=float(p["k"])),
    "3.37c": lambda p: _value(loops.lambert_identity(int(p["l"]))[0], "3.37c", "finite_N", l=p["l"]),
    "3.37c_rhs": lambda p: _value(loops.lambert_identity(int(p["l"]))[1], "3.37c", "finite_N", l=p["l"]),
    "G6i": lambda p: loops.submatrix_covariance(int(p["k_p"]), int(p["k_q"]), float(p["b_p"]),
                                                float(p["b_q"]), float(p["c_pq"]),
                                                float(p.get("beta", 2))),
    "G6d": lambda p: _interval({**p, "allow_divergent": True, "rate": True}),
    "4.1a": _interval,
    "r.1bY": _interval,
    "3.36d": _interval,
    "Gm": lambda p: loops.monomial_covariance(int(p["k1"]), int(p["k2"]), build_model(
        p.get("model", {"model": "Gaussian_beta", "beta": p.get("beta", 2.0)})),
        variant=p.get("variant", "corrected")),
    "s.1bW": lambda p: loops.monomial_covariance(int(p["k1"]), int(p["k2"]), build_model(p["model"])),
    "L2cz": lambda p: loops.gaussian_finite_variance(int(p["power"]), int(p["N"]), float(p["beta"])),
    "r.1bZ": lambda p: loops.laguerre_finite_variance(int(p["N"]), float(p["beta"]), p.get("alpha")),
    "3.37": lambda p: loops.monomial_covariance(int(p.get("k1", 1)), int(p.get("k2", 1)),
                                                "GinibreProductSquared"),
    "3.37a": lambda p: loops.product_covariance_lambert(p["p"], p.get("q", p["p"]), int(p.get("M", 2)),
                                                       p.get("gammas")),
    "G6f": lambda p: loops.restricted_gaussian_variance(float(p["gamma"]), float(p.get("beta", 2))),
    "G6h": lambda p: _value(loops.G6H_VALUE * 2 / float(p.get("beta", 2)), "G6h",
                            beta=float(p.get("beta", 2))),
    "G6p": lambda p: loops.high_temperature_covariance(int(p["m"]), int(p["n"]), float(p["alpha"]),
                                                       float(p.get("alpha1", 1.0)),
                                                       p.get("family", "Hermite")),
    "3.69a": lambda p: radial_variance_ginue(_expr_fn(p["dh"], "r")),
    "xr1": lambda p: _value(ginue_disk_counting(float(p.get("R", 1.0))).extras["slope"], "xr1",
                            "asymptote"),
    "5.1z": lambda p: linear_elliptic_variance(float(p["c10"]), float(p["c01"]),
                                               float(p.get("beta", 2)), float(p.get("tau", 0)),
                                               p.get("variant", "gradient")),
    "5.2e": lambda p: ginue_global_covariance(build_statistic(p["f"]),
                                              build_statistic(p.get("g", p["f"])),
                                              float(p.get("beta", 2)), float(p.get("tau", 0))),
    "13.c": lambda p: _value(cgp_constants()["perimeter"], "13.c", "asymptote"),
    "4.1aZ1": lambda p: loops.hard_edge_covariance(_expr_fn(p["F"]),
                                                   _expr_fn(p["G"]) if "G" in p else None,
                                                   float(p.get("beta", 2)),
                                                   bool(p.get("cross_check"))),
    "kernel_beta2": lambda p: _value(mc.beta2_kernel_covariance(
        build_statistic(p["f"]), build_statistic(p.get("g", p["f"])), build_spec(p["spec"])),
        "kernel", "finite_N"),
    "Q_N": lambda p: _value(mc.cue_alpha_normalization(int(p["N"]), float(p["alpha"])), "q4",
                            "finite_N"),
}


def predict_one(d: dict) -> Prediction:
    if isinstance(d, (int, float)):
        return Prediction(float(d), "finite_N", "value", {})
    if not isinstance(d, dict) or "formula" not in d:
        raise InputError("prediction needs a 'formula'")
    fid = d["formula"]
    if fid not in FORMULAS:
        raise InputError(f"unknown formula {fid!r}")
    p = {k: v for k, v in d.items() if k != "formula"}
    return FORMULAS[fid](p)


# ---------------------------------------------------------------------------
# Case runners
# ---------------------------------------------------------------------------

def _run_formula(case, seed, threads):
    pred = predict_one(case["prediction"])
    ref = predict_one(case["reference"])
    tol = float(case.get("tol", 1e-9))
    diff = abs(pred.value - ref.value)
    return {"predicted": ref.value, "estimate": pred.value, "se": None, "passed": diff <= tol,
            "diagnostics": {"abs_diff": diff, "tol": tol, "prediction": pred.to_json()}}


def _also(case) -> dict:
    out = {}
    for item in case.get("also", []):
        out[item["label"]] = predict_one(item["prediction"]).value
    return out


def _run_mc(case, seed, threads):
    spec = build_spec(case["spec"])
    f = build_statistic(case["f"])
    g = build_statistic(case["g"]) if "g" in case else f
    n = int(case["n_samples"])
    est = mc.estimate_covariance(f, g, spec, n, seed, case_stream_base(case["id"]), threads)
    scale = spec.N if case.get("divide_by_N") else 1.0
    value, se = est.estimate / scale, est.se / scale
    k = float(case.get("k", 3.0))
    diag = {"mc": est.to_json(), "k": k}
    also = _also(case)
    if "targets" in case:
        hits = {}
        for label, t in case["targets"].items():
            tv = predict_one(t).value
            hits[label] = {"value": tv, "z": (value - tv) / se, "within": abs(value - tv) <= k * se}
        inside = [lab for lab, h in hits.items() if h["within"]]
        diag.update(targets=hits, selected=inside[0] if len(inside) == 1 else None, also=also)
        return {"predicted": None, "estimate": value, "se": se, "passed": len(inside) == 1,
                "diagnostics": diag}
    target = predict_one(case["target"]).value
    diag["z"] = (value - target) / se
    if also:
        diag["also"] = {lab: {"value": v, "z": (value - v) / se} for lab, v in also.items()}
    return {"predicted": target, "estimate": value, "se": se,
            "passed": abs(value - target) <= k * se, "diagnostics": diag}


def _run_oracle(case, seed, threads):
    spec = build_spec(case["spec"])
    f = build_statistic(case["f"])
    g = build_statistic(case["g"]) if "g" in case else f
    tol = float(case.get("tol", 1e-6))
    res = mc.brute_force_covariance(spec, f, g, tolerance=min(tol, 1e-9))
    ref = predict_one(case["reference"]).value
    diff = abs(res.value - ref)
    return {"predicted": ref, "estimate": res.value, "se": None,
            "passed": diff <= tol and res.error < tol,
            "diagnostics": {"oracle": res.to_json(), "abs_diff": diff, "tol": tol}}


def _run_rate_fit(case, seed, threads):
    spec_d = case["spec"]
    n = int(case["n_samples"])
    base = case_stream_base(case["id"])
    xs, vs, ses, rows = [], [], [], []
    if "Ns" in case:
        region = build_statistic(case["region"])
        for i, N in enumerate(case["Ns"]):
            spec = build_spec({**spec_d, "N": int(N)})
            r = mc.counting_profile(spec, [region], n, seed, stream_base=base + (i << 24),
                                    threads=threads)[0]
            xs.append(float(N))
            vs.append(r.estimate)
            ses.append(r.se)
    else:
        spec = build_spec(spec_d)
        regions = [build_statistic(r) for r in case["regions"]]
        res = mc.counting_profile(spec, regions, n, seed, bool(case.get("rotate")), base, threads,
                                  int(case.get("rotations", 1)))
        for reg, r in zip(regions, res):
            size = reg.size
            xs.append(reg.perimeter if case.get("x") == "perimeter" else size)
            vs.append(r.estimate)
            ses.append(r.se)
    x = np.asarray(xs)
    xaxis = case.get("x", "logN")
    if case.get("fit") == "power":
        slope, icpt, sse = mc.fit_power(x, vs, ses)
    else:
        xf = np.log(x) if xaxis in ("logN", "log") else x
        slope, icpt, sse = mc.fit_line(xf, vs, ses)
    target = predict_one(case["target"]).value
    rel = float(case.get("rel_tol", 0.15))
    abs_tol = case.get("abs_tol")
    ok = abs(slope - target) <= (float(abs_tol) if abs_tol is not None else rel * abs(target))
    rows = [{"x": a, "variance": v, "se": s} for a, v, s in zip(xs, vs, ses)]
    return {"predicted": target, "estimate": slope, "se": sse, "passed": bool(ok),
            "diagnostics": {"intercept": icpt, "points": rows, "rel_tol": rel, "abs_tol": abs_tol}}


def _run_group(case, seed, threads):
    subs = [run_case(c, seed, threads) for c in case["cases"]]
    return {"predicted": None, "estimate": None, "se": None,
            "passed": all(s["passed"] for s in subs), "diagnostics": {"cases": subs}}


RUNNERS = {"formula": _run_formula, "mc": _run_mc, "oracle": _run_oracle,
           "rate_fit": _run_rate_fit, "group": _run_group}


def run_case(case: dict, seed: int, threads: int = 1) -> dict:
    if "id" not in case or "mode" not in case:
        raise UsageError("every case needs 'id' and 'mode'")
    mode = case["mode"]
    if mode not in RUNNERS and mode != "determinism":
        raise UsageError(f"unknown mode {mode!r}")
    t0 = time.perf_counter()
    case_seed = int(case.get("seed", seed))
    try:
        out = RUNNERS[mode](case, case_seed, threads)
    except (InputError, DomainError, KeyError, TypeError) as exc:
        raise UsageError(f"case {case['id']}: {exc}") from exc
    except (mc.PrecisionError, samplers.SamplerError, ArithmeticError) as exc:
        out = {"predicted": None, "estimate": None, "se": None, "passed": False,
               "diagnostics": {"error": f"{type(exc).__name__}: {exc}"}}
    out = {"id": case["id"], "mode": mode, "label": case.get("label", ""), **out,
           "runtime": time.perf_counter() - t0}
    if not out["passed"] and "error" not in out["diagnostics"]:
        out["diagnostics"]["failure"] = "outside tolerance"
    return out


_VOLATILE = ("runtime", "wall_time")


def numeric_fields(obj, prefix=""):
    """Flattened numeric leaves of a report, excluding timings."""
    out = {}
    if isinstance(obj, dict):
        for k, v in obj.items():
            if k in _VOLATILE:
                continue
            out.update(numeric_fields(v, f"{prefix}/{k}"))
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            out.update(numeric_fields(v, f"{prefix}[{i}]"))
    elif isinstance(obj, (bool, int, float)) or obj is None:
        out[prefix] = obj
    return out


def scaled_cases(cases, scale: float, overrides: dict | None = None):
    """Copy of the cases with every sample count shrunk (floor min(n, 100)).

    ``overrides`` maps case ids to fields replaced after scaling.
    """
    out = copy.deepcopy(cases)
    overrides = overrides or {}

    def walk(c):
        if "n_samples" in c:
            n = int(c["n_samples"])
            c["n_samples"] = max(min(n, 100), int(n * scale))
        c.update(overrides.get(c.get("id"), {}))
        for s in c.get("cases", []):
            walk(s)
    for c in out:
        walk(c)
    return out


def _run_determinism(case, cases, seed, threads, done=None):
    """Rerun the other cases and compare every numeric field bitwise.

    ``done`` holds results already computed by ``verify`` at ``threads``;
    at full scale they serve as the first run, so one rerun per other
    thread count (or a plain repeat) is enough.
    """
    others = [c for c in cases if c.get("mode") != "determinism"]
    if case.get("only"):
        others = [c for c in others if c["id"] in case["only"]]
    scale = float(case.get("scale", 1.0))
    sub = scaled_cases(others, scale, case.get("overrides")) if scale != 1.0 or case.get("overrides") \
        else others
    ths = list(case.get("threads", [1, 8]))
    reuse = done is not None and sub is others and not case.get("only")
    if reuse:
        runs = [done]
        base = threads
    else:
        runs = [[run_case(c, seed, ths[0]) for c in sub]]
        base = ths[0]
    rerun = [t for t in ths if t != base] or [base]  # a plain repeat at least
    runs += [[run_case(c, seed, t) for c in sub] for t in rerun]
    ref = numeric_fields(runs[0])
    mism = []
    for r in runs[1:]:
        cur = numeric_fields(r)
        mism += [k for k in ref if ref[k] != cur.get(k) and not (
            isinstance(ref[k], float) and isinstance(cur.get(k), float)
            and math.isnan(ref[k]) and math.isnan(cur[k]))]
    return {"predicted": None, "estimate": float(len(ref)), "se": None, "passed": not mism,
            "diagnostics": {"fields_compared": len(ref), "mismatches": mism[:20],
                            "threads": [base] + rerun, "scale": scale,
                            "cases": [c["id"] for c in sub]}}


def verify(config: dict, threads: int = 1, seed: int | None = None) -> dict:
    cases = config.get("cases")
    if not isinstance(cases, list) or not cases:
        raise UsageError("config needs a nonempty 'cases' list")
    ids = [c.get("id") for c in cases]
    if len(set(ids)) != len(ids):
        raise UsageError("case ids must be unique")
    seed = int(config.get("seed", DEFAULT_SEED) if seed is None else seed)
    threads = int(config.get("threads", threads) if threads is None else threads)
    results = [None] * len(cases)
    plain = [i for i, c in enumerate(cases) if c.get("mode") != "determinism"]
    # cases are independent; each keeps its own streams
    for i in plain:
        results[i] = run_case(cases[i], seed, threads)
    for i, c in enumerate(cases):
        if c.get("mode") == "determinism":
            t0 = time.perf_counter()
            done = [results[j] for j in plain] if "seed" not in c else None
            out = _run_determinism(c, cases, int(c.get("seed", seed)), threads, done)
            results[i] = {"id": c["id"], "mode": "determinism", "label": c.get("label", ""), **out,
                          "runtime": time.perf_counter() - t0}
    return {"results": results, "passed": all(r["passed"] for r in results),
            "seed_manifest": {"seed": seed,
                              "streams": {c["id"]: case_stream_base(c["id"]) for c in cases}},
            "versions": {"rmtfluct": __version__, "numpy": np.__version__,
                         "scipy": scipy.__version__, "python": platform.python_version(),
                         "numba": samplers._kernels.USE_NUMBA}}


def report_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["id", "mode", "passed", "predicted", "estimate", "se", "runtime"])
    for r in report["results"]:
        w.writerow([r["id"], r["mode"], int(r["passed"]), _g(r["predicted"]), _g(r["estimate"]),
                    _g(r["se"]), _g(r["runtime"])])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Figures
# ---------------------------------------------------------------------------

def figure_fig1(seed: int, n_max: int = 150, m: int = 2) -> list:
    """(N, sum_j cos(m x_j)) for one CUE realisation at each N = 1..n_max."""
    rows = []
    for N in range(1, n_max + 1):
        x = samplers.sample(EnsembleSpec("CUE", N), seed, N).values
        rows.append((N, math.fsum(np.cos(m * x))))
    return rows


def figure_fig2(seed: int, N: int = 1600, sides=tuple(range(4, 33, 2)), n_samples: int = 32,
                rotations: int = 8, threads: int = 1) -> list:
    """(L, mean count, variance, se) for rotated squares in bulk GinUE coordinates."""
    from .basis import PlanarIndicator
    spec = EnsembleSpec("GinUE", N, scaling="bulk")
    regions = [PlanarIndicator("square", float(L)) for L in sides]
    res = mc.counting_profile(spec, regions, n_samples, seed, True, case_stream_base("fig2"),
                              threads, rotations)
    return [(float(L), r.means[0], r.estimate, r.se) for L, r in zip(sides, res)]


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_g(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


# ---------------------------------------------------------------------------
# Default suite
# ---------------------------------------------------------------------------

def _cos(m):
    return {"kind": "cos", "m": m}


def _mono(k):
    return {"kind": "monomial", "k": k}


def default_suite() -> dict:
    """The fifteen acceptance criteria as verification cases."""
    C = []
    pi = math.pi
    # 1 exact identities
    c1 = []
    for N in (1, 2, 5, 10, 20):
        for l in sorted({1, N, N + 3}):
            c1.append({"id": f"1.cue_weight.N{N}.l{l}", "mode": "formula",
                       "prediction": {"formula": "3.4c", "N": N, "l": l},
                       "reference": float(min(l, N)), "tol": 1e-12})
    c1.append({"id": "1.S_CUE_pi", "mode": "formula",
               "prediction": {"formula": "S", "model": "CUE_bulk", "k": pi}, "reference": 0.5})
    c1.append({"id": "1.B2", "mode": "formula", "prediction": {"formula": "3.4dB3"},
               "reference": (0.5772156649015329 + 1 + math.log(2 * pi)) / pi**2, "tol": 1e-12})
    c1.append({"id": "1.z5_printed_vs_B2", "mode": "formula",
               "label": "(z.5) as printed with log(beta)",
               "prediction": {"formula": "z.5", "beta": 2, "variant": "printed"},
               "reference": {"formula": "3.4dB3"}, "tol": 1e-10})
    c1.append({"id": "1.z5_corrected_vs_B2", "mode": "formula", "label": "(z.5) with log(pi beta)",
               "prediction": {"formula": "z.5", "beta": 2}, "reference": {"formula": "3.4dB3"},
               "tol": 1e-10})
    eps = 1e-12
    for model, k0 in (("COE_bulk", 2 * pi), ("CSE_bulk", 4 * pi)):
        c1.append({"id": f"1.{model}_continuity", "mode": "formula",
                   "prediction": {"formula": "S", "model": model, "k": k0 - eps},
                   "reference": {"formula": "S", "model": model, "k": k0 + eps}, "tol": 1e-10})
    for l in range(1, 11):
        c1.append({"id": f"1.lambert.l{l}", "mode": "formula",
                   "prediction": {"formula": "3.37c", "l": l},
                   "reference": {"formula": "3.37c_rhs", "l": l}, "tol": 0.0})
    for k in (1, 2, 3):
        for b in (1, 2, 4):
            c1.append({"id": f"1.G6i.k{k}.b{b}", "mode": "formula",
                       "prediction": {"formula": "G6i", "k_p": k, "k_q": k, "b_p": 1, "b_q": 1,
                                      "c_pq": 1, "beta": b},
                       "reference": k / (2 * b), "tol": 1e-12})
    C.append({"id": "criterion_1", "mode": "group", "label": "exact identities", "cases": c1})

    # 2 oracle suite
    c2 = []
    for N in (2, 3):
        for m in (1, 2):
            c2.append({"id": f"2.CUE.N{N}.cos{m}", "mode": "oracle", "spec": {"family": "CUE", "N": N},
                       "f": _cos(m), "reference": {"formula": "3.4c", "N": N, "f": _cos(m)}})
            c2.append({"id": f"2.CUEa.N{N}.cos{m}", "mode": "oracle",
                       "spec": {"family": "CUE_alpha", "N": N, "alpha": 0.5}, "f": _cos(m),
                       "reference": {"formula": "S1c", "N": N, "alpha": 0.5, "f": _cos(m)}})
        for b in (1, 2, 4):
            for k in (1, 2):
                c2.append({"id": f"2.G.N{N}.b{b}.x{k}", "mode": "oracle",
                           "spec": {"family": "Gaussian_beta", "N": N, "beta": b}, "f": _mono(k),
                           "reference": {"formula": "L2cz", "power": k, "N": N, "beta": b}})
        lag = {"family": "Laguerre_beta", "N": N, "beta": 2, "alpha": 1}
        c2.append({"id": f"2.L.N{N}.x1", "mode": "oracle", "spec": lag, "f": _mono(1),
                   "reference": {"formula": "r.1bZ", "N": N, "beta": 2, "alpha": 1}})
        c2.append({"id": f"2.L.N{N}.x2", "mode": "oracle", "spec": lag, "f": _mono(2),
                   "reference": {"formula": "kernel_beta2", "spec": lag, "f": _mono(2)}})
    C.append({"id": "criterion_2", "mode": "group", "label": "oracle suite", "cases": c2})

    # 3 CUE variance
    C.append({"id": "criterion_3", "mode": "mc", "label": "CUE Var sum cos 2x vs the stated 2",
              "spec": {"family": "CUE", "N": 150}, "f": _cos(2), "n_samples": 20000, "target": 2.0,
              "also": [{"label": "weights", "prediction": {"formula": "3.4e", "f": _cos(2)}}]})
    # 4 beta symmetry
    c4 = []
    for fam, tgt, extra in (("COE", 4.0, {}), ("CSE", 1.0, {}), ("circular_beta", 4 / 3, {"beta": 3})):
        ens = {"ensemble": fam, **extra}
        c4.append({"id": f"4.{fam}", "mode": "mc", "spec": {"family": fam, "N": 150, **extra},
                   "f": _cos(2), "n_samples": 10000, "target": tgt,
                   "also": [{"label": "weights", "prediction": {"formula": "3.4eb", **ens, "f": _cos(2)}}]})
    C.append({"id": "criterion_4", "mode": "group", "label": "beta symmetry", "cases": c4})

    # 5 number variance
    c5 = [{"id": "5.CUE_half_circle", "mode": "rate_fit", "spec": {"family": "CUE"},
           "Ns": [64, 128, 256, 512, 1024], "region": {"kind": "arc", "a": 0.0, "b": pi},
           "n_samples": 4000, "x": "logN", "target": {"formula": "3.4f", "beta": 2}, "rel_tol": 0.15},
          {"id": "5.GUE_half_line", "mode": "rate_fit", "spec": {"family": "Gaussian_beta", "beta": 2},
           "Ns": [64, 128, 256, 512, 1024], "region": {"kind": "indicator", "a": 0.0, "b": 10.0},
           "n_samples": 4000, "x": "logN", "rel_tol": 0.20,
           "target": {"formula": "G6d", "f": {"kind": "indicator", "a": 0.0, "b": 10.0},
                      "model": {"model": "Gaussian_beta", "beta": 2}}}]
    C.append({"id": "criterion_5", "mode": "group", "label": "number variance", "cases": c5})

    # 6 Gaudin deformation
    c6 = [{"id": "6.mc", "mode": "mc", "spec": {"family": "CUE_alpha", "N": 100, "alpha": 0.5},
           "f": _cos(1), "n_samples": 10000,
           "target": {"formula": "4.4e1", "alpha": 0.5, "f": _cos(1)}}]
    for l in (1, 2, 3, 5, 10):
        c6.append({"id": f"6.weights.l{l}", "mode": "formula",
                   "prediction": {"formula": "S1c", "N": 100, "alpha": 0.5, "l": l},
                   "reference": {"formula": "S0b", "alpha": 0.5, "l": l}, "tol": 1e-6})
    C.append({"id": "criterion_6", "mode": "group", "label": "Gaudin deformation", "cases": c6})

    # 7 finite-N laws
    c7 = []
    for b in (1, 2, 4, 2.5):
        for k in (1, 2):
            c7.append({"id": f"7.G.b{b}.x{k}", "mode": "mc",
                       "spec": {"family": "Gaussian_beta", "N": 50, "beta": b}, "f": _mono(k),
                       "n_samples": 4000, "target": {"formula": "L2cz", "power": k, "N": 50, "beta": b}})
    c7.append({"id": "7.L.x1", "mode": "mc", "spec": {"family": "Laguerre_beta", "N": 50, "beta": 2,
                                                    "alpha": 1}, "f": _mono(1), "n_samples": 4000,
               "target": {"formula": "r.1bZ", "N": 50, "beta": 2}})
    C.append({"id": "criterion_7", "mode": "group", "label": "finite-N exact laws", "cases": c7})

    # 8 monomials
    c8 = [{"id": "8.GUE.x2x4", "mode": "mc", "spec": {"family": "Gaussian_beta", "N": 200, "beta": 2},
           "f": _mono(2), "g": _mono(4), "n_samples": 6000,
           "target": {"formula": "Gm", "k1": 2, "k2": 4, "beta": 2}},
          {"id": "8.LUE.x1x2", "mode": "mc",
           "spec": {"family": "Laguerre_beta", "N": 200, "beta": 2, "alpha": 1},
           "f": _mono(1), "g": _mono(2), "n_samples": 6000,
           "target": {"formula": "s.1bW", "k1": 1, "k2": 2,
                      "model": {"model": "Laguerre_beta", "beta": 2, "alpha": 1}}}]
    C.append({"id": "criterion_8", "mode": "group", "label": "monomial covariances", "cases": c8})

    # 9 Wigner
    wig = {"family": "Wigner", "N": 400, "law": "rademacher", "sigma2": 1.0}
    wmodel = {"model": "Wigner", "law": "rademacher", "sigma2": 1.0}
    c9 = [{"id": f"9.x{k}", "mode": "mc", "spec": wig, "f": _mono(k), "n_samples": 6000,
           "target": {"formula": "3.36d", "f": _mono(k), "model": wmodel}} for k in (1, 2)]
    c9[1]["also"] = [{"label": "finite_N_exact_1/(8N)", "prediction": 1 / (8 * 400)}]
    C.append({"id": "criterion_9", "mode": "group", "label": "Wigner corrections", "cases": c9})

    # 10 planar
    r2 = {"kind": "planar_radial", "expr": "r**2"}
    lin = {"kind": "planar_poly", "terms": [[1, 0, 1.0], [0, 1, 1.0]]}
    c10 = [{"id": "10.GinUE_r2", "mode": "mc", "spec": {"family": "GinUE", "N": 1000}, "f": r2,
            "n_samples": 20000, "target": {"formula": "3.69a", "dh": "2*r"}},
           {"id": "10.GinUE_disk_slope", "mode": "rate_fit",
            "spec": {"family": "GinUE", "N": 1000, "scaling": "bulk"},
            "regions": [{"kind": "planar_indicator", "shape": "disk", "size": float(R)}
                        for R in (3, 5, 7, 9, 11, 13)],
            "n_samples": 4000, "x": "size", "target": {"formula": "xr1"}, "rel_tol": 0.10},
           {"id": "10.GinUE_squares", "mode": "rate_fit",
            "spec": {"family": "GinUE", "N": 1600, "scaling": "bulk"},
            "regions": [{"kind": "planar_indicator", "shape": "square", "size": float(L)}
                        for L in range(4, 33, 4)],
            "n_samples": 32, "rotate": True, "rotations": 8, "x": "size", "fit": "power",
            "target": 1.0, "abs_tol": 0.15},
           {"id": "10.elliptic", "mode": "mc", "spec": {"family": "EllipticGinibre", "N": 200, "tau": 0.5},
            "f": lin, "n_samples": 6000,
            "target": {"formula": "5.1z", "c10": 1, "c01": 1, "beta": 2, "tau": 0.5},
            "also": [{"label": "quoted_2beta", "prediction": {"formula": "5.1z", "c10": 1, "c01": 1,
                                                              "beta": 2, "tau": 0.5,
                                                              "variant": "quoted"}}]},
           {"id": "10.GinOE_r2", "mode": "mc", "spec": {"family": "GinOE", "N": 200}, "f": r2,
            "n_samples": 4000, "target": {"formula": "5.2e", "f": r2, "beta": 1}}]
    C.append({"id": "criterion_10", "mode": "group", "label": "planar suite", "cases": c10})

    # 11 products
    prod = {"family": "GinibreProduct", "N": 200, "M": 2}
    c11 = [{"id": "11.x", "mode": "mc", "spec": prod, "f": _mono(1), "n_samples": 4000,
            "target": {"formula": "3.37"}},
           {"id": "11.x2", "mode": "mc", "spec": prod, "f": _mono(2), "n_samples": 4000,
            "target": {"formula": "3.37a", "p": [0, 0, 1]}}]
    C.append({"id": "criterion_11", "mode": "group", "label": "Ginibre products", "cases": c11})

    # 12 restricted sums
    rs = {"kind": "restricted", "f": _mono(2), "fraction": 0.5}
    C.append({"id": "criterion_12", "mode": "mc", "label": "restricted sums: exactly one of G6f, G6h",
              "spec": {"family": "Gaussian_beta", "N": 400, "beta": 2}, "f": rs, "n_samples": 6000,
              "targets": {"G6f": {"formula": "G6f", "gamma": 0.5, "beta": 2},
                          "G6h": {"formula": "G6h", "beta": 2}}})

    # 13 high temperature
    ht = {"family": "HighTempGaussian", "N": 200, "beta": 0.01}
    P = {n: {"kind": "associated", "n": n, "alpha": 1.0} for n in (1, 2)}
    c13 = [{"id": "13.P1P1", "mode": "mc", "spec": ht, "f": P[1], "n_samples": 6000,
            "divide_by_N": True, "target": {"formula": "G6p", "m": 1, "n": 1, "alpha": 1}},
           {"id": "13.P1P2", "mode": "mc", "spec": ht, "f": P[1], "g": P[2], "n_samples": 6000,
            "divide_by_N": True, "target": {"formula": "G6p", "m": 1, "n": 2, "alpha": 1}}]
    C.append({"id": "criterion_13", "mode": "group", "label": "high temperature", "cases": c13})

    # 14 cGP
    C.append({"id": "criterion_14", "mode": "rate_fit", "label": "cGP perimeter law",
              "spec": {"family": "cGP", "N": 500, "scaling": "bulk"},
              "regions": [{"kind": "planar_indicator", "shape": "disk", "size": float(R)}
                          for R in (6, 8, 10, 12, 14)],
              "n_samples": 3000, "x": "perimeter", "target": {"formula": "13.c"}, "rel_tol": 0.15})

    # 15 determinism
    C.append({"id": "criterion_15", "mode": "determinism", "label": "bitwise reproducibility",
              "threads": [1, 8]})
    return {"seed": DEFAULT_SEED, "threads": 1, "output": "report.json", "cases": C}


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _load_config(path: str) -> dict:
    if path == "default":
        return default_suite()
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path!r}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    return cfg


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rmtfluct", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=["predict", "sample", "verify", "figure", "oracle"])
    p.add_argument("name", nargs="?", help="figure name (fig1 | fig2)")
    p.add_argument("--config", help="JSON config file, or 'default' for the bundled suite")
    p.add_argument("--threads", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output path")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_predict(cfg, args):
    items = cfg.get("cases", [cfg]) if "formula" not in cfg else [cfg]
    res = [predict_one(c.get("prediction", c)).to_json() for c in items]
    _emit(json.dumps(res[0] if len(res) == 1 else res, indent=2) + "\n", args.out)
    return EXIT_OK


def _cmd_sample(cfg, args):
    spec = build_spec(cfg.get("spec", cfg))
    seed = args.seed if args.seed is not None else int(cfg.get("seed", DEFAULT_SEED))
    s = samplers.sample(spec, seed, int(cfg.get("stream", 0)))
    out = args.out or cfg.get("output") or "sample.csv"
    s.to_csv(out)
    return EXIT_OK


def _cmd_oracle(cfg, args):
    c = cfg.get("cases", [cfg])[0]
    res = mc.brute_force_covariance(build_spec(c["spec"]), build_statistic(c["f"]),
                                    build_statistic(c.get("g", c["f"])), float(c.get("tol", 1e-8)))
    _emit(json.dumps(res.to_json(), indent=2) + "\n", args.out)
    return EXIT_OK


def _cmd_figure(cfg, args):
    seed = args.seed if args.seed is not None else int(cfg.get("seed", DEFAULT_SEED))
    name = args.name or cfg.get("figure")
    out = args.out or cfg.get("output") or f"{name}.csv"
    if name == "fig1":
        rows = figure_fig1(seed, int(cfg.get("n_max", 150)), int(cfg.get("m", 2)))
        _write_csv(out, ["N", "sum_cos"], rows)
    elif name == "fig2":
        rows = figure_fig2(seed, int(cfg.get("N", 1600)), tuple(cfg.get("sides", range(4, 33, 2))),
                           int(cfg.get("n_samples", 32)), int(cfg.get("rotations", 8)),
                           args.threads or int(cfg.get("threads", 1)))
        _write_csv(out, ["L", "mean", "variance", "se"], rows)
    else:
        raise UsageError("figure name must be fig1 or fig2")
    return EXIT_OK


def _cmd_verify(cfg, args):
    threads = args.threads if args.threads is not None else int(cfg.get("threads", 1))
    report = verify(cfg, threads, args.seed)
    out = args.out or cfg.get("output") or "report.json"
    with open(out, "w") as fh:
        json.dump(report, fh, indent=2, default=float)
    csv_path = out[:-5] + ".csv" if out.endswith(".json") else out + ".csv"
    with open(csv_path, "w", newline="") as fh:
        fh.write(report_csv(report))
    for r in report["results"]:
        print(f"{'PASS' if r['passed'] else 'FAIL'} {r['id']} {r.get('label', '')}")
    return EXIT_OK if report["passed"] else EXIT_FAIL


COMMANDS = {"predict": _cmd_predict, "sample": _cmd_sample, "verify": _cmd_verify,
            "figure": _cmd_figure, "oracle": _cmd_oracle}


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
        if args.config is None:
            if args.command == "figure":
                cfg = {}
            else:
                raise UsageError("--config is required")
        else:
            cfg = _load_config(args.config)
        return COMMANDS[args.command](cfg, args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, DomainError, KeyError, TypeError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
