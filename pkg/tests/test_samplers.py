import math

import numpy as np
import pytest
from scipy import stats

from rmtfluct import samplers
from rmtfluct.basis import InputError
from rmtfluct.loops import wachter_endpoints
from rmtfluct.rng import generator
from rmtfluct.samplers import EnsembleSpec, sample

SEED = 7


def pooled(spec, n, seed=SEED):
    return np.concatenate([sample(spec, seed, s).values for s in range(n)])


def ks_against(points, pdf, a, b):
    """Kolmogorov distance of points to the density pdf on (a, b), normalised numerically."""
    xs = np.linspace(a, b, 2001)
    dens = np.array([pdf(x) for x in xs])
    cdf = np.concatenate([[0], np.cumsum((dens[1:] + dens[:-1]) / 2 * np.diff(xs))])
    cdf /= cdf[-1]
    return stats.kstest(points, lambda t: np.interp(t, xs, cdf)).statistic


# spec validation --------------------------------------------------------------

@pytest.mark.parametrize("kw", [dict(family="CUE", N=0), dict(family="CUE", N=3, beta=0),
                                dict(family="CUE_alpha", N=3, alpha=1.0),
                                dict(family="EllipticGinibre", N=3, tau=1.0),
                                dict(family="OplusN", N=5), dict(family="Nope", N=3),
                                dict(family="cGP", N=601)])
def test_spec_rejects(kw):
    with pytest.raises(InputError):
        EnsembleSpec(**kw)


def test_spec_json_round_trip():
    s = EnsembleSpec("GinibreProduct", 6, M=3, eta=[1, 2])
    assert EnsembleSpec.from_json(s.to_json()) == s


# structural invariants --------------------------------------------------------

def test_cue_unimodular():
    u = samplers.haar_unitary(generator(SEED, 0), 40)
    assert np.max(np.abs(np.abs(np.linalg.eigvals(u)) - 1)) < 1e-10
    v = sample(EnsembleSpec("CUE", 40), SEED, 0).values
    assert np.all((v >= 0) & (v < 2 * np.pi)) and len(v) == 40


def test_determinism_bitwise():
    for fam in ("CUE", "COE", "Gaussian_beta", "GinOE", "cGP", "CUE_alpha"):
        spec = EnsembleSpec(fam, 12, alpha=0.3 if fam == "CUE_alpha" else 0.0)
        a, b = sample(spec, SEED, 5).values, sample(spec, SEED, 5).values
        assert a.tobytes() == b.tobytes()
        assert sample(spec, SEED, 6).values.tobytes() != a.tobytes()


def test_cse_kramers_pairs():
    u = samplers.cse_matrix(generator(SEED, 1), 20)
    ang = np.sort(np.mod(np.angle(np.linalg.eigvals(u)), 2 * np.pi))
    d = samplers._dedupe_pairs(ang)
    assert len(d) == 20 and len(np.unique(np.round(d, 6))) == 20
    gaps = np.abs(np.angle(np.exp(1j * (ang[1::2] - ang[0::2]))))
    # the pair split by the branch at 0 is handled inside _dedupe_pairs
    assert np.sort(gaps)[-2] < 1e-8
    assert len(sample(EnsembleSpec("CSE", 20), SEED, 1).values) == 20


def test_oplus_determinant_and_angles():
    q = samplers.haar_orthogonal(generator(SEED, 2), 10)
    assert abs(np.linalg.det(q) - 1) < 1e-10
    a = sample(EnsembleSpec("OplusN", 10), SEED, 2).values
    assert len(a) == 5 and np.all((a > 0) & (a < np.pi))


def test_ginoe_conjugate_closed():
    v = sample(EnsembleSpec("GinOE", 60), SEED, 3).values
    w = np.sort_complex(np.conj(v))
    assert np.max(np.abs(np.sort_complex(v) - w)) < 1e-8


def test_ginoe_real_count_order_sqrt_n():
    spec = EnsembleSpec("GinOE", 400)
    counts = [np.count_nonzero(np.abs(sample(spec, SEED, s).values.imag) < 1e-9) for s in range(10)]
    assert 0.3 <= np.mean(counts) / math.sqrt(400) <= 3


def test_retries_exhausted_is_hard_error():
    spec = EnsembleSpec("CUE", 3)

    def boom(rng):
        raise np.linalg.LinAlgError("no convergence")
    with pytest.raises(samplers.SamplerError):
        samplers.with_retries(boom, spec, SEED, 0)
    calls = []

    def flaky(rng):
        calls.append(1)
        if len(calls) < 3:
            raise np.linalg.LinAlgError("no convergence")
        return 1.0
    assert samplers.with_retries(flaky, spec, SEED, 0) == (1.0, 2)


# means of simple statistics -----------------------------------------------------

def test_cue_cos2_mean_zero():
    # Tr U^2 fast path, 4000 samples at N = 150
    spec = EnsembleSpec("CUE", 150)
    t = np.array([samplers.power_traces(spec, SEED, s, 2)[1].real for s in range(4000)])
    assert abs(t.mean()) < 3 * t.std(ddof=1) / math.sqrt(len(t))


def test_power_traces_match_eigenvalues():
    for fam in ("CUE", "COE", "CSE", "circular_beta"):
        spec = EnsembleSpec(fam, 9, beta=3.0 if fam == "circular_beta" else 2.0)
        x = sample(spec, SEED, 4).values
        tr = samplers.power_traces(spec, SEED, 4, 4)
        direct = np.array([np.exp(1j * m * x).sum() for m in range(1, 5)])
        assert np.allclose(tr, direct, atol=1e-10)


def test_counting_fast_paths_match_eig():
    th = np.linspace(0.1, 6.2, 17)
    for fam in ("CUE", "circular_beta"):
        spec = EnsembleSpec(fam, 30, beta=1.5)
        beta = 2.0 if fam == "CUE" else spec.beta
        for s in range(10):
            # counting runs on the CMV model of the same stream
            u = samplers.cmv_matrix(samplers.verblunsky(generator(SEED, s), 30, beta))
            x = np.mod(np.angle(np.linalg.eigvals(u)), 2 * np.pi)
            assert np.array_equal(samplers.circular_counts(spec, SEED, s, th),
                                  [np.count_nonzero(x <= t) for t in th])
    t = np.linspace(-1.2, 1.2, 19)
    for spec in (EnsembleSpec("Gaussian_beta", 30, beta=0.7), EnsembleSpec("Laguerre_beta", 30, alpha=0.5)):
        for s in range(10):
            x = sample(spec, SEED, s).values
            assert np.array_equal(samplers.tridiagonal_counts(spec, SEED, s, t + (spec.alpha > 0)),
                                  [np.count_nonzero(x < u) for u in t + (spec.alpha > 0)])
    spec = EnsembleSpec("GinUE", 50)
    r = samplers.ginue_radii(spec, SEED, 0)
    assert r.shape == (50,) and r.max() < 1.6


def test_cgp_argument_principle_matches_roots():
    spec = EnsembleSpec("cGP", 80)
    radii = [0.3, 0.6, 0.9]
    for s in range(5):
        z = sample(spec, SEED, s).values
        assert np.array_equal(samplers.cgp_disk_counts(spec, SEED, s, radii),
                              [np.count_nonzero(np.abs(z) < R) for R in radii])


# thinning ----------------------------------------------------------------------

def test_thin_keeps_points_with_prob_zeta():
    s = sample(EnsembleSpec("CUE", 50), SEED, 0)
    assert len(samplers.thin(s, 1 - 1e-15, 1).values) == 50
    with pytest.raises(InputError):
        samplers.thin(s, 1.0, 1)
    kept = np.array([len(samplers.thin(s, 0.3, 1 + t).values) for t in range(10_000)])
    se = math.sqrt(50 * 0.3 * 0.7 / len(kept))
    assert abs(kept.mean() - 15) < 3 * se


def test_thinned_cue_variance_grows_linearly():
    spec = EnsembleSpec("CUE", 60)
    Ls = np.array([0.5, 1.5, 2.5])
    rows = []
    for s in range(600):
        x = samplers.thin(sample(spec, SEED, s), 0.5, SEED).values
        rows.append([np.count_nonzero(x < L) for L in Ls])
    v = np.var(np.array(rows), axis=0, ddof=1)
    assert np.polyfit(Ls, v, 1)[0] > 0


# submatrices -------------------------------------------------------------------

def _goe(n, stream):
    return samplers.gaussian_dense(generator(SEED, stream), n, 1.0)


def test_full_submatrix_identical():
    H = _goe(20, 0)
    a, b = samplers.principal_submatrix_spectra(H, range(20), range(20))
    assert np.array_equal(a.values, b.values)
    with pytest.raises(InputError):
        samplers.principal_submatrix_spectra(H, [], [1])


def test_half_submatrix_semicircle():
    rng = np.random.default_rng(1)
    pts = []
    for s in range(10):
        idx = rng.choice(400, 200, replace=False)
        pts.append(samplers.principal_submatrix_spectra(_goe(400, s), idx, idx)[0].values)
    assert ks_against(np.concatenate(pts), lambda x: math.sqrt(max(0, 1 - x * x)), -1, 1) < 0.05


def test_disjoint_halves_uncorrelated():
    t = []
    for s in range(300):
        a, b = samplers.principal_submatrix_spectra(_goe(400, s), range(200), range(200, 400))
        t.append([np.sum(2 * a.values ** 2 - 1), np.sum(2 * b.values ** 2 - 1)])
    t = np.array(t)
    c = np.cov(t.T)[0, 1]
    se = np.std((t[:, 0] - t[:, 0].mean()) * (t[:, 1] - t[:, 1].mean()), ddof=1) / math.sqrt(len(t))
    assert abs(c) < 3 * se


# one-point densities at N = 400 (pooled points) -----------------------------------

def test_density_cue_uniform():
    assert stats.kstest(pooled(EnsembleSpec("CUE", 400), 10), stats.uniform(0, 2 * np.pi).cdf).statistic < 0.05


@pytest.mark.parametrize("beta", [1.0, 2.0, 4.0, 0.5])
def test_density_gaussian_semicircle(beta):
    x = pooled(EnsembleSpec("Gaussian_beta", 400, beta=beta), 10)
    assert ks_against(x, lambda t: math.sqrt(max(0, 1 - t * t)), -1.05, 1.05) < 0.05


def test_density_laguerre_marchenko_pastur():
    alpha = 1.0
    r = math.sqrt(1 + alpha)
    c, d = (1 - r) ** 2, (1 + r) ** 2
    x = pooled(EnsembleSpec("Laguerre_beta", 400, alpha=alpha), 10)
    assert ks_against(x, lambda t: math.sqrt(max(0, (t - c) * (d - t))) / t, c + 1e-9, d + 0.1) < 0.05


def test_density_jacobi_wachter():
    g1, g2 = 1.0, 0.5
    c, d = wachter_endpoints(g1, g2)
    x = pooled(EnsembleSpec("Jacobi_beta", 400, beta=1.0, gamma1=g1, gamma2=g2), 10)
    pdf = lambda t: math.sqrt(max(0, (t - c) * (d - t))) / (t * (1 - t))  # noqa: E731
    assert ks_against(x, pdf, c, min(d + 0.02, 1 - 1e-9)) < 0.05


def test_density_ginue_disk():
    z = pooled(EnsembleSpec("GinUE", 400), 10)
    # uniform disk: |z|^2 uniform, arg uniform
    assert stats.kstest(np.minimum(np.abs(z) ** 2, 1), "uniform").statistic < 0.05
    assert stats.kstest(np.mod(np.angle(z), 2 * np.pi) / (2 * np.pi), "uniform").statistic < 0.05


def test_density_elliptic():
    tau = 0.4
    z = pooled(EnsembleSpec("EllipticGinibre", 400, tau=tau), 10)
    w = z.real / (1 + tau) + 1j * z.imag / (1 - tau)
    assert stats.kstest(np.minimum(np.abs(w) ** 2, 1), "uniform").statistic < 0.05


# normalisation conventions --------------------------------------------------------

def test_gaussian_scaling_exact_finite_n():
    # weight e^{-beta N x^2}: Var sum x = 1/(2 beta) at every N
    for beta in (1.0, 2.0, 4.0):
        rng = generator(SEED, 11)
        s = [samplers.gaussian_tridiagonal(rng, 5, beta)[0].sum() for _ in range(40_000)]
        assert abs(np.var(s) - 1 / (2 * beta)) < 4 * (1 / (2 * beta)) * math.sqrt(2 / 40_000)


def test_wigner_support():
    x = pooled(EnsembleSpec("Wigner", 400, beta=1.0, law="rademacher"), 5)
    assert 0.97 < x.max() < 1.05 and -1.05 < x.min() < -0.97


def test_cgp_coefficient_variances():
    n = 12
    lc = np.array([samplers.cgp_log_coefficients(generator(SEED, s), n)[0] for s in range(4000)])
    # |c_j|^2 is exponential with mean 1/j!
    m = np.exp(2 * lc).mean(axis=0) * np.array([math.factorial(j) for j in range(n + 1)])
    assert np.allclose(m, 1, atol=0.12)


def test_cgp_global_scaling_in_disk():
    z = pooled(EnsembleSpec("cGP", 200), 5)
    # the top coefficients put a few zeros outside; the bulk sits in the unit disk
    assert np.mean(np.abs(z) < 1.1) > 0.97


def test_product_normalisation():
    x = pooled(EnsembleSpec("GinibreProduct", 200, M=2), 10)
    # the first moment of W^*W / prod N_j tends to 1
    assert abs(x.mean() - 1) < 0.03


def test_sample_csv(tmp_path):
    s = sample(EnsembleSpec("GinUE", 4), SEED, 0)
    p = tmp_path / "s.csv"
    s.to_csv(str(p))
    rows = p.read_text().splitlines()
    assert rows[0] == "re,im" and len(rows) == 5
    back = np.array([complex(float(a), float(b)) for a, b in (r.split(",") for r in rows[1:])])
    assert np.array_equal(back, s.values.astype(complex))
    assert (tmp_path / "s.csv.json").exists()
