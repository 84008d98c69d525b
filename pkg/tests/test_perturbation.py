import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from orbitrmt.ensembles import FieldContext, RadialPoint, StructuredMatrix, omega, sample_gaussian_hermitian, sample_haar_unitary
from orbitrmt.perturbation import (
    box_slice_volume,
    find_witness,
    gue_density,
    lue_chain,
    lue_chain_batch,
    lue_char_empirical,
    lue_char_exact,
    lue_density,
    lue_matrix_log_density,
    lue_sample_batch,
    nu_lambda_density,
    nu_lambda_theta_density,
    perturb_spectral_batch,
    perturb_spectral_sample,
    rank_one_law,
    rank_one_matrix_sample,
    rank_one_radial_sample,
    wishart_general_density,
    wishart_sample_batch,
)
from orbitrmt.weylcore import asym_dim


def cdf_from_density(g, lo, hi, cuts=(), grid=300):
    ts = np.unique(np.concatenate([np.linspace(lo, hi, grid + 1), [c for c in cuts if lo < c < hi]]))
    pieces = [integrate.quad(g, a, b, epsabs=1e-12)[0] for a, b in zip(ts[:-1], ts[1:])]
    cdf = np.concatenate([[0.0], np.cumsum(pieces)])
    return (lambda v: np.interp(v, ts, cdf)), cdf[-1]


# ---------------------------------------------------------------------------
# rank-one laws


@pytest.mark.parametrize("field,n,law", [("C", 3, (1, 3)), ("R", 4, (1, 3)), ("H", 2, (2, 4)), ("C", 1, (1, 1))])
def test_rank_one_law_values(field, n, law):
    assert rank_one_law(FieldContext(field, n)) == law


def test_rank_one_exponential(rng):
    x = rank_one_matrix_sample(FieldContext("C", 1), rng, 20_000)
    assert stats.kstest(x, "expon").pvalue > 0.01


@pytest.mark.parametrize("n", [1, 2, 3])
def test_quaternionic_rank_one_mean(n, rng):
    x = rank_one_matrix_sample(FieldContext("H", n), rng, 20_000)
    assert abs(x.mean() - n) < 3 * x.std(ddof=1) / math.sqrt(x.size)


@pytest.mark.parametrize("field,n", [("C", 3), ("R", 5), ("H", 2)])
def test_matrix_route_matches_direct_route(field, n, rng):
    ctx = FieldContext(field, n)
    a = rank_one_matrix_sample(ctx, rng, 20_000)
    b = rank_one_radial_sample(ctx, rng, 20_000)
    assert stats.ks_2samp(a, b).pvalue > 0.01


def test_first_chain_step_is_rank_one(rng):
    ctx = FieldContext("R", 4)
    x = lue_chain_batch(ctx, 1, rng, 20_000)[:, 0]
    assert np.all(x[:, 1] == 0)
    rate, shape = rank_one_law(ctx)
    assert stats.kstest(np.abs(x[:, 0]), stats.gamma(shape, scale=1 / rate).cdf).pvalue > 0.01


def test_chain_rank_grows_by_one(rng):
    ctx = FieldContext("C", 3)
    steps = lue_chain(ctx, 3, rng)
    assert [int(np.count_nonzero(p.coords)) for p in steps] == [1, 2, 3]


def test_chain_steps_have_witnesses(rng):
    ctx = FieldContext("C", 3)
    for _ in range(200):
        steps = lue_chain(ctx, 4, rng)
        for a, b in zip(steps[:-1], steps[1:]):
            assert find_witness(a, float(np.sum(b.coords - a.coords)), b) is not None


# ---------------------------------------------------------------------------
# perturbation samples and their witnesses


def test_zero_theta_is_identity(rng):
    lam = RadialPoint(FieldContext("H", 2), np.array([2.0, 1.0]))
    assert np.array_equal(perturb_spectral_sample(lam, 0.0, rng).coords, lam.coords)
    with pytest.raises(ValueError):
        perturb_spectral_sample(lam, -1.0, rng)


def test_complex_constraints(rng):
    lam = RadialPoint(FieldContext("C", 4), np.array([2.0, 1.0, 0.5, -1.0]))
    th = 0.8
    b = perturb_spectral_batch(lam, th, rng, 10_000)
    assert np.all(np.abs(b.sum(axis=1) - lam.coords.sum() - th) < 1e-9)
    assert np.all(b >= lam.coords - 1e-9)
    assert np.all(lam.coords[:-1] >= b[:, 1:] - 1e-9)


def test_so2_moves_by_theta(rng):
    lam = RadialPoint(FieldContext("R", 2), np.array([-0.4]))
    b = perturb_spectral_batch(lam, 1.1, rng, 1000)
    assert np.allclose(b[:, 0], 0.7)
    assert find_witness(lam, 1.1, [0.7]) is not None


def check_quaternionic_witness(lam, theta, beta, w):
    z = w.z
    lp, bp = np.append(lam, 0.0), np.append(beta, 0.0)
    assert np.all(z >= -1e-9)
    assert np.all(lp[:-1] + 1e-9 >= z) and np.all(z >= lp[1:] - 1e-9)
    assert np.all(bp[:-1] + 1e-9 >= z) and np.all(z >= bp[1:] - 1e-9)
    assert abs(np.sum(lam + beta - 2 * z) - theta) < 1e-8


@pytest.mark.parametrize(
    "field,n,lam,theta",
    [("C", 3, [2.0, 1.0, 0.0], 0.9), ("H", 2, [2.0, 1.0], 1.3), ("R", 5, [2.0, 1.0], 0.7), ("R", 4, [2.0, -1.0], 0.6), ("R", 4, [2.0, 1.0], 1.5), ("R", 3, [1.0], 2.5)],
)
def test_every_sample_has_a_witness(field, n, lam, theta, rng):
    lam = RadialPoint(FieldContext(field, n), np.array(lam))
    samples = perturb_spectral_batch(lam, theta, rng, 4000)
    misses = 0
    for beta in samples:
        w = find_witness(lam, theta, beta)
        if w is None:
            misses += 1
        elif field == "H":
            check_quaternionic_witness(lam.coords, theta, beta, w)
    assert misses == 0


def test_witness_rejects_foreign_points():
    lam = RadialPoint(FieldContext("H", 2), np.array([2.0, 1.0]))
    assert find_witness(lam, 0.5, [4.0, 1.0]) is None
    lam_c = RadialPoint(FieldContext("C", 2), np.array([1.0, 0.0]))
    assert find_witness(lam_c, 0.5, [1.2, 0.2]) is None  # trace is off


# ---------------------------------------------------------------------------
# slice volumes and densities


def sum_density(lo, hi, t, h=2e-4):
    # density of a sum of independent uniforms, by numerical convolution
    grid_pdf = None
    start = 0.0
    for a, b in zip(lo, hi):
        m = max(int(round((b - a) / h)), 1)
        piece = np.full(m, 1.0 / (m * h))
        grid_pdf = piece if grid_pdf is None else np.convolve(grid_pdf, piece) * h
        start += a
    xs = start + h * (np.arange(grid_pdf.size) + 0.5)
    return float(np.interp(t, xs, grid_pdf, left=0.0, right=0.0))


@given(st.integers(1, 3), st.integers(0, 2**31), st.floats(0.05, 0.95))
def test_box_slice_volume_matches_convolution(dim, seed, frac):
    rng = np.random.default_rng(seed)
    lo = rng.uniform(0, 1, dim)
    hi = lo + rng.uniform(0.3, 1.2, dim)
    t = lo.sum() + frac * (hi - lo).sum()
    expected = np.prod(hi - lo) * sum_density(lo, hi, t)
    assert box_slice_volume(lo, hi, t) == pytest.approx(expected, rel=5e-3, abs=5e-3)


def test_box_slice_volume_outside():
    assert box_slice_volume([0.0, 0.0], [1.0, 1.0], 2.5) == 0.0
    assert box_slice_volume([0.0, 0.0], [1.0, 1.0], 1.0) == pytest.approx(1.0)


def test_nu_lambda_theta_zero_outside_support():
    lam = RadialPoint(FieldContext("H", 2), np.array([2.0, 1.0]))
    assert nu_lambda_theta_density(lam, 0.5, [5.0, 1.0]) == 0.0
    lam_c = RadialPoint(FieldContext("C", 2), np.array([1.0, 0.0]))
    assert nu_lambda_theta_density(lam_c, 0.5, [0.5, 1.0]) == 0.0


@pytest.mark.parametrize("field,n,lam,theta", [("C", 2, [1.0, 0.0], 0.7), ("H", 1, [1.2], 0.5), ("R", 3, [1.0], 0.6), ("R", 3, [1.0], 1.4)])
def test_nu_lambda_theta_one_dimensional(field, n, lam, theta, rng):
    ctx = FieldContext(field, n)
    pt = RadialPoint(ctx, np.array(lam))
    tr = sum(lam) + theta
    if field == "C":
        g = lambda b: nu_lambda_theta_density(pt, theta, [b, tr - b])
        lo, hi = lam[0], lam[0] + theta
    else:
        g = lambda b: nu_lambda_theta_density(pt, theta, [b])
        lo, hi = 0.0, lam[0] + theta
    cdf, mass = cdf_from_density(g, lo, hi, cuts=[abs(lam[0] - theta), lam[0], theta])
    assert mass == pytest.approx(1.0, abs=1e-6)
    x = perturb_spectral_batch(pt, theta, rng, 20_000)[:, 0]
    assert stats.kstest(x, lambda v: cdf(v) / mass).pvalue > 0.01


def kink_mass(f, x_lo, x_hi, y_lo, y_hi, values):
    # the slice volume bends along lines x + y = const; hand those to quad
    sums = {sum(s * v for s, v in zip(signs, values)) for signs in itertools.product((-1, 0, 1), repeat=len(values))}
    sums = [c for c in sums if c >= 0]

    def inner(x):
        lo, hi = y_lo(x), y_hi(x)
        pts = sorted({p for c in sums for p in (c, c - x) if lo < p < hi})
        return integrate.quad(lambda y: f(x, y), lo, hi, points=pts or None, limit=200, epsabs=1e-11)[0]

    outer = sorted({p for c in sums for p in (c, c / 2) if x_lo < p < x_hi})
    return integrate.quad(inner, x_lo, x_hi, points=outer or None, limit=200, epsabs=1e-10)[0]


@pytest.mark.parametrize("field,n,lam,theta", [("H", 2, [2.0, 1.0], 1.3), ("R", 5, [2.0, 1.0], 0.8), ("C", 3, [2.0, 1.0, 0.0], 0.9)])
def test_nu_lambda_theta_two_dimensional_mass(field, n, lam, theta):
    pt = RadialPoint(FieldContext(field, n), np.array(lam))
    hi = lam[0] + theta
    if field == "C":
        tr = sum(lam) + theta
        f = lambda x, y: nu_lambda_theta_density(pt, theta, [x, y, tr - x - y])
        mass = kink_mass(f, lam[0], hi, lambda x: lam[1], lambda x: lam[0], lam + [theta])
    else:
        f = lambda x, y: nu_lambda_theta_density(pt, theta, [x, y])
        mass = kink_mass(f, 0.0, hi, lambda x: 0.0, lambda x: x, lam + [theta])
    assert mass == pytest.approx(1.0, abs=1e-6)


def test_nu_lambda_complex_formula():
    lam = RadialPoint(FieldContext("C", 2), np.array([1.0, -0.5]))
    for beta in ([1.5, 0.2], [3.0, -0.4], [2.0, 0.9]):
        b = np.array(beta)
        expected = asym_dim((lam.ctx, b)) / asym_dim(lam) * math.exp(-(b - lam.coords).sum())
        assert nu_lambda_density(lam, b) == pytest.approx(expected)
    assert nu_lambda_density(lam, [0.5, 0.0]) == 0.0


@pytest.mark.parametrize("field,n,lam", [("C", 2, [1.0, -0.5]), ("H", 2, [1.0, 0.3]), ("R", 5, [1.0, 0.4]), ("R", 4, [1.0, 0.0])])
def test_nu_lambda_mass(field, n, lam):
    pt = RadialPoint(FieldContext(field, n), np.array(lam))
    f = lambda y, x: nu_lambda_density(pt, [x, y])
    if field == "C":
        mass = integrate.dblquad(f, lam[0], 40, lam[1], lam[0], epsabs=1e-10)[0]
    elif pt.ctx.chamber_type == "D":
        mass = integrate.dblquad(f, 0, 40, lambda x: -x, lambda x: x, epsabs=1e-10)[0]
    else:
        mass = integrate.dblquad(f, 0, 40, 0, lambda x: x, epsabs=1e-10)[0]
    assert mass == pytest.approx(1.0, abs=1e-5)


def test_nu_lambda_one_step_law(rng):
    pt = RadialPoint(FieldContext("H", 1), np.array([0.7]))
    x = lue_chain_batch(pt.ctx, 1, rng, 20_000, start=pt)[:, 0, 0]
    cdf, mass = cdf_from_density(lambda b: nu_lambda_density(pt, [b]), 0.0, 20.0, cuts=[0.7])
    assert mass == pytest.approx(1.0, abs=1e-6)
    assert stats.kstest(x, cdf).pvalue > 0.01


def test_nu_lambda_box_probability(rng):
    pt = RadialPoint(FieldContext("C", 2), np.array([1.0, -0.5]))
    x = lue_chain_batch(pt.ctx, 1, rng, 40_000, start=pt)[:, 0]
    box = (x[:, 0] < 2.0) & (x[:, 1] < 0.25)
    p = integrate.dblquad(lambda y, s: nu_lambda_density(pt, [s, y]), 1.0, 2.0, -0.5, 0.25)[0]
    se = math.sqrt(p * (1 - p) / x.shape[0])
    assert abs(box.mean() - p) < 4 * se


# ---------------------------------------------------------------------------
# Laguerre, Wishart and Gaussian densities


def test_lue_scalar_complex():
    ctx = FieldContext("C", 1)
    for x in (0.1, 1.0, 3.7):
        assert lue_density(ctx, 1, [x]) == pytest.approx(math.exp(-x))


def test_lue_complex_is_classical_laguerre():
    ctx, k = FieldContext("C", 3), 5
    rng = np.random.default_rng(2)
    ratios = []
    for _ in range(6):
        x = np.sort(rng.uniform(0.1, 6, 3))[::-1]
        vdm = np.prod([x[i] - x[j] for i in range(3) for j in range(i + 1, 3)])
        ratios.append(lue_density(ctx, k, x) / (vdm**2 * np.prod(x ** (k - 3)) * np.exp(-x.sum())))
    assert np.allclose(ratios, ratios[0], rtol=1e-10)


@pytest.mark.parametrize("field,n,k", [("C", 1, 3), ("H", 1, 2), ("R", 3, 3), ("R", 2, 4), ("H", 1, 1)])
def test_lue_one_dimensional_normalized(field, n, k):
    ctx = FieldContext(field, n)
    assert integrate.quad(lambda x: lue_density(ctx, k, [x]), 0, np.inf)[0] == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("field,n,k", [("C", 2, 3), ("H", 2, 3), ("R", 4, 5), ("R", 5, 4), ("C", 3, 2)])
def test_lue_two_dimensional_normalized(field, n, k):
    ctx = FieldContext(field, n)
    f = lambda y, x: lue_density(ctx, k, [x, y])
    assert integrate.dblquad(f, 0, 60, 0, lambda x: x, epsabs=1e-11)[0] == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("field,n,k", [("R", 4, 5), ("H", 2, 2), ("C", 2, 2)])
def test_lue_box_probability(field, n, k, rng):
    ctx = FieldContext(field, n)
    x = lue_sample_batch(ctx, k, rng, 40_000)
    a, b = np.median(x[:, 0]), np.median(x[:, 1])
    p = integrate.dblquad(lambda y, s: lue_density(ctx, k, [s, y]), 0, a, 0, lambda s: min(s, b))[0]
    est = np.mean((x[:, 0] < a) & (x[:, 1] < b))
    assert abs(est - p) < 4 * math.sqrt(p * (1 - p) / x.shape[0])


@pytest.mark.parametrize("field,n,k", [("C", 3, 4), ("R", 4, 5), ("H", 2, 3), ("R", 3, 4)])
def test_matrix_density_weyl_consistency(field, n, k):
    # radial density / (matrix density at omega(lam) * d_n(lam)^2) is constant
    ctx = FieldContext(field, n)
    rng = np.random.default_rng(4)
    ratios = []
    for _ in range(5):
        x = np.sort(rng.uniform(0.2, 5, ctx.n_tilde))[::-1]
        H = omega(RadialPoint(ctx, x))
        if ctx.chamber_type == "D":
            H = omega(RadialPoint(ctx, x))
        m = min(ctx.n_tilde, ctx.with_n(k).n_tilde)
        ratios.append(lue_density(ctx, k, x[:m]) / (math.exp(lue_matrix_log_density(ctx, k, H)) * asym_dim((ctx, x)) ** 2))
    assert np.allclose(ratios, ratios[0], rtol=1e-8)


def test_matrix_density_complex_form_and_invariance(rng):
    ctx, k = FieldContext("C", 3), 5
    x1, x2 = np.array([3.0, 1.5, 0.2]), np.array([2.0, 1.0, 0.9])
    l1 = lue_matrix_log_density(ctx, k, omega(RadialPoint(ctx, x1)))
    l2 = lue_matrix_log_density(ctx, k, omega(RadialPoint(ctx, x2)))
    expect = lambda x: np.sum((k - 3) * np.log(x) - x)
    assert l1 - l2 == pytest.approx(expect(x1) - expect(x2))
    U = sample_haar_unitary(ctx, rng).data
    S = U @ omega(RadialPoint(ctx, x1)).data @ U.conj().T
    assert lue_matrix_log_density(ctx, k, StructuredMatrix(ctx, "hermitian_P", (S + S.conj().T) / 2)) == pytest.approx(l1)


def test_wishart_rank_one_shape():
    ctx = FieldContext("H", 3)
    ratios = [wishart_general_density(ctx, 1, [1.0], [t]) / (asym_dim((ctx, [t, 0.0, 0.0])) * math.exp(-2 * t)) for t in (0.3, 1.1, 2.5)]
    assert np.allclose(ratios, ratios[0])


def test_wishart_normalized_and_sampled(rng):
    ctx, k, alpha = FieldContext("C", 3), 2, [2.0, 1.0]
    f = lambda y, x: wishart_general_density(ctx, k, alpha, [x, y])
    assert integrate.dblquad(f, 0, 80, 0, lambda x: x, epsabs=1e-11)[0] == pytest.approx(1.0, abs=1e-6)
    x = wishart_sample_batch(ctx, k, alpha, rng, 40_000)
    a, b = np.median(x[:, 0]), np.median(x[:, 1])
    p = integrate.dblquad(f, 0, a, 0, lambda s: min(s, b))[0]
    est = np.mean((x[:, 0] < a) & (x[:, 1] < b))
    assert abs(est - p) < 4 * math.sqrt(p * (1 - p) / x.shape[0])


def test_wishart_rejects_repeated_alpha():
    with pytest.raises(ValueError):
        wishart_general_density(FieldContext("C", 3), 2, [1.0, 1.0], [2.0, 1.0])


@pytest.mark.parametrize("field,n", [("C", 2), ("H", 1), ("R", 3), ("R", 4), ("H", 2)])
def test_gue_density_normalized(field, n):
    ctx = FieldContext(field, n)
    if ctx.n_tilde == 1:
        lo = -np.inf if field == "C" else 0.0
        mass = integrate.quad(lambda x: gue_density(ctx, [x]), lo, np.inf)[0]
    else:
        lo = -12.0 if field == "C" else 0.0
        mass = integrate.dblquad(lambda y, x: gue_density(ctx, [x, y]), lo, 12, lo, lambda x: x, epsabs=1e-11)[0]
    assert mass == pytest.approx(1.0, abs=1e-7)


def test_gue_density_against_samples(rng):
    ctx = FieldContext("H", 2)
    from orbitrmt.ensembles import radial_coords_batch

    mats = np.array([sample_gaussian_hermitian(ctx, rng).data for _ in range(20_000)])
    x = radial_coords_batch(ctx, mats)
    p = integrate.dblquad(lambda y, s: gue_density(ctx, [s, y]), 0, 2.5, 0, lambda s: min(s, 1.0))[0]
    est = np.mean((x[:, 0] < 2.5) & (x[:, 1] < 1.0))
    assert abs(est - p) < 4 * math.sqrt(p * (1 - p) / x.shape[0])


# ---------------------------------------------------------------------------
# Fourier transform


def test_char_at_zero():
    for field, n in (("C", 2), ("R", 3), ("H", 2)):
        ctx = FieldContext(field, n)
        d = 2 * n if field == "H" else n
        assert lue_char_exact(ctx, 3, StructuredMatrix(ctx, "hermitian_P", np.zeros((d, d)))) == 1


@given(st.sampled_from([("R", 3), ("R", 4), ("H", 1), ("H", 2)]), st.integers(1, 4), st.integers(0, 2**31))
def test_char_real_for_symmetric_fields(case, k, seed):
    ctx = FieldContext(*case)
    N = sample_gaussian_hermitian(ctx, np.random.default_rng(seed))
    v = lue_char_exact(ctx, k, N)
    assert abs(v.imag) < 1e-12 and abs(v) <= 1 + 1e-12


def test_char_monte_carlo_quaternionic(rng):
    ctx = FieldContext("H", 2)
    for s in (0.3, 0.9):
        N = sample_gaussian_hermitian(ctx, rng)
        N = StructuredMatrix(ctx, "hermitian_P", N.data * s / np.linalg.norm(N.data, 2))
        est, se = lue_char_empirical(ctx, 3, N, rng, 20_000)
        assert abs(est - lue_char_exact(ctx, 3, N)) < 3 * se
