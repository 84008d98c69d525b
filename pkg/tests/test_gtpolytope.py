import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from orbitrmt.ensembles import FieldContext, RadialPoint
from orbitrmt.gtpolytope import (
    DegeneratePolytopeError,
    GTPattern,
    GTSpec,
    gt_contains,
    gt_volume,
    h_witness_volume,
    level_labels,
    level_lengths,
    mu_lambda_density,
    patterns_to_csv,
    sample_uniform_spectral,
    sample_uniform_spectral_batch,
    sample_uniform_walk,
    sample_uniform_walk_batch,
)
from orbitrmt.weylcore import asym_dim


def test_level_layout():
    assert level_lengths(FieldContext("C", 3)) == [1, 2, 3]
    assert level_lengths(FieldContext("R", 5)) == [0, 1, 1, 2, 2]
    assert level_lengths(FieldContext("H", 2)) == [1, 1, 2, 2]
    assert level_labels(FieldContext("H", 2)) == ["1/2", "1", "3/2", "2"]


def test_contains_examples():
    spec = GTSpec.of("C", 3, [1.0, 1.0, 1.0])
    const = GTPattern(spec.ctx, [[1.0], [1.0, 1.0], [1.0, 1.0, 1.0]])
    assert gt_contains(spec, const)
    spec2 = GTSpec.of("C", 2, [2.0, 0.0])
    assert not gt_contains(spec2, GTPattern(spec2.ctx, [[3.0], [2.0, 0.0]]))
    assert gt_contains(spec2, GTPattern(spec2.ctx, [[0.5], [2.0, 0.0]]))


def test_contains_real_even_sign():
    spec = GTSpec.of("R", 4, [2.0, -1.0])
    ok = GTPattern(spec.ctx, [[], [-0.9], [1.2], [2.0, -1.0]])
    assert gt_contains(spec, ok)
    bad = GTPattern(spec.ctx, [[], [0.3], [0.5], [2.0, -1.0]])  # x^(3) must lie between 1 and 2
    assert not gt_contains(spec, bad)


def test_volume_examples():
    assert gt_volume(GTSpec.of("C", 2, [3.0, 0.5])) == pytest.approx(2.5)
    assert gt_volume(GTSpec.of("C", 3, [2.0, 1.0, 0.0])) == pytest.approx(1.0)
    # repeated entries: the face is lower dimensional, roots on the wall are skipped
    assert gt_volume(GTSpec.of("C", 3, [2.0, 2.0, 0.0])) == pytest.approx(asym_dim((FieldContext("C", 3), [2.0, 2.0, 0.0])))


def test_volume_by_rejection_sampling():
    # free coordinates of GT_3(2,1,0): x1 and (y1, y2); box [0,2]^3 of volume 8
    rng = np.random.default_rng(0)
    n = 400_000
    x = rng.uniform(0, 2, n)
    y1 = rng.uniform(0, 2, n)
    y2 = rng.uniform(0, 2, n)
    inside = (2 >= y1) & (y1 >= 1) & (1 >= y2) & (y2 >= 0) & (y1 >= x) & (x >= y2)
    est = 8 * inside.mean()
    assert abs(est - 1.0) < 0.02


@pytest.mark.parametrize("field,n", [("C", 2), ("C", 4), ("R", 3), ("R", 4), ("R", 6), ("H", 1), ("H", 3)])
def test_spectral_samples_are_contained(field, n, rng):
    ctx = FieldContext(field, n)
    lam = np.sort(rng.uniform(0.2, 3.0, ctx.n_tilde))[::-1]
    if ctx.chamber_type == "D":
        lam[-1] = -lam[-1]
    spec = GTSpec(ctx, RadialPoint(ctx, lam))
    for flat in sample_uniform_spectral_batch(spec, rng, 200):
        assert gt_contains(spec, GTPattern.from_flat(ctx, flat))
    assert gt_contains(spec, sample_uniform_spectral(spec, rng))


def test_spectral_handles_degenerate_top(rng):
    spec = GTSpec.of("C", 3, [1.0, 1.0, 0.0])
    flat = sample_uniform_spectral_batch(spec, rng, 50)
    assert np.allclose(flat[:, 1], 1.0)  # x^(2)_1 is pinned between two equal entries


def test_level_one_uniform(rng):
    spec = GTSpec.of("C", 2, [1.0, 0.0])
    x = sample_uniform_spectral_batch(spec, rng, 100_000)[:, 0]
    assert stats.kstest(x, "uniform").pvalue > 0.01


def test_level_two_histogram_matches_density(rng):
    # 2-D histogram of x^(2) for lam = (2,1,0); cell masses from the density
    spec = GTSpec.of("C", 3, [2.0, 1.0, 0.0])
    b = sample_uniform_spectral_batch(spec, rng, 50_000)[:, 1:3]
    e1 = np.linspace(1, 2, 5)
    e2 = np.linspace(0, 1, 5)
    obs, _, _ = np.histogram2d(b[:, 0], b[:, 1], [e1, e2])
    f = lambda y, x: mu_lambda_density(spec.top, [x, y])
    exp = np.array([[integrate.dblquad(f, e1[i], e1[i + 1], e2[j], e2[j + 1])[0] for j in range(4)] for i in range(4)])
    exp *= b.shape[0]
    chi2 = ((obs - exp) ** 2 / exp).sum()
    assert stats.chi2.sf(chi2, 15) > 0.01


@pytest.mark.parametrize("field,n,lam", [("C", 3, [2.0, 0.5, -1.0]), ("H", 2, [2.0, 1.0]), ("R", 5, [2.0, 0.7])])
def test_walk_samples_are_contained(field, n, lam, rng):
    spec = GTSpec.of(field, n, lam)
    for flat in sample_uniform_walk_batch(spec, rng, 100):
        assert gt_contains(spec, GTPattern.from_flat(spec.ctx, flat))
    assert gt_contains(spec, sample_uniform_walk(spec, rng, steps=30))


def test_walk_refuses_degenerate(rng):
    with pytest.raises(DegeneratePolytopeError):
        sample_uniform_walk(GTSpec.of("C", 3, [1.0, 1.0, 0.0]), rng)


def test_two_samplers_small(rng):
    spec = GTSpec.of("C", 3, [2.0, 1.0, 0.0])
    a = sample_uniform_spectral_batch(spec, rng, 10_000)
    b = np.concatenate([sample_uniform_walk_batch(spec, rng, 250, thin=40) for _ in range(40)])
    for j in range(3):
        assert stats.ks_2samp(a[:, j], b[:, j]).statistic < 0.03


@pytest.mark.parametrize(
    "field,n,lam",
    [("C", 2, [1.0, 0.0]), ("C", 3, [3.0, 1.0, 0.0]), ("H", 2, [2.0, 1.0]), ("R", 4, [2.0, 1.0]), ("R", 5, [2.0, 1.0]), ("R", 3, [1.5])],
)
def test_density_normalized(field, n, lam):
    top = RadialPoint(FieldContext(field, n), np.array(lam))
    sub = top.ctx.with_n(n - 1)
    m = sub.n_tilde
    hi = max(abs(v) for v in lam)
    if m == 0:
        pytest.skip("nothing below")
    if m == 1:
        lo = -hi if sub.chamber_type in ("A", "D") else 0.0
        pts = sorted({abs(v) for v in lam} | {v for v in lam})
        mass = integrate.quad(lambda t: mu_lambda_density(top, [t]), lo, hi, points=pts, epsabs=1e-12)[0]
    else:
        lo = min(lam) if field == "C" else (-hi if sub.chamber_type == "D" else 0.0)
        f = lambda y, x: mu_lambda_density(top, [x, y])
        mass = sum(
            integrate.dblquad(f, a, b, lo, hi, epsabs=1e-11)[0]
            for a, b in zip([lo] + sorted(lam), sorted(lam) + [hi])
            if b > a
        )
    assert mass == pytest.approx(1.0, abs=1e-6)


def test_rank_one_quaternionic_density():
    n, th = 3, 1.4
    top = RadialPoint(FieldContext("H", n), np.array([th, 0.0, 0.0]))
    for b in (0.2, 0.7, 1.3):
        expected = (2 * n - 2) * (2 * n - 1) * b ** (2 * n - 3) * (th - b) / th ** (2 * n - 1)
        assert mu_lambda_density(top, [b, 0.0]) == pytest.approx(expected)
    assert integrate.quad(lambda b: mu_lambda_density(top, [b, 0.0]), 0, th)[0] == pytest.approx(1.0)
    assert mu_lambda_density(top, [1.0, 0.5]) == 0.0


def test_volume_recursion_quaternionic():
    # d_2(lam) = int d_1(beta) * (witness volume of the half level) d beta
    lam = np.array([2.0, 0.5])
    d1 = lambda b: asym_dim((FieldContext("H", 1), [b]))
    val = integrate.quad(lambda b: d1(b) * h_witness_volume(lam, np.array([b])), 0, 2, points=[0.5])[0]
    assert val == pytest.approx(asym_dim((FieldContext("H", 2), lam)), rel=1e-6)


def test_density_outside_support_is_zero():
    top = RadialPoint(FieldContext("C", 3), np.array([2.0, 1.0, 0.0]))
    assert mu_lambda_density(top, [2.5, 0.5]) == 0.0
    assert mu_lambda_density(top, [1.5, 1.2]) == 0.0


@given(st.integers(0, 2**31))
def test_pattern_serialization(seed):
    rng = np.random.default_rng(seed)
    spec = GTSpec.of("H", 2, [2.0, 0.5])
    p = sample_uniform_spectral(spec, rng)
    back = GTPattern.from_json(p.to_json())
    assert np.array_equal(back.flat(), p.flat())
    assert json.loads(p.to_json())["levels"][-1] == [2.0, 0.5]


def test_patterns_csv_header(rng):
    spec = GTSpec.of("R", 4, [2.0, 1.0])
    text = patterns_to_csv(spec.ctx, sample_uniform_spectral_batch(spec, rng, 3))
    lines = text.strip().split("\n")
    assert lines[0] == "x[2]_1,x[3]_1,x[4]_1,x[4]_2"
    assert len(lines) == 4
