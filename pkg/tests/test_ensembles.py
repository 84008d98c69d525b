import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from orbitrmt.ensembles import (
    ChamberError,
    FieldContext,
    RadialPoint,
    StructuredMatrix,
    dumps_compact,
    in_chamber,
    inner_product,
    minor,
    minor_process,
    omega,
    pfaffian,
    quaternion_j,
    radial_coords_batch,
    radial_part,
    sample_gaussian_hermitian,
    sample_gaussian_rectangular,
    sample_haar_batch,
    sample_haar_unitary,
)
from orbitrmt.gtpolytope import GTSpec, gt_contains

CONTEXTS = [FieldContext(f, n) for f in "RCH" for n in range(1, 6)]


def chamber_point(ctx, draw_values):
    """Map arbitrary reals into the chamber of ``ctx``."""
    v = np.sort(np.abs(np.asarray(draw_values, dtype=float)))[::-1]
    if ctx.chamber_type == "A":
        return v - v.mean()
    if ctx.chamber_type == "D" and v.size and draw_values[0] < 0:
        v[-1] = -v[-1]
    return v


@st.composite
def radial_points(draw, fields="RCH", max_n=5):
    f = draw(st.sampled_from(list(fields)))
    n = draw(st.integers(1, max_n))
    ctx = FieldContext(f, n)
    vals = draw(st.lists(st.floats(-5, 5, allow_nan=False), min_size=ctx.n_tilde, max_size=ctx.n_tilde))
    return RadialPoint(ctx, chamber_point(ctx, vals))


@pytest.mark.parametrize("ctx", CONTEXTS, ids=lambda c: f"{c.field}{c.n}")
def test_context_constants(ctx):
    assert ctx.c == (2 if ctx.field == "H" else 1)
    assert ctx.n_tilde == (ctx.n // 2 if ctx.field == "R" else ctx.n)
    assert ctx.epsilon == ctx.n % 2
    expected = {"C": "A", "H": "C"}.get(ctx.field) or ("B" if ctx.n % 2 else "D")
    assert ctx.chamber_type == expected
    dim = {"R": ctx.n * (ctx.n - 1) // 2, "C": ctx.n**2, "H": ctx.n * (2 * ctx.n + 1)}[ctx.field]
    assert ctx.dim_hermitian == dim


def test_context_rejects_bad_input():
    with pytest.raises(ValueError):
        FieldContext("Q", 2)
    with pytest.raises(ValueError):
        FieldContext("C", 0)


@pytest.mark.parametrize(
    "ctx,x,ok",
    [
        (FieldContext("C", 3), [1.0, -1.0, -2.0], True),
        (FieldContext("C", 2), [1.0, 2.0], False),
        (FieldContext("R", 3), [-0.5], False),
        (FieldContext("R", 4), [2.0, -1.5], True),
        (FieldContext("R", 4), [1.0, -1.5], False),
        (FieldContext("H", 2), [1.0, 0.0], True),
        (FieldContext("H", 2), [1.0, -0.1], False),
    ],
)
def test_chamber_membership(ctx, x, ok):
    assert in_chamber(ctx, np.array(x)) is ok
    if not ok:
        with pytest.raises(ChamberError):
            RadialPoint(ctx, np.array(x)).check()


def test_scalar_gaussian_is_real(rng):
    ctx = FieldContext("C", 1)
    vals = [sample_gaussian_hermitian(ctx, rng).data[0, 0] for _ in range(3000)]
    assert max(abs(v.imag) for v in vals) == 0.0
    assert stats.kstest([v.real for v in vals], "norm").pvalue > 0.001


def test_real_2x2_gaussian_shape(rng):
    M = sample_gaussian_hermitian(FieldContext("R", 2), rng)
    X = (M.data / 1j).real
    assert np.allclose(M.data.real, 0.0)
    assert X[0, 0] == X[1, 1] == 0.0 and X[0, 1] == -X[1, 0]


@pytest.mark.parametrize("ctx", [FieldContext("R", 2), FieldContext("R", 5), FieldContext("C", 3), FieldContext("H", 1), FieldContext("H", 3)], ids=str)
def test_hermitian_second_moment_is_dimension(ctx, rng):
    vals = np.array([inner_product(ctx, M.data, M.data) for M in (sample_gaussian_hermitian(ctx, rng) for _ in range(4000))])
    se = vals.std(ddof=1) / math.sqrt(vals.size)
    assert abs(vals.mean() - ctx.dim_hermitian) < 3.5 * se


@pytest.mark.parametrize("field,n,k", [("R", 1, 1), ("C", 1, 1), ("H", 2, 3), ("R", 3, 2), ("C", 2, 4)])
def test_rectangular_second_moment_is_dimension(field, n, k, rng):
    ctx = FieldContext(field, n)
    real_dim = {"R": 1, "C": 2, "H": 4}[field] * n * k
    assert ctx.dim_rectangular(k) == real_dim
    vals = []
    for _ in range(4000):
        M = sample_gaussian_rectangular(ctx, k, rng)
        M.check()
        vals.append(ctx.a * np.real(np.trace(M.data @ M.data.conj().T)))
    vals = np.array(vals)
    se = vals.std(ddof=1) / math.sqrt(vals.size)
    assert abs(vals.mean() - real_dim) < 3.5 * se


@pytest.mark.parametrize("ctx", [FieldContext(f, n) for f in "RCH" for n in (1, 2, 3, 4)], ids=str)
def test_haar_unitary_structure(ctx, rng):
    for _ in range(5):
        U = sample_haar_unitary(ctx, rng)
        U.check()
        d = U.data
        assert np.max(np.abs(d @ d.conj().T - np.eye(d.shape[0]))) < 1e-10
        if ctx.field == "R":
            assert np.linalg.det(d.real) > 0


@pytest.mark.parametrize("field", "RCH")
def test_haar_first_column_sphere_law(field, rng):
    # the squared norm of the first F-coordinate of a uniform unit vector
    # in F^n is Beta(q/2, q(n-1)/2) with q = dim_R F
    n = 4
    ctx = FieldContext(field, n)
    U = sample_haar_batch(ctx, rng, 6000)
    q = {"R": 1, "C": 2, "H": 4}[field]
    if field == "H":
        w = np.abs(U[:, 0, 0]) ** 2 + np.abs(U[:, 1, 0]) ** 2
    else:
        w = np.abs(U[:, 0, 0]) ** 2
    assert stats.kstest(w, stats.beta(q / 2, q * (n - 1) / 2).cdf).pvalue > 0.001


def test_haar_batch_structure(rng):
    for field in "RCH":
        ctx = FieldContext(field, 3)
        for d in sample_haar_batch(ctx, rng, 20):
            StructuredMatrix(ctx, "unitary_U", d).check()


def test_structure_checks_reject():
    ctx = FieldContext("R", 3)
    with pytest.raises(ValueError):
        StructuredMatrix(ctx, "hermitian_P", np.ones((3, 3))).check()
    with pytest.raises(ValueError):
        StructuredMatrix(FieldContext("C", 2), "unitary_U", 2 * np.eye(2)).check()
    with pytest.raises(ValueError):
        StructuredMatrix(FieldContext("H", 1), "hermitian_P", np.diag([1.0, 2.0])).check()


@pytest.mark.parametrize(
    "ctx,lam",
    [
        (FieldContext("C", 3), [2.0, 1.0, 0.0]),
        (FieldContext("R", 2), [-1.5]),
        (FieldContext("R", 4), [2.0, -1.0]),
        (FieldContext("R", 5), [3.0, 1.0]),
        (FieldContext("H", 2), [2.0, 0.5]),
    ],
    ids=str,
)
def test_radial_part_of_diagonal(ctx, lam):
    assert np.allclose(radial_part(omega(RadialPoint(ctx, np.array(lam)))).coords, lam, atol=1e-12)


def test_omega_block_layout():
    R = omega(RadialPoint(FieldContext("R", 3), np.array([2.0]))).data
    expected = np.zeros((3, 3), dtype=complex)
    expected[0, 1], expected[1, 0] = 2j, -2j
    assert np.array_equal(R, expected)
    H = omega(RadialPoint(FieldContext("H", 2), np.array([2.0, 1.0]))).data
    assert np.array_equal(H, np.diag([2.0, -2.0, 1.0, -1.0]).astype(complex))
    Z = omega(RadialPoint(FieldContext("C", 3), np.zeros(3))).data
    assert not Z.any()


@given(radial_points())
def test_round_trip(lam):
    got = radial_part(omega(lam)).coords
    assert np.allclose(got, lam.coords, atol=1e-10)


@given(radial_points(max_n=4), st.integers(0, 2**32 - 1))
def test_conjugation_invariance(lam, seed):
    r = np.random.default_rng(seed)
    U = sample_haar_unitary(lam.ctx, r).data
    M = omega(lam).data
    S = U @ M @ U.conj().T
    got = radial_part(StructuredMatrix(lam.ctx, "hermitian_P", (S + S.conj().T) / 2)).coords
    assert np.allclose(got, lam.coords, atol=1e-9)


def test_batch_radial_matches_single(rng):
    for field, n in (("R", 4), ("R", 5), ("C", 3), ("H", 2)):
        ctx = FieldContext(field, n)
        mats = [sample_gaussian_hermitian(ctx, rng).data for _ in range(10)]
        arr = np.array(mats)
        batch = radial_coords_batch(ctx, (arr / 1j).real if field == "R" else arr)
        single = [radial_part(StructuredMatrix(ctx, "hermitian_P", m)).coords for m in mats]
        assert np.allclose(batch, single, atol=1e-10)


@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_pfaffian_squares_to_determinant(half, seed):
    r = np.random.default_rng(seed)
    X = r.standard_normal((2 * half, 2 * half))
    A = X - X.T
    assert math.isclose(pfaffian(A) ** 2, np.linalg.det(A), rel_tol=1e-9, abs_tol=1e-9)


def test_pfaffian_of_standard_form():
    assert pfaffian(quaternion_j(3)) == pytest.approx(1.0)


def test_minor_examples(rng):
    ctx = FieldContext("C", 3)
    M = omega(RadialPoint(ctx, np.array([3.0, 1.0, -2.0])))
    assert np.array_equal(minor(M, 3).data, M.data)
    assert np.array_equal(minor(M, 2).data, omega(RadialPoint(ctx.with_n(2), np.array([3.0, 1.0]))).data)
    G = sample_gaussian_hermitian(FieldContext("H", 3), rng)
    sub = minor(G, 2)
    sub.check()
    assert sub.ctx.n == 2 and sub.data.shape == (4, 4)


def test_minor_process_of_diagonal():
    ctx = FieldContext("C", 4)
    lam = np.array([4.0, 2.0, 1.0, -1.0])
    p = minor_process(omega(RadialPoint(ctx, lam)))
    for k in range(1, 5):
        assert np.allclose(np.sort(p.levels[k - 1])[::-1], np.sort(lam[:k])[::-1])


@pytest.mark.parametrize("field,n", [("C", 4), ("R", 5), ("R", 6), ("H", 3)])
def test_minor_process_interlaces(field, n, rng):
    ctx = FieldContext(field, n)
    for _ in range(30):
        M = sample_gaussian_hermitian(ctx, rng)
        p = minor_process(M)
        spec = GTSpec(ctx, RadialPoint(ctx, p.top))
        assert gt_contains(spec, p)


def test_first_minor_uniform_for_two_by_two(rng):
    ctx = FieldContext("C", 2)
    D = omega(RadialPoint(ctx, np.array([1.0, 0.0]))).data
    xs = []
    for _ in range(5000):
        U = sample_haar_unitary(ctx, rng).data
        xs.append((U @ D @ U.conj().T)[0, 0].real)
    assert stats.kstest(xs, "uniform").pvalue > 0.001


def test_json_round_trip_full_precision(rng):
    M = sample_gaussian_hermitian(FieldContext("H", 2), rng)
    back = StructuredMatrix.from_dict(json.loads(M.to_json()))
    assert np.array_equal(back.data, M.data)
    assert json.loads(dumps_compact({"x": np.float64(0.1) + 0.2}))["x"] == 0.1 + 0.2
