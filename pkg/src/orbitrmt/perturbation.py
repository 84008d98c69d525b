"""Rank-one perturbations, the Laguerre-type chain and its densities.

Conventions used throughout:

* ``theta`` is a positive real, identified with ``omega(theta, 0, ..., 0)``.
* Densities on the perturbation sets are taken with respect to Lebesgue
  measure on the free coordinates of ``beta``.  For F = C the set lives on
  the hyperplane ``sum(beta) = sum(lam) + theta`` and the reference measure
  is Lebesgue measure in ``beta_1, ..., beta_{n-1}``.
* Slice volumes in the auxiliary ``z`` variables are "delta" volumes,
  ``int delta(theta - theta(beta, z)) dz``, which is what makes the total
  mass come out right.
"""

from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .ensembles import (
    FieldContext,
    RadialPoint,
    StructuredMatrix,
    gaussian_rectangular_batch,
    omega,
    omega_batch_data,
    omega_rank,
    radial_coords_batch,
    radial_part,
    sample_gaussian_rectangular,
    sample_haar_batch,
    sample_haar_unitary,
)
from .gtpolytope import GTPattern, GTSpec, _midpoint_levels
from .weylcore import asym_dim, root_system

__all__ = [
    "PerturbWitness",
    "ChainState",
    "rank_one_law",
    "rank_one_radial_sample",
    "rank_one_matrix_sample",
    "perturb_spectral_sample",
    "perturb_spectral_batch",
    "find_witness",
    "box_slice_volume",
    "nu_lambda_theta_density",
    "nu_lambda_density",
    "lue_chain",
    "lue_chain_batch",
    "lue_sample_batch",
    "lue_matrix_batch",
    "wishart_sample_batch",
    "lue_density",
    "gue_density",
    "lue_matrix_log_density",
    "wishart_general_density",
    "lue_char_exact",
    "lue_char_empirical",
]


def _field_matrix_product(ctx: FieldContext, M: np.ndarray, S: np.ndarray) -> np.ndarray:
    # M S M^* on stacks; for R everything is real and S is the antisymmetric X
    if ctx.field == "R":
        return M @ S @ np.swapaxes(M, -1, -2)
    return M @ S @ np.conj(np.swapaxes(M, -1, -2))


# ---------------------------------------------------------------------------
# rank one laws


def rank_one_law(ctx: FieldContext) -> tuple[float, float]:
    """(rate, shape) of the Gamma law of the radial part of M omega^1 M*."""
    n = ctx.n
    if ctx.field == "C":
        return 1.0, float(n)
    if ctx.field == "R":
        if n < 2:
            raise ValueError("the real case needs n >= 2")
        return 1.0, float(n - 1)
    return 2.0, float(2 * n)


def rank_one_radial_sample(ctx: FieldContext, rng: np.random.Generator, size=None):
    """Exact Gamma sample of the nonzero radial coordinate of M omega^1 M*."""
    rate, shape = rank_one_law(ctx)
    return rng.gamma(shape, 1.0 / rate, size=size)


def rank_one_matrix_sample(ctx: FieldContext, rng: np.random.Generator, size: int) -> np.ndarray:
    """Same law through the matrix construction (absolute value of the top coordinate)."""
    rank_one_law(ctx)
    M = gaussian_rectangular_batch(ctx, ctx.n, rng, size)
    one = np.zeros(ctx.n_tilde)
    one[0] = 1.0
    S = _field_matrix_product(ctx, M, omega_batch_data(ctx, one)[0])
    return np.abs(radial_coords_batch(ctx, S)[:, 0])


# ---------------------------------------------------------------------------
# spectral perturbation sampler


def _theta_coords(ctx: FieldContext, theta: float) -> np.ndarray:
    x = np.zeros(ctx.n_tilde)
    x[0] = theta
    return x


def perturb_spectral_batch(lam: RadialPoint, theta: float, rng: np.random.Generator, size: int) -> np.ndarray:
    """Radial parts of omega(lam) + U omega(theta) U* for ``size`` Haar draws of U."""
    ctx = lam.ctx
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    if theta == 0:
        return np.tile(lam.coords, (size, 1))
    U = sample_haar_batch(ctx, rng, size)
    A = omega_batch_data(ctx, lam.coords)[0]
    B = omega_batch_data(ctx, _theta_coords(ctx, theta))[0]
    return radial_coords_batch(ctx, A + _field_matrix_product(ctx, U, B))


def perturb_spectral_sample(lam: RadialPoint, theta: float, rng: np.random.Generator) -> RadialPoint:
    """One draw from nu_{lam, theta} by conjugating omega(theta) with Haar U."""
    lam.check()
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    if theta == 0:
        return RadialPoint(lam.ctx, lam.coords.copy())
    ctx = lam.ctx
    U = sample_haar_unitary(ctx, rng).data
    T = omega(RadialPoint(ctx, _theta_coords(ctx, theta))).data
    S = omega(lam).data + U @ T @ U.conj().T
    return radial_part(StructuredMatrix(ctx, "hermitian_P", (S + S.conj().T) / 2))


# ---------------------------------------------------------------------------
# witnesses and slice volumes


@dataclass
class PerturbWitness:
    """A point of E(lam, theta) above ``beta``.

    ``z`` is None for F = C and ``s`` is None unless F = R with n odd.
    """

    ctx: FieldContext
    beta: RadialPoint
    z: np.ndarray | None
    s: int | None
    pattern: GTPattern


def _z_box(ctx: FieldContext, lam: np.ndarray, beta: np.ndarray):
    """Intervals for z and the part of theta that does not involve z.

    Returns (lo, hi, base) with theta(beta, z) = base - 2 * sum(z).
    """
    r = ctx.n_tilde
    if ctx.field == "H" or ctx.n % 2 == 1:
        lp = np.append(lam, 0.0)
        bp = np.append(beta, 0.0)
        lo = np.maximum(np.maximum(lp[1:], bp[1:]), 0.0)
        hi = np.minimum(lp[:-1], bp[:-1])
        return lo, hi, float(np.sum(lam) + np.sum(beta))
    lo = np.empty(r - 1)
    hi = np.minimum(lam[: r - 1], beta[: r - 1])
    if r >= 2:
        lo[: r - 2] = np.maximum(lam[1 : r - 1], beta[1 : r - 1])
        lo[r - 2] = max(abs(lam[-1]), abs(beta[-1]))
    base = float(np.sum(lam[: r - 1]) + np.sum(beta[: r - 1]) + abs(lam[-1] - beta[-1]))
    return lo, hi, base


def _interlaced_above(beta: np.ndarray, lam: np.ndarray, tol: float) -> bool:
    # beta_1 >= lam_1 >= beta_2 >= ... >= beta_n >= lam_n
    return bool(np.all(beta >= lam - tol) and np.all(lam[:-1] >= beta[1:] - tol))


def find_witness(lam: RadialPoint, theta: float, beta: RadialPoint | Sequence[float], tol: float = 1e-9):
    """A witness (z, s) placing ``beta`` in E(lam, theta), or None.

    The z-coordinates decouple into independent intervals tied by one linear
    equation, so feasibility reduces to interval arithmetic.
    """
    ctx = lam.ctx
    lv = lam.coords.astype(float)
    bv = np.asarray(beta.coords if isinstance(beta, RadialPoint) else beta, dtype=float)
    scale = tol * max(1.0, float(np.max(np.abs(lv))), float(np.max(np.abs(bv))), abs(theta))
    if bv.shape != lv.shape or not _chamber_ok(ctx, bv, scale):
        return None
    bpt = RadialPoint(ctx, bv)
    if ctx.field == "C":
        if not _interlaced_above(bv, lv, scale) or abs(np.sum(bv - lv) - theta) > scale * len(bv):
            return None
        z, s = None, None
    else:
        lo, hi, base = _z_box(ctx, lv, bv)
        if lo.size == 0:
            # SO(2): theta only moves the single coordinate
            if abs(abs(lv[0] - bv[0]) - theta) > scale:
                return None
            z = lo.copy()
        else:
            target = (base - theta) / 2.0
            slack = scale * (lo.size + 1)
            if np.any(lo > hi + slack) or target < lo.sum() - slack or target > hi.sum() + slack:
                return None
            hi = np.maximum(hi, lo)
            # fill greedily from the lower corner
            z = lo.copy()
            rest = target - lo.sum()
            for i in range(z.size):
                step = min(max(rest, 0.0), hi[i] - lo[i])
                z[i] += step
                rest -= step
        s = None
        if ctx.field == "R" and ctx.n % 2 == 1:
            s = 1 if lv[-1] != 0 else 0
    clipped = _clip_to_chamber(ctx, bv)
    pattern = GTPattern(ctx, _midpoint_levels(GTSpec(ctx, RadialPoint(ctx, clipped))))
    return PerturbWitness(ctx, bpt, z, s, pattern)


def _chamber_ok(ctx: FieldContext, x: np.ndarray, tol: float) -> bool:
    if x.size == 0:
        return True
    if x.size == 1:
        return ctx.chamber_type in ("A", "D") or x[0] >= -tol
    d = x[:-1] - x[1:]
    if ctx.chamber_type == "A":
        return bool(np.all(d >= -tol))
    if ctx.chamber_type in ("B", "C"):
        return bool(np.all(d >= -tol) and x[-1] >= -tol)
    return bool(np.all(d[:-1] >= -tol) and x[-2] >= abs(x[-1]) - tol)


def _clip_to_chamber(ctx: FieldContext, x: np.ndarray) -> np.ndarray:
    # remove rounding-level chamber violations so a pattern can be built
    y = x.copy()
    if ctx.chamber_type in ("B", "C"):
        y = np.maximum(y, 0.0)
    if ctx.chamber_type == "D" and y.size >= 2:
        y[:-1] = np.maximum.accumulate(y[:-1][::-1])[::-1]
        y[-1] = np.clip(y[-1], -y[-2], y[-2])
        return y
    return np.maximum.accumulate(y[::-1])[::-1]


def box_slice_volume(lo: Sequence[float], hi: Sequence[float], target: float) -> float:
    """int delta(sum(z) - target) dz over the box prod [lo_i, hi_i].

    Inclusion-exclusion over the corners; one coordinate gives the indicator.
    """
    lo = np.asarray(lo, dtype=float)
    w = np.asarray(hi, dtype=float) - lo
    d = lo.size
    if d == 0 or np.any(w < 0):
        return 0.0
    t = target - lo.sum()
    if t < 0 or t > w.sum():
        return 0.0
    total = 0.0
    for corner in itertools.product((0, 1), repeat=d):
        x = t - float(np.dot(corner, w))
        if x > 0:
            total += (-1) ** sum(corner) * (x ** (d - 1) if d > 1 else 1.0)
    return max(total / math.factorial(d - 1), 0.0)


def _theta_dim(ctx: FieldContext, theta: float) -> float:
    return asym_dim((ctx, _theta_coords(ctx, theta)))


def nu_lambda_theta_density(lam: RadialPoint, theta: float, beta: RadialPoint | Sequence[float]) -> float:
    """Density of nu_{lam, theta} at ``beta``.

    Reference measure: Lebesgue in beta_1..beta_{n-1} for F = C (beta_n is
    fixed by the trace), Lebesgue in all of beta otherwise.
    """
    ctx = lam.ctx
    lv = lam.coords.astype(float)
    bv = np.asarray(beta.coords if isinstance(beta, RadialPoint) else beta, dtype=float)
    if bv.shape != lv.shape:
        raise ValueError("beta has the wrong length")
    if theta <= 0:
        raise ValueError("theta must be positive")
    if not _chamber_ok(ctx, bv, 0.0):
        return 0.0
    norm = asym_dim((ctx, bv)) / (asym_dim(lam) * _theta_dim(ctx, theta))
    if ctx.field == "C":
        scale = 1e-9 * max(1.0, float(np.max(np.abs(bv))), theta)
        if not _interlaced_above(bv, lv, 0.0) or abs(np.sum(bv - lv) - theta) > scale * len(bv):
            return 0.0
        return float(norm)
    if ctx.field == "R" and ctx.n == 2:
        raise ValueError("for SO(2) the law is a point mass at lam + theta")
    lo, hi, base = _z_box(ctx, lv, bv)
    # theta = base - 2 sum(z), so delta(theta - .) = delta(sum z - target) / 2
    vol = 0.5 * box_slice_volume(lo, hi, (base - theta) / 2.0)
    if ctx.field == "R" and ctx.n % 2 == 1 and lv[-1] != 0:
        vol *= 2.0  # the extra bit s
    return float(norm * vol)


# ---------------------------------------------------------------------------
# nu_lam: perturbation by an independent Gamma-distributed theta


def _rank_of(ctx: FieldContext, lv: np.ndarray) -> int:
    """Number of nonzero leading entries; raises on unsupported shapes."""
    k = int(np.count_nonzero(lv))
    if np.any(lv[k:] != 0) or (k and np.any(lv[:k] == 0)):
        raise ValueError("lambda must be k nonzero entries followed by zeros")
    if ctx.field == "C":
        if k < ctx.n and np.any(lv[:k] <= 0):
            raise ValueError("rank-deficient lambda must have positive entries")
        if np.any(np.diff(lv) >= 0):
            raise ValueError("lambda must be strictly decreasing")
        return k
    head = lv[:k]
    if ctx.chamber_type == "D" and k == ctx.n_tilde and k >= 2:
        ok = np.all(np.diff(head[:-1]) < 0) and head[-2] > abs(head[-1])
    else:
        ok = np.all(head > 0) and np.all(np.diff(head) < 0)
    if not ok:
        raise ValueError("lambda must have distinct positive entries (last one signed for type D)")
    return k


def nu_lambda_density(lam: RadialPoint, beta: RadialPoint | Sequence[float]) -> float:
    """Density of the radial part of omega(lam) + M omega^1 M*.

    With k nonzero entries in ``lam`` the law lives on the first
    min(k + 1, n~) coordinates and the density is taken with respect to
    Lebesgue measure there.
    """
    ctx = lam.ctx
    lv = lam.coords.astype(float)
    bv = np.asarray(beta.coords if isinstance(beta, RadialPoint) else beta, dtype=float)
    if bv.shape != lv.shape:
        raise ValueError("beta has the wrong length")
    k = _rank_of(ctx, lv)
    if ctx.field == "R" and ctx.n == 2:
        raise ValueError("for SO(2) the law is a shift of the Gamma law, no joint density")
    free = min(k + 1, ctx.n_tilde)
    if np.any(bv[free:] != 0) or not _chamber_ok(ctx, bv, 0.0):
        return 0.0
    ratio = asym_dim((ctx, bv)) / asym_dim(lam)
    if ctx.field == "C":
        if not _interlaced_above(bv, lv, 0.0):
            return 0.0
        return float(ratio * math.exp(-np.sum(bv - lv)))
    rate, _ = rank_one_law(ctx)
    const = 4.0**ctx.n if ctx.field == "H" else 0.5
    lo, hi, _ = _z_box(ctx, lv, bv)
    total = 0.0
    for i in range(lo.size):
        a = lv[i] + bv[i]
        if lv[i] > 0:
            if lo[i] >= hi[i]:
                return 0.0
            # int_lo^hi exp(-c (a - 2 z)) dz
            total += math.log(-math.expm1(-2 * rate * (hi[i] - lo[i]))) - rate * (a - 2 * hi[i])
            total -= math.log(2 * rate)
        else:
            if lo[i] != 0:
                return 0.0
            total -= rate * a
    if ctx.field == "R" and ctx.n % 2 == 0:
        total -= rate * abs(lv[-1] - bv[-1])
    if ctx.field == "R" and ctx.n % 2 == 1 and lv[-1] != 0:
        const *= 2.0
    return float(const * ratio * math.exp(total))


# ---------------------------------------------------------------------------
# chain and LUE samplers


@dataclass
class ChainState:
    ctx: FieldContext
    step: int
    radial: RadialPoint


def lue_chain(ctx: FieldContext, k: int, rng: np.random.Generator, start: RadialPoint | None = None) -> list[RadialPoint]:
    """Radial parts R_1..R_k of omega(start) + sum_{i<=j} M_i omega^1 M_i*."""
    if k < 1:
        raise ValueError("k must be >= 1")
    n = ctx.n
    one = omega_rank(ctx, 1).data
    S = np.zeros_like(one) if start is None else omega(start).data.copy()
    out = []
    for j in range(1, k + 1):
        M = sample_gaussian_rectangular(ctx, n, rng).data
        S = S + M @ one @ M.conj().T
        S = (S + S.conj().T) / 2
        x = radial_part(StructuredMatrix(ctx, "hermitian_P", S)).coords
        if start is None:
            x[min(j, ctx.n_tilde) :] = 0.0  # exact rank of the partial sum
        out.append(RadialPoint(ctx, x))
    return out


def lue_chain_batch(ctx: FieldContext, k: int, rng: np.random.Generator, size: int, start=None) -> np.ndarray:
    """Vectorized :func:`lue_chain`; returns an array (size, k, n~)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    one = np.zeros(ctx.n_tilde)
    one[0] = 1.0
    O1 = omega_batch_data(ctx, one)[0]
    if start is None:
        S = np.zeros((size,) + O1.shape, dtype=O1.dtype)
    else:
        S = np.tile(omega_batch_data(ctx, start.coords)[0], (size, 1, 1))
    out = np.zeros((size, k, ctx.n_tilde))
    for j in range(k):
        M = gaussian_rectangular_batch(ctx, ctx.n, rng, size)
        S = S + _field_matrix_product(ctx, M, O1)
        x = radial_coords_batch(ctx, S)
        if start is None:
            x[:, min(j + 1, ctx.n_tilde) :] = 0.0
        out[:, j] = x
    return out


def lue_matrix_batch(ctx: FieldContext, k: int, rng: np.random.Generator, size: int, alpha=None) -> np.ndarray:
    """Stack of M omega_k(alpha) M* (alpha = all ones by default).

    For R the real antisymmetric X with M omega M* = iX is returned.
    """
    kt = ctx.with_n(k).n_tilde
    a = np.ones(kt) if alpha is None else np.asarray(alpha, dtype=float)
    if a.shape != (kt,):
        raise ValueError(f"alpha must have length {kt}")
    M = gaussian_rectangular_batch(ctx, k, rng, size)
    return _field_matrix_product(ctx, M, omega_batch_data(ctx.with_n(k), a)[0])


def lue_sample_batch(ctx: FieldContext, k: int, rng: np.random.Generator, size: int) -> np.ndarray:
    """Positive eigenvalues (decreasing) of LUE_{n,k}(F) draws, shape (size, min(n~, k~))."""
    m = min(ctx.n_tilde, ctx.with_n(k).n_tilde)
    x = np.abs(radial_coords_batch(ctx, lue_matrix_batch(ctx, k, rng, size)))
    return -np.sort(-x, axis=1)[:, :m]


def wishart_sample_batch(ctx: FieldContext, k: int, alpha, rng: np.random.Generator, size: int) -> np.ndarray:
    """Positive eigenvalues of M omega_k(alpha) M*, shape (size, k~)."""
    kt = ctx.with_n(k).n_tilde
    x = np.abs(radial_coords_batch(ctx, lue_matrix_batch(ctx, k, rng, size, alpha)))
    return -np.sort(-x, axis=1)[:, :kt]


# ---------------------------------------------------------------------------
# densities with exactly computed normalizers


def _kept_roots(ctx: FieldContext, m: int):
    """Positive roots that do not vanish on points with only m nonzero entries."""
    rs = root_system(ctx)
    rho = np.asarray(rs.rho, dtype=float)
    kept = [(np.asarray(a[:m], dtype=float), float(np.dot(a, rho))) for a in rs.positive_roots if any(a[:m])]
    return kept


def _padded_dim(ctx: FieldContext, lam: np.ndarray) -> np.ndarray:
    """d_n at points (..., m) padded with zeros, vectorized over leading axes."""
    lam = np.asarray(lam, dtype=float)
    out = np.ones(lam.shape[:-1])
    for a, ar in _kept_roots(ctx, lam.shape[-1]):
        out = out * (lam @ a) / ar
    return out


def _vandermonde(lam: np.ndarray) -> np.ndarray:
    m = lam.shape[-1]
    out = np.ones(lam.shape[:-1])
    for i in range(m):
        for j in range(i + 1, m):
            out = out * (lam[..., i] - lam[..., j])
    return out


def _poly_mul_linear(poly: dict, coeffs: Sequence) -> dict:
    out: dict = {}
    for exps, c in poly.items():
        for i, a in enumerate(coeffs):
            if a:
                e = list(exps)
                e[i] += 1
                e = tuple(e)
                out[e] = out.get(e, 0) + c * a
    return {e: c for e, c in out.items() if c}


def _integrand_poly(ctx: FieldContext, m: int, vandermonde: bool, power: int) -> dict:
    # d_n(lam) [* Delta(lam)] * prod lam_i^power as an exact polynomial in m variables
    poly = {(power,) * m: Fraction(1)}
    rs = root_system(ctx)
    for a in rs.positive_roots:
        if any(a[:m]):
            ar = sum(Fraction(x) * Fraction(y) for x, y in zip(a, rs.rho))
            poly = _poly_mul_linear(poly, [Fraction(x) / ar for x in a[:m]])
    if vandermonde:
        for i in range(m):
            for j in range(i + 1, m):
                e = [0] * m
                e[i], e[j] = 1, -1
                poly = _poly_mul_linear(poly, e)
    return poly


_NORM_CACHE: dict = {}
_NORM_LOCK = threading.Lock()


def _cached(key, compute):
    val = _NORM_CACHE.get(key)
    if val is None:
        with _NORM_LOCK:
            val = _NORM_CACHE.get(key)
            if val is None:
                val = compute()
                _NORM_CACHE[key] = val
    return val


def _lue_normalizer(ctx: FieldContext, k: int) -> float:
    def compute():
        m = min(ctx.n_tilde, ctx.with_n(k).n_tilde)
        power = max(ctx.with_n(k).n_tilde - ctx.n_tilde, 0)
        poly = _integrand_poly(ctx, m, True, power)
        c = Fraction(ctx.c)
        # symmetric integrand: the ordered cone carries 1/m! of the orthant
        z = sum(
            coef * math.prod(Fraction(math.factorial(e)) / c ** (e + 1) for e in exps) for exps, coef in poly.items()
        )
        return float(z / math.factorial(m))

    return _cached(("lue", ctx.field, ctx.n, k), compute)


def lue_density(ctx: FieldContext, k: int, lam) -> float | np.ndarray:
    """Density of the decreasing positive eigenvalues of LUE_{n,k}(F).

    Accepts one point of length min(n~, k~) or an array of such points.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    m = min(ctx.n_tilde, ctx.with_n(k).n_tilde)
    x = np.asarray(lam, dtype=float)
    if x.shape[-1:] != (m,):
        raise ValueError(f"lambda must have length {m}")
    power = max(ctx.with_n(k).n_tilde - ctx.n_tilde, 0)
    val = _padded_dim(ctx, x) * _vandermonde(x) * np.prod(x**power, axis=-1) * np.exp(-ctx.c * x.sum(axis=-1))
    support = np.all(x > 0, axis=-1) & np.all(np.diff(x, axis=-1) < 0, axis=-1)
    out = np.where(support, val / _lue_normalizer(ctx, k), 0.0)
    return float(out) if out.ndim == 0 else out


def _poly_mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for e1, c1 in p.items():
        for e2, c2 in q.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            out[e] = out.get(e, 0) + c1 * c2
    return {e: c for e, c in out.items() if c}


def _gue_normalizer(ctx: FieldContext) -> float:
    def compute():
        m = ctx.n_tilde
        base = _integrand_poly(ctx, m, False, 0)
        poly = _poly_mul(base, base)

        def moment(a: int) -> float:
            # int x^a exp(-x^2/2) over R (F = C) or R_+
            half = math.gamma((a + 1) / 2) * 2 ** ((a - 1) / 2)
            if ctx.field == "C":
                return 0.0 if a % 2 else 2 * half
            return half

        z = sum(float(coef) * math.prod(moment(e) for e in exps) for exps, coef in poly.items())
        return z / math.factorial(m)

    return _cached(("gue", ctx.field, ctx.n), compute)


def gue_density(ctx: FieldContext, lam) -> float | np.ndarray:
    """Density of the radial part of the Gaussian ensemble on P_n(F).

    For R and H this is the density of the positive eigenvalues (for R with
    n even, of their absolute values) on the ordered cone.
    """
    m = ctx.n_tilde
    x = np.asarray(lam, dtype=float)
    if x.shape[-1:] != (m,):
        raise ValueError(f"lambda must have length {m}")
    val = _padded_dim(ctx, x) ** 2 * np.exp(-0.5 * np.sum(x * x, axis=-1))
    support = np.all(np.diff(x, axis=-1) < 0, axis=-1)
    if ctx.field != "C":
        support &= np.all(x > 0, axis=-1)
    out = np.where(support, val / _gue_normalizer(ctx), 0.0)
    return float(out) if out.ndim == 0 else out


def lue_matrix_log_density(ctx: FieldContext, k: int, H: StructuredMatrix) -> float:
    """Log of the unnormalized density of LUE_{n,k}(F) at H (k >= n).

    Returns -inf when H is outside the support.
    """
    if k < ctx.n:
        raise ValueError("the matrix density needs k >= n")
    x = radial_part(H).coords
    lam = np.abs(x) if ctx.field != "C" else x
    if np.any(lam <= 0):
        return -math.inf
    n, c = ctx.n, ctx.c
    if ctx.field == "C":
        return float(np.sum((k - n) * np.log(lam) - lam))
    pair = sum(math.log(lam[i] + lam[j]) for i in range(lam.size) for j in range(i + 1, lam.size))
    if ctx.field == "H":
        return float(-pair + np.sum((k - n - 1) * np.log(lam) - c * lam))
    expo = ctx.with_n(k).n_tilde - ctx.n_tilde - ctx.epsilon
    return float(-pair + np.sum(expo * np.log(lam) - lam))


def _wishart_normalizer(ctx: FieldContext, k: int, alpha: tuple) -> float:
    def compute():
        m = len(alpha)
        poly = _integrand_poly(ctx, m, False, 0)
        c = float(ctx.c)
        total = 0.0
        for perm in itertools.permutations(range(m)):
            sign = _perm_sign(perm)
            scales = [alpha[p] / c for p in perm]
            for exps, coef in poly.items():
                total += sign * float(coef) * math.prod(math.factorial(e) * s ** (e + 1) for e, s in zip(exps, scales))
        return total / math.factorial(m)

    return _cached(("wishart", ctx.field, ctx.n, k, alpha), compute)


def _perm_sign(perm) -> int:
    sign = 1
    p = list(perm)
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


def wishart_general_density(ctx: FieldContext, k: int, alpha, lam) -> float | np.ndarray:
    """Density of the positive eigenvalues of M omega_k(alpha) M*, k <= n."""
    if not 1 <= k <= ctx.n:
        raise ValueError("need 1 <= k <= n")
    kt = ctx.with_n(k).n_tilde
    a = np.asarray(alpha, dtype=float)
    if a.shape != (kt,) or np.any(a <= 0):
        raise ValueError(f"alpha must be {kt} positive numbers")
    if np.any(np.diff(a) >= 0):
        raise ValueError("alpha must be strictly decreasing (repeated entries make the determinant vanish)")
    x = np.asarray(lam, dtype=float)
    if x.shape[-1:] != (kt,):
        raise ValueError(f"lambda must have length {kt}")
    E = np.exp(-ctx.c * x[..., :, None] / a[None, :])
    val = _padded_dim(ctx, x) * np.linalg.det(E)
    support = np.all(x > 0, axis=-1) & np.all(np.diff(x, axis=-1) < 0, axis=-1)
    out = np.where(support, val / _wishart_normalizer(ctx, k, tuple(a.tolist())), 0.0)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Fourier transform


def lue_char_exact(ctx: FieldContext, k: int, N: StructuredMatrix) -> complex:
    """E exp(-i <N, M omega_k M*>) in closed form: det(I + iN/c)^(-k~)."""
    kt = ctx.with_n(k).n_tilde
    D = np.linalg.det(np.eye(N.data.shape[0]) + 1j * N.data / ctx.c)
    return complex(D ** (-kt))


def lue_char_empirical(ctx: FieldContext, k: int, N: StructuredMatrix, rng: np.random.Generator, size: int):
    """Monte Carlo estimate of the same expectation and its standard error."""
    S = lue_matrix_batch(ctx, k, rng, size)
    if ctx.field == "R":
        S = 1j * S
    pair = ctx.b * np.real(np.einsum("ij,bji->b", N.data, S))
    v = np.exp(-1j * pair)
    se = math.sqrt((np.var(v.real) + np.var(v.imag)) / size)
    return complex(v.mean()), se
