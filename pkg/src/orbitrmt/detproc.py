"""Determinantal structure of interlaced point processes.

Points carry a level index r (1-based) and a position.  Kernels act on
Lebesgue measure on R (F = C) or on R_+ (F = R, H), times counting measure
on the levels.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate, special

from .ensembles import FieldContext, RadialPoint

__all__ = [
    "IllConditionedBasisError",
    "AmbiguousInputError",
    "PolynomialBasis",
    "CorrelationKernel",
    "CorrelationEstimate",
    "interlace_indicator_det",
    "cauchy_binet",
    "triangular_kernel",
    "gue_minor_kernel",
    "guer_kernel",
    "rectangular_kernel",
    "estimate_correlations",
]

COND_LIMIT = 1e12
BIORTH_TOL = 1e-8


class IllConditionedBasisError(np.linalg.LinAlgError):
    def __init__(self, message: str, condition: float):
        super().__init__(f"{message} (condition number {condition:.3g})")
        self.condition = condition


class AmbiguousInputError(ValueError):
    pass


# ---------------------------------------------------------------------------
# orthogonal polynomials


@dataclass(frozen=True)
class PolynomialBasis:
    """Orthonormal polynomials with positive leading coefficient.

    ``hermite``: weight exp(-x^2/2) on R.
    ``laguerre``: weight x^alpha exp(-x) on R_+.
    ``monomial``: x^i, no weight (not orthogonal).

    The orthogonal families satisfy
    ``x p_i = a_{i+1} p_{i+1} + b_i p_i + a_i p_{i-1}``.
    """

    kind: str
    alpha: float = 0.0

    def __post_init__(self):
        if self.kind not in ("hermite", "laguerre", "monomial"):
            raise ValueError(f"unknown basis {self.kind!r}")
        if self.kind == "laguerre" and self.alpha <= -1:
            raise ValueError("Laguerre parameter must exceed -1")

    def recurrence(self, i: int) -> tuple[float, float]:
        """(a_i, b_i) of the three-term recurrence."""
        if self.kind == "hermite":
            return math.sqrt(i), 0.0
        if self.kind == "laguerre":
            return math.sqrt(i * (i + self.alpha)), 2 * i + self.alpha + 1
        raise ValueError("monomials have no three-term recurrence")

    def weight(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "hermite":
            return np.exp(-x * x / 2)
        if self.kind == "laguerre":
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(x > 0, np.abs(x) ** self.alpha * np.exp(-x), 0.0)
        return np.ones_like(x)

    def _p0(self) -> float:
        if self.kind == "hermite":
            return (2 * math.pi) ** -0.25
        return 1.0 / math.sqrt(math.gamma(self.alpha + 1))

    def values(self, x, degree: int) -> np.ndarray:
        """Array (degree + 1, *x.shape) of p_0(x), ..., p_degree(x)."""
        x = np.asarray(x, dtype=float)
        out = np.empty((degree + 1,) + x.shape)
        if self.kind == "monomial":
            for i in range(degree + 1):
                out[i] = x**i
            return out
        out[0] = self._p0()
        prev = np.zeros_like(x)
        for i in range(degree):
            a_next, _ = self.recurrence(i + 1)
            a_i, b_i = self.recurrence(i)
            out[i + 1] = ((x - b_i) * out[i] - a_i * prev) / a_next
            prev = out[i]
        return out

    def polynomial(self, i: int) -> Polynomial:
        if self.kind == "monomial":
            return Polynomial([0.0] * i + [1.0])
        X = Polynomial([0.0, 1.0])
        prev, cur = Polynomial([0.0]), Polynomial([self._p0()])
        for j in range(i):
            a_next, _ = self.recurrence(j + 1)
            a_j, b_j = self.recurrence(j)
            prev, cur = cur, ((X - b_j) * cur - a_j * prev) / a_next
        return cur

    def function(self, i: int) -> Callable:
        """x -> p_i(x) sqrt(w(x))."""

        def f(x):
            return self.values(x, i)[i] * np.sqrt(self.weight(x))

        return f


# ---------------------------------------------------------------------------
# determinant identities


def interlace_indicator_det(x: Sequence[float], y: Sequence[float]) -> int:
    """1{x > y interlaced} computed as det(1{x_i > y_j}).

    ``y`` may be one shorter than ``x``; it is then padded with -infinity.
    The determinant and the direct check are both evaluated and must agree.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.size == x.size - 1:
        y = np.append(y, -np.inf)
    if y.size != x.size:
        raise ValueError("y must have the length of x or one less")
    both = np.concatenate([x, y[np.isfinite(y)]])
    if np.unique(both).size != both.size:
        raise AmbiguousInputError("ties make the strict interlacing ambiguous")
    if np.any(np.diff(x) >= 0) or np.any(np.diff(y[np.isfinite(y)]) >= 0):
        raise AmbiguousInputError("vectors must be strictly decreasing")
    det = int(round(np.linalg.det((x[:, None] > y[None, :]).astype(float))))
    merged = np.empty(2 * x.size)
    merged[0::2] = x
    merged[1::2] = y
    direct = int(bool(np.all(np.diff(merged) < 0)))
    if det != direct:  # pragma: no cover - would mean the identity is broken
        raise AssertionError(f"determinant {det} disagrees with direct check {direct}")
    return det


def _nodes(domain: tuple[float, float], nodes: int):
    a, b = domain
    if not (np.isfinite(a) and np.isfinite(b)):
        raise ValueError("give a finite (truncated) domain")
    t, w = np.polynomial.legendre.leggauss(nodes)
    return (b - a) / 2 * t + (a + b) / 2, (b - a) / 2 * w


def cauchy_binet(phis: Sequence[Callable], psis: Sequence[Callable], domain=(0.0, 1.0), nodes: int = 60):
    """Both sides of the generalized Cauchy-Binet identity.

    Returns (det(int phi_i psi_j), (1/n!) int det(phi_i(x_j)) det(psi_i(x_j)) dx)
    with tensor Gauss-Legendre quadrature on ``domain``.
    """
    n = len(phis)
    if len(psis) != n:
        raise ValueError("need as many phi as psi")
    x, w = _nodes(domain, nodes)
    P = np.array([f(x) for f in phis])
    Q = np.array([g(x) for g in psis])
    lhs = float(np.linalg.det((P * w) @ Q.T))
    grids = np.meshgrid(*([np.arange(x.size)] * n), indexing="ij")
    idx = [g.reshape(-1) for g in grids]
    wt = np.prod([w[i] for i in idx], axis=0)
    # det over the sampled columns, vectorized over all node tuples
    Pm = np.stack([P[:, i] for i in idx], axis=-1)  # (n, N, n)
    Qm = np.stack([Q[:, i] for i in idx], axis=-1)
    dP = np.linalg.det(np.moveaxis(Pm, 0, 1))
    dQ = np.linalg.det(np.moveaxis(Qm, 0, 1))
    rhs = float(np.sum(wt * dP * dQ) / math.factorial(n))
    return lhs, rhs


# ---------------------------------------------------------------------------
# kernels


@dataclass(frozen=True)
class CorrelationKernel:
    """K((r, x), (s, y)) on levels x positions.

    ``evaluator(r, x, s, y)`` is vectorized over x and y (broadcast).
    ``points`` gives the deterministic number of points on each level.
    """

    evaluator: Callable
    levels: range
    reference_measure: str
    points: Callable[[int], int]
    breakpoints: tuple = field(default=())

    def __call__(self, r: int, x, s: int, y):
        return self.evaluator(r, np.asarray(x, dtype=float), s, np.asarray(y, dtype=float))

    def correlation(self, pts: Sequence[tuple[int, float]]) -> float:
        """rho_k at the points (r_1, x_1), ..., (r_k, x_k)."""
        k = len(pts)
        M = np.empty((k, k))
        for i, (r, x) in enumerate(pts):
            for j, (s, y) in enumerate(pts):
                M[i, j] = float(self(r, x, s, y))
        return float(np.linalg.det(M))

    def diagonal(self, r: int, x):
        x = np.asarray(x, dtype=float)
        return self(r, x, r, x)

    def level_count(self, r: int, tol: float = 1e-10) -> float:
        """int K((r, x), (r, x)) dx over the reference domain."""
        f = lambda t: float(self.diagonal(r, t))
        lo = 0.0 if self.reference_measure == "lebesgue(R+)" else -np.inf
        cuts = sorted({float(b) for b in self.breakpoints if b > lo})
        if lo == -np.inf:
            left = cuts[0] if cuts else 0.0
            total = integrate.quad(f, -np.inf, left, epsabs=tol, epsrel=tol, limit=200)[0]
            lo = left
        else:
            total = 0.0
        for b in cuts:
            if b > lo:
                total += integrate.quad(f, lo, b, epsabs=tol, epsrel=tol, limit=200)[0]
                lo = b
        total += integrate.quad(f, lo, np.inf, epsabs=tol, epsrel=tol, limit=200)[0]
        return total


def _chi_exponents(ctx: FieldContext) -> list[int]:
    # d_n is proportional to det(z_j^{p_i}) on the positive chamber part
    m = ctx.n_tilde
    if ctx.field == "C":
        return list(range(m))
    if ctx.field == "H":
        return [2 * i + 1 for i in range(m)]
    return [2 * i + ctx.epsilon for i in range(m)]


def _domain(ctx: FieldContext) -> tuple[float, float]:
    return (-np.inf, np.inf) if ctx.field == "C" else (0.0, np.inf)


def _points_on_level(ctx: FieldContext) -> Callable[[int], int]:
    if ctx.field == "R":
        return lambda r: r // 2
    return lambda r: r


def _iterated_tail(func: Callable, p: int, x: float) -> float:
    # int_x^inf (z - x)^{p-1} / (p-1)! func(z) dz
    g = lambda z: (z - x) ** (p - 1) / math.factorial(p - 1) * func(z)
    with warnings.catch_warnings():
        # far in the tail the integrand underflows and QUADPACK complains
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(g, x, np.inf, epsabs=1e-13, epsrel=1e-12, limit=200)[0]


def triangular_kernel(
    ctx: FieldContext,
    psi: Sequence[Callable],
    chi: Sequence[Polynomial] | None = None,
    *,
    convention: str = "later",
) -> CorrelationKernel:
    """Kernel of the minor process of an invariant matrix whose radial density
    is proportional to d_n(lam) det(psi_j(lam_i)).

    Without ``chi`` the monomials spanning d_n are biorthogonalized against
    ``psi`` through the Gram matrix (refused above condition 1e12). With
    ``chi`` (polynomials, det(chi_i(lam_j)) proportional to d_n) the Gram
    matrix must already be the identity.

    ``convention`` picks the indicator of the free term: "later" uses
    1{s > r}, "earlier" uses 1{s < r}.
    """
    m = ctx.n_tilde
    if len(psi) != m:
        raise ValueError(f"need {m} functions psi")
    if convention not in ("later", "earlier"):
        raise ValueError("convention must be 'later' or 'earlier'")
    lo, hi = _domain(ctx)
    basis = [Polynomial([0.0] * p + [1.0]) for p in _chi_exponents(ctx)] if chi is None else list(chi)
    G = np.empty((m, m))
    for i, q in enumerate(basis):
        for j, f in enumerate(psi):
            G[i, j] = integrate.quad(lambda t: q(t) * f(t), lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
    if chi is None:
        cond = float(np.linalg.cond(G))
        if not np.isfinite(cond) or cond > COND_LIMIT:
            raise IllConditionedBasisError("Gram matrix of psi against d_n is ill-conditioned", cond)
        C = np.linalg.solve(G, np.eye(m))
        basis = [sum((C[k, i] * basis[i] for i in range(m)), Polynomial([0.0])) for k in range(m)]
    elif np.max(np.abs(G - np.eye(m))) > BIORTH_TOL:
        raise IllConditionedBasisError(
            f"chi and psi are not biorthogonal (max deviation {np.max(np.abs(G - np.eye(m))):.2e})",
            float(np.linalg.cond(G)),
        )
    c, n = ctx.c, ctx.n
    derivs = {s: [q.deriv(c * (n - s)) if c * (n - s) else q for q in basis] for s in range(1, n + 1)}
    cache: dict = {}

    def psi_level(r: int, k: int, x: float) -> float:
        if r == n:
            return float(psi[k](x))
        key = (r, k, x)
        if key not in cache:
            cache[key] = _iterated_tail(psi[k], c * (n - r), x)
        return cache[key]

    def evaluate(r, x, s, y):
        x, y = np.broadcast_arrays(x, y)
        out = np.zeros(x.shape)
        later = s > r if convention == "later" else s < r
        if later:
            p = c * abs(s - r) - 1
            out -= np.where(y >= x, (y - x) ** p / math.factorial(p), 0.0)
        for idx in np.ndindex(x.shape):
            xv, yv = float(x[idx]), float(y[idx])
            if ctx.field != "C" and (xv < 0 or yv < 0):
                out[idx] = 0.0
                continue
            out[idx] += sum(psi_level(r, k, xv) * derivs[s][k](yv) for k in range(m))
        return out

    return CorrelationKernel(
        evaluate,
        range(1, n + 1),
        "lebesgue(R)" if ctx.field == "C" else "lebesgue(R+)",
        _points_on_level(ctx),
        (0.0,),
    )


def gue_minor_kernel(ctx: FieldContext, *, convention: str = "later") -> CorrelationKernel:
    """Minor-process kernel of the Gaussian ensemble on P_n(F) via Hermite functions."""
    hb = PolynomialBasis("hermite")
    degrees = [p for p in _chi_exponents(ctx)]
    chi = [hb.polynomial(d) for d in degrees]
    # on the half line the same-parity Hermite functions have norm 1/2
    scale = 1.0 if ctx.field == "C" else 2.0

    def make(d):
        if ctx.field == "C":
            return lambda t: hb.values(t, d)[d] * np.exp(-np.asarray(t) ** 2 / 2)
        return lambda t: np.where(np.asarray(t) > 0, scale * hb.values(t, d)[d] * np.exp(-np.asarray(t) ** 2 / 2), 0.0)

    return triangular_kernel(ctx, [make(d) for d in degrees], chi, convention=convention)


def _gauss_tail(p: int, x: np.ndarray) -> np.ndarray:
    # int_x^inf (z - x)^p / p! exp(-z^2/2) dz through A_p = p! * value
    a_prev = np.sqrt(np.pi / 2) * special.erfc(x / np.sqrt(2))
    if p == 0:
        return a_prev
    a_cur = np.exp(-x * x / 2) - x * a_prev
    for q in range(2, p + 1):
        a_prev, a_cur = a_cur, (q - 1) * a_prev - x * a_cur
    return a_cur / math.factorial(p)


def guer_kernel(n_max: int) -> CorrelationKernel:
    """Explicit Hermite-sum kernel of the real Gaussian minor process.

    Levels 1..n_max, floor(r/2) points on level r, positions on R_+.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    hb = PolynomialBasis("hermite")
    h0 = (2 * math.pi) ** -0.25

    def evaluate(r, x, s, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        out = np.zeros(x.shape)
        if r < s:
            out -= np.where(y >= x, (y - x) ** (s - r - 1) / math.factorial(s - r - 1), 0.0)
        rt, st = r // 2, s // 2
        top = max(r, s)
        hx = hb.values(x, top)
        hy = hb.values(y, top)
        ex = np.exp(-x * x / 2)
        for i in range(1, min(rt, st) + 1):
            f = math.sqrt(math.factorial(r - 2 * i) / math.factorial(s - 2 * i))
            out += 2 * f * hy[s - 2 * i] * hx[r - 2 * i] * ex
        for i in range(rt + 1, st + 1):
            tail = _gauss_tail(2 * i - r - 1, x)
            out += 2 * h0 * hy[s - 2 * i] / math.sqrt(math.factorial(s - 2 * i)) * tail
        return np.where((x >= 0) & (y >= 0), out, 0.0)

    return CorrelationKernel(evaluate, range(1, n_max + 1), "lebesgue(R+)", lambda r: r // 2, (0.0,))


# rectangular kernel ---------------------------------------------------------


def _laplace_sum_moments(p: int, c: float, top: int) -> np.ndarray:
    # moments E S^q, q <= top, for S a sum of p Laplace variables with scale 1/c
    single = np.array([math.factorial(q) / c**q if q % 2 == 0 else 0.0 for q in range(top + 1)])
    mom = np.zeros(top + 1)
    mom[0] = 1.0
    for _ in range(p):
        new = np.zeros(top + 1)
        for q in range(top + 1):
            new[q] = sum(math.comb(q, j) * mom[j] * single[q - j] for j in range(q + 1))
        mom = new
    return mom


def _laplace_conv_density(p: int, c: float, u: np.ndarray) -> np.ndarray:
    # p-fold convolution of exp(-c|u|) on R
    a = np.abs(u)
    tot = np.zeros_like(a)
    for j in range(p):
        coef = math.factorial(2 * p - 2 - j) / (math.factorial(j) * math.factorial(p - 1 - j))
        tot = tot + coef * (2 * c * a) ** j
    return (2 * c) ** p / (math.factorial(p - 1) * (2 * c) ** (2 * p - 1)) * np.exp(-c * a) * tot


def rectangular_kernel(ctx: FieldContext, lam: RadialPoint, m: int) -> CorrelationKernel:
    """Kernel of the chain started at ``lam`` and observed at steps 1..m.

    Supported for F = C, H and R with n odd, with ``lam`` strictly decreasing.
    """
    if ctx.field == "R" and ctx.n % 2 == 0:
        raise ValueError("the even real chain is not covered by the determinantal description")
    if m < 1:
        raise ValueError("m must be >= 1")
    lv = np.asarray(lam.coords, dtype=float)
    if np.any(np.diff(lv) >= 0) or (ctx.field != "C" and lv[-1] <= 0):
        raise ValueError("lambda must be strictly decreasing (and positive for R, H)")
    nt = ctx.n_tilde
    c = float(ctx.c)

    if ctx.field == "C":

        def phi_p(p, x, y):
            d = y - x
            with np.errstate(invalid="ignore"):
                return np.where(d >= 0, np.abs(d) ** (p - 1) / math.factorial(p - 1) * np.exp(-np.abs(d)), 0.0)

        def conv_psi(p, x, i):
            # E (x + G)^{i-1} with G ~ Gamma(p, 1); p = 0 is the identity
            if p == 0:
                return x ** (i - 1)
            return sum(math.comb(i - 1, j) * x ** (i - 1 - j) * math.gamma(p + j) / math.gamma(p) for j in range(i))

    else:

        def phi_p(p, x, y):
            return _laplace_conv_density(p, c, x - y) - _laplace_conv_density(p, c, x + y)

        def conv_psi(p, x, i):
            q = 2 * i - 1
            if p == 0:
                return x**q
            mom = _laplace_sum_moments(p, c, q)
            return (2 / c) ** p * sum(math.comb(q, j) * x ** (q - j) * mom[j] for j in range(q + 1))

    A = np.array([[conv_psi(m, lv[i], j + 1) for j in range(nt)] for i in range(nt)], dtype=float)
    cond = float(np.linalg.cond(A))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise IllConditionedBasisError("rectangular A-matrix is ill-conditioned", cond)
    Ainv = np.linalg.inv(A)

    def evaluate(r, x, s, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        out = np.zeros(x.shape)
        if s > r:
            out -= phi_p(s - r, x, y)
        left = np.stack([conv_psi(m - r, x, i + 1) * np.ones_like(x) for i in range(nt)])
        right = np.stack([phi_p(s, lv[j], y) for j in range(nt)])
        out += np.einsum("i...,ij,j...->...", left, Ainv, right)
        if ctx.field != "C":
            out = np.where((x >= 0) & (y >= 0), out, 0.0)
        return out

    return CorrelationKernel(
        evaluate,
        range(1, m + 1),
        "lebesgue(R)" if ctx.field == "C" else "lebesgue(R+)",
        lambda r: nt,
        tuple(sorted(set(lv.tolist()) | ({0.0} if ctx.field != "C" else set()))),
    )


# ---------------------------------------------------------------------------
# correlation estimates from samples


@dataclass
class CorrelationEstimate:
    """Binned estimates of rho_1 and rho_2 on cells (level, bin).

    Cells are ordered level-major. Bins that never received a point are NaN.
    """

    levels: tuple
    edges: np.ndarray
    rho1: np.ndarray
    rho1_se: np.ndarray
    rho2: np.ndarray
    rho2_se: np.ndarray
    n_samples: int

    def cell(self, level: int, b: int) -> int:
        return self.levels.index(level) * (self.edges.size - 1) + b


def estimate_correlations(samples, edges, levels=None, min_samples: int = 1000) -> CorrelationEstimate:
    """Estimate rho_1 and rho_2 from point configurations.

    Each sample is a sequence of (level, position) pairs (or an array with
    two columns). For distinct cells rho_2 uses E[N_a N_b]; on the diagonal
    it uses E[N_a (N_a - 1)], both divided by the cell widths.
    """
    samples = [np.asarray(s, dtype=float).reshape(-1, 2) for s in samples]
    if len(samples) < min_samples:
        raise ValueError(f"need at least {min_samples} samples, got {len(samples)}")
    edges = np.asarray(edges, dtype=float)
    if levels is None:
        levels = sorted({int(l) for s in samples for l in s[:, 0]})
    levels = tuple(int(l) for l in levels)
    nb = edges.size - 1
    width = np.tile(np.diff(edges), len(levels))
    N = np.zeros((len(samples), len(levels) * nb))
    lookup = {l: i for i, l in enumerate(levels)}
    for t, s in enumerate(samples):
        for lvl, x in s:
            li = lookup.get(int(lvl))
            if li is None:
                continue
            b = np.searchsorted(edges, x, side="right") - 1
            if 0 <= b < nb:
                N[t, li * nb + b] += 1
    ns = len(samples)
    rho1 = N.mean(axis=0) / width
    rho1_se = N.std(axis=0, ddof=1) / np.sqrt(ns) / width
    prod = N[:, :, None] * N[:, None, :]
    idx = np.arange(N.shape[1])
    prod[:, idx, idx] -= N
    ww = width[:, None] * width[None, :]
    rho2 = prod.mean(axis=0) / ww
    rho2_se = prod.std(axis=0, ddof=1) / np.sqrt(ns) / ww
    empty = N.sum(axis=0) == 0
    rho1[empty] = np.nan
    rho1_se[empty] = np.nan
    rho2[empty, :] = np.nan
    rho2[:, empty] = np.nan
    rho2_se[empty, :] = np.nan
    rho2_se[:, empty] = np.nan
    return CorrelationEstimate(levels, edges, rho1, rho1_se, rho2, rho2_se, ns)
