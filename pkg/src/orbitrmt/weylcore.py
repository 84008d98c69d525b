"""Root systems of types A, B, C, D and the quantities built from them.

The asymptotic dimension ``asym_dim`` is the product of the positive root
pairings <alpha, lam> / <alpha, rho>, skipping roots orthogonal to ``lam``.
``weyl_dim`` is the exact integer dimension of the irreducible module with a
given highest weight. Characters and orbital integrals are alternating sums
over the Weyl group; on (or near) root hyperplanes they are evaluated as a
limit in extended precision.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence

import mpmath
import numpy as np

from .ensembles import FieldContext, RadialPoint, in_chamber

__all__ = [
    "RootSystemData",
    "SingularPointError",
    "root_system",
    "asym_dim",
    "asym_dim_det",
    "weyl_dim",
    "character",
    "orbital_integral",
]


class SingularPointError(ValueError):
    """The alternating-sum formula is singular and limit handling is off."""


@dataclass(frozen=True)
class RootSystemData:
    """Positive roots and rho for one of the classical chamber types.

    ``positive_roots`` are integer coefficient vectors in the basis e_1..e_rank.
    """

    chamber_type: str
    rank: int
    positive_roots: tuple[tuple[int, ...], ...]
    rho: tuple[Fraction, ...]

    @property
    def roots_array(self) -> np.ndarray:
        if not self.positive_roots:
            return np.zeros((0, self.rank))
        return np.array(self.positive_roots, dtype=float)

    def weyl_group(self) -> Iterator[tuple[tuple[int, ...], tuple[int, ...], int]]:
        """Yield ``(perm, signs, det)``; w(x)_i = signs[i] * x[perm[i]].

        The group has n! elements for A, 2^r r! for B and C, 2^(r-1) r! for D.
        """
        r = self.rank
        t = self.chamber_type
        for perm in itertools.permutations(range(r)):
            sgn = _perm_sign(perm)
            if t == "A":
                yield perm, (1,) * r, sgn
                continue
            for signs in itertools.product((1, -1), repeat=r):
                neg = signs.count(-1)
                if t == "D" and neg % 2:
                    continue
                yield perm, signs, sgn * (-1 if neg % 2 else 1)

    def weyl_group_size(self) -> int:
        r = self.rank
        if self.chamber_type == "A":
            return math.factorial(r)
        if self.chamber_type == "D":
            return math.factorial(r) * 2 ** max(r - 1, 0)
        return math.factorial(r) * 2**r


def _perm_sign(perm: Sequence[int]) -> int:
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


@lru_cache(maxsize=None)
def _root_system(chamber_type: str, rank: int) -> RootSystemData:
    roots: list[tuple[int, ...]] = []

    def unit(*pairs):
        v = [0] * rank
        for idx, coef in pairs:
            v[idx] += coef
        return tuple(v)

    for i in range(rank):
        for j in range(i + 1, rank):
            roots.append(unit((i, 1), (j, -1)))
            if chamber_type != "A":
                roots.append(unit((i, 1), (j, 1)))
        if chamber_type == "B":
            roots.append(unit((i, 1)))
        elif chamber_type == "C":
            roots.append(unit((i, 2)))
    rho = [Fraction(0)] * rank
    for a in roots:
        for i, coef in enumerate(a):
            rho[i] += Fraction(coef, 2)
    return RootSystemData(chamber_type, rank, tuple(roots), tuple(rho))


def root_system(ctx: FieldContext | str, rank: int | None = None) -> RootSystemData:
    """Root system attached to a field context (or to an explicit type and rank)."""
    if isinstance(ctx, FieldContext):
        return _root_system(ctx.chamber_type, ctx.n_tilde)
    if rank is None:
        raise ValueError("rank is required when a type tag is given")
    return _root_system(ctx, int(rank))


def _coords(lam) -> tuple[FieldContext, np.ndarray]:
    if isinstance(lam, RadialPoint):
        return lam.ctx, lam.coords
    ctx, x = lam
    return ctx, np.asarray(x, dtype=float)


def asym_dim(lam: RadialPoint | tuple[FieldContext, Sequence[float]]) -> float:
    """Asymptotic dimension d_n(lam), i.e. the volume of GT_n(lam).

    Roots with <alpha, lam> = 0 are left out of both products, which keeps the
    value positive on the boundary of the chamber.
    """
    ctx, x = _coords(lam)
    rs = root_system(ctx)
    val = 1.0
    for a in rs.positive_roots:
        p = float(np.dot(a, x))
        if p != 0.0:
            val *= p / float(sum(c * r for c, r in zip(a, rs.rho)))
    return val


def _det_exponents(ctx: FieldContext) -> list[int]:
    m = ctx.n_tilde
    if ctx.field == "C":
        return [m - j for j in range(1, m + 1)]
    if ctx.field == "H":
        return [2 * (m - j) + 1 for j in range(1, m + 1)]
    return [2 * (m - j) + ctx.epsilon for j in range(1, m + 1)]


def _rho_product(rs: RootSystemData) -> Fraction:
    # pairings with rho of the primitive root vectors (e_i rather than 2 e_i)
    out = Fraction(1)
    for a in rs.positive_roots:
        g = math.gcd(*a)
        out *= sum(c * r for c, r in zip(a, rs.rho)) / g
    return out


def asym_dim_det(lam: RadialPoint | tuple[FieldContext, Sequence[float]]) -> float:
    """Determinant form of d_n on the open chamber.

    d_n(lam) = det(lam_i^{p_j}) / c_n with descending exponents p_j:
    n - j (C), 2(n - j) + 1 (H), 2(n~ - j) + eps (R), and c_n the product of
    <alpha, rho> over primitive positive roots.
    """
    ctx, x = _coords(lam)
    if not in_chamber(ctx, x, 0.0, strict=True):
        raise ValueError(f"{x.tolist()} is not in the open chamber")
    if x.size == 0:
        return 1.0
    p = np.array(_det_exponents(ctx), dtype=float)
    V = np.power.outer(x, p)
    return float(np.linalg.det(V) / float(_rho_product(root_system(ctx))))


def _integral_dominant(ctx: FieldContext, lam: Sequence) -> tuple[int, ...]:
    vals = []
    for v in lam:
        if isinstance(v, (int, np.integer)):
            vals.append(int(v))
        else:
            fv = float(v)
            if not fv.is_integer():
                raise ValueError(f"highest weight must be integral, got {list(lam)}")
            vals.append(int(fv))
    if len(vals) != ctx.n_tilde or not in_chamber(ctx, np.array(vals, dtype=float), 0.0):
        raise ValueError(f"{vals} is not dominant for type {ctx.chamber_type} rank {ctx.n_tilde}")
    return tuple(vals)


def weyl_dim(ctx: FieldContext, lam: Sequence[int]) -> int:
    """Exact dimension prod <lam + rho, alpha> / <rho, alpha> (rational arithmetic)."""
    lam = _integral_dominant(ctx, lam)
    rs = root_system(ctx)
    num = Fraction(1)
    for a in rs.positive_roots:
        rp = sum(c * r for c, r in zip(a, rs.rho))
        num *= (sum(c * l for c, l in zip(a, lam)) + rp) / rp
    if num.denominator != 1:
        raise ArithmeticError(f"non-integral dimension {num}")
    return int(num)


# ---------------------------------------------------------------------------
# alternating sums over the Weyl group

_GENERIC = np.array([math.sqrt(p) for p in (2, 3, 5, 7, 11, 13, 17, 19)])


def _direction(rank: int) -> np.ndarray:
    # a fixed regular direction: distinct, nonzero, no coordinate sums to zero
    d = _GENERIC[:rank] / 10.0 + np.arange(rank)[::-1] * 0.37
    return d / np.linalg.norm(d) if rank else d


def _alt_sum_float(rs: RootSystemData, mu: np.ndarray, zeta: np.ndarray) -> complex:
    total = 0j
    for perm, signs, det in rs.weyl_group():
        wmu = np.array([signs[i] * mu[perm[i]] for i in range(rs.rank)])
        total += det * np.exp(1j * float(np.dot(wmu, zeta)))
    return total


def _alt_sum_mp(rs: RootSystemData, mu, zeta):
    total = mpmath.mpc(0)
    for perm, signs, det in rs.weyl_group():
        phase = mpmath.mpf(0)
        for i in range(rs.rank):
            phase += signs[i] * mu[perm[i]] * zeta[i]
        total += det * mpmath.expj(phase)
    return total


def _neville_at_zero(ts: list, fs: list):
    # polynomial extrapolation of f(t) to t = 0
    p = list(fs)
    m = len(ts)
    for k in range(1, m):
        for i in range(m - k):
            p[i] = (ts[i + k] * p[i] - ts[i] * p[i + 1]) / (ts[i + k] - ts[i])
    return p[0]


def _limit(func, rank: int, vanishing: int, levels: int = 6, h: float = 1e-2):
    """Extrapolate ``func(t)`` to t = 0 along halving steps, in extended precision."""
    dps = 30 + 5 * vanishing
    with mpmath.workdps(dps):
        ts = [mpmath.mpf(h) / 2**j for j in range(levels)]
        fs = [func(t) for t in ts]
        val = _neville_at_zero(ts, fs)
        return complex(val)


def _vanishing(rs: RootSystemData, v: np.ndarray, tol: float) -> int:
    if not rs.positive_roots:
        return 0
    return int(np.sum(np.abs(rs.roots_array @ v) <= tol))


def character(
    ctx: FieldContext,
    lam: Sequence[int],
    zeta: Sequence[float],
    resolve_singular: bool = True,
) -> complex:
    """Weyl character chi_lam(zeta) of the module with highest weight ``lam``.

    ``zeta`` is a torus element in the coordinates used for the chamber.
    Where the Weyl denominator vanishes the value is obtained as the limit
    along a fixed regular direction, unless ``resolve_singular`` is False.
    """
    lam = _integral_dominant(ctx, lam)
    rs = root_system(ctx)
    zeta = np.asarray(zeta, dtype=float)
    if zeta.shape != (rs.rank,):
        raise ValueError(f"zeta must have {rs.rank} coordinates")
    rho = np.array([float(r) for r in rs.rho])
    mu = np.array(lam, dtype=float) + rho
    if rs.rank == 0:
        return 1.0 + 0j
    pair = rs.roots_array @ zeta
    half_sin = np.abs(2.0 * np.sin(pair / 2.0))
    den_mag = float(np.prod(half_sin))
    size = rs.weyl_group_size()
    if den_mag > 0 and size * 1e-16 / den_mag < 1e-12:
        return _alt_sum_float(rs, mu, zeta) / _alt_sum_float(rs, rho, zeta)
    # singular, or regular but too close to a wall for double precision
    singular = int(np.sum(half_sin < 1e-7))
    if singular and not resolve_singular:
        raise SingularPointError(f"Weyl denominator vanishes at zeta={zeta.tolist()}")
    mu_mp = [mpmath.mpf(float(r)) + l for r, l in zip(rs.rho, lam)]
    rho_mp = [mpmath.mpf(r.numerator) / r.denominator for r in rs.rho]
    if singular == 0:
        with mpmath.workdps(30 + int(max(0.0, -math.log10(max(den_mag, 1e-300))))):
            z = [mpmath.mpf(float(v)) for v in zeta]
            return complex(_alt_sum_mp(rs, mu_mp, z) / _alt_sum_mp(rs, rho_mp, z))
    delta = _direction(rs.rank)

    def f(t):
        z = [mpmath.mpf(float(v)) + t * mpmath.mpf(float(d)) for v, d in zip(zeta, delta)]
        return _alt_sum_mp(rs, mu_mp, z) / _alt_sum_mp(rs, rho_mp, z)

    return _limit(f, rs.rank, singular)


def orbital_integral(
    lam: RadialPoint | tuple[FieldContext, Sequence[float]],
    zeta: Sequence[float],
    resolve_singular: bool = True,
) -> complex:
    """Harish-Chandra orbital integral Phi_lam(zeta) = E exp(i <U lam U*, zeta>).

    Computed as sum_w det(w) e^{i<w lam, zeta>} / (h(i zeta) d(lam)) with
    h(z) = prod <alpha, z> and d(lam) = prod <alpha, lam>/<alpha, rho>.
    """
    ctx, x = _coords(lam)
    rs = root_system(ctx)
    zeta = np.asarray(zeta, dtype=float)
    if zeta.shape != (rs.rank,):
        raise ValueError(f"zeta must have {rs.rank} coordinates")
    if rs.rank == 0:
        return 1.0 + 0j
    if not np.any(x) or not np.any(zeta):
        return 1.0 + 0j
    R = rs.roots_array
    rho_pair = R @ np.array([float(r) for r in rs.rho])
    pl = R @ x
    pz = R @ zeta
    N = len(rs.positive_roots)
    denom = (1j**N) * np.prod(pz) * np.prod(pl / rho_pair)
    size = rs.weyl_group_size()
    if abs(denom) > 0 and size * 1e-16 / abs(denom) < 1e-12:
        return complex(_alt_sum_float(rs, x, zeta) / denom)
    sing = _vanishing(rs, x, 1e-9) + _vanishing(rs, zeta, 1e-9)
    if sing and not resolve_singular:
        raise SingularPointError("orbital integral formula is singular here")
    rho_mp = [mpmath.mpf(r.numerator) / r.denominator for r in rs.rho]

    def value(lx, zx):
        num = _alt_sum_mp(rs, lx, zx)
        den = mpmath.mpc(0, 1) ** N
        for a in rs.positive_roots:
            az = sum(c * zz for c, zz in zip(a, zx))
            al = sum(c * ll for c, ll in zip(a, lx))
            ar = sum(c * rr for c, rr in zip(a, rho_mp))
            den *= az * al / ar
        return num / den

    if sing == 0:
        with mpmath.workdps(30 + int(max(0.0, -math.log10(max(abs(denom), 1e-300))))):
            return complex(value([mpmath.mpf(float(v)) for v in x], [mpmath.mpf(float(v)) for v in zeta]))
    d1 = _direction(rs.rank)
    d2 = d1[::-1].copy()

    def f(t):
        lx = [mpmath.mpf(float(v)) + t * mpmath.mpf(float(d)) for v, d in zip(x, d1)]
        zx = [mpmath.mpf(float(v)) + t * mpmath.mpf(float(d)) for v, d in zip(zeta, d2)]
        return value(lx, zx)

    return _limit(f, rs.rank, sing)
