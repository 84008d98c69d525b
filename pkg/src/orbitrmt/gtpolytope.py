"""Gelfand-Tsetlin polytopes GT_n(lam) for the three fields.

A pattern is stored level by level. For C and R there are n levels, level k
having k (C) or floor(k/2) (R) coordinates; for R the last coordinate of an
even level may be negative. For H the levels are interleaved half and integer
levels ``x(1/2), x(1), ..., x(n-1/2), x(n)``, each of length k.

Constraints are kept as a list of linear inequalities ``sum coef * x <= 0``
over (level, index) references. The same list drives the membership test and
the hit-and-run sampler.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _accel
from .ensembles import (
    ChamberError,
    FieldContext,
    RadialPoint,
    dumps_compact,
    in_chamber,
    radial_coords_batch,
    sample_haar_batch,
)
from .weylcore import asym_dim

__all__ = [
    "GTPattern",
    "GTSpec",
    "DegeneratePolytopeError",
    "level_lengths",
    "level_labels",
    "gt_contains",
    "gt_volume",
    "gt_constraints",
    "sample_uniform_spectral",
    "sample_uniform_spectral_batch",
    "sample_uniform_walk",
    "sample_uniform_walk_batch",
    "mu_lambda_density",
    "h_witness_volume",
    "patterns_to_csv",
]

GT_TOL = 1e-12


class DegeneratePolytopeError(ValueError):
    """The polytope has empty interior in the pattern coordinates."""


def level_lengths(ctx: FieldContext) -> list[int]:
    n = ctx.n
    if ctx.field == "C":
        return list(range(1, n + 1))
    if ctx.field == "R":
        return [k // 2 for k in range(1, n + 1)]
    return [k for k in range(1, n + 1) for _ in (0, 1)]


def level_labels(ctx: FieldContext) -> list[str]:
    if ctx.field == "H":
        out = []
        for k in range(1, ctx.n + 1):
            out += [f"{2 * k - 1}/2", str(k)]
        return out
    return [str(k) for k in range(1, ctx.n + 1)]


@dataclass
class GTPattern:
    """One point of a Gelfand-Tsetlin polytope, stored level by level."""

    ctx: FieldContext
    levels: list

    def __post_init__(self):
        lens = level_lengths(self.ctx)
        if len(self.levels) != len(lens):
            raise ValueError(f"expected {len(lens)} levels, got {len(self.levels)}")
        self.levels = [np.asarray(v, dtype=float).reshape(-1) for v in self.levels]
        for k, (v, m) in enumerate(zip(self.levels, lens)):
            if v.shape[0] != m:
                raise ValueError(f"level {level_labels(self.ctx)[k]} needs {m} entries, got {v.shape[0]}")

    @property
    def top(self) -> np.ndarray:
        return self.levels[-1]

    def level(self, label: str | int) -> np.ndarray:
        return self.levels[level_labels(self.ctx).index(str(label))]

    def flat(self) -> np.ndarray:
        return np.concatenate(self.levels) if self.levels else np.zeros(0)

    @classmethod
    def from_flat(cls, ctx: FieldContext, x: np.ndarray) -> "GTPattern":
        cuts = np.cumsum([0] + level_lengths(ctx))
        return cls(ctx, [x[cuts[i] : cuts[i + 1]] for i in range(len(cuts) - 1)])

    def integer_levels(self) -> list[np.ndarray]:
        """Levels x(1), ..., x(n); drops the half levels for H."""
        return self.levels[1::2] if self.ctx.field == "H" else list(self.levels)

    def to_dict(self) -> dict:
        return {"field": self.ctx.field, "n": self.ctx.n, "levels": [v.tolist() for v in self.levels]}

    def to_json(self) -> str:
        return dumps_compact(self.to_dict())

    @classmethod
    def from_dict(cls, obj: dict) -> "GTPattern":
        return cls(FieldContext(obj["field"], obj["n"]), [np.array(v, dtype=float) for v in obj["levels"]])

    @classmethod
    def from_json(cls, text: str) -> "GTPattern":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class GTSpec:
    """The polytope GT_n(lam): a field context and a top row in the chamber."""

    ctx: FieldContext
    top: RadialPoint

    def __post_init__(self):
        if not isinstance(self.top, RadialPoint):
            object.__setattr__(self, "top", RadialPoint(self.ctx, self.top))
        if self.top.ctx != self.ctx:
            raise ValueError("top row belongs to another field context")
        self.top.check()

    @classmethod
    def of(cls, field: str, n: int, lam: Sequence[float]) -> "GTSpec":
        ctx = FieldContext(field, n)
        return cls(ctx, RadialPoint(ctx, np.asarray(lam, dtype=float)))


# ---------------------------------------------------------------------------
# constraints


def _ge(a, b):
    # a >= b  <=>  b - a <= 0; a and b are lists of (coef, level, index)
    return [(c, l, i) for c, l, i in b] + [(-c, l, i) for c, l, i in a]


def _v(level: int, i: int, coef: float = 1.0):
    return [(coef, level, i)]


ZERO: list = []


def _interlace(upper: int, lower: int, n_up: int, n_low: int, signed_up: bool, signed_low: bool):
    """Inequalities for |upper| >= |lower| interlacing (x1 >= y1 >= x2 >= ...).

    Only the last entry of a level may be signed; its absolute value enters
    the chain, which turns into two linear inequalities because the signed
    entry is always the smallest one.
    """
    rows = []
    chain: list[tuple[int, int, bool]] = []
    for i in range(max(n_up, n_low)):
        if i < n_up:
            chain.append((upper, i, signed_up and i == n_up - 1))
        if i < n_low:
            chain.append((lower, i, signed_low and i == n_low - 1))
    for (la, ia, sa), (lb, ib, sb) in zip(chain[:-1], chain[1:]):
        if sa:
            raise AssertionError("a signed entry must close the chain")
        if sb:
            rows.append(_ge(_v(la, ia), _v(lb, ib)))
            rows.append(_ge(_v(la, ia), _v(lb, ib, -1.0)))
        else:
            rows.append(_ge(_v(la, ia), _v(lb, ib)))
    return rows


def gt_constraints(ctx: FieldContext) -> list[list[tuple[float, int, int]]]:
    """All defining inequalities of GT_n, as lists of (coef, level, index)."""
    lens = level_lengths(ctx)
    rows = []
    if ctx.field == "C":
        for k in range(1, ctx.n):
            rows += _interlace(k, k - 1, lens[k], lens[k - 1], False, False)
    elif ctx.field == "H":
        for lvl, m in enumerate(lens):
            for i in range(m):
                rows.append(_ge(_v(lvl, i), ZERO))
        for k in range(ctx.n):
            whole, half = 2 * k + 1, 2 * k
            rows += _interlace(whole, half, k + 1, k + 1, False, False)
            if k:
                rows += _interlace(half, half - 1, k + 1, k, False, False)
    else:
        for k in range(2, ctx.n + 1):
            up, low = k - 1, k - 2
            rows += _interlace(up, low, lens[up], lens[low], k % 2 == 0, k % 2 == 1)
            # entries other than the signed last one of an even level are >= 0
            for i in range(lens[up] - (1 if k % 2 == 0 else 0)):
                rows.append(_ge(_v(up, i), ZERO))
    return rows


def _slacks(ctx: FieldContext, levels: Sequence[np.ndarray]) -> np.ndarray:
    out = []
    for row in gt_constraints(ctx):
        out.append(-sum(c * levels[l][i] for c, l, i in row))
    return np.array(out)


def gt_contains(spec: GTSpec, p: GTPattern, tol: float = GT_TOL) -> bool:
    """Whether ``p`` is a point of ``spec`` (interlacing up to ``tol``)."""
    if p.ctx != spec.ctx:
        raise ValueError(f"pattern for {p.ctx} does not match polytope for {spec.ctx}")
    if not np.allclose(p.top, spec.top.coords, rtol=0.0, atol=tol):
        return False
    s = _slacks(spec.ctx, p.levels)
    return bool(s.size == 0 or s.min() >= -tol)


def gt_volume(spec: GTSpec) -> float:
    """Volume of GT_n(lam) in the affine span (equal to d_n(lam))."""
    return asym_dim(spec.top)


# ---------------------------------------------------------------------------
# exact sampler through minors of random conjugates


def _omega_real(ctx: FieldContext, lam: np.ndarray) -> np.ndarray:
    X = np.zeros((ctx.n, ctx.n))
    for i, a in enumerate(lam):
        X[2 * i, 2 * i + 1] = a
        X[2 * i + 1, 2 * i] = -a
    return X


def _minor_levels_batch(ctx: FieldContext, lam: np.ndarray, rng, size: int) -> list[np.ndarray]:
    U = sample_haar_batch(ctx, rng, size)
    if ctx.field == "C":
        M = (U * lam[None, None, :]) @ np.conj(np.swapaxes(U, 1, 2))
    else:
        M = U @ _omega_real(ctx, lam)[None] @ np.swapaxes(U, 1, 2)
    levels = []
    for k in range(1, ctx.n + 1):
        sub = ctx.with_n(k)
        if sub.n_tilde == 0:
            levels.append(np.zeros((size, 0)))
        else:
            levels.append(radial_coords_batch(sub, M[:, :k, :k]))
    levels[-1] = np.broadcast_to(lam, (size, lam.size)).copy()
    return levels


def sample_uniform_spectral_batch(spec: GTSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` exact uniform samples of GT_n(lam), flattened level by level.

    For C and R these are the minor processes of U omega(lam) U* with Haar U.
    For H the pattern is read off the odd orthogonal group SO(2n+1):
    x(k) is the real level 2k+1 and x(k-1/2) the absolute value of level 2k.
    """
    ctx = spec.ctx
    lam = spec.top.coords
    if ctx.field == "H":
        rctx = FieldContext("R", 2 * ctx.n + 1)
        real = _minor_levels_batch(rctx, lam, rng, size)
        levels = []
        for k in range(1, ctx.n + 1):
            levels.append(np.abs(real[2 * k - 1]))
            levels.append(real[2 * k])
    else:
        levels = _minor_levels_batch(ctx, lam, rng, size)
    return np.concatenate(levels, axis=1)


def sample_uniform_spectral(spec: GTSpec, rng: np.random.Generator) -> GTPattern:
    """One exact uniform sample of GT_n(lam); see the batch version."""
    return GTPattern.from_flat(spec.ctx, sample_uniform_spectral_batch(spec, rng, 1)[0])


# ---------------------------------------------------------------------------
# hit-and-run


def _linear_system(spec: GTSpec):
    ctx = spec.ctx
    lens = level_lengths(ctx)
    top = len(lens) - 1
    offs = np.cumsum([0] + lens[:-1])
    dim = int(sum(lens[:-1]))
    rows = gt_constraints(ctx)
    A = np.zeros((len(rows), dim))
    b = np.zeros(len(rows))
    for r, row in enumerate(rows):
        for c, l, i in row:
            if l == top:
                b[r] -= c * spec.top.coords[i]
            else:
                A[r, offs[l] + i] += c
    keep = np.any(A != 0, axis=1)
    return A[keep], b[keep], dim


def _midpoint_levels(spec: GTSpec) -> list[np.ndarray]:
    # level-wise midpoints going down from the top row
    ctx = spec.ctx
    lens = level_lengths(ctx)
    levels = [None] * len(lens)
    levels[-1] = spec.top.coords.astype(float)
    for lvl in range(len(lens) - 2, -1, -1):
        up = levels[lvl + 1]
        m = lens[lvl]
        if ctx.field == "C":
            levels[lvl] = (up[:-1] + up[1:]) / 2
        elif ctx.field == "H":
            ext = np.append(np.abs(up), 0.0)
            levels[lvl] = (ext[:m] + ext[1 : m + 1]) / 2
        else:
            k = lvl + 2  # level number of ``up``
            a = np.abs(up)
            if k % 2 == 0:
                levels[lvl] = (a[:m] + a[1 : m + 1]) / 2
            else:
                y = np.zeros(m)
                y[: m - 1] = (a[: m - 1] + a[1:m]) / 2
                levels[lvl] = y
    return levels


def _walk_setup(spec: GTSpec):
    A, b, dim = _linear_system(spec)
    x0 = np.concatenate(_midpoint_levels(spec)[:-1]) if dim else np.zeros(0)
    if dim and np.min(b - A @ x0) <= 1e-12:
        raise DegeneratePolytopeError(
            f"GT polytope of {spec.top.coords.tolist()} has empty interior; use the spectral sampler"
        )
    return A, b, x0, dim


def sample_uniform_walk_batch(
    spec: GTSpec,
    rng: np.random.Generator,
    size: int,
    burn_in: int | None = None,
    thin: int = 10,
) -> np.ndarray:
    """Approximately uniform samples from one hit-and-run chain.

    The chain starts at the level-wise midpoint pattern, discards ``burn_in``
    steps (default 50 per free coordinate) and keeps every ``thin``-th state.
    Returns flattened patterns, top row included.
    """
    A, b, x0, dim = _walk_setup(spec)
    top = spec.top.coords
    if dim == 0:
        return np.broadcast_to(top, (size, top.size)).copy()
    burn = 50 * dim if burn_in is None else int(burn_in)
    steps = burn + size * thin
    d = rng.standard_normal((steps, dim))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    u = rng.random(steps)
    free = _accel.hit_and_run(A, b, x0, d, u, thin, size)
    return np.concatenate([free, np.broadcast_to(top, (size, top.size))], axis=1)


def sample_uniform_walk(spec: GTSpec, rng: np.random.Generator, steps: int | None = None) -> GTPattern:
    """Final state of a hit-and-run chain of ``steps`` moves (default 50 per coordinate)."""
    A, b, x0, dim = _walk_setup(spec)
    if steps is not None and steps < 1:
        raise ValueError("steps must be positive")
    burn = None if steps is None else steps - 1
    flat = sample_uniform_walk_batch(spec, rng, 1, burn_in=burn, thin=1)[0]
    return GTPattern.from_flat(spec.ctx, flat)


# ---------------------------------------------------------------------------
# density of the projection on the level below the top


def h_witness_volume(lam: np.ndarray, beta: np.ndarray) -> float:
    """Volume of {z in R^n : lam >= z >= beta} (interlaced, beta has n-1 entries).

    z_i ranges independently over [max(lam_{i+1}, beta_i), min(lam_i, beta_{i-1})]
    with lam_{n+1} = 0 and beta_n = 0.
    """
    lam = np.asarray(lam, dtype=float)
    n = lam.size
    bext = np.concatenate([[np.inf], np.asarray(beta, dtype=float), [0.0]])
    lext = np.append(lam, 0.0)
    vol = 1.0
    for i in range(n):
        lo = max(lext[i + 1], bext[i + 1])
        hi = min(lext[i], bext[i])
        if hi < lo:
            return 0.0
        vol *= hi - lo
    return vol


def _below(ctx: FieldContext, lam: np.ndarray, beta: np.ndarray) -> bool:
    """lam over beta satisfies the one-step interlacing of GT_n."""
    if ctx.field == "C":
        return _c_interlaced(lam, beta)
    if ctx.field == "H":
        if np.any(beta < -GT_TOL):
            return False
        bext = np.concatenate([[np.inf], beta, [0.0]])
        lext = np.append(lam, 0.0)
        return all(
            min(lext[i], bext[i]) >= max(lext[i + 1], bext[i + 1]) - GT_TOL for i in range(lam.size)
        )
    rows = _interlace(1, 0, lam.size, beta.size, ctx.n % 2 == 0, ctx.n % 2 == 1)
    levels = [beta, lam]
    return all(-sum(c * levels[l][i] for c, l, i in row) >= -GT_TOL for row in rows)


def _c_interlaced(x: np.ndarray, y: np.ndarray) -> bool:
    ok = np.all(x[: y.size] >= y - GT_TOL)
    ok = ok and np.all(y >= x[1 : y.size + 1] - GT_TOL)
    return bool(ok)


def _is_rank_one(lam: np.ndarray) -> bool:
    return lam.size >= 1 and lam[0] > 0 and not np.any(lam[1:])


def mu_lambda_density(lam: RadialPoint, beta: RadialPoint | Sequence[float]) -> float:
    """Density f_lam (interior lam) or g_theta (lam = (theta, 0, ..., 0)).

    For interior lam the density is w.r.t. Lebesgue measure on C_{n-1}; for H
    it carries the extra factor det((lam_i - beta_j) 1{lam_i >= beta_j}) with
    beta_n = 0. In the rank-one case the measure is g_theta(beta_1) d beta_1
    times point masses at 0, and the value g_theta(beta_1) is returned.
    """
    ctx = lam.ctx
    if ctx.n < 2:
        raise ValueError("the projection needs n >= 2")
    sub = ctx.with_n(ctx.n - 1)
    b = beta.coords if isinstance(beta, RadialPoint) else np.asarray(beta, dtype=float).reshape(-1)
    if b.size != sub.n_tilde:
        raise ChamberError(f"beta needs {sub.n_tilde} coordinates")
    x = lam.coords
    if lam.is_interior():
        if not in_chamber(sub, b, GT_TOL) or not _below(ctx, x, b):
            return 0.0
        val = asym_dim((sub, b)) / asym_dim(lam)
        if ctx.field == "H":
            bb = np.append(b, 0.0)
            D = np.where(x[:, None] >= bb[None, :], x[:, None] - bb[None, :], 0.0)
            val *= float(np.linalg.det(D))
        return float(val)
    if _is_rank_one(x):
        theta = x[0]
        if b.size > 1 and np.any(b[1:]):
            return 0.0
        t = abs(b[0]) if b.size else 0.0
        if not 0.0 <= t <= theta:
            return 0.0
        n = ctx.n
        if ctx.field == "C":
            return (n - 1) * t ** (n - 2) / theta ** (n - 1)
        if ctx.field == "R":
            return (n - 2) * t ** (n - 3) / theta ** (n - 2)
        return (2 * n - 2) * (2 * n - 1) * t ** (2 * n - 3) * (theta - t) / theta ** (2 * n - 1)
    raise ValueError("mu_lambda_density covers interior or rank-one lam; use the spectral sampler instead")


def patterns_to_csv(ctx: FieldContext, patterns: Iterable[np.ndarray | GTPattern]) -> str:
    """CSV text with one flattened pattern per row; columns x[level]_index."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = []
    for lab, m in zip(level_labels(ctx), level_lengths(ctx)):
        header += [f"x[{lab}]_{i + 1}" for i in range(m)]
    w.writerow(header)
    for p in patterns:
        flat = p.flat() if isinstance(p, GTPattern) else np.asarray(p)
        w.writerow([repr(float(v)) for v in flat])
    return buf.getvalue()
