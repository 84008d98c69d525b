"""Exact integer combinatorics: integer Gelfand-Tsetlin patterns, rank-one
tensor product rules, restriction to the subgroup of size n - 1 and the
semiclassical rescaling of the resulting multiplicity measures.

Multiplicities are Python integers. Witness vectors c (and the extra bit s for
odd orthogonal groups) are counted by direct loops over boxes of integers.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np
from scipy.stats import wasserstein_distance

from . import _accel
from .ensembles import FieldContext, RadialPoint, in_chamber, make_rng
from .weylcore import weyl_dim

__all__ = [
    "DecompositionTable",
    "SemiclassicalSchedule",
    "InstanceTooLargeError",
    "gt_count",
    "gt_enumerate",
    "gt_enumerate_count",
    "tensor_rank_one",
    "branch",
    "semiclassical_measure",
    "semiclassical_distance",
]

ENUM_LIMIT = 10**6


class InstanceTooLargeError(ValueError):
    """Requested enumeration exceeds the size guard."""


@dataclass
class DecompositionTable:
    """Multiplicities of irreducible modules, keyed by highest weight."""

    ctx: FieldContext
    entries: dict = field(default_factory=dict)

    def add(self, beta: Sequence[int], mult: int = 1) -> None:
        if mult:
            key = tuple(int(b) for b in beta)
            self.entries[key] = self.entries.get(key, 0) + int(mult)

    def total_dim(self) -> int:
        return sum(m * weyl_dim(self.ctx, b) for b, m in self.entries.items())

    def items(self):
        return sorted(self.entries.items(), reverse=True)

    def to_records(self) -> list[dict]:
        return [{"beta": list(b), "mult": str(m)} for b, m in self.items()]

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, beta) -> int:
        return self.entries.get(tuple(beta), 0)


def _as_int_weight(ctx: FieldContext, lam: Sequence) -> tuple[int, ...]:
    out = []
    for v in lam:
        f = float(v)
        if not f.is_integer():
            raise ValueError(f"weight must be integral, got {list(lam)}")
        out.append(int(f))
    if len(out) != ctx.n_tilde or not in_chamber(ctx, np.array(out, dtype=float), 0.0):
        raise ValueError(f"{out} is not an integral point of the type {ctx.chamber_type} chamber")
    return tuple(out)


# ---------------------------------------------------------------------------
# integer GT patterns


def gt_count(ctx: FieldContext, lam: Sequence[int]) -> int:
    """Number of integer points of GT_n(lam), by the closed product formulas."""
    lam = _as_int_weight(ctx, lam)
    n = ctx.n
    m = ctx.n_tilde
    out = Fraction(1)
    if ctx.field == "C":
        for i in range(1, n + 1):
            for j in range(i + 1, n + 1):
                out *= Fraction(lam[i - 1] - lam[j - 1] + j - i, j - i)
        return _exact(out)
    if ctx.field == "H":
        for i in range(1, n + 1):
            for j in range(i + 1, n + 1):
                out *= Fraction((lam[i - 1] - lam[j - 1] + j - i) * (lam[i - 1] + lam[j - 1] + 2 * n + 2 - j - i),
                                (j - i) * (2 * n + 2 - j - i))
            out *= Fraction(lam[i - 1] + n + 1 - i, n + 1 - i)
        return _exact(out)
    eps = ctx.epsilon
    for i in range(1, m + 1):
        for j in range(i + 1, m + 1):
            out *= Fraction((lam[i - 1] - lam[j - 1] + j - i) * (lam[i - 1] + lam[j - 1] + 2 * m + eps - j - i),
                            (j - i) * (2 * m + eps - j - i))
        if eps:
            half = Fraction(2 * m + 1 - 2 * i, 2)
            out *= (lam[i - 1] + half) / half
    return _exact(out)


def _exact(q: Fraction) -> int:
    if q.denominator != 1:
        raise ArithmeticError(f"non-integral count {q}")
    return int(q)


def _child_intervals(ctx: FieldContext, lvl: int, upper: Sequence[int]) -> list[tuple[int, int]]:
    """Independent ranges of the entries of level ``lvl`` given level ``lvl + 1``."""
    up = list(upper)
    if ctx.field == "C":
        return [(up[i + 1], up[i]) for i in range(len(up) - 1)]
    if ctx.field == "H":
        # half level below an integer level (same length, floor 0), or
        # integer level below a half level (one entry shorter)
        if lvl % 2 == 0:
            ext = up + [0]
            return [(ext[i + 1], ext[i]) for i in range(len(up))]
        return [(up[i + 1], up[i]) for i in range(len(up) - 1)]
    k_up = lvl + 2  # level number of ``upper``
    a = [abs(v) for v in up]
    if k_up % 2 == 0:
        return [(a[j + 1], a[j]) for j in range(len(up) - 1)]
    ranges = [(a[j + 1], a[j]) for j in range(len(up) - 1)]
    if up:
        ranges.append((-a[-1], a[-1]))
    return ranges


def _level_count(ctx: FieldContext) -> int:
    return 2 * ctx.n if ctx.field == "H" else ctx.n


def gt_enumerate(ctx: FieldContext, lam: Sequence[int], limit: int = ENUM_LIMIT) -> list[list[tuple[int, ...]]]:
    """All integer patterns with top row ``lam``, as lists of level tuples."""
    lam = _as_int_weight(ctx, lam)
    total = gt_count(ctx, lam)
    if total > limit:
        raise InstanceTooLargeError(f"{total} patterns exceed the limit {limit}")
    L = _level_count(ctx)
    out: list[list[tuple[int, ...]]] = []

    def rec(lvl: int, above: list[tuple[int, ...]]):
        if lvl < 0:
            out.append(list(reversed(above)))
            return
        ranges = _child_intervals(ctx, lvl, above[-1])
        for vals in itertools.product(*[range(lo, hi + 1) for lo, hi in ranges]):
            rec(lvl - 1, above + [tuple(vals)])

    rec(L - 2, [lam])
    return out


def gt_enumerate_count(ctx: FieldContext, lam: Sequence[int]) -> int:
    """Number of integer patterns found by walking every interlacing row.

    Same search tree as :func:`gt_enumerate`, with the number of completions
    below each (level, row) memoized instead of materializing the patterns.
    """
    lam = _as_int_weight(ctx, lam)

    @lru_cache(maxsize=None)
    def below(lvl: int, row: tuple[int, ...]) -> int:
        if lvl < 0:
            return 1
        ranges = _child_intervals(ctx, lvl, row)
        return sum(below(lvl - 1, vals) for vals in itertools.product(*[range(lo, hi + 1) for lo, hi in ranges]))

    return below(_level_count(ctx) - 2, lam)


# ---------------------------------------------------------------------------
# rank-one tensor products V_lam (x) V_(m, 0, ..., 0)


def _count_box(lo: list[int], hi: list[int], target: int) -> int:
    if any(h < l for l, h in zip(lo, hi)):
        return 0
    k = len(lo)
    return _accel.witness_count(np.array(lo), np.array(hi), np.ones(k, dtype=np.int64), target)


def tensor_witnesses(ctx: FieldContext, lam: Sequence[int], beta: Sequence[int], m: int) -> int:
    """Number of witnesses (c, s) placing ``beta`` in V_lam (x) V_(m,0,...,0)."""
    lam = list(lam)
    beta = list(beta)
    t = ctx.chamber_type
    r = len(lam)
    if t == "A":
        ok = all(beta[i] >= lam[i] for i in range(r)) and all(lam[i] >= beta[i + 1] for i in range(r - 1))
        return int(ok and sum(beta) - sum(lam) == m)
    if t in ("B", "C"):
        le = lam + [0]
        be = beta + [0]
        lo = [max(le[i + 1], be[i + 1]) for i in range(r)]
        hi = [min(le[i], be[i]) for i in range(r)]
        excess = sum(lam) + sum(beta) - m
        count = 0
        if excess % 2 == 0:
            count += _count_box(lo, hi, excess // 2)
        if t == "B" and (excess + 1) % 2 == 0:
            # s = 1 needs c_r >= 1
            lo1 = lo[:-1] + [max(lo[-1], 1)]
            count += _count_box(lo1, hi, (excess + 1) // 2)
        return count
    # type D
    if r == 1:
        # SO(2) is abelian: the product is a single character
        return int(beta[0] == lam[0] + m)
    lo = [max(lam[i + 1], beta[i + 1]) for i in range(r - 2)]
    lo.append(max(abs(lam[-1]), abs(beta[-1])))
    hi = [min(lam[i], beta[i]) for i in range(r - 1)]
    excess = sum(lam[:-1]) + sum(beta[:-1]) + abs(lam[-1] - beta[-1]) - m
    if excess % 2:
        return 0
    return _count_box(lo, hi, excess // 2)


def _candidate_betas(ctx: FieldContext, lam: tuple[int, ...], m: int) -> Iterator[tuple[int, ...]]:
    ranges = [range(l - m, l + m + 1) for l in lam]
    for beta in itertools.product(*ranges):
        if in_chamber(ctx, np.array(beta, dtype=float), 0.0):
            yield beta


def tensor_rank_one(ctx: FieldContext, lam: Sequence[int], m: int) -> DecompositionTable:
    """Decomposition of V_lam (x) V_(m, 0, ..., 0) into irreducibles."""
    lam = _as_int_weight(ctx, lam)
    if m < 0:
        raise ValueError("m must be nonnegative")
    table = DecompositionTable(ctx)
    if ctx.n_tilde == 0:
        table.add((), 1)
        return table
    for beta in _candidate_betas(ctx, lam, m):
        table.add(beta, tensor_witnesses(ctx, lam, beta, m))
    return table


# ---------------------------------------------------------------------------
# restriction U_n(F) -> U_{n-1}(F)


def branch(ctx: FieldContext, lam: Sequence[int]) -> DecompositionTable:
    """Restriction of V_lam to the subgroup fixing the last basis vector."""
    lam = _as_int_weight(ctx, lam)
    if ctx.n < 2:
        raise ValueError("branching needs n >= 2")
    sub = ctx.with_n(ctx.n - 1)
    table = DecompositionTable(sub)
    L = _level_count(ctx)
    if ctx.field == "H":
        for c in itertools.product(*[range(lo, hi + 1) for lo, hi in _child_intervals(ctx, L - 2, lam)]):
            for beta in itertools.product(*[range(lo, hi + 1) for lo, hi in _child_intervals(ctx, L - 3, c)]):
                table.add(beta, 1)
        return table
    for beta in itertools.product(*[range(lo, hi + 1) for lo, hi in _child_intervals(ctx, L - 2, lam)]):
        table.add(beta, 1)
    return table


# ---------------------------------------------------------------------------
# semiclassical limits


@dataclass
class SemiclassicalSchedule:
    """Rescaled multiplicity measures along lam_k = round(k lam), eps_k = 1/k.

    ``kind`` is "branch" (restriction to U_{n-1}(F)) or "tensor" (product
    with the module of highest weight round(k theta) e_1).
    """

    ctx: FieldContext
    lam: Sequence[float]
    kind: str = "branch"
    theta: float = 0.0
    target_samples: int = 200_000
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("branch", "tensor"):
            raise ValueError("kind must be 'branch' or 'tensor'")
        self.lam = np.asarray(self.lam, dtype=float)
        RadialPoint(self.ctx, self.lam).check()

    def integral_weight(self, k: int) -> tuple[int, ...]:
        v = np.rint(k * self.lam).astype(int)
        if self.ctx.chamber_type == "A":
            v = -np.sort(-v, kind="stable")
        elif self.ctx.chamber_type in ("B", "C"):
            v = -np.sort(-np.abs(v), kind="stable")
        elif v.size:
            sign = -1 if v[-1] < 0 else 1
            v = -np.sort(-np.abs(v), kind="stable")
            v[-1] *= sign
        return tuple(int(x) for x in v)


def semiclassical_measure(schedule: SemiclassicalSchedule, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Atoms (rescaled by 1/k) and weights of the discrete measure at scale k."""
    ctx = schedule.ctx
    lam_k = schedule.integral_weight(k)
    if schedule.kind == "branch":
        table = branch(ctx, lam_k)
        total = weyl_dim(ctx, lam_k)
    else:
        a = int(round(k * schedule.theta))
        table = tensor_rank_one(ctx, lam_k, a)
        gamma = (a,) + (0,) * (ctx.n_tilde - 1)
        total = weyl_dim(ctx, lam_k) * weyl_dim(ctx, gamma)
    atoms, weights = [], []
    for beta, mult in table.items():
        atoms.append(np.array(beta, dtype=float) / k)
        weights.append(Fraction(mult * weyl_dim(table.ctx, beta), total))
    if sum(weights) != 1:
        raise ArithmeticError("discrete measure does not have unit mass")
    return np.array(atoms), np.array([float(w) for w in weights])


def _target_samples(schedule: SemiclassicalSchedule) -> np.ndarray:
    rng = make_rng(schedule.seed)
    ctx = schedule.ctx
    if schedule.kind == "branch":
        from .gtpolytope import GTSpec, level_lengths, sample_uniform_spectral_batch

        spec = GTSpec(ctx, RadialPoint(ctx, schedule.lam))
        flat = sample_uniform_spectral_batch(spec, rng, schedule.target_samples)
        lens = level_lengths(ctx)
        start = int(sum(lens[:-2]))
        return flat[:, start : start + lens[-2]]
    from .perturbation import perturb_spectral_batch

    return perturb_spectral_batch(RadialPoint(ctx, schedule.lam), schedule.theta, rng, schedule.target_samples)


def semiclassical_distance(schedule: SemiclassicalSchedule, k: int, target: np.ndarray | None = None) -> float:
    """1-Wasserstein distance between the scale-k discrete measure and the limit.

    The limit law is represented by exact samples. For several coordinates
    the largest of the per-coordinate distances is returned.
    """
    atoms, weights = semiclassical_measure(schedule, k)
    if target is None:
        target = _target_samples(schedule)
    target = np.asarray(target, dtype=float).reshape(len(target), -1)
    if atoms.ndim == 1:
        atoms = atoms[:, None]
    if atoms.shape[1] == 0:
        return 0.0
    return max(
        wasserstein_distance(atoms[:, j], target[:, j], u_weights=weights) for j in range(atoms.shape[1])
    )
