"""Acceptance checks shared by the test suite and ``orbitrmt verify``.

Every check returns a :class:`CheckResult` with the statistics it computed
and the seed it used. ``budget="full"`` runs at the stated sample sizes;
``budget="small"`` cuts the Monte Carlo sizes for quick smoke runs.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, interpolate, stats

from .combinat import (
    SemiclassicalSchedule,
    gt_count,
    gt_enumerate,
    gt_enumerate_count,
    semiclassical_distance,
    tensor_rank_one,
)
from .detproc import estimate_correlations, gue_minor_kernel, guer_kernel, rectangular_kernel
from .ensembles import FieldContext, RadialPoint, StructuredMatrix, make_rng, sample_gaussian_hermitian
from .gtpolytope import (
    GTSpec,
    level_lengths,
    mu_lambda_density,
    sample_uniform_spectral_batch,
    sample_uniform_walk_batch,
)
from .perturbation import (
    lue_char_empirical,
    lue_char_exact,
    lue_density,
    lue_sample_batch,
    perturb_spectral_batch,
    rank_one_law,
    rank_one_matrix_sample,
)
from .weylcore import weyl_dim

__all__ = ["CheckResult", "CRITERIA", "SUITES", "run_criterion", "run_suite"]

ALPHA = 0.01


@dataclass
class CheckResult:
    criterion: int
    name: str
    passed: bool
    seed: int
    budget: str
    seconds: float = 0.0
    stats: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _scale(budget: str, full: int, small: int) -> int:
    if budget not in ("full", "small"):
        raise ValueError(f"unknown budget {budget!r}")
    return full if budget == "full" else small


# ---------------------------------------------------------------------------
# 1, 2: exact combinatorics


def _dominant_weights(ctx: FieldContext, top: int = 5):
    r = ctx.n_tilde
    t = ctx.chamber_type
    for v in itertools.combinations_with_replacement(range(top, -1, -1), r):
        yield v
        if t == "D" and v and v[-1] > 0:
            yield v[:-1] + (-v[-1],)


def _count_contexts() -> list[FieldContext]:
    out = [FieldContext("C", n) for n in range(1, 5)]  # A_{n}
    out += [FieldContext("R", 2 * r + 1) for r in range(1, 5)]  # B_r
    out += [FieldContext("H", n) for n in range(1, 5)]  # C_r
    out += [FieldContext("R", 2 * r) for r in range(1, 5)]  # D_r
    return out


def check_counting(budget: str = "full", seed: int = 0, enum_cap: int = 20_000) -> CheckResult:
    """gt_count = weyl_dim = brute-force pattern count, all four types, entries <= 5, rank <= 4."""
    weights = mismatches = listed = 0
    total_dim = 0
    bad = []
    for ctx in _count_contexts():
        for lam in _dominant_weights(ctx):
            weights += 1
            a, b, c = gt_count(ctx, lam), weyl_dim(ctx, lam), gt_enumerate_count(ctx, lam)
            total_dim += b
            ok = a == b == c
            if ok and b <= enum_cap:
                listed += 1
                ok = len(gt_enumerate(ctx, lam)) == b
            if not ok:
                mismatches += 1
                bad.append([ctx.field, ctx.n, list(lam)])
    return CheckResult(
        1,
        "exact counting",
        mismatches == 0,
        seed,
        budget,
        stats={
            "weights": weights,
            "materialized": listed,
            "total_dimension": total_dim,
            "mismatches": mismatches,
            "examples": bad[:5],
        },
    )


def check_tensor_dimension(budget: str = "full", seed: int = 0) -> CheckResult:
    """sum mult * dim over tensor_rank_one(lam, m) = dim(lam) dim(m e_1), randomized."""
    rng = make_rng(seed)
    per_type = _scale(budget, 50, 10)
    pools = {
        "A": [FieldContext("C", n) for n in (2, 3, 4)],
        "B": [FieldContext("R", n) for n in (3, 5, 7)],
        "C": [FieldContext("H", n) for n in (1, 2, 3)],
        "D": [FieldContext("R", n) for n in (2, 4, 6)],
    }
    failures = []
    cases = 0
    for t, pool in pools.items():
        for _ in range(per_type):
            ctx = pool[rng.integers(len(pool))]
            lam = sorted(rng.integers(0, 6, ctx.n_tilde).tolist(), reverse=True)
            if t == "D" and lam[-1] > 0 and rng.random() < 0.5:
                lam[-1] = -lam[-1]
            m = int(rng.integers(0, 7))
            table = tensor_rank_one(ctx, lam, m)
            gamma = [m] + [0] * (ctx.n_tilde - 1)
            lhs = table.total_dim()
            rhs = weyl_dim(ctx, lam) * weyl_dim(ctx, gamma)
            cases += 1
            if lhs != rhs:
                failures.append({"field": ctx.field, "n": ctx.n, "lambda": lam, "m": m, "lhs": lhs, "rhs": rhs})
    return CheckResult(
        2, "tensor dimension conservation", not failures, seed, budget, stats={"instances": cases, "failures": failures[:5]}
    )


# ---------------------------------------------------------------------------
# 3, 4: uniform Gelfand-Tsetlin samplers


def _level_slice(ctx: FieldContext, level: int) -> slice:
    lens = level_lengths(ctx)
    start = int(sum(lens[: level - 1]))
    return slice(start, start + lens[level - 1])


def _marginal_cdf(lam: RadialPoint, lo: float, hi: float, grid: int = 400) -> Callable:
    """CDF of the first coordinate one level down, by nested quadrature."""
    ctx = lam.ctx
    m = ctx.with_n(ctx.n - 1).n_tilde
    x = lam.coords
    if m == 1:
        g = lambda t: mu_lambda_density(lam, [t])
    else:
        # coordinate i of the lower level sits between top entries i + 1 and i
        def lower(i):
            if i + 1 >= x.size:
                return 0.0
            return x[i + 1] if ctx.field == "C" else abs(x[i + 1])

        bounds = [(lower(i), x[i]) for i in range(1, m)]

        def g(t):
            f = lambda *rest: mu_lambda_density(lam, [t, *rest])
            return integrate.nquad(f, bounds, opts={"epsabs": 1e-11, "epsrel": 1e-10})[0]

    ts = np.linspace(lo, hi, grid + 1)
    pieces = [integrate.quad(g, a, b, epsabs=1e-12, epsrel=1e-11)[0] for a, b in zip(ts[:-1], ts[1:])]
    cdf = np.concatenate([[0.0], np.cumsum(pieces)])
    mass = cdf[-1]
    spline = interpolate.PchipInterpolator(ts, cdf / mass)
    return (lambda v: np.clip(spline(np.clip(v, lo, hi)), 0.0, 1.0)), mass


def check_minor_uniformity(budget: str = "full", seed: int = 3) -> CheckResult:
    """Spectral minors vs the quadrature CDF of the projected density."""
    size = _scale(budget, 100_000, 10_000)
    rng = make_rng(seed)
    out = {}
    passed = True
    for field_, n, lam, level in (("C", 3, (2.0, 1.0, 0.0), 2), ("R", 4, (2.0, 1.0), 3)):
        spec = GTSpec.of(field_, n, lam)
        flat = sample_uniform_spectral_batch(spec, rng, size)
        vals = np.abs(flat[:, _level_slice(spec.ctx, level)][:, 0])
        lo = abs(lam[1]) if len(lam) > 1 else 0.0
        cdf, mass = _marginal_cdf(spec.top, lo, lam[0])
        ks = stats.kstest(vals, cdf)
        ok = ks.pvalue > ALPHA and abs(mass - 1) < 1e-6
        passed &= ok
        out[f"{field_}{n}"] = {"ks": float(ks.statistic), "p": float(ks.pvalue), "density_mass": float(mass)}
    return CheckResult(3, "minor-process uniformity", bool(passed), seed, budget, stats=out)


def check_two_samplers(budget: str = "full", seed: int = 4) -> CheckResult:
    """Spectral vs hit-and-run samples of GT_n(lam), KS on three coordinates."""
    n_spec = _scale(budget, 20_000, 4_000)
    chains = _scale(budget, 40, 10)
    per_chain = _scale(budget, 100, 100)
    rng = make_rng(seed)
    out = {}
    passed = True
    for field_, n, lam in (("C", 3, (2.0, 1.0, 0.0)), ("H", 2, (2.0, 1.0))):
        spec = GTSpec.of(field_, n, lam)
        a = sample_uniform_spectral_batch(spec, rng, n_spec)
        b = np.concatenate(
            [sample_uniform_walk_batch(spec, rng, per_chain, thin=50) for _ in range(chains)], axis=0
        )
        res = []
        for j in range(3):
            ks = stats.ks_2samp(a[:, j], b[:, j])
            res.append({"coordinate": j, "ks": float(ks.statistic), "p": float(ks.pvalue)})
            passed &= ks.pvalue > ALPHA
        out[f"{field_}{n}"] = res
    return CheckResult(4, "two-sampler agreement", bool(passed), seed, budget, stats=out)


# ---------------------------------------------------------------------------
# 5, 6, 7: Gaussian rectangular ensembles


def check_rank_one_gamma(budget: str = "full", seed: int = 5) -> CheckResult:
    size = _scale(budget, 100_000, 10_000)
    rng = make_rng(seed)
    out = {}
    passed = True
    for field_ in ("C", "R", "H"):
        for n in (2, 3, 4):
            ctx = FieldContext(field_, n)
            rate, shape = rank_one_law(ctx)
            x = rank_one_matrix_sample(ctx, rng, size)
            ks = stats.kstest(x, stats.gamma(shape, scale=1.0 / rate).cdf)
            passed &= ks.pvalue > ALPHA
            out[f"{field_}{n}"] = {"rate": rate, "shape": shape, "ks": float(ks.statistic), "p": float(ks.pvalue)}
    return CheckResult(5, "rank-one Gamma law", bool(passed), seed, budget, stats=out)


def _test_matrices(ctx: FieldContext, rng: np.random.Generator, count: int = 5) -> list[StructuredMatrix]:
    # random Gaussian directions at growing operator norms
    out = []
    for s in np.linspace(0.15, 1.2, count):
        data = sample_gaussian_hermitian(ctx, rng).data
        out.append(StructuredMatrix(ctx, "hermitian_P", data * (s / np.linalg.norm(data, 2))))
    return out


def check_fourier(budget: str = "full", seed: int = 6) -> CheckResult:
    size = _scale(budget, 100_000, 10_000)
    rng = make_rng(seed)
    out = {}
    passed = True
    for field_, n, k in (("C", 3, 2), ("R", 4, 3), ("H", 2, 3)):
        ctx = FieldContext(field_, n)
        res = []
        for N in _test_matrices(ctx, rng):
            exact = lue_char_exact(ctx, k, N)
            est, se = lue_char_empirical(ctx, k, N, rng, size)
            z = abs(est - exact) / se
            passed &= z < 3.0
            res.append({"exact": [exact.real, exact.imag], "estimate": [est.real, est.imag], "se": se, "z": z})
        out[f"{field_}{n},k={k}"] = res
    return CheckResult(6, "Fourier identity", bool(passed), seed, budget, stats=out)


def _cell_probability(ctx: FieldContext, k: int, a: tuple, b: tuple) -> float:
    # mass of the decreasing cone in the box [a0,a1] x [b0,b1] (first > second)
    f = lambda y, x: lue_density(ctx, k, (x, y))
    lo_y = lambda x: b[0]
    hi_y = lambda x: min(b[1], x)
    x0 = max(a[0], b[0])
    if a[1] <= b[0] or x0 >= a[1]:
        return 0.0
    pts = a[1] if np.isfinite(a[1]) else None
    val = 0.0
    if a[0] < x0:
        val += integrate.dblquad(f, a[0], x0, lo_y, hi_y, epsabs=1e-10, epsrel=1e-8)[0]
    upper = a[1] if pts is not None else np.inf
    val += integrate.dblquad(f, x0, upper, lo_y, hi_y, epsabs=1e-10, epsrel=1e-8)[0]
    return val


def check_lue_histograms(budget: str = "full", seed: int = 7) -> CheckResult:
    size = _scale(budget, 100_000, 10_000)
    rng = make_rng(seed)
    out = {}
    passed = True
    for field_, n, k in (("C", 2, 3), ("R", 4, 5), ("H", 2, 3)):
        ctx = FieldContext(field_, n)
        pilot = lue_sample_batch(ctx, k, rng, 20_000)
        x = lue_sample_batch(ctx, k, rng, size)
        e1 = np.concatenate([[0.0], np.quantile(pilot[:, 0], [0.2, 0.4, 0.6, 0.8]), [np.inf]])
        e2 = np.concatenate([[0.0], np.quantile(pilot[:, 1], [0.2, 0.4, 0.6, 0.8]), [np.inf]])
        obs, exp = [], []
        for i in range(5):
            for j in range(5):
                p = _cell_probability(ctx, k, (e1[i], e1[i + 1]), (e2[j], e2[j + 1]))
                cnt = np.sum((x[:, 0] >= e1[i]) & (x[:, 0] < e1[i + 1]) & (x[:, 1] >= e2[j]) & (x[:, 1] < e2[j + 1]))
                if p * size < 1e-9:
                    if cnt:
                        passed = False
                    continue
                obs.append(cnt)
                exp.append(p * size)
        obs, exp = np.array(obs, dtype=float), np.array(exp)
        # merge sparse cells into one bucket
        small = exp < 5
        if small.any():
            obs = np.append(obs[~small], obs[small].sum())
            exp = np.append(exp[~small], exp[small].sum())
        chi2 = float(np.sum((obs - exp) ** 2 / exp))
        dof = obs.size - 1
        p = float(stats.chi2.sf(chi2, dof))
        passed &= p > ALPHA and abs(exp.sum() / size - 1) < 1e-5
        out[f"{field_}{n},k={k}"] = {"chi2": chi2, "dof": dof, "p": p, "mass": float(exp.sum() / size)}
    return CheckResult(7, "LUE density", bool(passed), seed, budget, stats=out)


# ---------------------------------------------------------------------------
# 8, 9, 10: determinantal structure


def check_level_counts(budget: str = "full", seed: int = 0) -> CheckResult:
    out = []
    passed = True

    def record(label, kern, levels):
        nonlocal passed
        for r in levels:
            got = kern.level_count(r)
            want = kern.points(r)
            ok = abs(got - want) < 1e-5
            passed &= ok
            out.append({"kernel": label, "level": r, "integral": got, "points": want})

    for n in range(1, 5):
        record(f"gue C{n}", gue_minor_kernel(FieldContext("C", n)), range(1, n + 1))
    for n in (3, 5):
        record(f"gue R{n}", gue_minor_kernel(FieldContext("R", n)), range(2, n + 1))
    record("guer 5", guer_kernel(5), range(1, 6))
    for field_, lam in (("C", (1.5, -0.5)), ("H", (1.5, 0.5))):
        ctx = FieldContext(field_, 2)
        record(f"rectangular {field_}2", rectangular_kernel(ctx, RadialPoint(ctx, lam), 3), range(1, 4))
    return CheckResult(8, "kernel level counts", bool(passed), seed, budget, stats={"levels": out})


def _gue_minor_points(rng: np.random.Generator, size: int) -> list[np.ndarray]:
    Z = rng.standard_normal((size, 2, 2)) + 1j * rng.standard_normal((size, 2, 2))
    H = (Z + np.conj(np.swapaxes(Z, 1, 2))) / 2
    top = H[:, 0, 0].real
    ev = np.linalg.eigvalsh(H)
    return [np.array([[1, top[t]], [2, ev[t, 0]], [2, ev[t, 1]]]) for t in range(size)]


def _pair_integral(func, a: tuple, b: tuple, nodes: int = 48) -> float:
    """Mean of func(x, y) over the box a x b, split along the diagonal y = x.

    The cross-level kernel jumps on y = x, so boxes that straddle it are
    integrated triangle by triangle, each smooth.
    """
    t, w = np.polynomial.legendre.leggauss(nodes)
    t, w = (t + 1) / 2, w / 2

    def box(x0, x1, y0, y1):
        X, Y = np.meshgrid(x0 + (x1 - x0) * t, y0 + (y1 - y0) * t, indexing="ij")
        return (x1 - x0) * (y1 - y0) * float(w @ func(X, Y) @ w)

    def triangle(lo, hi, upper):
        # {lo < x < hi, lo < y < x} or its mirror, by the collapsed square
        U, V = np.meshgrid(t, t, indexing="ij")
        X = lo + (hi - lo) * U
        Y = lo + (X - lo) * V
        jac = (hi - lo) * (X - lo)
        vals = func(Y, X) if upper else func(X, Y)
        return float(w @ (vals * jac) @ w)

    area = (a[1] - a[0]) * (b[1] - b[0])
    if a == b:
        return (triangle(a[0], a[1], False) + triangle(a[0], a[1], True)) / area
    return box(*a, *b) / area


def check_two_point(budget: str = "full", seed: int = 9) -> CheckResult:
    size = _scale(budget, 10_000, 2_000)
    rng = make_rng(seed)
    edges = np.array([-3.5, -0.8, 0.8, 3.5])
    est = estimate_correlations(_gue_minor_points(rng, size), edges, levels=(1, 2), min_samples=min(size, 1000))
    K = gue_minor_kernel(FieldContext("C", 2))
    cells = [(lvl, b) for lvl in (1, 2) for b in range(edges.size - 1)]
    res = []
    passed = True
    for i, (r, bi) in enumerate(cells):
        for j, (s, bj) in enumerate(cells[i:], start=i):
            det2 = lambda x, y: K(r, x, r, x) * K(s, y, s, y) - K(r, x, s, y) * K(s, y, r, x)
            exact = _pair_integral(det2, (edges[bi], edges[bi + 1]), (edges[bj], edges[bj + 1]))
            a, b = est.cell(r, bi), est.cell(s, bj)
            val, se = float(est.rho2[a, b]), float(est.rho2_se[a, b])
            if not np.isfinite(val):
                continue
            ok = abs(val - exact) <= 3 * se if se > 0 else abs(exact) < 1e-6
            passed &= ok
            res.append({"cells": [[r, bi], [s, bj]], "exact": exact, "estimate": val, "se": se})
    return CheckResult(9, "determinantal two-point check", bool(passed), seed, budget, stats={"pairs": res, "samples": size})


def check_guer_consistency(budget: str = "full", seed: int = 0) -> CheckResult:
    n = 5
    theorem = gue_minor_kernel(FieldContext("R", n))
    explicit = guer_kernel(n)
    grid = np.linspace(0.05, 3.5, 9 if budget == "full" else 5)
    X, Y = np.meshgrid(grid, grid, indexing="ij")
    worst = 0.0
    for r in range(2, n + 1):
        for s in range(2, n + 1):
            worst = max(worst, float(np.max(np.abs(theorem(r, X, s, Y) - explicit(r, X, s, Y)))))
    return CheckResult(10, "triangular kernel vs explicit real kernel", worst < 1e-8, seed, budget, stats={"max_abs_diff": worst})


# ---------------------------------------------------------------------------
# 11, 12: limits and equivalences


def check_semiclassical(budget: str = "full", seed: int = 11) -> CheckResult:
    ctx = FieldContext("C", 2)
    sched = SemiclassicalSchedule(ctx, (1.0, 0.0), "branch", target_samples=_scale(budget, 200_000, 50_000), seed=seed)
    ks = (10, 40, 100)
    dists = [float(semiclassical_distance(sched, k)) for k in ks]
    ok = all(a > b for a, b in zip(dists[:-1], dists[1:])) and dists[-1] < 0.05
    return CheckResult(11, "semiclassical convergence", ok, seed, budget, stats={"k": list(ks), "w1": dists})


def check_odd_real_quaternion(budget: str = "full", seed: int = 12) -> CheckResult:
    size = _scale(budget, 50_000, 10_000)
    rng = make_rng(seed)
    lam, theta = (2.0, 1.0), 1.3
    a = perturb_spectral_batch(RadialPoint(FieldContext("R", 5), lam), theta, rng, size)
    b = perturb_spectral_batch(RadialPoint(FieldContext("H", 2), lam), theta, rng, size)
    res = []
    passed = True
    for j in range(2):
        ks = stats.ks_2samp(a[:, j], b[:, j])
        passed &= ks.pvalue > ALPHA
        res.append({"coordinate": j, "ks": float(ks.statistic), "p": float(ks.pvalue)})
    return CheckResult(12, "odd real vs quaternionic perturbation", bool(passed), seed, budget, stats={"marginals": res})


CRITERIA: dict[int, Callable[..., CheckResult]] = {
    1: check_counting,
    2: check_tensor_dimension,
    3: check_minor_uniformity,
    4: check_two_samplers,
    5: check_rank_one_gamma,
    6: check_fourier,
    7: check_lue_histograms,
    8: check_level_counts,
    9: check_two_point,
    10: check_guer_consistency,
    11: check_semiclassical,
    12: check_odd_real_quaternion,
}

SUITES: dict[str, tuple[int, ...]] = {
    "counts": (1, 2),
    "minors": (3, 4),
    "gamma": (5,),
    "fourier": (6,),
    "lue": (7,),
    "kernels": (8, 9, 10),
    "semiclassical": (11,),
    "equivalence": (12,),
    "all": tuple(range(1, 13)),
}


def run_criterion(number: int, budget: str = "full", seed: int | None = None) -> CheckResult:
    func = CRITERIA[number]
    t0 = time.perf_counter()
    res = func(budget=budget) if seed is None else func(budget=budget, seed=seed)
    res.seconds = time.perf_counter() - t0
    return res


def run_suite(name: str, budget: str = "full", seed: int | None = None) -> list[CheckResult]:
    if name not in SUITES:
        raise KeyError(name)
    return [run_criterion(c, budget, seed) for c in SUITES[name]]
