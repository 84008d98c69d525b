"""Command-line front end: ``orbitrmt {sample,density,kernel,count,dim,verify}``.

Exit codes: 0 on success, 1 when a verification check fails, 2 on usage or
configuration errors. Replica ``i`` always draws from child ``i`` of
``SeedSequence(seed)``, so output does not depend on ``--threads``.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .acceptance import SUITES, run_suite
from .combinat import gt_count, gt_enumerate_count
from .detproc import gue_minor_kernel, guer_kernel, rectangular_kernel
from .ensembles import FieldContext, RadialPoint, StructuredMatrix, dumps_compact, radial_part, sample_gaussian_hermitian
from .gtpolytope import GTSpec, level_labels, level_lengths, mu_lambda_density, sample_uniform_spectral_batch, sample_uniform_walk_batch
from .perturbation import (
    gue_density,
    lue_chain_batch,
    lue_density,
    lue_matrix_batch,
    nu_lambda_density,
    nu_lambda_theta_density,
    perturb_spectral_batch,
    wishart_general_density,
)
from .weylcore import asym_dim, weyl_dim

TARGETS = ("gue", "lue", "gt_uniform", "perturb", "chain")
DENSITIES = ("mu_lambda", "nu_lambda_theta", "nu_lambda", "lue", "wishart", "gue")
KERNELS = ("gue", "guer", "rectangular")
GRID_LIMIT = 1_000_000


class UsageError(Exception):
    """Bad flag combination or parameter; reported with exit code 2."""


# ---------------------------------------------------------------------------
# parsing


def _vector(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _grid(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("grid must be lo:hi:points")
    lo, hi, pts = float(parts[0]), float(parts[1]), int(parts[2])
    if not hi > lo or pts < 2:
        raise argparse.ArgumentTypeError("grid needs hi > lo and at least 2 points")
    return lo, hi, pts


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value file; command-line flags take precedence")
    p.add_argument("--field", choices=("R", "C", "H"))
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--lambda", dest="lam", type=_vector)
    p.add_argument("--theta", type=float)
    p.add_argument("--alpha", type=_vector)
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--output", help="output path (default: stdout)")


DEFAULTS = {"seed": 0, "replicas": 1, "format": None, "threads": os.cpu_count() or 1, "budget": "full"}
CONVERT = {
    "n": int, "k": int, "m": int, "seed": int, "replicas": int, "threads": int,
    "theta": float, "lam": _vector, "lambda": _vector, "alpha": _vector, "grid": _grid,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="orbitrmt", description="Invariant random matrix ensembles over R, C, H.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw samples (one record per line)")
    _common(p)
    p.add_argument("--target", choices=TARGETS)
    p.add_argument("--replicas", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--method", choices=("spectral", "walk"), default="spectral")

    p = sub.add_parser("density", help="evaluate a density on a tensor grid (CSV)")
    _common(p)
    p.add_argument("--name", choices=DENSITIES)
    p.add_argument("--grid", type=_grid, help="lo:hi:points for every free coordinate")

    p = sub.add_parser("kernel", help="evaluate a correlation kernel")
    _common(p)
    p.add_argument("--kind", choices=KERNELS)
    p.add_argument("--grid", type=_grid, help="lo:hi:points; write --grid=-3:3:31 when lo is negative")
    p.add_argument("--levels", type=_vector, help="levels to include (default: all)")
    p.add_argument("--counts", action="store_true", help="print integrated level counts as JSON")

    p = sub.add_parser("count", help="count integer Gelfand-Tsetlin patterns")
    _common(p)
    p.add_argument("--brute", action="store_true", help="also walk every pattern")

    p = sub.add_parser("dim", help="Weyl dimension and asymptotic dimension")
    _common(p)

    p = sub.add_parser("verify", help="run acceptance checks; JSON report")
    _common(p)
    p.add_argument("--suite")
    p.add_argument("--budget", choices=("full", "small"))
    return parser


def _read_config(path: str) -> dict:
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from exc
    for num, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{num}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        try:
            out["lam" if key == "lambda" else key] = CONVERT.get(key, str)(val)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"{path}:{num}: bad value for {key}: {exc}") from exc
    return out


def resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Merge config-file values and defaults into unset flags."""
    if getattr(args, "config", None):
        for key, val in _read_config(args.config).items():
            if not hasattr(args, key):
                raise UsageError(f"unknown config key {key!r} for {args.command}")
            if getattr(args, key) is None:
                setattr(args, key, val)
    for key, val in DEFAULTS.items():
        if key == "seed" and args.command == "verify":
            continue
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, val)
    return args


def _need(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            flag = "--lambda" if name == "lam" else f"--{name}"
            raise UsageError(f"{args.command} needs {flag}")


def _ctx(args) -> FieldContext:
    _need(args, "field", "n")
    if args.n < 1:
        raise UsageError("n must be >= 1")
    return FieldContext(args.field, args.n)


def _radial(ctx: FieldContext, lam) -> RadialPoint:
    if len(lam) != ctx.n_tilde:
        raise UsageError(f"lambda needs {ctx.n_tilde} coordinates for field {ctx.field}, n={ctx.n}")
    pt = RadialPoint(ctx, np.asarray(lam, dtype=float))
    pt.check()
    return pt


# ---------------------------------------------------------------------------
# sample


def _replica_rngs(seed: int, count: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def _sampler(args):
    ctx = _ctx(args)
    t = args.target
    if t == "gue":
        return lambda rng: [sample_gaussian_hermitian(ctx, rng)]
    if t == "lue":
        _need(args, "k")
        if args.k < 1:
            raise UsageError("k must be >= 1")

        def lue(rng):
            S = lue_matrix_batch(ctx, args.k, rng, 1)[0]
            return [StructuredMatrix(ctx, "hermitian_P", 1j * S if ctx.field == "R" else S)]

        return lue
    if t == "gt_uniform":
        _need(args, "lam")
        spec = GTSpec(ctx, _radial(ctx, args.lam))
        if args.method == "walk":
            return lambda rng: [sample_uniform_walk_batch(spec, rng, 1)[0]]
        return lambda rng: [sample_uniform_spectral_batch(spec, rng, 1)[0]]
    if t == "perturb":
        _need(args, "lam", "theta")
        lam = _radial(ctx, args.lam)
        if args.theta < 0:
            raise UsageError("theta must be nonnegative")
        return lambda rng: [perturb_spectral_batch(lam, args.theta, rng, 1)[0]]
    _need(args, "k")
    if args.k < 1:
        raise UsageError("k must be >= 1")
    start = _radial(ctx, args.lam) if args.lam is not None else None
    return lambda rng: [lue_chain_batch(ctx, args.k, rng, 1, start)[0]]


def _sample_records(args, index: int, result) -> list:
    """JSON objects or CSV rows for one replica."""
    t = args.target
    out = []
    if args.format == "json":
        for item in result:
            if isinstance(item, StructuredMatrix):
                rec = item.to_dict()
            elif t == "gt_uniform":
                ctx = FieldContext(args.field, args.n)
                cuts = np.cumsum([0] + level_lengths(ctx))
                rec = {"field": ctx.field, "n": ctx.n, "levels": [item[a:b] for a, b in zip(cuts[:-1], cuts[1:])]}
            else:
                rec = {"field": args.field, "n": args.n, "radial": item}
            rec["replica"] = index
            out.append(dumps_compact(rec))
        return out
    for item in result:
        if isinstance(item, StructuredMatrix):
            out.append([index] + [repr(float(v)) for v in radial_part(item).coords])
        elif t == "chain":
            out += [[index, j + 1] + [repr(float(v)) for v in row] for j, row in enumerate(item)]
        else:
            out.append([index] + [repr(float(v)) for v in item])
    return out


def _sample_header(args) -> list[str]:
    ctx = FieldContext(args.field, args.n)
    if args.target == "gt_uniform":
        cols = []
        for lab, m in zip(level_labels(ctx), level_lengths(ctx)):
            cols += [f"x[{lab}]_{i + 1}" for i in range(m)]
        return ["replica"] + cols
    cols = [f"lambda_{i + 1}" for i in range(ctx.n_tilde)]
    return ["replica", "step"] + cols if args.target == "chain" else ["replica"] + cols


def cmd_sample(args, out) -> int:
    _need(args, "target")
    if args.replicas < 1:
        raise UsageError("replicas must be >= 1")
    if args.threads < 1:
        raise UsageError("threads must be >= 1")
    args.format = args.format or "json"
    draw = _sampler(args)
    rngs = _replica_rngs(args.seed, args.replicas)
    with ThreadPoolExecutor(max_workers=min(args.threads, args.replicas)) as pool:
        results = list(pool.map(draw, rngs))  # ordered by replica index
    if args.format == "json":
        for i, res in enumerate(results):
            for line in _sample_records(args, i, res):
                out.write(line + "\n")
    else:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(_sample_header(args))
        for i, res in enumerate(results):
            w.writerows(_sample_records(args, i, res))
    return 0


# ---------------------------------------------------------------------------
# density


def _density_setup(args):
    """(function of one point, coordinate names, default grid range)."""
    ctx = _ctx(args)
    name = args.name
    if name == "mu_lambda":
        _need(args, "lam")
        if ctx.n < 2:
            raise UsageError("mu_lambda needs n >= 2")
        lam = _radial(ctx, args.lam)
        sub = ctx.with_n(ctx.n - 1)
        rank_one = lam.coords[0] > 0 and not np.any(lam.coords[1:])
        free = 1 if rank_one else sub.n_tilde
        pad = sub.n_tilde - free
        f = lambda b: mu_lambda_density(lam, list(b) + [0.0] * pad)
        hi = float(np.abs(lam.coords).max())
        lo = float(lam.coords.min()) if ctx.field == "C" else (-hi if sub.chamber_type == "D" and not rank_one else 0.0)
        return f, [f"beta_{i + 1}" for i in range(free)], (lo, hi)
    if name == "nu_lambda_theta":
        _need(args, "lam", "theta")
        lam = _radial(ctx, args.lam)
        theta = args.theta
        if theta <= 0:
            raise UsageError("theta must be positive")
        hi = float(np.abs(lam.coords).max()) + theta
        if ctx.field == "C":
            trace = float(lam.coords.sum()) + theta
            f = lambda b: nu_lambda_theta_density(lam, theta, list(b) + [trace - sum(b)])
            return f, [f"beta_{i + 1}" for i in range(ctx.n - 1)], (float(lam.coords.min()), hi)
        f = lambda b: nu_lambda_theta_density(lam, theta, list(b))
        lo = -hi if ctx.chamber_type == "D" else 0.0
        return f, [f"beta_{i + 1}" for i in range(ctx.n_tilde)], (lo, hi)
    if name == "nu_lambda":
        _need(args, "lam")
        lam = _radial(ctx, args.lam)
        f = lambda b: nu_lambda_density(lam, list(b))
        hi = float(np.abs(lam.coords).max()) + 10.0
        lo = float(lam.coords.min()) if ctx.field == "C" else (-hi if ctx.chamber_type == "D" else 0.0)
        return f, [f"beta_{i + 1}" for i in range(ctx.n_tilde)], (lo, hi)
    if name == "lue":
        _need(args, "k")
        m = min(ctx.n_tilde, ctx.with_n(args.k).n_tilde)
        f = lambda x: lue_density(ctx, args.k, list(x))
        return f, [f"lambda_{i + 1}" for i in range(m)], (0.0, 10.0 + 3 * m)
    if name == "wishart":
        _need(args, "k", "alpha")
        kt = ctx.with_n(args.k).n_tilde
        f = lambda x: wishart_general_density(ctx, args.k, args.alpha, list(x))
        return f, [f"lambda_{i + 1}" for i in range(kt)], (0.0, 10.0 * max(args.alpha))
    f = lambda x: gue_density(ctx, list(x))
    lo = -6.0 if ctx.field == "C" else 0.0
    return f, [f"lambda_{i + 1}" for i in range(ctx.n_tilde)], (lo, 6.0)


def cmd_density(args, out) -> int:
    _need(args, "name")
    func, names, (lo, hi) = _density_setup(args)
    lo, hi, pts = args.grid if args.grid is not None else (lo, hi, 41)
    if pts ** len(names) > GRID_LIMIT:
        raise UsageError(f"grid has {pts}^{len(names)} points, above the limit {GRID_LIMIT}")
    axis = np.linspace(lo, hi, pts)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(names + ["density"])
    for point in itertools.product(axis, repeat=len(names)):
        w.writerow([repr(float(v)) for v in point] + [repr(float(func(point)))])
    return 0


# ---------------------------------------------------------------------------
# kernel


def _kernel(args):
    kind = args.kind
    if kind == "guer":
        _need(args, "n")
        return guer_kernel(args.n)
    ctx = _ctx(args)
    if kind == "gue":
        return gue_minor_kernel(ctx)
    _need(args, "lam", "m")
    return rectangular_kernel(ctx, _radial(ctx, args.lam), args.m)


def cmd_kernel(args, out) -> int:
    _need(args, "kind")
    K = _kernel(args)
    levels = list(K.levels) if args.levels is None else [int(v) for v in args.levels]
    for r in levels:
        if r not in K.levels:
            raise UsageError(f"level {r} is outside {K.levels.start}..{K.levels.stop - 1}")
    if args.counts:
        rec = {"levels": [{"level": r, "integral": K.level_count(r), "points": K.points(r)} for r in levels]}
        out.write(dumps_compact(rec) + "\n")
        return 0
    default = (-4.0, 4.0, 21) if K.reference_measure == "lebesgue(R)" else (0.0, 4.0, 21)
    lo, hi, pts = args.grid if args.grid is not None else default
    axis = np.linspace(lo, hi, pts)
    X, Y = np.meshgrid(axis, axis, indexing="ij")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["r", "x", "s", "y", "K"])
    for r in levels:
        for s in levels:
            V = np.broadcast_to(K(r, X, s, Y), X.shape)
            for i, j in itertools.product(range(pts), repeat=2):
                w.writerow([r, repr(float(axis[i])), s, repr(float(axis[j])), repr(float(V[i, j]))])
    return 0


# ---------------------------------------------------------------------------
# count, dim, verify


def _integral_weight(args, ctx) -> list[int]:
    _need(args, "lam")
    if any(not float(v).is_integer() for v in args.lam):
        raise UsageError("lambda must be integral")
    return [int(v) for v in args.lam]


def cmd_count(args, out) -> int:
    ctx = _ctx(args)
    lam = _integral_weight(args, ctx)
    rec = {"field": ctx.field, "n": ctx.n, "lambda": lam, "gt_count": gt_count(ctx, lam)}
    if args.brute:
        rec["enumerated"] = gt_enumerate_count(ctx, lam)
    out.write(dumps_compact(rec) + "\n")
    return 0


def cmd_dim(args, out) -> int:
    ctx = _ctx(args)
    _need(args, "lam")
    pt = _radial(ctx, args.lam)
    rec = {"field": ctx.field, "n": ctx.n, "lambda": pt.coords, "asym_dim": asym_dim(pt)}
    if all(float(v).is_integer() for v in args.lam):
        rec["weyl_dim"] = weyl_dim(ctx, [int(v) for v in args.lam])
    out.write(dumps_compact(rec) + "\n")
    return 0


def cmd_verify(args, out) -> int:
    _need(args, "suite")
    if args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}")
    # without --seed each check keeps its own fixed seed
    results = run_suite(args.suite, args.budget, args.seed)
    ok = all(r.passed for r in results)
    report = {"suite": args.suite, "budget": args.budget, "passed": ok, "checks": [r.to_dict() for r in results]}
    out.write(dumps_compact(report) + "\n")
    return 0 if ok else 1


COMMANDS = {
    "sample": cmd_sample,
    "density": cmd_density,
    "kernel": cmd_kernel,
    "count": cmd_count,
    "dim": cmd_dim,
    "verify": cmd_verify,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        resolve(args)
        buf = io.StringIO()
        code = COMMANDS[args.command](args, buf)
    except UsageError as exc:
        print(f"orbitrmt {args.command}: {exc}", file=sys.stderr)
        return 2
    except (ValueError, NotImplementedError, np.linalg.LinAlgError) as exc:
        print(f"orbitrmt {args.command}: {exc}", file=sys.stderr)
        return 2
    text = buf.getvalue()
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
