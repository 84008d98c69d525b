"""Compare the numba kernels with the pure numpy/Python fallbacks.

    python3 benchmarks/bench_accel.py [--repeat 3]

Both paths receive identical inputs. Hit-and-run does not damp rounding
differences, so long chains may drift apart; the script checks exact
agreement on a short prefix and agreement of the coordinate means on the
full run before reporting timings.
"""

import argparse
import time

import numpy as np

from orbitrmt import _accel
from orbitrmt.gtpolytope import GTSpec, _walk_setup


def best_of(func, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = func()
        times.append(time.perf_counter() - t0)
    return min(times), out


def polytope():
    # free coordinates of the GT polytope of (4, 3, 2, 1, 0) over C, dimension 10
    A, b, x0, _ = _walk_setup(GTSpec.of("C", 5, (4.0, 3.0, 2.0, 1.0, 0.0)))
    return A, b, x0


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--steps", type=int, default=200_000)
    args = ap.parse_args()
    if not _accel.NUMBA_ENABLED:
        print("numba is unavailable or disabled; only the fallback would run")
        return

    rng = np.random.default_rng(0)
    A, b, x0 = polytope()
    dim = A.shape[1]
    d = rng.standard_normal((args.steps, dim))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    u = rng.random(args.steps)
    keep = args.steps // 20
    short = (d[:2000], u[:2000], 20, np.zeros((100, dim)))
    if not np.allclose(_accel._hit_and_run_py(A, b, x0, *short), _accel._hit_and_run_nb(A, b, x0, *short), atol=1e-9):
        raise SystemExit("hit_and_run: short chains differ")

    lo = np.zeros(6, dtype=np.int64)
    hi = np.full(6, 9, dtype=np.int64)
    w = np.array([1, 2, 1, 2, 1, 2], dtype=np.int64)
    _accel._witness_count_nb(lo[:1], hi[:1], w[:1], 0)  # compile

    cases = [
        (
            f"hit_and_run ({args.steps} steps, d={dim})",
            lambda: _accel._hit_and_run_py(A, b, x0, d, u, 20, np.zeros((keep, dim))),
            lambda: _accel._hit_and_run_nb(A, b, x0, d, u, 20, np.zeros((keep, dim))),
            lambda a, c: np.allclose(a.mean(axis=0), c.mean(axis=0), atol=0.05),
        ),
        (
            "witness_count (10^6 box points)",
            lambda: _accel._witness_count_py(lo, hi, w, 40),
            lambda: _accel._witness_count_nb(lo, hi, w, 40),
            lambda a, c: a == c,
        ),
    ]
    print(f"{'kernel':40s} {'fallback s':>11s} {'numba s':>9s} {'speedup':>8s}")
    for name, slow, fast, agree in cases:
        t_py, a = best_of(slow, args.repeat)
        t_nb, c = best_of(fast, args.repeat)
        if not agree(a, c):
            raise SystemExit(f"{name}: outputs differ")
        print(f"{name:40s} {t_py:11.3f} {t_nb:9.3f} {t_py / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
