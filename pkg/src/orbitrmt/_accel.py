"""Optional numba acceleration for the loop-heavy kernels.

Set ``ORBITRMT_DISABLE_NUMBA=1`` to force the pure numpy/Python code paths.
Both paths consume identical pre-drawn random numbers. The witness counter
is exact on either path; hit-and-run chains agree to rounding over short
runs, and since the chain does not damp rounding differences, long runs can
drift apart while still sampling the same law.
"""

from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("ORBITRMT_DISABLE_NUMBA", "").strip().lower()
_DISABLED = _FLAG in ("1", "true", "yes", "on")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit

    NUMBA_ENABLED = True
except ImportError:  # numba missing or switched off
    NUMBA_ENABLED = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(func):
            return func

        return wrap


def _hit_and_run_py(A, b, x0, directions, uniforms, thin, out):
    x = x0.copy()
    n_keep = out.shape[0]
    burn = directions.shape[0] - n_keep * thin
    kept = 0
    for s in range(directions.shape[0]):
        d = directions[s]
        Ad = A @ d
        slack = b - A @ x
        lo = -np.inf
        hi = np.inf
        pos = Ad > 1e-300
        neg = Ad < -1e-300
        if pos.any():
            hi = np.min(slack[pos] / Ad[pos])
        if neg.any():
            lo = np.max(slack[neg] / Ad[neg])
        if hi < lo:
            hi = lo
        x = x + (lo + (hi - lo) * uniforms[s]) * d
        if s >= burn and (s - burn + 1) % thin == 0 and kept < n_keep:
            out[kept] = x
            kept += 1
    return out


@njit(cache=True)
def _hit_and_run_nb(A, b, x0, directions, uniforms, thin, out):  # pragma: no cover - compiled
    m, d = A.shape
    x = x0.copy()
    n_keep = out.shape[0]
    burn = directions.shape[0] - n_keep * thin
    kept = 0
    for s in range(directions.shape[0]):
        lo = -np.inf
        hi = np.inf
        for i in range(m):
            ad = 0.0
            ax = 0.0
            for j in range(d):
                ad += A[i, j] * directions[s, j]
                ax += A[i, j] * x[j]
            sl = b[i] - ax
            if ad > 1e-300:
                t = sl / ad
                if t < hi:
                    hi = t
            elif ad < -1e-300:
                t = sl / ad
                if t > lo:
                    lo = t
        if hi < lo:
            hi = lo
        t = lo + (hi - lo) * uniforms[s]
        for j in range(d):
            x[j] += t * directions[s, j]
        if s >= burn and (s - burn + 1) % thin == 0 and kept < n_keep:
            for j in range(d):
                out[kept, j] = x[j]
            kept += 1
    return out


def hit_and_run(A, b, x0, directions, uniforms, thin, keep):
    """Run a hit-and-run chain inside the polytope ``{x : A x <= b}``.

    ``directions`` (steps x d) and ``uniforms`` (steps,) are drawn by the
    caller. The first ``steps - keep * thin`` iterations are burn-in, after
    which every ``thin``-th state is stored. Returns an array (keep, d).
    """
    A = np.ascontiguousarray(A, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    directions = np.ascontiguousarray(directions, dtype=np.float64)
    uniforms = np.ascontiguousarray(uniforms, dtype=np.float64)
    out = np.zeros((keep, A.shape[1]))
    if NUMBA_ENABLED:
        return _hit_and_run_nb(A, b, x0, directions, uniforms, int(thin), out)
    return _hit_and_run_py(A, b, x0, directions, uniforms, int(thin), out)


@njit(cache=True)
def _witness_count_nb(lo, hi, weights, target):  # pragma: no cover - compiled
    # count integer z with lo <= z <= hi componentwise and sum(weights*z) == target
    k = lo.shape[0]
    if k == 0:
        return 1 if target == 0 else 0
    z = lo.copy()
    count = 0
    while True:
        s = 0
        for i in range(k):
            s += weights[i] * z[i]
        if s == target:
            count += 1
        i = 0
        while i < k:
            if z[i] < hi[i]:
                z[i] += 1
                break
            z[i] = lo[i]
            i += 1
        if i == k:
            break
    return count


def _witness_count_py(lo, hi, weights, target):
    k = lo.shape[0]
    if k == 0:
        return 1 if target == 0 else 0
    if np.any(hi < lo):
        return 0
    grids = np.meshgrid(*[np.arange(l, h + 1) for l, h in zip(lo, hi)], indexing="ij")
    s = np.zeros(grids[0].shape, dtype=np.int64)
    for w, g in zip(weights, grids):
        s += w * g
    return int(np.count_nonzero(s == target))


def witness_count(lo, hi, weights, target):
    """Count integer points ``lo <= z <= hi`` with ``weights . z == target``."""
    lo = np.ascontiguousarray(lo, dtype=np.int64)
    hi = np.ascontiguousarray(hi, dtype=np.int64)
    weights = np.ascontiguousarray(weights, dtype=np.int64)
    if lo.shape[0] and np.any(hi < lo):
        return 0
    if NUMBA_ENABLED:
        return int(_witness_count_nb(lo, hi, weights, int(target)))
    return _witness_count_py(lo, hi, weights, int(target))
