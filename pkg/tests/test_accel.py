import json
import os
import subprocess
import sys

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from orbitrmt import _accel


def cube(d):
    A = np.vstack([np.eye(d), -np.eye(d)])
    b = np.concatenate([np.ones(d), np.zeros(d)])
    return A, b


def draws(rng, steps, d):
    u = rng.standard_normal((steps, d))
    return u / np.linalg.norm(u, axis=1, keepdims=True), rng.random(steps)


def test_hit_and_run_paths_agree(rng):
    A, b = cube(3)
    A = np.vstack([A, np.ones((1, 3))])  # cut the cube by x + y + z <= 2
    b = np.append(b, 2.0)
    d, u = draws(rng, 5000, 3)
    x0 = np.full(3, 0.3)
    a = _accel._hit_and_run_py(A, b, x0, d, u, 10, np.zeros((200, 3)))
    c = _accel._hit_and_run_nb(A, b, x0, d, u, 10, np.zeros((200, 3)))
    assert np.allclose(a, c, atol=1e-10)
    assert np.all(a @ A.T <= b + 1e-12)


def test_hit_and_run_uniform_on_cube(rng):
    A, b = cube(2)
    d, u = draws(rng, 200_000, 2)
    x = _accel.hit_and_run(A, b, np.full(2, 0.5), d, u, 10, 19_000)
    assert abs(x.mean() - 0.5) < 0.01
    assert abs(np.mean(x[:, 0] < 0.25) - 0.25) < 0.015


def brute(lo, hi, w, t):
    import itertools

    return sum(1 for z in itertools.product(*[range(a, b + 1) for a, b in zip(lo, hi)]) if np.dot(w, z) == t)


@given(st.integers(0, 4), st.integers(0, 2**31))
def test_witness_count_paths_agree(k, seed):
    rng = np.random.default_rng(seed)
    lo = rng.integers(-3, 3, k)
    hi = lo + rng.integers(-1, 4, k)
    w = rng.integers(1, 3, k)
    t = int(rng.integers(-6, 10))
    py = _accel._witness_count_py(lo.astype(np.int64), hi.astype(np.int64), w.astype(np.int64), t)
    expected = brute(lo, hi, w, t) if k else int(t == 0)
    assert _accel.witness_count(lo, hi, w, t) == py == expected
    if np.all(hi >= lo):
        nb = _accel._witness_count_nb(lo.astype(np.int64), hi.astype(np.int64), w.astype(np.int64), t)
        assert int(nb) == expected


SNIPPET = """
import json, numpy as np
from orbitrmt import _accel
from orbitrmt.gtpolytope import GTSpec, sample_uniform_walk_batch
spec = GTSpec.of("C", 3, (2.0, 1.0, 0.0))
x = sample_uniform_walk_batch(spec, np.random.default_rng(3), 50, thin=5)
print(json.dumps({"numba": _accel.NUMBA_ENABLED, "x": x.tolist()}))
"""


def run_snippet(disable):
    env = dict(os.environ)
    env.pop("ORBITRMT_DISABLE_NUMBA", None)
    if disable:
        env["ORBITRMT_DISABLE_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", SNIPPET], env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def test_environment_switch_gives_same_samples():
    off = run_snippet(True)
    assert off["numba"] is False
    on = run_snippet(False)
    assert np.allclose(on["x"], off["x"], atol=1e-9)
