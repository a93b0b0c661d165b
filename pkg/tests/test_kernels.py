"""Both kernel flavors must return bitwise-identical results."""

import os
import subprocess
import sys

import numpy as np
import pytest

from whentopost import kernels

needs_numba = pytest.mark.skipif(
    not kernels.NUMBA_ENABLED, reason="numba flavor disabled in this process"
)


def hawkes_args():
    knots = np.array([0.0, 30.0, 70.0, 100.0])
    rates = np.array([8.0, 0.0, 12.0])
    return dict(t0=0.0, tf=100.0, knots=knots, rates=rates, alpha=0.8, w=5.0, cap_hint=64)


def redqueen_args(rng):
    feed_times = np.sort(rng.uniform(0.0, 50.0, size=60))
    feed_followers = rng.integers(0, 2, size=60)
    knots = np.array([0.0, 20.0, 35.0, 50.0])
    clock_rates = np.array([[0.5, 0.0, 0.9], [0.3, 0.7, 0.2]])
    return dict(
        feed_times=feed_times,
        feed_followers=feed_followers,
        init_ranks=np.array([3, 0], dtype=np.int64),
        knots=knots,
        clock_rates=clock_rates,
        t0=0.0,
        tf=50.0,
        max_posts=1_000_000,
    )


@needs_numba
def test_hawkes_flavors_match_bitwise():
    impls = kernels.IMPLEMENTATIONS["sample_hawkes_times"]
    args = hawkes_args()
    for seed in range(10):
        got_nb = impls["numba"](rng=np.random.default_rng(seed), **args)
        got_py = impls["fallback"](rng=np.random.default_rng(seed), **args)
        assert got_nb.tobytes() == got_py.tobytes()
        assert len(got_nb) > 0


@needs_numba
def test_redqueen_flavors_match_bitwise():
    impls = kernels.IMPLEMENTATIONS["redqueen_posts"]
    for seed in range(10):
        args = redqueen_args(np.random.default_rng(1000 + seed))
        got_nb = impls["numba"](rng=np.random.default_rng(seed), **args)
        got_py = impls["fallback"](rng=np.random.default_rng(seed), **args)
        assert got_nb.tobytes() == got_py.tobytes()


@needs_numba
def test_redqueen_flavors_match_with_post_cap():
    impls = kernels.IMPLEMENTATIONS["redqueen_posts"]
    args = redqueen_args(np.random.default_rng(7))
    args["max_posts"] = 3
    got_nb = impls["numba"](rng=np.random.default_rng(7), **args)
    got_py = impls["fallback"](rng=np.random.default_rng(7), **args)
    assert got_nb.tobytes() == got_py.tobytes()
    assert len(got_nb) <= 3


def test_oracle_flavors_match_bitwise():
    # the numpy twin is deterministic, so this holds with or without numba
    impls = kernels.IMPLEMENTATIONS["oracle_decisions"]
    flavors = [impls["fallback"]]
    if impls["numba"] is not None:
        flavors.append(impls["numba"])
    rng = np.random.default_rng(3)
    for _ in range(50):
        m = int(rng.integers(1, 15))
        widths = rng.uniform(0.05, 2.0, size=m + 1)
        q = float(np.exp(rng.uniform(np.log(0.01), np.log(100.0))))
        s = float(np.exp(rng.uniform(np.log(0.1), np.log(10.0))))
        r0 = int(rng.integers(0, 4))
        results = [f(widths, r0, q, s) for f in flavors]
        for got in results[1:]:
            assert got.tobytes() == results[0].tobytes()


_SUBPROCESS_SCRIPT = """
import numpy as np
from whentopost import kernels

print(int(kernels.NUMBA_ENABLED))
knots = np.array([0.0, 30.0, 70.0, 100.0])
rates = np.array([8.0, 0.0, 12.0])
out = kernels.sample_hawkes_times(
    0.0, 100.0, knots, rates, 0.8, 5.0, np.random.default_rng(42), 64
)
print(out.tobytes().hex())
"""


def run_with_flag(flag_value):
    env = dict(os.environ)
    if flag_value is None:
        env.pop("WHENTOPOST_NUMBA", None)
    else:
        env["WHENTOPOST_NUMBA"] = flag_value
    proc = subprocess.run(
        [sys.executable, "-c", _SUBPROCESS_SCRIPT],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    enabled_line, hex_line = proc.stdout.split()
    return int(enabled_line), hex_line


def test_env_flag_selects_flavor_and_output_is_flag_invariant():
    expected = kernels.IMPLEMENTATIONS["sample_hawkes_times"]["fallback"](
        0.0,
        100.0,
        np.array([0.0, 30.0, 70.0, 100.0]),
        np.array([8.0, 0.0, 12.0]),
        0.8,
        5.0,
        np.random.default_rng(42),
        64,
    ).tobytes().hex()
    for flag, want_enabled in [("0", 0), ("off", 0), ("false", 0), ("1", 1), (None, 1)]:
        enabled, got_hex = run_with_flag(flag)
        assert enabled == want_enabled, f"flag={flag!r}"
        assert got_hex == expected, f"flag={flag!r}"
