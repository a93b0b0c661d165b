"""Hot numeric kernels, compiled with numba when available.

Every kernel exists in two selectable flavors:

* a loop implementation written in nopython-compatible Python, compiled
  with ``numba.njit`` when numba is importable and the ``WHENTOPOST_NUMBA``
  environment variable is not ``0``/``false``/``off``;
* a pure NumPy/Python fallback used otherwise.

Both flavors consume ``numpy.random.Generator`` streams and draw in the
same order, so for a given seed they return bitwise-identical results.
The flag therefore only changes speed, never output.  The benchmark in
``benchmarks/bench_kernels.py`` times the two paths against each other.
"""

from __future__ import annotations

import math
import os

import numpy as np

__all__ = [
    "NUMBA_ENABLED",
    "sample_hawkes_times",
    "redqueen_posts",
    "oracle_decisions",
    "IMPLEMENTATIONS",
]

_ENV_FLAG = "WHENTOPOST_NUMBA"


def _numba_requested() -> bool:
    return os.environ.get(_ENV_FLAG, "1").strip().lower() not in ("0", "false", "off")


NUMBA_ENABLED = False
_njit = None
if _numba_requested():
    try:
        from numba import njit as _njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _njit = None


def _maybe_jit(fn):
    if NUMBA_ENABLED:
        return _njit(cache=True)(fn)
    return fn


# ---------------------------------------------------------------------------
# Self-exciting feed sampler (thinning)
# ---------------------------------------------------------------------------


def _sample_hawkes_loop(t0, tf, knots, rates, alpha, w, rng, cap_hint):
    """Sample event times of a self-exciting process on (t0, tf].

    Baseline rate is piecewise constant: ``rates[k]`` on
    ``[knots[k], knots[k+1])``; the knots must cover the window.  Each
    accepted event adds ``alpha`` to the intensity, which then relaxes
    toward the baseline at speed ``w``.

    Thinning proposal: within one baseline segment the intensity is
    non-increasing between events, so the intensity just after the last
    event (or segment entry) is a valid bound.  The bound is refreshed
    at segment knots because the baseline may step up there.
    """
    nseg = rates.shape[0]
    cap = cap_hint if cap_hint > 16 else 16
    out = np.empty(cap, np.float64)
    n = 0
    seg = 0
    while seg + 1 < nseg and knots[seg + 1] <= t0:
        seg += 1
    t = t0
    excite = 0.0  # alpha-weighted sum of exp(-w (t - t_i)) over past events
    while True:
        seg_end = knots[seg + 1]
        if seg_end > tf:
            seg_end = tf
        lam_bar = rates[seg] + excite
        if lam_bar <= 0.0:
            if seg_end >= tf:
                break
            t = seg_end
            seg += 1
            continue
        delta = rng.exponential(1.0 / lam_bar)
        if delta <= 0.0:  # underflow guard: keeps times strictly increasing
            continue
        if t + delta >= seg_end:
            if seg_end >= tf:
                break
            excite *= math.exp(-w * (seg_end - t))
            t = seg_end
            seg += 1
            continue
        t = t + delta
        excite *= math.exp(-w * delta)
        if rng.random() * lam_bar <= rates[seg] + excite:
            if n == cap:
                grown = np.empty(cap * 2, np.float64)
                grown[:n] = out[:n]
                out = grown
                cap *= 2
            out[n] = t
            n += 1
            excite += alpha
    return out[:n].copy()


# ---------------------------------------------------------------------------
# Online posting controller (superposed exponential clocks)
# ---------------------------------------------------------------------------


def _clock_first_time(tau, i, mult, knots, clock_rates, tf, e_draw):
    """First tick of a clock spawned at ``tau`` for follower ``i``.

    The clock rate over time is the piecewise-constant row
    ``clock_rates[i]``, scaled by ``mult`` (a bulk of ``mult`` identical
    clocks ticks like one clock at ``mult`` times the rate).  ``e_draw``
    is a unit-exponential variate; the tick time inverts the cumulative
    rate against it.  Returns ``inf`` when the tick falls beyond ``tf``.
    """
    nseg = clock_rates.shape[1]
    seg = np.searchsorted(knots, tau, side="right") - 1
    if seg < 0:
        seg = 0
    if seg > nseg - 1:
        seg = nseg - 1
    t = tau
    rem = e_draw
    while True:
        seg_end = knots[seg + 1]
        if seg_end > tf:
            seg_end = tf
        rate = clock_rates[i, seg] * mult
        if rate > 0.0:
            cap = rate * (seg_end - t)
            if rem <= cap:
                return t + rem / rate
            rem -= cap
        if seg_end >= tf:
            return math.inf
        t = seg_end
        seg += 1


def _redqueen_posts_loop(
    feed_times,
    feed_followers,
    init_ranks,
    knots,
    clock_rates,
    t0,
    tf,
    max_posts,
    rng,
):
    """Run the online posting policy over a merged feed, returning post times.

    One exponential clock is spawned per observed feed event (and one
    bulk clock per follower with a nonzero initial rank); the pending
    candidate is the minimum tick.  A candidate commits once the next
    feed event falls at or after it; posting resets every rank and
    discards all clocks.  Draw order: initial ranks by follower index,
    then one unit-exponential per feed event.
    """
    n_followers = clock_rates.shape[0]
    m = feed_times.shape[0]
    cand = math.inf
    for i in range(n_followers):
        if init_ranks[i] > 0:
            e = rng.standard_exponential()
            tick = _clock_first_time(
                t0, i, float(init_ranks[i]), knots, clock_rates, tf, e
            )
            if tick < cand:
                cand = tick
    cap = 64
    posts = np.empty(cap, np.float64)
    n_posted = 0
    k = 0
    while True:
        t_feed = feed_times[k] if k < m else math.inf
        t_next = cand if cand <= t_feed else t_feed
        if t_next > tf or t_next == math.inf:
            break
        if cand <= t_feed:
            if n_posted == cap:
                grown = np.empty(cap * 2, np.float64)
                grown[:n_posted] = posts[:n_posted]
                posts = grown
                cap *= 2
            posts[n_posted] = cand
            n_posted += 1
            cand = math.inf
            if n_posted >= max_posts:
                break
        else:
            j = feed_followers[k]
            e = rng.standard_exponential()
            tick = _clock_first_time(t_feed, j, 1.0, knots, clock_rates, tf, e)
            if tick < cand:
                cand = tick
            k += 1
    return posts[:n_posted].copy()


# ---------------------------------------------------------------------------
# Clairvoyant schedule (backward induction over the revealed feed)
# ---------------------------------------------------------------------------


def _oracle_decisions_loop(widths, r0, q, s):
    """Backward induction over post/hold decisions on a revealed feed.

    Decision stages k = 0..m sit at the window start and after each of
    the m feed events; ``widths[k]`` is the length of the interval that
    follows stage k.  The controlled rank recursion is
    ``r_{k+1} = (r_k + 1) * (1 - u_k)`` with stage cost
    ``0.5 * s * widths[k] * r_{k+1}**2 + 0.5 * q * u_k`` and terminal
    cost ``0.5 * r_{m+1}**2``.  Returns the 0/1 decision vector; ties
    resolve to holding.
    """
    mp1 = widths.shape[0]  # m + 1 decision stages
    size = r0 + mp1 + 1  # ranks 0 .. r0+m+1 at the terminal stage
    table = np.empty((mp1 + 1, size), np.float64)
    for r in range(size):
        table[mp1, r] = 0.5 * r * r
    for k in range(mp1 - 1, -1, -1):
        post = 0.5 * q + table[k + 1, 0]
        for r in range(r0 + k + 1):
            bumped = r + 1.0
            bumped_sq = bumped * bumped
            hold = 0.5 * s * widths[k] * bumped_sq + table[k + 1, r + 1]
            table[k, r] = post if post < hold else hold
    decisions = np.zeros(mp1, np.int8)
    r = r0
    for k in range(mp1):
        post = 0.5 * q + table[k + 1, 0]
        bumped = r + 1.0
        bumped_sq = bumped * bumped
        hold = 0.5 * s * widths[k] * bumped_sq + table[k + 1, r + 1]
        if post < hold:
            decisions[k] = 1
            r = 0
        else:
            r = r + 1
    return decisions


def _oracle_decisions_numpy(widths, r0, q, s):
    """Vectorized twin of :func:`_oracle_decisions_loop` (same bits out).

    Elementwise expressions are kept identical so both flavors agree
    bitwise, not just approximately.
    """
    widths = np.asarray(widths, np.float64)
    mp1 = widths.shape[0]
    size = r0 + mp1 + 1
    table = np.empty((mp1 + 1, size), np.float64)
    ranks = np.arange(size, dtype=np.float64)
    table[mp1] = 0.5 * ranks * ranks
    bumped_sq = (ranks + 1.0) * (ranks + 1.0)
    for k in range(mp1 - 1, -1, -1):
        post = 0.5 * q + table[k + 1, 0]
        top = r0 + k + 1
        hold = 0.5 * s * widths[k] * bumped_sq[:top] + table[k + 1, 1 : top + 1]
        table[k, :top] = np.minimum(post, hold)
    decisions = np.zeros(mp1, np.int8)
    r = r0
    for k in range(mp1):
        post = 0.5 * q + table[k + 1, 0]
        bumped = r + 1.0
        hold = 0.5 * s * widths[k] * (bumped * bumped) + table[k + 1, r + 1]
        if post < hold:
            decisions[k] = 1
            r = 0
        else:
            r = r + 1
    return decisions


sample_hawkes_times = _maybe_jit(_sample_hawkes_loop)
_clock_first_time = _maybe_jit(_clock_first_time)
redqueen_posts = _maybe_jit(_redqueen_posts_loop)

if NUMBA_ENABLED:
    oracle_decisions = _njit(cache=True)(_oracle_decisions_loop)
else:
    oracle_decisions = _oracle_decisions_numpy

#: Both flavors of every kernel, keyed by kernel name then flavor name.
#: The fallback flavor is always callable; the "numba" flavor is None when
#: numba is disabled.  Used by equivalence tests and the benchmark.
IMPLEMENTATIONS = {
    "sample_hawkes_times": {
        "numba": sample_hawkes_times if NUMBA_ENABLED else None,
        "fallback": _sample_hawkes_loop,
    },
    "redqueen_posts": {
        "numba": redqueen_posts if NUMBA_ENABLED else None,
        "fallback": _redqueen_posts_loop,
    },
    "oracle_decisions": {
        "numba": oracle_decisions if NUMBA_ENABLED else None,
        "fallback": _oracle_decisions_numpy,
    },
}
