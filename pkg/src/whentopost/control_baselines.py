"""Reference posting policies the controller is judged against.

* ``uniform_poisson_posts``: a homogeneous Poisson poster whose expected
  count matches the budget - feed-blind.
* ``true_posts_playback``: replay the broadcaster's recorded posts.
* ``segment_offline_posts``: an offline planner that knows per-segment
  feed rates, splits an integer budget across segments by greedy
  marginal gain, and spaces posts evenly inside each segment.
"""

from __future__ import annotations

import heapq

import numpy as np

from .point_process import EventStream, PiecewiseRate

__all__ = [
    "uniform_poisson_posts",
    "true_posts_playback",
    "segment_offline_posts",
    "segment_cost_model",
]


def uniform_poisson_posts(
    budget: float,
    t0: float,
    tf: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Poisson(budget) many posts, uniformly placed on (t0, tf)."""
    if budget < 0:
        raise ValueError("budget cannot be negative")
    if tf <= t0:
        return np.empty(0, np.float64)
    count = int(rng.poisson(budget))
    return np.sort(t0 + rng.random(count) * (tf - t0))


def true_posts_playback(recorded: EventStream) -> np.ndarray:
    """The recorded posting times, unchanged."""
    return recorded.times.copy()


def segment_cost_model(total_rates: np.ndarray, lengths: np.ndarray, alloc: np.ndarray) -> float:
    """Expected position-over-time under the planner's model.

    Within a segment of length L and aggregate feed rate R, n posts cut
    it into n+1 spans; a span of length g accrues R * g^2 / 2 rank-time
    (rank grows linearly from each reset).  Even spacing is optimal, so
    a segment scores R * L^2 / (2 * (n + 1)).
    """
    alloc = np.asarray(alloc, dtype=np.float64)
    return float(np.sum(total_rates * lengths * lengths / (2.0 * (alloc + 1.0))))


def segment_offline_posts(
    rates: list[PiecewiseRate],
    budget: int,
    t0: float,
    tf: float,
) -> np.ndarray:
    """Greedy budget split across segments, posts evenly spaced within each.

    ``rates`` holds one piecewise rate per follower on a shared grid
    covering the window.  Each budget unit goes to the segment whose
    modeled cost drops the most (ties: earliest segment).  A segment
    given n posts places them at its start and every L/n thereafter.
    Deterministic; scaling all rates by one constant changes nothing.
    """
    if budget < 0:
        raise ValueError("budget cannot be negative")
    if not rates:
        raise ValueError("need at least one follower rate")
    knots = rates[0].knots
    for r in rates[1:]:
        if not np.array_equal(r.knots, knots):
            raise ValueError("follower rates must share one segment grid")
    if not rates[0].covers(t0, tf):
        raise ValueError("rates do not cover the posting window")
    # clip the shared grid to the window
    inner = knots[(knots > t0) & (knots < tf)]
    edges = np.concatenate([[t0], inner, [tf]])
    lengths = np.diff(edges)
    total = np.zeros(lengths.shape[0])
    for r in rates:
        for k in range(lengths.shape[0]):
            total[k] += r.rate_at(edges[k])
    nseg = lengths.shape[0]
    alloc = np.zeros(nseg, dtype=np.int64)
    # max-heap on marginal gain; index breaks ties toward earlier segments
    base = total * lengths * lengths / 2.0

    def gain(k: int) -> float:
        n = alloc[k]
        return base[k] * (1.0 / (n + 1.0) - 1.0 / (n + 2.0))

    heap = [(-gain(k), k) for k in range(nseg)]
    heapq.heapify(heap)
    for _ in range(int(budget)):
        g, k = heapq.heappop(heap)
        alloc[k] += 1
        heapq.heappush(heap, (-gain(k), k))
    times = []
    for k in range(nseg):
        n = int(alloc[k])
        if n == 0:
            continue
        step = lengths[k] / n
        for j in range(n):
            times.append(edges[k] + j * step)
    return np.asarray(times, dtype=np.float64)
