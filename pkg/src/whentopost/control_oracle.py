"""Clairvoyant posting schedules for a fully revealed feed.

With the feed known in advance, the best schedule only ever posts at
the window start or immediately after a feed event, so the problem is
discrete: one post/hold decision per stage k = 0..m, where stage 0 is
the window start and stage k >= 1 follows the k-th feed event.
``widths[k]`` is the time until the next stage (or the horizon).

The controlled rank recursion is r_{k+1} = (r_k + 1)(1 - u_k): the
stage's rank is bumped, then cleared if the decision was to post.  The
bump applies at stage 0 too, so the model behaves as if one story
arrived the moment the window opened; r0 is the rank just before.  The
objective charges 0.5*s*widths[k]*r_{k+1}^2 per interval, 0.5*q per
post, and 0.5*r_{m+1}^2 at the horizon.  ``oracle_schedule`` solves it
by backward induction (ties hold); ``brute_force_schedule`` enumerates
every decision vector and exists to cross-check the induction.  Both
report the cost through the same forward evaluator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .kernels import oracle_decisions

__all__ = [
    "OracleInstance",
    "OracleSchedule",
    "schedule_cost",
    "oracle_schedule",
    "brute_force_schedule",
    "instance_from_feed",
    "decisions_to_post_times",
    "brute_force_schedule_multi",
]

MAX_BRUTE_FORCE_STAGES = 22
MAX_ORACLE_STAGES = 20_000


@dataclass(frozen=True)
class OracleInstance:
    """One revealed single-follower feed: initial rank, interval widths, prices."""

    r0: int
    widths: np.ndarray
    q: float
    s: float = 1.0

    def __post_init__(self):
        widths = np.asarray(self.widths, dtype=np.float64)
        if widths.ndim != 1 or widths.shape[0] < 1:
            raise ValueError("need at least one interval width")
        if np.any(widths < 0):
            raise ValueError("interval widths cannot be negative")
        if self.r0 < 0:
            raise ValueError("initial rank cannot be negative")
        if self.q < 0 or self.s < 0:
            raise ValueError("prices cannot be negative")
        object.__setattr__(self, "widths", widths)

    @property
    def n_stages(self) -> int:
        return int(self.widths.shape[0])


@dataclass(frozen=True)
class OracleSchedule:
    """A 0/1 decision per stage plus the cost of replaying those decisions."""

    decisions: np.ndarray
    cost: float

    @property
    def post_count(self) -> int:
        return int(np.sum(self.decisions))


def schedule_cost(decisions, inst: OracleInstance) -> float:
    """Forward objective of one decision vector (the shared evaluator)."""
    return float(schedule_cost_batch(np.asarray(decisions, np.float64)[None, :], inst)[0])


def schedule_cost_batch(decisions: np.ndarray, inst: OracleInstance) -> np.ndarray:
    """Forward objective of each row of a 0/1 decision matrix."""
    u = np.asarray(decisions, dtype=np.float64)
    if u.ndim != 2 or u.shape[1] != inst.n_stages:
        raise ValueError("decision rows must have one entry per stage")
    r = np.full(u.shape[0], float(inst.r0))
    cost = np.zeros(u.shape[0])
    for k in range(inst.n_stages):
        r = (r + 1.0) * (1.0 - u[:, k])
        cost += 0.5 * inst.s * inst.widths[k] * (r * r) + 0.5 * inst.q * u[:, k]
    cost += 0.5 * (r * r)
    return cost


def oracle_schedule(inst: OracleInstance) -> OracleSchedule:
    """Optimal decisions by backward induction; cost via the forward evaluator."""
    if inst.n_stages > MAX_ORACLE_STAGES:
        raise ValueError(
            f"{inst.n_stages} stages needs a quadratic table; the induction is "
            f"capped at {MAX_ORACLE_STAGES} stages - shrink the window or "
            "thin the feed"
        )
    decisions = oracle_decisions(inst.widths, int(inst.r0), float(inst.q), float(inst.s))
    return OracleSchedule(decisions, schedule_cost(decisions, inst))


def brute_force_schedule(inst: OracleInstance) -> OracleSchedule:
    """Exhaustive minimum over all 2^(m+1) decision vectors (small m only)."""
    m1 = inst.n_stages
    if m1 > MAX_BRUTE_FORCE_STAGES:
        raise ValueError(f"brute force is capped at {MAX_BRUTE_FORCE_STAGES} stages")
    n = 1 << m1
    rows = (np.arange(n, dtype=np.int64)[:, None] >> np.arange(m1)) & 1
    costs = schedule_cost_batch(rows.astype(np.float64), inst)
    best = int(np.argmin(costs))
    decisions = rows[best].astype(np.int8)
    return OracleSchedule(decisions, schedule_cost(decisions, inst))


def instance_from_feed(
    feed_times: np.ndarray,
    t0: float,
    tf: float,
    q: float,
    s: float = 1.0,
    r0: int = 0,
) -> OracleInstance:
    """Build the stage widths for a revealed feed on (t0, tf]."""
    ts = np.asarray(feed_times, dtype=np.float64)
    ts = ts[(ts > t0) & (ts <= tf)]
    widths = np.diff(np.concatenate([[t0], ts, [tf]]))
    return OracleInstance(r0=r0, widths=widths, q=q, s=s)


def decisions_to_post_times(decisions, feed_times, t0: float) -> np.ndarray:
    """Post times for a decision vector: stage 0 posts at the window start,
    stage k >= 1 one float step after the k-th feed event (so the post
    lands on the far side of the event it reacts to)."""
    decisions = np.asarray(decisions)
    feed_times = np.asarray(feed_times, dtype=np.float64)
    if decisions.shape[0] != feed_times.shape[0] + 1:
        raise ValueError("need exactly one decision per stage")
    times = []
    if decisions[0]:
        times.append(t0)
    for k in range(feed_times.shape[0]):
        if decisions[k + 1]:
            times.append(np.nextafter(feed_times[k], math.inf))
    return np.asarray(times, dtype=np.float64)


def brute_force_schedule_multi(
    feeds: list[np.ndarray],
    t0: float,
    tf: float,
    q: float,
    s=1.0,
    r0s=None,
) -> tuple[np.ndarray, float]:
    """Exhaustive schedule search with one rank per follower (tiny scale).

    Decision stages sit at the window start and after each merged feed
    event; ranks evolve physically (a stage only bumps the followers
    whose feeds fired there).  Returns the best 0/1 decision vector and
    its cost 0.5*sum_i s_i*integral(r_i^2) + 0.5*q*posts +
    0.5*sum_i r_i(tf)^2.
    """
    n = len(feeds)
    feeds = [np.asarray(f, dtype=np.float64) for f in feeds]
    s = np.broadcast_to(np.asarray(s, dtype=np.float64), (n,))
    r0s = np.zeros(n) if r0s is None else np.asarray(r0s, dtype=np.float64)
    merged = np.concatenate(feeds) if n else np.empty(0)
    merged = np.unique(merged[(merged > t0) & (merged <= tf)])
    stages = merged.shape[0] + 1
    if stages > MAX_BRUTE_FORCE_STAGES:
        raise ValueError(f"brute force is capped at {MAX_BRUTE_FORCE_STAGES} stages")
    # bumps[i, k]: how many events follower i's feed got at stage k >= 1
    bumps = np.zeros((n, stages), dtype=np.float64)
    for i, f in enumerate(feeds):
        f = f[(f > t0) & (f <= tf)]
        idx = np.searchsorted(merged, f)
        np.add.at(bumps[i], idx + 1, 1.0)
    widths = np.diff(np.concatenate([[t0], merged, [tf]]))
    best_cost = math.inf
    best = None
    for dec in product((0.0, 1.0), repeat=stages):
        r = r0s.copy()
        cost = 0.0
        for k in range(stages):
            r = (r + bumps[:, k]) * (1.0 - dec[k])
            cost += 0.5 * widths[k] * float(np.sum(s * r * r)) + 0.5 * q * dec[k]
        cost += 0.5 * float(np.sum(r * r))
        if cost < best_cost:
            best_cost = cost
            best = dec
    return np.asarray(best, dtype=np.int8), float(best_cost)
