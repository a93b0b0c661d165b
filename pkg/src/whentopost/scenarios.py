"""Canned experiment setups: synthetic feeds and log replays.

Each runner takes a config dataclass, executes every requested policy
over every seed, and returns per-run metric reports plus a details dict
(tuned prices, realized budgets).  Randomness discipline: the feed for
(seed, follower j) comes from generator ``[seed, 1, j]``, the posting
policy for a seed from ``[seed, 2]``, and feed-blind baselines from
``[seed, 3]`` - separate streams, so changing the policy can never
perturb the traffic it reacts to.

Budgets follow the competition protocol: the online controller's price
q is tuned so its mean post count hits the budget, its realized mean
then becomes the budget every baseline must match.  The clairvoyant
schedule gets its own price search against the same budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .control_baselines import segment_offline_posts, true_posts_playback, uniform_poisson_posts
from .control_online import RedQueenParams, run_redqueen_fast, tune_q
from .control_oracle import decisions_to_post_times, instance_from_feed, oracle_schedule
from .data_io import ReplayDataset
from .feed_sim import trajectory_from_posts
from .metrics import normalize_report, report_from_trajectory
from .point_process import EventStream, HawkesParams, PiecewiseRate, sample_hawkes, sample_piecewise_poisson
from .significance import estimate_significance

__all__ = [
    "POLICIES",
    "feed_rng",
    "policy_rng",
    "baseline_rng",
    "HawkesScenarioConfig",
    "SinusoidScenarioConfig",
    "ReplayConfig",
    "run_one_follower_hawkes",
    "run_multi_follower_sinusoid",
    "run_replay",
]

POLICIES = ("redqueen", "oracle", "uniform", "segment-offline", "true-posts")

_FEED_TAG = 1
_POLICY_TAG = 2
_BASELINE_TAG = 3


def feed_rng(seed: int, follower: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, _FEED_TAG, follower]))


def policy_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, _POLICY_TAG]))


def baseline_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, _BASELINE_TAG]))


class ScenarioError(ValueError):
    """The requested scenario/policy combination cannot run."""


def _check_policies(policies, allowed, scenario: str):
    for p in policies:
        if p not in POLICIES:
            raise ScenarioError(f"unknown policy {p!r}; choose from {', '.join(POLICIES)}")
        if p not in allowed:
            raise ScenarioError(f"policy {p!r} is not available in the {scenario} scenario")


def _tune_redqueen(feeds_by_seed, t0, tf, target, tol, seeds, significance=None, max_iter=60):
    def mean_posts(q: float) -> float:
        params = RedQueenParams(q=q, significance=significance)
        total = 0
        for seed in seeds:
            posts = run_redqueen_fast(feeds_by_seed[seed], params, policy_rng(seed), t0, tf)
            total += posts.shape[0]
        return total / len(seeds)

    return tune_q(target, mean_posts, tolerance=tol, max_iter=max_iter)


def _tune_oracle(feeds_by_seed, t0, tf, target, tol, seeds, max_iter=60):
    def mean_posts(q: float) -> float:
        total = 0
        for seed in seeds:
            feed = feeds_by_seed[seed][0]
            inst = instance_from_feed(feed.times, t0, tf, q=q)
            total += oracle_schedule(inst).post_count
        return total / len(seeds)

    return tune_q(target, mean_posts, tolerance=tol, max_iter=max_iter)


def _empirical_segment_rates(feeds, t0, tf, n_segments: int) -> list[PiecewiseRate]:
    knots = np.linspace(t0, tf, n_segments + 1)
    out = []
    for f in feeds:
        counts, _ = np.histogram(f.times, bins=knots)
        out.append(PiecewiseRate(knots, counts / np.diff(knots)))
    return out


def _oracle_post_times(feed: EventStream, t0, tf, q) -> np.ndarray:
    inst = instance_from_feed(feed.times, t0, tf, q=q)
    sched = oracle_schedule(inst)
    return decisions_to_post_times(sched.decisions, feed.times, t0)


# ---------------------------------------------------------------------------
# one follower, self-exciting feed
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HawkesScenarioConfig:
    """Single follower whose feed excites itself (bursty traffic)."""

    seeds: tuple
    policies: tuple = ("redqueen", "oracle", "uniform")
    budget: float | None = None
    q: float | None = None
    lambda0: float = 10.0
    alpha: float = 1.0
    w: float = 10.0
    target_feed_events: float = 1000.0
    tune_tol: float = 0.1
    tune_max_iter: int = 60
    offline_segments: int = 10

    def __post_init__(self):
        if (self.budget is None) == (self.q is None):
            raise ScenarioError("set exactly one of budget or q")
        if not self.seeds:
            raise ScenarioError("need at least one seed")

    @property
    def horizon(self) -> float:
        params = HawkesParams(self.lambda0, self.alpha, self.w)
        return self.target_feed_events / params.stationary_rate()

    @property
    def run_label(self) -> str:
        knob = f"budget={self.budget:g}" if self.budget is not None else f"q={self.q:g}"
        return f"one-follower-hawkes:{knob}"


def run_one_follower_hawkes(cfg: HawkesScenarioConfig):
    _check_policies(
        cfg.policies, ("redqueen", "oracle", "uniform", "segment-offline"), "one-follower-hawkes"
    )
    params = HawkesParams(cfg.lambda0, cfg.alpha, cfg.w)
    t0, tf = 0.0, cfg.horizon
    feeds_by_seed = {
        seed: [sample_hawkes(params, t0, tf, feed_rng(seed, 0))] for seed in cfg.seeds
    }
    details: dict = {"horizon": tf, "mean_feed_events": float(np.mean([len(f[0]) for f in feeds_by_seed.values()]))}

    if cfg.q is not None:
        rq_q = cfg.q
    else:
        tuned = _tune_redqueen(
            feeds_by_seed, t0, tf, cfg.budget, cfg.tune_tol, cfg.seeds, max_iter=cfg.tune_max_iter
        )
        details["redqueen_tune"] = tuned
        rq_q = tuned.q

    rq_posts = {
        seed: run_redqueen_fast(feeds_by_seed[seed], RedQueenParams(q=rq_q), policy_rng(seed), t0, tf)
        for seed in cfg.seeds
    }
    realized = float(np.mean([p.shape[0] for p in rq_posts.values()]))
    details["redqueen_q"] = rq_q
    details["realized_budget"] = realized

    oracle_q = None
    if "oracle" in cfg.policies:
        tuned = _tune_oracle(
            feeds_by_seed, t0, tf, realized if realized > 0 else 1.0, cfg.tune_tol, cfg.seeds,
            max_iter=cfg.tune_max_iter,
        )
        details["oracle_tune"] = tuned
        oracle_q = tuned.q

    reports = []
    for seed in cfg.seeds:
        feed = feeds_by_seed[seed]
        for policy in cfg.policies:
            if policy == "redqueen":
                posts = rq_posts[seed]
            elif policy == "oracle":
                posts = _oracle_post_times(feed[0], t0, tf, oracle_q)
            elif policy == "uniform":
                posts = uniform_poisson_posts(realized, t0, tf, baseline_rng(seed))
            elif policy == "segment-offline":
                rates = _empirical_segment_rates(feed, t0, tf, cfg.offline_segments)
                posts = segment_offline_posts(rates, int(round(realized)), t0, tf)
            traj = trajectory_from_posts(feed, posts, t0, tf)
            reports.append(report_from_trajectory(traj, cfg.run_label, seed, policy))
    return reports, details


# ---------------------------------------------------------------------------
# many followers, daily half-sinusoid feeds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SinusoidScenarioConfig:
    """N followers with phase-shifted half-sinusoid daily activity."""

    seeds: tuple
    followers: int = 5
    policies: tuple = ("redqueen", "uniform")
    budget: float | None = None
    q: float | None = None
    peak_per_hour: float = 10.0
    horizon: float = 86_400.0
    segments_per_day: int = 24
    tune_tol: float = 0.1
    tune_max_iter: int = 60

    def __post_init__(self):
        if (self.budget is None) == (self.q is None):
            raise ScenarioError("set exactly one of budget or q")
        if self.followers < 1:
            raise ScenarioError("need at least one follower")
        if not self.seeds:
            raise ScenarioError("need at least one seed")

    @property
    def run_label(self) -> str:
        knob = f"budget={self.budget:g}" if self.budget is not None else f"q={self.q:g}"
        return f"multi-follower-sinusoid:followers={self.followers}:{knob}"


def _sinusoid_rate(cfg: SinusoidScenarioConfig, phase: float) -> PiecewiseRate:
    """Hourly piecewise rate tracing one day's half sinusoid from ``phase``."""
    nseg = cfg.segments_per_day
    seg_len = 86_400.0 / nseg
    n_total = int(math.ceil(cfg.horizon / seg_len))
    knots = np.arange(n_total + 1) * seg_len
    knots[-1] = max(knots[-1], cfg.horizon)
    peak = cfg.peak_per_hour / 3600.0
    segs = (np.arange(n_total) + phase) % nseg
    rates = peak * np.sin(math.pi * segs / nseg)
    return PiecewiseRate(knots, rates)


def run_multi_follower_sinusoid(cfg: SinusoidScenarioConfig):
    _check_policies(
        cfg.policies, ("redqueen", "uniform", "segment-offline"), "multi-follower-sinusoid"
    )
    t0, tf = 0.0, cfg.horizon
    rates_by_seed = {}
    feeds_by_seed = {}
    for seed in cfg.seeds:
        rates = []
        feeds = []
        for j in range(cfg.followers):
            rng = feed_rng(seed, j)
            phase = rng.uniform(0.0, cfg.segments_per_day)
            rate = _sinusoid_rate(cfg, phase)
            rates.append(rate)
            feeds.append(sample_piecewise_poisson(rate, t0, tf, rng))
        rates_by_seed[seed] = rates
        feeds_by_seed[seed] = feeds
    details: dict = {
        "horizon": tf,
        "mean_feed_events": float(
            np.mean([sum(len(f) for f in feeds) for feeds in feeds_by_seed.values()])
        ),
    }

    if cfg.q is not None:
        rq_q = cfg.q
    else:
        tuned = _tune_redqueen(
            feeds_by_seed, t0, tf, cfg.budget, cfg.tune_tol, cfg.seeds, max_iter=cfg.tune_max_iter
        )
        details["redqueen_tune"] = tuned
        rq_q = tuned.q

    rq_posts = {
        seed: run_redqueen_fast(feeds_by_seed[seed], RedQueenParams(q=rq_q), policy_rng(seed), t0, tf)
        for seed in cfg.seeds
    }
    realized = float(np.mean([p.shape[0] for p in rq_posts.values()]))
    details["redqueen_q"] = rq_q
    details["realized_budget"] = realized

    reports = []
    for seed in cfg.seeds:
        feeds = feeds_by_seed[seed]
        for policy in cfg.policies:
            if policy == "redqueen":
                posts = rq_posts[seed]
            elif policy == "uniform":
                posts = uniform_poisson_posts(realized, t0, tf, baseline_rng(seed))
            elif policy == "segment-offline":
                posts = segment_offline_posts(rates_by_seed[seed], int(round(realized)), t0, tf)
            traj = trajectory_from_posts(feeds, posts, t0, tf)
            reports.append(report_from_trajectory(traj, cfg.run_label, seed, policy))
    return reports, details


# ---------------------------------------------------------------------------
# replayed logs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReplayConfig:
    """Replay one broadcaster's window against recorded feeds."""

    seeds: tuple
    policies: tuple = ("redqueen", "true-posts")
    q: float | None = None  # None: tune to the recorded post count
    target_posts: float | None = None
    significance: str | None = None  # None, "weekday" or "weekday-hour"
    laplace: float = 1.0
    tune_tol: float = 0.1
    tune_max_iter: int = 60
    offline_segments: int = 10
    initial_rank: int = 0

    def __post_init__(self):
        if not self.seeds:
            raise ScenarioError("need at least one seed")
        if self.q is not None and self.target_posts is not None:
            raise ScenarioError("set at most one of q and target_posts")


def run_replay(cfg: ReplayConfig, dataset: ReplayDataset):
    _check_policies(cfg.policies, POLICIES, "replay")
    t0, tf = dataset.t0, dataset.tf
    n = len(dataset.follower_ids)
    run_label = f"replay:{dataset.broadcaster}"
    if "oracle" in cfg.policies and n != 1:
        raise ScenarioError(
            "the clairvoyant schedule solves a single follower; this replay has "
            f"{n} followers - restrict the dataset or drop the oracle policy"
        )
    details: dict = {"followers": n, "true_posts": len(dataset.true_posts)}

    significance = None
    if cfg.significance is not None:
        profile = estimate_significance(
            dataset.events,
            dataset.follower_ids,
            epoch=dataset.epoch,
            granularity=cfg.significance,
            laplace=cfg.laplace,
        )
        significance = profile.step_schedule(dataset.follower_ids, t0, tf)

    init = np.full(n, cfg.initial_rank, dtype=np.int64)
    feeds_by_seed = {seed: dataset.feeds for seed in cfg.seeds}

    needs_rq = any(p in ("redqueen", "uniform", "segment-offline") for p in cfg.policies)
    rq_q = None
    realized = float(len(dataset.true_posts))
    if needs_rq:
        if cfg.q is not None:
            rq_q = cfg.q
        else:
            target = cfg.target_posts if cfg.target_posts is not None else float(len(dataset.true_posts))
            if target <= 0:
                raise ScenarioError(
                    "no recorded posts to match: pass q or target_posts explicitly"
                )
            tuned = _tune_redqueen(
                feeds_by_seed, t0, tf, target, cfg.tune_tol, cfg.seeds,
                significance=significance, max_iter=cfg.tune_max_iter,
            )
            details["redqueen_tune"] = tuned
            rq_q = tuned.q
        params = RedQueenParams(q=rq_q, significance=significance)
        rq_posts = {
            seed: run_redqueen_fast(dataset.feeds, params, policy_rng(seed), t0, tf, initial_ranks=init)
            for seed in cfg.seeds
        }
        realized = float(np.mean([p.shape[0] for p in rq_posts.values()]))
        details["redqueen_q"] = rq_q
        details["realized_budget"] = realized

    oracle_q = None
    if "oracle" in cfg.policies:
        target = realized if realized > 0 else float(max(len(dataset.true_posts), 1))
        tuned = _tune_oracle(feeds_by_seed, t0, tf, target, cfg.tune_tol, cfg.seeds,
                             max_iter=cfg.tune_max_iter)
        details["oracle_tune"] = tuned
        oracle_q = tuned.q

    reference = report_from_trajectory(
        trajectory_from_posts(
            dataset.feeds, true_posts_playback(dataset.true_posts), t0, tf, initial_ranks=init
        ),
        run_label,
        0,
        "true-posts",
    )

    reports = []
    for seed in cfg.seeds:
        for policy in cfg.policies:
            if policy == "redqueen":
                posts = rq_posts[seed]
            elif policy == "oracle":
                posts = _oracle_post_times(dataset.feeds[0], t0, tf, oracle_q)
            elif policy == "uniform":
                posts = uniform_poisson_posts(realized, t0, tf, baseline_rng(seed))
            elif policy == "segment-offline":
                rates = _empirical_segment_rates(dataset.feeds, t0, tf, cfg.offline_segments)
                posts = segment_offline_posts(rates, int(round(realized)), t0, tf)
            elif policy == "true-posts":
                posts = true_posts_playback(dataset.true_posts)
            traj = trajectory_from_posts(dataset.feeds, posts, t0, tf, initial_ranks=init)
            report = report_from_trajectory(traj, run_label, seed, policy)
            reports.append(normalize_report(report, reference))
    return reports, details
