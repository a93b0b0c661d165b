"""Calendar-bucket attention profiles and their use as posting weights."""

import math

import numpy as np
import pytest

from whentopost.control_online import RedQueenParams, run_redqueen_fast
from whentopost.point_process import EventStream
from whentopost.significance import (
    GRANULARITIES,
    SignificanceProfile,
    bucket_count,
    bucket_index,
    bucket_weights,
    estimate_significance,
)

DAY = 86_400.0
# 1970-01-05 was a Monday; times below are relative to epoch=0 (a Thursday)
MONDAY = 4 * DAY


def test_bucket_counts():
    assert bucket_count("weekday") == 7
    assert bucket_count("weekday-hour") == 168
    with pytest.raises(ValueError):
        bucket_count("minute")


def test_bucket_index_weekday_anchoring():
    # UNIX zero is a Thursday (index 3 when Monday is 0)
    assert bucket_index(0.0, "weekday") == 3
    assert bucket_index(MONDAY, "weekday") == 0
    assert bucket_index(MONDAY + 6 * DAY, "weekday") == 6
    assert bucket_index(MONDAY + 7 * DAY, "weekday") == 0


def test_bucket_index_weekday_hour():
    assert bucket_index(MONDAY + 5 * 3600.0, "weekday-hour") == 5
    assert bucket_index(MONDAY + DAY + 3600.0, "weekday-hour") == 25
    got = bucket_index(np.array([0.0, MONDAY]), "weekday")
    assert np.array_equal(got, [3, 0])


def test_all_monday_log_concentrates():
    # 10 Monday events, smoothing 1: Monday 11/17, rest 1/17, peak scaled to 1
    times = MONDAY + np.arange(10) * (7 * DAY)
    weights = bucket_weights(times, epoch=0.0, granularity="weekday")
    assert weights[0] == 1.0
    assert np.allclose(weights[1:], 1.0 / 11.0)


def test_uniform_log_is_flat():
    times = MONDAY + np.arange(7) * DAY + 100.0
    weights = bucket_weights(times, epoch=0.0, granularity="weekday")
    assert np.array_equal(weights, np.ones(7))


def test_zero_smoothing_gives_hard_zeros():
    times = MONDAY + np.array([0.0, DAY, 2 * DAY])  # Mon, Tue, Wed
    weights = bucket_weights(times, epoch=0.0, granularity="weekday", laplace=0.0)
    assert np.array_equal(weights[:3], [1.0, 1.0, 1.0])
    assert np.array_equal(weights[3:], np.zeros(4))


def test_duplicated_log_is_invariant_without_smoothing():
    rng = np.random.default_rng(0)
    times = rng.uniform(0, 60 * DAY, size=200)
    once = bucket_weights(times, 0.0, "weekday", laplace=0.0)
    twice = bucket_weights(np.concatenate([times, times]), 0.0, "weekday", laplace=0.0)
    assert np.allclose(once, twice)


def test_empty_log_warns_and_falls_flat():
    with pytest.warns(UserWarning):
        weights = bucket_weights(np.empty(0), 0.0, "weekday")
    assert np.array_equal(weights, np.ones(7))


def test_negative_smoothing_rejected():
    with pytest.raises(ValueError):
        bucket_weights(np.array([0.0]), 0.0, "weekday", laplace=-1.0)


def test_estimate_significance_per_follower():
    stream = EventStream(
        np.array([MONDAY + 1.0, MONDAY + 2.0, MONDAY + DAY + 1.0]),
        np.array(["a", "a", "b"], dtype=object),
    )
    profile = estimate_significance(stream, ["a", "b"], epoch=0.0, laplace=0.0)
    assert profile.values["a"][0] == 1.0
    assert np.sum(profile.values["a"]) == 1.0
    assert profile.values["b"][1] == 1.0
    assert profile.granularity == "weekday"
    assert "weekday" in GRANULARITIES


def test_profile_validation():
    with pytest.raises(ValueError):
        SignificanceProfile("weekday", 0.0, {"a": np.ones(6)})
    with pytest.raises(ValueError):
        SignificanceProfile("weekday", 0.0, {"a": np.full(7, 2.0)})


def test_step_schedule_unrolls_buckets_onto_window():
    vec = np.array([1.0, 0.5, 0.0, 0.25, 1.0, 0.75, 0.125])
    profile = SignificanceProfile("weekday", epoch=MONDAY, values={"f": vec})
    sched = profile.step_schedule(["f"], 0.0, 3 * DAY)
    assert np.array_equal(sched.knots, [0.0, DAY, 2 * DAY, 3 * DAY])
    assert np.array_equal(sched.values[0], [1.0, 0.5, 0.0])
    # window offset inside a day: first knot is the next day boundary
    shifted = profile.step_schedule(["f"], 1000.0, DAY + 1000.0)
    assert np.array_equal(shifted.knots, [1000.0, DAY, DAY + 1000.0])
    assert np.array_equal(shifted.values[0], [1.0, 0.5])


def test_step_schedule_requires_known_followers():
    profile = SignificanceProfile("weekday", 0.0, {"f": np.ones(7)})
    with pytest.raises(KeyError):
        profile.step_schedule(["ghost"], 0.0, DAY)


def test_weekend_silence_under_zero_weight():
    # a Sat/Sun hard-zero profile silences the poster on weekends entirely
    vec = np.array([1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0])
    profile = SignificanceProfile("weekday", epoch=MONDAY, values={"f": vec})
    sched = profile.step_schedule(["f"], 0.0, 14 * DAY)
    params = RedQueenParams(q=1000.0, significance=sched)
    weekend_hits = 0
    total = 0
    for seed in range(100):
        posts = run_redqueen_fast([EventStream.empty()], params,
                                  np.random.default_rng(seed), 0.0, 14 * DAY,
                                  initial_ranks=[2])
        for p in posts:
            total += 1
            day = int(p // DAY) % 7
            if day in (5, 6):
                weekend_hits += 1
    assert total > 50
    assert weekend_hits == 0


def test_weekend_light_cohort_shifts_posts_off_weekends():
    # feeding the estimated profile back into the poster lowers its weekend
    # share versus the unweighted poster on the same seeds
    rng = np.random.default_rng(1)
    weekday_times = []
    t = 0.0
    while t < 28 * DAY:
        day = int(t // DAY) % 7
        if day < 5:
            weekday_times.append(t)
        t += float(rng.exponential(3 * 3600.0))
    activity = EventStream.from_times(np.array(weekday_times), source="f")
    profile = estimate_significance(activity, ["f"], epoch=MONDAY, laplace=1.0)
    sched = profile.step_schedule(["f"], 0.0, 28 * DAY)

    feed_times = np.sort(rng.uniform(0.0, 28 * DAY, size=600))
    feeds = [EventStream.from_times(feed_times)]

    def weekend_share(params, seed):
        posts = run_redqueen_fast(feeds, params, np.random.default_rng(seed),
                                  0.0, 28 * DAY)
        if len(posts) == 0:
            return 0.0, 0
        days = (posts // DAY).astype(np.int64) % 7
        return float(np.mean(days >= 5)), len(posts)

    flat_share = weighted_share = 0.0
    for seed in range(10):
        fs, _ = weekend_share(RedQueenParams(q=9000.0), seed)
        ws, n = weekend_share(RedQueenParams(q=9000.0, significance=sched), seed)
        flat_share += fs
        weighted_share += ws
    assert weighted_share < flat_share
