"""When are followers paying attention: calendar-bucket activity profiles.

A follower's own activity is bucketed by weekday (7 buckets) or by
weekday-hour (168).  Bucket values are Laplace-smoothed frequencies,
then divided by the largest bucket so every profile peaks at exactly 1.
That max-normalization is a reporting choice, not a probability claim,
and is stamped into the profile (and its serialized form) so nobody
mistakes the values for calibrated probabilities.

Event times are seconds relative to an epoch (itself UNIX seconds), so
calendar arithmetic is plain integer math on days-since-1970, which was
a Thursday.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .control_online import StepSchedule

__all__ = [
    "GRANULARITIES",
    "bucket_count",
    "bucket_index",
    "SignificanceProfile",
    "bucket_weights",
    "estimate_significance",
]

GRANULARITIES = ("weekday", "weekday-hour")
_SECONDS_PER_DAY = 86_400
_SECONDS_PER_HOUR = 3_600
_EPOCH_WEEKDAY = 3  # 1970-01-01 was a Thursday; Monday is 0


def bucket_count(granularity: str) -> int:
    if granularity == "weekday":
        return 7
    if granularity == "weekday-hour":
        return 7 * 24
    raise ValueError(f"unknown granularity {granularity!r}; choose from {GRANULARITIES}")


def bucket_index(abs_seconds, granularity: str):
    """Bucket of an absolute time (UNIX seconds); vectorized."""
    abs_seconds = np.asarray(abs_seconds, dtype=np.float64)
    days = np.floor_divide(abs_seconds, _SECONDS_PER_DAY).astype(np.int64)
    weekday = (days + _EPOCH_WEEKDAY) % 7
    if granularity == "weekday":
        return weekday
    if granularity == "weekday-hour":
        hour = (np.floor_divide(abs_seconds, _SECONDS_PER_HOUR).astype(np.int64)) % 24
        return weekday * 24 + hour
    raise ValueError(f"unknown granularity {granularity!r}; choose from {GRANULARITIES}")


def bucket_weights(
    times: np.ndarray,
    epoch: float,
    granularity: str,
    laplace: float = 1.0,
) -> np.ndarray:
    """Max-normalized smoothed bucket frequencies of one activity log.

    ``times`` are seconds relative to ``epoch``.  With ``laplace=0`` an
    unvisited bucket is exactly 0 (useful for hard quiet periods); an
    entirely empty log yields a flat all-ones profile with a warning.
    """
    if laplace < 0:
        raise ValueError("laplace smoothing cannot be negative")
    b = bucket_count(granularity)
    times = np.asarray(times, dtype=np.float64)
    counts = np.bincount(bucket_index(epoch + times, granularity), minlength=b).astype(np.float64)
    total = counts.sum()
    if total == 0:
        warnings.warn("empty activity log: falling back to a flat profile", stacklevel=2)
        return np.ones(b)
    weights = (counts + laplace) / (total + laplace * b)
    return weights / weights.max()


@dataclass(frozen=True)
class SignificanceProfile:
    """Per-follower bucket weights plus the calendar anchoring them.

    ``values[follower_id]`` is a vector of ``bucket_count(granularity)``
    weights in [0, 1], peaking at 1.  ``normalization`` documents that
    scaling and travels with the profile through serialization.
    """

    granularity: str
    epoch: float
    values: dict
    laplace: float = 1.0
    normalization: str = "max"

    def __post_init__(self):
        b = bucket_count(self.granularity)
        for fid, vec in self.values.items():
            vec = np.asarray(vec, dtype=np.float64)
            if vec.shape != (b,):
                raise ValueError(f"profile for {fid!r} needs {b} buckets")
            if np.any(vec < 0) or np.any(vec > 1):
                raise ValueError(f"profile for {fid!r} must lie in [0, 1]")
            self.values[fid] = vec

    def follower_ids(self) -> list:
        return list(self.values.keys())

    def step_schedule(self, follower_ids, t0: float, tf: float) -> StepSchedule:
        """Unroll bucket weights into window-time step functions.

        Knots land on every bucket boundary (day or hour edges in
        absolute time) that falls inside (t0, tf).
        """
        if tf <= t0:
            raise ValueError("window must have positive length")
        width = _SECONDS_PER_DAY if self.granularity == "weekday" else _SECONDS_PER_HOUR
        a0 = self.epoch + t0
        first = np.floor(a0 / width) * width + width
        edges_abs = np.arange(first, self.epoch + tf, width)
        knots = np.concatenate([[t0], edges_abs - self.epoch, [tf]])
        starts_abs = np.concatenate([[a0], edges_abs])
        buckets = bucket_index(starts_abs, self.granularity)
        values = np.empty((len(follower_ids), knots.shape[0] - 1))
        for i, fid in enumerate(follower_ids):
            if fid not in self.values:
                raise KeyError(f"no profile for follower {fid!r}")
            values[i] = self.values[fid][buckets]
        return StepSchedule(knots, values)


def estimate_significance(
    events,
    follower_ids,
    epoch: float,
    granularity: str = "weekday",
    laplace: float = 1.0,
) -> SignificanceProfile:
    """Profiles for each follower from their own events in a shared log.

    ``events`` is an :class:`~whentopost.point_process.EventStream`
    whose sources include the followers' own activity.  A follower with
    no events gets the flat fallback (with a warning).
    """
    values = {}
    for fid in follower_ids:
        times = events.times[events.sources == fid]
        values[fid] = bucket_weights(times, epoch, granularity, laplace)
    return SignificanceProfile(
        granularity=granularity,
        epoch=float(epoch),
        values=values,
        laplace=float(laplace),
    )
