"""Domain types and the shared prediction-error / time-window semantics.

Everything here is immutable and pure, so values can be shared freely
across threads and cached without copying.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from enum import Enum

SECONDS_PER_HOUR = 3600
SECONDS_PER_DAY = 86400
SECONDS_PER_WEEK = 604800

# Ten-minute buckets used as the discrete time feature in reports.
TIME_BUCKET_SECONDS = 600


class EmptyAggregateError(ValueError):
    """Raised when an aggregation statistic is asked of an empty sample."""


class NoHistoryError(LookupError):
    """Raised when a predictor has no usable history session at all."""


class ErrorKind(Enum):
    ABSOLUTE = "absolute"
    NORMALIZED_ABSOLUTE = "normalized_absolute"
    SIGNED = "signed"
    NORMALIZED_SIGNED = "normalized_signed"


class WindowKind(Enum):
    RECENCY = "recency"
    SAME_HOUR_OF_DAY = "same_hour_of_day"
    SAME_HOUR_OF_WEEK = "same_hour_of_week"


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered set of categorical feature names describing a session."""

    names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        if len(self.names) < 1:
            raise ValueError("schema needs at least one feature")
        if len(set(self.names)) != len(self.names):
            raise ValueError(f"duplicate feature names: {self.names}")
        if any(not n for n in self.names):
            raise ValueError("feature names must be non-empty")

    @property
    def arity(self) -> int:
        return len(self.names)

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownFeatureError(
                f"feature {name!r} not in schema {self.names}"
            ) from None


class UnknownFeatureError(ValueError):
    """A configured feature name does not exist in the active schema."""


# The seven FCC broadband-measurement features this package defaults to.
FCC_SCHEMA = FeatureSchema(
    ("ClientID", "ISP", "State", "Technology", "Target", "Downlink", "Uplink")
)


@dataclass(frozen=True)
class SessionRecord:
    """One measured session: categorical feature values, when, and how fast.

    `features` holds opaque categorical tokens, one per schema feature, in
    schema order. Advertised link speeds are categories too, never numbers.
    `timestamp` is Unix seconds UTC; `throughput` is Mbit/s.
    """

    features: tuple[str, ...]
    timestamp: int
    throughput: float


@dataclass(frozen=True)
class TimeWindow:
    """History window relative to a target session.

    All windows are half-open: a candidate at exactly the lower bound is
    included, the target instant itself is excluded. `span` is seconds for
    recency windows, days back for same-hour-of-day, weeks back for
    same-hour-of-week. Hour matching uses UTC.
    """

    kind: WindowKind
    span: float

    def __post_init__(self):
        if self.kind is WindowKind.RECENCY:
            if not self.span > 0:
                raise ValueError(f"recency span must be positive: {self.span}")
        elif self.kind is WindowKind.SAME_HOUR_OF_DAY:
            if self.span != int(self.span) or not 1 <= self.span <= 7:
                raise ValueError(f"days back must be in 1..7: {self.span}")
        else:
            if self.span != int(self.span) or not 1 <= self.span <= 3:
                raise ValueError(f"weeks back must be in 1..3: {self.span}")

    @classmethod
    def recency(cls, seconds: float) -> "TimeWindow":
        return cls(WindowKind.RECENCY, float(seconds))

    @classmethod
    def same_hour_of_day(cls, days_back: int) -> "TimeWindow":
        return cls(WindowKind.SAME_HOUR_OF_DAY, float(days_back))

    @classmethod
    def same_hour_of_week(cls, weeks_back: int) -> "TimeWindow":
        return cls(WindowKind.SAME_HOUR_OF_WEEK, float(weeks_back))

    def seconds_back(self) -> float:
        if self.kind is WindowKind.RECENCY:
            return self.span
        if self.kind is WindowKind.SAME_HOUR_OF_DAY:
            return self.span * SECONDS_PER_DAY
        return self.span * SECONDS_PER_WEEK

    def label(self) -> str:
        if self.kind is WindowKind.RECENCY:
            if math.isinf(self.span):
                return "recency:inf"
            return f"recency:{int(self.span)}s"
        if self.kind is WindowKind.SAME_HOUR_OF_DAY:
            return f"same_hour_of_day:{int(self.span)}d"
        return f"same_hour_of_week:{int(self.span)}w"


@dataclass(frozen=True)
class PredictionModel:
    """A (feature subset, time window) pair defining one way to aggregate
    history. An empty mask aggregates every session in the window."""

    feature_mask: frozenset[int]
    window: TimeWindow

    def __post_init__(self):
        object.__setattr__(self, "feature_mask", frozenset(self.feature_mask))

    @property
    def mask_bits(self) -> int:
        return sum(1 << i for i in self.feature_mask)

    def label(self, schema: FeatureSchema | None = None) -> str:
        if schema is None:
            feats = ",".join(str(i) for i in sorted(self.feature_mask))
        else:
            feats = ",".join(schema.names[i] for i in sorted(self.feature_mask))
        return f"[{feats}]@{self.window.label()}"


def prediction_error(p: float, q: float, kind: ErrorKind) -> float:
    """Error of prediction p against ground truth q, per the chosen kind."""
    if kind is ErrorKind.ABSOLUTE:
        return abs(p - q)
    if kind is ErrorKind.SIGNED:
        return p - q
    if q <= 0:
        raise ValueError(f"normalized error needs positive truth, got q={q}")
    if kind is ErrorKind.NORMALIZED_ABSOLUTE:
        return abs(p - q) / q
    return (p - q) / q


def median_with_factor(samples, k: float) -> float:
    """Median of `samples` scaled by a compensation factor k.

    Even-length medians are the mean of the two middle order statistics.
    """
    if not samples:
        raise EmptyAggregateError("median of empty aggregate")
    if k < 0:
        raise ValueError(f"factor must be non-negative: {k}")
    return statistics.median(samples) * k


def time_bucket(timestamp: int) -> int:
    """10-minute interval id for a timestamp."""
    return timestamp // TIME_BUCKET_SECONDS


def hour_of_day(timestamp: int) -> int:
    """UTC hour 0..23."""
    return (timestamp % SECONDS_PER_DAY) // SECONDS_PER_HOUR


def hour_of_week(timestamp: int) -> int:
    """UTC hour-of-week 0..167 (anchor irrelevant; only equality is used)."""
    return (timestamp % SECONDS_PER_WEEK) // SECONDS_PER_HOUR


def matches(model: PredictionModel, candidate: SessionRecord,
            target: SessionRecord) -> bool:
    """Does `candidate` fall in the model's window and agree with `target`
    on every masked feature? Always false at or after the target instant."""
    t = candidate.timestamp
    hi = target.timestamp
    lo = hi - model.window.seconds_back()
    if not lo <= t < hi:
        return False
    kind = model.window.kind
    if kind is WindowKind.SAME_HOUR_OF_DAY:
        if hour_of_day(t) != hour_of_day(hi):
            return False
    elif kind is WindowKind.SAME_HOUR_OF_WEEK:
        if hour_of_week(t) != hour_of_week(hi):
            return False
    return all(candidate.features[i] == target.features[i]
               for i in model.feature_mask)
