"""Reference predictors and the relative-information-gain diagnostic.

Each baseline aggregates a fixed slice of history: same advertised downlink
speed (last-mile), most recent same client-target session (last-sample),
everything (global), or full-feature matches in a short window (nearest
neighbor). They raise NoHistoryError instead of guessing, so evaluation can
report coverage separately from accuracy.
"""

from __future__ import annotations

import math
from collections import Counter
from enum import Enum

import numpy as np

from .core import NoHistoryError, PredictionModel, SessionRecord, TimeWindow
from .history import HistoryIndex
from .learner import _exact_median


class BaselineKind(Enum):
    LAST_MILE = "last_mile"
    LAST_SAMPLE = "last_sample"
    GLOBAL = "global"
    NEAREST_NEIGHBOR = "nearest_neighbor"


def _median_of_positions(index: HistoryIndex, positions) -> float:
    if positions.size == 0:
        raise NoHistoryError("no matching prior session")
    return _exact_median(index.throughputs(positions))


def predict_last_mile(index: HistoryIndex, target: SessionRecord,
                      downlink_feature: str = "Downlink") -> float:
    """Median throughput of every prior session sharing the target's
    advertised downlink speed, with no time window."""
    mask = frozenset({index.schema.index_of(downlink_feature)})
    model = PredictionModel(mask, TimeWindow.recency(math.inf))
    return _median_of_positions(index, index.model_positions(model, target))


def predict_last_sample(index: HistoryIndex, target: SessionRecord,
                        client_feature: str = "ClientID",
                        target_feature: str = "Target") -> float:
    """Throughput of the most recent prior session of the same client-target
    pair; ties on timestamp resolve to the latest ingested."""
    mask = frozenset({index.schema.index_of(client_feature),
                      index.schema.index_of(target_feature)})
    model = PredictionModel(mask, TimeWindow.recency(math.inf))
    positions = index.model_positions(model, target)
    if positions.size == 0:
        raise NoHistoryError("client-target pair has no prior session")
    return index.records[int(positions[-1])].throughput


def predict_global(index: HistoryIndex, target: SessionRecord) -> float:
    """Median of every prior session, features and timing ignored."""
    model = PredictionModel(frozenset(), TimeWindow.recency(math.inf))
    return _median_of_positions(index, index.model_positions(model, target))


def predict_nearest_neighbor(index: HistoryIndex, target: SessionRecord,
                             window_seconds: float = 300) -> float:
    """Median of prior sessions matching every schema feature within a short
    window (default 5 minutes). Usually starved for data, by design."""
    mask = frozenset(range(index.schema.arity))
    model = PredictionModel(mask, TimeWindow.recency(window_seconds))
    return _median_of_positions(index, index.model_positions(model, target))


def _entropy(counts, total: int) -> float:
    h = 0.0
    for c in counts:
        p = c / total
        h -= p * math.log2(p)
    return h


def relative_information_gain(labels, feature) -> float:
    """1 - H(Y|X)/H(Y) from empirical frequencies; 0 when H(Y) is zero.

    Measures how much knowing the feature value reduces label uncertainty.
    Clamped into [0, 1] against float round-off.
    """
    if len(labels) != len(feature):
        raise ValueError(f"length mismatch: {len(labels)} labels, {len(feature)} feature values")
    if not labels:
        raise ValueError("empty input")
    total = len(labels)
    h_y = _entropy(Counter(labels).values(), total)
    if h_y == 0:
        return 0.0
    by_x: dict = {}
    for y, x in zip(labels, feature):
        by_x.setdefault(x, []).append(y)
    h_y_given_x = 0.0
    for ys in by_x.values():
        h_y_given_x += (len(ys) / total) * _entropy(Counter(ys).values(), len(ys))
    return min(1.0, max(0.0, 1.0 - h_y_given_x / h_y))


def discretize_log(values, bins: int = 10) -> list[int]:
    """Equal-width bin labels over log-throughput, for feeding positive
    continuous values to relative_information_gain."""
    if bins < 1:
        raise ValueError(f"bins must be >= 1: {bins}")
    vals = np.asarray(list(values), dtype=np.float64)
    if vals.size == 0:
        return []
    if np.any(vals <= 0):
        raise ValueError("log binning needs positive values")
    logs = np.log(vals)
    lo, hi = float(logs.min()), float(logs.max())
    if lo == hi:
        return [0] * vals.size
    idx = np.minimum((bins * (logs - lo) / (hi - lo)).astype(np.int64), bins - 1)
    return [int(i) for i in idx]
