"""Per-session model search: pick the (feature subset, time window) pair that
predicted similar recent sessions best, train a compensation factor, predict.

The search scores every model in the pool by its mean normalized absolute
error over the target's estimation set, with k=1. A model that cannot
predict some estimation session (empty aggregate) is disqualified outright
rather than partially scored, so sparse models gain no advantage. The chosen
model must also aggregate at least `min_support` sessions for the target
itself; otherwise it is removed from consideration and the search repeats.

The batched evaluation below is arithmetic-identical to composing
`aggregate` + `median_with_factor` + `prediction_error` term by term:
medians take the mean of the two middle order statistics, and error terms
are accumulated left to right. Tests assert bit-exact agreement with that
reference path.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import (
    ErrorKind,
    FeatureSchema,
    NoHistoryError,
    PredictionModel,
    SessionRecord,
    TimeWindow,
    prediction_error,
)
from .history import (
    DEFAULT_ESTIMATION_FEATURES,
    DEFAULT_ESTIMATION_WINDOW,
    HistoryIndex,
    aggregate,
)

DEFAULT_RECENCY_SPANS = (600, 1800, 3600, 7200, 14400, 21600, 36000)


class NoUsableModelError(LookupError):
    """No pool model has a defined empirical error for this target."""


@dataclass(frozen=True)
class LearnerConfig:
    min_support: int = 20
    k_min: float = 0.0
    k_max: float = 5.0
    k_step: float = 0.05
    recency_spans: tuple = DEFAULT_RECENCY_SPANS
    same_day_lookbacks: tuple = (1, 2, 3, 4, 5, 6, 7)
    same_week_lookbacks: tuple = (1, 2, 3)
    estimation_features: tuple = DEFAULT_ESTIMATION_FEATURES
    estimation_window: float = DEFAULT_ESTIMATION_WINDOW

    def __post_init__(self):
        if self.min_support < 1:
            raise ValueError(f"min_support must be >= 1: {self.min_support}")
        if not 0 <= self.k_min <= self.k_max:
            raise ValueError(f"need 0 <= k_min <= k_max: {self.k_min}, {self.k_max}")
        if self.k_step <= 0:
            raise ValueError(f"k_step must be positive: {self.k_step}")

    def k_grid(self) -> tuple[float, ...]:
        count = int((self.k_max - self.k_min) / self.k_step + 1e-9) + 1
        pts = [self.k_min + i * self.k_step for i in range(count)]
        if pts[-1] != self.k_max:
            pts.append(self.k_max)
        return tuple(pts)

    def windows(self) -> tuple[TimeWindow, ...]:
        return tuple(
            [TimeWindow.recency(s) for s in self.recency_spans]
            + [TimeWindow.same_hour_of_day(d) for d in self.same_day_lookbacks]
            + [TimeWindow.same_hour_of_week(w) for w in self.same_week_lookbacks]
        )


class FallbackLevel(Enum):
    NONE = "none"
    POOL_EXHAUSTED_RECENT = "pool_exhausted_recent"
    POOL_EXHAUSTED_GLOBAL = "pool_exhausted_global"


@dataclass(frozen=True)
class LearnedPredictor:
    """What the search settled on for one target session."""

    model: PredictionModel | None
    scale: float
    support: int
    fallback_level: FallbackLevel = FallbackLevel.NONE


@dataclass(frozen=True)
class ModelPool:
    """Every candidate model, in deterministic order: feature masks ascending
    by bitmask value, windows in declared order within each mask. Ties in
    empirical error resolve toward the earlier pool position."""

    models: tuple[PredictionModel, ...]

    def __len__(self):
        return len(self.models)

    def window_groups(self):
        """(window, [(pool index, mask bits), ...]) per distinct window."""
        groups: dict = {}
        for idx, m in enumerate(self.models):
            groups.setdefault(m.window, []).append((idx, m.mask_bits))
        return list(groups.items())


def enumerate_models(schema: FeatureSchema, config: LearnerConfig) -> ModelPool:
    """Cross product of all 2^n feature subsets with all configured windows."""
    n = schema.arity
    windows = config.windows()
    models = []
    for bits in range(1 << n):
        mask = frozenset(i for i in range(n) if bits >> i & 1)
        for w in windows:
            models.append(PredictionModel(mask, w))
    return ModelPool(tuple(models))


def _exact_median(vals: np.ndarray) -> float:
    # same arithmetic as statistics.median: mean of middle order statistics
    v = np.sort(vals)
    m = v.size // 2
    if v.size % 2:
        return float(v[m])
    return float((v[m - 1] + v[m]) / 2)


def model_medians(index: HistoryIndex, pool: ModelPool,
                  session: SessionRecord) -> np.ndarray:
    """Median aggregate throughput for every pool model, for one session.

    Entry i is median(Agg(pool.models[i], session)), NaN when the aggregate
    is empty. One pass per distinct window: records in the window are tagged
    with the bitmask of features on which they agree with the session, and
    each model selects the rows whose tag covers its mask.
    """
    n = index.schema.arity
    out = np.full(len(pool.models), np.nan)
    codes = [index.code_of(f, session.features[f]) for f in range(n)]
    for window, group in pool.window_groups():
        positions = index.window_positions(window, session)
        if positions.size == 0:
            continue
        agree = np.zeros(positions.size, dtype=np.int64)
        for f, code in enumerate(codes):
            if code is not None:
                agree |= (index.feature_codes(f, positions) == code).astype(np.int64) << f
        tput = index.throughputs(positions)
        for idx, bits in group:
            vals = tput if bits == 0 else tput[(agree & bits) == bits]
            if vals.size:
                out[idx] = _exact_median(vals)
    return out


def model_supports(index: HistoryIndex, pool: ModelPool,
                   session: SessionRecord) -> np.ndarray:
    """|Agg(model, session)| for every pool model."""
    n = index.schema.arity
    out = np.zeros(len(pool.models), dtype=np.int64)
    codes = [index.code_of(f, session.features[f]) for f in range(n)]
    for window, group in pool.window_groups():
        positions = index.window_positions(window, session)
        if positions.size == 0:
            continue
        agree = np.zeros(positions.size, dtype=np.int64)
        for f, code in enumerate(codes):
            if code is not None:
                agree |= (index.feature_codes(f, positions) == code).astype(np.int64) << f
        for idx, bits in group:
            out[idx] = positions.size if bits == 0 else int(((agree & bits) == bits).sum())
    return out


def empirical_error(index: HistoryIndex, model: PredictionModel,
                    est_set, k: float = 1.0) -> float | None:
    """Mean normalized absolute error of the model over the estimation set.

    None means undefined: the estimation set is empty, or the model's
    aggregate is empty for at least one estimation session.
    """
    if not est_set:
        return None
    total = 0.0
    for s in est_set:
        agg = aggregate(index, model, s)
        if not agg:
            return None
        p = _exact_median(np.fromiter((r.throughput for r in agg),
                                      dtype=np.float64, count=len(agg))) * k
        total += prediction_error(p, s.throughput, ErrorKind.NORMALIZED_ABSOLUTE)
    return total / len(est_set)


def _errors_from_rows(rows, truths, k: float = 1.0) -> np.ndarray:
    """Combine per-session median rows into one error per model.

    Serial left-to-right accumulation keeps the result bit-identical to the
    scalar reference in `empirical_error`. NaN medians poison the mean, which
    is exactly the undefined-propagation rule.
    """
    acc = np.abs(rows[0] * k - truths[0]) / truths[0]
    for j in range(1, len(rows)):
        acc = acc + np.abs(rows[j] * k - truths[j]) / truths[j]
    return acc / len(rows)


def _scale_from_medians(meds: np.ndarray, truths: np.ndarray,
                        grid) -> tuple[float, float]:
    """Grid argmin of the post-compensation error; ties prefer k nearest 1,
    then the smaller k. Returns (k, error at k)."""
    best_k, best_err = None, None
    for k in grid:
        total = 0.0
        for m, w in zip(meds, truths):
            total += abs(m * k - w) / w
        err = total / len(meds)
        if (best_err is None or err < best_err
                or (err == best_err and (abs(k - 1.0), k) < (abs(best_k - 1.0), best_k))):
            best_k, best_err = k, err
    return best_k, best_err


def _estimation_positions(index: HistoryIndex, target: SessionRecord,
                          config: LearnerConfig) -> np.ndarray:
    mask = frozenset(index.schema.index_of(name)
                     for name in config.estimation_features)
    model = PredictionModel(mask, TimeWindow.recency(config.estimation_window))
    return index.model_positions(model, target)


class MedianCache:
    """Memo of per-session model-median vectors, keyed by record position.

    Valid across growing history snapshots: every window ends strictly
    before the session's own timestamp, so the vector never changes once
    all earlier records are visible — which is guaranteed whenever the
    session shows up in some later target's estimation set.
    """

    def __init__(self, pool: ModelPool):
        self.pool = pool
        self._store: dict[int, tuple[float, np.ndarray]] = {}

    def medians(self, index: HistoryIndex, position: int) -> np.ndarray:
        hit = self._store.get(position)
        if hit is None:
            record = index.records[position]
            hit = (float(record.timestamp), model_medians(index, self.pool, record))
            self._store[position] = hit
        return hit[1]

    def prune(self, min_timestamp: float):
        """Drop sessions too old to appear in any future estimation set."""
        stale = [p for p, (ts, _) in self._store.items() if ts < min_timestamp]
        for p in stale:
            del self._store[p]


def learn_model(index: HistoryIndex, pool: ModelPool, target: SessionRecord,
                config: LearnerConfig = LearnerConfig(),
                excluded=frozenset()) -> PredictionModel:
    """Pool model minimizing empirical error (k=1) over the estimation set.

    Only models with defined error compete; ties go to the earlier pool
    position. `excluded` holds pool indices already rejected by the support
    loop in `predict`. Raises NoUsableModelError when nothing qualifies.
    """
    est_pos = _estimation_positions(index, target, config)
    if est_pos.size == 0:
        raise NoUsableModelError("estimation set is empty")
    rows = [model_medians(index, pool, index.records[p]) for p in est_pos]
    truths = [index.records[p].throughput for p in est_pos]
    errors = _errors_from_rows(rows, truths, k=1.0)
    best = None
    for i in range(len(pool.models)):
        if i in excluded or np.isnan(errors[i]):
            continue
        if best is None or errors[i] < errors[best]:
            best = i
    if best is None:
        raise NoUsableModelError("every candidate model has undefined error")
    return pool.models[best]


def learn_scale(index: HistoryIndex, model: PredictionModel, est_set,
                config: LearnerConfig = LearnerConfig()) -> float:
    """Best compensation factor for the chosen model over the estimation set.

    Returns 1.0 (neutral) when the error is undefined at every grid point,
    i.e. some estimation session has an empty aggregate.
    """
    meds = []
    truths = []
    for s in est_set:
        agg = aggregate(index, model, s)
        if not agg:
            return 1.0
        meds.append(_exact_median(np.fromiter((r.throughput for r in agg),
                                              dtype=np.float64, count=len(agg))))
        truths.append(s.throughput)
    if not meds:
        return 1.0
    k, _ = _scale_from_medians(np.asarray(meds), np.asarray(truths), config.k_grid())
    return k


def predict(index: HistoryIndex, target: SessionRecord, pool: ModelPool,
            config: LearnerConfig = LearnerConfig(),
            cache: MedianCache | None = None) -> tuple[float, LearnedPredictor]:
    """Predicted throughput for the target plus what the search settled on.

    Search loop: best model by empirical error with k=1; models whose
    aggregate for the target holds fewer than `min_support` sessions are
    struck from the pool (for this target only) and the search repeats.
    Candidates sorted by (error, pool position) make that loop a single
    scan, since exclusions never change the other models' errors.

    When no model qualifies, falls back to the median over the widest
    configured recency window, then to the median of the whole visible
    history; an empty history raises NoHistoryError.
    """
    est_pos = _estimation_positions(index, target, config)
    if est_pos.size:
        if cache is not None:
            rows = [cache.medians(index, int(p)) for p in est_pos]
        else:
            rows = [model_medians(index, pool, index.records[p]) for p in est_pos]
        truths = [index.records[p].throughput for p in est_pos]
        errors = _errors_from_rows(rows, truths, k=1.0)
        supports = model_supports(index, pool, target)
        order = sorted((i for i in range(len(pool.models))
                        if not np.isnan(errors[i])),
                       key=lambda i: (errors[i], i))
        for i in order:
            if supports[i] < config.min_support:
                continue
            model = pool.models[i]
            meds = np.array([row[i] for row in rows])
            k_star, _ = _scale_from_medians(meds, np.asarray(truths),
                                            config.k_grid())
            positions = index.model_positions(model, target)
            value = _exact_median(index.throughputs(positions)) * k_star
            learned = LearnedPredictor(model, k_star, int(supports[i]))
            return value, learned

    # pool exhausted (or nothing to estimate with): medians of recent, then all
    recent = TimeWindow.recency(max(config.recency_spans))
    positions = index.window_positions(recent, target)
    if positions.size:
        value = _exact_median(index.throughputs(positions))
        return value, LearnedPredictor(None, 1.0, int(positions.size),
                                       FallbackLevel.POOL_EXHAUSTED_RECENT)
    positions = index.window_positions(TimeWindow.recency(np.inf), target)
    if positions.size:
        value = _exact_median(index.throughputs(positions))
        return value, LearnedPredictor(None, 1.0, int(positions.size),
                                       FallbackLevel.POOL_EXHAUSTED_GLOBAL)
    raise NoHistoryError("no session precedes the target")
