"""Time-ordered session store answering window/feature aggregation queries.

The index is a frozen snapshot: records are stably sorted by timestamp at
build time and never mutated afterwards. Replay-style evaluation asks for
`prefix(n)` views, which share the underlying arrays and simply bound how
much of the history is visible.

Query plan: postings (per feature value, and per UTC hour for the calendar
windows) are intersected after clipping each to the window's timestamp range
by binary search, so a query touches only candidate rows instead of the
whole history. Tests cross-check every query against a linear scan of
`core.matches`.
"""

from __future__ import annotations

import numpy as np

from .core import (
    FeatureSchema,
    PredictionModel,
    SessionRecord,
    TimeWindow,
    WindowKind,
    hour_of_day,
    hour_of_week,
)

DEFAULT_ESTIMATION_FEATURES = ("Target", "ISP", "Technology", "Downlink")
DEFAULT_ESTIMATION_WINDOW = 4 * 3600


class HistoryIndex:
    """Immutable store of SessionRecords with value and hour postings."""

    def __init__(self, records, schema: FeatureSchema, *, _shared=None, _size=None):
        if _shared is not None:
            # prefix view: share every array, bound visibility
            (self.records, self._ts, self._tput, self._codes, self._code_maps,
             self._postings, self._hod_postings, self._how_postings) = _shared
            self.schema = schema
            self.size = _size
            return

        self.schema = schema
        ordered = sorted(records, key=lambda r: r.timestamp)  # stable
        self.records: tuple[SessionRecord, ...] = tuple(ordered)
        n = schema.arity
        size = len(ordered)
        self.size = size

        self._ts = np.fromiter((r.timestamp for r in ordered), dtype=np.float64,
                               count=size)
        self._tput = np.fromiter((r.throughput for r in ordered), dtype=np.float64,
                                 count=size)

        # integer-code the categorical values per feature
        self._code_maps: list[dict[str, int]] = [{} for _ in range(n)]
        self._codes = np.empty((n, size), dtype=np.int32)
        for f in range(n):
            cmap = self._code_maps[f]
            col = self._codes[f]
            for i, rec in enumerate(ordered):
                v = rec.features[f]
                code = cmap.get(v)
                if code is None:
                    code = len(cmap)
                    cmap[v] = code
                col[i] = code

        # postings: (feature, code) -> ascending positions + their timestamps
        self._postings: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}
        for f in range(n):
            for code in range(len(self._code_maps[f])):
                pos = np.nonzero(self._codes[f] == code)[0]
                self._postings[(f, code)] = (pos, self._ts[pos])

        hod = np.fromiter((hour_of_day(r.timestamp) for r in ordered),
                          dtype=np.int64, count=size)
        how = np.fromiter((hour_of_week(r.timestamp) for r in ordered),
                          dtype=np.int64, count=size)
        self._hod_postings = {}
        for h in range(24):
            pos = np.nonzero(hod == h)[0]
            self._hod_postings[h] = (pos, self._ts[pos])
        self._how_postings = {}
        for h in range(168):
            pos = np.nonzero(how == h)[0]
            self._how_postings[h] = (pos, self._ts[pos])

    def prefix(self, n: int) -> "HistoryIndex":
        """Snapshot exposing only the first n records (by sorted position)."""
        if not 0 <= n <= len(self.records):
            raise ValueError(f"prefix bound {n} out of range")
        shared = (self.records, self._ts, self._tput, self._codes,
                  self._code_maps, self._postings, self._hod_postings,
                  self._how_postings)
        return HistoryIndex(None, self.schema, _shared=shared, _size=n)

    def code_of(self, feature: int, value: str) -> int | None:
        """Integer code for a feature value; None if never seen in history."""
        return self._code_maps[feature].get(value)

    def throughputs(self, positions: np.ndarray) -> np.ndarray:
        return self._tput[positions]

    def feature_codes(self, feature: int, positions: np.ndarray) -> np.ndarray:
        return self._codes[feature][positions]

    # -- window machinery -------------------------------------------------

    def _clip(self, posting, lo: float, hi: float) -> np.ndarray:
        """Positions from a posting with lo <= ts < hi and position < size."""
        pos, ts = posting
        j0 = np.searchsorted(ts, lo, side="left")
        j1 = np.searchsorted(ts, hi, side="left")
        out = pos[j0:j1]
        if out.size and out[-1] >= self.size:
            out = out[:np.searchsorted(out, self.size, side="left")]
        return out

    def window_positions(self, window: TimeWindow, target: SessionRecord) -> np.ndarray:
        """Ascending positions of all visible records inside the window
        (feature mask not applied)."""
        hi = float(target.timestamp)
        lo = hi - window.seconds_back()
        if window.kind is WindowKind.RECENCY:
            i0 = np.searchsorted(self._ts[:self.size], lo, side="left")
            i1 = np.searchsorted(self._ts[:self.size], hi, side="left")
            return np.arange(i0, i1)
        if window.kind is WindowKind.SAME_HOUR_OF_DAY:
            posting = self._hod_postings[hour_of_day(target.timestamp)]
        else:
            posting = self._how_postings[hour_of_week(target.timestamp)]
        return self._clip(posting, lo, hi)

    def model_positions(self, model: PredictionModel, target: SessionRecord) -> np.ndarray:
        """Ascending positions of records matching the model for the target."""
        hi = float(target.timestamp)
        lo = hi - model.window.seconds_back()

        constraints = []
        for f in sorted(model.feature_mask):
            code = self.code_of(f, target.features[f])
            if code is None:
                return np.empty(0, dtype=np.int64)
            constraints.append(self._postings[(f, code)])
        kind = model.window.kind
        if kind is WindowKind.SAME_HOUR_OF_DAY:
            constraints.append(self._hod_postings[hour_of_day(target.timestamp)])
        elif kind is WindowKind.SAME_HOUR_OF_WEEK:
            constraints.append(self._how_postings[hour_of_week(target.timestamp)])

        if not constraints:
            return self.window_positions(model.window, target)

        clipped = [self._clip(p, lo, hi) for p in constraints]
        clipped.sort(key=len)
        result = clipped[0]
        for other in clipped[1:]:
            if result.size == 0:
                break
            result = np.intersect1d(result, other, assume_unique=True)
        return result


def build_index(records, schema: FeatureSchema) -> HistoryIndex:
    """Index a batch of records. Order among equal timestamps is preserved."""
    for r in records:
        if len(r.features) != schema.arity:
            raise ValueError(
                f"record has {len(r.features)} features, schema expects {schema.arity}"
            )
    return HistoryIndex(records, schema)


def aggregate(index: HistoryIndex, model: PredictionModel,
              target: SessionRecord) -> list[SessionRecord]:
    """All visible records matching the model for this target, in time order.

    Equivalent to `[r for r in index.records if matches(model, r, target)]`;
    the postings plan is just faster.
    """
    positions = index.model_positions(model, target)
    records = index.records
    return [records[p] for p in positions]


def estimation_set(index: HistoryIndex, target: SessionRecord,
                   feature_names=DEFAULT_ESTIMATION_FEATURES,
                   window_seconds: float = DEFAULT_ESTIMATION_WINDOW) -> list[SessionRecord]:
    """Recent sessions similar to the target, used to score candidate models.

    By default: same Target/ISP/Technology/Downlink within the last 4 hours.
    Raises UnknownFeatureError if a configured feature is missing from the
    schema; we never silently drop a match constraint.
    """
    mask = frozenset(index.schema.index_of(name) for name in feature_names)
    model = PredictionModel(mask, TimeWindow.recency(window_seconds))
    return aggregate(index, model, target)
