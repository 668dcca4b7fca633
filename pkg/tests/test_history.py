import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sessioncast.core import (
    FeatureSchema,
    PredictionModel,
    SessionRecord,
    TimeWindow,
    UnknownFeatureError,
    matches,
)
from sessioncast.history import aggregate, build_index, estimation_set

BASE = 1_000_000_000
SCHEMA3 = FeatureSchema(("ClientID", "ISP", "Target"))
SCHEMA4 = FeatureSchema(("Target", "ISP", "Technology", "Downlink"))


def scan_aggregate(records, model, target):
    """Reference implementation: stable time sort plus a full matches() scan."""
    ordered = sorted(records, key=lambda r: r.timestamp)
    return [r for r in ordered if matches(model, r, target)]


def _rec(ts, features, tput=1.0):
    return SessionRecord(tuple(features), ts, tput)


class TestBuildIndex:
    def test_empty(self):
        index = build_index([], SCHEMA3)
        assert index.records == ()
        assert index.size == 0

    def test_sorts_by_timestamp(self):
        records = [_rec(BASE + 30, ("c", "i", "t")),
                   _rec(BASE + 10, ("c", "i", "t")),
                   _rec(BASE + 20, ("c", "i", "t"))]
        index = build_index(records, SCHEMA3)
        assert [r.timestamp for r in index.records] == [BASE + 10, BASE + 20, BASE + 30]

    def test_duplicate_timestamps_keep_ingest_order(self):
        first = _rec(BASE, ("c1", "i", "t"), 1.0)
        second = _rec(BASE, ("c2", "i", "t"), 2.0)
        index = build_index([first, second], SCHEMA3)
        assert index.records == (first, second)

    def test_arity_mismatch_rejected(self):
        with pytest.raises(ValueError):
            build_index([_rec(BASE, ("c", "i"))], SCHEMA3)


class TestAggregate:
    def test_empty_index(self):
        index = build_index([], SCHEMA3)
        model = PredictionModel(frozenset(), TimeWindow.recency(36000))
        assert aggregate(index, model, _rec(BASE, ("c", "i", "t"))) == []

    def test_empty_mask_recency_catches_all(self):
        records = [_rec(BASE - 600 * (i + 1), (f"c{i}", f"i{i}", f"t{i}"))
                   for i in range(5)]
        index = build_index(records, SCHEMA3)
        model = PredictionModel(frozenset(), TimeWindow.recency(36000))
        assert len(aggregate(index, model, _rec(BASE, ("c", "i", "t")))) == 5

    def test_planted_subset_recovered_exactly(self):
        # 40 of 200 records share the target's (ISP, Target) inside the last
        # hour; aggregate must return exactly those, per the scan oracle
        rng = random.Random(7)
        target = _rec(BASE, ("cT", "ispX", "tgtY"))
        planted = [
            _rec(BASE - rng.randint(1, 3599), (f"c{i}", "ispX", "tgtY"), 5.0)
            for i in range(40)
        ]
        decoys = []
        for i in range(160):
            if i % 2:
                feats = (f"c{i}", "ispOther", rng.choice(["tgtY", "tgtZ"]))
                ts = BASE - rng.randint(1, 3599)
            else:
                feats = (f"c{i}", "ispX", "tgtY")
                ts = BASE - rng.randint(3600 + 1, 90000)
            decoys.append(_rec(ts, feats, 1.0))
        corpus = planted + decoys
        rng.shuffle(corpus)
        index = build_index(corpus, SCHEMA3)
        model = PredictionModel({1, 2}, TimeWindow.recency(3600))

        got = aggregate(index, model, target)
        assert {id(r) for r in got} == {id(r) for r in planted}
        assert got == scan_aggregate(corpus, model, target)

    def test_unseen_feature_value_matches_nothing(self):
        records = [_rec(BASE - 100, ("c", "i", "t"))]
        index = build_index(records, SCHEMA3)
        model = PredictionModel({1}, TimeWindow.recency(3600))
        assert aggregate(index, model, _rec(BASE, ("c", "new-isp", "t"))) == []


records_strategy = st.lists(
    st.builds(
        _rec,
        st.integers(min_value=BASE - 3 * 604800, max_value=BASE + 7200),
        st.tuples(st.sampled_from("ab"), st.sampled_from("cd"), st.sampled_from("ef")),
        st.floats(min_value=0.1, max_value=100),
    ),
    max_size=60,
)

window_strategy = st.one_of(
    st.builds(TimeWindow.recency,
              st.one_of(st.integers(1, 2 * 604800), st.just(math.inf))),
    st.builds(TimeWindow.same_hour_of_day, st.integers(1, 7)),
    st.builds(TimeWindow.same_hour_of_week, st.integers(1, 3)),
)


class TestScanOracle:
    @settings(max_examples=150, deadline=None)
    @given(records=records_strategy,
           mask=st.sets(st.integers(0, 2)),
           window=window_strategy,
           target_ts=st.integers(min_value=BASE - 604800, max_value=BASE + 7200),
           target_feats=st.tuples(st.sampled_from("ab"), st.sampled_from("cd"),
                                  st.sampled_from("ef")))
    def test_aggregate_equals_linear_scan(self, records, mask, window,
                                          target_ts, target_feats):
        index = build_index(records, SCHEMA3)
        model = PredictionModel(frozenset(mask), window)
        target = _rec(target_ts, target_feats)
        assert aggregate(index, model, target) == scan_aggregate(records, model, target)

    @settings(max_examples=60, deadline=None)
    @given(records=records_strategy,
           mask=st.sets(st.integers(0, 2)),
           window=window_strategy,
           target_feats=st.tuples(st.sampled_from("ab"), st.sampled_from("cd"),
                                  st.sampled_from("ef")))
    def test_antitone_in_mask(self, records, mask, window, target_feats):
        index = build_index(records, SCHEMA3)
        target = _rec(BASE, target_feats)
        big = PredictionModel(frozenset(mask), window)
        for drop in mask:
            small = PredictionModel(frozenset(mask) - {drop}, window)
            big_set = {id(r) for r in aggregate(index, big, target)}
            small_set = {id(r) for r in aggregate(index, small, target)}
            assert big_set <= small_set


class TestPrefixViews:
    def test_prefix_bounds_visibility(self):
        records = [_rec(BASE + i * 10, ("c", "i", "t"), float(i + 1))
                   for i in range(10)]
        index = build_index(records, SCHEMA3)
        model = PredictionModel(frozenset(), TimeWindow.recency(math.inf))
        target = _rec(BASE + 10_000, ("c", "i", "t"))
        assert len(aggregate(index.prefix(4), model, target)) == 4
        assert len(aggregate(index.prefix(0), model, target)) == 0
        assert len(aggregate(index, model, target)) == 10

    def test_prefix_masked_query_clipped(self):
        records = [_rec(BASE + i * 10, ("c", "i", "t"), 1.0) for i in range(10)]
        index = build_index(records, SCHEMA3)
        model = PredictionModel({0}, TimeWindow.recency(math.inf))
        target = _rec(BASE + 10_000, ("c", "i", "t"))
        assert len(aggregate(index.prefix(3), model, target)) == 3

    def test_prefix_out_of_range(self):
        index = build_index([], SCHEMA3)
        with pytest.raises(ValueError):
            index.prefix(1)


class TestEstimationSet:
    def _target(self, ts=BASE):
        return _rec(ts, ("tgt1", "isp1", "dsl", "10M"))

    def test_no_prior_match(self):
        index = build_index([_rec(BASE - 100, ("tgt2", "isp1", "dsl", "10M"))],
                            SCHEMA4)
        assert estimation_set(index, self._target()) == []

    def test_one_match(self):
        match = _rec(BASE - 3 * 3600, ("tgt1", "isp1", "dsl", "10M"), 4.0)
        index = build_index([match], SCHEMA4)
        assert estimation_set(index, self._target()) == [match]

    def test_half_open_four_hour_boundary(self):
        at_bound = _rec(BASE - 4 * 3600, ("tgt1", "isp1", "dsl", "10M"))
        outside = _rec(BASE - 4 * 3600 - 1, ("tgt1", "isp1", "dsl", "10M"))
        index = build_index([at_bound, outside], SCHEMA4)
        assert estimation_set(index, self._target()) == [at_bound]

    def test_equals_aggregate_with_estimation_model(self):
        rng = random.Random(3)
        records = [
            _rec(BASE - rng.randint(1, 6 * 3600),
                 (rng.choice(["tgt1", "tgt2"]), rng.choice(["isp1", "isp2"]),
                  "dsl", rng.choice(["10M", "20M"])),
                 rng.uniform(0.5, 8))
            for _ in range(120)
        ]
        index = build_index(records, SCHEMA4)
        target = self._target()
        model = PredictionModel({0, 1, 2, 3}, TimeWindow.recency(4 * 3600))
        assert estimation_set(index, target) == aggregate(index, model, target)

    def test_missing_configured_feature_is_an_error(self):
        index = build_index([], SCHEMA4)
        with pytest.raises(UnknownFeatureError):
            estimation_set(index, self._target(),
                           feature_names=("Target", "ISP", "NoSuchFeature"))
