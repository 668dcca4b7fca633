import statistics

import pytest

from sessioncast.core import FeatureSchema, hour_of_day
from sessioncast.synth import (
    SyntheticRule,
    SyntheticSpec,
    generate_synthetic,
    spec_from_kv,
)

SCHEMA = FeatureSchema(("ClientID", "ISP", "Target"))
VALUES = {"ClientID": ("c1", "c2", "c3"), "ISP": ("A", "B"), "Target": ("t1", "t2")}
START = 1_380_585_600  # 2013-10-01 00:00:00 UTC


def _spec(**kwargs):
    base = dict(schema=SCHEMA, values=VALUES, sessions=2000, start=START,
                span=7 * 86400, seed=42)
    base.update(kwargs)
    return SyntheticSpec(**base)


class TestGenerate:
    def test_zero_sessions(self):
        assert generate_synthetic(_spec(sessions=0)) == []

    def test_single_rule_zero_noise(self):
        spec = _spec(rules=(SyntheticRule({"ISP": "A"}, 5.0),), default_base=1.0)
        records = generate_synthetic(spec)
        isp_idx = SCHEMA.index_of("ISP")
        for r in records:
            expected = 5.0 if r.features[isp_idx] == "A" else 1.0
            assert r.throughput == expected

    def test_records_time_sorted_within_span(self):
        records = generate_synthetic(_spec())
        stamps = [r.timestamp for r in records]
        assert stamps == sorted(stamps)
        assert all(START <= t < START + 7 * 86400 for t in stamps)

    def test_diurnal_multiplier_halves_evening_hours(self):
        evening = {h: 0.5 for h in range(18, 24)}
        spec = _spec(sessions=6000,
                     rules=(SyntheticRule({}, 4.0, hour_multipliers=evening),))
        records = generate_synthetic(spec)
        evening_tputs = [r.throughput for r in records
                         if 18 <= hour_of_day(r.timestamp) <= 23]
        day_tputs = [r.throughput for r in records
                     if not 18 <= hour_of_day(r.timestamp) <= 23]
        ratio = statistics.mean(evening_tputs) / statistics.mean(day_tputs)
        assert ratio == pytest.approx(0.5, rel=0.05)

    def test_block_pattern_constant_within_block(self):
        rule = SyntheticRule({}, 2.0, block_seconds=43200,
                             block_choices=(0.5, 1.0, 2.0))
        records = generate_synthetic(_spec(rules=(rule,)))
        by_block = {}
        for r in records:
            by_block.setdefault((r.timestamp - START) // 43200, set()).add(r.throughput)
        assert all(len(levels) == 1 for levels in by_block.values())
        assert {lv for levels in by_block.values() for lv in levels} <= {1.0, 2.0, 4.0}

    def test_noise_is_multiplicative_lognormal(self):
        records = generate_synthetic(_spec(noise_sigma=0.05, default_base=3.0,
                                           sessions=4000))
        tputs = [r.throughput for r in records]
        assert statistics.median(tputs) == pytest.approx(3.0, rel=0.02)
        assert all(t > 0 for t in tputs)
        assert len(set(tputs)) > 3900  # noise actually applied

    def test_deterministic_for_seed(self):
        a = generate_synthetic(_spec(noise_sigma=0.1))
        b = generate_synthetic(_spec(noise_sigma=0.1))
        c = generate_synthetic(_spec(noise_sigma=0.1, seed=43))
        assert a == b
        assert a != c

    def test_first_matching_rule_wins(self):
        rules = (SyntheticRule({"ISP": "A"}, 5.0),
                 SyntheticRule({}, 9.0))
        records = generate_synthetic(_spec(rules=rules))
        isp_idx = SCHEMA.index_of("ISP")
        for r in records:
            assert r.throughput == (5.0 if r.features[isp_idx] == "A" else 9.0)


class TestSpecValidation:
    def test_missing_alphabet(self):
        with pytest.raises(ValueError, match="alphabet"):
            _spec(values={"ClientID": ("c1",), "ISP": ("A",)})

    def test_unknown_rule_feature(self):
        with pytest.raises(ValueError):
            _spec(rules=(SyntheticRule({"Nope": "x"}, 1.0),))

    def test_nonpositive_base(self):
        with pytest.raises(ValueError):
            SyntheticRule({}, 0.0)


class TestSpecFromKv:
    def test_full_parse(self):
        kv = {
            "features": "ClientID,ISP",
            "values.ClientID": "client*12",
            "values.ISP": "att,verizon",
            "sessions": "100",
            "start": "1380585600",
            "span": "86400",
            "seed": "7",
            "noise_sigma": "0.05",
            "default_base": "2.0",
            "rule.1.where": "ISP=att",
            "rule.1.base": "5.0",
            "rule.1.hours": "18:0.5,19:0.5",
            "rule.1.block": "43200:0.5,1.0,2.0",
        }
        spec = spec_from_kv(kv)
        assert spec.schema.names == ("ClientID", "ISP")
        assert spec.values["ClientID"][0] == "client00"
        assert spec.values["ClientID"][-1] == "client11"
        assert len(spec.values["ClientID"]) == 12
        assert spec.rules[0].where == {"ISP": "att"}
        assert spec.rules[0].hour_multipliers == {18: 0.5, 19: 0.5}
        assert spec.rules[0].block_seconds == 43200
        assert spec.rules[0].block_choices == (0.5, 1.0, 2.0)
        assert spec.noise_sigma == 0.05
        # generated corpus honors the parsed spec
        records = generate_synthetic(spec)
        assert len(records) == 100

    def test_missing_values_key(self):
        kv = {"features": "ISP", "sessions": "1", "start": "0", "span": "10"}
        with pytest.raises(ValueError, match="values.ISP"):
            spec_from_kv(kv)
