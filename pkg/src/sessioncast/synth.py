"""Seeded synthetic session corpora with planted structure.

Sessions get uniformly random feature values and timestamps over the span.
Throughput comes from the first matching rule: base level, times an
hour-of-day multiplier (diurnal patterns), times a per-time-block multiplier
drawn once per block from the rule's choices (slow level shifts that only
recent history can track), times log-normal noise. Everything is driven by
one PCG64 stream, so a seed pins the corpus byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import FeatureSchema, SessionRecord, hour_of_day


@dataclass(frozen=True)
class SyntheticRule:
    """Throughput assignment for sessions matching `where` (all pairs equal;
    empty matches everything). First matching rule wins."""

    where: dict
    base: float
    hour_multipliers: dict = field(default_factory=dict)
    block_seconds: int = 0          # 0 disables the block pattern
    block_choices: tuple = ()

    def __post_init__(self):
        if self.base <= 0:
            raise ValueError(f"rule base must be positive: {self.base}")
        if self.block_seconds < 0:
            raise ValueError("block_seconds must be >= 0")
        if self.block_seconds and not self.block_choices:
            raise ValueError("block pattern needs at least one choice")


@dataclass(frozen=True)
class SyntheticSpec:
    schema: FeatureSchema
    values: dict                    # feature name -> tuple of possible tokens
    sessions: int
    start: int
    span: int
    rules: tuple = ()
    default_base: float = 1.0
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.sessions < 0:
            raise ValueError("sessions must be >= 0")
        if self.span <= 0:
            raise ValueError("span must be positive")
        if self.default_base <= 0:
            raise ValueError("default_base must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        for name in self.schema.names:
            if not self.values.get(name):
                raise ValueError(f"no value alphabet for feature {name!r}")
        for rule in self.rules:
            for name in rule.where:
                self.schema.index_of(name)


def generate_synthetic(spec: SyntheticSpec) -> list[SessionRecord]:
    """Materialize the corpus, time-sorted. Deterministic for a fixed seed."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))

    timestamps = rng.integers(spec.start, spec.start + spec.span,
                              size=spec.sessions)
    columns = []
    for name in spec.schema.names:
        alphabet = tuple(spec.values[name])
        columns.append(rng.integers(0, len(alphabet), size=spec.sessions))

    schedules = []
    for rule in spec.rules:
        if rule.block_seconds:
            n_blocks = spec.span // rule.block_seconds + 1
            schedules.append(rng.integers(0, len(rule.block_choices),
                                          size=n_blocks))
        else:
            schedules.append(None)

    if spec.noise_sigma > 0:
        noise = np.exp(rng.normal(0.0, spec.noise_sigma, size=spec.sessions))
    else:
        noise = np.ones(spec.sessions)

    name_to_idx = {name: i for i, name in enumerate(spec.schema.names)}
    records = []
    for s in range(spec.sessions):
        ts = int(timestamps[s])
        features = tuple(spec.values[name][int(columns[i][s])]
                         for i, name in enumerate(spec.schema.names))
        level = spec.default_base
        for r, rule in enumerate(spec.rules):
            if all(features[name_to_idx[n]] == v for n, v in rule.where.items()):
                level = rule.base
                level *= rule.hour_multipliers.get(hour_of_day(ts), 1.0)
                if rule.block_seconds:
                    block = (ts - spec.start) // rule.block_seconds
                    level *= rule.block_choices[int(schedules[r][block])]
                break
        records.append(SessionRecord(features, ts, level * float(noise[s])))
    records.sort(key=lambda r: r.timestamp)
    return records


def _expand_alphabet(text: str) -> tuple[str, ...]:
    # "client*40" -> client00..client39; otherwise comma-separated tokens
    if "*" in text:
        prefix, _, count = text.partition("*")
        n = int(count)
        width = len(str(n - 1))
        return tuple(f"{prefix}{i:0{width}d}" for i in range(n))
    return tuple(v.strip() for v in text.split(",") if v.strip())


def spec_from_kv(kv: dict) -> SyntheticSpec:
    """Build a SyntheticSpec from a flat key/value mapping (see README for
    the file format)."""
    schema = FeatureSchema(tuple(n.strip() for n in kv["features"].split(",")))
    values = {}
    for name in schema.names:
        key = f"values.{name}"
        if key not in kv:
            raise ValueError(f"missing {key}")
        values[name] = _expand_alphabet(kv[key])

    rule_ids = sorted({int(k.split(".")[1]) for k in kv if k.startswith("rule.")})
    rules = []
    for rid in rule_ids:
        prefix = f"rule.{rid}."
        where = {}
        for pair in kv.get(prefix + "where", "").split(","):
            pair = pair.strip()
            if pair:
                name, _, value = pair.partition("=")
                where[name.strip()] = value.strip()
        hours = {}
        for pair in kv.get(prefix + "hours", "").split(","):
            pair = pair.strip()
            if pair:
                hour, _, mult = pair.partition(":")
                hours[int(hour)] = float(mult)
        block_seconds, block_choices = 0, ()
        if prefix + "block" in kv:
            length, _, choices = kv[prefix + "block"].partition(":")
            block_seconds = int(length)
            block_choices = tuple(float(c) for c in choices.split(","))
        rules.append(SyntheticRule(where, float(kv[prefix + "base"]),
                                   hours, block_seconds, block_choices))

    return SyntheticSpec(
        schema=schema,
        values=values,
        sessions=int(kv["sessions"]),
        start=int(kv["start"]),
        span=int(kv["span"]),
        rules=tuple(rules),
        default_base=float(kv.get("default_base", "1.0")),
        noise_sigma=float(kv.get("noise_sigma", "0.0")),
        seed=int(kv.get("seed", "0")),
    )
