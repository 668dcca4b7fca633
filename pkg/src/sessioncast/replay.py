"""Chronological replay evaluation: walk the corpus in time order, predict
each session from strictly-earlier history only, and score everything.

Every target sees a prefix snapshot of the index, so no predictor can touch
a record at or after the target's own position; window predicates already
exclude equal timestamps. Sessions inside the warmup period seed history but
are not scored. A predictor with no usable history for some session is
excluded from that session's error stats and counted against its coverage.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields

import numpy as np

from .baselines import (
    predict_global,
    predict_last_mile,
    predict_last_sample,
    predict_nearest_neighbor,
)
from .bitrate import DEFAULT_LADDER, BitrateLadder, ideal_bitrate, make_outcome
from .core import (
    ErrorKind,
    FeatureSchema,
    NoHistoryError,
    hour_of_day,
    prediction_error,
)
from .dataio import random_drop
from .history import build_index
from .learner import FallbackLevel, LearnerConfig, MedianCache, enumerate_models, predict

PREDICTOR_NAMES = ("adaptive", "last_mile", "last_sample", "global",
                   "nearest_neighbor")
PERCENTILE_RANKS = (10, 20, 50, 80, 90)

_PRUNE_EVERY = 1024


@dataclass(frozen=True)
class ReplayConfig:
    predictors: tuple = PREDICTOR_NAMES
    warmup: float = 36000            # seconds of corpus start excluded from scoring
    error_kind: ErrorKind = ErrorKind.NORMALIZED_ABSOLUTE
    alpha: float = 0.8
    ladder: BitrateLadder = DEFAULT_LADDER
    drop_rate: float = 0.0
    seed: int = 0
    partition_feature: str = "ISP"
    nn_window: float = 300
    downlink_feature: str = "Downlink"
    client_feature: str = "ClientID"
    target_feature: str = "Target"
    include_sessions: bool = False
    learner: LearnerConfig = field(default_factory=LearnerConfig)

    def __post_init__(self):
        if not 0 <= self.drop_rate <= 1:
            raise ValueError(f"drop_rate must be in [0, 1]: {self.drop_rate}")
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive: {self.alpha}")
        for name in self.predictors:
            if name not in PREDICTOR_NAMES:
                raise ValueError(f"unknown predictor {name!r}; "
                                 f"expected one of {PREDICTOR_NAMES}")


@dataclass
class PredictorSummary:
    n_scored: int = 0
    n_clean: int = 0                 # predicted without fallback
    n_fallback: int = 0              # adaptive only
    n_missing: int = 0               # NoHistory sessions
    errors: list = field(default_factory=list)
    outcomes: list = field(default_factory=list)
    by_feature: dict = field(default_factory=dict)
    by_hour: dict = field(default_factory=dict)

    @property
    def coverage(self) -> float:
        return self.n_clean / self.n_scored if self.n_scored else 0.0


@dataclass
class EvaluationReport:
    sessions_total: int
    sessions_scored: int
    config: dict
    predictors: dict                 # name -> PredictorSummary
    ideal_avg_bitrate: float | None
    ideal_good_ratio: float | None
    session_rows: tuple = ()         # (timestamp, actual, {name: prediction})

    def to_dict(self) -> dict:
        out = {
            "sessions_total": self.sessions_total,
            "sessions_scored": self.sessions_scored,
            "config": self.config,
            "ideal": {"avg_bitrate": self.ideal_avg_bitrate,
                      "good_ratio": self.ideal_good_ratio},
            "predictors": {},
        }
        for name, s in self.predictors.items():
            avg_bitrate = good_ratio = None
            if s.outcomes:
                avg_bitrate = sum(o.chosen for o in s.outcomes) / len(s.outcomes)
                good_ratio = sum(1 for o in s.outcomes if o.good) / len(s.outcomes)
            out["predictors"][name] = {
                "n_scored": s.n_scored,
                "n_clean": s.n_clean,
                "n_fallback": s.n_fallback,
                "n_missing": s.n_missing,
                "coverage": s.coverage,
                "error_mean": (sum(s.errors) / len(s.errors)) if s.errors else None,
                "error_percentiles": error_percentiles(s.errors),
                "avg_bitrate": avg_bitrate,
                "good_ratio": good_ratio,
                "by_feature": {v: error_percentiles(errs)
                               for v, errs in s.by_feature.items()},
                "by_hour": {f"h{h:02d}": error_percentiles(errs)
                            for h, errs in s.by_hour.items()},
            }
        if self.session_rows:
            out["sessions"] = [
                {"timestamp": ts, "actual": actual, "predicted": preds}
                for ts, actual, preds in self.session_rows
            ]
        return out


def error_percentiles(errors) -> dict | None:
    """10/20/50/80/90 percentiles (linear interpolation), or None if empty."""
    if not errors:
        return None
    pts = np.percentile(np.asarray(errors, dtype=np.float64),
                        PERCENTILE_RANKS, method="linear")
    return {f"p{rank}": float(v) for rank, v in zip(PERCENTILE_RANKS, pts)}


def _run_predictor(name: str, view, target, config: ReplayConfig, pool, cache):
    """Returns (prediction, clean). Raises NoHistoryError like the baselines."""
    if name == "adaptive":
        value, learned = predict(view, target, pool, config.learner, cache)
        return value, learned.fallback_level is FallbackLevel.NONE
    if name == "last_mile":
        return predict_last_mile(view, target, config.downlink_feature), True
    if name == "last_sample":
        return predict_last_sample(view, target, config.client_feature,
                                   config.target_feature), True
    if name == "global":
        return predict_global(view, target), True
    return predict_nearest_neighbor(view, target, config.nn_window), True


def replay_evaluate(records, schema: FeatureSchema,
                    config: ReplayConfig = ReplayConfig()) -> EvaluationReport:
    records = list(records)
    total_before_drop = len(records)
    if config.drop_rate > 0:
        records = random_drop(records, config.drop_rate, config.seed)

    config_echo = _config_echo(config, total_before_drop)
    if not records:
        return EvaluationReport(0, 0, config_echo, {}, None, None)

    index = build_index(records, schema)
    ordered = index.records

    needs_pool = "adaptive" in config.predictors
    pool = enumerate_models(schema, config.learner) if needs_pool else None
    cache = MedianCache(pool) if needs_pool else None

    partition_idx = None
    if config.partition_feature in schema.names:
        partition_idx = schema.index_of(config.partition_feature)

    cutoff = ordered[0].timestamp + config.warmup
    summaries = {name: PredictorSummary() for name in config.predictors}
    ideal_outcomes = []
    session_rows = []
    scored = 0

    for i, target in enumerate(ordered):
        if target.timestamp < cutoff:
            continue
        view = index.prefix(i)
        scored += 1
        if cache is not None and scored % _PRUNE_EVERY == 0:
            cache.prune(target.timestamp - config.learner.estimation_window - 1)

        row_preds = {}
        for name in config.predictors:
            s = summaries[name]
            s.n_scored += 1
            try:
                value, clean = _run_predictor(name, view, target, config,
                                              pool, cache)
            except NoHistoryError:
                s.n_missing += 1
                row_preds[name] = None
                continue
            if clean:
                s.n_clean += 1
            else:
                s.n_fallback += 1
            row_preds[name] = value
            err = prediction_error(value, target.throughput, config.error_kind)
            s.errors.append(err)
            s.outcomes.append(make_outcome(i, value, target.throughput,
                                           config.alpha, config.ladder))
            if partition_idx is not None:
                s.by_feature.setdefault(target.features[partition_idx],
                                        []).append(err)
            s.by_hour.setdefault(hour_of_day(target.timestamp), []).append(err)

        chosen = ideal_bitrate(target.throughput, config.ladder)
        ideal_outcomes.append((chosen, chosen <= target.throughput))
        session_rows.append((target.timestamp, target.throughput, row_preds))

    ideal_avg = ideal_good = None
    if ideal_outcomes:
        ideal_avg = sum(c for c, _ in ideal_outcomes) / len(ideal_outcomes)
        ideal_good = sum(1 for _, g in ideal_outcomes if g) / len(ideal_outcomes)

    return EvaluationReport(
        sessions_total=len(records),
        sessions_scored=scored,
        config=config_echo,
        predictors=summaries,
        ideal_avg_bitrate=ideal_avg,
        ideal_good_ratio=ideal_good,
        session_rows=tuple(session_rows) if config.include_sessions else (),
    )


def _config_echo(config: ReplayConfig, sessions_before_drop: int) -> dict:
    learner = config.learner
    return {
        "predictors": list(config.predictors),
        "warmup": config.warmup,
        "error_kind": config.error_kind.value,
        "alpha": config.alpha,
        "ladder": list(config.ladder.rungs),
        "drop_rate": config.drop_rate,
        "seed": config.seed,
        "partition_feature": config.partition_feature,
        "nn_window": config.nn_window,
        "include_sessions": config.include_sessions,
        "sessions_before_drop": sessions_before_drop,
        "learner": {
            "min_support": learner.min_support,
            "k_min": learner.k_min,
            "k_max": learner.k_max,
            "k_step": learner.k_step,
            "recency_spans": list(learner.recency_spans),
            "same_day_lookbacks": list(learner.same_day_lookbacks),
            "same_week_lookbacks": list(learner.same_week_lookbacks),
            "estimation_features": list(learner.estimation_features),
            "estimation_window": learner.estimation_window,
        },
    }


def render_report(report: EvaluationReport) -> str:
    """Stable textual form: same report, same bytes."""
    return json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"


def emit_report(report: EvaluationReport, path) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(render_report(report))
    except OSError as e:
        raise OSError(f"cannot write report to {path}: {e}") from e


def predictions_by_predictor(report: EvaluationReport) -> dict:
    """(predicted, actual) pairs per predictor from a replay run, for alpha
    sweeps. Requires include_sessions=True in the replay config."""
    pairs: dict = {}
    for _, actual, preds in report.session_rows:
        for name, value in preds.items():
            if value is not None:
                pairs.setdefault(name, []).append((value, actual))
    return pairs


# -- flat key/value config files ------------------------------------------

def _csv_floats(text: str) -> tuple:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _csv_ints(text: str) -> tuple:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _csv_strs(text: str) -> tuple:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def config_from_kv(kv: dict) -> ReplayConfig:
    """ReplayConfig (with nested LearnerConfig) from a flat key/value map.
    Unknown keys are rejected so typos fail loudly."""
    learner_keys = {f.name for f in fields(LearnerConfig)}
    replay_keys = {f.name for f in fields(ReplayConfig)} - {"learner"}
    unknown = set(kv) - learner_keys - replay_keys
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")

    lk: dict = {}
    if "min_support" in kv:
        lk["min_support"] = int(kv["min_support"])
    for key in ("k_min", "k_max", "k_step", "estimation_window"):
        if key in kv:
            lk[key] = float(kv[key])
    if "recency_spans" in kv:
        lk["recency_spans"] = _csv_floats(kv["recency_spans"])
    if "same_day_lookbacks" in kv:
        lk["same_day_lookbacks"] = _csv_ints(kv["same_day_lookbacks"])
    if "same_week_lookbacks" in kv:
        lk["same_week_lookbacks"] = _csv_ints(kv["same_week_lookbacks"])
    if "estimation_features" in kv:
        lk["estimation_features"] = _csv_strs(kv["estimation_features"])

    rk: dict = {"learner": LearnerConfig(**lk)}
    if "predictors" in kv:
        rk["predictors"] = _csv_strs(kv["predictors"])
    for key in ("warmup", "alpha", "drop_rate", "nn_window"):
        if key in kv:
            rk[key] = float(kv[key])
    if "seed" in kv:
        rk["seed"] = int(kv["seed"])
    if "error_kind" in kv:
        rk["error_kind"] = ErrorKind(kv["error_kind"])
    if "ladder" in kv:
        rk["ladder"] = BitrateLadder(_csv_floats(kv["ladder"]))
    for key in ("partition_feature", "downlink_feature", "client_feature",
                "target_feature"):
        if key in kv:
            rk[key] = kv[key]
    if "include_sessions" in kv:
        rk["include_sessions"] = kv["include_sessions"].lower() in ("1", "true", "yes")
    return ReplayConfig(**rk)
