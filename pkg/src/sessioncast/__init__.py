"""Cross-session throughput prediction with per-session model search,
baseline predictors, and a bitrate-selection evaluation harness."""

from .core import (
    FCC_SCHEMA,
    EmptyAggregateError,
    ErrorKind,
    FeatureSchema,
    NoHistoryError,
    PredictionModel,
    SessionRecord,
    TimeWindow,
    UnknownFeatureError,
    WindowKind,
    matches,
    median_with_factor,
    prediction_error,
    time_bucket,
)
from .history import HistoryIndex, aggregate, build_index, estimation_set
from .learner import (
    FallbackLevel,
    LearnedPredictor,
    LearnerConfig,
    ModelPool,
    NoUsableModelError,
    empirical_error,
    enumerate_models,
    learn_model,
    learn_scale,
    predict,
)
from .baselines import (
    BaselineKind,
    discretize_log,
    predict_global,
    predict_last_mile,
    predict_last_sample,
    predict_nearest_neighbor,
    relative_information_gain,
)
from .bitrate import (
    DEFAULT_LADDER,
    BitrateLadder,
    BitrateOutcome,
    evaluate_bitrate,
    ideal_bitrate,
    make_outcome,
    select_bitrate,
    sweep_alpha,
)
from .dataio import IngestResult, ingest_csv, random_drop, write_csv
from .synth import SyntheticRule, SyntheticSpec, generate_synthetic
from .replay import (
    EvaluationReport,
    ReplayConfig,
    emit_report,
    replay_evaluate,
)

__version__ = "0.1.0"
