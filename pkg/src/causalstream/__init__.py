"""Continual causal discovery over streaming multivariate time series.

Recovers lagged causal graphs from bounded sample windows via a two-phase
conditional-independence search, refines the stored model across runs by
keeping whichever evidence carries the smaller p-value, detects regime
changes, and proposes interventions on the least reliable links. A linear
structural-causal-model simulator closes the loop for validation.
"""

from .citest import CITestResult, normal_sf, partial_correlation
from .config import EngineConfig, load_config
from .continual import (
    DiscoveryParams,
    RunRecord,
    SessionState,
    StationarityReport,
    check_stationarity,
    merge_models,
    rediscover_warm,
    run_session,
    step,
)
from .errors import (
    ConfigError,
    CorruptFile,
    EmptyFile,
    EngineError,
    MissingColumn,
    NonNumericCell,
    RangeError,
    RegimeOutOfRange,
    ScheduleOutOfRange,
    SchemaVersionUnsupported,
    ShapeMismatch,
    SingularRegression,
    TooFewSamples,
    UnknownVariable,
    UnstableSpec,
)
from .intervention import (
    InterventionPlan,
    InterventionSignal,
    PlanTarget,
    annotate,
    load_plan,
    save_plan,
    suggest,
)
from .model import CausalModel, build_model, export_dot, load, save
from .pcmci import (
    InferenceMatrix,
    LinkKey,
    LinkStats,
    ParentSet,
    TestCounter,
    condition_selection,
    mci,
    run_discovery,
    significant_links,
)
from .simulator import (
    Edge,
    GroundTruth,
    Regime,
    ScenarioSpec,
    evaluate,
    generate,
    ground_truth,
    library,
    load_scenario,
    save_scenario,
    weak_pair,
)
from .timeseries import (
    TimeWindow,
    VariableSet,
    append,
    ingest,
    save_trace,
    slice_window,
    standardize,
)

__version__ = "0.1.0"

__all__ = [
    "CITestResult",
    "CausalModel",
    "ConfigError",
    "CorruptFile",
    "DiscoveryParams",
    "Edge",
    "EmptyFile",
    "EngineConfig",
    "EngineError",
    "GroundTruth",
    "InferenceMatrix",
    "InterventionPlan",
    "InterventionSignal",
    "LinkKey",
    "LinkStats",
    "MissingColumn",
    "NonNumericCell",
    "ParentSet",
    "PlanTarget",
    "RangeError",
    "Regime",
    "RegimeOutOfRange",
    "RunRecord",
    "ScenarioSpec",
    "ScheduleOutOfRange",
    "SchemaVersionUnsupported",
    "SessionState",
    "ShapeMismatch",
    "SingularRegression",
    "StationarityReport",
    "TestCounter",
    "TimeWindow",
    "TooFewSamples",
    "UnknownVariable",
    "UnstableSpec",
    "VariableSet",
    "annotate",
    "append",
    "build_model",
    "check_stationarity",
    "condition_selection",
    "evaluate",
    "export_dot",
    "generate",
    "ground_truth",
    "ingest",
    "library",
    "load",
    "load_config",
    "load_plan",
    "load_scenario",
    "mci",
    "merge_models",
    "normal_sf",
    "partial_correlation",
    "rediscover_warm",
    "run_discovery",
    "run_session",
    "save",
    "save_plan",
    "save_scenario",
    "save_trace",
    "significant_links",
    "slice_window",
    "standardize",
    "step",
    "suggest",
    "weak_pair",
]
