"""Deterministic simulator and analysis toolkit for budget-constrained
multi-tree live-streaming overlays."""

from .analysis import (
    OptimalForest,
    analyze_config,
    max_streaming_rate,
    optimal_avg_hop,
    optimal_depth,
    optimal_uploaders_per_level,
    resource_index,
)
from .baseline import BaselineEngine
from .config import (
    PRESETS,
    SCHEME_BASELINE,
    SCHEME_ECONOMY,
    SCHEMES,
    ScenarioConfig,
    load_config,
    normalize_scheme,
)
from .errors import (
    ConfigInvalidError,
    DegenerateInputError,
    FreeSetExhaustedError,
    IncompleteRunError,
    ReconfigError,
    SpareGroupExhaustedError,
    StreamForestError,
    ValidationFailedError,
)
from .forest import SERVER, Forest, PeerState, assert_valid, validate_forest
from .freeset import FreeSet
from .metrics import MetricsReport, distribution, emit_comparison, emit_report
from .reconfig import ReconfigReceipt, adopt_free, buy_position, swap_child
from .scheduler import JoinReport, JoinScheduler, select_target
from .sim import assign_budgets, class_counts, compare, run_scenario, tracker_sample

__version__ = "0.1.0"

__all__ = [
    "BaselineEngine",
    "ConfigInvalidError",
    "DegenerateInputError",
    "Forest",
    "FreeSet",
    "FreeSetExhaustedError",
    "IncompleteRunError",
    "JoinReport",
    "JoinScheduler",
    "MetricsReport",
    "OptimalForest",
    "PRESETS",
    "PeerState",
    "ReconfigError",
    "ReconfigReceipt",
    "SCHEMES",
    "SCHEME_BASELINE",
    "SCHEME_ECONOMY",
    "SERVER",
    "ScenarioConfig",
    "SpareGroupExhaustedError",
    "StreamForestError",
    "ValidationFailedError",
    "adopt_free",
    "analyze_config",
    "assert_valid",
    "assign_budgets",
    "buy_position",
    "class_counts",
    "compare",
    "distribution",
    "emit_comparison",
    "emit_report",
    "load_config",
    "max_streaming_rate",
    "normalize_scheme",
    "optimal_avg_hop",
    "optimal_depth",
    "optimal_uploaders_per_level",
    "resource_index",
    "run_scenario",
    "select_target",
    "swap_child",
    "tracker_sample",
    "validate_forest",
]
