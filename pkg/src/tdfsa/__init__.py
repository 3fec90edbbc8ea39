"""Age-aware framed random access: simulator, estimator, and baselines."""

from .channel import FrameObservation, run_frame
from .core import (
    FrameDecision,
    MetricsAccumulator,
    Network,
    NodeState,
    advance_ap_age,
    advance_node_age,
    initial_ap_ages,
)
from .estimator import (
    ApEstimator,
    EstimatedAllocation,
    GainPmf,
    allocate_gain_counts,
    allocation_likelihood,
    estimate_active,
    observation_likelihood,
    post_frame_update,
    propagate_arrivals,
    select_threshold_and_frame,
    slot_probabilities,
    threshold_shortcut,
    truncate,
)
from .baselines import (
    BaselineConfig,
    FixedFsaProtocol,
    IdealDfsaProtocol,
    ThresholdAlohaProtocol,
)
from .harness import RunResult, ScenarioConfig, run_scenario, run_sweep, validate
from .ideal import GainHistogram, NoBacklogError, aar, ideal_decision, throughput
from .simulate import FrameRecord, TdfsaProtocol, run_one_frame

__version__ = "0.1.0"

__all__ = [
    "FrameObservation",
    "run_frame",
    "FrameDecision",
    "MetricsAccumulator",
    "Network",
    "NodeState",
    "advance_ap_age",
    "advance_node_age",
    "initial_ap_ages",
    "ApEstimator",
    "EstimatedAllocation",
    "GainPmf",
    "allocate_gain_counts",
    "allocation_likelihood",
    "estimate_active",
    "observation_likelihood",
    "post_frame_update",
    "propagate_arrivals",
    "select_threshold_and_frame",
    "slot_probabilities",
    "threshold_shortcut",
    "truncate",
    "BaselineConfig",
    "FixedFsaProtocol",
    "IdealDfsaProtocol",
    "ThresholdAlohaProtocol",
    "RunResult",
    "ScenarioConfig",
    "run_scenario",
    "run_sweep",
    "validate",
    "GainHistogram",
    "NoBacklogError",
    "aar",
    "ideal_decision",
    "throughput",
    "FrameRecord",
    "TdfsaProtocol",
    "run_one_frame",
    "__version__",
]
