"""MOSUM change point detection with bootstrap confidence intervals for the locations."""

__version__ = "0.1.0"

from .bootstrap import (
    BootstrapConfig,
    BootstrapDeviations,
    BootstrapResult,
    IntervalSet,
    bootstrap_confidence_intervals,
    empirical_quantile,
    pointwise_intervals,
    replicate_maximiser,
    resample_segments,
    run_bootstrap,
    search_windows,
    uniform_intervals,
)
from .detection import (
    CandidateEstimate,
    ChangePointModel,
    DetectionResult,
    detect_multiscale,
    detect_single_scale,
    estimate_jump,
    estimate_local_variance,
    min_spacing,
    oracle_locate,
)
from .errors import (
    BandwidthConditionWarning,
    ConfigurationError,
    DataError,
    DegenerateConfigurationError,
    DiscreteErrorsWarning,
    InvalidBandwidthError,
    MosumError,
)
from .limits import (
    FixedArgmaxConfig,
    WienerArgmaxConfig,
    distribution_distance,
    sample_fixed_argmax,
    sample_wiener_argmax,
)
from .mosum import Bandwidth, MosumProfile, compute_mosum, critical_value, local_variance_profile
from .simulation import (
    CoverageReport,
    ErrorModel,
    ExperimentConfig,
    SignalSpec,
    available_signals,
    coverage_measures,
    evaluate_coverage,
    load_signal,
    match_estimators,
    scale_signal,
    synthesize,
)
