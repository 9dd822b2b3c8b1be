"""Numerical laboratory for pointwise and small-interval heat control."""

__version__ = "0.1.0"

from .anchors import (  # noqa: E402
    AnchorPoint,
    ContinuedFraction,
    DecimalAnchor,
    LiouvilleAnchor,
    QuadraticIrrational,
    Rational,
    anchor_from_json,
    anchor_to_json,
    best_approx_distance,
    best_approx_table,
    continued_fraction,
    is_resonant,
    liouville_bound_check,
    sin_pi_multiple,
)
from .control import (  # noqa: E402
    BiorthogonalFamily,
    ControlReport,
    biorthogonal_family,
    blowup_diagnostic,
    fattorini_norm_bound,
    hum_optimal_control,
    moment_control_interval,
    moment_control_point,
    rescale_and_average,
    simulated_residual,
)
from .errors import (  # noqa: E402
    ConfigError,
    ConstructionFailedError,
    HeatpointError,
    HorizonMismatchError,
    InvalidIntervalError,
    NotControllableError,
    PointwiseNotControllableError,
    PrecisionExhaustedError,
    ProfileNotControllableError,
    SingularMatrixError,
    TruncationNotControllableError,
)
from .experiments import ExperimentConfig, execute  # noqa: E402
from .minimal_time import (  # noqa: E402
    MinimalTimeEstimate,
    build_liouville_anchor,
    dolecki_partial_sum,
    estimate_minimal_time,
)
from .observability import (  # noqa: E402
    CollapseWitness,
    ObservabilityResult,
    RateFit,
    collapse_witness,
    obs_constant,
    rate_fit,
    single_mode_upper_bound,
)
from .sequences import (  # noqa: E402
    EpsSequence,
    check_overlap_lower_bound,
    construct_eps_sequence,
    lattice_distance,
)
from .spectral import (  # noqa: E402
    DiracAt,
    ExpSumSignal,
    FourierState,
    IntervalIndicator,
    PerModeExpSum,
    SampledSignal,
    ScalarControl,
    eigenvalue,
    evolve_forced,
    gramian_matrix,
    moment_matrix,
    observation_quadratic,
    overlap_interval,
)

__all__ = [name for name in dir() if not name.startswith("_")]
