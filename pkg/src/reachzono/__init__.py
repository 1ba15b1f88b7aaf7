"""Reachable sets of feed-forward ReLU networks via zonotope propagation."""

from .zonotope import (
    ContainmentUndecidedError,
    IntervalHull,
    Zonotope,
    contains_point,
    contains_points,
    interval_hull,
    linear_transform,
    merge_union,
    project,
    sample,
    scaled_volume,
    size_measure,
)
from .linprog import (
    INFEASIBLE,
    NUMERICAL_FAILURE,
    OPTIMAL,
    UNBOUNDED,
    LinearProgram,
    LpOutcome,
    solve,
)
from .relu_reach import (
    OVER,
    UNDER,
    Budget,
    DimClassification,
    QuadrantCode,
    ReachSet,
    ResourceLimitError,
    classify_dims,
    count_quadrants,
    overapprox_quadrant,
    propagate,
    propagate_limited,
    rso_relu,
    rsu_relu,
    underapprox_quadrant,
)
from .network import Layer, ModelLoadError, Network, forward, forward_batch, load_model, save_model
from .analysis import (
    InputSpec,
    ReliabilityCurve,
    VerificationReport,
    build_input_set,
    class_specific_matrix,
    classification_robust_loss,
    load_dataset,
    output_extensions,
    rank_features,
    regression_robust_loss,
    reliability_rates,
    robustness_scores,
    verify,
)
from .oracle import (
    GridSearchResult,
    SampledSet,
    brute_force_score,
    grid_adversarial_search,
    sample_reachable,
)

__version__ = "0.1.0"
