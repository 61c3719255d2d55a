"""Projected clustering of high-dimensional data streams with exponential-moving-average micro-clusters."""

from .engine import (
    EngineState,
    MergeOutcome,
    Target,
    add_to_core,
    add_to_outlier,
    create_outlier_mc,
    process_point,
    window_rebalance,
)
from .evaluation import MetricsRow, memory_metric, purity, weight_profiles
from .initialization import (
    build_initial_clusters,
    is_core_point,
    point_preference_vector,
    point_projected_distance,
    predecon_partition,
)
from .offline import FinalClustering, final_clusters
from .params import ConsistencyError, DimensionError, NonFiniteError, ParamError, Params
from .summary import (
    CFTuple,
    EATuple,
    MCClass,
    Point,
    cf_degrade,
    cf_recompute,
    cf_update,
    classify_mc,
    degrade_tuple,
    pdim,
    preference_vector,
    projected_distance,
    projected_radius,
    update_tuple,
    variance,
)

__version__ = "0.1.0"
