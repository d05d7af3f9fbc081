"""Training-free visual-token compression for video: similarity communities
plus temporal-difference events, trimmed to an exact token budget."""

from .budget import (
    ExternalScores,
    ImportanceSource,
    MeanCosineProxy,
    PROV_BOTH,
    PROV_EVENT,
    PROV_FILL,
    PROV_NAMES,
    PROV_REP,
    SelectionResult,
    UniformImportance,
    finalize_selection,
    importance_scores,
)
from .communities import (
    CommunityPartition,
    centrality_scores,
    default_community_cap,
    enforce_size_cap,
    select_representatives,
    threshold_components,
)
from .errors import (
    CorruptionError,
    EmptyDomainError,
    FormatError,
    GuardError,
    ResourceError,
    ShapeError,
    StSimDiffError,
    ValidationError,
)
from .events import (
    DiffThresholdMode,
    FixedThreshold,
    FrameDiffStats,
    PercentileThreshold,
    resolve_threshold,
    select_event_tokens,
    temporal_diff_profile,
)
from .graph import (
    SPATIAL,
    TEMPORAL,
    SpatioTemporalGraph,
    build_graph,
    cosine,
    temporal_edge_arrays,
    edge_stats,
    expected_edge_counts,
    temporal_edges,
)
from .grid import (
    GridDiagnostics,
    MovingPatch,
    SyntheticSpec,
    TokenGrid,
    ceil_count,
    generate_synthetic,
    load_grid,
    save_grid,
    validate_grid,
)
from .pipeline import THREADS_ENV, SelectionConfig, run_pipeline, select_tokens

__version__ = "0.1.0"
SCHEMA_VERSION = 1

__all__ = [
    "SCHEMA_VERSION",
    "__version__",
    # grid
    "TokenGrid", "MovingPatch", "SyntheticSpec", "generate_synthetic",
    "load_grid", "save_grid", "validate_grid", "GridDiagnostics", "ceil_count",
    # graph
    "SpatioTemporalGraph", "build_graph", "cosine", "edge_stats",
    "expected_edge_counts", "temporal_edges", "temporal_edge_arrays",
    "SPATIAL", "TEMPORAL",
    # communities
    "CommunityPartition", "threshold_components", "enforce_size_cap",
    "centrality_scores", "select_representatives", "default_community_cap",
    # events
    "DiffThresholdMode", "FixedThreshold", "PercentileThreshold",
    "FrameDiffStats", "resolve_threshold", "select_event_tokens",
    "temporal_diff_profile",
    # budget
    "ImportanceSource", "MeanCosineProxy", "UniformImportance", "ExternalScores",
    "SelectionResult", "finalize_selection", "importance_scores",
    "PROV_REP", "PROV_EVENT", "PROV_BOTH", "PROV_FILL", "PROV_NAMES",
    # pipeline
    "SelectionConfig", "run_pipeline", "select_tokens", "THREADS_ENV",
    # errors
    "StSimDiffError", "FormatError", "CorruptionError", "ValidationError",
    "ShapeError", "EmptyDomainError", "GuardError", "ResourceError",
]
