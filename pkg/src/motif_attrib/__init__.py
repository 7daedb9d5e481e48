"""Structure-aware cooperative-game attribution for graph node subsets.

Compute Shapley-style and component-restricted interaction indices of
black-box set functions, search for the motif families that best explain
them, and score explanations against planted ground truth.
"""

from .errors import (
    BackendConnectionError,
    BackendError,
    BackendEvalError,
    BackendProtocolError,
    InputError,
)
from .games import (
    ExternalValueFunction,
    RestrictedValueFunction,
    ValueFunction,
    WIRE_PROTOCOL,
    external_backend,
    game_from_dict,
    game_to_table_dict,
    make_planted_motif_game,
    make_random_game,
    make_unanimity,
    normalize,
    restricted_evaluate,
    subset_key,
    table_value_function,
)
from .graph import (
    ComponentPartition,
    Graph,
    NodeSubset,
    build_graph,
    complete_graph,
    connected_components,
    enumerate_connected_subsets,
    is_connected,
    neighborhood,
    path_graph,
)
from .interaction import (
    DEFAULT_CONFIG,
    EXACT,
    DividendTable,
    EngineConfig,
    Exactness,
    InteractionIndex,
    discrete_derivative,
    index_from_dividends,
    mobius_dividends,
    myerson_exact,
    myerson_taylor_exact,
    reduce_to_value,
    sample_index,
    shapley_exact,
    shapley_taylor_exact,
)
from .metrics import (
    FidelityResult,
    GroundTruth,
    MetricsReport,
    ami_score,
    auc_score,
    edge_scores_from_explanation,
    explanation_metrics,
    f1_score,
    fidelity,
    fidelity_alpha,
    partition_labels,
)
from .search import (
    Explanation,
    InteractionMatrix,
    branch_and_bound_search,
    build_matrix,
    default_budget,
    exhaustive_search,
    group_attr,
)

__version__ = "0.1.0"

__all__ = [
    "BackendConnectionError",
    "BackendError",
    "BackendEvalError",
    "BackendProtocolError",
    "ComponentPartition",
    "DEFAULT_CONFIG",
    "DividendTable",
    "EXACT",
    "EngineConfig",
    "Exactness",
    "Explanation",
    "ExternalValueFunction",
    "FidelityResult",
    "Graph",
    "GroundTruth",
    "InputError",
    "InteractionIndex",
    "InteractionMatrix",
    "MetricsReport",
    "NodeSubset",
    "RestrictedValueFunction",
    "ValueFunction",
    "WIRE_PROTOCOL",
    "ami_score",
    "auc_score",
    "branch_and_bound_search",
    "build_graph",
    "build_matrix",
    "complete_graph",
    "connected_components",
    "default_budget",
    "discrete_derivative",
    "edge_scores_from_explanation",
    "enumerate_connected_subsets",
    "exhaustive_search",
    "explanation_metrics",
    "external_backend",
    "f1_score",
    "fidelity",
    "fidelity_alpha",
    "game_from_dict",
    "game_to_table_dict",
    "group_attr",
    "index_from_dividends",
    "is_connected",
    "make_planted_motif_game",
    "make_random_game",
    "make_unanimity",
    "mobius_dividends",
    "myerson_exact",
    "myerson_taylor_exact",
    "neighborhood",
    "normalize",
    "partition_labels",
    "path_graph",
    "reduce_to_value",
    "restricted_evaluate",
    "sample_index",
    "shapley_exact",
    "shapley_taylor_exact",
    "subset_key",
    "table_value_function",
]
