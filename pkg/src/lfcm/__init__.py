"""Latent factor causal model discovery from tetrad constraints."""

from __future__ import annotations

from .discovery import (
    DiscoveryConfig,
    DiscoveryTrace,
    estimate_lfcm,
    find_ordered_clusters,
    learn_dag,
    merge_clusters,
)
from .errors import (
    DegenerateCalibration,
    DegenerateVariance,
    DomainMismatch,
    EmptyHypothesis,
    GraphTooLarge,
    InsufficientSamples,
    InvalidData,
    InvalidTetrad,
    LfcmError,
    ShapeError,
    SingularMatrix,
    TooFewVariables,
)
from .evaluation import (
    EdgeConfusion,
    PairConfusion,
    cluster_pair_confusion,
    edge_confusion,
    graphs_equal_canonical,
    match_clusters_to_latents,
    oracle_edges,
    random_clustering_baseline,
    roc_sweep,
    single_child_baseline_edges,
    trapezoid_auc,
    write_metrics_csv,
)
from .graph import (
    Dag,
    Lfcm,
    OrderedClustering,
    d_separated,
    full_graph,
    latent_graph,
    lfcm_from_json_dict,
    lfcm_to_json_dict,
    t_separated,
    validate_lfcm,
)
from .linalg import CovarianceSource, DataMatrix, partial_correlation, sample_covariance
from .simulate import (
    GeneratorConfig,
    LinearScm,
    parameterize,
    population_covariance,
    random_lfcm,
    sample_data,
    sample_full_data,
    scm_from_json_dict,
    scm_to_json_dict,
)
from .stats import (
    TestReport,
    fisher_pvalue,
    test_conditional_independence,
    test_vanishing_tetrads,
    tetrad,
    wishart_pvalues,
)

__all__ = [
    "CovarianceSource",
    "Dag",
    "DataMatrix",
    "DegenerateCalibration",
    "DegenerateVariance",
    "DiscoveryConfig",
    "DiscoveryTrace",
    "DomainMismatch",
    "EdgeConfusion",
    "EmptyHypothesis",
    "GeneratorConfig",
    "GraphTooLarge",
    "InsufficientSamples",
    "InvalidData",
    "InvalidTetrad",
    "LfcmError",
    "Lfcm",
    "LinearScm",
    "OrderedClustering",
    "PairConfusion",
    "ShapeError",
    "SingularMatrix",
    "TestReport",
    "TooFewVariables",
    "cluster_pair_confusion",
    "d_separated",
    "edge_confusion",
    "estimate_lfcm",
    "find_ordered_clusters",
    "fisher_pvalue",
    "full_graph",
    "graphs_equal_canonical",
    "latent_graph",
    "learn_dag",
    "lfcm_from_json_dict",
    "lfcm_to_json_dict",
    "match_clusters_to_latents",
    "merge_clusters",
    "oracle_edges",
    "parameterize",
    "partial_correlation",
    "population_covariance",
    "random_clustering_baseline",
    "random_lfcm",
    "roc_sweep",
    "sample_covariance",
    "sample_data",
    "sample_full_data",
    "scm_from_json_dict",
    "scm_to_json_dict",
    "single_child_baseline_edges",
    "t_separated",
    "test_conditional_independence",
    "test_vanishing_tetrads",
    "tetrad",
    "trapezoid_auc",
    "validate_lfcm",
    "wishart_pvalues",
    "write_metrics_csv",
]

__version__ = "0.1.0"
