"""Distributed synchronous local moving for modularity and map equation clustering."""
from .baseline import brute_force_best, sequential_local_moving
from .coarsening import contract, unpack
from .engine import DslmConfig, run_dslm, run_dslm_detailed
from .evaluation import PlantedPartitionSpec, ari, generate_planted_partition, report
from .graph import Graph, cluster_stats, load_edge_list, preprocess, weighted_degree
from .quality import map_equation, modularity

__all__ = [
    "Graph",
    "load_edge_list",
    "preprocess",
    "weighted_degree",
    "cluster_stats",
    "modularity",
    "map_equation",
    "DslmConfig",
    "run_dslm",
    "run_dslm_detailed",
    "contract",
    "unpack",
    "sequential_local_moving",
    "brute_force_best",
    "ari",
    "report",
    "PlantedPartitionSpec",
    "generate_planted_partition",
]

__version__ = "0.1.0"
