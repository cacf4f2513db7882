"""Learn ultra-sparse graphs from data by spectral densification."""

from .cluster import accuracy, eigengap_dimension, hungarian, kmeans, nmi, spectral_clustering
from .eigen import ConvergenceError, SpectralEmbedding, build_subspace, embed, smallest_eigenpairs
from .graphcore import DataMatrix, GraphFormatError, SparseGraph, build_laplacian, read_edge_list, write_edge_list
from .learn import LearnConfig, LearnTrace, graspel_learn, stability_report
from .recover import edge_set_metrics, recovery_experiment
from .sparsify import SparsifyConfig, spectral_sparsify

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "DataMatrix",
    "GraphFormatError",
    "LearnConfig",
    "LearnTrace",
    "SparseGraph",
    "SparsifyConfig",
    "SpectralEmbedding",
    "accuracy",
    "build_laplacian",
    "build_subspace",
    "edge_set_metrics",
    "eigengap_dimension",
    "embed",
    "graspel_learn",
    "hungarian",
    "kmeans",
    "nmi",
    "read_edge_list",
    "recovery_experiment",
    "smallest_eigenpairs",
    "spectral_clustering",
    "spectral_sparsify",
    "stability_report",
    "write_edge_list",
]
