"""Compound dissimilarity measures for fingerprints with missing attributes,
and kNN indoor positioning built on them."""

__version__ = "0.1.0"

from .compound import CompoundConfig, Variant, acdm, batch_dissimilarity, cdm, dissimilarity, rcdm
from .estimators import CompoundKNNLocator, Densifier, FingerprintSparsifier
from .exceptions import CDMError, ConfigurationError, DomainError, RowError, SchemaError
from .fingerprint import (
    Fingerprint,
    GeoLabel,
    ReferenceFingerprintMap,
    densify,
    exclusive_attributes,
    shared_attributes,
)
from .metrics import KERNEL_NAMES, KernelId, finalize, pair_term, parse_kernel, vector_metric
from .positioning import (
    BaselineBackend,
    CompoundBackend,
    PositionEstimate,
    hierarchical_locate,
    knn_locate,
    rank_neighbors,
)

__all__ = [
    "BaselineBackend", "CDMError", "CompoundBackend", "CompoundConfig", "CompoundKNNLocator",
    "ConfigurationError", "Densifier", "DomainError", "Fingerprint", "FingerprintSparsifier",
    "GeoLabel", "KERNEL_NAMES", "KernelId", "PositionEstimate", "ReferenceFingerprintMap",
    "RowError", "SchemaError", "Variant", "acdm", "batch_dissimilarity", "cdm", "densify",
    "dissimilarity", "exclusive_attributes", "finalize", "hierarchical_locate", "knn_locate",
    "pair_term", "parse_kernel", "rank_neighbors", "rcdm", "shared_attributes", "vector_metric",
]
