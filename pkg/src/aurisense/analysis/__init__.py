from .normalize import normalize_spatial, normalize_temporal
from .pca import PCAResult, pca
from .cluster import (
    ClusterReport,
    ConcordanceResult,
    ElbowResult,
    KMeansResult,
    cluster_pipeline,
    concordance,
    kmeans,
    select_k_elbow,
    silhouette,
    sse_of,
)
from .stats import (
    CorrelationResult,
    RepeatabilityReport,
    correlation,
    exclude_abnormal,
    pearson,
    repeatability_cv,
)
from .contour import ContourField, interpolate_2d, interpolate_contour
from .datasets import read_dataset_csv, write_dataset_csv, write_report_json

__all__ = [
    "normalize_spatial",
    "normalize_temporal",
    "PCAResult",
    "pca",
    "ClusterReport",
    "ConcordanceResult",
    "ElbowResult",
    "KMeansResult",
    "cluster_pipeline",
    "concordance",
    "kmeans",
    "select_k_elbow",
    "silhouette",
    "sse_of",
    "CorrelationResult",
    "RepeatabilityReport",
    "correlation",
    "exclude_abnormal",
    "pearson",
    "repeatability_cv",
    "ContourField",
    "interpolate_2d",
    "interpolate_contour",
    "read_dataset_csv",
    "write_dataset_csv",
    "write_report_json",
]
