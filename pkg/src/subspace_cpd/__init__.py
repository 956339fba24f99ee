"""Offline change-point detection for high-dimensional time series whose
segments lie in low-dimensional linear subspaces.

Each segment is summarised by a regularised low-rank factorisation; a split
is scored by the combined loss of the factorisations on either side, and
multiple changes are found by recursive binary segmentation with a
penalised acceptance rule.  The package also ships automatic parameter
tuning, a synthetic benchmark generator, an evaluation harness, and a CLI
(``subspace-cpd``).
"""

__version__ = "0.1.0"

from .detection import (
    DetectionConfig,
    FixedKResult,
    ScanProfile,
    SegmentationResult,
    accept_change,
    best_split,
    detect,
    detect_fixed_k,
    refine,
    scan_statistic,
)
from .errors import (
    CandidateRangeError,
    DegenerateSeriesError,
    DimensionError,
    InsufficientSplitsError,
    NumericalError,
)
from .evaluation import (
    BenchmarkReport,
    BenchmarkRow,
    labels_from_changepoints,
    run_benchmark,
    v_measure,
)
from .factorization import (
    FactorizationResult,
    SegmentLoss,
    SolverOptions,
    factorize,
    nuclear_norm_product,
    segment_loss,
)
from .io import ResultDocument, load_csv, standardize
from .simulation import (
    GroundTruth,
    SyntheticSpec,
    generate,
    noise_matrix,
    random_basis,
    rotate_basis,
)
from .tuning import (
    DimEstimate,
    SlopeFit,
    estimate_dim,
    estimate_lambda,
    fit_penalty_slope,
    pick_dim_from_eigenvalues,
    slope_heuristic_mu,
)

__all__ = [
    "__version__",
    "DetectionConfig",
    "FixedKResult",
    "ScanProfile",
    "SegmentationResult",
    "accept_change",
    "best_split",
    "detect",
    "detect_fixed_k",
    "refine",
    "scan_statistic",
    "CandidateRangeError",
    "DegenerateSeriesError",
    "DimensionError",
    "InsufficientSplitsError",
    "NumericalError",
    "BenchmarkReport",
    "BenchmarkRow",
    "labels_from_changepoints",
    "run_benchmark",
    "v_measure",
    "FactorizationResult",
    "SegmentLoss",
    "SolverOptions",
    "factorize",
    "nuclear_norm_product",
    "segment_loss",
    "ResultDocument",
    "load_csv",
    "standardize",
    "GroundTruth",
    "SyntheticSpec",
    "generate",
    "noise_matrix",
    "random_basis",
    "rotate_basis",
    "DimEstimate",
    "SlopeFit",
    "estimate_dim",
    "estimate_lambda",
    "fit_penalty_slope",
    "pick_dim_from_eigenvalues",
    "slope_heuristic_mu",
]
