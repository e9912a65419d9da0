"""Magnification sampling toolkit.

Models multi-scale patch sampling over a continuous magnification range:
similarity kernels and their transfer potentials, the accumulated training
signal of a sampling distribution, optimized distributions (entropy-
regularized Gibbs and worst-case LP), executable crop-and-resize plans,
and effective-rank profiling of embedding sets.
"""

__version__ = "0.1.0"

from .distributions import (
    SamplingDistribution,
    format_distribution,
    mix,
    parse_distribution,
    read_distribution,
    write_distribution,
)
from .errors import (
    DegenerateInputError,
    DomainError,
    FeasibilityError,
    FormatError,
    MagsampleError,
    ParameterError,
    RangeError,
    ShapeError,
    SolverError,
)
from .kernels import (
    AbsDistanceKernel,
    InfoOverlapKernel,
    Kernel,
    MagRange,
    TabulatedKernel,
    TransferPotentialCurve,
    kernel_from_string,
    transfer_potential_curve,
)
from .optimize import (
    MAX_AVG_ENTROPY,
    MAX_MIN,
    MaxMinSolution,
    OptimizationConfig,
    entropy,
    optimize_max_avg,
    optimize_max_min,
    regularized_objective,
)
from .rankme import (
    CentroidSimilarity,
    EmbeddingSet,
    GroupRankMe,
    RankMeProfile,
    centroid_similarity,
    load_embeddings,
    minmax_normalize_profiles,
    rankme,
    rankme_profile,
)
from .rng import CounterRng
from .sampler import (
    STANDARD_MPPS,
    CropPlanEntry,
    SamplerConfig,
    apply_crop,
    draw_target_mpp,
    generate_plan,
    plan_crop,
    read_image_array,
    read_plan_csv,
    sample_targets,
    write_image_array,
    write_plan_csv,
)
from .signal import (
    SignalProfile,
    SignalSummary,
    accumulated_signal,
    signal_summary,
    total_signal,
)

__all__ = [
    "__version__",
    "AbsDistanceKernel",
    "CentroidSimilarity",
    "CounterRng",
    "CropPlanEntry",
    "DegenerateInputError",
    "DomainError",
    "EmbeddingSet",
    "FeasibilityError",
    "FormatError",
    "GroupRankMe",
    "InfoOverlapKernel",
    "Kernel",
    "MAX_AVG_ENTROPY",
    "MAX_MIN",
    "MagRange",
    "MagsampleError",
    "MaxMinSolution",
    "OptimizationConfig",
    "ParameterError",
    "RangeError",
    "RankMeProfile",
    "STANDARD_MPPS",
    "SamplerConfig",
    "SamplingDistribution",
    "ShapeError",
    "SignalProfile",
    "SignalSummary",
    "SolverError",
    "TabulatedKernel",
    "TransferPotentialCurve",
    "accumulated_signal",
    "apply_crop",
    "centroid_similarity",
    "draw_target_mpp",
    "entropy",
    "format_distribution",
    "generate_plan",
    "kernel_from_string",
    "load_embeddings",
    "minmax_normalize_profiles",
    "mix",
    "optimize_max_avg",
    "optimize_max_min",
    "parse_distribution",
    "plan_crop",
    "rankme",
    "rankme_profile",
    "read_distribution",
    "read_image_array",
    "read_plan_csv",
    "regularized_objective",
    "sample_targets",
    "signal_summary",
    "total_signal",
    "transfer_potential_curve",
    "write_distribution",
    "write_image_array",
    "write_plan_csv",
]
