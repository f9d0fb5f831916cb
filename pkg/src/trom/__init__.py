"""Tensor reduced-order models with interpolated parameter-specific bases.

Compress a multi-parameter snapshot tensor offline (canonical, Tucker, or
tensor-train format), then build parameter-specific reduced bases online
from a small payload and solve Galerkin-projected dynamics, with a POD
baseline and error/compression diagnostics alongside.
"""

from .analysis import (
    CompressionReport,
    ErrorReport,
    EstimateTerms,
    StudyRecord,
    compression_report,
    estimate_terms,
    gain_study,
    insample_prediction_error,
    representation_error,
    sampled_prediction_error,
    solution_error,
    subspace_residual,
)
from .decomp import (
    CpDecomposition,
    TtDecomposition,
    TuckerDecomposition,
    cp_als,
    cp_from_slices,
    cp_rank_sweep,
    hosvd,
    reconstruct,
    tt_svd,
)
from .dynsys import (
    AffineSystem,
    ReducedSystem,
    Trajectory,
    build_advdiff_model,
    build_heat_model,
    crank_nicolson,
    generate_snapshots,
    project_local,
    project_universal,
    reconstruct_states,
)
from .errors import (
    InputError,
    NumericalError,
    TromError,
)
from .estimators import CpTrom, HosvdTrom, PodRom, TtTrom
from .linalg import QrResult, SvdResult, thin_qr, truncated_svd, weighted_minnorm_solve
from .rom import (
    LocalBasis,
    OnlinePayloadCP,
    OnlinePayloadHOSVD,
    OnlinePayloadTT,
    UniversalBasis,
    core_matrix,
    extract_dense,
    local_basis,
    offline_cp,
    offline_hosvd,
    offline_tt,
    pod_basis,
)
from .sampling import (
    CartesianGrid,
    GeneralSampling,
    InterpVectors,
    ParameterBox,
    general_vector,
    grid_delta,
    lagrange_vectors,
    load_sampling,
    position_vectors,
)
from .storage import (
    load_basis,
    load_decomposition,
    load_model_config,
    load_payload,
    load_trajectory_csv,
    save_basis,
    save_decomposition,
    save_payload,
    save_trajectory_csv,
)
from .tensor import (
    DenseTensor,
    frobenius_norm,
    kmode_product,
    read_tensor,
    refold,
    unfold,
    write_tensor,
)

__version__ = "0.1.0"

__all__ = [
    "DenseTensor", "kmode_product", "unfold", "refold", "frobenius_norm",
    "read_tensor", "write_tensor",
    "SvdResult", "QrResult", "truncated_svd", "thin_qr", "weighted_minnorm_solve",
    "CpDecomposition", "TuckerDecomposition", "TtDecomposition",
    "cp_als", "cp_rank_sweep", "cp_from_slices", "hosvd", "tt_svd", "reconstruct",
    "ParameterBox", "CartesianGrid", "GeneralSampling", "InterpVectors",
    "position_vectors", "lagrange_vectors", "general_vector", "grid_delta",
    "load_sampling",
    "UniversalBasis", "OnlinePayloadCP", "OnlinePayloadHOSVD", "OnlinePayloadTT",
    "LocalBasis", "offline_cp", "offline_hosvd", "offline_tt",
    "core_matrix", "local_basis", "pod_basis", "extract_dense",
    "AffineSystem", "Trajectory", "ReducedSystem", "crank_nicolson",
    "project_universal", "project_local", "reconstruct_states",
    "build_heat_model", "build_advdiff_model", "generate_snapshots",
    "ErrorReport", "CompressionReport", "EstimateTerms", "StudyRecord",
    "subspace_residual", "representation_error", "insample_prediction_error",
    "sampled_prediction_error", "estimate_terms", "compression_report",
    "solution_error", "gain_study",
    "CpTrom", "HosvdTrom", "TtTrom", "PodRom",
    "save_decomposition", "load_decomposition", "save_payload", "load_payload",
    "save_basis", "load_basis", "save_trajectory_csv", "load_trajectory_csv",
    "load_model_config",
    "TromError", "InputError", "NumericalError",
]
