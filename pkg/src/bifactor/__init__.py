"""Bilinear factor matrix norm minimization for robust PCA and matrix completion."""

__version__ = "0.1.0"

from .bench import (
    ExperimentConfig,
    GroundTruth,
    f_measure,
    gen_synthetic,
    phase_transition,
    psnr,
    rse,
    table3_experiment,
)
from .completion import complete_dn, complete_fn
from .dense import (
    ObservationMask,
    ThinSvd,
    project,
    project_complement,
    pseudo_inverse,
    solve_gram,
    thin_svd,
)
from .norms import (
    dn_penalty,
    fn_penalty,
    lp_quasi_norm_p,
    schatten_quasi_norm_q,
    spectral_factorization,
)
from .prox import (
    half_threshold,
    half_threshold_matrix,
    soft_threshold,
    svt,
    two_thirds_threshold,
    two_thirds_threshold_matrix,
)
from .rank import RankEstimate, estimate_rank
from .rpca import (
    AdmmState,
    SolverOptions,
    SolverReport,
    Termination,
    solve_rpca_nuclear,
    solve_sl_half,
    solve_sl_two_thirds,
    stopping_metric,
)
