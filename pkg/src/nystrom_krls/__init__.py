"""Kernel regularized least squares with Nystrom subsampling and incremental paths."""

from .diagnostics import EffectiveDimension, effective_dimension, effective_dimension_table
from .errors import (
    ConfigError,
    DataError,
    DowndateFailure,
    InputError,
    NotPositiveDefinite,
    NystromError,
    ResourceCapError,
    SingularFactor,
)
from .incremental import CholeskyPathState, PathResult, naive_path, path_init, path_step, run_path
from .kernels import KernelSpec, evaluate, gram_block
from .linalg import cholesky, cholup, pinv_solve, tri_solve
from .model_selection import GridReport, GridSpec, Strategy, evaluate as evaluate_model, run_grid, run_m_regularized
from .solvers import ExactModel, NystromModel, fit_exact, fit_nystrom_batch, load_model, predict, save_model
from .subsampling import (
    LeverageScores,
    SamplingPlan,
    leverage_scores_approx,
    leverage_scores_exact,
    sample_landmarks,
)

__version__ = "0.1.0"

__all__ = [
    "CholeskyPathState",
    "ConfigError",
    "DataError",
    "DowndateFailure",
    "EffectiveDimension",
    "ExactModel",
    "GridReport",
    "GridSpec",
    "InputError",
    "KernelSpec",
    "LeverageScores",
    "NotPositiveDefinite",
    "NystromError",
    "NystromModel",
    "PathResult",
    "ResourceCapError",
    "SamplingPlan",
    "SingularFactor",
    "Strategy",
    "cholesky",
    "cholup",
    "effective_dimension",
    "effective_dimension_table",
    "evaluate",
    "evaluate_model",
    "fit_exact",
    "fit_nystrom_batch",
    "gram_block",
    "leverage_scores_approx",
    "leverage_scores_exact",
    "load_model",
    "naive_path",
    "path_init",
    "path_step",
    "pinv_solve",
    "predict",
    "run_grid",
    "run_m_regularized",
    "run_path",
    "sample_landmarks",
    "save_model",
    "tri_solve",
]
