"""Multi-task kernel ridge regression with minimal-penalty calibration.

The pieces, bottom up: kernel spectra and single-smoother quantities
(kernel), the one-dimensional variance estimator (calibrate), covariance
reconstruction from directional variances (covariance), similarity families
and penalized selection (model), the simulation harness (experiments), and
the command-line entry point (cli).
"""

from .calibrate import (
    CalibrationPath,
    estimate_variance,
    lambda_path_point,
    project_responses,
)
from .covariance import (
    CovarianceEstimate,
    canonical_directions,
    estimate_sigma_basis,
    estimate_sigma_full,
    j_inverse,
    j_map,
    matrix_diagnostics,
    psd_threshold,
    read_sigma,
    write_sigma,
)
from .errors import CalibrationError, InputError, NumericError
from .experiments import (
    ExperimentConfig,
    cv_select,
    draw_noise,
    draw_wishart,
    gaussian_p_value,
    make_config,
    run_experiment,
)
from .kernel import (
    KernelSpectrum,
    SmootherTable,
    apply_smoother,
    df,
    kernel_eval,
    kernel_gram,
    kernel_matrix,
    lambda_for_df,
    lambda_grid,
    pen_min,
    shrinkage_factors,
    smoother_table,
    spectrum_from_matrix,
)
from .model import (
    FamilyMember,
    MultiTaskFit,
    clustering_union,
    collection,
    criterion_table,
    family_eigenvalues,
    independent_family,
    mean_first_basis,
    multitask_family,
    multitask_smoother_apply,
    oracle_bias_variance,
    oracle_select,
    penalty,
    segmentation_union,
    select_model,
    similar_family,
    similarity_matrix,
    trace_smoother,
)

__version__ = "0.1.0"

__all__ = [
    "CalibrationError",
    "CalibrationPath",
    "CovarianceEstimate",
    "ExperimentConfig",
    "FamilyMember",
    "InputError",
    "KernelSpectrum",
    "MultiTaskFit",
    "NumericError",
    "SmootherTable",
    "apply_smoother",
    "canonical_directions",
    "clustering_union",
    "collection",
    "criterion_table",
    "cv_select",
    "df",
    "draw_noise",
    "draw_wishart",
    "estimate_sigma_basis",
    "estimate_sigma_full",
    "estimate_variance",
    "family_eigenvalues",
    "gaussian_p_value",
    "independent_family",
    "j_inverse",
    "j_map",
    "kernel_eval",
    "kernel_gram",
    "kernel_matrix",
    "lambda_for_df",
    "lambda_grid",
    "lambda_path_point",
    "make_config",
    "mean_first_basis",
    "multitask_family",
    "matrix_diagnostics",
    "multitask_smoother_apply",
    "oracle_bias_variance",
    "oracle_select",
    "pen_min",
    "penalty",
    "project_responses",
    "psd_threshold",
    "read_sigma",
    "run_experiment",
    "segmentation_union",
    "select_model",
    "shrinkage_factors",
    "similar_family",
    "similarity_matrix",
    "smoother_table",
    "spectrum_from_matrix",
    "trace_smoother",
    "write_sigma",
]
