"""Max-statistic bootstrap inference with partial standardization."""

from .model import (
    CorrelationSpec,
    CovarianceModel,
    DecayDiagnostics,
    NotPsdError,
    SampleMatrix,
    SchurHornCheck,
    build_correlation,
    decay_diagnostics,
    effective_rank,
    generate_sample,
    matrix_sqrt,
    power_sigma,
    schur_horn_check,
    theory_indices,
    weak_lr_norm,
)
from .maxstat import (
    BootstrapDraws,
    ColumnStats,
    PartialStdConfig,
    bootstrap_draws,
    column_stats,
    empirical_quantile,
    gaussian_max_draws,
    max_min_stat,
)
from .sci import MeanTestResult, SciSet, build_sci, select_tau, test_mean
from .fda import (
    FdaExperimentConfig,
    FdaReport,
    GpConfig,
    MeanParams,
    beta_cdf,
    fourier_basis,
    fourier_coeffs,
    matern_cov,
    matern_grid_cov,
    mean_coeffs,
    mean_function,
    run_fda_experiment,
    simulate_gp,
)
from .multinomial import (
    CellCounts,
    CellFilterRule,
    MultinomialExperimentConfig,
    MultinomialModel,
    MultinomialReport,
    min_eig_lower_bound,
    restricted_bootstrap_sci,
    run_multinomial_experiment,
    sample_counts,
    select_cells,
    select_tau_restricted,
    zipf_model,
)
from .rates import (
    DkSummary,
    RateFit,
    RateStudyConfig,
    RateStudyResult,
    estimate_dk_bootstrap,
    estimate_dk_gaussian,
    fit_rate,
    ks_two_sample,
    run_rate_study,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # model
    "CorrelationSpec", "CovarianceModel", "DecayDiagnostics", "NotPsdError",
    "SampleMatrix", "SchurHornCheck", "build_correlation", "decay_diagnostics",
    "effective_rank", "generate_sample", "matrix_sqrt", "power_sigma",
    "schur_horn_check", "theory_indices", "weak_lr_norm",
    # maxstat
    "BootstrapDraws", "ColumnStats", "PartialStdConfig", "bootstrap_draws",
    "column_stats", "empirical_quantile", "gaussian_max_draws", "max_min_stat",
    # sci
    "MeanTestResult", "SciSet", "build_sci", "select_tau", "test_mean",
    # fda
    "FdaExperimentConfig", "FdaReport", "GpConfig", "MeanParams", "beta_cdf",
    "fourier_basis", "fourier_coeffs", "matern_cov", "matern_grid_cov",
    "mean_coeffs", "mean_function", "run_fda_experiment", "simulate_gp",
    # multinomial
    "CellCounts", "CellFilterRule", "MultinomialExperimentConfig",
    "MultinomialModel", "MultinomialReport", "min_eig_lower_bound",
    "restricted_bootstrap_sci", "run_multinomial_experiment", "sample_counts",
    "select_cells", "select_tau_restricted", "zipf_model",
    # rates
    "DkSummary", "RateFit", "RateStudyConfig", "RateStudyResult",
    "estimate_dk_bootstrap", "estimate_dk_gaussian", "fit_rate",
    "ks_two_sample", "run_rate_study",
]
