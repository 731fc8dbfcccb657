"""Doubly robust mean/ATE estimation with adaptive correction clipping.

The clipped estimator keeps the doubly robust combination anchored inside
the interval spanned by its outcome-regression and inverse-weighting
components, so a misspecified correction term can never push the estimate
past the worse of the two. Inference uses a parametric bootstrap of the
clipped limit law. The harness replicates a classic latent-variable
misspecification benchmark and runs multi-outcome two-arm analyses.
"""

from . import kernels
from .data import (
    AteDataset,
    Dataset,
    MaskedVector,
    load_ate_csv,
    load_missing_csv,
    save_missing_csv,
)
from .errors import DrclipError
from .estimators import AteEstimate, EstimateBundle, clip, compute_bundle, estimate_ate
from .harness import (
    AnalysisConfig,
    MetricsRow,
    ReplicationRecord,
    ScenarioMetrics,
    StudyConfig,
    analyze_ate,
    compute_metrics,
    emit_histogram_svg,
    emit_report,
    run_study,
    write_records_csv,
)
from .inference import (
    Interval,
    acc_interval,
    covariance,
    influence_matrix,
    sample_W,
    wald_interval,
)
from .nuisance import (
    OutcomeModel,
    PropensityModel,
    fit_diff_in_means,
    fit_logistic,
    fit_ols,
    hajek_rescale,
    predict_mu,
    predict_pi,
)
from .simgen import (
    THETA_STAR,
    ScenarioConfig,
    SimulatedSample,
    derive_seed,
    draw_latent,
    gen_outcome,
    generate,
    transform_covariates,
    true_propensity,
)

__version__ = "0.1.0"

__all__ = [
    "AnalysisConfig",
    "AteDataset",
    "AteEstimate",
    "Dataset",
    "DrclipError",
    "EstimateBundle",
    "Interval",
    "MaskedVector",
    "MetricsRow",
    "OutcomeModel",
    "PropensityModel",
    "ReplicationRecord",
    "ScenarioConfig",
    "ScenarioMetrics",
    "SimulatedSample",
    "StudyConfig",
    "THETA_STAR",
    "acc_interval",
    "analyze_ate",
    "clip",
    "compute_bundle",
    "compute_metrics",
    "covariance",
    "derive_seed",
    "draw_latent",
    "emit_histogram_svg",
    "emit_report",
    "estimate_ate",
    "fit_diff_in_means",
    "fit_logistic",
    "fit_ols",
    "gen_outcome",
    "generate",
    "hajek_rescale",
    "influence_matrix",
    "kernels",
    "load_ate_csv",
    "load_missing_csv",
    "predict_mu",
    "predict_pi",
    "run_study",
    "sample_W",
    "save_missing_csv",
    "transform_covariates",
    "true_propensity",
    "wald_interval",
    "write_records_csv",
]
