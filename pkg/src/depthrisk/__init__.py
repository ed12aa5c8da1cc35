"""Depth-based multivariate risk measurement.

Mahalanobis depth and its plug-in estimator, depth lower-level sets with
geometric diagnostics, a depth-conditioned tail expectation estimator, and a
seeded replication harness for measuring convergence rates.
"""

from ._version import __version__
from .ccte import (
    CcteEstimate,
    Population,
    ccte_hat,
    ccte_hat_split,
    ccte_true_oracle,
    ccte_under_model,
    estimate_population_model,
    gaussian_population,
)
from .depth import (
    DepthModel,
    ProbeGrid,
    fit_model,
    mahalanobis_sq,
    mhd,
    mhd_gradient,
    probe_points,
    sup_norm_distance,
)
from .errors import (
    AlreadyHasCosts,
    ConfigError,
    DegenerateSample,
    DepthRiskError,
    DimensionMismatch,
    DomainError,
    IoError,
    MissingCosts,
    NoMass,
    NonPositiveStatistic,
    NotPositiveDefinite,
    NotSymmetric,
)
from .experiments import (
    CellResult,
    ExperimentConfig,
    GaussianConfig,
    ReplicationReport,
    config_from_json,
    config_to_json,
    emit_tables,
    rate_slope,
    rate_table,
    run_replications,
)
from .levelset import (
    HausdorffResult,
    LevelSetSpec,
    boundary_perimeter,
    boundary_points,
    hausdorff_boundaries,
    hausdorff_report,
    in_lower_set,
    sym_diff_probability,
    sym_diff_volume,
)
from .linalg import SpdMatrix, build_spd, operator_norm, quad_form, quad_forms, sq_norm
from .rng import RngStream, mix64
from .sampling import (
    FrankGumbelConfig,
    GumbelMarginal,
    Sample,
    attach_costs,
    frank_pair,
    gumbel_cdf,
    gumbel_quantile,
    sample_gaussian,
    sample_risk_factors,
    squared_norms,
)

__all__ = [
    "__version__",
    "AlreadyHasCosts",
    "CcteEstimate",
    "CellResult",
    "ConfigError",
    "DegenerateSample",
    "DepthModel",
    "DepthRiskError",
    "DimensionMismatch",
    "DomainError",
    "ExperimentConfig",
    "FrankGumbelConfig",
    "GaussianConfig",
    "GumbelMarginal",
    "HausdorffResult",
    "IoError",
    "LevelSetSpec",
    "MissingCosts",
    "NoMass",
    "NonPositiveStatistic",
    "NotPositiveDefinite",
    "NotSymmetric",
    "Population",
    "ProbeGrid",
    "ReplicationReport",
    "RngStream",
    "Sample",
    "SpdMatrix",
    "attach_costs",
    "boundary_perimeter",
    "boundary_points",
    "build_spd",
    "ccte_hat",
    "ccte_hat_split",
    "ccte_true_oracle",
    "ccte_under_model",
    "config_from_json",
    "config_to_json",
    "emit_tables",
    "estimate_population_model",
    "fit_model",
    "frank_pair",
    "gaussian_population",
    "gumbel_cdf",
    "gumbel_quantile",
    "hausdorff_boundaries",
    "hausdorff_report",
    "in_lower_set",
    "mahalanobis_sq",
    "mhd",
    "mhd_gradient",
    "mix64",
    "operator_norm",
    "probe_points",
    "quad_form",
    "quad_forms",
    "rate_slope",
    "rate_table",
    "run_replications",
    "sample_gaussian",
    "sample_risk_factors",
    "sq_norm",
    "squared_norms",
    "sup_norm_distance",
    "sym_diff_probability",
    "sym_diff_volume",
]
