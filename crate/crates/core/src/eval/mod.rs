//! Forecast and estimation metrics, MCMC convergence diagnostics and prior
//! shrinkage checks.

pub mod convergence;
pub mod metrics;
pub mod shrinkage;

pub use convergence::{rank_normalized_rhat_ess, ConvergenceReport, ParameterDiagnostics};
pub use metrics::{
    coefficient_rmse, coefficient_rmse_by_quantile, crossing_incidence, empirical_quantile, quantile_score,
    rearrange, weighted_qs, MetricReport, WeightScheme,
};
pub use shrinkage::{kappa_density, prior_noncrossing_probability, PriorCrossingConfig, StateVarianceSpec};
