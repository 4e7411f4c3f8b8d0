//! Law-of-the-iterated-logarithm normalization, long-run variance, and the
//! finite-sample rate diagnostics.

mod diagnostics;
mod lrv;
mod normalize;

pub use diagnostics::{
    covariance_decay, ddp_limsup_diagnostic, dyadic_max_diagnostic, second_moment_scaling,
    theorem1_rate, variance_ratio, BlockMax, CovarianceEstimate, DdpSummary, DyadicMaxima,
    MomentScaling, VarianceRatio, DEGENERACY_TOLERANCE,
};
pub use lrv::{long_run_variance, LongRunVariance};
pub use normalize::{
    lil_normalize, limsup_estimate, partial_sum_trajectory, LimsupSummary, NormalizedTrajectory,
    ReplicateSummary, VarianceMode,
};
