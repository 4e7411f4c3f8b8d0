//! U-statistics of weakly dependent stationary sequences.
//!
//! * [`kernels`]: bivariate kernels, Hoeffding decompositions, continuity and
//!   moment probes, Nyström spectra.
//! * [`processes`]: seeded stationary generators with dependence metadata.
//! * [`ustat`]: pair-sum engines, prefix trajectories, Hodges-Lehmann
//!   selection and the empirical U-distribution function.
//! * [`lil`]: long-run variance, LIL normalization and rate diagnostics.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod kernels;
pub mod lil;
pub mod mc;
pub mod processes;
pub mod rng;
pub mod stats;
pub mod ustat;

pub use error::{Error, Result};
pub use kernels::{builtin_kernel, HoeffdingParts, Kernel, KernelId, Marginal, PartsMode};
pub use processes::{generate_path, IidMarginal, MixingProfile, ProcessModel, SamplePath};
pub use ustat::{PairSource, PairwiseMeanQuery, Trajectory};

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
