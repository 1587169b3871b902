//! Joint Bayesian estimation of many regression quantiles with a
//! random-walk-across-quantiles prior on the slopes.
//!
//! The crate provides centred and non-centred Gibbs samplers with horseshoe
//! shrinkage on the quantile differences, an independent per-quantile
//! baseline, post-processing by signal-adaptive variable selection,
//! simulation designs, evaluation metrics and a quantile vector
//! autoregression built on the same samplers.

pub mod ald;
pub mod banded;
pub mod data;
pub mod draws;
pub mod error;
pub mod eval;
pub mod kernels;
pub mod rng;
pub mod sampler;
pub mod savs;
pub mod sim;
pub mod qvar;
pub mod study;

pub use ald::{AugmentationState, InverseGammaPrior, QuantileGrid};
pub use data::{ingest_csv, read_table, Dataset, Rescaling, Table};
pub use draws::{ModelKind, PosteriorDraws};
pub use error::{Error, Result};
pub use rng::RngStream;
pub use sampler::{fit, AlphaPrior, ChainInput, SamplerConfig};
