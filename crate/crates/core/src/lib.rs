//! Network reconstruction from aggregated relational data (ARD).
//!
//! Two estimators recover link probabilities from per-node trait counts:
//! a Bayesian latent surface model ([`blsm`]) and a penalized Poisson
//! regression ([`fpr`]). The numerical code is generic over [`Scalar`]
//! (`f32` or `f64`); the aliases below fix the common precisions.

// `!(x > 0.0)` is the intended way to reject NaN along with bad values
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// index loops read closer to the formulas in the numeric kernels
#![allow(clippy::needless_range_loop)]

pub mod ard;
pub mod blsm;
pub mod error;
pub mod eval;
pub mod fpr;
pub mod graphgen;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type BlsmParams64 = blsm::BlsmParams<f64>;
pub type BlsmParams32 = blsm::BlsmParams<f32>;
pub type BlsmPriors64 = blsm::BlsmPriors<f64>;
pub type LikelihoodSpec64 = blsm::LikelihoodSpec<f64>;
pub type PosteriorSamples64 = blsm::PosteriorSamples<f64>;
pub type PosteriorSamples32 = blsm::PosteriorSamples<f32>;
pub type ViFit64 = blsm::ViFit<f64>;
pub type FprConfig64 = fpr::FprConfig<f64>;
pub type FprConfig32 = fpr::FprConfig<f32>;
pub type FprModel64 = fpr::FprModel<f64>;
pub type FprModel32 = fpr::FprModel<f32>;
pub type Penalty64 = fpr::Penalty<f64>;
pub type Deviance64 = fpr::Deviance<f64>;
