//! Bayesian latent surface model: nodes on the unit sphere `S^p`, link
//! probability `σ(v_i + v_j + ζ ⟨z_i, z_j⟩)`, Poisson (or negative-binomial)
//! likelihood for the aggregated counts.

mod diagnostics;
mod init;
mod mcmc;
mod model;
mod predict;
mod simulate;
mod vi;

pub use diagnostics::{diagnostics, effective_sample_size, gelman_rubin, Diagnostics};
pub use init::initialize;
pub use mcmc::{mcmc_fit, mcmc_fit_from, AcceptanceRates, McmcConfig, PosteriorSamples};
pub use model::{
    ard_rate, ard_rates, link_prob, log_likelihood, log_likelihood_gradient, log_prior, BlsmParams, BlsmPriors, Family,
    LikelihoodGradient, LikelihoodSpec, Link, ZPrior,
};
pub use predict::{pair_probabilities, posterior_mean, predict_links, predict_links_samples};
pub use simulate::{simulate_latent, LatentDataset, LatentSimConfig};
pub use vi::{smoothed, vi_fit, vi_fit_from, ViConfig, ViFailure, ViFit, ELBO_WINDOW};
