//! Penalized regression of ARD counts on pair features.

mod cv;
mod deviance;
mod features;
mod federated;
mod fit;
mod penalty;

pub use cv::{cross_validate, fold_assignment, CvPoint, CvResult};
pub use deviance::{
    huber_psi, huber_rho, mad_scale, poisson_deviance, Deviance, DEFAULT_HUBER_DELTA, MAD_CONSISTENCY, MU_FLOOR,
};
pub use features::FeatureMap;
pub use federated::{federated_fit, FederatedConfig};
pub use fit::{fit, fit_rows, objective, predict_links, FprConfig, FprModel, StepRule};
pub use penalty::{prox, Penalty, PenaltyKind};

/// Smooth-term value and gradient, exposed for derivative checks.
pub fn smooth_value_and_gradient<T: crate::Scalar>(
    features: &FeatureMap,
    y: &crate::ard::ArdMatrix,
    t: &crate::ard::TraitPartition,
    deviance: Deviance<T>,
    beta: &[T],
    scale: T,
) -> crate::Result<(T, Vec<T>)> {
    crate::error::ensure_param!(beta.len() == features.dim(), "beta has the wrong length");
    let s = fit::Smooth::new(features, y, t, deviance, None)?;
    Ok(s.value_and_gradient(beta, scale))
}
