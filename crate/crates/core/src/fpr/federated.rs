use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::features::FeatureMap;
use super::fit::{default_start, max_change, prox_step, FprConfig, FprModel, Smooth, StepRule};
use crate::ard::{ArdMatrix, TraitPartition};
use crate::error::{ensure_param, Error, Result};
use crate::rng::{rng_from_seed, substream};
use crate::scalar::Scalar;

/// Settings of the simulated federated fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FederatedConfig {
    pub rounds: usize,
    /// Total privacy budget; `None` means no clipping and no noise.
    pub epsilon: Option<f64>,
    /// Per-party gradient clipping norm `C`.
    pub clip: f64,
    /// `δ` of the Gaussian mechanism.
    pub delta: f64,
    pub seed: u64,
}

impl Default for FederatedConfig {
    fn default() -> Self {
        Self {
            rounds: 200,
            epsilon: None,
            clip: 1.0,
            delta: 1e-5,
            seed: 0,
        }
    }
}

impl FederatedConfig {
    /// Per-round noise standard deviation: the Gaussian mechanism with the
    /// budget split evenly over rounds.
    pub fn noise_sd(&self) -> Option<f64> {
        self.epsilon.map(|eps| {
            let per_round = eps / self.rounds as f64;
            self.clip * (2.0 * (1.25 / self.delta).ln()).sqrt() / per_round
        })
    }
}

/// Synchronous federated proximal gradient.
///
/// Every party computes the smooth-term gradient on its own rows. Under a
/// finite budget the gradient is clipped to norm `C` and Gaussian noise is
/// added. The coordinator sums the party gradients (the gradient of the
/// full deviance is that sum), takes one proximal step with the fixed step
/// size of `cfg`, and broadcasts the result.
pub fn federated_fit<T: Scalar>(
    y: &ArdMatrix,
    shards: &[Vec<usize>],
    t: &TraitPartition,
    cfg: &FprConfig<T>,
    fed: &FederatedConfig,
) -> Result<FprModel<T>> {
    cfg.validate()?;
    ensure_param!(fed.rounds >= 1, "rounds must be >= 1");
    ensure_param!(!shards.is_empty(), "at least one party is required");
    if let Some(eps) = fed.epsilon {
        ensure_param!(eps > 0.0 && eps.is_finite(), "epsilon must be > 0, got {eps}");
        ensure_param!(fed.clip > 0.0, "clip norm must be > 0");
        ensure_param!(fed.delta > 0.0 && fed.delta < 1.0, "delta must lie in (0, 1)");
    }
    let StepRule::Fixed { step } = cfg.step else {
        return Err(Error::Parameter("federated fitting needs a fixed step size".into()));
    };

    let n = y.n();
    let mut owner = vec![usize::MAX; n];
    for (p, shard) in shards.iter().enumerate() {
        for &i in shard {
            ensure_param!(i < n, "shard {p} row {i} out of range");
            ensure_param!(owner[i] == usize::MAX, "row {i} belongs to more than one party");
            owner[i] = p;
        }
    }
    ensure_param!(
        owner.iter().all(|&o| o != usize::MAX),
        "shards do not cover every respondent"
    );

    let features = FeatureMap::new(t.clone());
    let dim = features.dim();
    let parties: Vec<Smooth<'_, T>> = shards
        .iter()
        .enumerate()
        .map(|(p, _)| {
            let rows: Vec<bool> = owner.iter().map(|&o| o == p).collect();
            Smooth::new(&features, y, t, cfg.deviance, Some(&rows))
        })
        .collect::<Result<_>>()?;
    let everyone = Smooth::new(&features, y, t, cfg.deviance, None)?;
    let mut beta = default_start(&everyone, dim);

    let noise = fed.noise_sd().map(|sd| Normal::new(0.0, sd).expect("finite sd"));
    let mut rngs: Vec<_> = (0..shards.len())
        .map(|p| rng_from_seed(substream(fed.seed, p as u64)))
        .collect();
    let mut trace = Vec::with_capacity(fed.rounds);
    let mut converged = false;
    let mut iterations = 0;

    for round in 0..fed.rounds {
        iterations = round + 1;
        let mut total = vec![T::zero(); dim];
        for (party, rng) in parties.iter().zip(rngs.iter_mut()) {
            let scale = party.scale_at(&beta);
            let (_, mut g) = party.value_and_gradient(&beta, scale);
            if let Some(noise) = &noise {
                let norm = g.iter().map(|&x| x * x).sum::<T>().sqrt();
                let c = T::c(fed.clip);
                if norm > c {
                    g.iter_mut().for_each(|x| *x = *x * c / norm);
                }
                for x in &mut g {
                    *x += T::c(noise.sample(rng));
                }
            }
            for (a, b) in total.iter_mut().zip(&g) {
                *a += *b;
            }
        }
        if total.iter().any(|g| !g.is_finite()) {
            return Err(Error::Optimization {
                iterations: round,
                message: "non-finite aggregated gradient".into(),
            });
        }
        let next = prox_step(&cfg.penalty, &beta, &total, step);
        let moved = max_change(&next, &beta);
        beta = next;
        let scale = everyone.scale_at(&beta);
        trace.push(everyone.value(&beta, scale) + cfg.penalty.value(&beta));
        if noise.is_none() && moved < cfg.tol {
            converged = true;
            break;
        }
    }

    Ok(FprModel {
        beta,
        features: features.clone(),
        penalty: cfg.penalty,
        deviance: cfg.deviance,
        objective_trace: trace,
        iterations,
        converged,
    })
}
