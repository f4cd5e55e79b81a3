use serde::{Deserialize, Serialize};

use super::mcmc::PosteriorSamples;
use crate::error::{ensure_param, Result};
use crate::scalar::Scalar;

/// Effective sample size by Geyer's initial positive sequence.
///
/// Autocovariances are summed in adjacent pairs until the first
/// non-positive pair. A constant chain has ESS 1.
pub fn effective_sample_size(chain: &[f64]) -> f64 {
    let n = chain.len();
    if n < 2 {
        return n as f64;
    }
    let mean = chain.iter().sum::<f64>() / n as f64;
    let autocov = |lag: usize| -> f64 {
        (0..n - lag)
            .map(|t| (chain[t] - mean) * (chain[t + lag] - mean))
            .sum::<f64>()
            / n as f64
    };
    let gamma0 = autocov(0);
    if gamma0 <= f64::EPSILON * mean.abs().max(1.0) * 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut m = 0;
    while 2 * m + 1 < n {
        let pair = autocov(2 * m) + autocov(2 * m + 1);
        if pair <= 0.0 {
            break;
        }
        // initial monotone sequence
        let pair = pair.min(prev);
        sum += pair;
        prev = pair;
        m += 1;
    }
    let tau = (2.0 * sum / gamma0 - 1.0).max(1.0 / n as f64);
    n as f64 / tau
}

/// Potential scale reduction `R̂ = sqrt(1 + B / (N W))`.
///
/// `B / N` is the sample variance of the chain means and `W` the mean
/// within-chain variance (normalized by `N`), so identical chains give
/// exactly 1. Chains are truncated to the shortest length.
pub fn gelman_rubin(chains: &[&[f64]]) -> Result<f64> {
    ensure_param!(chains.len() >= 2, "Gelman-Rubin needs at least two chains");
    let n = chains.iter().map(|c| c.len()).min().unwrap_or(0);
    ensure_param!(n >= 2, "chains need at least two draws");
    let m = chains.len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| c[..n].iter().sum::<f64>() / n as f64).collect();
    let within = chains
        .iter()
        .zip(&means)
        .map(|(c, mu)| c[..n].iter().map(|x| (x - mu).powi(2)).sum::<f64>() / n as f64)
        .sum::<f64>()
        / m;
    let grand = means.iter().sum::<f64>() / m;
    let between_over_n = means.iter().map(|mu| (mu - grand).powi(2)).sum::<f64>() / (m - 1.0);
    if between_over_n == 0.0 {
        return Ok(1.0);
    }
    if within == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((1.0 + between_over_n / within).sqrt())
}

/// Per-parameter convergence summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `v_0 … v_{n-1}`, `zeta`, `log_posterior`.
    pub names: Vec<String>,
    pub ess: Vec<f64>,
    pub gelman_rubin: Option<Vec<f64>>,
}

fn traces<T: Scalar>(s: &PosteriorSamples<T>) -> Vec<Vec<f64>> {
    let n = s.draws.first().map_or(0, |d| d.n());
    let mut out: Vec<Vec<f64>> = (0..n)
        .map(|i| s.draws.iter().map(|d| d.v()[i].as_f64()).collect())
        .collect();
    out.push(s.draws.iter().map(|d| d.zeta().as_f64()).collect());
    out.push(s.log_posterior.iter().map(|x| x.as_f64()).collect());
    out
}

/// ESS of `samples` and, when `other_chains` is non-empty, `R̂` across all chains.
pub fn diagnostics<T: Scalar>(
    samples: &PosteriorSamples<T>,
    other_chains: &[PosteriorSamples<T>],
) -> Result<Diagnostics> {
    ensure_param!(!samples.draws.is_empty(), "no draws to diagnose");
    let n = samples.draws[0].n();
    let mut names: Vec<String> = (0..n).map(|i| format!("v_{i}")).collect();
    names.push("zeta".into());
    names.push("log_posterior".into());

    let main = traces(samples);
    let ess = main.iter().map(|c| effective_sample_size(c)).collect();
    let gelman = if other_chains.is_empty() {
        None
    } else {
        ensure_param!(
            other_chains.iter().all(|c| c.draws.first().is_some_and(|d| d.n() == n)),
            "chains disagree on n or are empty"
        );
        let others: Vec<_> = other_chains.iter().map(traces).collect();
        let mut r = Vec::with_capacity(main.len());
        for (p, trace) in main.iter().enumerate() {
            let mut all: Vec<&[f64]> = vec![trace];
            all.extend(others.iter().map(|o| o[p].as_slice()));
            r.push(gelman_rubin(&all)?);
        }
        Some(r)
    };
    Ok(Diagnostics {
        names,
        ess,
        gelman_rubin: gelman,
    })
}
