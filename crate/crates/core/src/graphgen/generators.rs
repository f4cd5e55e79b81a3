use rand::Rng as _;
use rand_distr::{Beta, Distribution, Gamma, LogNormal, Poisson};
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{ensure_param, Error, Result};
use crate::rng::rng_from_seed;

/// Scale-free graph via the Chung–Lu expected-degree model.
///
/// Expected degrees follow `w_i ∝ (i + 1)^(-1/(gamma-1))`, scaled so the
/// smallest expected degree equals `k_min`; each pair is linked independently
/// with probability `min(1, w_i w_j / Σw)`.
pub fn gen_scale_free(n: usize, gamma: f64, k_min: usize, seed: u64) -> Result<Graph> {
    ensure_param!(n >= 10, "scale-free generator needs n >= 10, got {n}");
    ensure_param!(gamma > 2.0 && gamma < 3.0, "gamma must lie in (2,3), got {gamma}");
    ensure_param!(k_min >= 1, "k_min must be >= 1");
    ensure_param!(
        2 * k_min <= n,
        "n={n} too small to realize minimum expected degree {k_min}"
    );

    let exponent = -1.0 / (gamma - 1.0);
    let mut w: Vec<f64> = (0..n).map(|i| ((i + 1) as f64).powf(exponent)).collect();
    let scale = k_min as f64 / w[n - 1];
    w.iter_mut().for_each(|x| *x *= scale);
    let total: f64 = w.iter().sum();

    let mut rng = rng_from_seed(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = (w[i] * w[j] / total).min(1.0);
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Ok(Graph::from_canonical(n, edges))
}

/// Watts–Strogatz small world: ring lattice with `k` nearest neighbours,
/// each lattice edge rewired with probability `p_rewire`.
pub fn gen_small_world(n: usize, k: usize, p_rewire: f64, seed: u64) -> Result<Graph> {
    ensure_param!(k.is_multiple_of(2), "k must be even, got {k}");
    ensure_param!(k >= 2 && k < n, "need 2 <= k < n, got k={k}, n={n}");
    ensure_param!(
        (0.0..=1.0).contains(&p_rewire),
        "rewiring probability must be in [0,1], got {p_rewire}"
    );

    let mut adj = vec![std::collections::BTreeSet::new(); n];
    for i in 0..n {
        for offset in 1..=k / 2 {
            let j = (i + offset) % n;
            adj[i].insert(j);
            adj[j].insert(i);
        }
    }

    let mut rng = rng_from_seed(seed);
    for offset in 1..=k / 2 {
        for i in 0..n {
            let j = (i + offset) % n;
            if rng.random::<f64>() >= p_rewire || !adj[i].contains(&j) {
                continue;
            }
            // saturated node: nothing to rewire to
            if adj[i].len() >= n - 1 {
                continue;
            }
            let target = loop {
                let t = rng.random_range(0..n);
                if t != i && !adj[i].contains(&t) {
                    break t;
                }
            };
            adj[i].remove(&j);
            adj[j].remove(&i);
            adj[i].insert(target);
            adj[target].insert(i);
        }
    }

    let mut edges: Vec<(usize, usize)> = adj
        .iter()
        .enumerate()
        .flat_map(|(i, set)| set.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
        .collect();
    edges.sort_unstable();
    Ok(Graph::from_canonical(n, edges))
}

/// Distribution of bank sizes for the interbank generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SizeDistribution {
    LogNormal {
        mu: f64,
        sigma: f64,
    },
    /// Discrete size classes drawn with the given probabilities.
    Categorical {
        values: Vec<f64>,
        probs: Vec<f64>,
    },
}

impl Default for SizeDistribution {
    fn default() -> Self {
        SizeDistribution::LogNormal { mu: 0.0, sigma: 1.0 }
    }
}

impl SizeDistribution {
    fn sample_all(&self, n: usize, rng: &mut crate::rng::Rng) -> Result<Vec<f64>> {
        match self {
            SizeDistribution::LogNormal { mu, sigma } => {
                let d = LogNormal::new(*mu, *sigma).map_err(|e| Error::Parameter(format!("lognormal sizes: {e}")))?;
                Ok((0..n).map(|_| d.sample(rng)).collect())
            }
            SizeDistribution::Categorical { values, probs } => {
                ensure_param!(
                    !values.is_empty() && values.len() == probs.len(),
                    "categorical sizes need matching non-empty values/probs"
                );
                ensure_param!(
                    values.iter().all(|&v| v > 0.0) && probs.iter().all(|&p| p >= 0.0),
                    "categorical sizes must be positive with non-negative probabilities"
                );
                let d = rand_distr::weighted::WeightedIndex::new(probs)
                    .map_err(|e| Error::Parameter(format!("categorical sizes: {e}")))?;
                Ok((0..n).map(|_| values[d.sample(rng)]).collect())
            }
        }
    }
}

/// Parameters of the size-driven interbank model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterbankConfig {
    pub n: usize,
    /// Baseline link probability.
    pub p0: f64,
    /// Weight of the size preference `log(1 + s_i) + log(1 + s_j)`.
    pub alpha: f64,
    /// Amplitude of the centred Beta(2,2) perturbation of each link probability.
    pub noise_scale: f64,
    #[serde(default)]
    pub sizes: SizeDistribution,
}

/// Interbank network where large institutions link more often.
///
/// `p_ij = p0 + alpha (log(1+s_i) + log(1+s_j)) + noise_scale (B_ij - 1/2)`
/// with `B_ij ~ Beta(2,2)`, clamped to `[0,1]`, realized by independent
/// Bernoulli draws. Sizes are stored on the returned graph.
pub fn gen_interbank(cfg: &InterbankConfig, seed: u64) -> Result<Graph> {
    let InterbankConfig {
        n,
        p0,
        alpha,
        noise_scale,
        ref sizes,
    } = *cfg;
    ensure_param!(n >= 2, "interbank generator needs n >= 2");
    ensure_param!((0.0..=1.0).contains(&p0), "p0 must be in [0,1], got {p0}");
    ensure_param!(alpha >= 0.0, "alpha must be >= 0, got {alpha}");
    ensure_param!(noise_scale >= 0.0, "noise_scale must be >= 0, got {noise_scale}");

    let mut rng = rng_from_seed(seed);
    let s = sizes.sample_all(n, &mut rng)?;
    let pref: Vec<f64> = s.iter().map(|&x| x.ln_1p()).collect();
    let beta = Beta::new(2.0, 2.0).expect("valid beta parameters");

    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let mut p = p0 + alpha * (pref[i] + pref[j]);
            if noise_scale > 0.0 {
                p += noise_scale * (beta.sample(&mut rng) - 0.5);
            }
            let p = p.clamp(0.0, 1.0);
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::from_canonical(n, edges).with_sizes(s)
}

/// Gives every edge the weight `1 + NegBin(r, q)`, where the negative
/// binomial has mean `r q / (1 - q)` (sampled as a gamma–Poisson mixture).
pub fn add_negbin_weights(g: &Graph, r: f64, q: f64, seed: u64) -> Result<Graph> {
    if g.is_weighted() {
        return Err(Error::State("graph already carries edge weights".into()));
    }
    ensure_param!(r > 0.0, "negative-binomial r must be > 0, got {r}");
    ensure_param!(q > 0.0 && q < 1.0, "negative-binomial q must be in (0,1), got {q}");

    let gamma = Gamma::new(r, q / (1.0 - q)).map_err(|e| Error::Parameter(format!("negative binomial: {e}")))?;
    let mut rng = rng_from_seed(seed);
    let weights = (0..g.edge_count())
        .map(|_| {
            let rate: f64 = gamma.sample(&mut rng);
            let extra = if rate > 0.0 {
                Poisson::new(rate).map(|d| d.sample(&mut rng)).unwrap_or(0.0)
            } else {
                0.0
            };
            1 + extra.min(u32::MAX as f64 - 1.0) as u32
        })
        .collect();
    g.clone().with_weights(weights)
}
