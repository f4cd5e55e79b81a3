use serde::{Deserialize, Serialize};

use crate::ard::{compute_ard, TraitPartition};
use crate::error::{ensure_param, Result};
use crate::eval::{auc, risk_rank, RiskTable};
use crate::fpr::{self, Deviance, FprConfig};
use crate::graphgen::{all_pairs, gen_interbank, Graph, InterbankConfig, SizeDistribution};
use crate::rng::substream;

/// Settings of the interbank reconstruction study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InterbankStudyConfig {
    pub network: InterbankConfig,
    /// Number of size classes used as traits.
    pub classes: usize,
    pub fpr: FprConfig<f64>,
    /// Predicted probability at which a pair counts as linked.
    pub threshold: f64,
    pub w_deg: f64,
    pub w_btw: f64,
    pub seed: u64,
}

impl Default for InterbankStudyConfig {
    fn default() -> Self {
        Self {
            network: InterbankConfig {
                n: 200,
                p0: 0.002,
                alpha: 0.05,
                noise_scale: 0.02,
                // heavy tail: a few large institutions form the core
                sizes: SizeDistribution::LogNormal { mu: 0.0, sigma: 3.0 },
            },
            classes: 4,
            fpr: FprConfig {
                deviance: Deviance::huber(),
                ..FprConfig::default()
            },
            threshold: 0.5,
            w_deg: 0.5,
            w_btw: 0.5,
            seed: 0,
        }
    }
}

/// Everything the interbank study produces.
#[derive(Clone, Debug)]
pub struct InterbankResult {
    pub truth: Graph,
    pub traits: TraitPartition,
    /// Predicted link probability per unordered pair, canonical order.
    pub probabilities: Vec<f64>,
    pub reconstructed: Graph,
    pub auc: f64,
    pub risk: RiskTable,
}

/// `classes` disjoint groups of near-equal size, from smallest to largest
/// institution (ties broken by node id).
pub fn size_traits(sizes: &[f64], classes: usize) -> Result<TraitPartition> {
    let n = sizes.len();
    ensure_param!(classes >= 1 && classes <= n, "need 1 <= classes <= n, got {classes}");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sizes[a].total_cmp(&sizes[b]).then(a.cmp(&b)));
    let groups = (0..classes)
        .map(|c| {
            let mut g = order[c * n / classes..(c + 1) * n / classes].to_vec();
            g.sort_unstable();
            g
        })
        .collect();
    TraitPartition::new(n, groups)
}

/// Generates an interbank network, fits robust FPR on size-class ARD,
/// thresholds the predictions and ranks the reconstructed graph.
pub fn interbank_study(cfg: &InterbankStudyConfig) -> Result<InterbankResult> {
    ensure_param!(
        (0.0..=1.0).contains(&cfg.threshold),
        "threshold must be in [0,1], got {}",
        cfg.threshold
    );
    let truth = gen_interbank(&cfg.network, substream(cfg.seed, 0))?;
    let traits = size_traits(truth.sizes().expect("interbank graphs carry sizes"), cfg.classes)?;
    let y = compute_ard(&truth, &traits)?;
    let model = fpr::fit(&y, &traits, &cfg.fpr)?;
    let probabilities = model.pair_probabilities();
    let n = truth.n();
    let kept = all_pairs(n)
        .zip(&probabilities)
        .filter(|(_, &p)| p >= cfg.threshold)
        .map(|(e, _)| e);
    let reconstructed = Graph::new(n, kept)?;
    let auc = auc(&truth, &probabilities)?;
    let risk = risk_rank(&reconstructed, cfg.w_deg, cfg.w_btw)?;
    Ok(InterbankResult {
        truth,
        traits,
        probabilities,
        reconstructed,
        auc,
        risk,
    })
}
