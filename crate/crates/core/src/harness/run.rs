use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{GeneratorSpec, Method, Scenario};
use crate::ard::{assign_traits, compute_ard, inject_dp_noise, inject_misreporting, ArdMatrix, TraitPartition};
use crate::blsm::{
    mcmc_fit, pair_probabilities, posterior_mean, predict_links_samples, simulate_latent, vi_fit, BlsmPriors, Family,
    LatentSimConfig, LikelihoodSpec, Link,
};
use crate::error::Result;
use crate::eval::{auc, procrustes_error, rmse, MetricsReport, RmseKind};
use crate::fpr::{self, Deviance};
use crate::graphgen::{
    add_negbin_weights, all_pairs, gen_interbank, gen_scale_free, gen_small_world, Graph, InterbankConfig,
};
use crate::rng::substream;

/// Ground truth plus the (possibly corrupted) observations of one replication.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub graph: Graph,
    pub traits: TraitPartition,
    pub ard: ArdMatrix,
    /// True embedding (row-major, `p + 1` columns) for latent-model data.
    pub embedding: Option<(Vec<f64>, usize)>,
}

/// Outcome of one method on one replication.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: String,
    pub replication: usize,
    pub seed: u64,
    pub method: Method,
    pub n: usize,
    pub k: usize,
    pub rho: f64,
    pub epsilon: Option<f64>,
    pub ok: bool,
    pub auc: Option<f64>,
    pub rmse: Option<f64>,
    pub rmse_kind: RmseKind,
    pub procrustes_error: Option<f64>,
    pub runtime_seconds: Option<f64>,
    pub error: Option<String>,
}

impl RunRecord {
    pub fn report(&self) -> Option<MetricsReport> {
        Some(MetricsReport {
            method: self.method.name().into(),
            n: self.n,
            k: self.k,
            rho: self.rho,
            epsilon: self.epsilon,
            seed: self.seed,
            auc: self.auc?,
            rmse: self.rmse?,
            rmse_kind: self.rmse_kind,
            procrustes_error: self.procrustes_error,
            runtime_seconds: self.runtime_seconds?,
        })
    }
}

fn coverage(s: &Scenario) -> f64 {
    s.traits.coverage.unwrap_or(match s.generator {
        GeneratorSpec::Latent { .. } => 0.25,
        _ => 1.0 / s.traits.k as f64,
    })
}

/// Builds graph, traits and corrupted ARD for one replication seed.
pub fn generate_dataset(s: &Scenario, seed: u64) -> Result<Dataset> {
    let n = s.n;
    let (graph, traits, embedding) = match &s.generator {
        GeneratorSpec::Latent { p, mu_v, sigma_v, zeta } => {
            let cfg = LatentSimConfig {
                n,
                k: s.traits.k,
                p: *p,
                mu_v: *mu_v,
                sigma_v: *sigma_v,
                zeta: *zeta,
                coverage: coverage(s),
                link: Link::Logistic,
            };
            let ds = simulate_latent(&cfg, substream(seed, 0))?;
            let z = ds.truth.z().to_vec();
            (ds.graph, ds.traits, Some((z, p + 1)))
        }
        other => {
            let g_seed = substream(seed, 0);
            let g = match other {
                GeneratorSpec::ScaleFree { gamma, k_min } => gen_scale_free(n, *gamma, *k_min, g_seed)?,
                GeneratorSpec::SmallWorld { k, p_rewire } => gen_small_world(n, *k, *p_rewire, g_seed)?,
                GeneratorSpec::Interbank {
                    p0,
                    alpha,
                    noise_scale,
                    sizes,
                } => gen_interbank(
                    &InterbankConfig {
                        n,
                        p0: *p0,
                        alpha: *alpha,
                        noise_scale: *noise_scale,
                        sizes: sizes.clone(),
                    },
                    g_seed,
                )?,
                GeneratorSpec::Latent { .. } => unreachable!(),
            };
            let t = if s.traits.by_size {
                super::size_traits(g.sizes().expect("interbank graphs carry sizes"), s.traits.k)?
            } else {
                assign_traits(n, s.traits.k, coverage(s), s.traits.overlap, substream(seed, 1))?
            };
            (g, t, None)
        }
    };
    let graph = if s.weighted {
        add_negbin_weights(&graph, s.weights.r, s.weights.q, substream(seed, 2))?
    } else {
        graph
    };
    let mut ard = compute_ard(&graph, &traits)?;
    if s.rho > 0.0 {
        ard = inject_misreporting(&ard, s.rho, s.misreport_max_frac, substream(seed, 3))?;
    }
    if let Some(eps) = s.epsilon {
        ard = inject_dp_noise(&ard, eps, substream(seed, 4))?;
    }
    Ok(Dataset {
        graph,
        traits,
        ard,
        embedding,
    })
}

struct Estimate {
    probabilities: Vec<f64>,
    embedding: Option<Vec<f64>>,
}

fn fit_method(s: &Scenario, m: Method, data: &Dataset, seed: u64) -> Result<Estimate> {
    let (y, t) = (&data.ard, &data.traits);
    let spec = LikelihoodSpec {
        family: if s.weighted {
            Family::NegativeBinomial { r: s.weights.r }
        } else {
            Family::Poisson
        },
        link: Link::Logistic,
    };
    match m {
        Method::BlsmMcmc => {
            let priors = BlsmPriors::centered_on(y, t);
            let cfg = crate::blsm::McmcConfig { seed, ..s.mcmc.clone() };
            let samples = mcmc_fit::<f64>(y, t, &priors, &cfg, &spec)?;
            let pairs: Vec<_> = all_pairs(s.n).collect();
            let probabilities = predict_links_samples(&samples.draws, &pairs, spec.link)?;
            let mean = posterior_mean(&samples.draws)?;
            Ok(Estimate {
                probabilities,
                embedding: Some(mean.z().to_vec()),
            })
        }
        Method::BlsmVi => {
            let priors = BlsmPriors::centered_on(y, t);
            let cfg = crate::blsm::ViConfig { seed, ..s.vi.clone() };
            let fit = vi_fit::<f64>(y, t, &priors, &cfg, &spec)?;
            Ok(Estimate {
                probabilities: pair_probabilities(&fit.params, spec.link),
                embedding: Some(fit.params.z().to_vec()),
            })
        }
        Method::Fpr | Method::FprRobust => {
            let mut cfg = s.fpr.clone();
            // the robust method keeps a configured Huber threshold
            cfg.deviance = match (m, cfg.deviance) {
                (Method::FprRobust, d @ Deviance::Huber { .. }) => d,
                (Method::FprRobust, _) => Deviance::huber(),
                _ => Deviance::Poisson,
            };
            let model = fpr::fit(y, t, &cfg)?;
            Ok(Estimate {
                probabilities: model.pair_probabilities(),
                embedding: None,
            })
        }
    }
}

fn failure(s: &Scenario, r: usize, seed: u64, m: Method, kind: RmseKind, err: &crate::Error) -> RunRecord {
    RunRecord {
        scenario: s.id.clone(),
        replication: r,
        seed,
        method: m,
        n: s.n,
        k: s.traits.k,
        rho: s.rho,
        epsilon: s.epsilon,
        ok: false,
        auc: None,
        rmse: None,
        rmse_kind: kind,
        procrustes_error: None,
        runtime_seconds: None,
        error: Some(err.to_string()),
    }
}

/// Runs every method of `s` on replication `r`. Errors become failure rows.
pub fn run_replication(s: &Scenario, r: usize) -> Vec<RunRecord> {
    let seed = s.replication_seed(r);
    let kind = if s.weighted {
        RmseKind::Weight
    } else {
        RmseKind::Probability
    };
    let data = match generate_dataset(s, seed) {
        Ok(d) => d,
        Err(e) => return s.methods.iter().map(|&m| failure(s, r, seed, m, kind, &e)).collect(),
    };
    let truth: Vec<f64> = all_pairs(s.n)
        .map(|(i, j)| f64::from(data.graph.weight(i, j)))
        .collect();
    s.methods
        .iter()
        .map(|&m| {
            let start = Instant::now();
            let outcome = fit_method(s, m, &data, substream(seed, m.stream())).and_then(|est| {
                let elapsed = start.elapsed().as_secs_f64();
                let a = auc(&data.graph, &est.probabilities)?;
                let e = rmse(&truth, &est.probabilities)?;
                let pe = match (&data.embedding, &est.embedding) {
                    (Some((z, d)), Some(zh)) if zh.len() == z.len() => {
                        Some(procrustes_error(zh, z, s.n, *d)? / (s.n as f64).sqrt())
                    }
                    _ => None,
                };
                Ok((a, e, pe, elapsed))
            });
            match outcome {
                Ok((a, e, pe, elapsed)) => RunRecord {
                    scenario: s.id.clone(),
                    replication: r,
                    seed,
                    method: m,
                    n: s.n,
                    k: s.traits.k,
                    rho: s.rho,
                    epsilon: s.epsilon,
                    ok: true,
                    auc: Some(a),
                    rmse: Some(e),
                    rmse_kind: kind,
                    procrustes_error: pe,
                    runtime_seconds: Some(elapsed),
                    error: None,
                },
                Err(err) => {
                    log::warn!("{} replication {r} {m}: {err}", s.id);
                    failure(s, r, seed, m, kind, &err)
                }
            }
        })
        .collect()
}

/// All replications of `s`, ordered by replication then method.
pub fn run_scenario(s: &Scenario) -> Result<Vec<RunRecord>> {
    s.validate()?;
    let mut out = Vec::with_capacity(s.replications * s.methods.len());
    for r in 0..s.replications {
        log::info!("{}: replication {}/{}", s.id, r + 1, s.replications);
        out.extend(run_replication(s, r));
    }
    Ok(out)
}
