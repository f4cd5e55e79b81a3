//! Scenario runner: synthetic pipelines, parameter sweeps, the interbank
//! study, timing, and the experiment driver behind the CLI.

mod benchmark;
mod experiment;
mod interbank;
mod run;
mod sweep;

pub use benchmark::{benchmark, benchmark_scenario, BenchmarkTable};
pub use experiment::{run_experiment, ExperimentConfig, Manifest, Sweep};
pub use interbank::{interbank_study, size_traits, InterbankResult, InterbankStudyConfig};
pub use run::{generate_dataset, run_replication, run_scenario, Dataset, RunRecord};
pub use sweep::{
    summarize, sweep_misreporting, sweep_privacy, sweep_sizes, MisreportingRow, PrivacyRow, SizeRow, Summary,
    EPSILON_GRID, RHO_GRID,
};

use serde::{Deserialize, Serialize};

use crate::blsm::{McmcConfig, ViConfig};
use crate::error::{ensure_param, Result};
use crate::fpr::FprConfig;
use crate::graphgen::SizeDistribution;

/// Graph model a scenario draws its ground truth from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum GeneratorSpec {
    /// The latent-surface model itself; embeddings are known, so the
    /// Procrustes error can be reported.
    Latent {
        #[serde(default = "default_p")]
        p: usize,
        #[serde(default = "default_mu_v")]
        mu_v: f64,
        #[serde(default = "default_sigma_v")]
        sigma_v: f64,
        #[serde(default = "default_zeta")]
        zeta: f64,
    },
    ScaleFree {
        #[serde(default = "default_gamma")]
        gamma: f64,
        #[serde(default = "default_k_min")]
        k_min: usize,
    },
    SmallWorld {
        #[serde(default = "default_ws_k")]
        k: usize,
        #[serde(default = "default_rewire")]
        p_rewire: f64,
    },
    Interbank {
        p0: f64,
        alpha: f64,
        #[serde(default)]
        noise_scale: f64,
        #[serde(default)]
        sizes: SizeDistribution,
    },
}

fn default_p() -> usize {
    2
}
fn default_mu_v() -> f64 {
    -1.0
}
fn default_sigma_v() -> f64 {
    0.5
}
fn default_zeta() -> f64 {
    4.0
}
fn default_gamma() -> f64 {
    2.5
}
fn default_k_min() -> usize {
    3
}
fn default_ws_k() -> usize {
    10
}
fn default_rewire() -> f64 {
    0.1
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec::Latent {
            p: default_p(),
            mu_v: default_mu_v(),
            sigma_v: default_sigma_v(),
            zeta: default_zeta(),
        }
    }
}

/// How trait groups are formed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TraitConfig {
    pub k: usize,
    /// Group size as a fraction of `n`; defaults to 1/4 for the latent
    /// model and `1/k` otherwise.
    pub coverage: Option<f64>,
    pub overlap: f64,
    /// Use size-quantile classes (interbank graphs only).
    pub by_size: bool,
}

impl Default for TraitConfig {
    fn default() -> Self {
        Self {
            k: 8,
            coverage: None,
            overlap: 0.0,
            by_size: false,
        }
    }
}

/// Negative-binomial edge weights for weighted scenarios.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeightConfig {
    pub r: f64,
    pub q: f64,
}

impl Default for WeightConfig {
    fn default() -> Self {
        Self { r: 2.0, q: 0.5 }
    }
}

/// Estimators a scenario can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    BlsmMcmc,
    BlsmVi,
    Fpr,
    FprRobust,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::BlsmMcmc, Method::BlsmVi, Method::Fpr, Method::FprRobust];

    pub fn name(self) -> &'static str {
        match self {
            Method::BlsmMcmc => "blsm-mcmc",
            Method::BlsmVi => "blsm-vi",
            Method::Fpr => "fpr",
            Method::FprRobust => "fpr-robust",
        }
    }

    fn stream(self) -> u64 {
        10 + self as u64
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| crate::Error::Parameter(format!("unknown method {s:?}")))
    }
}

/// One synthetic experiment: data pipeline, corruption, estimators and
/// replication count. All randomness derives from `seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub id: String,
    pub n: usize,
    pub generator: GeneratorSpec,
    pub traits: TraitConfig,
    /// Misreporting rate.
    pub rho: f64,
    /// Largest relative inflation of a misreported count.
    pub misreport_max_frac: f64,
    /// Laplace privacy budget; `None` leaves the counts exact.
    pub epsilon: Option<f64>,
    pub weighted: bool,
    pub weights: WeightConfig,
    pub methods: Vec<Method>,
    pub replications: usize,
    pub seed: u64,
    pub mcmc: McmcConfig,
    pub vi: ViConfig,
    /// Shared by both FPR variants; the deviance is set by the method.
    pub fpr: FprConfig<f64>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            id: "scenario".into(),
            n: 250,
            generator: GeneratorSpec::default(),
            traits: TraitConfig::default(),
            rho: 0.0,
            misreport_max_frac: 0.2,
            epsilon: None,
            weighted: false,
            weights: WeightConfig::default(),
            methods: vec![Method::Fpr, Method::FprRobust],
            replications: 5,
            seed: 0,
            mcmc: McmcConfig::default(),
            vi: ViConfig::default(),
            fpr: FprConfig::default(),
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        ensure_param!(self.replications >= 1, "replications must be >= 1");
        ensure_param!(self.n >= 2, "n must be >= 2");
        ensure_param!(!self.methods.is_empty(), "scenario lists no methods");
        ensure_param!(
            (0.0..=1.0).contains(&self.rho),
            "rho must be in [0,1], got {}",
            self.rho
        );
        ensure_param!(self.misreport_max_frac >= 0.0, "misreport_max_frac must be >= 0");
        if let Some(eps) = self.epsilon {
            ensure_param!(eps > 0.0, "epsilon must be > 0, got {eps}");
        }
        ensure_param!(self.traits.k >= 1, "need at least one trait");
        if self.traits.by_size {
            ensure_param!(
                matches!(self.generator, GeneratorSpec::Interbank { .. }),
                "size-based traits need the interbank generator"
            );
        }
        if let GeneratorSpec::Latent { p, .. } = self.generator {
            ensure_param!(
                p == self.mcmc.p || !self.methods.contains(&Method::BlsmMcmc),
                "latent dimension {p} differs from the sampler's p={}",
                self.mcmc.p
            );
            ensure_param!(
                p == self.vi.p || !self.methods.contains(&Method::BlsmVi),
                "latent dimension {p} differs from the variational p={}",
                self.vi.p
            );
        }
        self.mcmc.validate()?;
        self.vi.validate()?;
        self.fpr.validate()?;
        Ok(())
    }

    /// Seed of replication `r`.
    pub fn replication_seed(&self, r: usize) -> u64 {
        crate::rng::substream(self.seed, r as u64)
    }

    pub fn replication_seeds(&self) -> Vec<u64> {
        (0..self.replications).map(|r| self.replication_seed(r)).collect()
    }
}
