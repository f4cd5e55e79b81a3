use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use ardnet::ard::{assign_traits, compute_ard, inject_dp_noise, inject_misreporting};
use ardnet::blsm::{
    diagnostics, mcmc_fit, pair_probabilities, posterior_mean, predict_links_samples, simulate_latent, vi_fit,
    BlsmPriors, Family, LatentSimConfig, LikelihoodSpec, Link, McmcConfig, ViConfig,
};
use ardnet::eval::{auc, procrustes_error, risk_rank, rmse, MetricsReport, RmseKind};
use ardnet::fpr::{
    self, cross_validate, federated_fit, Deviance, FederatedConfig, FprConfig, Penalty, PenaltyKind, StepRule,
};
use ardnet::graphgen::{
    add_negbin_weights, all_pairs, gen_interbank, gen_scale_free, gen_small_world, InterbankConfig, SizeDistribution,
};
use ardnet::harness::{benchmark, benchmark_scenario, run_experiment, ExperimentConfig, Method};
use ardnet::io;

#[derive(Parser)]
#[command(
    name = "ardnet",
    version,
    about = "Network reconstruction from aggregated relational data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    ScaleFree,
    SmallWorld,
    Interbank,
    /// Latent-surface model; can also write traits and the true embedding.
    Latent,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Mcmc,
    Vi,
}

#[derive(Clone, Copy, ValueEnum)]
enum PenaltyArg {
    L1,
    L2,
    Scad,
    Mcp,
}

#[derive(Clone, Copy, ValueEnum)]
enum DevianceArg {
    Poisson,
    Huber,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic graph as an edge-list CSV.
    Generate {
        #[arg(long, value_enum)]
        model: Model,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Scale-free degree exponent.
        #[arg(long, default_value_t = 2.5)]
        gamma: f64,
        /// Scale-free minimum expected degree.
        #[arg(long, default_value_t = 3)]
        k_min: usize,
        /// Small-world lattice degree.
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 0.1)]
        p_rewire: f64,
        #[arg(long, default_value_t = 0.002)]
        p0: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 0.02)]
        noise: f64,
        /// Log-normal sigma of interbank sizes.
        #[arg(long, default_value_t = 1.0)]
        size_sigma: f64,
        /// Write node sizes (interbank only).
        #[arg(long)]
        sizes_out: Option<PathBuf>,
        /// Add negative-binomial weights with this dispersion `r`.
        #[arg(long)]
        weight_r: Option<f64>,
        #[arg(long, default_value_t = 0.5)]
        weight_q: f64,
        /// Write random trait groups (or the latent model's own groups).
        #[arg(long)]
        traits_out: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        traits_k: usize,
        #[arg(long)]
        coverage: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        overlap: f64,
        /// Write the true embedding (latent model only).
        #[arg(long)]
        embedding_out: Option<PathBuf>,
    },
    /// Aggregate a graph into ARD counts, optionally corrupted.
    Ard {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        traits: PathBuf,
        /// Node count, when trailing nodes have neither edges nor traits.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        misreport: Option<f64>,
        #[arg(long, default_value_t = 0.2)]
        max_frac: f64,
        #[arg(long)]
        dp: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the latent-surface model by MCMC or variational inference.
    FitBlsm {
        #[arg(long)]
        ard: PathBuf,
        #[arg(long)]
        traits: PathBuf,
        #[arg(long, value_enum, default_value = "mcmc")]
        mode: Mode,
        #[arg(long, default_value_t = 2)]
        p: usize,
        #[arg(long, default_value_t = 5000)]
        iters: usize,
        #[arg(long, default_value_t = 1000)]
        burnin: usize,
        #[arg(long, default_value_t = 10)]
        thin: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Negative-binomial dispersion for weighted counts.
        #[arg(long)]
        negbin_r: Option<f64>,
        /// Posterior draws (MCMC) or the point estimate (VI).
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        diagnostics: Option<PathBuf>,
        /// Link probabilities for every pair.
        #[arg(long)]
        pred: Option<PathBuf>,
        /// Posterior-mean (or variational) embedding.
        #[arg(long)]
        embedding: Option<PathBuf>,
    },
    /// Fit the penalized regression, optionally by cross-validation or federated.
    FitFpr {
        #[arg(long)]
        ard: PathBuf,
        #[arg(long)]
        traits: PathBuf,
        #[arg(long, value_enum, default_value = "l1")]
        penalty: PenaltyArg,
        #[arg(long, conflicts_with = "cv")]
        lambda: Option<f64>,
        /// Choose lambda by K-fold cross-validation.
        #[arg(long)]
        cv: Option<usize>,
        /// Comma-separated lambda grid for cross-validation.
        #[arg(long, value_delimiter = ',', default_value = "10,3,1,0.3,0.1")]
        grid: Vec<f64>,
        #[arg(long, value_enum, default_value = "poisson")]
        deviance: DevianceArg,
        /// Huber threshold in MAD units.
        #[arg(long, default_value_t = ardnet::fpr::DEFAULT_HUBER_DELTA)]
        huber_delta: f64,
        /// Simulate this many parties holding contiguous row blocks.
        #[arg(long)]
        federated: Option<usize>,
        /// Privacy budget of the federated fit (omit for no noise).
        #[arg(long, requires = "federated")]
        eps: Option<f64>,
        #[arg(long, default_value_t = 200)]
        rounds: usize,
        /// Fixed step of the federated fit.
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long, default_value_t = 2000)]
        max_iter: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        pred: Option<PathBuf>,
    },
    /// Score predicted link probabilities against a true graph.
    Evaluate {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, requires = "embedding_est")]
        embedding_true: Option<PathBuf>,
        #[arg(long, requires = "embedding_true")]
        embedding_est: Option<PathBuf>,
        /// ARD file whose metadata (rho, epsilon, seed, K) labels the report.
        #[arg(long)]
        ard: Option<PathBuf>,
        #[arg(long, default_value = "unknown")]
        method: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank nodes by a degree/betweenness composite score.
    RiskRank {
        #[arg(long)]
        graph: PathBuf,
        /// Node count, when trailing nodes are isolated.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0.5)]
        w_deg: f64,
        #[arg(long, default_value_t = 0.5)]
        w_btw: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the sweeps of a scenario config file.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time methods across network sizes.
    Benchmark {
        #[arg(long, value_delimiter = ',', default_value = "250,500,1000")]
        sizes: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "fpr,blsm-mcmc")]
        methods: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Generate {
            model,
            n,
            seed,
            out,
            gamma,
            k_min,
            k,
            p_rewire,
            p0,
            alpha,
            noise,
            size_sigma,
            sizes_out,
            weight_r,
            weight_q,
            traits_out,
            traits_k,
            coverage,
            overlap,
            embedding_out,
        } => {
            let mut latent_traits = None;
            let g = match model {
                Model::ScaleFree => gen_scale_free(n, gamma, k_min, seed)?,
                Model::SmallWorld => gen_small_world(n, k, p_rewire, seed)?,
                Model::Interbank => gen_interbank(
                    &InterbankConfig {
                        n,
                        p0,
                        alpha,
                        noise_scale: noise,
                        sizes: SizeDistribution::LogNormal {
                            mu: 0.0,
                            sigma: size_sigma,
                        },
                    },
                    seed,
                )?,
                Model::Latent => {
                    let cfg = LatentSimConfig {
                        n,
                        k: traits_k,
                        coverage: coverage.unwrap_or(0.25),
                        ..LatentSimConfig::default()
                    };
                    let ds = simulate_latent(&cfg, seed)?;
                    if let Some(path) = &embedding_out {
                        io::write_embedding(path, ds.truth.z(), ds.truth.dim())?;
                    }
                    latent_traits = Some(ds.traits);
                    ds.graph
                }
            };
            if embedding_out.is_some() && latent_traits.is_none() {
                bail!("--embedding-out needs --model latent");
            }
            let g = match weight_r {
                Some(r) => add_negbin_weights(&g, r, weight_q, ardnet::rng::substream(seed, 2))?,
                None => g,
            };
            io::write_edges(&out, &g)?;
            if let Some(path) = sizes_out {
                let sizes = g.sizes().context("--sizes-out needs --model interbank")?;
                io::write_sizes(path, sizes)?;
            }
            if let Some(path) = traits_out {
                let t = match latent_traits {
                    Some(t) => t,
                    None => assign_traits(
                        n,
                        traits_k,
                        coverage.unwrap_or(1.0 / traits_k as f64),
                        overlap,
                        ardnet::rng::substream(seed, 1),
                    )?,
                };
                io::write_traits(path, &t)?;
            }
            log::info!("wrote {} nodes, {} edges to {}", g.n(), g.edge_count(), out.display());
        }
        Command::Ard {
            graph,
            traits,
            n,
            misreport,
            max_frac,
            dp,
            seed,
            out,
        } => {
            let t = io::read_traits(&traits, None, None)?;
            let n = n.unwrap_or(t.n()).max(io::read_edges(&graph, None)?.n());
            let t = io::read_traits(&traits, Some(n), Some(t.k()))?;
            let g = io::read_edges(&graph, Some(n))?;
            let mut y = compute_ard(&g, &t)?;
            if let Some(rho) = misreport {
                y = inject_misreporting(&y, rho, max_frac, ardnet::rng::substream(seed, 3))?;
            }
            if let Some(eps) = dp {
                y = inject_dp_noise(&y, eps, ardnet::rng::substream(seed, 4))?;
            }
            io::write_ard(&out, &y)?;
            log::info!("wrote {}x{} ARD to {}", y.n(), y.k(), out.display());
        }
        Command::FitBlsm {
            ard,
            traits,
            mode,
            p,
            iters,
            burnin,
            thin,
            seed,
            negbin_r,
            out,
            diagnostics: diag_out,
            pred,
            embedding,
        } => {
            let y = io::read_ard(&ard)?;
            let t = io::read_traits(&traits, Some(y.n()), Some(y.k()))?;
            let priors = BlsmPriors::centered_on(&y, &t);
            let spec = LikelihoodSpec {
                family: negbin_r.map_or(Family::Poisson, |r| Family::NegativeBinomial { r }),
                link: Link::Logistic,
            };
            let pairs: Vec<_> = all_pairs(y.n()).collect();
            let start = Instant::now();
            let (probs, point) = match mode {
                Mode::Mcmc => {
                    let cfg = McmcConfig {
                        p,
                        iterations: iters,
                        burn_in: burnin,
                        thin,
                        seed,
                        ..McmcConfig::default()
                    };
                    let samples = mcmc_fit::<f64>(&y, &t, &priors, &cfg, &spec)?;
                    log::info!("acceptance rates {:?}", samples.acceptance);
                    io::write_posterior(&out, &samples.draws)?;
                    if let Some(path) = diag_out {
                        io::write_diagnostics(path, &diagnostics(&samples, &[])?)?;
                    }
                    let probs = predict_links_samples(&samples.draws, &pairs, spec.link)?;
                    (probs, posterior_mean(&samples.draws)?)
                }
                Mode::Vi => {
                    let cfg = ViConfig {
                        p,
                        iterations: iters,
                        seed,
                        ..ViConfig::default()
                    };
                    let fit = vi_fit::<f64>(&y, &t, &priors, &cfg, &spec)?;
                    if !fit.converged {
                        log::warn!("variational fit stopped at the iteration cap");
                    }
                    io::write_posterior(&out, std::slice::from_ref(&fit.params))?;
                    if diag_out.is_some() {
                        log::warn!("--diagnostics applies to MCMC only; skipped");
                    }
                    (pair_probabilities(&fit.params, spec.link), fit.params)
                }
            };
            log::info!("fitted in {:.2}s", start.elapsed().as_secs_f64());
            if let Some(path) = pred {
                io::write_predictions(path, &pairs, &probs)?;
            }
            if let Some(path) = embedding {
                io::write_embedding(path, point.z(), point.dim())?;
            }
        }
        Command::FitFpr {
            ard,
            traits,
            penalty,
            lambda,
            cv,
            grid,
            deviance,
            huber_delta,
            federated,
            eps,
            rounds,
            step,
            max_iter,
            seed,
            out,
            pred,
        } => {
            let y = io::read_ard(&ard)?;
            let t = io::read_traits(&traits, Some(y.n()), Some(y.k()))?;
            let kind = match penalty {
                PenaltyArg::L1 => PenaltyKind::L1,
                PenaltyArg::L2 => PenaltyKind::L2,
                PenaltyArg::Scad => PenaltyKind::scad(),
                PenaltyArg::Mcp => PenaltyKind::mcp(),
            };
            let mut cfg = FprConfig::<f64> {
                deviance: match deviance {
                    DevianceArg::Poisson => Deviance::Poisson,
                    DevianceArg::Huber => Deviance::Huber { delta: huber_delta },
                },
                penalty: Penalty::new(kind, lambda.unwrap_or(1.0)),
                max_iter,
                ..FprConfig::default()
            };
            if let Some(folds) = cv {
                let res = cross_validate(&y, &t, &grid, folds, &cfg, seed)?;
                for p in &res.curve {
                    log::info!(
                        "lambda {:<8} deviance {:.4} (sd {:.4})",
                        p.lambda,
                        p.mean_deviance,
                        p.sd_deviance
                    );
                }
                log::info!("selected lambda {}", res.best_lambda);
                cfg.penalty.lambda = res.best_lambda;
            }
            let start = Instant::now();
            let model = match federated {
                Some(parties) => {
                    if parties == 0 || parties > y.n() {
                        bail!("--federated needs between 1 and {} parties", y.n());
                    }
                    let shards: Vec<Vec<usize>> = (0..parties)
                        .map(|p| (p * y.n() / parties..(p + 1) * y.n() / parties).collect())
                        .collect();
                    cfg.step = StepRule::Fixed { step };
                    let fed = FederatedConfig {
                        rounds,
                        epsilon: eps,
                        seed,
                        ..FederatedConfig::default()
                    };
                    federated_fit(&y, &shards, &t, &cfg, &fed)?
                }
                None => fpr::fit(&y, &t, &cfg)?,
            };
            log::info!(
                "fitted in {:.2}s, {} iterations, converged: {}",
                start.elapsed().as_secs_f64(),
                model.iterations,
                model.converged
            );
            io::write_fpr_model(&out, &model)?;
            if let Some(path) = pred {
                let pairs: Vec<_> = all_pairs(y.n()).collect();
                io::write_predictions(path, &pairs, &model.pair_probabilities())?;
            }
        }
        Command::Evaluate {
            truth,
            pred,
            embedding_true,
            embedding_est,
            ard,
            method,
            out,
        } => {
            // the prediction file covers every pair, so it fixes n even
            // when the highest-numbered nodes are isolated
            let rows = std::fs::read_to_string(&pred)
                .with_context(|| format!("reading {}", pred.display()))?
                .lines()
                .skip(1)
                .filter(|l| !l.trim().is_empty())
                .count();
            let n = (1..).find(|&m: &usize| m * (m - 1) / 2 >= rows).unwrap_or(1).max(2);
            let g0 = io::read_edges(&truth, Some(n))?;
            let probs = io::read_predictions(&pred, n)?;
            let kind = if g0.is_weighted() {
                RmseKind::Weight
            } else {
                RmseKind::Probability
            };
            let target: Vec<f64> = all_pairs(n).map(|(i, j)| f64::from(g0.weight(i, j))).collect();
            let procrustes = match (embedding_true, embedding_est) {
                (Some(a), Some(b)) => {
                    let (z, d) = io::read_embedding(a)?;
                    let (zh, dh) = io::read_embedding(b)?;
                    if d != dh || z.len() != zh.len() {
                        bail!("embeddings differ in shape");
                    }
                    Some(procrustes_error(&zh, &z, z.len() / d, d)? / ((z.len() / d) as f64).sqrt())
                }
                _ => None,
            };
            let meta = ard.map(io::read_ard).transpose()?;
            let report = MetricsReport {
                method,
                n,
                k: meta.as_ref().map_or(0, |y| y.k()),
                rho: meta.as_ref().and_then(|y| y.meta().rho).unwrap_or(0.0),
                epsilon: meta.as_ref().and_then(|y| y.meta().epsilon),
                seed: meta.as_ref().and_then(|y| y.meta().seed).unwrap_or(0),
                auc: auc(&g0, &probs)?,
                rmse: rmse(&target, &probs)?,
                rmse_kind: kind,
                procrustes_error: procrustes,
                runtime_seconds: 0.0,
            };
            io::write_reports(&out, std::slice::from_ref(&report))?;
            println!("auc {:.4} rmse {:.4}", report.auc, report.rmse);
        }
        Command::RiskRank {
            graph,
            n,
            w_deg,
            w_btw,
            out,
        } => {
            let g = io::read_edges(&graph, n)?;
            io::write_risk_table(&out, &risk_rank(&g, w_deg, w_btw)?)?;
        }
        Command::Experiment { config, out } => {
            let text = std::fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let cfg = ExperimentConfig::from_toml(&text)?;
            let manifest = run_experiment(&cfg, &text, &out)?;
            for f in &manifest.outputs {
                println!("{}", out.join(f).display());
            }
        }
        Command::Benchmark {
            sizes,
            methods,
            seed,
            out,
        } => {
            let methods = methods
                .iter()
                .map(|m| m.parse())
                .collect::<ardnet::Result<Vec<Method>>>()?;
            let table = benchmark(&benchmark_scenario(seed), &sizes, &methods)?;
            table.write_csv(&out)?;
            for (m, row) in table.methods.iter().zip(&table.seconds) {
                println!(
                    "{m:<12} {}",
                    row.iter().map(|s| format!("{s:>9.2}")).collect::<String>()
                );
            }
        }
    }
    Ok(())
}
