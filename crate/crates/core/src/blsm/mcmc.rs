use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::init::initialize;
use super::model::{check_dims, ln_half_cauchy, log_prior, BlsmParams, BlsmPriors, LikelihoodSpec, ZPrior};
use crate::ard::{ArdMatrix, TraitPartition};
use crate::error::{ensure_param, Error, Result};
use crate::rng::{rng_from_seed, Rng};
use crate::scalar::{dot, Scalar};

/// Sampler settings. Step sizes are proposal standard deviations: tangent
/// perturbation for `z`, random walk for `v`, log-scale walk for `ζ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McmcConfig {
    /// Sphere dimension `p` (positions live in `R^{p+1}`).
    pub p: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub step_z: f64,
    pub step_v: f64,
    pub step_log_zeta: f64,
    /// Tune step sizes during burn-in towards an acceptance rate of 0.3.
    pub adapt: bool,
    pub seed: u64,
    /// Nodes whose positions stay fixed at their initial values.
    pub anchors: Vec<usize>,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            p: 2,
            iterations: 5000,
            burn_in: 1000,
            thin: 10,
            step_z: 0.3,
            step_v: 0.3,
            step_log_zeta: 0.05,
            adapt: true,
            seed: 0,
            anchors: Vec::new(),
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        ensure_param!(self.p >= 1, "p must be >= 1");
        ensure_param!(
            self.burn_in < self.iterations,
            "burn-in ({}) must be below iterations ({})",
            self.burn_in,
            self.iterations
        );
        ensure_param!(self.thin >= 1, "thin must be >= 1");
        ensure_param!(
            self.step_z > 0.0 && self.step_v > 0.0 && self.step_log_zeta > 0.0,
            "step sizes must be positive"
        );
        Ok(())
    }
}

/// Post-burn-in acceptance rate of each block.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRates {
    pub z: f64,
    pub v: f64,
    pub zeta: f64,
}

/// Retained draws of one chain.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorSamples<T> {
    pub draws: Vec<BlsmParams<T>>,
    /// Log posterior (up to a constant) of each retained draw.
    pub log_posterior: Vec<T>,
    pub acceptance: AcceptanceRates,
    /// Log-likelihood after every iteration, burn-in included.
    pub log_likelihood_trace: Vec<T>,
    /// Step sizes in effect after adaptation: `[z, v, log ζ]`.
    pub final_steps: [f64; 3],
}

struct Chain<'a, T: Scalar> {
    params: BlsmParams<T>,
    y: &'a ArdMatrix,
    t: &'a TraitPartition,
    spec: LikelihoodSpec<T>,
    prob: Vec<T>,
    rates: Vec<T>,
    loglik: T,
    // scratch
    new_prob: Vec<T>,
    row_delta: Vec<T>,
    alt_prob: Vec<T>,
    alt_rates: Vec<T>,
}

impl<'a, T: Scalar> Chain<'a, T> {
    fn new(params: BlsmParams<T>, y: &'a ArdMatrix, t: &'a TraitPartition, spec: LikelihoodSpec<T>) -> Self {
        let n = params.n();
        let kk = t.k();
        let mut chain = Self {
            params,
            y,
            t,
            spec,
            prob: vec![T::zero(); n * n],
            rates: vec![T::zero(); n * kk],
            loglik: T::zero(),
            new_prob: vec![T::zero(); n],
            row_delta: vec![T::zero(); kk],
            alt_prob: vec![T::zero(); n * n],
            alt_rates: vec![T::zero(); n * kk],
        };
        chain.refresh();
        chain
    }

    fn fill(params: &BlsmParams<T>, t: &TraitPartition, spec: &LikelihoodSpec<T>, prob: &mut [T], rates: &mut [T]) {
        let n = params.n();
        let kk = t.k();
        rates.iter_mut().for_each(|r| *r = T::zero());
        for i in 0..n {
            prob[i * n + i] = T::zero();
            for j in i + 1..n {
                let p = spec.link.apply(params.eta(i, j));
                prob[i * n + j] = p;
                prob[j * n + i] = p;
                for &k in t.traits_of(j) {
                    rates[i * kk + k] += p;
                }
                for &k in t.traits_of(i) {
                    rates[j * kk + k] += p;
                }
            }
        }
    }

    fn total_loglik(&self, rates: &[T]) -> T {
        self.y
            .counts()
            .iter()
            .zip(rates)
            .map(|(&c, &lam)| self.spec.family.kernel(c, lam))
            .sum()
    }

    fn refresh(&mut self) {
        Self::fill(&self.params, self.t, &self.spec, &mut self.prob, &mut self.rates);
        self.loglik = self.total_loglik(&self.rates);
    }

    /// Log-likelihood change if node `i` took intercept `v_i` and position `z_i`.
    /// Leaves the proposal in the scratch buffers.
    fn node_delta(&mut self, i: usize, v_i: T, z_i: &[T]) -> T {
        let n = self.params.n();
        let kk = self.t.k();
        let zeta = self.params.zeta();
        self.row_delta.iter_mut().for_each(|d| *d = T::zero());
        for j in 0..n {
            if j == i {
                self.new_prob[j] = T::zero();
                continue;
            }
            let eta = v_i + self.params.v()[j] + zeta * dot(z_i, self.params.z_row(j));
            let p = self.spec.link.apply(eta);
            self.new_prob[j] = p;
            let diff = p - self.prob[i * n + j];
            for &k in self.t.traits_of(j) {
                self.row_delta[k] += diff;
            }
        }
        let family = self.spec.family;
        let mut delta = T::zero();
        for k in 0..kk {
            let old = self.rates[i * kk + k];
            let c = self.y.get(i, k);
            delta += family.kernel(c, old + self.row_delta[k]) - family.kernel(c, old);
        }
        let own = self.t.traits_of(i);
        if !own.is_empty() {
            for j in 0..n {
                if j == i {
                    continue;
                }
                let diff = self.new_prob[j] - self.prob[i * n + j];
                for &k in own {
                    let old = self.rates[j * kk + k];
                    let c = self.y.get(j, k);
                    delta += family.kernel(c, old + diff) - family.kernel(c, old);
                }
            }
        }
        delta
    }

    fn commit_node(&mut self, i: usize, v_i: T, z_i: &[T], delta: T) {
        let n = self.params.n();
        let kk = self.t.k();
        for k in 0..kk {
            self.rates[i * kk + k] += self.row_delta[k];
        }
        let own = self.t.traits_of(i);
        for j in 0..n {
            if j == i {
                continue;
            }
            let diff = self.new_prob[j] - self.prob[i * n + j];
            for &k in own {
                self.rates[j * kk + k] += diff;
            }
            self.prob[i * n + j] = self.new_prob[j];
            self.prob[j * n + i] = self.new_prob[j];
        }
        self.params.set_v(i, v_i);
        self.params.set_z_row(i, z_i);
        self.loglik += delta;
    }

    /// Log-likelihood at a different `ζ`; the proposal is left in the alt buffers.
    fn zeta_loglik(&mut self, zeta: T) -> T {
        let mut trial = self.params.clone();
        trial.set_zeta(zeta);
        Self::fill(&trial, self.t, &self.spec, &mut self.alt_prob, &mut self.alt_rates);
        self.total_loglik(&self.alt_rates)
    }

    fn commit_zeta(&mut self, zeta: T, loglik: T) {
        self.params.set_zeta(zeta);
        std::mem::swap(&mut self.prob, &mut self.alt_prob);
        std::mem::swap(&mut self.rates, &mut self.alt_rates);
        self.loglik = loglik;
    }
}

fn ln_z_prior_kernel<T: Scalar>(z: &[T], prior: &ZPrior<T>) -> T {
    match prior {
        ZPrior::UniformSphere => T::zero(),
        ZPrior::VonMisesFisher { mean, concentration } => *concentration * dot(mean, z),
    }
}

fn ln_v_prior_kernel<T: Scalar>(v: T, priors: &BlsmPriors<T>) -> T {
    let r = (v - priors.mu_v) / priors.sigma_v;
    -T::c(0.5) * r * r
}

fn tangent_proposal<T: Scalar>(z: &[T], step: f64, rng: &mut Rng) -> Vec<T> {
    let noise: Vec<T> = z
        .iter()
        .map(|_| T::c(step * Distribution::<f64>::sample(&StandardNormal, rng)))
        .collect();
    let radial = dot(&noise, z);
    let mut out: Vec<T> = z.iter().zip(&noise).map(|(&zc, &e)| zc + e - radial * zc).collect();
    let norm = crate::scalar::norm(&out);
    out.iter_mut().for_each(|x| *x /= norm);
    out
}

#[inline]
fn accept<T: Scalar>(log_ratio: T, rng: &mut Rng) -> bool {
    log_ratio >= T::zero() || T::c(rng.random::<f64>().ln()) < log_ratio
}

#[derive(Default, Clone, Copy)]
struct Counter {
    accepted: u64,
    proposed: u64,
}

impl Counter {
    fn rate(self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

const ADAPT_WINDOW: usize = 50;
const TARGET_ACCEPTANCE: f64 = 0.3;

/// Metropolis-within-Gibbs sampler started from [`initialize`].
pub fn mcmc_fit<T: Scalar>(
    y: &ArdMatrix,
    t: &TraitPartition,
    priors: &BlsmPriors<T>,
    cfg: &McmcConfig,
    spec: &LikelihoodSpec<T>,
) -> Result<PosteriorSamples<T>> {
    cfg.validate()?;
    let init = initialize(y, t, cfg.p, cfg.seed)?;
    mcmc_fit_from(init, y, t, priors, cfg, spec)
}

/// Metropolis-within-Gibbs sampler from explicit starting values.
///
/// Each iteration updates every `z_i` (tangent-space Gaussian step,
/// renormalized), every `v_i` (Gaussian random walk) and then `ζ`
/// (log-scale random walk with its Jacobian term).
pub fn mcmc_fit_from<T: Scalar>(
    init: BlsmParams<T>,
    y: &ArdMatrix,
    t: &TraitPartition,
    priors: &BlsmPriors<T>,
    cfg: &McmcConfig,
    spec: &LikelihoodSpec<T>,
) -> Result<PosteriorSamples<T>> {
    cfg.validate()?;
    spec.validate()?;
    priors.validate(init.dim())?;
    check_dims(&init, y, t)?;
    ensure_param!(
        init.dim() == cfg.p + 1,
        "initial positions have dimension {}, expected {}",
        init.dim(),
        cfg.p + 1
    );
    ensure_param!(cfg.anchors.iter().all(|&a| a < init.n()), "anchor index out of range");

    let n = init.n();
    let dim = init.dim();
    let mut rng = rng_from_seed(crate::rng::substream(cfg.seed, 1));
    let mut chain = Chain::new(init, y, t, *spec);
    let start = chain.loglik + log_prior(&chain.params, priors);
    if !start.is_finite() {
        return Err(Error::Initialization(format!(
            "non-finite log posterior {start} at the starting values"
        )));
    }

    let mut anchored = vec![false; n];
    for &a in &cfg.anchors {
        anchored[a] = true;
    }

    let mut steps = [cfg.step_z, cfg.step_v, cfg.step_log_zeta];
    let mut window = [Counter::default(); 3];
    let mut kept = [Counter::default(); 3];
    let mut draws = Vec::new();
    let mut log_posterior = Vec::new();
    let mut trace = Vec::with_capacity(cfg.iterations);

    for iter in 0..cfg.iterations {
        let after_burn_in = iter >= cfg.burn_in;

        for i in 0..n {
            if anchored[i] {
                continue;
            }
            let current = chain.params.z_row(i).to_vec();
            let proposal = tangent_proposal(&current, steps[0], &mut rng);
            let v_i = chain.params.v()[i];
            let delta = chain.node_delta(i, v_i, &proposal);
            let log_ratio =
                delta + ln_z_prior_kernel(&proposal, &priors.z_prior) - ln_z_prior_kernel(&current, &priors.z_prior);
            let ok = accept(log_ratio, &mut rng);
            if ok {
                chain.commit_node(i, v_i, &proposal, delta);
            }
            tally(&mut window[0], &mut kept[0], ok, after_burn_in);
        }

        for i in 0..n {
            let current = chain.params.v()[i];
            let proposal = current + T::c(steps[1] * Distribution::<f64>::sample(&StandardNormal, &mut rng));
            let z_i = chain.params.z_row(i).to_vec();
            let delta = chain.node_delta(i, proposal, &z_i);
            let log_ratio = delta + ln_v_prior_kernel(proposal, priors) - ln_v_prior_kernel(current, priors);
            let ok = accept(log_ratio, &mut rng);
            if ok {
                chain.commit_node(i, proposal, &z_i, delta);
            }
            tally(&mut window[1], &mut kept[1], ok, after_burn_in);
        }

        {
            let zeta = chain.params.zeta();
            let proposal = zeta * T::c((steps[2] * Distribution::<f64>::sample(&StandardNormal, &mut rng)).exp());
            let new_ll = chain.zeta_loglik(proposal);
            let log_ratio = new_ll - chain.loglik + ln_half_cauchy(proposal, priors.zeta_scale)
                - ln_half_cauchy(zeta, priors.zeta_scale)
                + proposal.ln()
                - zeta.ln();
            let ok = new_ll.is_finite() && accept(log_ratio, &mut rng);
            if ok {
                chain.commit_zeta(proposal, new_ll);
            } else if iter % ADAPT_WINDOW == 0 {
                // bound floating-point drift of the incremental rate updates
                chain.refresh();
            }
            tally(&mut window[2], &mut kept[2], ok, after_burn_in);
        }

        if cfg.adapt && !after_burn_in && (iter + 1) % ADAPT_WINDOW == 0 {
            for (b, step) in steps.iter_mut().enumerate() {
                let rate = window[b].rate();
                *step = (*step * (2.0 * (rate - TARGET_ACCEPTANCE)).exp()).clamp(1e-4, if b == 0 { 2.0 } else { 5.0 });
                window[b] = Counter::default();
            }
        }

        trace.push(chain.loglik);
        if after_burn_in && (iter - cfg.burn_in).is_multiple_of(cfg.thin) {
            log_posterior.push(chain.loglik + log_prior(&chain.params, priors));
            draws.push(chain.params.clone());
        }
    }
    debug_assert!(draws.iter().all(|d| d.dim() == dim));

    Ok(PosteriorSamples {
        draws,
        log_posterior,
        acceptance: AcceptanceRates {
            z: kept[0].rate(),
            v: kept[1].rate(),
            zeta: kept[2].rate(),
        },
        log_likelihood_trace: trace,
        final_steps: steps,
    })
}

#[inline]
fn tally(window: &mut Counter, kept: &mut Counter, ok: bool, after_burn_in: bool) {
    let target = if after_burn_in { kept } else { window };
    target.proposed += 1;
    target.accepted += u64::from(ok);
}
