use std::fmt;

use rand::Rng as _;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::init::initialize;
use super::model::{
    check_dims, ln_bessel_i, ln_vmf_normalizer, log_prior, loglik_and_gradient, BlsmParams, BlsmPriors, LikelihoodSpec,
    ZPrior,
};
use crate::ard::{ArdMatrix, TraitPartition};
use crate::error::{ensure_param, Error, Result};
use crate::rng::{rng_from_seed, substream, Rng};
use crate::scalar::{dot, Scalar};

/// Window of the moving average used for the convergence check.
pub const ELBO_WINDOW: usize = 50;

/// Settings of the variational fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ViConfig {
    pub p: usize,
    /// Maximum number of gradient steps.
    pub iterations: usize,
    /// Monte Carlo samples per ELBO estimate.
    pub samples: usize,
    /// Adam step size.
    pub learning_rate: f64,
    /// Fixed concentration of every `q(z_i)`.
    pub kappa: f64,
    /// Stop once the smoothed ELBO changes by less than this fraction over one window.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for ViConfig {
    fn default() -> Self {
        Self {
            p: 2,
            iterations: 1500,
            samples: 4,
            learning_rate: 0.03,
            kappa: 200.0,
            tolerance: 1e-5,
            seed: 0,
        }
    }
}

impl ViConfig {
    pub fn validate(&self) -> Result<()> {
        ensure_param!(self.p >= 1, "p must be >= 1");
        ensure_param!(self.iterations >= 1, "iterations must be >= 1");
        ensure_param!(self.samples >= 1, "samples must be >= 1");
        ensure_param!(self.learning_rate > 0.0, "learning rate must be > 0");
        ensure_param!(self.kappa > 0.0, "kappa must be > 0");
        ensure_param!(self.tolerance >= 0.0, "tolerance must be >= 0");
        Ok(())
    }
}

/// Result of [`vi_fit`]: variational means plus the ELBO trace.
#[derive(Clone, Debug, PartialEq)]
pub struct ViFit<T> {
    pub params: BlsmParams<T>,
    pub elbo_trace: Vec<T>,
    pub converged: bool,
}

/// A failed fit, keeping the last state with a finite ELBO.
#[derive(Debug)]
pub struct ViFailure<T> {
    pub error: Error,
    pub last_valid: Option<BlsmParams<T>>,
    pub elbo_trace: Vec<T>,
}

impl<T: fmt::Debug> fmt::Display for ViFailure<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.error)
    }
}

impl<T: fmt::Debug> std::error::Error for ViFailure<T> {}

impl<T> From<ViFailure<T>> for Error {
    fn from(f: ViFailure<T>) -> Self {
        f.error
    }
}

/// Moving average with window `w` (shorter at the start).
pub fn smoothed<T: Scalar>(trace: &[T], w: usize) -> Vec<T> {
    let w = w.max(1);
    let mut out = Vec::with_capacity(trace.len());
    let mut acc = T::zero();
    for (i, &x) in trace.iter().enumerate() {
        acc += x;
        if i >= w {
            acc -= trace[i - w];
        }
        out.push(acc / T::from_usize_lossy((i + 1).min(w)));
    }
    out
}

/// Draw from the von Mises–Fisher distribution (Wood's rejection sampler).
pub(crate) fn sample_vmf(mean: &[f64], kappa: f64, rng: &mut Rng) -> Vec<f64> {
    let d = mean.len();
    let dm1 = (d - 1) as f64;
    let b = (-2.0 * kappa + (4.0 * kappa * kappa + dm1 * dm1).sqrt()) / dm1;
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + dm1 * (1.0 - x0 * x0).ln();
    let beta = Beta::new(dm1 / 2.0, dm1 / 2.0).expect("valid beta shape");
    let w = loop {
        let zb: f64 = beta.sample(rng);
        let w = (1.0 - (1.0 + b) * zb) / (1.0 - (1.0 - b) * zb);
        let u: f64 = rng.random();
        if kappa * w + dm1 * (1.0 - x0 * w).ln() - c >= u.ln() {
            break w;
        }
    };
    // uniform direction orthogonal to the mean
    let tangent = loop {
        let g: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let proj: f64 = g.iter().zip(mean).map(|(a, b)| a * b).sum();
        let t: Vec<f64> = g.iter().zip(mean).map(|(a, m)| a - proj * m).collect();
        let norm = t.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            break t.into_iter().map(|x| x / norm).collect::<Vec<_>>();
        }
    };
    let s = (1.0 - w * w).max(0.0).sqrt();
    mean.iter().zip(&tangent).map(|(m, t)| w * m + s * t).collect()
}

/// Mean resultant length `A_d(κ) = I_{d/2}(κ) / I_{d/2-1}(κ)`.
fn mean_resultant(dim: usize, kappa: f64) -> f64 {
    let nu = dim as f64 / 2.0;
    (ln_bessel_i(nu, kappa) - ln_bessel_i(nu - 1.0, kappa)).exp()
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    lr: f64,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;

    fn new(len: usize, lr: f64) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            lr,
        }
    }

    /// Ascent step on `x` given gradient `g`.
    fn step(&mut self, x: &mut [f64], g: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for i in 0..x.len() {
            self.m[i] = Self::B1 * self.m[i] + (1.0 - Self::B1) * g[i];
            self.v[i] = Self::B2 * self.v[i] + (1.0 - Self::B2) * g[i] * g[i];
            x[i] += self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + 1e-8);
        }
    }
}

/// Variational state laid out as one flat vector:
/// `[m_v (n), ln s_v (n), μ_z (n·dim), a, ln b]`.
struct Layout {
    n: usize,
    dim: usize,
}

impl Layout {
    fn len(&self) -> usize {
        2 * self.n + self.n * self.dim + 2
    }
    fn z0(&self) -> usize {
        2 * self.n
    }
    fn zeta0(&self) -> usize {
        2 * self.n + self.n * self.dim
    }

    fn point<T: Scalar>(&self, x: &[f64]) -> Result<BlsmParams<T>> {
        let v = x[..self.n].iter().map(|&m| T::c(m)).collect();
        let z = x[self.z0()..self.zeta0()].iter().map(|&m| T::c(m)).collect();
        let a = x[self.zeta0()];
        let b = x[self.zeta0() + 1].exp();
        BlsmParams::from_unnormalized(v, z, self.dim, T::c((a + b * b / 2.0).exp()))
    }
}

/// Variational fit started from [`initialize`].
pub fn vi_fit<T: Scalar>(
    y: &ArdMatrix,
    t: &TraitPartition,
    priors: &BlsmPriors<T>,
    cfg: &ViConfig,
    spec: &LikelihoodSpec<T>,
) -> std::result::Result<ViFit<T>, ViFailure<T>> {
    let fail = |error| ViFailure {
        error,
        last_valid: None,
        elbo_trace: Vec::new(),
    };
    cfg.validate().map_err(fail)?;
    let init = initialize(y, t, cfg.p, cfg.seed).map_err(fail)?;
    vi_fit_from(init, y, t, priors, cfg, spec)
}

/// Mean-field variational fit: Gaussian `q(v_i)`, von Mises–Fisher `q(z_i)`
/// with fixed concentration, log-normal `q(ζ)`.
///
/// The ELBO is estimated from `samples` reparameterized draws per step and
/// maximized with Adam; vMF means are projected back onto the sphere after
/// every step. The position gradient is the tangent projection of the
/// likelihood gradient at the sampled positions.
pub fn vi_fit_from<T: Scalar>(
    init: BlsmParams<T>,
    y: &ArdMatrix,
    t: &TraitPartition,
    priors: &BlsmPriors<T>,
    cfg: &ViConfig,
    spec: &LikelihoodSpec<T>,
) -> std::result::Result<ViFit<T>, ViFailure<T>> {
    let fail = |error| ViFailure {
        error,
        last_valid: None,
        elbo_trace: Vec::new(),
    };
    cfg.validate().map_err(fail)?;
    spec.validate().map_err(fail)?;
    priors.validate(init.dim()).map_err(fail)?;
    check_dims(&init, y, t).map_err(fail)?;
    if init.dim() != cfg.p + 1 {
        return Err(fail(Error::Parameter(format!(
            "initial positions have dimension {}, expected {}",
            init.dim(),
            cfg.p + 1
        ))));
    }

    let (n, dim) = (init.n(), init.dim());
    let layout = Layout { n, dim };
    let mut x = vec![0.0; layout.len()];
    for i in 0..n {
        x[i] = init.v()[i].as_f64();
        x[n + i] = 0.1f64.ln();
    }
    for (dst, src) in x[layout.z0()..layout.zeta0()].iter_mut().zip(init.z()) {
        *dst = src.as_f64();
    }
    x[layout.zeta0()] = init.zeta().as_f64().ln();
    x[layout.zeta0() + 1] = 0.1f64.ln();

    let mu_v = priors.mu_v.as_f64();
    let var_v = priors.sigma_v.as_f64().powi(2);
    let zeta_scale = priors.zeta_scale.as_f64();
    let kappa = cfg.kappa;
    let resultant = mean_resultant(dim, kappa);
    let vmf_entropy = -ln_vmf_normalizer(dim, kappa) - kappa * resultant;
    let half_ln_2pi_e = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
    let z_prior_pull: Option<(Vec<f64>, f64)> = match &priors.z_prior {
        ZPrior::UniformSphere => None,
        ZPrior::VonMisesFisher { mean, concentration } => Some((
            mean.iter().map(|m| m.as_f64()).collect(),
            concentration.as_f64() * resultant,
        )),
    };

    let mut rng = rng_from_seed(substream(cfg.seed, 2));
    let mut adam = Adam::new(layout.len(), cfg.learning_rate);
    let mut trace: Vec<T> = Vec::with_capacity(cfg.iterations);
    let mut last_valid = init.clone();
    let mut grad = vec![0.0; layout.len()];
    let mut converged = false;
    let inv_s = 1.0 / cfg.samples as f64;

    for iter in 0..cfg.iterations {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut elbo = 0.0;
        let (a, b) = (x[layout.zeta0()], x[layout.zeta0() + 1].exp());
        for _ in 0..cfg.samples {
            let eps_v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let v: Vec<T> = (0..n).map(|i| T::c(x[i] + x[n + i].exp() * eps_v[i])).collect();
            let mut z = Vec::with_capacity(n * dim);
            for i in 0..n {
                let mean = &x[layout.z0() + i * dim..layout.z0() + (i + 1) * dim];
                z.extend(sample_vmf(mean, kappa, &mut rng).into_iter().map(T::c));
            }
            let eps_zeta: f64 = StandardNormal.sample(&mut rng);
            let zeta = (a + b * eps_zeta).exp();
            let draw = match BlsmParams::from_unnormalized(v, z, dim, T::c(zeta)) {
                Ok(d) => d,
                Err(e) => {
                    return Err(ViFailure {
                        error: e,
                        last_valid: Some(last_valid),
                        elbo_trace: trace,
                    })
                }
            };
            let (ll, g) = loglik_and_gradient(&draw, y, t, spec);
            elbo += inv_s * (ll + log_prior(&draw, priors)).as_f64();

            for i in 0..n {
                let gv = g.v[i].as_f64() * inv_s;
                grad[i] += gv;
                grad[n + i] += gv * eps_v[i] * x[n + i].exp();
            }
            for (dst, src) in grad[layout.z0()..layout.zeta0()].iter_mut().zip(&g.z) {
                *dst += src.as_f64() * inv_s;
            }
            let gzeta = g.zeta.as_f64() - 2.0 * zeta / (zeta_scale * zeta_scale + zeta * zeta);
            grad[layout.zeta0()] += gzeta * zeta * inv_s;
            grad[layout.zeta0() + 1] += gzeta * zeta * eps_zeta * b * inv_s;
        }
        // entropy terms (the vMF entropy is constant at fixed κ)
        elbo += (0..n).map(|i| x[n + i]).sum::<f64>() + n as f64 * half_ln_2pi_e;
        elbo += a + b.ln() + half_ln_2pi_e;
        elbo += n as f64 * vmf_entropy;

        if !elbo.is_finite() {
            return Err(ViFailure {
                error: Error::Optimization {
                    iterations: iter,
                    message: "ELBO became non-finite".into(),
                },
                last_valid: Some(last_valid),
                elbo_trace: trace,
            });
        }
        trace.push(T::c(elbo));
        if let Ok(p) = layout.point::<T>(&x) {
            last_valid = p;
        }

        // exact expectations of the Gaussian prior and entropy on v
        for i in 0..n {
            let s = x[n + i].exp();
            grad[i] -= (x[i] - mu_v) / var_v;
            grad[n + i] += 1.0 - s * s / var_v;
        }
        grad[layout.zeta0() + 1] += 1.0;
        for i in 0..n {
            let off = layout.z0() + i * dim;
            if let Some((mean, weight)) = &z_prior_pull {
                for d in 0..dim {
                    grad[off + d] += weight * mean[d];
                }
            }
            let mu = &x[off..off + dim];
            let radial = dot(&grad[off..off + dim], mu);
            for d in 0..dim {
                grad[off + d] -= radial * x[off + d];
            }
        }

        adam.step(&mut x, &grad);
        for i in 0..n {
            let off = layout.z0() + i * dim;
            let norm = x[off..off + dim].iter().map(|c| c * c).sum::<f64>().sqrt();
            if norm > 0.0 {
                x[off..off + dim].iter_mut().for_each(|c| *c /= norm);
            }
        }
        // keep the variational scales in a sane range
        for i in 0..n {
            x[n + i] = x[n + i].clamp(-12.0, 3.0);
        }
        x[layout.zeta0() + 1] = x[layout.zeta0() + 1].clamp(-12.0, 2.0);

        if trace.len() >= 2 * ELBO_WINDOW && cfg.tolerance > 0.0 {
            let len = trace.len();
            let now = mean_f64(&trace[len - ELBO_WINDOW..]);
            let before = mean_f64(&trace[len - 2 * ELBO_WINDOW..len - ELBO_WINDOW]);
            if (now - before).abs() <= cfg.tolerance * now.abs().max(1.0) {
                converged = true;
                break;
            }
        }
    }

    let params = layout.point::<T>(&x).map_err(|error| ViFailure {
        error,
        last_valid: Some(last_valid.clone()),
        elbo_trace: trace.clone(),
    })?;
    Ok(ViFit {
        params,
        elbo_trace: trace,
        converged,
    })
}

fn mean_f64<T: Scalar>(xs: &[T]) -> f64 {
    xs.iter().map(|x| x.as_f64()).sum::<f64>() / xs.len() as f64
}
