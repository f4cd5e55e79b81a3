use serde::{Deserialize, Serialize};

use super::deviance::{mad_scale, Deviance};
use super::features::FeatureMap;
use super::penalty::Penalty;
use crate::ard::{ArdMatrix, TraitPartition};
use crate::error::{ensure_param, Error, Result};
use crate::scalar::{logistic, logit, Scalar};

/// How the proximal step size is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StepRule<T> {
    /// Start at `initial` and multiply by `shrink` until the quadratic upper
    /// bound holds; the accepted step carries over to the next iteration.
    Backtracking {
        initial: T,
        shrink: T,
    },
    Fixed {
        step: T,
    },
}

impl<T: Scalar> Default for StepRule<T> {
    fn default() -> Self {
        StepRule::Backtracking {
            initial: T::one(),
            shrink: T::c(0.5),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FprConfig<T> {
    pub deviance: Deviance<T>,
    pub penalty: Penalty<T>,
    pub max_iter: usize,
    /// Stop once no coordinate moves by more than this in one step.
    pub tol: T,
    pub step: StepRule<T>,
    /// Monotone FISTA momentum.
    pub accelerate: bool,
    /// Scale each coordinate's step by the inverse of a Gauss–Newton
    /// curvature estimate taken at the starting point.
    pub precondition: bool,
}

impl<T: Scalar> Default for FprConfig<T> {
    fn default() -> Self {
        Self {
            deviance: Deviance::Poisson,
            penalty: Penalty::l1(T::one()),
            max_iter: 2000,
            tol: T::c(1e-6),
            step: StepRule::default(),
            accelerate: true,
            precondition: true,
        }
    }
}

impl<T: Scalar> FprConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.deviance.validate()?;
        self.penalty.validate()?;
        ensure_param!(self.max_iter >= 1, "max_iter must be >= 1");
        ensure_param!(self.tol >= T::zero(), "tol must be >= 0");
        match self.step {
            StepRule::Backtracking { initial, shrink } => {
                ensure_param!(initial > T::zero(), "initial step must be > 0");
                ensure_param!(shrink > T::zero() && shrink < T::one(), "shrink must lie in (0, 1)");
            }
            StepRule::Fixed { step } => ensure_param!(step > T::zero(), "step must be > 0"),
        }
        Ok(())
    }
}

/// A fitted penalized regression.
#[derive(Clone, Debug, PartialEq)]
pub struct FprModel<T> {
    pub beta: Vec<T>,
    pub features: FeatureMap,
    pub penalty: Penalty<T>,
    pub deviance: Deviance<T>,
    /// Objective after every iteration.
    pub objective_trace: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Scalar> FprModel<T> {
    /// A model with given coefficients and no fitting history.
    pub fn from_beta(beta: Vec<T>, features: FeatureMap, penalty: Penalty<T>, deviance: Deviance<T>) -> Result<Self> {
        ensure_param!(
            beta.len() == features.dim(),
            "beta has {} coordinates, feature map needs {}",
            beta.len(),
            features.dim()
        );
        penalty.validate()?;
        deviance.validate()?;
        Ok(Self {
            beta,
            features,
            penalty,
            deviance,
            objective_trace: Vec::new(),
            iterations: 0,
            converged: false,
        })
    }

    /// `μ_ik = Σ_{j ∈ G_k, j ≠ i} σ(X_ijᵀ β)`.
    pub fn predicted_rate(&self, t: &TraitPartition, i: usize, k: usize) -> Result<T> {
        ensure_param!(t.n() == self.features.n(), "trait partition does not match the model");
        ensure_param!(i < t.n() && k < t.k(), "index ({i}, {k}) out of range");
        let pairs = self.features.pair_matrix(&self.beta);
        Ok(t.group(k)
            .iter()
            .filter(|&&j| j != i)
            .map(|&j| logistic(self.features.eta_with(&self.beta, &pairs, i, j)))
            .sum())
    }

    /// Link probabilities `σ(X_ijᵀ β)`.
    pub fn predict_links(&self, pairs: &[(usize, usize)]) -> Result<Vec<T>> {
        let n = self.features.n();
        let b = self.features.pair_matrix(&self.beta);
        pairs
            .iter()
            .map(|&(i, j)| {
                ensure_param!(i != j && i < n && j < n, "invalid pair ({i}, {j})");
                Ok(logistic(self.features.eta_with(&self.beta, &b, i, j)))
            })
            .collect()
    }

    /// Link probabilities of every unordered pair in canonical order.
    pub fn pair_probabilities(&self) -> Vec<T> {
        let b = self.features.pair_matrix(&self.beta);
        crate::graphgen::all_pairs(self.features.n())
            .map(|(i, j)| logistic(self.features.eta_with(&self.beta, &b, i, j)))
            .collect()
    }

    /// Penalized objective on `y` (the Huber scale is re-estimated at `β`).
    pub fn objective(&self, y: &ArdMatrix, t: &TraitPartition) -> Result<T> {
        let smooth = Smooth::new(&self.features, y, t, self.deviance, None)?;
        let scale = smooth.scale_at(&self.beta);
        Ok(smooth.value(&self.beta, scale) + self.penalty.value(&self.beta))
    }
}

/// Free-function form of [`FprModel::predict_links`].
pub fn predict_links<T: Scalar>(model: &FprModel<T>, pairs: &[(usize, usize)]) -> Result<Vec<T>> {
    model.predict_links(pairs)
}

/// Free-function form of [`FprModel::objective`].
pub fn objective<T: Scalar>(model: &FprModel<T>, y: &ArdMatrix, t: &TraitPartition) -> Result<T> {
    model.objective(y, t)
}

/// The smooth deviance term restricted to a subset of respondent rows.
pub(crate) struct Smooth<'a, T> {
    features: &'a FeatureMap,
    y: Vec<T>,
    trials: Vec<T>,
    rows: Vec<bool>,
    deviance: Deviance<T>,
}

impl<'a, T: Scalar> Smooth<'a, T> {
    pub(crate) fn new(
        features: &'a FeatureMap,
        y: &ArdMatrix,
        t: &TraitPartition,
        deviance: Deviance<T>,
        rows: Option<&[bool]>,
    ) -> Result<Self> {
        ensure_param!(
            y.n() == t.n() && y.k() == t.k(),
            "ARD matrix {}x{} does not match traits n={} K={}",
            y.n(),
            y.k(),
            t.n(),
            t.k()
        );
        ensure_param!(
            features.n() == t.n() && features.k() == t.k(),
            "feature map does not match the trait partition"
        );
        let (n, kk) = (y.n(), y.k());
        let rows = match rows {
            Some(r) => {
                ensure_param!(r.len() == n, "row mask has length {}, expected {n}", r.len());
                r.to_vec()
            }
            None => vec![true; n],
        };
        let mut trials = vec![T::zero(); n * kk];
        for i in 0..n {
            for k in 0..kk {
                trials[i * kk + k] = T::from_usize_lossy(t.group_size_excluding(k, i));
            }
        }
        Ok(Self {
            features,
            y: y.counts().iter().map(|&c| T::c(c as f64)).collect(),
            trials,
            rows,
            deviance,
        })
    }

    fn n(&self) -> usize {
        self.features.n()
    }

    fn k(&self) -> usize {
        self.features.k()
    }

    /// Fitted means of the selected rows (zero elsewhere) plus every pair probability.
    fn rates(&self, beta: &[T]) -> (Vec<T>, Vec<T>) {
        self.rates_with(beta, true)
    }

    fn rates_with(&self, beta: &[T], keep_probs: bool) -> (Vec<T>, Vec<T>) {
        let (n, kk) = (self.n(), self.k());
        let traits = self.features.traits();
        let b = self.features.pair_matrix(beta);
        let mut mu = vec![T::zero(); n * kk];
        let mut probs = if keep_probs {
            vec![T::zero(); n * (n.saturating_sub(1)) / 2]
        } else {
            Vec::new()
        };
        let mut idx = 0;
        for i in 0..n {
            for j in i + 1..n {
                let (ri, rj) = (self.rows[i], self.rows[j]);
                if ri || rj {
                    let p = logistic(self.features.eta_with(beta, &b, i, j));
                    if keep_probs {
                        probs[idx] = p;
                    }
                    if ri {
                        for &k in traits.traits_of(j) {
                            mu[i * kk + k] += p;
                        }
                    }
                    if rj {
                        for &k in traits.traits_of(i) {
                            mu[j * kk + k] += p;
                        }
                    }
                }
                idx += 1;
            }
        }
        (mu, probs)
    }

    /// Huber scale from the residuals of the selected rows; 1 for other deviances.
    pub(crate) fn scale_at(&self, beta: &[T]) -> T {
        if !self.deviance.is_huber() {
            return T::one();
        }
        self.scale_from(&self.means(beta))
    }

    /// Fitted means of the selected rows.
    pub(crate) fn means(&self, beta: &[T]) -> Vec<T> {
        self.rates_with(beta, false).0
    }

    pub(crate) fn scale_from(&self, mu: &[T]) -> T {
        let kk = self.k();
        let residuals: Vec<T> = (0..self.n())
            .filter(|&i| self.rows[i])
            .flat_map(|i| (0..kk).map(move |k| i * kk + k))
            .map(|c| self.y[c] - mu[c])
            .collect();
        mad_scale(&residuals)
    }

    pub(crate) fn value(&self, beta: &[T], scale: T) -> T {
        self.value_from(&self.means(beta), scale)
    }

    pub(crate) fn value_from(&self, mu: &[T], scale: T) -> T {
        let kk = self.k();
        let mut total = T::zero();
        for i in (0..self.n()).filter(|&i| self.rows[i]) {
            for c in i * kk..(i + 1) * kk {
                total += self.deviance.cell(mu[c], self.y[c], self.trials[c], scale).0;
            }
        }
        total
    }

    /// Value and gradient of the smooth term.
    pub(crate) fn value_and_gradient(&self, beta: &[T], scale: T) -> (T, Vec<T>) {
        let (n, kk) = (self.n(), self.k());
        let traits = self.features.traits();
        let (mu, probs) = self.rates(beta);
        let mut value = T::zero();
        let mut dmu = vec![T::zero(); n * kk];
        for i in (0..n).filter(|&i| self.rows[i]) {
            for c in i * kk..(i + 1) * kk {
                let (v, d) = self.deviance.cell(mu[c], self.y[c], self.trials[c], scale);
                value += v;
                dmu[c] = d;
            }
        }

        let mut grad = vec![T::zero(); self.features.dim()];
        let mut gb = vec![T::zero(); kk * kk];
        let mut idx = 0;
        for i in 0..n {
            for j in i + 1..n {
                let p = probs[idx];
                idx += 1;
                if !(self.rows[i] || self.rows[j]) {
                    continue;
                }
                let mut s = T::zero();
                if self.rows[i] {
                    for &k in traits.traits_of(j) {
                        s += dmu[i * kk + k];
                    }
                }
                if self.rows[j] {
                    for &k in traits.traits_of(i) {
                        s += dmu[j * kk + k];
                    }
                }
                if s == T::zero() {
                    continue;
                }
                let w = p * (T::one() - p) * s;
                grad[0] += w;
                grad[1 + i] += w;
                grad[1 + j] += w;
                let tj = traits.traits_of(j);
                for &k in traits.traits_of(i) {
                    for &l in tj {
                        gb[k * kk + l] += w;
                    }
                }
            }
        }
        for k in 0..kk {
            for l in k..kk {
                let g = if k == l {
                    gb[k * kk + k]
                } else {
                    gb[k * kk + l] + gb[l * kk + k]
                };
                grad[self.features.pair_index(k, l)] = g;
            }
        }
        (value, grad)
    }

    /// Diagonal of the Gauss–Newton approximation `Jᵀ W J`, where `J` is the
    /// Jacobian of the fitted means in `β` and `W` the per-cell curvature of
    /// the deviance.
    pub(crate) fn gauss_newton_diagonal(&self, beta: &[T], scale: T) -> Vec<T> {
        let (n, kk) = (self.n(), self.k());
        let traits = self.features.traits();
        let b = self.features.pair_matrix(beta);
        let (mu, _) = self.rates(beta);
        let mut diag = vec![T::zero(); self.features.dim()];
        let mut acc = vec![T::zero(); kk * kk];
        let mut dp = vec![T::zero(); n];
        for i in (0..n).filter(|&i| self.rows[i]) {
            for (j, d) in dp.iter_mut().enumerate() {
                *d = if j == i {
                    T::zero()
                } else {
                    let p = logistic(self.features.eta_with(beta, &b, i, j));
                    p * (T::one() - p)
                };
            }
            let ti = traits.traits_of(i);
            for k in 0..kk {
                let c = i * kk + k;
                let w = self.cell_weight(mu[c], self.trials[c], scale);
                if w == T::zero() {
                    continue;
                }
                acc.iter_mut().for_each(|a| *a = T::zero());
                let mut total = T::zero();
                for &j in traits.group(k) {
                    let d = dp[j];
                    if d == T::zero() {
                        continue;
                    }
                    total += d;
                    diag[1 + j] += w * d * d;
                    for &l in ti {
                        for &m in traits.traits_of(j) {
                            acc[l * kk + m] += d;
                        }
                    }
                }
                diag[0] += w * total * total;
                diag[1 + i] += w * total * total;
                for l in 0..kk {
                    for m in l..kk {
                        let jac = if l == m {
                            acc[l * kk + l]
                        } else {
                            acc[l * kk + m] + acc[m * kk + l]
                        };
                        if jac != T::zero() {
                            diag[self.features.pair_index(l, m)] += w * jac * jac;
                        }
                    }
                }
            }
        }
        diag
    }

    /// Expected second derivative of the cell deviance in `μ`.
    fn cell_weight(&self, mu: T, trials: T, scale: T) -> T {
        match self.deviance {
            Deviance::Poisson => T::c(2.0) / mu.max(T::c(0.1)),
            Deviance::Logistic => {
                if trials <= T::zero() {
                    T::zero()
                } else {
                    let m = mu.max(T::c(0.1)).min(trials - T::c(0.1)).max(T::c(0.05));
                    T::c(2.0) * trials / (m * (trials - m).max(T::c(0.05)))
                }
            }
            Deviance::Huber { .. } => T::one() / (scale * scale),
        }
    }

    /// Intercept matching the pooled observed density of the selected rows.
    pub(crate) fn density_intercept(&self) -> T {
        let (mut num, mut den) = (T::zero(), T::zero());
        for i in (0..self.n()).filter(|&i| self.rows[i]) {
            for c in i * self.k()..(i + 1) * self.k() {
                num += self.y[c];
                den += self.trials[c];
            }
        }
        if den == T::zero() {
            return T::zero();
        }
        let d = (num / den).as_f64().clamp(1e-4, 1.0 - 1e-4);
        T::c(logit(d))
    }
}

/// Starting coefficients: intercept at the logit of the pooled density, zero elsewhere.
pub(crate) fn default_start<T: Scalar>(smooth: &Smooth<'_, T>, dim: usize) -> Vec<T> {
    let mut beta = vec![T::zero(); dim];
    beta[0] = smooth.density_intercept();
    beta
}

/// Penalized fit by proximal gradient descent over all respondent rows.
pub fn fit<T: Scalar>(y: &ArdMatrix, t: &TraitPartition, cfg: &FprConfig<T>) -> Result<FprModel<T>> {
    fit_rows(y, t, cfg, None, None)
}

/// [`fit`] restricted to the rows flagged in `rows`, optionally warm-started.
pub fn fit_rows<T: Scalar>(
    y: &ArdMatrix,
    t: &TraitPartition,
    cfg: &FprConfig<T>,
    rows: Option<&[bool]>,
    start: Option<&[T]>,
) -> Result<FprModel<T>> {
    cfg.validate()?;
    let features = FeatureMap::new(t.clone());
    let smooth = Smooth::new(&features, y, t, cfg.deviance, rows)?;
    let dim = features.dim();
    let beta0 = match start {
        Some(b) => {
            ensure_param!(b.len() == dim, "warm start has {} coordinates, expected {dim}", b.len());
            b.to_vec()
        }
        None => default_start(&smooth, dim),
    };
    let run = proximal_gradient(&smooth, &cfg.penalty, cfg, beta0)?;
    Ok(FprModel {
        beta: run.beta,
        features: features.clone(),
        penalty: cfg.penalty,
        deviance: cfg.deviance,
        objective_trace: run.trace,
        iterations: run.iterations,
        converged: run.converged,
    })
}

pub(crate) struct Run<T> {
    pub beta: Vec<T>,
    pub trace: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) fn prox_step<T: Scalar>(pen: &Penalty<T>, point: &[T], grad: &[T], step: T) -> Vec<T> {
    scaled_prox_step(pen, point, grad, step, None)
}

/// Proximal step with per-coordinate step sizes `step · metric[c]`.
fn scaled_prox_step<T: Scalar>(pen: &Penalty<T>, point: &[T], grad: &[T], step: T, metric: Option<&[T]>) -> Vec<T> {
    point
        .iter()
        .zip(grad)
        .enumerate()
        .map(|(c, (&x, &g))| {
            let h = metric.map_or(step, |m| step * m[c]);
            let v = x - h * g;
            if pen.applies_to(c) {
                pen.threshold(v, h)
            } else {
                v
            }
        })
        .collect()
}

pub(crate) fn max_change<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y).abs()).fold(T::zero(), T::max)
}

const MAX_BACKTRACKS: usize = 80;

fn non_finite(iterations: usize, what: &str) -> Error {
    Error::Optimization {
        iterations,
        message: format!("non-finite {what}"),
    }
}

fn proximal_gradient<T: Scalar>(
    smooth: &Smooth<'_, T>,
    pen: &Penalty<T>,
    cfg: &FprConfig<T>,
    beta0: Vec<T>,
) -> Result<Run<T>> {
    let mut beta = beta0;
    let mut point = beta.clone();
    let mut theta = T::one();
    let (mut step, shrink) = match cfg.step {
        StepRule::Backtracking { initial, shrink } => (initial, Some(shrink)),
        StepRule::Fixed { step } => (step, None),
    };
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    let mut mu_beta = smooth.means(&beta);
    let mut scale = smooth.scale_from(&mu_beta);
    let mut f_beta = smooth.value_from(&mu_beta, scale) + pen.value(&beta);
    if !f_beta.is_finite() {
        return Err(non_finite(0, "objective at the starting point"));
    }
    let metric: Option<Vec<T>> = cfg.precondition.then(|| {
        let diag = smooth.gauss_newton_diagonal(&beta, scale);
        let top = diag.iter().copied().fold(T::zero(), T::max);
        let floor = (top * T::c(1e-8)).max(T::c(1e-12));
        diag.into_iter().map(|h| T::one() / h.max(floor)).collect()
    });

    for iter in 0..cfg.max_iter {
        iterations = iter + 1;
        if cfg.deviance.is_huber() && iter > 0 {
            scale = smooth.scale_from(&mu_beta);
            f_beta = smooth.value_from(&mu_beta, scale) + pen.value(&beta);
        }
        let (f_point, grad) = smooth.value_and_gradient(&point, scale);
        if !f_point.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(non_finite(iter, "deviance or gradient"));
        }

        let mut backtracks = 0;
        let (candidate, mu_cand, f_cand) = loop {
            let candidate = scaled_prox_step(pen, &point, &grad, step, metric.as_deref());
            let mu_cand = smooth.means(&candidate);
            let f_cand = smooth.value_from(&mu_cand, scale);
            let Some(shrink) = shrink else {
                break (candidate, mu_cand, f_cand);
            };
            let mut bound = f_point;
            for c in 0..candidate.len() {
                let d = candidate[c] - point[c];
                let h = metric.as_ref().map_or(step, |m| step * m[c]);
                bound += grad[c] * d + d * d / (T::c(2.0) * h);
            }
            if f_cand <= bound + T::c(1e-12) * bound.abs().max(T::one()) {
                break (candidate, mu_cand, f_cand);
            }
            backtracks += 1;
            if backtracks > MAX_BACKTRACKS {
                return Err(Error::Optimization {
                    iterations: iter,
                    message: format!("line search failed (step {step})"),
                });
            }
            step *= shrink;
        };

        let f_cand = f_cand + pen.value(&candidate);
        if !f_cand.is_finite() {
            return Err(non_finite(iter, "objective"));
        }
        let moved = max_change(&candidate, &point);

        if cfg.accelerate {
            let theta_next = (T::one() + (T::one() + T::c(4.0) * theta * theta).sqrt()) / T::c(2.0);
            let previous = beta.clone();
            if f_cand <= f_beta {
                beta = candidate.clone();
                mu_beta = mu_cand;
                f_beta = f_cand;
            }
            point = beta
                .iter()
                .zip(&candidate)
                .zip(&previous)
                .map(|((&x, &z), &old)| {
                    x + (theta / theta_next) * (z - x) + ((theta - T::one()) / theta_next) * (x - old)
                })
                .collect();
            theta = theta_next;
        } else {
            beta = candidate;
            point = beta.clone();
            mu_beta = mu_cand;
            f_beta = f_cand;
        }
        trace.push(f_beta);
        if moved < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(Run {
        beta,
        trace,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ard::{assign_traits, compute_ard};
    use crate::blsm::{simulate_latent, LatentSimConfig};

    fn small() -> (ArdMatrix, TraitPartition) {
        let ds = simulate_latent(
            &LatentSimConfig {
                n: 30,
                k: 4,
                coverage: 0.3,
                ..Default::default()
            },
            3,
        )
        .unwrap();
        (ds.ard, ds.traits)
    }

    #[test]
    fn zero_beta_gives_half_rates() {
        let (_, t) = small();
        let m = FprModel::from_beta(
            vec![0.0; FeatureMap::new(t.clone()).dim()],
            FeatureMap::new(t.clone()),
            Penalty::l1(0.0),
            Deviance::Poisson,
        )
        .unwrap();
        for i in 0..t.n() {
            for k in 0..t.k() {
                let want = 0.5 * t.group_size_excluding(k, i) as f64;
                assert!((m.predicted_rate(&t, i, k).unwrap() - want).abs() < 1e-12);
            }
        }
        assert!(m.pair_probabilities().iter().all(|&p| p == 0.5));
    }

    #[test]
    fn huge_lambda_zeroes_penalized_coordinates() {
        let (y, t) = small();
        let cfg = FprConfig {
            penalty: Penalty::l1(1e6),
            ..Default::default()
        };
        let m = fit(&y, &t, &cfg).unwrap();
        assert!(m.beta[1..].iter().all(|&b| b == 0.0));
        assert!(m.beta[0] != 0.0);
    }

    #[test]
    fn l1_trace_non_increasing() {
        let (y, t) = small();
        for accelerate in [false, true] {
            let cfg: FprConfig<f64> = FprConfig {
                penalty: Penalty::l1(2.0),
                accelerate,
                ..Default::default()
            };
            let m = fit(&y, &t, &cfg).unwrap();
            for w in m.objective_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-9 * w[0].abs(), "{} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn fit_is_deterministic_on_generated_graph() {
        let g = crate::graphgen::gen_small_world(40, 4, 0.1, 2).unwrap();
        let t = assign_traits(40, 3, 0.3, 0.0, 5).unwrap();
        let y = compute_ard(&g, &t).unwrap();
        let cfg = FprConfig {
            penalty: Penalty::l1(0.5),
            ..Default::default()
        };
        assert_eq!(
            fit::<f64>(&y, &t, &cfg).unwrap().beta,
            fit::<f64>(&y, &t, &cfg).unwrap().beta
        );
    }
}
