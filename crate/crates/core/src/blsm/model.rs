use serde::{Deserialize, Serialize};

use crate::ard::{ArdMatrix, TraitPartition};
use crate::error::{ensure_param, Error, Result};
use crate::scalar::{dot, ln_gamma, logistic, logit, normal_cdf, normal_pdf, Scalar};

/// Smallest rate passed to a logarithm.
pub(crate) const RATE_FLOOR: f64 = 1e-12;

/// Model parameters: intercepts `v`, unit vectors `z` (row-major `n × dim`,
/// `dim = p + 1`) and the global scale `zeta > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlsmParams<T> {
    v: Vec<T>,
    z: Vec<T>,
    dim: usize,
    zeta: T,
}

impl<T: Scalar> BlsmParams<T> {
    fn norm_tolerance() -> T {
        T::c(1e-10).max(T::epsilon() * T::c(100.0))
    }

    pub fn new(v: Vec<T>, z: Vec<T>, dim: usize, zeta: T) -> Result<Self> {
        ensure_param!(dim >= 1, "latent dimension must be >= 1");
        ensure_param!(
            z.len() == v.len() * dim,
            "z has {} entries, expected {} x {dim}",
            z.len(),
            v.len()
        );
        ensure_param!(
            zeta > T::zero() && zeta.is_finite(),
            "zeta must be positive, got {zeta}"
        );
        let tol = Self::norm_tolerance();
        for (i, row) in z.chunks(dim).enumerate() {
            let norm = crate::scalar::norm(row);
            ensure_param!((norm - T::one()).abs() <= tol, "z row {i} has norm {norm}, expected 1");
        }
        ensure_param!(v.iter().all(|x| x.is_finite()), "intercepts must be finite");
        Ok(Self { v, z, dim, zeta })
    }

    /// Like [`BlsmParams::new`] but projects every `z` row onto the sphere.
    pub fn from_unnormalized(v: Vec<T>, mut z: Vec<T>, dim: usize, zeta: T) -> Result<Self> {
        ensure_param!(dim >= 1 && z.len() == v.len() * dim, "z shape mismatch");
        for (i, row) in z.chunks_mut(dim).enumerate() {
            let norm = crate::scalar::norm(row);
            ensure_param!(norm > T::zero() && norm.is_finite(), "z row {i} cannot be normalized");
            row.iter_mut().for_each(|x| *x /= norm);
        }
        Self::new(v, z, dim, zeta)
    }

    pub fn n(&self) -> usize {
        self.v.len()
    }

    /// Ambient dimension `p + 1`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn v(&self) -> &[T] {
        &self.v
    }

    pub fn z(&self) -> &[T] {
        &self.z
    }

    #[inline]
    pub fn z_row(&self, i: usize) -> &[T] {
        &self.z[i * self.dim..(i + 1) * self.dim]
    }

    pub fn zeta(&self) -> T {
        self.zeta
    }

    #[inline]
    pub(crate) fn eta(&self, i: usize, j: usize) -> T {
        self.v[i] + self.v[j] + self.zeta * dot(self.z_row(i), self.z_row(j))
    }

    pub(crate) fn set_v(&mut self, i: usize, value: T) {
        self.v[i] = value;
    }

    pub(crate) fn set_z_row(&mut self, i: usize, row: &[T]) {
        self.z[i * self.dim..(i + 1) * self.dim].copy_from_slice(row);
    }

    pub(crate) fn set_zeta(&mut self, zeta: T) {
        self.zeta = zeta;
    }

    /// Applies `z ↦ z Q` to every position (`Q` row-major `dim × dim`).
    pub fn rotated(&self, q: &[T]) -> Result<Self> {
        ensure_param!(q.len() == self.dim * self.dim, "rotation has wrong shape");
        let z = crate::linalg::matmul(&self.z, q, self.n(), self.dim, self.dim);
        Self::from_unnormalized(self.v.clone(), z, self.dim, self.zeta)
    }
}

/// Link function `σ`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Link {
    #[default]
    Logistic,
    Probit,
}

impl Link {
    #[inline]
    pub fn apply<T: Scalar>(self, eta: T) -> T {
        match self {
            Link::Logistic => logistic(eta),
            Link::Probit => normal_cdf(eta),
        }
    }

    /// `dσ/dη`.
    #[inline]
    pub fn derivative<T: Scalar>(self, eta: T) -> T {
        match self {
            Link::Logistic => {
                let p = logistic(eta);
                p * (T::one() - p)
            }
            Link::Probit => normal_pdf(eta),
        }
    }
}

/// Count distribution of `y_ik` given its mean `λ_ik`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Family<T> {
    #[default]
    Poisson,
    /// Negative binomial with mean `λ` and fixed dispersion `r`.
    NegativeBinomial { r: T },
}

impl<T: Scalar> Family<T> {
    /// Full log-probability mass.
    pub fn log_pmf(self, y: u64, rate: T) -> T {
        let yf = T::c(y as f64);
        let lam = rate.max(T::c(RATE_FLOOR));
        match self {
            Family::Poisson => yf * lam.ln() - lam - ln_gamma(yf + T::one()),
            Family::NegativeBinomial { r } => {
                ln_gamma(yf + r) - ln_gamma(r) - ln_gamma(yf + T::one())
                    + r * (r / (r + lam)).ln()
                    + yf * (lam / (r + lam)).ln()
            }
        }
    }

    /// The part of [`Family::log_pmf`] that depends on the rate.
    #[inline]
    pub(crate) fn kernel(self, y: u64, rate: T) -> T {
        let lam = rate.max(T::c(RATE_FLOOR));
        match self {
            Family::Poisson => {
                if y == 0 {
                    -lam
                } else {
                    T::c(y as f64) * lam.ln() - lam
                }
            }
            Family::NegativeBinomial { r } => {
                let yf = T::c(y as f64);
                yf * lam.ln() - (r + yf) * (r + lam).ln()
            }
        }
    }

    /// `∂ log f / ∂λ`.
    #[inline]
    pub fn score(self, y: u64, rate: T) -> T {
        let lam = rate.max(T::c(RATE_FLOOR));
        let yf = T::c(y as f64);
        match self {
            Family::Poisson => yf / lam - T::one(),
            Family::NegativeBinomial { r } => yf / lam - (r + yf) / (r + lam),
        }
    }
}

/// Count family plus link.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodSpec<T> {
    pub family: Family<T>,
    pub link: Link,
}

impl<T: Scalar> LikelihoodSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if let Family::NegativeBinomial { r } = self.family {
            ensure_param!(r > T::zero(), "negative-binomial dispersion must be > 0, got {r}");
        }
        Ok(())
    }
}

/// Prior on the positions.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ZPrior<T> {
    #[default]
    UniformSphere,
    VonMisesFisher {
        mean: Vec<T>,
        concentration: T,
    },
}

/// `v_i ~ N(mu_v, sigma_v²)`, `ζ ~ Half-Cauchy(zeta_scale)`, `z_i ~ z_prior`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlsmPriors<T> {
    pub mu_v: T,
    pub sigma_v: T,
    pub zeta_scale: T,
    pub z_prior: ZPrior<T>,
}

impl<T: Scalar> Default for BlsmPriors<T> {
    fn default() -> Self {
        Self {
            mu_v: T::zero(),
            sigma_v: T::one(),
            zeta_scale: T::c(2.5),
            z_prior: ZPrior::UniformSphere,
        }
    }
}

impl<T: Scalar> BlsmPriors<T> {
    /// Weakly informative defaults whose intercept prior reproduces the
    /// observed density: `2 mu_v = logit(mean count / mean group size)`.
    pub fn centered_on(y: &ArdMatrix, t: &TraitPartition) -> Self {
        let density = observed_density(y, t);
        Self {
            mu_v: logit(T::c(density)) / T::c(2.0),
            ..Self::default()
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        ensure_param!(self.sigma_v > T::zero(), "sigma_v must be > 0");
        ensure_param!(self.zeta_scale > T::zero(), "zeta_scale must be > 0");
        if let ZPrior::VonMisesFisher { mean, concentration } = &self.z_prior {
            ensure_param!(mean.len() == dim, "vMF mean has wrong dimension");
            ensure_param!(
                (crate::scalar::norm(mean) - T::one()).abs() < T::c(1e-6),
                "vMF mean must be a unit vector"
            );
            ensure_param!(*concentration >= T::zero(), "vMF concentration must be >= 0");
        }
        Ok(())
    }
}

/// Mean count over mean reachable group size, clamped into `(0, 1)`.
pub(crate) fn observed_density(y: &ArdMatrix, t: &TraitPartition) -> f64 {
    let mut reachable = 0usize;
    for i in 0..t.n() {
        for k in 0..t.k() {
            reachable += t.group_size_excluding(k, i);
        }
    }
    let d = if reachable == 0 {
        0.5
    } else {
        y.total() as f64 / reachable as f64
    };
    d.clamp(1e-3, 1.0 - 1e-3)
}

/// `P(g_ij = 1) = σ(v_i + v_j + ζ ⟨z_i, z_j⟩)`.
pub fn link_prob<T: Scalar>(params: &BlsmParams<T>, i: usize, j: usize, link: Link) -> Result<T> {
    ensure_param!(i != j, "link probability undefined for i == j ({i})");
    ensure_param!(i < params.n() && j < params.n(), "node index out of range");
    Ok(link.apply(params.eta(i, j)))
}

/// `λ_ik = Σ_{j ∈ G_k, j ≠ i} P(g_ij = 1)`; the same mean serves both families.
pub fn ard_rate<T: Scalar>(
    params: &BlsmParams<T>,
    t: &TraitPartition,
    i: usize,
    k: usize,
    spec: &LikelihoodSpec<T>,
) -> T {
    t.group(k)
        .iter()
        .filter(|&&j| j != i)
        .map(|&j| spec.link.apply(params.eta(i, j)))
        .sum()
}

/// All rates `λ_ik`, row-major `n × K`.
pub fn ard_rates<T: Scalar>(params: &BlsmParams<T>, t: &TraitPartition, link: Link) -> Vec<T> {
    let (n, kk) = (params.n(), t.k());
    let mut rates = vec![T::zero(); n * kk];
    for i in 0..n {
        for j in i + 1..n {
            let p = link.apply(params.eta(i, j));
            for &k in t.traits_of(j) {
                rates[i * kk + k] += p;
            }
            for &k in t.traits_of(i) {
                rates[j * kk + k] += p;
            }
        }
    }
    rates
}

pub(crate) fn check_dims<T: Scalar>(params: &BlsmParams<T>, y: &ArdMatrix, t: &TraitPartition) -> Result<()> {
    if params.n() != y.n() || params.n() != t.n() || y.k() != t.k() {
        return Err(Error::Parameter(format!(
            "dimension mismatch: params n={}, ARD {}x{}, traits n={} K={}",
            params.n(),
            y.n(),
            y.k(),
            t.n(),
            t.k()
        )));
    }
    Ok(())
}

/// `Σ_{i,k} log f(y_ik | λ_ik)`. Counts are non-negative by construction of
/// [`ArdMatrix`].
pub fn log_likelihood<T: Scalar>(
    params: &BlsmParams<T>,
    y: &ArdMatrix,
    t: &TraitPartition,
    spec: &LikelihoodSpec<T>,
) -> Result<T> {
    check_dims(params, y, t)?;
    spec.validate()?;
    let rates = ard_rates(params, t, spec.link);
    Ok(y.counts()
        .iter()
        .zip(&rates)
        .map(|(&c, &lam)| spec.family.log_pmf(c, lam))
        .sum())
}

fn ln_sphere_area<T: Scalar>(dim: usize) -> T {
    let half = T::c(dim as f64 / 2.0);
    T::c(2.0).ln() + half * T::PI().ln() - ln_gamma(half)
}

/// `ln I_nu(x)` by a log-space power series.
pub(crate) fn ln_bessel_i(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let half_log = (x / 2.0).ln();
    let terms: Vec<f64> = (0..)
        .map(|m: usize| {
            let m = m as f64;
            (2.0 * m + nu) * half_log - libm::lgamma(m + 1.0) - libm::lgamma(m + nu + 1.0)
        })
        .take_while({
            let mut count = 0usize;
            let cutoff = (x as usize).saturating_add(60);
            move |_| {
                count += 1;
                count <= cutoff
            }
        })
        .collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Log normalizing constant of the von Mises–Fisher density on `S^{dim-1}`.
pub(crate) fn ln_vmf_normalizer<T: Scalar>(dim: usize, kappa: T) -> T {
    if kappa == T::zero() {
        return -ln_sphere_area::<T>(dim);
    }
    let d = dim as f64;
    let k = kappa.as_f64();
    T::c((d / 2.0 - 1.0) * k.ln() - (d / 2.0) * (2.0 * std::f64::consts::PI).ln() - ln_bessel_i(d / 2.0 - 1.0, k))
}

fn ln_normal<T: Scalar>(x: T, mu: T, sigma: T) -> T {
    let r = (x - mu) / sigma;
    -T::c(0.5) * r * r - sigma.ln() - T::c(0.5) * (T::c(2.0) * T::PI()).ln()
}

pub(crate) fn ln_half_cauchy<T: Scalar>(zeta: T, scale: T) -> T {
    if zeta <= T::zero() {
        return T::neg_infinity();
    }
    let r = zeta / scale;
    T::c(2.0).ln() - T::PI().ln() - scale.ln() - (T::one() + r * r).ln()
}

/// Log prior of a single position.
pub(crate) fn ln_z_prior<T: Scalar>(z: &[T], prior: &ZPrior<T>) -> T {
    match prior {
        ZPrior::UniformSphere => -ln_sphere_area::<T>(z.len()),
        ZPrior::VonMisesFisher { mean, concentration } => {
            ln_vmf_normalizer(z.len(), *concentration) + *concentration * dot(mean, z)
        }
    }
}

/// Joint log prior density; `-∞` outside the support of `ζ`.
pub fn log_prior<T: Scalar>(params: &BlsmParams<T>, priors: &BlsmPriors<T>) -> T {
    if params.zeta() <= T::zero() {
        return T::neg_infinity();
    }
    let v: T = params
        .v()
        .iter()
        .map(|&x| ln_normal(x, priors.mu_v, priors.sigma_v))
        .sum();
    let z: T = (0..params.n())
        .map(|i| ln_z_prior(params.z_row(i), &priors.z_prior))
        .sum();
    v + z + ln_half_cauchy(params.zeta(), priors.zeta_scale)
}

/// Euclidean gradient of the log-likelihood.
#[derive(Clone, Debug, PartialEq)]
pub struct LikelihoodGradient<T> {
    pub v: Vec<T>,
    /// Row-major `n × dim`, not projected onto the tangent space.
    pub z: Vec<T>,
    pub zeta: T,
}

/// Analytic gradient of [`log_likelihood`] with respect to `v`, `z` and `ζ`.
///
/// With `R_ik = ∂ log f / ∂λ_ik`, each unordered pair contributes
/// `W_ij = σ'(η_ij) (Σ_{k ∋ j} R_ik + Σ_{k ∋ i} R_jk)` to `∂/∂η_ij`.
pub fn log_likelihood_gradient<T: Scalar>(
    params: &BlsmParams<T>,
    y: &ArdMatrix,
    t: &TraitPartition,
    spec: &LikelihoodSpec<T>,
) -> Result<LikelihoodGradient<T>> {
    check_dims(params, y, t)?;
    Ok(loglik_and_gradient(params, y, t, spec).1)
}

/// Log-likelihood and its gradient from a single rate evaluation.
pub(crate) fn loglik_and_gradient<T: Scalar>(
    params: &BlsmParams<T>,
    y: &ArdMatrix,
    t: &TraitPartition,
    spec: &LikelihoodSpec<T>,
) -> (T, LikelihoodGradient<T>) {
    let (n, kk, dim) = (params.n(), t.k(), params.dim());
    let rates = ard_rates(params, t, spec.link);
    let mut ll = T::zero();
    let score: Vec<T> = y
        .counts()
        .iter()
        .zip(&rates)
        .map(|(&c, &lam)| {
            ll += spec.family.log_pmf(c, lam);
            spec.family.score(c, lam)
        })
        .collect();

    let mut gv = vec![T::zero(); n];
    let mut gz = vec![T::zero(); n * dim];
    let mut gzeta = T::zero();
    for i in 0..n {
        for j in i + 1..n {
            let mut s = T::zero();
            for &k in t.traits_of(j) {
                s += score[i * kk + k];
            }
            for &k in t.traits_of(i) {
                s += score[j * kk + k];
            }
            if s == T::zero() {
                continue;
            }
            let cos = dot(params.z_row(i), params.z_row(j));
            let eta = params.v()[i] + params.v()[j] + params.zeta() * cos;
            let w = spec.link.derivative(eta) * s;
            gv[i] += w;
            gv[j] += w;
            gzeta += w * cos;
            let wz = w * params.zeta();
            for d in 0..dim {
                gz[i * dim + d] += wz * params.z()[j * dim + d];
                gz[j * dim + d] += wz * params.z()[i * dim + d];
            }
        }
    }
    (
        ll,
        LikelihoodGradient {
            v: gv,
            z: gz,
            zeta: gzeta,
        },
    )
}
