use serde::{Deserialize, Serialize};

use crate::error::{ensure_param, Result};
use crate::scalar::Scalar;

/// Floor applied to fitted means before taking logs.
pub const MU_FLOOR: f64 = 1e-12;

/// Consistency constant turning the median absolute deviation into a
/// standard-deviation estimate under normality.
pub const MAD_CONSISTENCY: f64 = 1.4826;

/// Default Huber threshold, in MAD units. The MAD pools cells of very
/// different Poisson variance, so the Gaussian-efficiency constant 1.345
/// clips ordinary spread in high-count cells; 3 clips only the tails.
pub const DEFAULT_HUBER_DELTA: f64 = 3.0;

/// Per-cell loss comparing a fitted count `μ_ik` with an observed `y_ik`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
#[derive(Default)]
pub enum Deviance<T> {
    /// `2(μ − y + y log(y/μ))`.
    #[default]
    Poisson,
    /// Binomial deviance with `|G_k \ {i}|` trials.
    Logistic,
    /// Huber loss of the residual `(y − μ)/σ̂`, `σ̂` a MAD scale estimate.
    Huber { delta: T },
}

impl<T: Scalar> Deviance<T> {
    /// Huber deviance with `δ₀ =` [`DEFAULT_HUBER_DELTA`].
    pub fn huber() -> Self {
        Deviance::Huber {
            delta: T::c(DEFAULT_HUBER_DELTA),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Deviance::Huber { delta } = self {
            ensure_param!(*delta > T::zero(), "Huber threshold must be > 0, got {delta}");
        }
        Ok(())
    }

    pub fn is_huber(&self) -> bool {
        matches!(self, Deviance::Huber { .. })
    }

    /// Loss and its derivative in `μ` for one cell. `trials` is only used by
    /// the logistic deviance and `scale` only by Huber.
    #[inline]
    pub fn cell(&self, mu: T, y: T, trials: T, scale: T) -> (T, T) {
        match *self {
            Deviance::Poisson => (poisson_deviance(mu, y), poisson_derivative(mu, y)),
            Deviance::Logistic => logistic_cell(mu, y, trials),
            Deviance::Huber { delta } => {
                let x = (y - mu) / scale;
                (huber_rho(x, delta), -huber_psi(x, delta) / scale)
            }
        }
    }
}

/// `2(μ − y + y log(y/μ))` with `y log(y/μ) = 0` at `y = 0`.
#[inline]
pub fn poisson_deviance<T: Scalar>(mu: T, y: T) -> T {
    let mu = mu.max(T::c(MU_FLOOR));
    let ylog = if y > T::zero() { y * (y / mu).ln() } else { T::zero() };
    T::c(2.0) * (mu - y + ylog)
}

#[inline]
fn poisson_derivative<T: Scalar>(mu: T, y: T) -> T {
    let mu = mu.max(T::c(MU_FLOOR));
    T::c(2.0) * (T::one() - y / mu)
}

/// Binomial deviance of `y` successes out of `trials` at mean `μ`, with `y`
/// clamped into `[0, trials]`.
fn logistic_cell<T: Scalar>(mu: T, y: T, trials: T) -> (T, T) {
    if trials <= T::zero() {
        return (T::zero(), T::zero());
    }
    let floor = T::c(MU_FLOOR);
    let y = y.min(trials);
    let mu = mu.max(floor).min(trials - floor);
    let fail = trials - y;
    let a = if y > T::zero() { y * (y / mu).ln() } else { T::zero() };
    let b = if fail > T::zero() {
        fail * (fail / (trials - mu)).ln()
    } else {
        T::zero()
    };
    let two = T::c(2.0);
    (two * (a + b), two * (fail / (trials - mu) - y / mu))
}

/// `x²/2` for `|x| ≤ δ`, `δ|x| − δ²/2` beyond.
#[inline]
pub fn huber_rho<T: Scalar>(x: T, delta: T) -> T {
    let ax = x.abs();
    if ax <= delta {
        T::c(0.5) * x * x
    } else {
        delta * ax - T::c(0.5) * delta * delta
    }
}

/// Derivative of [`huber_rho`]: `x` clipped to `[−δ, δ]`.
#[inline]
pub fn huber_psi<T: Scalar>(x: T, delta: T) -> T {
    x.max(-delta).min(delta)
}

/// `1.4826 · median |r − median(r)|`, floored at 1.
pub fn mad_scale<T: Scalar>(residuals: &[T]) -> T {
    if residuals.is_empty() {
        return T::one();
    }
    let mut r: Vec<T> = residuals.to_vec();
    let med = median(&mut r);
    let mut dev: Vec<T> = residuals.iter().map(|&x| (x - med).abs()).collect();
    (T::c(MAD_CONSISTENCY) * median(&mut dev)).max(T::one())
}

fn median<T: Scalar>(xs: &mut [T]) -> T {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let m = xs.len();
    if m % 2 == 1 {
        xs[m / 2]
    } else {
        (xs[m / 2 - 1] + xs[m / 2]) / T::c(2.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_saturated_fit_is_zero() {
        for y in [1.0_f64, 2.0, 7.0, 40.0] {
            assert!(poisson_deviance(y, y).abs() < 1e-12);
        }
        assert!((poisson_deviance(3.0_f64, 0.0) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn huber_reference_values() {
        assert!((huber_rho(2.0_f64, 1.0) - 1.5).abs() < 1e-15);
        for delta in [0.5_f64, 1.0, 1.345] {
            let inside = 0.5 * delta * delta;
            assert!((huber_rho(delta, delta) - inside).abs() < 1e-15);
            assert!((huber_rho(-delta, delta) - inside).abs() < 1e-15);
            assert_eq!(huber_psi(delta, delta), delta);
            assert_eq!(huber_psi(5.0 * delta, delta), delta);
        }
    }

    #[test]
    fn cell_derivatives_match_finite_differences() {
        let h = 1e-6;
        let devs = [
            Deviance::Poisson,
            Deviance::Logistic,
            Deviance::Huber { delta: 1.345_f64 },
        ];
        for dev in devs {
            for &(mu, y) in &[(2.5, 4.0), (0.7, 0.0), (6.0, 1.0), (3.0, 9.0)] {
                let (_, d) = dev.cell(mu, y, 12.0, 1.7);
                let fd = (dev.cell(mu + h, y, 12.0, 1.7).0 - dev.cell(mu - h, y, 12.0, 1.7).0) / (2.0 * h);
                assert!(
                    (d - fd).abs() < 1e-6 * (1.0 + fd.abs()),
                    "{dev:?} mu={mu} y={y}: {d} vs {fd}"
                );
            }
        }
    }

    #[test]
    fn mad_scale_reference() {
        // median 3, absolute deviations {2,1,0,1,6} → median 1
        let r = [1.0_f64, 2.0, 3.0, 4.0, 9.0];
        assert!((mad_scale(&r) - 1.4826).abs() < 1e-12);
        assert_eq!(mad_scale(&[0.1_f64, 0.1, 0.2]), 1.0);
    }
}
