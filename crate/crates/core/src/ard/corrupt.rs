use rand::seq::index::sample;
use rand::Rng as _;

use super::{ArdMatrix, ArdMeta, Provenance};
use crate::error::{ensure_param, Error, Result};
use crate::rng::{rng_from_seed, Rng};

/// Flags `⌈rho · n⌉` respondents as misreporters and perturbs each of their
/// counts by `±δ`, `δ ~ Uniform{0, …, ⌈max_frac · y⌉}`, clamped at zero.
pub fn inject_misreporting(y: &ArdMatrix, rho: f64, max_frac: f64, seed: u64) -> Result<ArdMatrix> {
    if y.provenance() != Provenance::Clean {
        return Err(Error::State("misreporting applies to clean ARD only".into()));
    }
    ensure_param!((0.0..=1.0).contains(&rho), "rho must be in [0,1], got {rho}");
    ensure_param!(max_frac >= 0.0, "max_frac must be >= 0, got {max_frac}");

    let n = y.n();
    let mut rng = rng_from_seed(seed);
    let flagged_count = ((rho * n as f64) - 1e-9).ceil().max(0.0) as usize;
    let mut flags = vec![false; n];
    for i in sample(&mut rng, n, flagged_count.min(n)) {
        flags[i] = true;
    }

    let mut counts = y.counts().to_vec();
    for i in (0..n).filter(|&i| flags[i]) {
        for c in &mut counts[i * y.k()..(i + 1) * y.k()] {
            let bound = ((max_frac * *c as f64) - 1e-9).ceil().max(0.0) as u64;
            let delta = rng.random_range(0..=bound);
            *c = if rng.random::<bool>() {
                *c + delta
            } else {
                c.saturating_sub(delta)
            };
        }
    }

    let meta = ArdMeta {
        provenance: Provenance::Misreported,
        rho: Some(rho),
        epsilon: y.meta().epsilon,
        seed: Some(seed),
        sensitivity: y.meta().sensitivity,
    };
    Ok(ArdMatrix::from_counts(n, y.k(), counts, meta.sensitivity)?
        .with_meta(meta)
        .with_misreporters(flags))
}

/// One Laplace(0, scale) draw by inverse CDF.
pub fn laplace_sample(rng: &mut Rng, scale: f64) -> f64 {
    let u: f64 = rng.random::<f64>() - 0.5;
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// Laplace mechanism on every count with scale `sensitivity / epsilon`,
/// followed by rounding and clamping at zero.
pub fn inject_dp_noise(y: &ArdMatrix, epsilon: f64, seed: u64) -> Result<ArdMatrix> {
    ensure_param!(epsilon > 0.0 && !epsilon.is_nan(), "epsilon must be > 0, got {epsilon}");
    let sensitivity = y.meta().sensitivity.max(1);
    let scale = sensitivity as f64 / epsilon;
    let mut rng = rng_from_seed(seed);
    let counts = y
        .counts()
        .iter()
        .map(|&c| {
            let noisy = c as f64 + laplace_sample(&mut rng, scale);
            noisy.round().max(0.0) as u64
        })
        .collect();
    let meta = ArdMeta {
        provenance: Provenance::DpNoised,
        rho: y.meta().rho,
        epsilon: Some(epsilon),
        seed: Some(seed),
        sensitivity: y.meta().sensitivity,
    };
    let mut out = ArdMatrix::from_counts(y.n(), y.k(), counts, meta.sensitivity)?.with_meta(meta);
    if let Some(flags) = y.misreporters() {
        out = out.with_misreporters(flags.to_vec());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_matrix() -> ArdMatrix {
        let counts: Vec<u64> = (0..400).map(|v| (v * 7 % 53) as u64).collect();
        ArdMatrix::from_counts(100, 4, counts, 1).unwrap()
    }

    #[test]
    fn zero_rate_is_identity() {
        let y = sample_matrix();
        let out = inject_misreporting(&y, 0.0, 0.2, 3).unwrap();
        assert_eq!(out.counts(), y.counts());
        assert!(out.misreporters().unwrap().iter().all(|f| !f));
        assert_eq!(out.provenance(), Provenance::Misreported);
    }

    #[test]
    fn full_rate_respects_bounds() {
        let y = sample_matrix();
        let out = inject_misreporting(&y, 1.0, 0.2, 5).unwrap();
        for (&a, &b) in y.counts().iter().zip(out.counts()) {
            let bound = (0.2 * a as f64 - 1e-9).ceil() as i64;
            assert!((b as i64 - a as i64).abs() <= bound);
            if a == 0 {
                assert_eq!(b, 0);
            }
        }
        assert_eq!(out.misreporters().unwrap().iter().filter(|&&f| f).count(), 100);
    }

    #[test]
    fn misreporting_requires_clean_input() {
        let y = inject_misreporting(&sample_matrix(), 0.1, 0.2, 1).unwrap();
        assert!(matches!(inject_misreporting(&y, 0.1, 0.2, 1), Err(Error::State(_))));
    }

    #[test]
    fn huge_epsilon_is_identity() {
        let y = sample_matrix();
        let out = inject_dp_noise(&y, 1e6, 8).unwrap();
        assert_eq!(out.counts(), y.counts());
        assert_eq!(out.provenance(), Provenance::DpNoised);
    }

    #[test]
    fn nonpositive_epsilon_is_rejected() {
        assert!(inject_dp_noise(&sample_matrix(), 0.0, 1).is_err());
        assert!(inject_dp_noise(&sample_matrix(), -1.0, 1).is_err());
    }
}
