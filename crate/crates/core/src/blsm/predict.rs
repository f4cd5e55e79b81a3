use super::model::{BlsmParams, Link};
use crate::error::{ensure_param, Result};
use crate::eval::procrustes_align;
use crate::graphgen::all_pairs;
use crate::linalg::matmul;
use crate::scalar::Scalar;

fn check_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<()> {
    for &(i, j) in pairs {
        ensure_param!(i != j && i < n && j < n, "invalid pair ({i}, {j}) for n = {n}");
    }
    Ok(())
}

/// Link probabilities of a point estimate.
pub fn predict_links<T: Scalar>(params: &BlsmParams<T>, pairs: &[(usize, usize)], link: Link) -> Result<Vec<T>> {
    check_pairs(params.n(), pairs)?;
    Ok(pairs.iter().map(|&(i, j)| link.apply(params.eta(i, j))).collect())
}

/// Link probabilities averaged over posterior draws.
pub fn predict_links_samples<T: Scalar>(
    draws: &[BlsmParams<T>],
    pairs: &[(usize, usize)],
    link: Link,
) -> Result<Vec<T>> {
    ensure_param!(!draws.is_empty(), "no posterior draws to average");
    let n = draws[0].n();
    ensure_param!(draws.iter().all(|d| d.n() == n), "draws disagree on n");
    check_pairs(n, pairs)?;
    let mut acc = vec![T::zero(); pairs.len()];
    for d in draws {
        for (a, &(i, j)) in acc.iter_mut().zip(pairs) {
            *a += link.apply(d.eta(i, j));
        }
    }
    let m = T::from_usize_lossy(draws.len());
    acc.iter_mut().for_each(|a| *a /= m);
    Ok(acc)
}

/// Probabilities of every unordered pair, in canonical pair order.
pub fn pair_probabilities<T: Scalar>(params: &BlsmParams<T>, link: Link) -> Vec<T> {
    all_pairs(params.n())
        .map(|(i, j)| link.apply(params.eta(i, j)))
        .collect()
}

/// Averages draws after aligning their positions to a common frame.
///
/// Positions are Procrustes-aligned to the first draw, averaged, and the
/// alignment is repeated once against that average before the final mean is
/// projected back onto the sphere.
pub fn posterior_mean<T: Scalar>(draws: &[BlsmParams<T>]) -> Result<BlsmParams<T>> {
    ensure_param!(!draws.is_empty(), "no posterior draws to average");
    let (n, dim) = (draws[0].n(), draws[0].dim());
    ensure_param!(
        draws.iter().all(|d| d.n() == n && d.dim() == dim),
        "draws disagree on shape"
    );
    let mut reference = draws[0].z().to_vec();
    let mut z_mean = vec![T::zero(); n * dim];
    for _ in 0..2 {
        z_mean.iter_mut().for_each(|x| *x = T::zero());
        for d in draws {
            let q = procrustes_align(d.z(), &reference, n, dim)?;
            for (a, b) in z_mean.iter_mut().zip(matmul(d.z(), &q, n, dim, dim)) {
                *a += b;
            }
        }
        reference.clone_from(&z_mean);
    }
    let m = T::from_usize_lossy(draws.len());
    let mut v = vec![T::zero(); n];
    let mut zeta = T::zero();
    for d in draws {
        for (a, &b) in v.iter_mut().zip(d.v()) {
            *a += b;
        }
        zeta += d.zeta();
    }
    v.iter_mut().for_each(|a| *a /= m);
    // a zero mean row (antipodal draws) falls back to the reference draw
    for i in 0..n {
        let row = &mut z_mean[i * dim..(i + 1) * dim];
        if row.iter().all(|x| *x == T::zero()) {
            row.copy_from_slice(draws[0].z_row(i));
        }
    }
    BlsmParams::from_unnormalized(v, z_mean, dim, zeta / m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draw(v0: f64, zeta: f64) -> BlsmParams<f64> {
        BlsmParams::new(
            vec![v0, -0.5, 0.2],
            vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            3,
            zeta,
        )
        .unwrap()
    }

    #[test]
    fn single_draw_equals_point_prediction() {
        let d = draw(0.3, 1.5);
        let pairs = [(0, 1), (1, 2), (2, 0)];
        let a = predict_links_samples(std::slice::from_ref(&d), &pairs, Link::Logistic).unwrap();
        let b = predict_links(&d, &pairs, Link::Logistic).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn two_draw_average_by_hand() {
        let d1 = draw(0.3, 1.5);
        let d2 = draw(-1.0, 0.5);
        let got = predict_links_samples(&[d1.clone(), d2.clone()], &[(0, 1)], Link::Logistic).unwrap()[0];
        let s = |x: f64| 1.0 / (1.0 + (-x).exp());
        // orthogonal positions: η = v_0 + v_1
        let want = 0.5 * (s(0.3 - 0.5) + s(-1.0 - 0.5));
        assert!((got - want).abs() < 1e-15);
        let swapped = predict_links_samples(&[d2, d1], &[(0, 1)], Link::Logistic).unwrap()[0];
        assert!((got - swapped).abs() < 1e-15);
    }

    #[test]
    fn empty_samples_rejected() {
        assert!(predict_links_samples::<f64>(&[], &[(0, 1)], Link::Logistic).is_err());
        assert!(predict_links(&draw(0.0, 1.0), &[(1, 1)], Link::Logistic).is_err());
    }

    #[test]
    fn posterior_mean_undoes_rotations() {
        use crate::linalg::random_orthogonal;
        use crate::rng::rng_from_seed;
        let base = draw(0.1, 2.0);
        let mut rng = rng_from_seed(5);
        let draws: Vec<_> = (0..4)
            .map(|_| base.rotated(&random_orthogonal::<f64>(3, &mut rng)).unwrap())
            .collect();
        let mean = posterior_mean(&draws).unwrap();
        let err = crate::eval::procrustes_error(mean.z(), base.z(), 3, 3).unwrap();
        assert!(err < 1e-9, "{err}");
        assert!((mean.zeta() - 2.0).abs() < 1e-12);
    }
}
