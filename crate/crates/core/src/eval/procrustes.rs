use crate::error::{Error, Result};
use crate::linalg::{at_b, matmul, svd_square, transpose};
use crate::scalar::Scalar;

/// Orthogonal `Q` minimizing `‖z_hat Q − z_true‖_F` (reflections allowed).
///
/// Both inputs are row-major `n × d`. With `M = z_hatᵀ z_true = U Σ Vᵀ`
/// the minimizer is `Q = U Vᵀ`.
pub fn procrustes_align<T: Scalar>(z_hat: &[T], z_true: &[T], n: usize, d: usize) -> Result<Vec<T>> {
    if z_hat.len() != n * d || z_true.len() != n * d {
        return Err(Error::Parameter(format!(
            "shape mismatch: {} and {} entries for {n}x{d}",
            z_hat.len(),
            z_true.len()
        )));
    }
    let m = at_b(z_hat, z_true, n, d, d);
    let svd = svd_square(&m, d);
    Ok(matmul(&svd.u, &transpose(&svd.v, d, d), d, d, d))
}

/// `min_Q ‖z_hat Q − z_true‖_F` over orthogonal `Q`.
pub fn procrustes_error<T: Scalar>(z_hat: &[T], z_true: &[T], n: usize, d: usize) -> Result<T> {
    let q = procrustes_align(z_hat, z_true, n, d)?;
    let aligned = matmul(z_hat, &q, n, d, d);
    Ok(aligned
        .iter()
        .zip(z_true)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<T>()
        .sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_orthogonal;
    use crate::rng::rng_from_seed;
    use rand_distr::{Distribution, StandardNormal};

    fn random_sphere_rows(n: usize, d: usize, seed: u64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        let mut z: Vec<f64> = (0..n * d).map(|_| StandardNormal.sample(&mut rng)).collect();
        for row in z.chunks_mut(d) {
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            row.iter_mut().for_each(|x| *x /= norm);
        }
        z
    }

    #[test]
    fn identical_inputs_have_zero_error() {
        let z = random_sphere_rows(20, 3, 1);
        assert!(procrustes_error(&z, &z, 20, 3).unwrap() < 1e-12);
    }

    #[test]
    fn rotation_is_removed() {
        let z = random_sphere_rows(30, 3, 2);
        let mut rng = rng_from_seed(5);
        let q = random_orthogonal::<f64>(3, &mut rng);
        let zq = matmul(&z, &q, 30, 3, 3);
        assert!(procrustes_error(&zq, &z, 30, 3).unwrap() < 1e-10);
    }

    #[test]
    fn works_in_single_precision() {
        let z: Vec<f32> = random_sphere_rows(10, 3, 4).iter().map(|&x| x as f32).collect();
        assert!(procrustes_error(&z, &z, 10, 3).unwrap() < 1e-5);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let z = random_sphere_rows(4, 3, 1);
        assert!(matches!(procrustes_error(&z, &z[..9], 4, 3), Err(Error::Parameter(_))));
    }
}
