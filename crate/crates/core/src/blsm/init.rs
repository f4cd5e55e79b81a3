use log::warn;
use rand_distr::{Distribution, StandardNormal};

use super::model::{observed_density, BlsmParams};
use crate::ard::{ArdMatrix, TraitPartition};
use crate::error::{ensure_param, Result};
use crate::linalg::leading_eigenpairs;
use crate::rng::{rng_from_seed, Rng};
use crate::scalar::{logit, Scalar};

pub(crate) fn random_unit_rows<T: Scalar>(n: usize, dim: usize, rng: &mut Rng) -> Vec<T> {
    let mut z = Vec::with_capacity(n * dim);
    for _ in 0..n {
        loop {
            let row: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-8 {
                z.extend(row.iter().map(|x| T::c(x / norm)));
                break;
            }
        }
    }
    z
}

/// Starting values from the observed counts.
///
/// Row-normalized ARD profiles are embedded by classical MDS on their
/// pairwise cosine distances into `p + 1` dimensions and projected onto the
/// sphere. Intercepts are set so that `v_i + v̄` matches the logit of node
/// `i`'s observed density; `ζ = 1`. An all-zero ARD matrix falls back to
/// random positions.
pub fn initialize<T: Scalar>(y: &ArdMatrix, t: &TraitPartition, p: usize, seed: u64) -> Result<BlsmParams<T>> {
    ensure_param!(
        y.n() == t.n() && y.k() == t.k(),
        "ARD matrix {}x{} does not match traits n={} K={}",
        y.n(),
        y.k(),
        t.n(),
        t.k()
    );
    ensure_param!(p >= 1, "latent dimension p must be >= 1");
    let (n, kk, dim) = (y.n(), y.k(), p + 1);
    if kk < dim {
        warn!("K = {kk} traits is fewer than p + 1 = {dim}; positions are weakly identified");
    }
    let mut rng = rng_from_seed(seed);

    let density = observed_density(y, t);
    let half_mean_logit = logit(density) / 2.0;
    let v: Vec<T> = (0..n)
        .map(|i| {
            let reach: usize = (0..kk).map(|k| t.group_size_excluding(k, i)).sum();
            let count: u64 = y.row(i).iter().sum();
            let d = if reach == 0 {
                density
            } else {
                (count as f64 / reach as f64).clamp(1e-3, 1.0 - 1e-3)
            };
            T::c(logit(d) - half_mean_logit)
        })
        .collect();

    if y.total() == 0 {
        warn!("all-zero ARD matrix; initializing positions uniformly on the sphere");
        let z = random_unit_rows(n, dim, &mut rng);
        return BlsmParams::new(v, z, dim, T::one());
    }

    // unit-norm profiles; zero rows stay zero
    let mut profiles = vec![0.0f64; n * kk];
    for i in 0..n {
        let row = y.row(i);
        let total = (row.iter().sum::<u64>() as f64).max(1.0);
        let scaled: Vec<f64> = row.iter().map(|&c| c as f64 / total).collect();
        let norm = scaled.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for k in 0..kk {
                profiles[i * kk + k] = scaled[k] / norm;
            }
        }
    }
    let is_zero: Vec<bool> = (0..n)
        .map(|i| profiles[i * kk..(i + 1) * kk].iter().all(|&x| x == 0.0))
        .collect();

    // squared cosine distances, then double centering
    let mut b = vec![0.0f64; n * n];
    for i in 0..n {
        for j in i..n {
            let d = if i == j {
                0.0
            } else if is_zero[i] || is_zero[j] {
                1.0
            } else {
                let cos: f64 = (0..kk).map(|k| profiles[i * kk + k] * profiles[j * kk + k]).sum();
                1.0 - cos
            };
            b[i * n + j] = d * d;
            b[j * n + i] = d * d;
        }
    }
    let row_means: Vec<f64> = (0..n)
        .map(|i| b[i * n..(i + 1) * n].iter().sum::<f64>() / n as f64)
        .collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    for i in 0..n {
        for j in 0..n {
            b[i * n + j] = -0.5 * (b[i * n + j] - row_means[i] - row_means[j] + grand);
        }
    }

    let count = dim.min(n);
    let (vals, vecs) = leading_eigenpairs(&b, n, count, &mut rng);
    let fallback = random_unit_rows::<f64>(n, dim, &mut rng);
    let mut z = vec![T::zero(); n * dim];
    for i in 0..n {
        let mut row: Vec<f64> = (0..dim)
            .map(|c| {
                if c < count && vals[c] > 0.0 {
                    vecs[i * count + c] * vals[c].sqrt()
                } else {
                    0.0
                }
            })
            .collect();
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if is_zero[i] || !(norm > 1e-12) {
            row.copy_from_slice(&fallback[i * dim..(i + 1) * dim]);
        } else {
            row.iter_mut().for_each(|x| *x /= norm);
        }
        for c in 0..dim {
            z[i * dim + c] = T::c(row[c]);
        }
    }
    BlsmParams::from_unnormalized(v, z, dim, T::one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{dot, norm};

    #[test]
    fn identical_rows_get_identical_positions() {
        let t = TraitPartition::new(6, vec![vec![0, 1, 2], vec![3, 4, 5], vec![0, 5]]).unwrap();
        let counts = vec![2, 0, 1, 2, 0, 1, 0, 3, 1, 0, 2, 2, 1, 1, 0, 4, 0, 1];
        let y = ArdMatrix::from_counts(6, 3, counts, 2).unwrap();
        let p = initialize::<f64>(&y, &t, 2, 3).unwrap();
        assert_eq!(p.z_row(0), p.z_row(1));
        for i in 0..6 {
            assert!((norm(p.z_row(i)) - 1.0).abs() < 1e-12);
        }
        assert_eq!(p.zeta(), 1.0);
    }

    #[test]
    fn zero_ard_falls_back_to_random_sphere() {
        let t = TraitPartition::new(5, vec![vec![0, 1], vec![2, 3, 4]]).unwrap();
        let y = ArdMatrix::from_counts(5, 2, vec![0; 10], 1).unwrap();
        let p = initialize::<f64>(&y, &t, 2, 1).unwrap();
        for i in 0..5 {
            assert!((norm(p.z_row(i)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn planted_blocks_separate() {
        // two blocks, each linked only internally, one trait per block
        let n = 20;
        let t = TraitPartition::new(n, vec![(0..10).collect(), (10..20).collect()]).unwrap();
        let mut counts = vec![0u64; n * 2];
        for i in 0..n {
            let own = usize::from(i >= 10);
            counts[i * 2 + own] = 3 + (i % 3) as u64;
        }
        let y = ArdMatrix::from_counts(n, 2, counts, 1).unwrap();
        let p = initialize::<f64>(&y, &t, 2, 5).unwrap();
        let (mut within, mut across, mut nw, mut na) = (0.0, 0.0, 0, 0);
        for i in 0..n {
            for j in i + 1..n {
                let c = dot(p.z_row(i), p.z_row(j));
                if (i < 10) == (j < 10) {
                    within += c;
                    nw += 1;
                } else {
                    across += c;
                    na += 1;
                }
            }
        }
        assert!(within / nw as f64 > across / na as f64);
    }
}
