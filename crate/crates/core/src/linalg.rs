//! Small dense linear algebra over [`Scalar`], row-major storage.
//!
//! Only what the estimators need: Jacobi SVD and eigensolvers for the tiny
//! `(p+1) × (p+1)` matrices of Procrustes alignment, and block subspace
//! iteration for the leading eigenvectors of an `n × n` MDS Gram matrix.

use rand_distr::{Distribution, StandardNormal};

use crate::rng::Rng;
use crate::scalar::Scalar;

/// `C = Aᵀ B` for row-major `A: m × d`, `B: m × e`; returns `d × e`.
pub fn at_b<T: Scalar>(a: &[T], b: &[T], m: usize, d: usize, e: usize) -> Vec<T> {
    debug_assert_eq!(a.len(), m * d);
    debug_assert_eq!(b.len(), m * e);
    let mut c = vec![T::zero(); d * e];
    for r in 0..m {
        let ar = &a[r * d..(r + 1) * d];
        let br = &b[r * e..(r + 1) * e];
        for (i, &x) in ar.iter().enumerate() {
            for (j, &y) in br.iter().enumerate() {
                c[i * e + j] += x * y;
            }
        }
    }
    c
}

/// `C = A B` for row-major `A: m × d`, `B: d × e`.
pub fn matmul<T: Scalar>(a: &[T], b: &[T], m: usize, d: usize, e: usize) -> Vec<T> {
    let mut c = vec![T::zero(); m * e];
    for r in 0..m {
        for k in 0..d {
            let x = a[r * d + k];
            for j in 0..e {
                c[r * e + j] += x * b[k * e + j];
            }
        }
    }
    c
}

pub fn transpose<T: Scalar>(a: &[T], m: usize, d: usize) -> Vec<T> {
    let mut t = vec![T::zero(); m * d];
    for r in 0..m {
        for c in 0..d {
            t[c * m + r] = a[r * d + c];
        }
    }
    t
}

pub fn identity<T: Scalar>(d: usize) -> Vec<T> {
    let mut m = vec![T::zero(); d * d];
    for i in 0..d {
        m[i * d + i] = T::one();
    }
    m
}

/// Singular value decomposition `A = U diag(s) Vᵀ` of a square `d × d`
/// matrix by one-sided Jacobi rotations. `U` and `V` are orthogonal even
/// when `A` is rank deficient.
pub struct Svd<T> {
    pub u: Vec<T>,
    pub s: Vec<T>,
    pub v: Vec<T>,
}

pub fn svd_square<T: Scalar>(a: &[T], d: usize) -> Svd<T> {
    let mut w = a.to_vec();
    let mut v = identity::<T>(d);
    let tol = T::epsilon() * T::c(4.0);
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..d {
            for q in p + 1..d {
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for r in 0..d {
                    let x = w[r * d + p];
                    let y = w[r * d + q];
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma.abs() <= tol * (alpha * beta).sqrt() || gamma == T::zero() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::c(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for r in 0..d {
                    let x = w[r * d + p];
                    let y = w[r * d + q];
                    w[r * d + p] = c * x - s * y;
                    w[r * d + q] = s * x + c * y;
                    let x = v[r * d + p];
                    let y = v[r * d + q];
                    v[r * d + p] = c * x - s * y;
                    v[r * d + q] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut s = vec![T::zero(); d];
    let mut u = vec![T::zero(); d * d];
    let scale = w.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let mut defined = vec![false; d];
    for j in 0..d {
        let norm = (0..d).map(|r| w[r * d + j] * w[r * d + j]).sum::<T>().sqrt();
        s[j] = norm;
        if norm > scale * T::epsilon() * T::c(16.0) && norm > T::zero() {
            for r in 0..d {
                u[r * d + j] = w[r * d + j] / norm;
            }
            defined[j] = true;
        }
    }
    complete_orthonormal_columns(&mut u, d, &defined);
    Svd { u, s, v }
}

/// Fills the undefined columns of `u` with an orthonormal completion.
fn complete_orthonormal_columns<T: Scalar>(u: &mut [T], d: usize, defined: &[bool]) {
    let mut basis: Vec<Vec<T>> = (0..d)
        .filter(|&j| defined[j])
        .map(|j| (0..d).map(|r| u[r * d + j]).collect())
        .collect();
    let mut candidate = 0;
    for j in (0..d).filter(|&j| !defined[j]) {
        loop {
            let mut e = vec![T::zero(); d];
            e[candidate % d] = T::one();
            candidate += 1;
            for b in &basis {
                let proj: T = e.iter().zip(b).map(|(&x, &y)| x * y).sum();
                for (x, &y) in e.iter_mut().zip(b) {
                    *x -= proj * y;
                }
            }
            let norm = e.iter().map(|&x| x * x).sum::<T>().sqrt();
            if norm > T::c(1e-3) {
                for r in 0..d {
                    u[r * d + j] = e[r] / norm;
                }
                basis.push(e.iter().map(|&x| x / norm).collect());
                break;
            }
        }
    }
}

/// Eigen-decomposition of a small symmetric matrix by cyclic Jacobi.
/// Returns eigenvalues (descending) and eigenvectors as columns.
pub fn sym_eigen<T: Scalar>(a: &[T], d: usize) -> (Vec<T>, Vec<T>) {
    let mut m = a.to_vec();
    let mut v = identity::<T>(d);
    for _sweep in 0..100 {
        let off: T = (0..d)
            .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * d + j] * m[i * d + j])
            .sum();
        if off <= T::min_positive_value() {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = m[p * d + q];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[q * d + q] - m[p * d + p]) / (T::c(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (T::one() + theta * theta).sqrt());
                let t = if theta == T::zero() { T::one() } else { t };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                for k in 0..d {
                    let mkp = m[k * d + p];
                    let mkq = m[k * d + q];
                    m[k * d + p] = c * mkp - s * mkq;
                    m[k * d + q] = s * mkp + c * mkq;
                }
                for k in 0..d {
                    let mpk = m[p * d + k];
                    let mqk = m[q * d + k];
                    m[p * d + k] = c * mpk - s * mqk;
                    m[q * d + k] = s * mpk + c * mqk;
                }
                for k in 0..d {
                    let vkp = v[k * d + p];
                    let vkq = v[k * d + q];
                    v[k * d + p] = c * vkp - s * vkq;
                    v[k * d + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        m[b * d + b]
            .partial_cmp(&m[a * d + a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals = order.iter().map(|&i| m[i * d + i]).collect();
    let mut vecs = vec![T::zero(); d * d];
    for (new, &old) in order.iter().enumerate() {
        for r in 0..d {
            vecs[r * d + new] = v[r * d + old];
        }
    }
    (vals, vecs)
}

/// Orthonormalizes the `r` columns of the row-major `n × r` block in place
/// (modified Gram–Schmidt). Columns that collapse are replaced by zeros.
fn orthonormalize_columns<T: Scalar>(x: &mut [T], n: usize, r: usize) {
    for j in 0..r {
        for prev in 0..j {
            let proj: T = (0..n).map(|i| x[i * r + j] * x[i * r + prev]).sum();
            for i in 0..n {
                let sub = proj * x[i * r + prev];
                x[i * r + j] -= sub;
            }
        }
        let norm = (0..n).map(|i| x[i * r + j] * x[i * r + j]).sum::<T>().sqrt();
        let inv = if norm > T::zero() { T::one() / norm } else { T::zero() };
        for i in 0..n {
            x[i * r + j] *= inv;
        }
    }
}

/// Leading eigenpairs (by algebraic value) of a symmetric `n × n` matrix.
///
/// Block subspace iteration on `block ≥ count` vectors followed by a
/// Rayleigh–Ritz step. Returns `count` eigenvalues (descending) and the
/// corresponding eigenvectors as the columns of a row-major `n × count` block.
pub fn leading_eigenpairs<T: Scalar>(a: &[T], n: usize, count: usize, rng: &mut Rng) -> (Vec<T>, Vec<T>) {
    let block = (count + 4).min(n);
    let mut x: Vec<T> = (0..n * block).map(|_| T::c(StandardNormal.sample(rng))).collect();
    orthonormalize_columns(&mut x, n, block);
    let mut prev_ritz: Vec<T> = vec![T::zero(); block];
    for _ in 0..500 {
        let mut y = matmul(a, &x, n, n, block);
        orthonormalize_columns(&mut y, n, block);
        x = y;
        let ax = matmul(a, &x, n, n, block);
        let h = at_b(&x, &ax, n, block, block);
        let (ritz, _) = sym_eigen(&h, block);
        let change = ritz
            .iter()
            .zip(&prev_ritz)
            .take(count)
            .map(|(a, b)| (*a - *b).abs())
            .fold(T::zero(), T::max);
        let scale = ritz.iter().fold(T::one(), |m, v| m.max(v.abs()));
        prev_ritz = ritz;
        if change <= scale * T::c(1e-9) {
            break;
        }
    }
    let ax = matmul(a, &x, n, n, block);
    let h = at_b(&x, &ax, n, block, block);
    let (vals, vecs) = sym_eigen(&h, block);
    let rotated = matmul(&x, &vecs, n, block, block);
    let mut out = vec![T::zero(); n * count];
    for i in 0..n {
        out[i * count..(i + 1) * count].copy_from_slice(&rotated[i * block..i * block + count]);
    }
    (vals[..count].to_vec(), out)
}

/// Haar-distributed orthogonal `d × d` matrix (either determinant).
pub fn random_orthogonal<T: Scalar>(d: usize, rng: &mut Rng) -> Vec<T> {
    loop {
        let mut m: Vec<T> = (0..d * d).map(|_| T::c(StandardNormal.sample(rng))).collect();
        orthonormalize_columns(&mut m, d, d);
        let ok = (0..d).all(|j| (0..d).map(|i| m[i * d + j] * m[i * d + j]).sum::<T>() > T::c(0.5));
        if ok {
            return m;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn reconstruct(svd: &Svd<f64>, d: usize) -> Vec<f64> {
        let mut us = svd.u.clone();
        for r in 0..d {
            for c in 0..d {
                us[r * d + c] *= svd.s[c];
            }
        }
        matmul(&us, &transpose(&svd.v, d, d), d, d, d)
    }

    fn assert_orthogonal(m: &[f64], d: usize) {
        let g = at_b(m, m, d, d, d);
        for i in 0..d {
            for j in 0..d {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g[i * d + j] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn svd_reconstructs_random_matrices() {
        let mut rng = rng_from_seed(1);
        for d in 1..=5 {
            let a: Vec<f64> = (0..d * d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let svd = svd_square(&a, d);
            let back = reconstruct(&svd, d);
            for (x, y) in a.iter().zip(&back) {
                assert!((x - y).abs() < 1e-12);
            }
            assert_orthogonal(&svd.u, d);
            assert_orthogonal(&svd.v, d);
        }
    }

    #[test]
    fn svd_handles_rank_deficiency() {
        let a = [1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 0.0, 0.0];
        let svd = svd_square(&a, 3);
        assert_orthogonal(&svd.u, 3);
        let back = reconstruct(&svd, 3);
        for (x, y) in a.iter().zip(&back) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn sym_eigen_sorted_and_exact() {
        let a = [2.0_f64, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 5.0];
        let (vals, vecs) = sym_eigen(&a, 3);
        assert!((vals[0] - 5.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
        assert!((vals[2] - 1.0).abs() < 1e-12);
        assert_orthogonal(&vecs, 3);
    }

    #[test]
    fn subspace_iteration_finds_top_eigenvectors() {
        let n = 40;
        let mut rng = rng_from_seed(3);
        let q = random_orthogonal::<f64>(n, &mut rng);
        let spectrum: Vec<f64> = (0..n)
            .map(|i| if i < 3 { 10.0 - i as f64 } else { 0.1 / (i as f64) })
            .collect();
        let mut qd = q.clone();
        for r in 0..n {
            for c in 0..n {
                qd[r * n + c] *= spectrum[c];
            }
        }
        let a = matmul(&qd, &transpose(&q, n, n), n, n, n);
        let (vals, vecs) = leading_eigenpairs(&a, n, 3, &mut rng);
        for (v, want) in vals.iter().zip([10.0, 9.0, 8.0]) {
            assert!((v - want).abs() < 1e-8);
        }
        for c in 0..3 {
            let overlap: f64 = (0..n).map(|r| vecs[r * 3 + c] * q[r * n + c]).sum();
            assert!((overlap.abs() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn random_orthogonal_is_orthogonal() {
        let mut rng = rng_from_seed(9);
        let q = random_orthogonal::<f64>(4, &mut rng);
        assert_orthogonal(&q, 4);
    }
}
