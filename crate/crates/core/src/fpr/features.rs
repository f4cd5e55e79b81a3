use crate::ard::TraitPartition;
use crate::error::{ensure_param, Result};
use crate::scalar::Scalar;

/// Pair features `X_ij`: a global intercept, additive node effects `a_i + a_j`,
/// and one indicator per unordered trait pair `{k, l}` counting how many of
/// `(i ∈ G_k, j ∈ G_l)` and `(i ∈ G_l, j ∈ G_k)` hold.
///
/// Coordinates are laid out as `[intercept, node 0 … node n-1, pair (0,0),
/// (0,1) … (K-1,K-1)]`, so `d = 1 + n + K(K+1)/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    traits: TraitPartition,
}

impl FeatureMap {
    pub fn new(traits: TraitPartition) -> Self {
        Self { traits }
    }

    pub fn traits(&self) -> &TraitPartition {
        &self.traits
    }

    pub fn n(&self) -> usize {
        self.traits.n()
    }

    pub fn k(&self) -> usize {
        self.traits.k()
    }

    pub fn dim(&self) -> usize {
        1 + self.n() + self.k() * (self.k() + 1) / 2
    }

    pub fn node_index(&self, i: usize) -> usize {
        1 + i
    }

    /// Coordinate of the unordered trait pair `{k, l}`.
    pub fn pair_index(&self, k: usize, l: usize) -> usize {
        let (a, b) = if k <= l { (k, l) } else { (l, k) };
        let kk = self.k();
        1 + self.n() + a * kk - a * (a.saturating_sub(1)) / 2 - a + b
    }

    /// Human-readable coordinate names: `intercept`, `node:i`, `traitpair:k:l`.
    pub fn names(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.dim());
        out.push("intercept".to_string());
        out.extend((0..self.n()).map(|i| format!("node:{i}")));
        for k in 0..self.k() {
            for l in k..self.k() {
                out.push(format!("traitpair:{k}:{l}"));
            }
        }
        out
    }

    /// Dense feature vector of a pair.
    pub fn features(&self, i: usize, j: usize) -> Result<Vec<u8>> {
        ensure_param!(i != j && i < self.n() && j < self.n(), "invalid pair ({i}, {j})");
        let mut x = vec![0u8; self.dim()];
        x[0] = 1;
        x[self.node_index(i)] += 1;
        x[self.node_index(j)] += 1;
        for &k in self.traits.traits_of(i) {
            for &l in self.traits.traits_of(j) {
                x[self.pair_index(k, l)] += 1;
            }
        }
        Ok(x)
    }

    /// Symmetric `K × K` matrix of trait-pair coefficients.
    pub(crate) fn pair_matrix<T: Scalar>(&self, beta: &[T]) -> Vec<T> {
        let kk = self.k();
        let mut b = vec![T::zero(); kk * kk];
        for k in 0..kk {
            for l in k..kk {
                let v = beta[self.pair_index(k, l)];
                b[k * kk + l] = v;
                b[l * kk + k] = v;
            }
        }
        b
    }

    /// `X_ijᵀ β` using a precomputed [`FeatureMap::pair_matrix`].
    #[inline]
    pub(crate) fn eta_with<T: Scalar>(&self, beta: &[T], pairs: &[T], i: usize, j: usize) -> T {
        let kk = self.k();
        let mut eta = beta[0] + beta[1 + i] + beta[1 + j];
        let tj = self.traits.traits_of(j);
        for &k in self.traits.traits_of(i) {
            let row = &pairs[k * kk..(k + 1) * kk];
            for &l in tj {
                eta += row[l];
            }
        }
        eta
    }

    /// `X_ijᵀ β`.
    pub fn eta<T: Scalar>(&self, beta: &[T], i: usize, j: usize) -> T {
        self.eta_with(beta, &self.pair_matrix(beta), i, j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map() -> FeatureMap {
        let t = TraitPartition::new(5, vec![vec![0, 1], vec![1, 2, 3], vec![3, 4]]).unwrap();
        FeatureMap::new(t)
    }

    #[test]
    fn layout_and_names() {
        let f = map();
        assert_eq!(f.dim(), 1 + 5 + 6);
        let names = f.names();
        assert_eq!(names.len(), f.dim());
        for k in 0..3 {
            for l in 0..3 {
                let idx = f.pair_index(k, l);
                let (a, b) = (k.min(l), k.max(l));
                assert_eq!(names[idx], format!("traitpair:{a}:{b}"));
            }
        }
    }

    #[test]
    fn features_symmetric_and_bounded() {
        let f = map();
        for i in 0..5 {
            for j in 0..5 {
                if i == j {
                    continue;
                }
                let x = f.features(i, j).unwrap();
                assert_eq!(x, f.features(j, i).unwrap());
                assert!(x.iter().all(|&c| c <= 2));
            }
        }
        // node 1 ∈ {0,1}, node 3 ∈ {1,2}: ordered pairs (0,1),(0,2),(1,1),(1,2)
        let x = f.features(1, 3).unwrap();
        assert_eq!(x[f.pair_index(0, 1)], 1);
        assert_eq!(x[f.pair_index(0, 2)], 1);
        assert_eq!(x[f.pair_index(1, 1)], 1);
        assert_eq!(x[f.pair_index(1, 2)], 1);
    }

    #[test]
    fn eta_matches_dense_dot_product() {
        let f = map();
        let beta: Vec<f64> = (0..f.dim()).map(|c| ((c * 37 % 11) as f64 - 5.0) / 7.0).collect();
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    let x = f.features(i, j).unwrap();
                    let dense: f64 = x.iter().zip(&beta).map(|(&a, b)| a as f64 * b).sum();
                    assert!((f.eta(&beta, i, j) - dense).abs() < 1e-12);
                }
            }
        }
    }
}
