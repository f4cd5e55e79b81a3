//! Trait groups, aggregated relational data, and count corruption.

mod corrupt;
mod traits;

pub use corrupt::{inject_dp_noise, inject_misreporting, laplace_sample};
pub use traits::{assign_traits, TraitPartition};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphgen::Graph;

/// How an ARD matrix was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Clean,
    Misreported,
    DpNoised,
}

/// Record kept alongside an ARD matrix (written as a JSON sidecar).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArdMeta {
    pub provenance: Provenance,
    pub rho: Option<f64>,
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
    /// Largest number of traits any node carries; the per-row L1 sensitivity
    /// of the counts to a single edge.
    pub sensitivity: u32,
}

/// `n × K` matrix of non-negative counts `y_ik`.
#[derive(Clone, Debug, PartialEq)]
pub struct ArdMatrix {
    n: usize,
    k: usize,
    counts: Vec<u64>,
    meta: ArdMeta,
    misreporters: Option<Vec<bool>>,
}

impl ArdMatrix {
    /// Wraps row-major counts as a clean matrix.
    pub fn from_counts(n: usize, k: usize, counts: Vec<u64>, sensitivity: u32) -> Result<Self> {
        if counts.len() != n * k {
            return Err(Error::Parameter(format!(
                "{} counts for a {n}x{k} matrix",
                counts.len()
            )));
        }
        Ok(Self {
            n,
            k,
            counts,
            meta: ArdMeta {
                provenance: Provenance::Clean,
                rho: None,
                epsilon: None,
                seed: None,
                sensitivity,
            },
            misreporters: None,
        })
    }

    /// Builds a matrix from signed values, rejecting negative counts.
    pub fn from_signed(n: usize, k: usize, values: &[i64], sensitivity: u32) -> Result<Self> {
        if let Some(v) = values.iter().find(|&&v| v < 0) {
            return Err(Error::Data(format!("negative ARD count {v}")));
        }
        Self::from_counts(n, k, values.iter().map(|&v| v as u64).collect(), sensitivity)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize) -> u64 {
        self.counts[i * self.k + k]
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.counts[i * self.k..(i + 1) * self.k]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn meta(&self) -> &ArdMeta {
        &self.meta
    }

    pub fn provenance(&self) -> Provenance {
        self.meta.provenance
    }

    pub fn misreporters(&self) -> Option<&[bool]> {
        self.misreporters.as_deref()
    }

    pub fn with_meta(mut self, meta: ArdMeta) -> Self {
        self.meta = meta;
        self
    }

    pub(crate) fn with_misreporters(mut self, flags: Vec<bool>) -> Self {
        self.misreporters = Some(flags);
        self
    }

    /// Keeps only the given respondent rows, in order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let counts = rows.iter().flat_map(|&i| self.row(i).iter().copied()).collect();
        Self {
            n: rows.len(),
            k: self.k,
            counts,
            meta: self.meta.clone(),
            misreporters: self.misreporters.as_ref().map(|f| rows.iter().map(|&i| f[i]).collect()),
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Aggregates adjacency into trait counts: `y_ik = Σ_{j ∈ G_k, j ≠ i} w_ij`.
pub fn compute_ard(g: &Graph, t: &TraitPartition) -> Result<ArdMatrix> {
    if g.n() != t.n() {
        return Err(Error::Parameter(format!(
            "graph has {} nodes but trait partition covers {}",
            g.n(),
            t.n()
        )));
    }
    let k = t.k();
    let mut counts = vec![0u64; g.n() * k];
    for (i, j, w) in g.weighted_edges() {
        for &trait_k in t.traits_of(j) {
            counts[i * k + trait_k] += u64::from(w);
        }
        for &trait_k in t.traits_of(i) {
            counts[j * k + trait_k] += u64::from(w);
        }
    }
    ArdMatrix::from_counts(g.n(), k, counts, t.max_traits_per_node() as u32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_graph_counts() {
        let g = Graph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let t = TraitPartition::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let y = compute_ard(&g, &t).unwrap();
        assert_eq!(y.counts(), &[1, 0, 1, 1, 1, 1, 0, 1]);
        assert_eq!(y.provenance(), Provenance::Clean);
    }

    #[test]
    fn empty_graph_gives_zero_counts() {
        let t = TraitPartition::new(5, vec![vec![0, 1, 2], vec![3, 4]]).unwrap();
        let y = compute_ard(&Graph::empty(5), &t).unwrap();
        assert!(y.counts().iter().all(|&c| c == 0));
    }

    #[test]
    fn single_full_trait_gives_weighted_degree() {
        let g = Graph::new(4, [(0, 1), (0, 2), (2, 3)])
            .unwrap()
            .with_weights(vec![2, 1, 5])
            .unwrap();
        let t = TraitPartition::new(4, vec![vec![0, 1, 2, 3]]).unwrap();
        let y = compute_ard(&g, &t).unwrap();
        assert_eq!(y.counts(), &[3, 2, 6, 5]);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let t = TraitPartition::new(3, vec![vec![0]]).unwrap();
        assert!(matches!(compute_ard(&Graph::empty(4), &t), Err(Error::Parameter(_))));
    }

    #[test]
    fn negative_counts_are_data_errors() {
        assert!(matches!(ArdMatrix::from_signed(1, 2, &[1, -1], 1), Err(Error::Data(_))));
    }
}
