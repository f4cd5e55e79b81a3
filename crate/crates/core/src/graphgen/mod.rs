//! Undirected graphs and the synthetic generators used by the experiments.

mod generators;
mod stats;

pub use generators::{
    add_negbin_weights, gen_interbank, gen_scale_free, gen_small_world, InterbankConfig, SizeDistribution,
};
pub use stats::{graph_stats, hill_tail_exponent, GraphStats};

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Simple undirected graph with optional integer edge weights and node sizes.
///
/// Edges are stored once, in canonical `i < j` order, sorted lexicographically.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    weights: Option<Vec<u32>>,
    sizes: Option<Vec<f64>>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from unordered pairs. Pairs may be given in either
    /// orientation; self-loops, duplicates and out-of-range endpoints are
    /// rejected.
    pub fn new(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in pairs {
            if a >= n || b >= n {
                return Err(Error::Parameter(format!("edge ({a},{b}) out of range for n={n}")));
            }
            if a == b {
                return Err(Error::Parameter(format!("self-loop at node {a}")));
            }
            let e = (a.min(b), a.max(b));
            if !set.insert(e) {
                return Err(Error::Parameter(format!("duplicate edge ({},{})", e.0, e.1)));
            }
        }
        Ok(Self::from_canonical(n, set.into_iter().collect()))
    }

    /// `edges` must already be sorted, unique and canonical.
    pub(crate) fn from_canonical(n: usize, edges: Vec<(usize, usize)>) -> Self {
        debug_assert!(edges.windows(2).all(|w| w[0] < w[1]));
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j) in &edges {
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Self {
            n,
            edges,
            weights: None,
            sizes: None,
            adjacency,
        }
    }

    pub fn empty(n: usize) -> Self {
        Self::from_canonical(n, Vec::new())
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        Self::from_canonical(n, edges)
    }

    /// Attaches one weight per edge (aligned with [`Graph::edges`]).
    pub fn with_weights(mut self, weights: Vec<u32>) -> Result<Self> {
        if weights.len() != self.edges.len() {
            return Err(Error::Parameter(format!(
                "{} weights for {} edges",
                weights.len(),
                self.edges.len()
            )));
        }
        if weights.contains(&0) {
            return Err(Error::Parameter("edge weights must be >= 1".into()));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn with_sizes(mut self, sizes: Vec<f64>) -> Result<Self> {
        if sizes.len() != self.n {
            return Err(Error::Parameter(format!("{} sizes for {} nodes", sizes.len(), self.n)));
        }
        if sizes.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::Parameter("node sizes must be positive and finite".into()));
        }
        self.sizes = Some(sizes);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn weights(&self) -> Option<&[u32]> {
        self.weights.as_deref()
    }

    pub fn is_weighted(&self) -> bool {
        self.weights.is_some()
    }

    pub fn sizes(&self) -> Option<&[f64]> {
        self.sizes.as_deref()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.adjacency[i].binary_search(&j).is_ok()
    }

    /// Weight of edge `{i, j}`; 0 when absent, 1 for unweighted edges.
    pub fn weight(&self, i: usize, j: usize) -> u32 {
        let e = (i.min(j), i.max(j));
        match self.edges.binary_search(&e) {
            Ok(idx) => self.weights.as_ref().map_or(1, |w| w[idx]),
            Err(_) => 0,
        }
    }

    /// Iterator over `(i, j, weight)` with weight 1 for unweighted graphs.
    pub fn weighted_edges(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        self.edges
            .iter()
            .enumerate()
            .map(move |(idx, &(i, j))| (i, j, self.weights.as_ref().map_or(1, |w| w[idx])))
    }

    /// Dense symmetric weight matrix, row-major `n * n`, zero on the diagonal.
    pub fn weight_matrix(&self) -> Vec<u32> {
        let n = self.n;
        let mut m = vec![0u32; n * n];
        for (i, j, w) in self.weighted_edges() {
            m[i * n + j] = w;
            m[j * n + i] = w;
        }
        m
    }

    /// Number of unordered node pairs.
    pub fn pair_count(&self) -> usize {
        self.n * self.n.saturating_sub(1) / 2
    }
}

/// Position of pair `(i, j)`, `i < j`, in the canonical pair order
/// `(0,1), (0,2), ..., (0,n-1), (1,2), ...`.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// All unordered pairs in canonical order.
pub fn all_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}
