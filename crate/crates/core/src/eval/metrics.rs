use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphgen::Graph;
use crate::scalar::Scalar;

/// Mann–Whitney AUC of `scores` against binary `labels`; ties count one half.
pub fn auc_from_labels<T: Scalar>(labels: &[bool], scores: &[T]) -> Result<f64> {
    if labels.len() != scores.len() {
        return Err(Error::Parameter(format!(
            "{} labels but {} scores",
            labels.len(),
            scores.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Data("NaN score".into()));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Parameter(
            "AUC undefined without both positive and negative pairs".into(),
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("NaN filtered"));
    // average ranks over tie blocks, 1-based
    let mut positive_rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let mid_rank = (start + 1 + end) as f64 / 2.0;
        let pos_in_block = order[start..end].iter().filter(|&&i| labels[i]).count();
        positive_rank_sum += mid_rank * pos_in_block as f64;
        start = end;
    }
    let p = positives as f64;
    let u = positive_rank_sum - p * (p + 1.0) / 2.0;
    Ok(u / (p * negatives as f64))
}

/// AUC of link scores given for every unordered pair in canonical order.
pub fn auc<T: Scalar>(truth: &Graph, predicted: &[T]) -> Result<f64> {
    if predicted.len() != truth.pair_count() {
        return Err(Error::Parameter(format!(
            "expected {} pair scores, got {}",
            truth.pair_count(),
            predicted.len()
        )));
    }
    let labels: Vec<bool> = crate::graphgen::all_pairs(truth.n())
        .map(|(i, j)| truth.has_edge(i, j))
        .collect();
    auc_from_labels(&labels, predicted)
}

/// Root mean squared difference.
pub fn rmse<T: Scalar>(truth: &[T], predicted: &[T]) -> Result<T> {
    if truth.len() != predicted.len() {
        return Err(Error::Parameter(format!(
            "length mismatch: {} vs {}",
            truth.len(),
            predicted.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::Parameter("RMSE of empty vectors".into()));
    }
    let sse: T = truth.iter().zip(predicted).map(|(&a, &b)| (a - b) * (a - b)).sum();
    Ok((sse / T::from_usize_lossy(truth.len())).sqrt())
}

/// What an RMSE value compares against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RmseKind {
    /// Link probabilities against 0/1 adjacency.
    Probability,
    /// Expected weights against observed edge weights.
    Weight,
}

/// Evaluation of one fitted method on one synthetic replication.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method: String,
    pub n: usize,
    pub k: usize,
    pub rho: f64,
    pub epsilon: Option<f64>,
    pub seed: u64,
    pub auc: f64,
    pub rmse: f64,
    pub rmse_kind: RmseKind,
    pub procrustes_error: Option<f64>,
    pub runtime_seconds: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_reversed_rankings() {
        let g = Graph::new(4, [(0, 1), (2, 3)]).unwrap();
        let perfect: Vec<f64> = crate::graphgen::all_pairs(4)
            .map(|(i, j)| if g.has_edge(i, j) { 1.0 } else { 0.0 })
            .collect();
        assert_eq!(auc(&g, &perfect).unwrap(), 1.0);
        let reversed: Vec<f64> = perfect.iter().map(|p| 1.0 - p).collect();
        assert_eq!(auc(&g, &reversed).unwrap(), 0.0);
        let flat = vec![0.3; 6];
        assert_eq!(auc(&g, &flat).unwrap(), 0.5);
    }

    #[test]
    fn auc_undefined_for_empty_or_complete() {
        let scores = vec![0.5_f64; 6];
        assert!(auc(&Graph::empty(4), &scores).is_err());
        assert!(auc(&Graph::complete(4), &scores).is_err());
        assert!(auc(&Graph::empty(4), &scores[..3]).is_err());
    }

    #[test]
    fn auc_against_pairwise_count() {
        let labels = [true, false, true, false, false, true];
        let scores = [0.9_f32, 0.1, 0.4, 0.4, 0.7, 0.2];
        let mut wins = 0.0;
        let mut total = 0.0;
        for (i, &li) in labels.iter().enumerate() {
            for (j, &lj) in labels.iter().enumerate() {
                if li && !lj {
                    total += 1.0;
                    wins += if scores[i] > scores[j] {
                        1.0
                    } else if scores[i] == scores[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        assert!((auc_from_labels(&labels, &scores).unwrap() - wins / total).abs() < 1e-12);
    }

    #[test]
    fn rmse_cases() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        let a = [0.2, 0.5, 0.9];
        let b = [0.1, 0.7, 0.4];
        let base = rmse(&a, &b).unwrap();
        let scaled: Vec<f64> = a.iter().zip(&b).map(|(x, y)| y + 3.0 * (x - y)).collect();
        assert!((rmse(&scaled, &b).unwrap() - 3.0 * base).abs() < 1e-12);
        assert!(matches!(rmse(&[1.0], &[1.0, 2.0]), Err(Error::Parameter(_))));
    }
}
