use std::collections::VecDeque;

use crate::graphgen::Graph;

/// Brandes betweenness on the unweighted graph, normalized by `(n-1)(n-2)/2`.
pub fn betweenness(g: &Graph) -> Vec<f64> {
    let n = g.n();
    let mut cb = vec![0.0; n];
    let mut stack = Vec::with_capacity(n);
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![-1i64; n];
    let mut delta = vec![0.0; n];
    let mut queue = VecDeque::new();

    for s in 0..n {
        stack.clear();
        for v in 0..n {
            preds[v].clear();
            sigma[v] = 0.0;
            dist[v] = -1;
            delta[v] = 0.0;
        }
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in g.neighbors(v) {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                cb[w] += delta[w];
            }
        }
    }

    // every unordered pair was counted from both endpoints
    let pairs = if n > 2 {
        (n - 1) as f64 * (n - 2) as f64 / 2.0
    } else {
        1.0
    };
    cb.iter().map(|&c| c / 2.0 / pairs).collect()
}

/// One line of a systemic-risk table.
#[derive(Clone, Debug, PartialEq)]
pub struct RiskRow {
    pub node: usize,
    pub degree: usize,
    pub betweenness: f64,
    pub score: f64,
    /// 1 = riskiest.
    pub rank: usize,
}

/// Nodes ordered by composite risk score, riskiest first.
#[derive(Clone, Debug, PartialEq)]
pub struct RiskTable {
    pub rows: Vec<RiskRow>,
}

impl RiskTable {
    /// Column names of the exported table.
    pub const HEADER: [&'static str; 4] = ["Node ID", "Degree", "Betweenness", "Risk Rank"];
}

/// Ranks nodes by `w_deg · deg/max_deg + w_btw · btw/max_btw`; a term whose
/// maximum is zero is dropped. Ties are broken by node id.
pub fn risk_rank(g: &Graph, w_deg: f64, w_btw: f64) -> crate::Result<RiskTable> {
    if !(w_deg >= 0.0 && w_btw >= 0.0) || (w_deg == 0.0 && w_btw == 0.0) {
        return Err(crate::Error::Parameter(format!(
            "risk weights must be non-negative and not both zero, got ({w_deg}, {w_btw})"
        )));
    }
    let degrees = g.degrees();
    let btw = betweenness(g);
    let max_deg = degrees.iter().copied().max().unwrap_or(0) as f64;
    let max_btw = btw.iter().copied().fold(0.0, f64::max);

    let mut rows: Vec<RiskRow> = (0..g.n())
        .map(|i| {
            let mut score = 0.0;
            if max_deg > 0.0 {
                score += w_deg * degrees[i] as f64 / max_deg;
            }
            if max_btw > 0.0 {
                score += w_btw * btw[i] / max_btw;
            }
            RiskRow {
                node: i,
                degree: degrees[i],
                betweenness: btw[i],
                score,
                rank: 0,
            }
        })
        .collect();
    rows.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.node.cmp(&b.node)));
    for (idx, row) in rows.iter_mut().enumerate() {
        row.rank = idx + 1;
    }
    Ok(RiskTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star(n: usize) -> Graph {
        Graph::new(n, (1..n).map(|i| (0, i))).unwrap()
    }

    #[test]
    fn star_center_has_unit_betweenness() {
        let b = betweenness(&star(5));
        assert!((b[0] - 1.0).abs() < 1e-12);
        assert!(b[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn complete_graph_has_zero_betweenness() {
        assert!(betweenness(&Graph::complete(6)).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn path_middle_node() {
        let g = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(betweenness(&g), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn degree_only_ranking_breaks_ties_by_id() {
        let g = Graph::new(5, [(0, 1), (1, 2), (2, 3), (3, 1), (4, 0)]).unwrap();
        let t = risk_rank(&g, 1.0, 0.0).unwrap();
        let order: Vec<usize> = t.rows.iter().map(|r| r.node).collect();
        // degrees: 0→2, 1→3, 2→2, 3→2, 4→1
        assert_eq!(order, vec![1, 0, 2, 3, 4]);
        assert_eq!(t.rows.iter().map(|r| r.rank).collect::<Vec<_>>(), vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn star_center_ranks_first() {
        let t = risk_rank(&star(7), 0.3, 0.7).unwrap();
        assert_eq!(t.rows[0].node, 0);
        assert_eq!(t.rows[0].rank, 1);
    }

    #[test]
    fn zero_weights_are_rejected() {
        assert!(risk_rank(&star(4), 0.0, 0.0).is_err());
        assert!(risk_rank(&star(4), -1.0, 1.0).is_err());
    }

    #[test]
    fn empty_graph_ranks_by_id() {
        let t = risk_rank(&Graph::empty(3), 0.5, 0.5).unwrap();
        assert_eq!(t.rows.iter().map(|r| r.node).collect::<Vec<_>>(), vec![0, 1, 2]);
    }
}
