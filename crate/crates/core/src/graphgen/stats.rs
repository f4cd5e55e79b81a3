use std::collections::VecDeque;

use super::Graph;

/// Descriptive statistics of a graph.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphStats {
    /// `2|E| / (n (n-1))`.
    pub density: f64,
    pub degree_sequence: Vec<usize>,
    /// Global (triangle-based) clustering coefficient: closed over connected triples.
    pub clustering_coeff: f64,
    /// Mean shortest-path length over pairs inside the largest connected component.
    pub avg_path_length: f64,
    /// Hill estimate of the degree-distribution exponent from the top decile of
    /// degrees; `None` when the top decile is degenerate.
    pub tail_exponent_estimate: Option<f64>,
}

pub fn graph_stats(g: &Graph) -> GraphStats {
    let n = g.n();
    let density = if n < 2 {
        0.0
    } else {
        2.0 * g.edge_count() as f64 / (n as f64 * (n as f64 - 1.0))
    };
    let degrees = g.degrees();
    GraphStats {
        density,
        clustering_coeff: global_clustering(g),
        avg_path_length: average_path_length(g),
        tail_exponent_estimate: hill_tail_exponent(&degrees, 0.1),
        degree_sequence: degrees,
    }
}

fn global_clustering(g: &Graph) -> f64 {
    let mut closed = 0u64;
    let mut triples = 0u64;
    let mut mark = vec![false; g.n()];
    for i in 0..g.n() {
        let nb = g.neighbors(i);
        let d = nb.len() as u64;
        triples += d * d.saturating_sub(1) / 2;
        for &j in nb {
            mark[j] = true;
        }
        for &j in nb {
            closed += g.neighbors(j).iter().filter(|&&k| k > j && mark[k]).count() as u64;
        }
        for &j in nb {
            mark[j] = false;
        }
    }
    if triples == 0 {
        0.0
    } else {
        closed as f64 / triples as f64
    }
}

fn components(g: &Graph) -> Vec<Vec<usize>> {
    let mut seen = vec![false; g.n()];
    let mut out = Vec::new();
    for s in 0..g.n() {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut head = 0;
        while head < comp.len() {
            let u = comp[head];
            head += 1;
            for &v in g.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    comp.push(v);
                }
            }
        }
        out.push(comp);
    }
    out
}

fn average_path_length(g: &Graph) -> f64 {
    let Some(largest) = components(g).into_iter().max_by_key(Vec::len) else {
        return 0.0;
    };
    if largest.len() < 2 {
        return 0.0;
    }
    let mut dist = vec![usize::MAX; g.n()];
    let mut total = 0u64;
    let mut queue = VecDeque::new();
    for &s in &largest {
        for &u in &largest {
            dist[u] = usize::MAX;
        }
        dist[s] = 0;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &v in g.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    total += dist[v] as u64;
                    queue.push_back(v);
                }
            }
        }
    }
    let m = largest.len() as f64;
    total as f64 / (m * (m - 1.0))
}

/// Hill estimator of the power-law exponent `gamma` (pdf `k^-gamma`) from the
/// largest `fraction` of the values.
pub fn hill_tail_exponent(values: &[usize], fraction: f64) -> Option<f64> {
    let mut sorted: Vec<f64> = values.iter().map(|&d| d as f64).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let k = ((sorted.len() as f64) * fraction).floor() as usize;
    if k < 1 || k >= sorted.len() || sorted[k] <= 0.0 {
        return None;
    }
    let threshold = sorted[k];
    let mean_log = sorted[..k].iter().map(|x| (x / threshold).ln()).sum::<f64>() / k as f64;
    (mean_log > 0.0).then(|| 1.0 + 1.0 / mean_log)
}
