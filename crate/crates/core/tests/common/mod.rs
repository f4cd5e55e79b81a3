//! Independent oracles shared by the integration tests. Nothing here calls
//! the code it is used to check.

#![allow(dead_code, clippy::needless_range_loop)]

use ardnet::ard::TraitPartition;
use ardnet::graphgen::Graph;
use rand::Rng as _;

pub type Rng = rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

/// Erdős–Rényi graph with random weights in `1..=max_w` (unweighted if 1).
pub fn random_graph(n: usize, p: f64, max_w: u32, rng: &mut Rng) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    let m = edges.len();
    let g = Graph::new(n, edges).unwrap();
    if max_w > 1 {
        g.with_weights((0..m).map(|_| rng.random_range(1..=max_w)).collect())
            .unwrap()
    } else {
        g
    }
}

/// Each node joins each of `k` groups independently with probability 1/2.
pub fn random_traits(n: usize, k: usize, rng: &mut Rng) -> TraitPartition {
    let groups = (0..k)
        .map(|_| (0..n).filter(|_| rng.random::<bool>()).collect())
        .collect();
    TraitPartition::new(n, groups).unwrap()
}

/// `y_ik = Σ_j w_ij [j ∈ G_k]` by an explicit double loop over a dense matrix.
pub fn ard_oracle(g: &Graph, groups: &[Vec<usize>]) -> Vec<u64> {
    let n = g.n();
    let mut w = vec![vec![0u64; n]; n];
    for (idx, &(i, j)) in g.edges().iter().enumerate() {
        let wt = g.weights().map_or(1, |ws| ws[idx]) as u64;
        w[i][j] = wt;
        w[j][i] = wt;
    }
    let mut out = vec![0u64; n * groups.len()];
    for i in 0..n {
        for (k, grp) in groups.iter().enumerate() {
            for j in 0..n {
                if j != i && grp.contains(&j) {
                    out[i * groups.len() + k] += w[i][j];
                }
            }
        }
    }
    out
}

fn bfs_dist(g: &Graph, s: usize) -> Vec<Option<usize>> {
    let mut d = vec![None; g.n()];
    d[s] = Some(0);
    let mut frontier = vec![s];
    let mut level = 0;
    while !frontier.is_empty() {
        level += 1;
        let mut next = Vec::new();
        for &u in &frontier {
            for &v in g.neighbors(u) {
                if d[v].is_none() {
                    d[v] = Some(level);
                    next.push(v);
                }
            }
        }
        frontier = next;
    }
    d
}

fn enumerate_paths(
    g: &Graph,
    dist_to_t: &[Option<usize>],
    u: usize,
    t: usize,
    path: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if u == t {
        out.push(path.clone());
        return;
    }
    let du = dist_to_t[u].unwrap();
    for &v in g.neighbors(u) {
        if dist_to_t[v] == Some(du - 1) {
            path.push(v);
            enumerate_paths(g, dist_to_t, v, t, path, out);
            path.pop();
        }
    }
}

/// Betweenness by listing every shortest path of every pair, normalized by
/// `(n-1)(n-2)/2`.
pub fn betweenness_oracle(g: &Graph) -> Vec<f64> {
    let n = g.n();
    let mut b = vec![0.0; n];
    for s in 0..n {
        for t in s + 1..n {
            let dt = bfs_dist(g, t);
            if dt[s].is_none() {
                continue;
            }
            let mut paths = Vec::new();
            enumerate_paths(g, &dt, s, t, &mut vec![s], &mut paths);
            let total = paths.len() as f64;
            for v in 0..n {
                if v == s || v == t {
                    continue;
                }
                let through = paths.iter().filter(|p| p.contains(&v)).count() as f64;
                b[v] += through / total;
            }
        }
    }
    if n > 2 {
        let norm = ((n - 1) * (n - 2)) as f64 / 2.0;
        b.iter_mut().for_each(|x| *x /= norm);
    }
    b
}

/// Soft threshold at `l`.
pub fn soft(v: f64, l: f64) -> f64 {
    v.signum() * (v.abs() - l).max(0.0)
}

/// SCAD thresholding with effective threshold `l`.
pub fn scad_oracle(v: f64, l: f64, a: f64) -> f64 {
    let x = v.abs();
    if x <= 2.0 * l {
        soft(v, l)
    } else if x <= a * l {
        ((a - 1.0) * v - v.signum() * a * l) / (a - 2.0)
    } else {
        v
    }
}

/// MCP thresholding with effective threshold `l`.
pub fn mcp_oracle(v: f64, l: f64, a: f64) -> f64 {
    if v.abs() <= a * l {
        v.signum() * (v.abs() - l).max(0.0) / (1.0 - 1.0 / a)
    } else {
        v
    }
}

/// Central difference of `f` along coordinate `c`.
pub fn central_difference(f: &dyn Fn(&[f64]) -> f64, x: &[f64], c: usize, h: f64) -> f64 {
    let mut up = x.to_vec();
    let mut dn = x.to_vec();
    up[c] += h;
    dn[c] -= h;
    (f(&up) - f(&dn)) / (2.0 * h)
}

/// `‖a − b‖₂ / ‖b‖₂` (absolute when `b` vanishes).
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

/// Random orthogonal `d × d` matrix from Gram–Schmidt on Gaussian columns.
pub fn random_orthogonal(d: usize, rng: &mut Rng) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    let mut cols: Vec<Vec<f64>> = Vec::new();
    while cols.len() < d {
        let mut c: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        for q in &cols {
            let dot: f64 = c.iter().zip(q).map(|(a, b)| a * b).sum();
            c.iter_mut().zip(q).for_each(|(a, b)| *a -= dot * b);
        }
        let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            cols.push(c.into_iter().map(|x| x / norm).collect());
        }
    }
    let mut q = vec![0.0; d * d];
    for (j, c) in cols.iter().enumerate() {
        for i in 0..d {
            q[i * d + j] = c[i];
        }
    }
    q
}

/// Row-major `n × d` matrix product with a `d × d` matrix.
pub fn right_multiply(z: &[f64], q: &[f64], d: usize) -> Vec<f64> {
    z.chunks(d)
        .flat_map(|row| (0..d).map(move |j| (0..d).map(|l| row[l] * q[l * d + j]).sum::<f64>()))
        .collect()
}

/// `n` random unit rows in `d` dimensions.
pub fn random_sphere(n: usize, d: usize, rng: &mut Rng) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    let mut z = Vec::with_capacity(n * d);
    for _ in 0..n {
        let row: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        z.extend(row.into_iter().map(|x| x / norm));
    }
    z
}
