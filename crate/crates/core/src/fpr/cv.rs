use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::deviance::Deviance;
use super::features::FeatureMap;
use super::fit::{fit_rows, FprConfig, Smooth};
use crate::ard::{ArdMatrix, TraitPartition};
use crate::error::{ensure_param, Result};
use crate::rng::rng_from_seed;
use crate::scalar::Scalar;

/// Mean and spread of the held-out deviance at one `λ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvPoint<T> {
    pub lambda: T,
    pub mean_deviance: T,
    pub sd_deviance: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvResult<T> {
    pub best_lambda: T,
    /// One entry per grid value, in the order given.
    pub curve: Vec<CvPoint<T>>,
}

/// Assigns each respondent row to one of `folds` folds after a seeded shuffle.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from_seed(seed));
    let mut fold = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold[i] = pos % folds;
    }
    fold
}

fn ties<T: Scalar>(a: T, b: T) -> bool {
    (a - b).abs() <= T::c(1e-9) * (T::one() + a.abs().max(b.abs()))
}

/// K-fold cross-validation over respondent rows.
///
/// Each fold is fitted along the grid from the largest `λ` down with warm
/// starts; the held-out rows are scored by Poisson deviance. The smallest
/// `λ` among (numerically tied) minimizers wins.
pub fn cross_validate<T: Scalar>(
    y: &ArdMatrix,
    t: &TraitPartition,
    grid: &[T],
    folds: usize,
    cfg: &FprConfig<T>,
    seed: u64,
) -> Result<CvResult<T>> {
    ensure_param!(!grid.is_empty(), "lambda grid is empty");
    ensure_param!(folds >= 2, "need at least two folds, got {folds}");
    ensure_param!(folds <= y.n(), "more folds ({folds}) than respondents ({})", y.n());
    ensure_param!(grid.iter().all(|&l| l >= T::zero()), "lambda values must be >= 0");
    cfg.validate()?;

    let n = y.n();
    let fold = fold_assignment(n, folds, seed);
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[b].partial_cmp(&grid[a]).unwrap_or(std::cmp::Ordering::Equal));

    let features = FeatureMap::new(t.clone());
    let mut scores = vec![Vec::with_capacity(folds); grid.len()];
    for f in 0..folds {
        let train: Vec<bool> = fold.iter().map(|&g| g != f).collect();
        let test: Vec<bool> = fold.iter().map(|&g| g == f).collect();
        let held_out = Smooth::new(&features, y, t, Deviance::Poisson, Some(&test))?;
        let mut warm: Option<Vec<T>> = None;
        for &g in &order {
            let mut c = cfg.clone();
            c.penalty.lambda = grid[g];
            let model = fit_rows(y, t, &c, Some(&train), warm.as_deref())?;
            scores[g].push(held_out.value(&model.beta, T::one()));
            warm = Some(model.beta);
        }
    }

    let curve: Vec<CvPoint<T>> = grid
        .iter()
        .zip(&scores)
        .map(|(&lambda, s)| {
            let m = T::from_usize_lossy(s.len());
            let mean = s.iter().copied().sum::<T>() / m;
            let var = s.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / (m - T::one()).max(T::one());
            CvPoint {
                lambda,
                mean_deviance: mean,
                sd_deviance: var.sqrt(),
            }
        })
        .collect();

    let mut best = 0;
    for (g, p) in curve.iter().enumerate().skip(1) {
        let b = &curve[best];
        let better = p.mean_deviance < b.mean_deviance && !ties(p.mean_deviance, b.mean_deviance);
        let tie_smaller = ties(p.mean_deviance, b.mean_deviance) && p.lambda < b.lambda;
        if better || tie_smaller {
            best = g;
        }
    }
    Ok(CvResult {
        best_lambda: curve[best].lambda,
        curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blsm::{simulate_latent, LatentSimConfig};
    use crate::fpr::Penalty;

    #[test]
    fn folds_are_balanced() {
        let f = fold_assignment(23, 5, 1);
        for g in 0..5 {
            let c = f.iter().filter(|&&x| x == g).count();
            assert!(c == 4 || c == 5);
        }
    }

    #[test]
    fn single_point_grid_and_full_curve() {
        let ds = simulate_latent(
            &LatentSimConfig {
                n: 30,
                k: 4,
                ..Default::default()
            },
            1,
        )
        .unwrap();
        let cfg: FprConfig<f64> = FprConfig {
            penalty: Penalty::l1(1.0),
            max_iter: 300,
            ..Default::default()
        };
        let r = cross_validate(&ds.ard, &ds.traits, &[3.0], 3, &cfg, 0).unwrap();
        assert_eq!(r.best_lambda, 3.0);
        let grid = [0.1, 1.0, 10.0, 100.0];
        let r = cross_validate(&ds.ard, &ds.traits, &grid, 3, &cfg, 0).unwrap();
        assert_eq!(r.curve.len(), 4);
        assert!(r.curve.iter().all(|p| p.mean_deviance.is_finite()));
        assert!(grid.contains(&r.best_lambda));
        assert!(cross_validate(&ds.ard, &ds.traits, &[], 3, &cfg, 0).is_err());
        assert!(cross_validate(&ds.ard, &ds.traits, &grid, 1, &cfg, 0).is_err());
    }
}
