use serde::{Deserialize, Serialize};

use super::{run_scenario, Method, RunRecord, Scenario};
use crate::error::Result;

/// Misreporting rates of the contamination sweep.
pub const RHO_GRID: [f64; 4] = [0.0, 0.1, 0.2, 0.3];
/// Privacy budgets of the privacy sweep.
pub const EPSILON_GRID: [f64; 4] = [0.1, 0.5, 1.0, 2.0];

/// Mean and sample standard deviation of AUC and RMSE over successful runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub auc_mean: f64,
    pub auc_sd: f64,
    pub rmse_mean: f64,
    pub rmse_sd: f64,
    pub runtime_mean: f64,
    pub ok: usize,
    pub failed: usize,
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64;
    (m, var.sqrt())
}

/// Summarizes the records of one method.
pub fn summarize(records: &[RunRecord], method: Method) -> Summary {
    let mine: Vec<&RunRecord> = records.iter().filter(|r| r.method == method).collect();
    let ok: Vec<&&RunRecord> = mine.iter().filter(|r| r.ok).collect();
    let (auc_mean, auc_sd) = mean_sd(&ok.iter().filter_map(|r| r.auc).collect::<Vec<_>>());
    let (rmse_mean, rmse_sd) = mean_sd(&ok.iter().filter_map(|r| r.rmse).collect::<Vec<_>>());
    let (runtime_mean, _) = mean_sd(&ok.iter().filter_map(|r| r.runtime_seconds).collect::<Vec<_>>());
    Summary {
        auc_mean,
        auc_sd,
        rmse_mean,
        rmse_sd,
        runtime_mean,
        ok: ok.len(),
        failed: mine.len() - ok.len(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MisreportingRow {
    pub rho: f64,
    pub method: Method,
    pub auc_mean: f64,
    pub auc_sd: f64,
    pub rmse_mean: f64,
    pub rmse_sd: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivacyRow {
    pub epsilon: f64,
    pub method: Method,
    pub auc_mean: f64,
    pub auc_sd: f64,
    pub rmse_mean: f64,
    pub rmse_sd: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeRow {
    pub n: usize,
    pub method: Method,
    pub auc_mean: f64,
    pub auc_sd: f64,
    pub rmse_mean: f64,
    pub rmse_sd: f64,
}

fn sweep<P: Copy>(base: &Scenario, grid: &[P], apply: impl Fn(&mut Scenario, P)) -> Result<Vec<(P, Vec<RunRecord>)>> {
    grid.iter()
        .map(|&p| {
            let mut s = base.clone();
            apply(&mut s, p);
            Ok((p, run_scenario(&s)?))
        })
        .collect()
}

/// Runs `base` at each misreporting rate (replication seeds are shared
/// across rates).
pub fn sweep_misreporting(base: &Scenario, rhos: &[f64]) -> Result<(Vec<MisreportingRow>, Vec<RunRecord>)> {
    let runs = sweep(base, rhos, |s, rho| {
        s.rho = rho;
        s.id = format!("{}-rho{rho}", base.id);
    })?;
    let mut rows = Vec::new();
    for (rho, recs) in &runs {
        for &m in &base.methods {
            let sm = summarize(recs, m);
            rows.push(MisreportingRow {
                rho: *rho,
                method: m,
                auc_mean: sm.auc_mean,
                auc_sd: sm.auc_sd,
                rmse_mean: sm.rmse_mean,
                rmse_sd: sm.rmse_sd,
            });
        }
    }
    Ok((rows, runs.into_iter().flat_map(|r| r.1).collect()))
}

/// Runs `base` with Laplace-noised counts at each privacy budget.
pub fn sweep_privacy(base: &Scenario, epsilons: &[f64]) -> Result<(Vec<PrivacyRow>, Vec<RunRecord>)> {
    let runs = sweep(base, epsilons, |s, eps| {
        s.epsilon = Some(eps);
        s.id = format!("{}-eps{eps}", base.id);
    })?;
    let mut rows = Vec::new();
    for (eps, recs) in &runs {
        for &m in &base.methods {
            let sm = summarize(recs, m);
            rows.push(PrivacyRow {
                epsilon: *eps,
                method: m,
                auc_mean: sm.auc_mean,
                auc_sd: sm.auc_sd,
                rmse_mean: sm.rmse_mean,
                rmse_sd: sm.rmse_sd,
            });
        }
    }
    Ok((rows, runs.into_iter().flat_map(|r| r.1).collect()))
}

/// Runs `base` at each network size.
pub fn sweep_sizes(base: &Scenario, sizes: &[usize]) -> Result<(Vec<SizeRow>, Vec<RunRecord>)> {
    let runs = sweep(base, sizes, |s, n| {
        s.n = n;
        s.id = format!("{}-n{n}", base.id);
    })?;
    let mut rows = Vec::new();
    for (n, recs) in &runs {
        for &m in &base.methods {
            let sm = summarize(recs, m);
            rows.push(SizeRow {
                n: *n,
                method: m,
                auc_mean: sm.auc_mean,
                auc_sd: sm.auc_sd,
                rmse_mean: sm.rmse_mean,
                rmse_sd: sm.rmse_sd,
            });
        }
    }
    Ok((rows, runs.into_iter().flat_map(|r| r.1).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::RmseKind;

    fn record(method: Method, ok: bool, auc: f64) -> RunRecord {
        RunRecord {
            scenario: "s".into(),
            replication: 0,
            seed: 0,
            method,
            n: 10,
            k: 2,
            rho: 0.0,
            epsilon: None,
            ok,
            auc: ok.then_some(auc),
            rmse: ok.then_some(1.0 - auc),
            rmse_kind: RmseKind::Probability,
            procrustes_error: None,
            runtime_seconds: ok.then_some(1.0),
            error: (!ok).then(|| "boom".into()),
        }
    }

    #[test]
    fn summary_skips_failures() {
        let recs = vec![
            record(Method::Fpr, true, 0.6),
            record(Method::Fpr, true, 0.8),
            record(Method::Fpr, false, 0.0),
            record(Method::FprRobust, true, 0.1),
        ];
        let s = summarize(&recs, Method::Fpr);
        assert!((s.auc_mean - 0.7).abs() < 1e-12);
        // sample sd of {0.6, 0.8}
        assert!((s.auc_sd - 0.02_f64.sqrt()).abs() < 1e-12);
        assert_eq!((s.ok, s.failed), (2, 1));
    }
}
