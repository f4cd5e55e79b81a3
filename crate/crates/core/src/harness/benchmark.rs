use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{generate_dataset, run_replication, Method, Scenario};
use crate::blsm::McmcConfig;
use crate::error::{Error, Result};

/// Wall-clock seconds per (method, size): rows are methods, columns sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkTable {
    pub sizes: Vec<usize>,
    pub methods: Vec<Method>,
    pub seconds: Vec<Vec<f64>>,
}

impl BenchmarkTable {
    pub fn get(&self, m: Method, n: usize) -> Option<f64> {
        let r = self.methods.iter().position(|&x| x == m)?;
        let c = self.sizes.iter().position(|&x| x == n)?;
        Some(self.seconds[r][c])
    }

    /// Header `method,n_<size>…`, one row per method.
    pub fn write_csv(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["method".to_string()];
        header.extend(self.sizes.iter().map(|n| format!("n_{n}")));
        w.write_record(&header)?;
        for (m, row) in self.methods.iter().zip(&self.seconds) {
            let mut rec = vec![m.name().to_string()];
            rec.extend(row.iter().map(|s| format!("{s:.4}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let sizes = r
            .headers()?
            .iter()
            .skip(1)
            .map(|h| {
                h.strip_prefix("n_")
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::Format(format!("bad size column {h:?}")))
            })
            .collect::<Result<Vec<usize>>>()?;
        let mut methods = Vec::new();
        let mut seconds = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            methods.push(rec[0].parse()?);
            seconds.push(
                rec.iter()
                    .skip(1)
                    .map(|s| s.parse().map_err(|_| Error::Format(format!("bad time {s:?}"))))
                    .collect::<Result<Vec<f64>>>()?,
            );
        }
        Ok(Self {
            sizes,
            methods,
            seconds,
        })
    }
}

/// Fixed timing scenario: latent-model data, clean counts, one replication,
/// a 2000-iteration sampler.
pub fn benchmark_scenario(seed: u64) -> Scenario {
    Scenario {
        id: "benchmark".into(),
        replications: 1,
        seed,
        methods: vec![Method::Fpr, Method::BlsmMcmc],
        mcmc: McmcConfig {
            iterations: 2000,
            burn_in: 500,
            ..McmcConfig::default()
        },
        ..Scenario::default()
    }
}

/// Times each method once per size on `base` (its `n` and `methods` are
/// overridden). Seconds cover fitting and prediction, not data generation.
pub fn benchmark(base: &Scenario, sizes: &[usize], methods: &[Method]) -> Result<BenchmarkTable> {
    let mut seconds = vec![vec![f64::NAN; sizes.len()]; methods.len()];
    for (c, &n) in sizes.iter().enumerate() {
        let s = Scenario {
            n,
            methods: methods.to_vec(),
            replications: 1,
            ..base.clone()
        };
        s.validate()?;
        // surface data errors directly rather than as failure rows
        generate_dataset(&s, s.replication_seed(0))?;
        let start = Instant::now();
        let recs = run_replication(&s, 0);
        log::info!("benchmark n={n} done in {:.1}s", start.elapsed().as_secs_f64());
        for (r, rec) in recs.iter().enumerate() {
            seconds[r][c] = rec.runtime_seconds.ok_or_else(|| {
                Error::State(format!(
                    "{} failed at n={n}: {}",
                    rec.method,
                    rec.error.as_deref().unwrap_or("unknown error")
                ))
            })?;
        }
    }
    Ok(BenchmarkTable {
        sizes: sizes.to_vec(),
        methods: methods.to_vec(),
        seconds,
    })
}
