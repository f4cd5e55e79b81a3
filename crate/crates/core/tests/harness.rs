use std::collections::HashSet;

use ardnet::harness::{
    run_experiment, run_scenario, summarize, sweep_misreporting, sweep_privacy, ExperimentConfig, GeneratorSpec,
    Manifest, Method, MisreportingRow, PrivacyRow, RunRecord, Scenario,
};

fn small(methods: Vec<Method>, replications: usize) -> Scenario {
    Scenario {
        id: "small".into(),
        n: 60,
        methods,
        replications,
        seed: 2024,
        ..Scenario::default()
    }
}

fn strip_timing(mut recs: Vec<RunRecord>) -> Vec<RunRecord> {
    recs.iter_mut().for_each(|r| r.runtime_seconds = None);
    recs
}

#[test]
fn one_record_per_replication_and_method() {
    let recs = run_scenario(&small(vec![Method::Fpr, Method::FprRobust], 5)).unwrap();
    assert_eq!(recs.len(), 10);
    let keys: HashSet<_> = recs.iter().map(|r| (r.replication, r.method)).collect();
    assert_eq!(keys.len(), 10);
    assert!(recs.iter().all(|r| r.ok && r.auc.is_some() && r.error.is_none()));
    let seeds: HashSet<_> = recs.iter().map(|r| r.seed).collect();
    assert_eq!(seeds.len(), 5);
}

#[test]
fn reruns_reproduce_metrics() {
    let s = small(vec![Method::Fpr, Method::BlsmVi], 2);
    let a = strip_timing(run_scenario(&s).unwrap());
    let b = strip_timing(run_scenario(&s).unwrap());
    assert_eq!(a, b);
    assert!(a
        .iter()
        .filter(|r| r.method == Method::BlsmVi)
        .all(|r| r.procrustes_error.is_some()));
}

#[test]
fn generator_errors_become_failure_rows() {
    let s = Scenario {
        generator: GeneratorSpec::ScaleFree { gamma: 3.5, k_min: 3 },
        ..small(vec![Method::Fpr, Method::FprRobust], 3)
    };
    let recs = run_scenario(&s).unwrap();
    assert_eq!(recs.len(), 6);
    assert!(recs
        .iter()
        .all(|r| !r.ok && r.auc.is_none() && r.error.as_deref().unwrap().contains("gamma")));
    let sm = summarize(&recs, Method::Fpr);
    assert_eq!((sm.ok, sm.failed), (0, 3));
}

#[test]
fn robust_fit_matches_plain_fit_on_clean_data() {
    let recs = run_scenario(&Scenario {
        n: 150,
        ..small(vec![Method::Fpr, Method::FprRobust], 3)
    })
    .unwrap();
    let plain = summarize(&recs, Method::Fpr).auc_mean;
    let robust = summarize(&recs, Method::FprRobust).auc_mean;
    assert!((plain - robust).abs() <= 0.03, "{plain} vs {robust}");
}

#[test]
fn sweeps_emit_one_row_per_grid_point_and_method() {
    let base = small(vec![Method::Fpr, Method::FprRobust], 2);
    let (rows, recs) = sweep_misreporting(&base, &[0.0, 0.3]).unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(recs.len(), 8);
    assert_eq!(rows.iter().filter(|r| r.rho == 0.3).count(), 2);
    // clean and corrupted runs share replication seeds
    let seeds = |rho: f64| recs.iter().filter(|r| r.rho == rho).map(|r| r.seed).collect::<Vec<_>>();
    assert_eq!(seeds(0.0), seeds(0.3));
    let (rows, _) = sweep_privacy(
        &Scenario {
            methods: vec![Method::Fpr],
            ..base
        },
        &[0.5, 2.0],
    )
    .unwrap();
    assert_eq!(rows.iter().map(|r| r.epsilon).collect::<Vec<_>>(), vec![0.5, 2.0]);
}

const CONFIG: &str = r#"
[scenario]
id = "smoke"
n = 60
replications = 2
seed = 99
methods = ["fpr", "fpr-robust"]

[[sweeps]]
kind = "base"

[[sweeps]]
kind = "misreporting"
rhos = [0.0, 0.2]

[[sweeps]]
kind = "privacy"
epsilons = [1.0]

[[sweeps]]
kind = "interbank"
"#;

const METRIC_FILES: [&str; 5] = [
    "summary.csv",
    "fig5_3_misreporting.csv",
    "fig5_5_privacy.csv",
    "table6_1_risk.csv",
    "interbank_summary.csv",
];

#[test]
fn experiment_writes_reproducible_outputs() {
    let cfg = ExperimentConfig::from_toml(CONFIG).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let manifest = run_experiment(&cfg, CONFIG, a.path()).unwrap();
    run_experiment(&cfg, CONFIG, b.path()).unwrap();

    for name in &manifest.outputs {
        assert!(a.path().join(name).is_file(), "{name} missing");
    }
    for name in METRIC_FILES {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between runs");
    }

    let text = std::fs::read_to_string(a.path().join("manifest.json")).unwrap();
    let read: Manifest = serde_json::from_str(&text).unwrap();
    assert_eq!(read, manifest);
    assert_eq!(read.base_seed, 99);
    assert_eq!(read.replication_seeds.len(), 2);
    assert_eq!(read.config_sha256.len(), 64);

    let mis: Vec<MisreportingRow> = ardnet::io::read_rows(a.path().join("fig5_3_misreporting.csv")).unwrap();
    assert_eq!(mis.len(), 4);
    let header = std::fs::read_to_string(a.path().join("fig5_3_misreporting.csv")).unwrap();
    assert_eq!(
        header.lines().next().unwrap(),
        "rho,method,auc_mean,auc_sd,rmse_mean,rmse_sd"
    );
    let priv_rows: Vec<PrivacyRow> = ardnet::io::read_rows(a.path().join("fig5_5_privacy.csv")).unwrap();
    assert_eq!(priv_rows.len(), 2);
    let runs: Vec<RunRecord> = ardnet::io::read_rows(a.path().join("runs.csv")).unwrap();
    assert_eq!(runs.len(), 4);
    let risk = ardnet::io::read_risk_table(a.path().join("table6_1_risk.csv")).unwrap();
    assert_eq!(risk.len(), 200);
}

#[test]
fn config_defaults_to_base_sweep() {
    let cfg = ExperimentConfig::from_toml("[scenario]\nn = 40\n").unwrap();
    assert_eq!(cfg.scenario.n, 40);
    assert_eq!(cfg.sweeps.len(), 1);
    assert!(ExperimentConfig::from_toml("[scenario]\nn = \"many\"\n").is_err());
}

#[test]
fn shipped_configs_parse_and_validate() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let cfg = ExperimentConfig::from_toml(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        cfg.scenario.validate().unwrap();
        seen += 1;
    }
    assert!(seen >= 5);
}
