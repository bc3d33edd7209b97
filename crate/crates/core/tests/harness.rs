use std::fs;
use std::path::Path;

use zpc::harness::{montecarlo, run_experiment_in, DataOnly, ExperimentConfig, SystemSpec};

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

#[test]
fn shipped_configs_are_the_benchmarks() {
    for (file, w, v) in [
        ("benchmark_low_noise.json", 0.01, 0.002),
        ("benchmark_high_noise.json", 0.1, 0.02),
        ("benchmark_noise_free.json", 0.0, 0.0),
    ] {
        let loaded = ExperimentConfig::load(&configs().join(file)).unwrap();
        assert_eq!(loaded, ExperimentConfig::benchmark(w, v), "{file}");
    }
}

#[test]
fn experiment_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let mut cfg = ExperimentConfig::benchmark(0.01, 0.002);
    cfg.steps = 10;
    let report = run_experiment_in(cfg, run.clone()).unwrap();
    assert!(report.all_feasible());
    assert_eq!(report.true_model_contained, Some(true));
    for f in [
        "config.json",
        "summary.json",
        "model_set.json",
        "reach_hulls.csv",
        "comparison.csv",
        "data/manifest.json",
        "data/trajectory_000.csv",
        "zpc_run.csv",
        "zpc_predictions.csv",
        "zpc_summary.json",
        "mpc_run.csv",
        "rmpc_zono_run.csv",
    ] {
        assert!(run.join(f).is_file(), "missing {f}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("zpc_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["seed"], 0);
    assert_eq!(
        fs::read_to_string(run.join("zpc_run.csv"))
            .unwrap()
            .lines()
            .count(),
        11
    );
}

#[test]
fn data_only_experiment_reuses_recorded_data() {
    let dir = tempfile::tempdir().unwrap();
    let known = ExperimentConfig::benchmark(0.01, 0.002);
    let first = run_experiment_in(known.clone(), dir.path().join("known")).unwrap();
    let mut cfg = known;
    cfg.noise.av = Some(cfg.noise_spec().unwrap().zav);
    cfg.system = SystemSpec::DataOnly(DataOnly::DataOnly);
    cfg.data = Some(dir.path().join("known/data/manifest.json"));
    let second = run_experiment_in(cfg, dir.path().join("data-only")).unwrap();
    assert!(second.runs.is_empty());
    assert_eq!(second.true_model_contained, None);
    assert_eq!(first.reach_hulls, second.reach_hulls);
}

#[test]
fn montecarlo_aggregates_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::benchmark(0.01, 0.002);
    cfg.steps = 5;
    let report = montecarlo(&cfg, 3, dir.path()).unwrap();
    assert_eq!(report.entries.len(), 3);
    assert!(report.infeasible_runs.iter().all(|(_, n)| *n == 0));
    assert!(dir.path().join("montecarlo.json").is_file());
    assert!(dir.path().join("seed-2").is_dir());
}
