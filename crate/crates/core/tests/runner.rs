mod common;

use std::fs;
use std::path::Path;

use common::fixture;
use psonn_core::runner::{
    self, compare_models, epoch_sweep, evaluate_saved, parse_config, run_experiment_with, ExperimentConfig,
    ModelDocument, ModelKind, ModelSpec, RunError, Schedule,
};

fn quick(cfg: &mut ExperimentConfig) {
    match &mut cfg.model {
        ModelSpec::Psonn(s) => {
            s.swarm_size = 12;
            s.iterations = 40;
        }
        ModelSpec::Bpnn(s) => s.epochs = 100,
        ModelSpec::Forest(f) => f.n_trees = 10,
        _ => {}
    }
}

fn config(kind: ModelKind, seed: u64, out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(fixture("heart_sample.csv"), kind, seed);
    cfg.output_dir = out.join(kind.name());
    quick(&mut cfg);
    cfg
}

fn result_bytes(cfg: &ExperimentConfig, schedule: Schedule) -> Vec<u8> {
    run_experiment_with(cfg, schedule).unwrap();
    fs::read(cfg.output_dir.join(runner::RESULT_FILE)).unwrap()
}

fn determinism_holds(kind: ModelKind, seed: u64, out: &Path) -> bool {
    let cfg = config(kind, seed, out);
    let a = result_bytes(&cfg, Schedule::Parallel);
    let b = result_bytes(&cfg, Schedule::Parallel);
    let c = result_bytes(&cfg, Schedule::Sequential);
    a == b && a == c
}

#[test]
fn every_model_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for kind in ModelKind::ALL {
        for seed in [0, 17] {
            assert!(determinism_holds(kind, seed, dir.path()), "{kind} seed {seed}");
        }
    }
}

#[test]
fn tree_run_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("ten.csv");
    let text = fs::read_to_string(fixture("heart_sample.csv")).unwrap();
    let rows: Vec<&str> = text.lines().take(11).collect();
    fs::write(&csv, rows.join("\n")).unwrap();
    let mut cfg = ExperimentConfig::new(&csv, ModelKind::Tree, 1);
    cfg.output_dir = dir.path().join("out");
    let out = run_experiment_with(&cfg, Schedule::Parallel).unwrap();
    assert_eq!(out.result.n_train + out.result.n_test, 10);
    for f in [
        runner::RESULT_FILE,
        runner::MODEL_FILE,
        runner::REPORT_FILE,
        runner::TIMING_FILE,
    ] {
        assert!(cfg.output_dir.join(f).is_file(), "{f} missing");
    }
    let report = fs::read_to_string(cfg.output_dir.join(runner::REPORT_FILE)).unwrap();
    assert!(report.contains("=== Confusion Matrix ==="));

    // the saved model scores the same folds identically
    let doc = ModelDocument::load(cfg.output_dir.join(runner::MODEL_FILE)).unwrap();
    let eval = evaluate_saved(&cfg, &doc).unwrap();
    assert_eq!(eval.test, out.result.test);
    assert_eq!(eval.train, out.result.train);
}

#[test]
fn saved_networks_reload_exactly() {
    let dir = tempfile::tempdir().unwrap();
    for kind in [ModelKind::Psonn, ModelKind::Bpnn, ModelKind::Forest, ModelKind::Nb] {
        let cfg = config(kind, 3, dir.path());
        let out = run_experiment_with(&cfg, Schedule::Parallel).unwrap();
        let doc = ModelDocument::load(cfg.output_dir.join(runner::MODEL_FILE)).unwrap();
        assert_eq!(doc, out.model);
        assert_eq!(evaluate_saved(&cfg, &doc).unwrap().test, out.result.test);
    }
}

#[test]
fn config_file_drives_a_run() {
    let dir = tempfile::tempdir().unwrap();
    fs::copy(fixture("heart_sample.csv"), dir.path().join("heart.csv")).unwrap();
    let toml = "seed = 5\n[data]\npath = \"heart.csv\"\n[model]\nkind = \"bpnn\"\n\
                [bpnn]\nepochs = 50\n[output]\ndir = \"out\"\n";
    let path = dir.path().join("exp.toml");
    fs::write(&path, toml).unwrap();
    let cfg = parse_config(&path).unwrap();
    assert_eq!(cfg.dataset, dir.path().join("heart.csv"));
    assert_eq!(cfg.split.train_fraction, 0.7);
    let out = run_experiment_with(&cfg, Schedule::Parallel).unwrap();
    assert_eq!(out.result.training_curve.len(), 51);
    assert!(dir.path().join("out").join(runner::RESULT_FILE).is_file());
}

#[test]
fn missing_dataset_is_a_data_error() {
    let cfg = ExperimentConfig::new("/nonexistent/heart.csv", ModelKind::Tree, 0);
    let err = run_experiment_with(&cfg, Schedule::Parallel).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn sweep_writes_one_run_per_epoch_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(ModelKind::Psonn, 2, dir.path());
    let sweep = epoch_sweep(&cfg, &[5, 10, 20], Schedule::Parallel).unwrap();
    assert_eq!(sweep.runs.len(), 3);
    for (e, run) in [5, 10, 20].iter().zip(&sweep.runs) {
        assert_eq!(run.result.training_curve.len(), e + 1);
        assert!(cfg
            .output_dir
            .join(format!("epochs_{e}"))
            .join(runner::RESULT_FILE)
            .is_file());
    }
    // same split for every entry
    assert!(sweep.runs.windows(2).all(|w| w[0].result.split == w[1].result.split));
    let table = fs::read_to_string(cfg.output_dir.join("sweep.txt")).unwrap();
    assert!(table.contains("Train phase") && table.contains("Test phase"));
    assert!(matches!(
        epoch_sweep(&cfg, &[], Schedule::Parallel),
        Err(RunError::Usage(_))
    ));
}

#[test]
fn compare_ranks_all_models() {
    let dir = tempfile::tempdir().unwrap();
    let cmp = compare_models(&fixture("heart_sample.csv"), 4, dir.path(), Schedule::Parallel).unwrap();
    assert_eq!(cmp.ranking.len(), 5);
    let accs: Vec<f64> = cmp.ranking.iter().filter_map(|e| e.test_accuracy).collect();
    assert!(accs.windows(2).all(|w| w[0] >= w[1]));
    assert!(dir.path().join("comparison.txt").is_file());
    assert!(dir.path().join("comparison.json").is_file());
    for k in ModelKind::ALL {
        assert!(dir.path().join(k.name()).join(runner::RESULT_FILE).is_file());
    }
}

#[test]
fn compare_on_two_rows_reports_failures_without_crashing() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("two.csv");
    fs::write(
        &csv,
        "a,b,c,d,e,f,g,h,i\n64,1,66,160,83,1,1.8,0.012,negative\n21,1,94,98,46,1,6.75,1.06,positive\n",
    )
    .unwrap();
    let cmp = compare_models(&csv, 0, &dir.path().join("out"), Schedule::Parallel).unwrap();
    assert_eq!(cmp.ranking.len(), 5);
    let nb = cmp.entry(ModelKind::Nb).unwrap();
    assert!(nb.error.is_some() && nb.test_accuracy.is_none());
    assert_eq!(cmp.ranking.last().unwrap().kind, ModelKind::Nb);
}
