//! End-to-end pipelines: load, encode, split, normalize, train, evaluate,
//! persist.
//!
//! Every random stream of a run derives from the config's master seed
//! (split = stream 0, model = stream 1), so a config fully determines
//! `result.json` no matter how runs are scheduled. Wall-clock time is kept
//! out of `result.json` and written to `timing.json` instead.

mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{
    parse_config, parse_config_str, BpnnSettings, ConfigError, ExperimentConfig, ForestSettings, ModelKind, ModelSpec,
    NbSettings, NormalizeMode, PsonnSettings, SplitSettings,
};

use crate::baselines::{self, DecisionTree, ForestConfig, ModelError, NaiveBayesModel, RandomForest};
use crate::dataset::{self, DataError, Dataset, NormalizationParams, SplitIndices, SplitSpec};
use crate::metrics::{self, EvaluationSummary, MetricsError};
use crate::neural_net::{self, BackpropConfig, NetError, Network, NetworkDocument, Topology};
pub use crate::pso::Schedule;
use crate::pso::{self, PsoError};
use crate::{rng, Classifier, DimensionMismatch};

const SPLIT_STREAM: u64 = 0;
const MODEL_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Load,
    Encode,
    Split,
    Normalize,
    Predict,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::Load => "load",
            Stage::Encode => "encode",
            Stage::Split => "split",
            Stage::Normalize => "normalize",
            Stage::Predict => "predict",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error(transparent)]
    Network(#[from] NetError),
    #[error(transparent)]
    Swarm(#[from] PsoError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("{stage}: {source}")]
    Data {
        stage: Stage,
        #[source]
        source: DataError,
    },
    #[error("predict: {0}")]
    Predict(#[from] DimensionMismatch),
    #[error("train: {0}")]
    Train(#[from] TrainError),
    #[error("evaluate: {0}")]
    Evaluate(#[from] MetricsError),
    #[error("write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl RunError {
    /// 1 usage, 2 data, 3 training failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) | RunError::Config(_) => 1,
            RunError::Data { .. } | RunError::Predict(_) | RunError::Io { .. } | RunError::Json(_) => 2,
            RunError::Train(_) | RunError::Evaluate(_) => 3,
        }
    }

    fn data(stage: Stage) -> impl FnOnce(DataError) -> RunError {
        move |source| RunError::Data { stage, source }
    }
}

/// A trained model of any kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "model", rename_all = "snake_case")]
pub enum TrainedModel {
    Network(NetworkDocument),
    Tree(DecisionTree),
    Forest(RandomForest),
    NaiveBayes(NaiveBayesModel),
}

/// Borrowed predictor built from a [`TrainedModel`].
enum Predictor<'a> {
    Network(Network),
    Other(&'a dyn Classifier),
}

impl TrainedModel {
    fn predictor(&self) -> Result<Predictor<'_>, RunError> {
        Ok(match self {
            TrainedModel::Network(doc) => {
                let (net, _) = doc.clone().into_network().map_err(TrainError::from)?;
                Predictor::Network(net)
            }
            TrainedModel::Tree(t) => Predictor::Other(t),
            TrainedModel::Forest(f) => Predictor::Other(f),
            TrainedModel::NaiveBayes(m) => Predictor::Other(m),
        })
    }
}

impl Predictor<'_> {
    fn proba(&self, data: &Dataset) -> Result<Vec<f64>, DimensionMismatch> {
        let c: &dyn Classifier = match self {
            Predictor::Network(n) => n,
            Predictor::Other(c) => *c,
        };
        data.samples().iter().map(|s| c.predict_proba(&s.features)).collect()
    }
}

/// Contents of `model.json`: everything needed to score new rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub kind: ModelKind,
    pub threshold: f64,
    pub normalization: Option<NormalizationParams>,
    pub model: TrainedModel,
}

impl ModelDocument {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, RunError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| RunError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Contents of `result.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub n_features: usize,
    pub hidden_layers: Option<usize>,
    pub n_train: usize,
    pub n_test: usize,
    pub split: SplitIndices,
    pub normalization: Option<NormalizationParams>,
    /// Swarm global-best fitness per iteration, or backprop loss per epoch.
    pub training_curve: Vec<f64>,
    pub train: EvaluationSummary,
    pub test: EvaluationSummary,
    pub model_file: String,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub result: ExperimentResult,
    pub model: ModelDocument,
    pub duration: Duration,
}

/// Files written per run.
pub const RESULT_FILE: &str = "result.json";
pub const MODEL_FILE: &str = "model.json";
pub const REPORT_FILE: &str = "report.txt";
pub const TIMING_FILE: &str = "timing.json";

struct Prepared {
    train: Dataset,
    test: Dataset,
    split: SplitIndices,
    normalization: Option<NormalizationParams>,
}

fn load_dataset(path: &Path) -> Result<Dataset, RunError> {
    let raw = dataset::load_csv(path).map_err(RunError::data(Stage::Load))?;
    dataset::encode(&raw).map_err(RunError::data(Stage::Encode))
}

fn split_spec(cfg: &ExperimentConfig) -> SplitSpec {
    SplitSpec {
        train_fraction: cfg.split.train_fraction,
        seed: rng::derive_seed(cfg.seed, SPLIT_STREAM),
        shuffle: cfg.split.shuffle,
        stratified: cfg.split.stratified,
    }
}

fn prepare(cfg: &ExperimentConfig, data: &Dataset) -> Result<Prepared, RunError> {
    let split = dataset::split_indices(data, &split_spec(cfg)).map_err(RunError::data(Stage::Split))?;
    let train = data.subset(&split.train);
    let test = data.subset(&split.test);
    let normalization = match cfg.normalize {
        NormalizeMode::Off => None,
        NormalizeMode::TrainOnly => Some(dataset::fit_normalizer(&train).map_err(RunError::data(Stage::Normalize))?),
        NormalizeMode::Full => Some(dataset::fit_normalizer(data).map_err(RunError::data(Stage::Normalize))?),
    };
    let (train, test) = match &normalization {
        Some(p) => (
            dataset::apply_normalizer(&train, p).map_err(RunError::data(Stage::Normalize))?,
            dataset::apply_normalizer(&test, p).map_err(RunError::data(Stage::Normalize))?,
        ),
        None => (train, test),
    };
    Ok(Prepared {
        train,
        test,
        split,
        normalization,
    })
}

fn train_model(
    spec: &ModelSpec,
    train: &Dataset,
    seed: u64,
    threshold: f64,
    schedule: Schedule,
) -> Result<(TrainedModel, Vec<f64>), TrainError> {
    let network_doc = |net: &Network| NetworkDocument {
        threshold,
        ..NetworkDocument::from(net)
    };
    Ok(match spec {
        ModelSpec::Psonn(s) => {
            let topology = Topology::with_hidden(train.n_features(), &s.hidden)?;
            let out = pso::train_psonn_with(&topology, train, &s.swarm(seed), s.fitness, schedule)?;
            (
                TrainedModel::Network(network_doc(&out.network)),
                out.optimization.fitness_history,
            )
        }
        ModelSpec::Bpnn(s) => {
            let topology = Topology::with_hidden(train.n_features(), &s.hidden)?;
            let cfg = BackpropConfig {
                learning_rate: s.learning_rate,
                epochs: s.epochs,
                seed,
            };
            let out = neural_net::backprop_train(&topology, train, &cfg)?;
            (TrainedModel::Network(network_doc(&out.network)), out.loss_history)
        }
        ModelSpec::Tree(t) => (TrainedModel::Tree(baselines::train_tree(train, t)?), Vec::new()),
        ModelSpec::Forest(f) => {
            let cfg = ForestConfig {
                n_trees: f.n_trees,
                feature_subset: f.feature_subset,
                bootstrap: f.bootstrap,
                seed,
                tree: f.tree,
            };
            (
                TrainedModel::Forest(baselines::train_forest_with(train, &cfg)?),
                Vec::new(),
            )
        }
        ModelSpec::Nb(s) => (
            TrainedModel::NaiveBayes(baselines::train_nb_with(train, s.binary_features)?),
            Vec::new(),
        ),
    })
}

fn prior_positive(train: &Dataset) -> f64 {
    let (pos, _) = dataset::class_counts(train);
    pos as f64 / train.len() as f64
}

fn score(model: &TrainedModel, threshold: f64, prior: f64, data: &Dataset) -> Result<EvaluationSummary, RunError> {
    let probs = model.predictor()?.proba(data)?;
    let actuals: Vec<_> = data.labels().collect();
    Ok(metrics::evaluate(&actuals, &probs, threshold, prior)?)
}

/// Train and evaluate without touching the filesystem beyond reading the
/// dataset.
pub fn run_in_memory(cfg: &ExperimentConfig, schedule: Schedule) -> Result<RunOutput, RunError> {
    let data = load_dataset(&cfg.dataset)?;
    run_on_dataset(cfg, &data, schedule)
}

/// Same as [`run_in_memory`] with the dataset already encoded.
pub fn run_on_dataset(cfg: &ExperimentConfig, data: &Dataset, schedule: Schedule) -> Result<RunOutput, RunError> {
    let started = Instant::now();
    let prepared = prepare(cfg, data)?;
    let model_seed = rng::derive_seed(cfg.seed, MODEL_STREAM);
    let (model, training_curve) = train_model(&cfg.model, &prepared.train, model_seed, cfg.threshold, schedule)?;

    let prior = prior_positive(&prepared.train);
    let train = score(&model, cfg.threshold, prior, &prepared.train)?;
    let test = score(&model, cfg.threshold, prior, &prepared.test)?;
    let hidden_layers = match &cfg.model {
        ModelSpec::Psonn(s) => Some(s.hidden.len()),
        ModelSpec::Bpnn(s) => Some(s.hidden.len()),
        _ => None,
    };
    let result = ExperimentResult {
        config: cfg.clone(),
        n_features: data.n_features(),
        hidden_layers,
        n_train: prepared.train.len(),
        n_test: prepared.test.len(),
        split: prepared.split,
        normalization: prepared.normalization.clone(),
        training_curve,
        train,
        test,
        model_file: MODEL_FILE.into(),
    };
    let model = ModelDocument {
        kind: cfg.kind(),
        threshold: cfg.threshold,
        normalization: prepared.normalization,
        model,
    };
    Ok(RunOutput {
        result,
        model,
        duration: started.elapsed(),
    })
}

fn write(path: PathBuf, contents: &str) -> Result<(), RunError> {
    fs::write(&path, contents).map_err(|source| RunError::Io { path, source })
}

fn ensure_dir(dir: &Path) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(|source| RunError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

/// Header plus train and test reports, as written to `report.txt`.
pub fn render_run_report(result: &ExperimentResult) -> String {
    let cfg = &result.config;
    let mut out = String::new();
    let _ = writeln!(out, "=== Run information ===\n");
    let _ = writeln!(out, "Model:        {}", cfg.kind());
    let _ = writeln!(out, "Dataset:      {}", cfg.dataset.display());
    let _ = writeln!(
        out,
        "Split:        {:.0}/{:.0} ({} train / {} test), seed {}",
        cfg.split.train_fraction * 100.0,
        (1.0 - cfg.split.train_fraction) * 100.0,
        result.n_train,
        result.n_test,
        cfg.seed
    );
    let _ = writeln!(out, "Normalize:    {:?}", cfg.normalize);
    out.push_str("\n=== Evaluation on training set ===\n\n");
    out.push_str(&metrics::render_report(&result.train));
    out.push_str("\n=== Evaluation on test set ===\n\n");
    out.push_str(&metrics::render_report(&result.test));
    out
}

/// Write `result.json`, `model.json`, `report.txt` and `timing.json` into `dir`.
pub fn persist(output: &RunOutput, dir: &Path) -> Result<(), RunError> {
    ensure_dir(dir)?;
    write(dir.join(RESULT_FILE), &serde_json::to_string_pretty(&output.result)?)?;
    write(dir.join(MODEL_FILE), &serde_json::to_string_pretty(&output.model)?)?;
    write(dir.join(REPORT_FILE), &render_run_report(&output.result))?;
    let timing = serde_json::json!({ "wall_clock_seconds": output.duration.as_secs_f64() });
    write(dir.join(TIMING_FILE), &serde_json::to_string_pretty(&timing)?)?;
    Ok(())
}

/// Full pipeline; artifacts land in `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput, RunError> {
    run_experiment_with(cfg, Schedule::default())
}

pub fn run_experiment_with(cfg: &ExperimentConfig, schedule: Schedule) -> Result<RunOutput, RunError> {
    let output = run_in_memory(cfg, schedule)?;
    persist(&output, &cfg.output_dir)?;
    Ok(output)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelEvaluation {
    pub train: EvaluationSummary,
    pub test: EvaluationSummary,
}

/// Score a saved model on the folds `cfg` would produce. The model's own
/// normalization parameters are used, nothing is refitted.
pub fn evaluate_saved(cfg: &ExperimentConfig, model: &ModelDocument) -> Result<ModelEvaluation, RunError> {
    let data = load_dataset(&cfg.dataset)?;
    let split = dataset::split_indices(&data, &split_spec(cfg)).map_err(RunError::data(Stage::Split))?;
    let (train, test) = (data.subset(&split.train), data.subset(&split.test));
    let (train, test) = match &model.normalization {
        Some(p) => (
            dataset::apply_normalizer(&train, p).map_err(RunError::data(Stage::Normalize))?,
            dataset::apply_normalizer(&test, p).map_err(RunError::data(Stage::Normalize))?,
        ),
        None => (train, test),
    };
    let prior = prior_positive(&train);
    Ok(ModelEvaluation {
        train: score(&model.model, model.threshold, prior, &train)?,
        test: score(&model.model, model.threshold, prior, &test)?,
    })
}

// ---------------------------------------------------------------------------
// Epoch sweep
// ---------------------------------------------------------------------------

pub const DEFAULT_SWEEP: [usize; 3] = [200, 500, 700];

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub epochs: Vec<usize>,
    pub runs: Vec<RunOutput>,
}

fn sweep_configs(cfg: &ExperimentConfig, epochs: &[usize]) -> Result<Vec<ExperimentConfig>, RunError> {
    let ModelSpec::Psonn(settings) = &cfg.model else {
        return Err(RunError::Usage(format!(
            "sweep needs model kind psonn, config has {}",
            cfg.kind()
        )));
    };
    if epochs.is_empty() {
        return Err(RunError::Usage("epoch list is empty".into()));
    }
    if epochs.contains(&0) {
        return Err(RunError::Usage("epoch counts must be at least 1".into()));
    }
    Ok(epochs
        .iter()
        .map(|&e| {
            let mut c = cfg.clone();
            c.model = ModelSpec::Psonn(PsonnSettings {
                iterations: e,
                ..settings.clone()
            });
            c.output_dir = cfg.output_dir.join(format!("epochs_{e}"));
            c
        })
        .collect())
}

fn run_all(configs: &[ExperimentConfig], data: &Dataset, schedule: Schedule) -> Vec<Result<RunOutput, RunError>> {
    match schedule {
        Schedule::Sequential => configs.iter().map(|c| run_on_dataset(c, data, schedule)).collect(),
        Schedule::Parallel => configs.par_iter().map(|c| run_on_dataset(c, data, schedule)).collect(),
    }
}

/// One PSONN run per epoch count, all on the same split. Artifacts go to
/// `<output_dir>/epochs_<n>/`, the table to `<output_dir>/sweep.txt`.
pub fn epoch_sweep(cfg: &ExperimentConfig, epochs: &[usize], schedule: Schedule) -> Result<SweepResult, RunError> {
    let configs = sweep_configs(cfg, epochs)?;
    let data = load_dataset(&cfg.dataset)?;
    let runs = run_all(&configs, &data, schedule)
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    for r in &runs {
        persist(r, &r.result.config.output_dir)?;
    }
    let sweep = SweepResult {
        epochs: epochs.to_vec(),
        runs,
    };
    ensure_dir(&cfg.output_dir)?;
    write(cfg.output_dir.join("sweep.txt"), &render_sweep_table(&sweep))?;
    Ok(sweep)
}

/// Two-part table (train phase, test phase) with one row per epoch count.
pub fn render_sweep_table(sweep: &SweepResult) -> String {
    let mut out = String::new();
    for (phase, acc_label) in [("Train phase", "Training accuracy"), ("Test phase", "Testing accuracy")] {
        let _ = writeln!(out, "{phase}");
        let _ = writeln!(
            out,
            "{:<4}{:<13}{:<15}{:<19}{:<20}{:<9}{:<9}{}",
            "ID", "# of epochs", "# of features", "# of observations", "# of hidden layers", "MAE", "RMSE", acc_label
        );
        for (i, (e, run)) in sweep.epochs.iter().zip(&sweep.runs).enumerate() {
            let r = &run.result;
            let (n, s) = if phase == "Train phase" {
                (r.n_train, &r.train)
            } else {
                (r.n_test, &r.test)
            };
            let _ = writeln!(
                out,
                "{:<4}{:<13}{:<15}{:<19}{:<20}{:<9}{:<9}{:.2}%",
                i + 1,
                e,
                r.n_features,
                n,
                r.hidden_layers.unwrap_or(0),
                metrics::format_short(s.mae),
                metrics::format_short(s.rmse),
                100.0 * s.accuracy
            );
        }
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// Model comparison
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub kind: ModelKind,
    pub train_fraction: f64,
    pub n_train: Option<usize>,
    pub n_test: Option<usize>,
    pub train_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub seed: u64,
    /// Sorted by test accuracy, best first; failed runs last.
    pub ranking: Vec<ComparisonEntry>,
    #[serde(skip)]
    pub reports: Vec<(ModelKind, String)>,
}

impl Comparison {
    pub fn entry(&self, kind: ModelKind) -> Option<&ComparisonEntry> {
        self.ranking.iter().find(|e| e.kind == kind)
    }
}

/// Reference-protocol configs for all five models.
pub fn comparison_configs(dataset: &Path, seed: u64, out_dir: &Path) -> Vec<ExperimentConfig> {
    ModelKind::ALL
        .iter()
        .map(|&k| {
            let mut c = ExperimentConfig::new(dataset, k, seed);
            c.output_dir = out_dir.join(k.name());
            c
        })
        .collect()
}

/// Run all five models, each under its own holdout protocol (PSONN 80/20,
/// the baselines 70/30), all min-max normalized on their training fold.
/// A model that fails to train is listed with its error instead of
/// aborting the comparison.
pub fn compare_models(dataset: &Path, seed: u64, out_dir: &Path, schedule: Schedule) -> Result<Comparison, RunError> {
    let data = load_dataset(dataset)?;
    let configs = comparison_configs(dataset, seed, out_dir);
    let outcomes = run_all(&configs, &data, schedule);

    let mut entries = Vec::new();
    let mut reports = Vec::new();
    for (cfg, outcome) in configs.iter().zip(outcomes) {
        let kind = cfg.kind();
        match outcome {
            Ok(run) => {
                persist(&run, &cfg.output_dir)?;
                reports.push((kind, render_run_report(&run.result)));
                entries.push(ComparisonEntry {
                    kind,
                    train_fraction: cfg.split.train_fraction,
                    n_train: Some(run.result.n_train),
                    n_test: Some(run.result.n_test),
                    train_accuracy: Some(run.result.train.accuracy),
                    test_accuracy: Some(run.result.test.accuracy),
                    error: None,
                });
            }
            Err(e) if matches!(e, RunError::Train(_) | RunError::Evaluate(_)) => {
                log::warn!("{kind}: {e}");
                entries.push(ComparisonEntry {
                    kind,
                    train_fraction: cfg.split.train_fraction,
                    n_train: None,
                    n_test: None,
                    train_accuracy: None,
                    test_accuracy: None,
                    error: Some(e.to_string()),
                });
            }
            Err(e) => return Err(e),
        }
    }
    // stable sort keeps the canonical model order among ties
    entries.sort_by(|a, b| match (a.test_accuracy, b.test_accuracy) {
        (Some(x), Some(y)) => y.total_cmp(&x),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    let comparison = Comparison {
        seed,
        ranking: entries,
        reports,
    };
    ensure_dir(out_dir)?;
    write(out_dir.join("comparison.txt"), &render_comparison(&comparison))?;
    write(
        out_dir.join("comparison.json"),
        &serde_json::to_string_pretty(&comparison)?,
    )?;
    Ok(comparison)
}

pub fn render_comparison(c: &Comparison) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Model comparison (seed {}). Each model runs under its own holdout protocol: \
         psonn 80/20, baselines 70/30; features min-max scaled on the training fold.",
        c.seed
    );
    let _ = writeln!(out, "All folds are drawn from the master seed above.\n");
    let _ = writeln!(
        out,
        "{:<6}{:<8}{:<8}{:<12}{:<16}Test accuracy",
        "Rank", "Model", "Split", "Train/Test", "Train accuracy"
    );
    for (i, e) in c.ranking.iter().enumerate() {
        let split = format!(
            "{:.0}/{:.0}",
            e.train_fraction * 100.0,
            (1.0 - e.train_fraction) * 100.0
        );
        let sizes = match (e.n_train, e.n_test) {
            (Some(a), Some(b)) => format!("{a}/{b}"),
            _ => "-".into(),
        };
        let pct = |v: Option<f64>| v.map_or_else(|| "-".into(), |a| format!("{:.4} %", 100.0 * a));
        let _ = write!(
            out,
            "{:<6}{:<8}{:<8}{:<12}{:<16}{}",
            i + 1,
            e.kind.name(),
            split,
            sizes,
            pct(e.train_accuracy),
            pct(e.test_accuracy)
        );
        if let Some(err) = &e.error {
            let _ = write!(out, "  (failed: {err})");
        }
        out.push('\n');
    }
    out
}
