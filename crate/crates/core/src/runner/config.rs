//! Experiment configuration files.
//!
//! A config is a TOML document. Every key is optional except `data.path`
//! and `model.kind`; anything not listed below is rejected.
//!
//! ```toml
//! seed = 42                 # master seed; split and model seeds derive from it
//! threshold = 0.5           # positive when p >= threshold
//!
//! [data]
//! path = "heart.csv"        # relative paths resolve against the config file
//!
//! [model]
//! kind = "psonn"            # psonn | bpnn | tree | forest | nb
//!
//! [split]
//! train_fraction = 0.8      # default 0.8 for psonn, 0.7 otherwise
//! shuffle = true
//! stratified = false
//!
//! [normalize]
//! mode = "train-only"       # train-only | full | off
//!
//! [output]
//! dir = "runs/psonn"        # default runs/<kind>
//!
//! [psonn]
//! hidden = [5, 5]
//! swarm_size = 50
//! inertia = 0.729
//! cognitive = 1.49445
//! social = 1.49445
//! position_low = -10.0
//! position_high = 10.0
//! vmax = 4.0
//! iterations = 700
//! fitness = "mse"           # mse | misclassification
//!
//! [bpnn]
//! hidden = [5, 5]
//! learning_rate = 0.3
//! epochs = 500
//!
//! [tree]
//! max_depth = 10            # omit for unlimited
//! min_samples_leaf = 1
//!
//! [forest]
//! n_trees = 100
//! feature_subset = 2
//! bootstrap = true
//! max_depth = 10
//! min_samples_leaf = 1
//!
//! [nb]
//! binary_features = "gaussian"   # gaussian | bernoulli
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::baselines::{BinaryFeatures, TreeConfig};
use crate::pso::{FitnessKind, SwarmConfig};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config syntax: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("{0}: required key is missing")]
    Missing(String),
    #[error("{0}: unknown key")]
    Unknown(String),
    #[error("{path}: expected {expected}")]
    Type { path: String, expected: &'static str },
    #[error("{path}: {message}")]
    Range { path: String, message: String },
    #[error("model.kind: unknown model '{0}', expected one of psonn, bpnn, tree, forest, nb")]
    UnknownModel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Psonn,
    Bpnn,
    Tree,
    Forest,
    Nb,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Psonn,
        ModelKind::Bpnn,
        ModelKind::Tree,
        ModelKind::Forest,
        ModelKind::Nb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Psonn => "psonn",
            ModelKind::Bpnn => "bpnn",
            ModelKind::Tree => "tree",
            ModelKind::Forest => "forest",
            ModelKind::Nb => "nb",
        }
    }

    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ConfigError::UnknownModel(s.to_owned()))
    }

    /// Holdout fraction used by the reference protocol for this model.
    pub fn default_train_fraction(self) -> f64 {
        match self {
            ModelKind::Psonn => 0.8,
            _ => 0.7,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizeMode {
    /// Fit min/max on the training fold, apply to both folds.
    #[default]
    TrainOnly,
    /// Fit on the whole dataset before splitting.
    Full,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsonnSettings {
    pub hidden: Vec<usize>,
    pub swarm_size: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub position_low: f64,
    pub position_high: f64,
    pub vmax: f64,
    pub iterations: usize,
    pub fitness: FitnessKind,
}

impl Default for PsonnSettings {
    fn default() -> Self {
        let s = SwarmConfig::default();
        Self {
            hidden: vec![5, 5],
            swarm_size: s.swarm_size,
            inertia: s.inertia,
            cognitive: s.cognitive,
            social: s.social,
            position_low: s.position_low,
            position_high: s.position_high,
            vmax: s.vmax,
            iterations: s.iterations,
            fitness: FitnessKind::Mse,
        }
    }
}

impl PsonnSettings {
    pub fn swarm(&self, seed: u64) -> SwarmConfig {
        SwarmConfig {
            swarm_size: self.swarm_size,
            inertia: self.inertia,
            cognitive: self.cognitive,
            social: self.social,
            position_low: self.position_low,
            position_high: self.position_high,
            vmax: self.vmax,
            iterations: self.iterations,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BpnnSettings {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for BpnnSettings {
    fn default() -> Self {
        Self {
            hidden: vec![5, 5],
            learning_rate: 0.3,
            epochs: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestSettings {
    pub n_trees: usize,
    pub feature_subset: usize,
    pub bootstrap: bool,
    pub tree: TreeConfig,
}

impl Default for ForestSettings {
    fn default() -> Self {
        Self {
            n_trees: 100,
            feature_subset: 2,
            bootstrap: true,
            tree: TreeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NbSettings {
    pub binary_features: BinaryFeatures,
}

/// Model kind plus its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Psonn(PsonnSettings),
    Bpnn(BpnnSettings),
    Tree(TreeConfig),
    Forest(ForestSettings),
    Nb(NbSettings),
}

impl ModelSpec {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Psonn(_) => ModelKind::Psonn,
            ModelSpec::Bpnn(_) => ModelKind::Bpnn,
            ModelSpec::Tree(_) => ModelKind::Tree,
            ModelSpec::Forest(_) => ModelKind::Forest,
            ModelSpec::Nb(_) => ModelKind::Nb,
        }
    }

    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Psonn => ModelSpec::Psonn(PsonnSettings::default()),
            ModelKind::Bpnn => ModelSpec::Bpnn(BpnnSettings::default()),
            ModelKind::Tree => ModelSpec::Tree(TreeConfig::default()),
            ModelKind::Forest => ModelSpec::Forest(ForestSettings::default()),
            ModelKind::Nb => ModelSpec::Nb(NbSettings::default()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSettings {
    pub train_fraction: f64,
    pub shuffle: bool,
    pub stratified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    pub model: ModelSpec,
    pub split: SplitSettings,
    pub normalize: NormalizeMode,
    pub seed: u64,
    pub threshold: f64,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Reference-protocol defaults for `kind`.
    pub fn new(dataset: impl Into<PathBuf>, kind: ModelKind, seed: u64) -> Self {
        Self {
            dataset: dataset.into(),
            model: ModelSpec::default_for(kind),
            split: SplitSettings {
                train_fraction: kind.default_train_fraction(),
                shuffle: true,
                stratified: false,
            },
            normalize: NormalizeMode::TrainOnly,
            seed,
            threshold: 0.5,
            output_dir: PathBuf::from("runs").join(kind.name()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.model.kind()
    }
}

/// Typed, path-qualified access to one TOML table. Keys read are recorded
/// so leftovers can be reported as unknown.
struct Section<'a> {
    path: String,
    table: Option<&'a Table>,
    seen: BTreeSet<String>,
}

impl<'a> Section<'a> {
    fn new(path: &str, table: Option<&'a Table>) -> Self {
        Self {
            path: path.to_owned(),
            table,
            seen: BTreeSet::new(),
        }
    }

    fn key(&self, k: &str) -> String {
        if self.path.is_empty() {
            k.to_owned()
        } else {
            format!("{}.{k}", self.path)
        }
    }

    fn get(&mut self, k: &str) -> Option<&'a Value> {
        self.seen.insert(k.to_owned());
        self.table.and_then(|t| t.get(k))
    }

    fn sub(&mut self, k: &str) -> Result<Section<'a>, ConfigError> {
        let path = self.key(k);
        match self.get(k) {
            None => Ok(Section::new(&path, None)),
            Some(Value::Table(t)) => Ok(Section::new(&path, Some(t))),
            Some(_) => Err(ConfigError::Type {
                path,
                expected: "a table",
            }),
        }
    }

    fn opt_str(&mut self, k: &str) -> Result<Option<&'a str>, ConfigError> {
        match self.get(k) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.as_str())),
            Some(_) => Err(ConfigError::Type {
                path: self.key(k),
                expected: "a string",
            }),
        }
    }

    fn req_str(&mut self, k: &str) -> Result<&'a str, ConfigError> {
        self.opt_str(k)?.ok_or_else(|| ConfigError::Missing(self.key(k)))
    }

    fn opt_f64(&mut self, k: &str) -> Result<Option<f64>, ConfigError> {
        match self.get(k) {
            None => Ok(None),
            Some(Value::Float(f)) => Ok(Some(*f)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(_) => Err(ConfigError::Type {
                path: self.key(k),
                expected: "a number",
            }),
        }
    }

    fn f64_or(&mut self, k: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.opt_f64(k)?.unwrap_or(default))
    }

    fn opt_u64(&mut self, k: &str) -> Result<Option<u64>, ConfigError> {
        match self.get(k) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(_) => Err(ConfigError::Type {
                path: self.key(k),
                expected: "a non-negative integer",
            }),
        }
    }

    fn usize_or(&mut self, k: &str, default: usize) -> Result<usize, ConfigError> {
        Ok(self.opt_u64(k)?.map_or(default, |v| v as usize))
    }

    /// Positive integer with a default.
    fn count_or(&mut self, k: &str, default: usize) -> Result<usize, ConfigError> {
        let v = self.usize_or(k, default)?;
        if v == 0 {
            return Err(self.range(k, "must be at least 1".into()));
        }
        Ok(v)
    }

    fn bool_or(&mut self, k: &str, default: bool) -> Result<bool, ConfigError> {
        match self.get(k) {
            None => Ok(default),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(_) => Err(ConfigError::Type {
                path: self.key(k),
                expected: "true or false",
            }),
        }
    }

    fn counts_or(&mut self, k: &str, default: &[usize]) -> Result<Vec<usize>, ConfigError> {
        let path = self.key(k);
        match self.get(k) {
            None => Ok(default.to_vec()),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    Value::Integer(i) if *i > 0 => Ok(*i as usize),
                    _ => Err(ConfigError::Type {
                        path: path.clone(),
                        expected: "a list of positive integers",
                    }),
                })
                .collect(),
            Some(_) => Err(ConfigError::Type {
                path,
                expected: "a list of positive integers",
            }),
        }
    }

    fn range(&self, k: &str, message: String) -> ConfigError {
        ConfigError::Range {
            path: self.key(k),
            message,
        }
    }

    fn finish(self) -> Result<(), ConfigError> {
        if let Some(t) = self.table {
            if let Some(extra) = t.keys().find(|k| !self.seen.contains(*k)) {
                return Err(ConfigError::Unknown(self.key(extra)));
            }
        }
        Ok(())
    }
}

fn tree_settings(s: &mut Section<'_>) -> Result<TreeConfig, ConfigError> {
    let max_depth = s.opt_u64("max_depth")?.map(|d| d as usize);
    let min_samples_leaf = s.count_or("min_samples_leaf", 1)?;
    Ok(TreeConfig {
        max_depth,
        min_samples_leaf,
    })
}

fn psonn_settings(mut s: Section<'_>) -> Result<PsonnSettings, ConfigError> {
    let d = PsonnSettings::default();
    let hidden = s.counts_or("hidden", &d.hidden)?;
    let out = PsonnSettings {
        hidden,
        swarm_size: s.count_or("swarm_size", d.swarm_size)?,
        inertia: s.f64_or("inertia", d.inertia)?,
        cognitive: s.f64_or("cognitive", d.cognitive)?,
        social: s.f64_or("social", d.social)?,
        position_low: s.f64_or("position_low", d.position_low)?,
        position_high: s.f64_or("position_high", d.position_high)?,
        vmax: s.f64_or("vmax", d.vmax)?,
        iterations: s.count_or("iterations", d.iterations)?,
        fitness: match s.opt_str("fitness")? {
            None | Some("mse") => FitnessKind::Mse,
            Some("misclassification") => FitnessKind::Misclassification,
            Some(other) => return Err(s.range("fitness", format!("'{other}' is not mse or misclassification"))),
        },
    };
    if out.position_low >= out.position_high {
        return Err(s.range("position_high", "must exceed position_low".into()));
    }
    if out.vmax.is_nan() || out.vmax <= 0.0 {
        return Err(s.range("vmax", "must be positive".into()));
    }
    s.finish()?;
    Ok(out)
}

fn bpnn_settings(mut s: Section<'_>) -> Result<BpnnSettings, ConfigError> {
    let d = BpnnSettings::default();
    let out = BpnnSettings {
        hidden: s.counts_or("hidden", &d.hidden)?,
        learning_rate: s.f64_or("learning_rate", d.learning_rate)?,
        epochs: s.count_or("epochs", d.epochs)?,
    };
    if !(out.learning_rate > 0.0 && out.learning_rate.is_finite()) {
        return Err(s.range("learning_rate", "must be positive".into()));
    }
    s.finish()?;
    Ok(out)
}

fn forest_settings(mut s: Section<'_>) -> Result<ForestSettings, ConfigError> {
    let d = ForestSettings::default();
    let out = ForestSettings {
        n_trees: s.count_or("n_trees", d.n_trees)?,
        feature_subset: s.count_or("feature_subset", d.feature_subset)?,
        bootstrap: s.bool_or("bootstrap", d.bootstrap)?,
        tree: tree_settings(&mut s)?,
    };
    if out.feature_subset > 8 {
        return Err(s.range("feature_subset", "cannot exceed the 8 input features".into()));
    }
    s.finish()?;
    Ok(out)
}

fn nb_settings(mut s: Section<'_>) -> Result<NbSettings, ConfigError> {
    let binary_features = match s.opt_str("binary_features")? {
        None | Some("gaussian") => BinaryFeatures::Gaussian,
        Some("bernoulli") => BinaryFeatures::Bernoulli,
        Some(other) => {
            return Err(s.range("binary_features", format!("'{other}' is not gaussian or bernoulli")));
        }
    };
    s.finish()?;
    Ok(NbSettings { binary_features })
}

/// Parse config text. Relative paths resolve against `base_dir`.
pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<ExperimentConfig, ConfigError> {
    let table: Table = text.parse()?;
    let mut root = Section::new("", Some(&table));

    let seed = root.opt_u64("seed")?.unwrap_or(0);
    let threshold = root.f64_or("threshold", 0.5)?;
    if !(0.0..=1.0).contains(&threshold) {
        return Err(root.range("threshold", "must lie in [0, 1]".into()));
    }

    let mut data = root.sub("data")?;
    let dataset = base_dir.join(data.req_str("path")?);
    data.finish()?;

    let mut model = root.sub("model")?;
    let kind = ModelKind::parse(model.req_str("kind")?)?;
    model.finish()?;

    // every model section is validated, only the selected one is used
    let psonn = psonn_settings(root.sub("psonn")?)?;
    let bpnn = bpnn_settings(root.sub("bpnn")?)?;
    let mut tree_sec = root.sub("tree")?;
    let tree = tree_settings(&mut tree_sec)?;
    tree_sec.finish()?;
    let forest = forest_settings(root.sub("forest")?)?;
    let nb = nb_settings(root.sub("nb")?)?;
    let spec = match kind {
        ModelKind::Psonn => ModelSpec::Psonn(psonn),
        ModelKind::Bpnn => ModelSpec::Bpnn(bpnn),
        ModelKind::Tree => ModelSpec::Tree(tree),
        ModelKind::Forest => ModelSpec::Forest(forest),
        ModelKind::Nb => ModelSpec::Nb(nb),
    };

    let mut split = root.sub("split")?;
    let train_fraction = split.f64_or("train_fraction", kind.default_train_fraction())?;
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(split.range(
            "train_fraction",
            format!("{train_fraction} is outside the open interval (0, 1)"),
        ));
    }
    let split_settings = SplitSettings {
        train_fraction,
        shuffle: split.bool_or("shuffle", true)?,
        stratified: split.bool_or("stratified", false)?,
    };
    split.finish()?;

    let mut norm = root.sub("normalize")?;
    let normalize = match norm.opt_str("mode")? {
        None | Some("train-only") => NormalizeMode::TrainOnly,
        Some("full") => NormalizeMode::Full,
        Some("off") => NormalizeMode::Off,
        Some(other) => {
            return Err(norm.range("mode", format!("'{other}' is not train-only, full or off")));
        }
    };
    norm.finish()?;

    let mut output = root.sub("output")?;
    let output_dir = match output.opt_str("dir")? {
        Some(d) => base_dir.join(d),
        None => base_dir.join("runs").join(kind.name()),
    };
    output.finish()?;

    root.finish()?;
    Ok(ExperimentConfig {
        dataset,
        model: spec,
        split: split_settings,
        normalize,
        seed,
        threshold,
        output_dir,
    })
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<ExperimentConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    parse_config_str(&text, base)
}
