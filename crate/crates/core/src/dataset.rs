//! Loading, encoding, normalizing and splitting the heart-attack table.
//!
//! The expected CSV layout is one header row followed by the eight clinical
//! features and the target, in this column order:
//!
//! | # | column        | encoding                                        |
//! |---|---------------|-------------------------------------------------|
//! | 0 | Age           | years                                           |
//! | 1 | Gender        | `male`/`female` or `1`/`0`                      |
//! | 2 | Pulse         | beats per minute                                |
//! | 3 | Pressure high | systolic, mm Hg                                 |
//! | 4 | Pressure low  | diastolic, mm Hg                                |
//! | 5 | Glucose       | raw mg/dl (`> 120` becomes 1) or already `1`/`0` |
//! | 6 | CK-MB         | enzyme level                                    |
//! | 7 | Troponin      | enzyme level                                    |
//! | 8 | Target        | `positive`/`negative` or `1`/`0`                |
//!
//! Column names are not checked, only positions. A tenth column is accepted
//! when it repeats the target (some exports carry both the numeric and the
//! textual label); the two must agree.

use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng;

pub const HEART_FEATURES: [&str; 8] = [
    "Age",
    "Gender",
    "Pulse",
    "Pressure high",
    "Pressure low",
    "Glucose",
    "CK-MB",
    "Troponin",
];

const GENDER_COL: usize = 1;
const GLUCOSE_COL: usize = 5;
const TARGET_COL: usize = 8;
const GLUCOSE_CUTOFF: f64 = 120.0;

/// Descriptive ranges from the attribute table. Values outside them are kept
/// and only reported.
const EXPECTED_RANGES: [(usize, f64, f64); 3] = [(2, 10.0, 180.0), (3, 70.0, 190.0), (4, 40.0, 100.0)];

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("CSV has no header row")]
    EmptyHeader,
    #[error("row {row} has {found} cells, header has {expected}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("expected 9 or 10 columns (8 features + target), found {0}")]
    Layout(usize),
    #[error("row {row}, column '{column}': unrecognized category '{value}'")]
    Category { row: usize, column: String, value: String },
    #[error("row {row}, column '{column}': '{value}' is not a finite number")]
    NotNumeric { row: usize, column: String, value: String },
    #[error("row {row}: target columns disagree")]
    LabelConflict { row: usize },
    #[error("dataset is empty")]
    Empty,
    #[error("sample {row} has {found} features, expected {expected}")]
    Dimension { row: usize, expected: usize, found: usize },
    #[error("train_fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error("need at least 2 records to split, got {0}")]
    TooFewRecords(usize),
}

/// Untyped CSV contents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl RawTable {
    pub fn new(header: Vec<String>, rows: Vec<Vec<String>>) -> Result<Self, DataError> {
        if header.is_empty() {
            return Err(DataError::EmptyHeader);
        }
        for (row, cells) in rows.iter().enumerate() {
            if cells.len() != header.len() {
                return Err(DataError::RaggedRow {
                    row,
                    expected: header.len(),
                    found: cells.len(),
                });
            }
        }
        Ok(Self { header, rows })
    }
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<RawTable, DataError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(file)
}

/// Parse CSV text. Cells are trimmed; no type coercion happens here.
pub fn parse_csv<R: Read>(reader: R) -> Result<RawTable, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(DataError::EmptyHeader);
    }
    let mut rows = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(DataError::RaggedRow {
                row,
                expected: header.len(),
                found: record.len(),
            });
        }
        rows.push(record.iter().map(str::to_owned).collect());
    }
    Ok(RawTable { header, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn from_bool(positive: bool) -> Self {
        if positive {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }

    /// 1.0 for positive, 0.0 for negative.
    pub fn target(self) -> f64 {
        if self.is_positive() {
            1.0
        } else {
            0.0
        }
    }

    pub fn as_u8(self) -> u8 {
        self.is_positive() as u8
    }
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.as_u8())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(Label::Negative),
            1 => Ok(Label::Positive),
            other => Err(serde::de::Error::custom(format!("label must be 0 or 1, got {other}"))),
        }
    }
}

/// One encoded row of the heart table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatientRecord {
    pub age: f64,
    pub gender: f64,
    pub heart_rate: f64,
    pub systolic_bp: f64,
    pub diastolic_bp: f64,
    pub glucose_flag: f64,
    pub ck_mb: f64,
    pub troponin: f64,
    pub label: Label,
}

impl PatientRecord {
    pub fn features(&self) -> [f64; 8] {
        [
            self.age,
            self.gender,
            self.heart_rate,
            self.systolic_bp,
            self.diastolic_bp,
            self.glucose_flag,
            self.ck_mb,
            self.troponin,
        ]
    }

    fn from_sample(s: &Sample) -> Option<Self> {
        let f: &[f64; 8] = s.features.as_slice().try_into().ok()?;
        Some(Self {
            age: f[0],
            gender: f[1],
            heart_rate: f[2],
            systolic_bp: f[3],
            diastolic_bp: f[4],
            glucose_flag: f[5],
            ck_mb: f[6],
            troponin: f[7],
            label: s.label,
        })
    }
}

impl From<PatientRecord> for Sample {
    fn from(r: PatientRecord) -> Self {
        Sample {
            features: r.features().to_vec(),
            label: r.label,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: Label,
}

impl Sample {
    pub fn new(features: Vec<f64>, label: Label) -> Self {
        Self { features, label }
    }
}

/// Ordered, immutable collection of labelled samples sharing one feature
/// layout. The heart table has eight features; toy and synthetic sets may
/// use any width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    feature_names: Vec<String>,
    samples: Vec<Sample>,
}

impl Dataset {
    pub fn new(feature_names: Vec<String>, samples: Vec<Sample>) -> Result<Self, DataError> {
        let expected = feature_names.len();
        for (row, s) in samples.iter().enumerate() {
            if s.features.len() != expected {
                return Err(DataError::Dimension {
                    row,
                    expected,
                    found: s.features.len(),
                });
            }
            if let Some(column) = s.features.iter().position(|v| !v.is_finite()) {
                return Err(DataError::NotNumeric {
                    row,
                    column: feature_names[column].clone(),
                    value: s.features[column].to_string(),
                });
            }
        }
        Ok(Self { feature_names, samples })
    }

    /// Build a dataset with generated names `x0, x1, ...`.
    pub fn from_samples(n_features: usize, samples: Vec<Sample>) -> Result<Self, DataError> {
        let names = (0..n_features).map(|i| format!("x{i}")).collect();
        Self::new(names, samples)
    }

    pub fn from_records(records: impl IntoIterator<Item = PatientRecord>) -> Self {
        Self {
            feature_names: HEART_FEATURES.iter().map(|s| s.to_string()).collect(),
            samples: records.into_iter().map(Sample::from).collect(),
        }
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        self.samples.iter().map(|s| s.label)
    }

    /// Typed view, available when the layout has exactly eight features.
    pub fn records(&self) -> Option<Vec<PatientRecord>> {
        self.samples.iter().map(PatientRecord::from_sample).collect()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            feature_names: self.feature_names.clone(),
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
        }
    }

    /// Render back to an encoded table (`0`/`1` categoricals and labels).
    pub fn to_raw_table(&self) -> RawTable {
        let mut header = self.feature_names.clone();
        header.push("Target".into());
        let rows = self
            .samples
            .iter()
            .map(|s| {
                let mut cells: Vec<String> = s.features.iter().map(|v| v.to_string()).collect();
                cells.push(s.label.as_u8().to_string());
                cells
            })
            .collect();
        RawTable { header, rows }
    }
}

fn parse_number(row: usize, column: &str, cell: &str) -> Result<f64, DataError> {
    cell.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| DataError::NotNumeric {
            row,
            column: column.to_owned(),
            value: cell.to_owned(),
        })
}

fn parse_gender(row: usize, column: &str, cell: &str) -> Result<f64, DataError> {
    match cell.to_ascii_lowercase().as_str() {
        "male" | "m" | "1" | "1.0" => Ok(1.0),
        "female" | "f" | "0" | "0.0" => Ok(0.0),
        _ => Err(DataError::Category {
            row,
            column: column.to_owned(),
            value: cell.to_owned(),
        }),
    }
}

fn parse_label(row: usize, column: &str, cell: &str) -> Result<Label, DataError> {
    match cell.to_ascii_lowercase().as_str() {
        "positive" | "1" | "1.0" => Ok(Label::Positive),
        "negative" | "0" | "0.0" => Ok(Label::Negative),
        _ => Err(DataError::Category {
            row,
            column: column.to_owned(),
            value: cell.to_owned(),
        }),
    }
}

/// Turn the raw table into numeric features and binary labels.
///
/// Gender becomes male=1/female=0. Glucose is thresholded at `> 120` mg/dl,
/// unless every value in the column is already 0 or 1, in which case the
/// column is taken as pre-encoded. Encoding an already encoded table is a
/// no-op.
pub fn encode(raw: &RawTable) -> Result<Dataset, DataError> {
    let width = raw.header.len();
    if !(width == 9 || width == 10) {
        return Err(DataError::Layout(width));
    }
    let names = &raw.header;

    let mut samples = Vec::with_capacity(raw.rows.len());
    for (row, cells) in raw.rows.iter().enumerate() {
        if cells.len() != width {
            return Err(DataError::RaggedRow {
                row,
                expected: width,
                found: cells.len(),
            });
        }
        let mut features = Vec::with_capacity(8);
        for col in 0..8 {
            let v = if col == GENDER_COL {
                parse_gender(row, &names[col], &cells[col])?
            } else {
                parse_number(row, &names[col], &cells[col])?
            };
            features.push(v);
        }
        let label = parse_label(row, &names[TARGET_COL], &cells[TARGET_COL])?;
        if width == 10 && parse_label(row, &names[9], &cells[9])? != label {
            return Err(DataError::LabelConflict { row });
        }
        samples.push(Sample { features, label });
    }

    let pre_encoded = samples
        .iter()
        .all(|s| s.features[GLUCOSE_COL] == 0.0 || s.features[GLUCOSE_COL] == 1.0);
    if !pre_encoded {
        for s in &mut samples {
            s.features[GLUCOSE_COL] = if s.features[GLUCOSE_COL] > GLUCOSE_CUTOFF {
                1.0
            } else {
                0.0
            };
        }
    }

    for &(col, lo, hi) in &EXPECTED_RANGES {
        let outside = samples
            .iter()
            .filter(|s| s.features[col] < lo || s.features[col] > hi)
            .count();
        if outside > 0 {
            log::warn!(
                "{outside} value(s) in column '{}' fall outside the usual range {lo}-{hi}; kept as is",
                names[col]
            );
        }
    }

    Dataset::new(names[..8].to_vec(), samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureRange {
    pub min: f64,
    pub max: f64,
}

/// Per-feature min/max fitted on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub ranges: Vec<FeatureRange>,
}

impl NormalizationParams {
    pub fn scale(&self, features: &[f64]) -> Result<Vec<f64>, DataError> {
        if features.len() != self.ranges.len() {
            return Err(DataError::Dimension {
                row: 0,
                expected: self.ranges.len(),
                found: features.len(),
            });
        }
        Ok(features
            .iter()
            .zip(&self.ranges)
            .map(|(&x, r)| {
                let span = r.max - r.min;
                if span > 0.0 {
                    ((x - r.min) / span).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect())
    }
}

pub fn fit_normalizer(train: &Dataset) -> Result<NormalizationParams, DataError> {
    if train.is_empty() {
        return Err(DataError::Empty);
    }
    let mut ranges = vec![
        FeatureRange {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        };
        train.n_features()
    ];
    for s in train.samples() {
        for (r, &v) in ranges.iter_mut().zip(&s.features) {
            r.min = r.min.min(v);
            r.max = r.max.max(v);
        }
    }
    Ok(NormalizationParams { ranges })
}

/// Min-max scale every feature into `[0, 1]`. Values outside the fitted
/// range are clamped; a constant feature maps to 0.
pub fn apply_normalizer(data: &Dataset, params: &NormalizationParams) -> Result<Dataset, DataError> {
    if data.n_features() != params.ranges.len() {
        return Err(DataError::Dimension {
            row: 0,
            expected: params.ranges.len(),
            found: data.n_features(),
        });
    }
    let samples = data
        .samples()
        .iter()
        .map(|s| Ok(Sample::new(params.scale(&s.features)?, s.label)))
        .collect::<Result<Vec<_>, DataError>>()?;
    Ok(Dataset {
        feature_names: data.feature_names.clone(),
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub shuffle: bool,
    #[serde(default)]
    pub stratified: bool,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Self {
        Self {
            train_fraction,
            seed,
            shuffle: true,
            stratified: false,
        }
    }

    /// Number of training rows for `n` records: `floor(n * fraction)`, kept
    /// within `1..n` so neither fold is empty.
    pub fn train_size(&self, n: usize) -> usize {
        let raw = (n as f64 * self.train_fraction + 1e-9).floor() as usize;
        raw.clamp(1, n.saturating_sub(1).max(1))
    }
}

/// Row indices of the two folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn split_indices(data: &Dataset, spec: &SplitSpec) -> Result<SplitIndices, DataError> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(DataError::InvalidFraction(spec.train_fraction));
    }
    let n = data.len();
    if n < 2 {
        return Err(DataError::TooFewRecords(n));
    }
    let n_train = spec.train_size(n);
    let mut rng = rng::seeded(spec.seed);

    if !spec.stratified {
        let mut order: Vec<usize> = (0..n).collect();
        if spec.shuffle {
            order.shuffle(&mut rng);
        }
        let test = order.split_off(n_train);
        return Ok(SplitIndices { train: order, test });
    }

    let (mut pos, mut neg): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| data.samples[i].label.is_positive());
    if spec.shuffle {
        pos.shuffle(&mut rng);
        neg.shuffle(&mut rng);
    }
    let want_pos = ((pos.len() as f64 * spec.train_fraction).round() as usize).min(pos.len());
    let take_pos = want_pos.min(n_train).max(n_train.saturating_sub(neg.len()));
    let take_neg = n_train - take_pos;
    let test_pos = pos.split_off(take_pos);
    let test_neg = neg.split_off(take_neg);
    let mut train = pos;
    train.extend(neg);
    let mut test = test_pos;
    test.extend(test_neg);
    if spec.shuffle {
        train.shuffle(&mut rng);
        test.shuffle(&mut rng);
    }
    Ok(SplitIndices { train, test })
}

/// Holdout split: the first `floor(n * fraction)` rows of a (seeded)
/// permutation train, the rest test.
pub fn split(data: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset), DataError> {
    let idx = split_indices(data, spec)?;
    Ok((data.subset(&idx.train), data.subset(&idx.test)))
}

/// `(positives, negatives)`.
pub fn class_counts(data: &Dataset) -> (usize, usize) {
    let pos = data.labels().filter(|l| l.is_positive()).count();
    (pos, data.len() - pos)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG1_HEAD: &str = "\
Age,Gender,Pulse,Pressure high,Pressure low,Glucose,CK-MB,Troponin,Target
64,1,66,160,83,1,1.8,0.012,negative
21,1,94,98,46,1,6.75,1.06,positive
55,1,64,160,77,1,1.99,0.003,negative
";

    fn toy(values: &[f64], labels: &[u8]) -> Dataset {
        let samples = values
            .iter()
            .zip(labels)
            .map(|(&v, &l)| Sample::new(vec![v], Label::from_bool(l == 1)))
            .collect();
        Dataset::from_samples(1, samples).unwrap()
    }

    #[test]
    fn parses_fig1_rows() {
        let raw = parse_csv(FIG1_HEAD.as_bytes()).unwrap();
        assert_eq!(raw.header.len(), 9);
        assert_eq!(raw.rows.len(), 3);
        let data = encode(&raw).unwrap();
        assert_eq!(class_counts(&data), (1, 2));
        let recs = data.records().unwrap();
        assert_eq!(recs[1].ck_mb, 6.75);
        assert_eq!(recs[1].label, Label::Positive);
    }

    #[test]
    fn header_only_file() {
        let raw = parse_csv("a,b,c\n".as_bytes()).unwrap();
        assert!(raw.rows.is_empty());
    }

    #[test]
    fn ragged_row_is_named() {
        let text = "a,b,c,d,e,f,g,h,i\n1,2,3,4,5,6,7,8,9\n1,2,3,4,5,6,7\n";
        match parse_csv(text.as_bytes()) {
            Err(DataError::RaggedRow { row, expected, found }) => {
                assert_eq!((row, expected, found), (1, 9, 7));
            }
            other => panic!("expected ragged-row error, got {other:?}"),
        }
    }

    #[test]
    fn raw_table_rejects_ragged_and_empty_header() {
        assert!(matches!(RawTable::new(vec![], vec![]), Err(DataError::EmptyHeader)));
        let r = RawTable::new(vec!["a".into(), "b".into()], vec![vec!["1".into()]]);
        assert!(matches!(r, Err(DataError::RaggedRow { row: 0, .. })));
    }

    fn one_row(gender: &str, glucose: &str, target: &str) -> RawTable {
        let cells = ["50", gender, "70", "120", "80", glucose, "2.0", "0.01", target];
        RawTable::new(
            HEART_FEATURES
                .iter()
                .map(|s| s.to_string())
                .chain(["Target".to_string()])
                .collect(),
            vec![cells.iter().map(|s| s.to_string()).collect()],
        )
        .unwrap()
    }

    #[test]
    fn gender_and_target_text() {
        let d = encode(&one_row("Male", "1", "negative")).unwrap();
        let r = d.records().unwrap()[0];
        assert_eq!(r.gender, 1.0);
        assert_eq!(r.label, Label::Negative);
        let d = encode(&one_row("female", "0", "POSITIVE")).unwrap();
        let r = d.records().unwrap()[0];
        assert_eq!(r.gender, 0.0);
        assert_eq!(r.label, Label::Positive);
    }

    #[test]
    fn glucose_threshold_is_strict() {
        assert_eq!(
            encode(&one_row("1", "121", "1")).unwrap().records().unwrap()[0].glucose_flag,
            1.0
        );
        assert_eq!(
            encode(&one_row("1", "120", "1")).unwrap().records().unwrap()[0].glucose_flag,
            0.0
        );
    }

    #[test]
    fn bad_cells_are_reported() {
        assert!(matches!(
            encode(&one_row("other", "1", "1")),
            Err(DataError::Category { row: 0, .. })
        ));
        assert!(matches!(
            encode(&one_row("1", "1", "maybe")),
            Err(DataError::Category { row: 0, .. })
        ));
        assert!(matches!(
            encode(&one_row("1", "abc", "1")),
            Err(DataError::NotNumeric { row: 0, .. })
        ));
    }

    #[test]
    fn duplicate_target_column_must_agree() {
        let text = "Age,Gender,Pulse,Pressure high,Pressure low,Glucose,CK-MB,Troponin,Target,Target\n\
                    64,1,66,160,83,1,1.8,0.012,0,negative\n";
        assert_eq!(encode(&parse_csv(text.as_bytes()).unwrap()).unwrap().len(), 1);
        let bad = text.replace("0,negative", "0,positive");
        assert!(matches!(
            encode(&parse_csv(bad.as_bytes()).unwrap()),
            Err(DataError::LabelConflict { row: 0 })
        ));
    }

    #[test]
    fn normalizer_examples() {
        let d = toy(&[40.0, 60.0, 100.0], &[0, 1, 0]);
        let p = fit_normalizer(&d).unwrap();
        assert_eq!(p.ranges[0], FeatureRange { min: 40.0, max: 100.0 });
        let n = apply_normalizer(&d, &p).unwrap();
        let xs: Vec<f64> = n.samples().iter().map(|s| s.features[0]).collect();
        assert_eq!(xs[0], 0.0);
        assert_eq!(xs[2], 1.0);

        let c = toy(&[1.0, 1.0, 1.0], &[0, 1, 0]);
        let p = fit_normalizer(&c).unwrap();
        assert_eq!(p.ranges[0], FeatureRange { min: 1.0, max: 1.0 });
        assert!(apply_normalizer(&c, &p)
            .unwrap()
            .samples()
            .iter()
            .all(|s| s.features[0] == 0.0));

        let single = toy(&[7.0], &[1]);
        let p = fit_normalizer(&single).unwrap();
        assert!(p.ranges.iter().all(|r| r.min == r.max));

        assert!(matches!(fit_normalizer(&toy(&[], &[])), Err(DataError::Empty)));
    }

    #[test]
    fn normalizer_clamps_and_checks_width() {
        let p = fit_normalizer(&toy(&[0.0, 10.0], &[0, 1])).unwrap();
        let out = apply_normalizer(&toy(&[-5.0, 20.0], &[0, 1]), &p).unwrap();
        assert_eq!(out.samples()[0].features[0], 0.0);
        assert_eq!(out.samples()[1].features[0], 1.0);
        let wide = Dataset::from_samples(2, vec![Sample::new(vec![1.0, 2.0], Label::Positive)]).unwrap();
        assert!(matches!(apply_normalizer(&wide, &p), Err(DataError::Dimension { .. })));
    }

    #[test]
    fn split_sizes() {
        let d = toy(&vec![0.0; 1319], &vec![0; 1319]);
        let (tr, te) = split(&d, &SplitSpec::new(0.8, 1)).unwrap();
        assert_eq!((tr.len(), te.len()), (1055, 264));
        let (tr, te) = split(&d, &SplitSpec::new(0.7, 1)).unwrap();
        assert_eq!((tr.len(), te.len()), (923, 396));
    }

    #[test]
    fn unshuffled_split_is_a_cut() {
        let vals: Vec<f64> = (0..10).map(f64::from).collect();
        let d = toy(&vals, &[0; 10]);
        let spec = SplitSpec {
            shuffle: false,
            ..SplitSpec::new(0.5, 0)
        };
        let idx = split_indices(&d, &spec).unwrap();
        assert_eq!(idx.train, vec![0, 1, 2, 3, 4]);
        assert_eq!(idx.test, vec![5, 6, 7, 8, 9]);
    }

    #[test]
    fn split_rejects_bad_input() {
        let d = toy(&[1.0, 2.0, 3.0], &[0, 1, 0]);
        for f in [0.0, 1.0, 1.5, -0.1, f64::NAN] {
            assert!(matches!(
                split(&d, &SplitSpec::new(f, 0)),
                Err(DataError::InvalidFraction(_))
            ));
        }
        assert!(matches!(
            split(&toy(&[1.0], &[0]), &SplitSpec::new(0.5, 0)),
            Err(DataError::TooFewRecords(1))
        ));
    }

    #[test]
    fn stratified_split_keeps_class_ratio() {
        let labels: Vec<u8> = (0..100).map(|i| u8::from(i % 4 == 0)).collect();
        let d = toy(&vec![0.0; 100], &labels);
        let spec = SplitSpec {
            stratified: true,
            ..SplitSpec::new(0.8, 3)
        };
        let (tr, te) = split(&d, &spec).unwrap();
        assert_eq!(tr.len(), 80);
        assert_eq!(class_counts(&tr), (20, 60));
        assert_eq!(class_counts(&te), (5, 15));
    }

    #[test]
    fn class_count_examples() {
        assert_eq!(class_counts(&toy(&[], &[])), (0, 0));
        assert_eq!(class_counts(&toy(&[0.0; 5], &[1; 5])), (5, 0));
    }
}
