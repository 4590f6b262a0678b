//! Binary classification metrics laid out the way Weka's `Evaluation`
//! summary prints them.
//!
//! The positive class is always row/column `a` of the confusion matrix.
//! Conventions for undefined ratios: precision, recall, rates and F-measure
//! with a zero denominator are 0; MCC with any zero marginal is 0; ROC and
//! PRC areas need both classes present and are reported as `?` otherwise.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::Label;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("no instances to evaluate")]
    Empty,
    #[error("length mismatch: {0} actual labels vs {1} predictions")]
    LengthMismatch(usize, usize),
    #[error("chance agreement is 1 but agreement is imperfect; kappa undefined")]
    DegenerateKappa,
    #[error("the prior-probability predictor has zero error; relative errors undefined")]
    DegeneratePrior,
    #[error("only one class present among actual labels")]
    SingleClass,
    #[error("probability {0} is outside [0, 1]")]
    Probability(f64),
}

/// 2x2 counts, rows are actual classes, columns predicted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fn_: u64, fp: u64, tn: u64) -> Result<Self, MetricsError> {
        let cm = Self { tp, fn_, fp, tn };
        if cm.total() == 0 {
            return Err(MetricsError::Empty);
        }
        Ok(cm)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }

    pub fn correct(&self) -> u64 {
        self.tp + self.tn
    }

    pub fn incorrect(&self) -> u64 {
        self.fn_ + self.fp
    }

    pub fn actual_positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn actual_negatives(&self) -> u64 {
        self.fp + self.tn
    }

    /// The same matrix seen with the negative class as `a`.
    pub fn transpose(&self) -> Self {
        Self {
            tp: self.tn,
            fn_: self.fp,
            fp: self.fn_,
            tn: self.tp,
        }
    }
}

pub fn build_confusion(actuals: &[Label], predicted: &[Label]) -> Result<ConfusionMatrix, MetricsError> {
    if actuals.len() != predicted.len() {
        return Err(MetricsError::LengthMismatch(actuals.len(), predicted.len()));
    }
    if actuals.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut cm = ConfusionMatrix {
        tp: 0,
        fn_: 0,
        fp: 0,
        tn: 0,
    };
    for (a, p) in actuals.iter().zip(predicted) {
        match (a, p) {
            (Label::Positive, Label::Positive) => cm.tp += 1,
            (Label::Positive, Label::Negative) => cm.fn_ += 1,
            (Label::Negative, Label::Positive) => cm.fp += 1,
            (Label::Negative, Label::Negative) => cm.tn += 1,
        }
    }
    Ok(cm)
}

/// `(accuracy, kappa)`. Kappa uses chance agreement from the row and column
/// marginals; computed from integer counts so the degenerate case is exact.
pub fn scalar_metrics(cm: &ConfusionMatrix) -> Result<(f64, f64), MetricsError> {
    let n = cm.total() as u128;
    if n == 0 {
        return Err(MetricsError::Empty);
    }
    let correct = cm.correct() as u128;
    let accuracy = correct as f64 / n as f64;
    let (tp, fn_, fp, tn) = (cm.tp as u128, cm.fn_ as u128, cm.fp as u128, cm.tn as u128);
    let chance = (tp + fn_) * (tp + fp) + (fp + tn) * (fn_ + tn);
    let n2 = n * n;
    let kappa = if chance == n2 {
        if correct != n {
            return Err(MetricsError::DegenerateKappa);
        }
        1.0
    } else {
        ((n * correct) as f64 - chance as f64) / (n2 - chance) as f64
    };
    Ok((accuracy, kappa))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub tp_rate: f64,
    pub fp_rate: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub mcc: f64,
    pub roc_area: Option<f64>,
    pub prc_area: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub positive: ClassStats,
    pub negative: ClassStats,
    /// Weighted by actual-class support.
    pub weighted: ClassStats,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn mcc(cm: &ConfusionMatrix) -> f64 {
    let (tp, fn_, fp, tn) = (cm.tp as f64, cm.fn_ as f64, cm.fp as f64, cm.tn as f64);
    let factors = [tp + fp, tp + fn_, tn + fp, tn + fn_];
    if factors.contains(&0.0) {
        return 0.0;
    }
    (tp * tn - fp * fn_) / factors.iter().product::<f64>().sqrt()
}

/// Stats for the class in position `a` of `cm`.
fn stats_for(cm: &ConfusionMatrix) -> ClassStats {
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    let f_measure = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    ClassStats {
        tp_rate: recall,
        fp_rate: ratio(cm.fp, cm.fp + cm.tn),
        precision,
        recall,
        f_measure,
        mcc: mcc(cm),
        roc_area: None,
        prc_area: None,
    }
}

fn weighted(a: &ClassStats, wa: f64, b: &ClassStats, wb: f64) -> ClassStats {
    let total = wa + wb;
    let avg = |x: f64, y: f64| if total == 0.0 { 0.0 } else { (x * wa + y * wb) / total };
    let avg_opt = |x: Option<f64>, y: Option<f64>| Some(avg(x?, y?));
    ClassStats {
        tp_rate: avg(a.tp_rate, b.tp_rate),
        fp_rate: avg(a.fp_rate, b.fp_rate),
        precision: avg(a.precision, b.precision),
        recall: avg(a.recall, b.recall),
        f_measure: avg(a.f_measure, b.f_measure),
        mcc: avg(a.mcc, b.mcc),
        roc_area: avg_opt(a.roc_area, b.roc_area),
        prc_area: avg_opt(a.prc_area, b.prc_area),
    }
}

/// Per-class rates, precision, recall, F-measure and MCC. Areas are left
/// unset; [`evaluate`] fills them from scores.
pub fn class_metrics(cm: &ConfusionMatrix) -> ClassReport {
    let positive = stats_for(cm);
    let negative = stats_for(&cm.transpose());
    ClassReport {
        positive,
        negative,
        weighted: weighted(
            &positive,
            cm.actual_positives() as f64,
            &negative,
            cm.actual_negatives() as f64,
        ),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilisticErrors {
    pub mae: f64,
    pub rmse: f64,
    /// Percent.
    pub rae: f64,
    /// Percent.
    pub rrse: f64,
}

fn check_scores(probs: &[f64], actuals: &[Label]) -> Result<(), MetricsError> {
    if probs.len() != actuals.len() {
        return Err(MetricsError::LengthMismatch(actuals.len(), probs.len()));
    }
    if probs.is_empty() {
        return Err(MetricsError::Empty);
    }
    if let Some(&p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(MetricsError::Probability(p));
    }
    Ok(())
}

fn abs_and_sq(probs: impl Iterator<Item = f64>, actuals: &[Label]) -> (f64, f64) {
    let n = actuals.len() as f64;
    let (mut abs, mut sq) = (0.0, 0.0);
    for (p, a) in probs.zip(actuals) {
        let d = p - a.target();
        abs += d.abs();
        sq += d * d;
    }
    (abs / n, (sq / n).sqrt())
}

/// Weka-style errors on class-probability estimates. Averaging over both
/// probability columns reduces to `|p - y|` on the positive column. The
/// relative errors divide by the errors of a predictor that always outputs
/// `train_prior_positive`.
pub fn probabilistic_errors(
    probs: &[f64],
    actuals: &[Label],
    train_prior_positive: f64,
) -> Result<ProbabilisticErrors, MetricsError> {
    check_scores(probs, actuals)?;
    if !(0.0..=1.0).contains(&train_prior_positive) {
        return Err(MetricsError::Probability(train_prior_positive));
    }
    let (mae, rmse) = abs_and_sq(probs.iter().copied(), actuals);
    let (ref_mae, ref_rmse) = abs_and_sq(std::iter::repeat(train_prior_positive), actuals);
    if ref_mae == 0.0 || ref_rmse == 0.0 {
        return Err(MetricsError::DegeneratePrior);
    }
    Ok(ProbabilisticErrors {
        mae,
        rmse,
        rae: 100.0 * mae / ref_mae,
        rrse: 100.0 * rmse / ref_rmse,
    })
}

fn class_sizes(actuals: &[Label]) -> Result<(usize, usize), MetricsError> {
    let pos = actuals.iter().filter(|l| l.is_positive()).count();
    let neg = actuals.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(MetricsError::SingleClass);
    }
    Ok((pos, neg))
}

/// Probability that a random positive scores above a random negative, ties
/// counting one half. Computed from mid-ranks in `O(n log n)`.
pub fn roc_auc(probs: &[f64], actuals: &[Label]) -> Result<f64, MetricsError> {
    if probs.len() != actuals.len() {
        return Err(MetricsError::LengthMismatch(actuals.len(), probs.len()));
    }
    let (pos, neg) = class_sizes(actuals)?;
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[a].total_cmp(&probs[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && probs[order[j + 1]] == probs[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their mean
        let mid = (i + j) as f64 / 2.0 + 1.0;
        let tied_pos = order[i..=j].iter().filter(|&&k| actuals[k].is_positive()).count();
        rank_sum += mid * tied_pos as f64;
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Area under the precision-recall curve: sweep thresholds over the
/// distinct scores from high to low and sum `precision * delta recall`.
pub fn prc_auc(probs: &[f64], actuals: &[Label]) -> Result<f64, MetricsError> {
    if probs.len() != actuals.len() {
        return Err(MetricsError::LengthMismatch(actuals.len(), probs.len()));
    }
    let (pos, _) = class_sizes(actuals)?;
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut area = 0.0;
    let mut i = 0;
    while i < order.len() {
        let score = probs[order[i]];
        while i < order.len() && probs[order[i]] == score {
            if actuals[order[i]].is_positive() {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let recall = tp as f64 / pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(area)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub correct: u64,
    pub incorrect: u64,
    pub accuracy: f64,
    pub kappa: f64,
    pub mae: f64,
    pub rmse: f64,
    /// Percent; `None` when the prior predictor is error-free.
    pub relative_absolute_error: Option<f64>,
    pub root_relative_squared_error: Option<f64>,
    pub total: u64,
    pub class_report: ClassReport,
    pub confusion: ConfusionMatrix,
}

/// Score `probs` (positive-class probabilities) against `actuals`. Labels
/// are predicted positive when `p >= threshold`.
pub fn evaluate(
    actuals: &[Label],
    probs: &[f64],
    threshold: f64,
    train_prior_positive: f64,
) -> Result<EvaluationSummary, MetricsError> {
    check_scores(probs, actuals)?;
    let predicted: Vec<Label> = probs.iter().map(|&p| Label::from_bool(p >= threshold)).collect();
    let confusion = build_confusion(actuals, &predicted)?;
    let (accuracy, kappa) = scalar_metrics(&confusion)?;

    let mut class_report = class_metrics(&confusion);
    if class_sizes(actuals).is_ok() {
        let neg_scores: Vec<f64> = probs.iter().map(|p| 1.0 - p).collect();
        let flipped: Vec<Label> = actuals.iter().map(|l| Label::from_bool(!l.is_positive())).collect();
        class_report.positive.roc_area = Some(roc_auc(probs, actuals)?);
        class_report.positive.prc_area = Some(prc_auc(probs, actuals)?);
        class_report.negative.roc_area = Some(roc_auc(&neg_scores, &flipped)?);
        class_report.negative.prc_area = Some(prc_auc(&neg_scores, &flipped)?);
        class_report.weighted = weighted(
            &class_report.positive,
            confusion.actual_positives() as f64,
            &class_report.negative,
            confusion.actual_negatives() as f64,
        );
    }

    let (mae, rmse) = abs_and_sq(probs.iter().copied(), actuals);
    let (rae, rrse) = match probabilistic_errors(probs, actuals, train_prior_positive) {
        Ok(e) => (Some(e.rae), Some(e.rrse)),
        Err(MetricsError::DegeneratePrior) => (None, None),
        Err(e) => return Err(e),
    };
    Ok(EvaluationSummary {
        correct: confusion.correct(),
        incorrect: confusion.incorrect(),
        accuracy,
        kappa,
        mae,
        rmse,
        relative_absolute_error: rae,
        root_relative_squared_error: rrse,
        total: confusion.total(),
        class_report,
        confusion,
    })
}

/// Four decimals with trailing zeros dropped: `1`, `0.03`, `0.9839`.
pub fn format_short(x: f64) -> String {
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn pct(x: f64) -> String {
    format!("{x:.4} %")
}

fn cell(x: Option<f64>) -> String {
    x.map_or_else(|| "?".into(), |v| format!("{v:.3}"))
}

const COLUMNS: [(&str, usize); 8] = [
    ("TP Rate", 9),
    ("FP Rate", 9),
    ("Precision", 11),
    ("Recall", 9),
    ("F-Measure", 11),
    ("MCC", 9),
    ("ROC Area", 10),
    ("PRC Area", 10),
];

fn class_row(out: &mut String, lead: &str, s: &ClassStats, name: &str) {
    let values = [
        Some(s.tp_rate),
        Some(s.fp_rate),
        Some(s.precision),
        Some(s.recall),
        Some(s.f_measure),
        Some(s.mcc),
        s.roc_area,
        s.prc_area,
    ];
    let _ = write!(out, "{lead:<17}");
    for ((_, w), v) in COLUMNS.iter().zip(values) {
        let _ = write!(out, "{:<w$}", cell(v), w = *w);
    }
    out.push_str(name);
    out.truncate(out.trim_end_matches(' ').len());
    out.push('\n');
}

/// Weka-style three-section text report.
pub fn render_report(summary: &EvaluationSummary) -> String {
    let total = summary.total as f64;
    let mut out = String::new();
    let line = |out: &mut String, label: &str, value: String| {
        let _ = writeln!(out, "{label:<36}{value}");
    };

    out.push_str("=== Summary ===\n\n");
    let _ = writeln!(
        out,
        "{:<36}{:<10}{:>12}",
        "Correctly Classified Instances",
        summary.correct,
        pct(100.0 * summary.correct as f64 / total)
    );
    let _ = writeln!(
        out,
        "{:<36}{:<10}{:>12}",
        "Incorrectly Classified Instances",
        summary.incorrect,
        pct(100.0 * summary.incorrect as f64 / total)
    );
    line(&mut out, "Kappa statistic", format_short(summary.kappa));
    line(&mut out, "Mean absolute error", format_short(summary.mae));
    line(&mut out, "Root mean squared error", format_short(summary.rmse));
    line(
        &mut out,
        "Relative absolute error",
        summary.relative_absolute_error.map_or_else(|| "?".into(), pct),
    );
    line(
        &mut out,
        "Root relative squared error",
        summary.root_relative_squared_error.map_or_else(|| "?".into(), pct),
    );
    line(&mut out, "Total Number of Instances", summary.total.to_string());

    out.push_str("\n=== Detailed Accuracy By Class ===\n\n");
    let _ = write!(out, "{:<17}", "");
    for (name, w) in COLUMNS {
        let _ = write!(out, "{name:<w$}");
    }
    out.push_str("Class\n");
    let r = &summary.class_report;
    class_row(&mut out, "", &r.positive, "positive");
    class_row(&mut out, "", &r.negative, "negative");
    class_row(&mut out, "Weighted Avg.", &r.weighted, "");

    out.push_str("\n=== Confusion Matrix ===\n\n");
    let cm = &summary.confusion;
    let width = [cm.tp, cm.fn_, cm.fp, cm.tn]
        .iter()
        .map(|v| v.to_string().len())
        .max()
        .unwrap_or(1)
        .max(3)
        + 1;
    let _ = writeln!(out, "{:>width$}{:>width$}   <-- classified as", "a", "b");
    let _ = writeln!(out, "{:>width$}{:>width$} |   a = positive", cm.tp, cm.fn_);
    let _ = writeln!(out, "{:>width$}{:>width$} |   b = negative", cm.fp, cm.tn);
    out
}
