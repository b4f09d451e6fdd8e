//! Confusion matrices, macro-averaged scores and stage timings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::label::{ClassLabel, NUM_CLASSES};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("{truth} true labels but {predicted} predictions")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("no examples to score")]
    Empty,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// `cells[true][predicted]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix(pub [[u64; NUM_CLASSES]; NUM_CLASSES]);

impl ConfusionMatrix {
    pub fn add(&mut self, truth: ClassLabel, predicted: ClassLabel) {
        self.0[truth.index()][predicted.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.0.iter().flatten().sum()
    }

    pub fn true_positives(&self, c: usize) -> u64 {
        self.0[c][c]
    }

    pub fn false_positives(&self, c: usize) -> u64 {
        (0..NUM_CLASSES).filter(|&t| t != c).map(|t| self.0[t][c]).sum()
    }

    pub fn false_negatives(&self, c: usize) -> u64 {
        (0..NUM_CLASSES).filter(|&p| p != c).map(|p| self.0[c][p]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        (0..NUM_CLASSES).map(|c| self.0[c][c]).sum::<u64>() as f64 / total as f64
    }
}

pub fn confusion(y_true: &[ClassLabel], y_pred: &[ClassLabel]) -> Result<ConfusionMatrix, MetricsError> {
    if y_true.len() != y_pred.len() {
        return Err(MetricsError::LengthMismatch {
            truth: y_true.len(),
            predicted: y_pred.len(),
        });
    }
    let mut m = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        m.add(t, p);
    }
    Ok(m)
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

/// Per-class precision, recall and F1. F1 is `2TP / (2TP + FP + FN)`; any 0/0 is 0.
pub fn class_scores(m: &ConfusionMatrix) -> [ClassScores; NUM_CLASSES] {
    std::array::from_fn(|c| {
        let (tp, fp, fn_) = (m.true_positives(c), m.false_positives(c), m.false_negatives(c));
        ClassScores {
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, tp + fn_),
            f1: ratio(2 * tp, 2 * tp + fp + fn_),
            support: tp + fn_,
        }
    })
}

/// Unweighted means over the three classes: (precision, recall, F1).
pub fn macro_scores(m: &ConfusionMatrix) -> (f64, f64, f64) {
    let s = class_scores(m);
    let mean = |f: fn(&ClassScores) -> f64| s.iter().map(f).sum::<f64>() / NUM_CLASSES as f64;
    (mean(|c| c.precision), mean(|c| c.recall), mean(|c| c.f1))
}

pub fn macro_f1(y_true: &[ClassLabel], y_pred: &[ClassLabel]) -> Result<f64, MetricsError> {
    Ok(macro_scores(&confusion(y_true, y_pred)?).2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    pub n: u64,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub per_class: BTreeMap<String, ClassScores>,
    pub confusion: ConfusionMatrix,
    #[serde(default)]
    pub timings_s: BTreeMap<String, f64>,
}

impl MetricsReport {
    pub fn from_confusion(m: ConfusionMatrix) -> Self {
        let (macro_precision, macro_recall, macro_f1) = macro_scores(&m);
        let per_class = ClassLabel::ALL
            .iter()
            .zip(class_scores(&m))
            .map(|(l, s)| (l.name().to_string(), s))
            .collect();
        MetricsReport {
            model: None,
            dataset: None,
            n: m.total(),
            accuracy: m.accuracy(),
            macro_f1,
            macro_precision,
            macro_recall,
            per_class,
            confusion: m,
            timings_s: BTreeMap::new(),
        }
    }

    pub fn evaluate(y_true: &[ClassLabel], y_pred: &[ClassLabel]) -> Result<Self, MetricsError> {
        if y_true.is_empty() {
            return Err(MetricsError::Empty);
        }
        Ok(Self::from_confusion(confusion(y_true, y_pred)?))
    }

    pub fn with_names(mut self, model: impl Into<String>, dataset: impl Into<String>) -> Self {
        self.model = Some(model.into());
        self.dataset = Some(dataset.into());
        self
    }

    pub fn save(&self, path: &Path) -> Result<(), MetricsError> {
        let p = path.display().to_string();
        let mut text = serde_json::to_string_pretty(self).map_err(|source| MetricsError::Json { path: p.clone(), source })?;
        text.push('\n');
        std::fs::write(path, text).map_err(|source| MetricsError::Io { path: p, source })
    }

    pub fn load(path: &Path) -> Result<Self, MetricsError> {
        let p = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| MetricsError::Io { path: p.clone(), source })?;
        serde_json::from_str(&text).map_err(|source| MetricsError::Json { path: p, source })
    }
}

/// Renders reports as a fixed-width table sorted by (model, dataset).
pub fn render_table(reports: &[MetricsReport]) -> String {
    let mut rows: Vec<&MetricsReport> = reports.iter().collect();
    rows.sort_by(|a, b| (&a.model, &a.dataset).cmp(&(&b.model, &b.dataset)));
    let name = |s: &Option<String>| s.clone().unwrap_or_else(|| "-".into());
    let mw = rows.iter().map(|r| name(&r.model).len()).max().unwrap_or(0).max(5);
    let dw = rows.iter().map(|r| name(&r.dataset).len()).max().unwrap_or(0).max(7);
    let mut out = String::new();
    let _ = writeln!(out, "{:<mw$}  {:<dw$}  {:>6}  {:>8}  {:>8}  {:>8}  {:>8}", "model", "dataset", "n", "accuracy", "macro_f1", "macro_p", "macro_r");
    for r in rows {
        let _ = writeln!(
            out,
            "{:<mw$}  {:<dw$}  {:>6}  {:>8.4}  {:>8.4}  {:>8.4}  {:>8.4}",
            name(&r.model),
            name(&r.dataset),
            r.n,
            r.accuracy,
            r.macro_f1,
            r.macro_precision,
            r.macro_recall
        );
    }
    out
}

/// Wall-clock seconds per named stage. Nested stages are recorded as `outer/inner`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    prefix: String,
    stages: BTreeMap<String, f64>,
}

impl Timings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn time_stage<R>(&mut self, name: &str, f: impl FnOnce(&mut Timings) -> R) -> (R, f64) {
        let full = if self.prefix.is_empty() {
            name.to_string()
        } else {
            format!("{}/{name}", self.prefix)
        };
        let mut inner = Timings {
            prefix: full.clone(),
            stages: BTreeMap::new(),
        };
        let start = Instant::now();
        let out = f(&mut inner);
        let secs = start.elapsed().as_secs_f64();
        self.stages.extend(inner.stages);
        *self.stages.entry(full).or_insert(0.0) += secs;
        (out, secs)
    }

    pub fn record(&mut self, name: &str, secs: f64) {
        *self.stages.entry(name.to_string()).or_insert(0.0) += secs;
    }

    pub fn stages(&self) -> &BTreeMap<String, f64> {
        &self.stages
    }

    pub fn into_map(self) -> BTreeMap<String, f64> {
        self.stages
    }

    pub fn render(&self) -> String {
        let w = self.stages.keys().map(String::len).max().unwrap_or(0).max(5);
        let mut out = String::new();
        for (k, v) in &self.stages {
            let _ = writeln!(out, "{k:<w$}  {v:>10.4}s");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ClassLabel::{Hateful as H, Neither as N, Offensive as O};

    #[test]
    fn six_example_case() {
        let t = [H, H, O, O, N, N];
        let p = [H, O, O, O, N, H];
        let r = MetricsReport::evaluate(&t, &p).unwrap();
        assert!((r.accuracy - 4.0 / 6.0).abs() < 1e-12);
        // F1: hateful 1/2, offensive 4/5, neither 2/3
        assert!((r.macro_f1 - (0.5 + 0.8 + 2.0 / 3.0) / 3.0).abs() < 1e-12);
        assert_eq!(format!("{:.4}", r.macro_f1), "0.6556");
    }

    #[test]
    fn perfect_and_absent_classes() {
        let t = [H, O, N, N];
        assert_eq!(macro_f1(&t, &t).unwrap(), 1.0);
        // class never present nor predicted scores 0
        let r = MetricsReport::evaluate(&[O, O], &[O, O]).unwrap();
        assert!((r.macro_f1 - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.per_class["hateful"].precision, 0.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(confusion(&[H], &[]), Err(MetricsError::LengthMismatch { truth: 1, predicted: 0 })));
        assert!(matches!(MetricsReport::evaluate(&[], &[]), Err(MetricsError::Empty)));
    }

    #[test]
    fn nested_timings() {
        let mut t = Timings::new();
        let (v, _) = t.time_stage("train", |t| t.time_stage("fold0", |_| 7).0);
        assert_eq!(v, 7);
        let keys: Vec<_> = t.stages().keys().cloned().collect();
        assert_eq!(keys, ["train", "train/fold0"]);
        assert!(t.render().contains("train/fold0"));
    }

    #[test]
    fn table_is_sorted() {
        let r = MetricsReport::evaluate(&[H, O], &[H, O]).unwrap();
        let table = render_table(&[r.clone().with_names("b", "x"), r.with_names("a", "y")]);
        let lines: Vec<&str> = table.lines().collect();
        assert!(lines[1].starts_with("a ") && lines[2].starts_with("b "));
    }
}
