//! Corpus loading, label harmonization, fusion and stratified splitting.
//!
//! Published layouts understood by the loaders (delimiter sniffed from the header):
//!
//! | corpus    | text column | label column | mapping                                   |
//! |-----------|-------------|--------------|-------------------------------------------|
//! | Davidson  | `tweet`     | `class`      | 0 hateful, 1 offensive, 2 neither         |
//! | HatEval   | `text`      | `HS`         | 1 hateful, 0 neither                      |
//! | OLID      | `tweet`     | `subtask_a`  | `OFF` offensive, `NOT` neither            |
//!
//! The id column is `id` when present (Davidson's unnamed leading column is
//! also accepted); otherwise the 1-based row number is used.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::label::{ClassLabel, NUM_CLASSES};
use crate::preprocess::Preprocessor;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: missing column {column:?}")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}: row {row}: {message}")]
    MalformedRow {
        path: PathBuf,
        row: u64,
        message: String,
    },
    #[error("{path}: row {row}: unknown label value {value:?}")]
    UnknownLabel {
        path: PathBuf,
        row: u64,
        value: String,
    },
    #[error("class {0} has no examples")]
    EmptyClass(ClassLabel),
    #[error("class {class} is too small to stratify: {count} examples leave split {split} empty")]
    ClassTooSmall {
        class: ClassLabel,
        count: usize,
        split: &'static str,
    },
    #[error("invalid split ratios {0:?}: need three non-negative fractions summing to 1")]
    InvalidRatios([f64; 3]),
    #[error("split plan covers {plan} indices but corpus has {corpus}")]
    PlanMismatch { plan: usize, corpus: usize },
}

/// Source corpus of an example.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusId {
    Davidson,
    #[serde(rename = "hateval2019")]
    HatEval2019,
    Olid,
    /// Generated by [`crate::synth`].
    Synthetic,
}

impl CorpusId {
    pub fn name(self) -> &'static str {
        match self {
            CorpusId::Davidson => "davidson",
            CorpusId::HatEval2019 => "hateval2019",
            CorpusId::Olid => "olid",
            CorpusId::Synthetic => "synthetic",
        }
    }
}

impl fmt::Display for CorpusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CorpusId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "davidson" => Ok(CorpusId::Davidson),
            "hateval2019" | "hateval" => Ok(CorpusId::HatEval2019),
            "olid" => Ok(CorpusId::Olid),
            "synthetic" => Ok(CorpusId::Synthetic),
            other => Err(format!("unknown corpus {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledExample {
    pub id: String,
    pub text: String,
    pub label: ClassLabel,
    pub source: CorpusId,
}

/// Per-class example counts, indexed by [`ClassLabel::index`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Histogram(pub [usize; NUM_CLASSES]);

impl Histogram {
    pub fn of<'a>(labels: impl IntoIterator<Item = &'a ClassLabel>) -> Self {
        let mut h = [0; NUM_CLASSES];
        for l in labels {
            h[l.index()] += 1;
        }
        Histogram(h)
    }

    pub fn count(&self, label: ClassLabel) -> usize {
        self.0[label.index()]
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn fraction(&self, label: ClassLabel) -> f64 {
        match self.total() {
            0 => 0.0,
            n => self.count(label) as f64 / n as f64,
        }
    }
}

/// An ordered, immutable collection of labeled examples.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    examples: Vec<LabeledExample>,
    histogram: Histogram,
}

impl Corpus {
    pub fn new(examples: Vec<LabeledExample>) -> Self {
        let histogram = Histogram::of(examples.iter().map(|e| &e.label));
        Corpus { examples, histogram }
    }

    pub fn examples(&self) -> &[LabeledExample] {
        &self.examples
    }

    pub fn histogram(&self) -> Histogram {
        self.histogram
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn labels(&self) -> Vec<ClassLabel> {
        self.examples.iter().map(|e| e.label).collect()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.examples.iter().map(|e| e.text.as_str()).collect()
    }

    pub fn into_examples(self) -> Vec<LabeledExample> {
        self.examples
    }

    /// Examples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Corpus {
        Corpus::new(indices.iter().map(|&i| self.examples[i].clone()).collect())
    }

    /// Runs every text through `pp`, dropping examples the pipeline rejects.
    /// Returns the cleaned corpus and the number of dropped rows.
    pub fn normalized(&self, pp: &Preprocessor) -> (Corpus, usize) {
        let mut dropped = 0;
        let kept = self
            .examples
            .iter()
            .filter_map(|e| match pp.normalize(&e.text).clean() {
                Some(clean) => Some(LabeledExample {
                    text: clean.into_string(),
                    ..e.clone()
                }),
                None => {
                    dropped += 1;
                    None
                }
            })
            .collect();
        (Corpus::new(kept), dropped)
    }

    pub fn histogram_report(&self) -> HistogramReport {
        let named = |h: Histogram| -> BTreeMap<String, usize> {
            ClassLabel::ALL
                .iter()
                .map(|&l| (l.name().to_string(), h.count(l)))
                .collect()
        };
        let mut by_source: BTreeMap<CorpusId, Vec<ClassLabel>> = BTreeMap::new();
        for e in &self.examples {
            by_source.entry(e.source).or_default().push(e.label);
        }
        HistogramReport {
            total: self.len(),
            counts: named(self.histogram),
            fractions: ClassLabel::ALL
                .iter()
                .map(|&l| (l.name().to_string(), self.histogram.fraction(l)))
                .collect(),
            by_source: by_source
                .into_iter()
                .map(|(s, labels)| (s.name().to_string(), named(Histogram::of(&labels))))
                .collect(),
        }
    }
}

/// JSON summary of a corpus's label distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramReport {
    pub total: usize,
    pub counts: BTreeMap<String, usize>,
    pub fractions: BTreeMap<String, f64>,
    pub by_source: BTreeMap<String, BTreeMap<String, usize>>,
}

fn open(path: &Path) -> Result<File, DatasetError> {
    File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Opens a delimited file, choosing tab when the header line contains one.
fn delimited_reader(path: &Path) -> Result<csv::Reader<Box<dyn Read>>, DatasetError> {
    let mut reader = BufReader::new(open(path)?);
    let mut first = String::new();
    reader.read_line(&mut first).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let delimiter = if first.contains('\t') { b'\t' } else { b',' };
    let chained: Box<dyn Read> = Box::new(std::io::Cursor::new(first.into_bytes()).chain(reader));
    Ok(csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(false)
        .from_reader(chained))
}

fn column(headers: &csv::StringRecord, names: &[&str], path: &Path) -> Result<usize, DatasetError> {
    headers
        .iter()
        .position(|h| names.iter().any(|n| h.trim().eq_ignore_ascii_case(n)))
        .ok_or_else(|| DatasetError::MissingColumn {
            path: path.to_path_buf(),
            column: names[0].to_string(),
        })
}

/// Shared row loop: `map_label` turns the raw label cell into a class.
fn load_with(
    path: &Path,
    source: CorpusId,
    text_cols: &[&str],
    label_cols: &[&str],
    id_cols: &[&str],
    map_label: impl Fn(&str) -> Option<ClassLabel>,
) -> Result<Corpus, DatasetError> {
    let mut reader = delimited_reader(path)?;
    let headers = reader
        .headers()
        .map_err(|e| DatasetError::MalformedRow {
            path: path.to_path_buf(),
            row: 1,
            message: e.to_string(),
        })?
        .clone();
    let text_col = column(&headers, text_cols, path)?;
    let label_col = column(&headers, label_cols, path)?;
    let id_col = column(&headers, id_cols, path).ok();

    let mut examples = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i as u64 + 1;
        let record = record.map_err(|e| DatasetError::MalformedRow {
            path: path.to_path_buf(),
            row,
            message: e.to_string(),
        })?;
        let cell = |c: usize| {
            record.get(c).ok_or_else(|| DatasetError::MalformedRow {
                path: path.to_path_buf(),
                row,
                message: format!("missing field {c}"),
            })
        };
        let raw_label = cell(label_col)?.trim();
        let label = map_label(raw_label).ok_or_else(|| DatasetError::UnknownLabel {
            path: path.to_path_buf(),
            row,
            value: raw_label.to_string(),
        })?;
        let id = match id_col {
            Some(c) if !cell(c)?.trim().is_empty() => cell(c)?.trim().to_string(),
            _ => row.to_string(),
        };
        examples.push(LabeledExample {
            id: format!("{}:{id}", source.name()),
            text: cell(text_col)?.to_string(),
            label,
            source,
        });
    }
    Ok(Corpus::new(examples))
}

/// Davidson et al. hate/offensive corpus; `class` maps onto labels directly.
pub fn load_davidson(path: &Path) -> Result<Corpus, DatasetError> {
    load_with(path, CorpusId::Davidson, &["tweet"], &["class"], &["id", ""], |v| {
        match v {
            "0" => Some(ClassLabel::Hateful),
            "1" => Some(ClassLabel::Offensive),
            "2" => Some(ClassLabel::Neither),
            _ => None,
        }
    })
}

/// HatEval 2019 (SemEval task 5); `HS=1` is hateful, `HS=0` neither.
pub fn load_hateval(path: &Path) -> Result<Corpus, DatasetError> {
    load_with(path, CorpusId::HatEval2019, &["text"], &["HS"], &["id"], |v| match v {
        "1" => Some(ClassLabel::Hateful),
        "0" => Some(ClassLabel::Neither),
        _ => None,
    })
}

/// OLID level A; `OFF` is offensive, `NOT` neither.
pub fn load_olid(path: &Path) -> Result<Corpus, DatasetError> {
    load_with(path, CorpusId::Olid, &["tweet"], &["subtask_a"], &["id"], |v| {
        match v.to_ascii_uppercase().as_str() {
            "OFF" => Some(ClassLabel::Offensive),
            "NOT" => Some(ClassLabel::Neither),
            _ => None,
        }
    })
}

/// Concatenates the corpora in order, dropping any example whose text was
/// already seen (first occurrence wins).
pub fn fuse_dho(davidson: &Corpus, hateval: &Corpus, olid: &Corpus) -> Corpus {
    let mut seen = HashSet::new();
    let examples = [davidson, hateval, olid]
        .into_iter()
        .flat_map(|c| c.examples.iter())
        .filter(|e| seen.insert(e.text.as_str()))
        .cloned()
        .collect();
    Corpus::new(examples)
}

/// Writes the canonical corpus file: CSV with header `id,source,label,text`.
pub fn write_corpus(corpus: &Corpus, path: &Path) -> Result<(), DatasetError> {
    let io_err = |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    let csv_err = |e: csv::Error| DatasetError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    };
    w.write_record(["id", "source", "label", "text"]).map_err(csv_err)?;
    for e in &corpus.examples {
        let label = e.label.index().to_string();
        w.write_record([e.id.as_str(), e.source.name(), label.as_str(), e.text.as_str()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn read_corpus(path: &Path) -> Result<Corpus, DatasetError> {
    let mut reader = csv::ReaderBuilder::new().from_reader(open(path)?);
    let headers = reader
        .headers()
        .map_err(|e| DatasetError::MalformedRow {
            path: path.to_path_buf(),
            row: 1,
            message: e.to_string(),
        })?
        .clone();
    let id_c = column(&headers, &["id"], path)?;
    let src_c = column(&headers, &["source"], path)?;
    let label_c = column(&headers, &["label"], path)?;
    let text_c = column(&headers, &["text"], path)?;

    let mut examples = Vec::new();
    let mut ids = HashSet::new();
    for (i, record) in reader.records().enumerate() {
        let row = i as u64 + 1;
        let malformed = |message: String| DatasetError::MalformedRow {
            path: path.to_path_buf(),
            row,
            message,
        };
        let record = record.map_err(|e| malformed(e.to_string()))?;
        let get = |c: usize| record.get(c).unwrap_or_default();
        let label = get(label_c).parse::<ClassLabel>().map_err(|_| DatasetError::UnknownLabel {
            path: path.to_path_buf(),
            row,
            value: get(label_c).to_string(),
        })?;
        let source = get(src_c).parse::<CorpusId>().map_err(malformed)?;
        let id = get(id_c).to_string();
        if !ids.insert(id.clone()) {
            return Err(malformed(format!("duplicate id {id:?}")));
        }
        examples.push(LabeledExample {
            id,
            text: get(text_c).to_string(),
            label,
            source,
        });
    }
    Ok(Corpus::new(examples))
}

pub fn write_histogram(corpus: &Corpus, path: &Path) -> Result<(), DatasetError> {
    let io_err = |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = File::create(path).map_err(io_err)?;
    let json = serde_json::to_string_pretty(&corpus.histogram_report()).map_err(std::io::Error::other).map_err(io_err)?;
    writeln!(f, "{json}").map_err(io_err)
}

/// Train / validation / test index sets over a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub seed: u64,
    pub ratios: [f64; 3],
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitPlan {
    pub const SPLIT_NAMES: [&'static str; 3] = ["train", "validation", "test"];

    pub fn parts(&self) -> [&[usize]; 3] {
        [&self.train, &self.validation, &self.test]
    }

    pub fn len(&self) -> usize {
        self.parts().iter().map(|p| p.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Looks a split up by name (`train`, `validation`/`val`, `test`).
    pub fn part(&self, name: &str) -> Option<&[usize]> {
        match name {
            "train" => Some(&self.train),
            "validation" | "val" => Some(&self.validation),
            "test" => Some(&self.test),
            _ => None,
        }
    }

    pub fn check_covers(&self, corpus: &Corpus) -> Result<(), DatasetError> {
        let max = self.parts().iter().flat_map(|p| p.iter()).copied().max();
        if self.len() != corpus.len() || max.is_some_and(|m| m >= corpus.len()) {
            return Err(DatasetError::PlanMismatch {
                plan: self.len(),
                corpus: corpus.len(),
            });
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        let f = open(path)?;
        serde_json::from_reader(BufReader::new(f)).map_err(|e| DatasetError::MalformedRow {
            path: path.to_path_buf(),
            row: e.line() as u64,
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), DatasetError> {
        let io_err = |source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        };
        let json = serde_json::to_string_pretty(self).map_err(std::io::Error::other).map_err(io_err)?;
        std::fs::write(path, json + "\n").map_err(io_err)
    }
}

/// Indices of each class, in ascending order, then shuffled per class with a
/// single generator seeded from `seed`.
pub(crate) fn shuffled_by_class(labels: &[ClassLabel], seed: u64) -> [Vec<usize>; NUM_CLASSES] {
    let mut by_class: [Vec<usize>; NUM_CLASSES] = Default::default();
    for (i, l) in labels.iter().enumerate() {
        by_class[l.index()].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for idx in &mut by_class {
        idx.shuffle(&mut rng);
    }
    by_class
}

/// Largest-remainder apportionment of `n` items by `ratios`; leftovers go to the
/// largest fractional parts, earlier parts first on ties.
pub(crate) fn apportion(n: usize, ratios: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = ratios
        .iter()
        .map(|&r| {
            let q = n as f64 * r;
            if (q - q.round()).abs() < 1e-9 {
                q.round()
            } else {
                q
            }
        })
        .collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..ratios.len()).filter(|&i| ratios[i] > 0.0).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Stratified three-way split. Each class is shuffled with `seed` and cut
/// proportionally, so every split's class proportions match the corpus within
/// one example per class.
pub fn stratified_split(labels: &[ClassLabel], ratios: [f64; 3], seed: u64) -> Result<SplitPlan, DatasetError> {
    if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(DatasetError::InvalidRatios(ratios));
    }
    let mut parts: [Vec<usize>; 3] = Default::default();
    for (class, idx) in ClassLabel::ALL.iter().zip(shuffled_by_class(labels, seed)) {
        let counts = apportion(idx.len(), &ratios);
        for (s, &c) in counts.iter().enumerate() {
            if ratios[s] > 0.0 && c == 0 {
                return Err(DatasetError::ClassTooSmall {
                    class: *class,
                    count: idx.len(),
                    split: SplitPlan::SPLIT_NAMES[s],
                });
            }
        }
        let mut rest = idx.as_slice();
        for (s, &c) in counts.iter().enumerate() {
            let (head, tail) = rest.split_at(c);
            parts[s].extend_from_slice(head);
            rest = tail;
        }
    }
    for p in &mut parts {
        p.sort_unstable();
    }
    let [train, validation, test] = parts;
    Ok(SplitPlan {
        seed,
        ratios,
        train,
        validation,
        test,
    })
}

/// Inverse-frequency class weights, `N / (c * count)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights(pub [f64; NUM_CLASSES]);

impl ClassWeights {
    pub fn uniform() -> Self {
        ClassWeights([1.0; NUM_CLASSES])
    }

    pub fn get(&self, label: ClassLabel) -> f64 {
        self.0[label.index()]
    }
}

pub fn class_weights(histogram: Histogram) -> Result<ClassWeights, DatasetError> {
    let n = histogram.total() as f64;
    let mut w = [0.0; NUM_CLASSES];
    for l in ClassLabel::ALL {
        match histogram.count(l) {
            0 => return Err(DatasetError::EmptyClass(l)),
            c => w[l.index()] = n / (NUM_CLASSES as f64 * c as f64),
        }
    }
    Ok(ClassWeights(w))
}
