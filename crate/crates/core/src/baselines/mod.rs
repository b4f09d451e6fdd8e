//! Shallow stand-in base learners: hashed text features feeding softmax regression.
//!
//! Three feature configurations play the three ensemble roles:
//!
//! | role   | features                    |
//! |--------|-----------------------------|
//! | `mlp`  | character 3-grams           |
//! | `cnn`  | character 3- to 5-grams     |
//! | `lstm` | word unigrams               |

pub mod features;
pub mod softmax;

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use features::{FeatureSpec, FeatureVector, BIAS_INDEX, FEATURE_DIM};
pub use softmax::{Sample, SoftmaxModel, TrainConfig, TrainError, TrainingLog};

use crate::datasets::{class_weights, stratified_split, ClassWeights, DatasetError, Histogram};
use crate::ensemble::ProbabilityMatrix;
use crate::label::{ClassLabel, NUM_CLASSES};

/// Ensemble role a stand-in learner plays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    Mlp,
    Cnn,
    Lstm,
}

impl Head {
    pub const ALL: [Head; 3] = [Head::Mlp, Head::Cnn, Head::Lstm];

    pub fn tag(self) -> &'static str {
        match self {
            Head::Mlp => "mlp",
            Head::Cnn => "cnn",
            Head::Lstm => "lstm",
        }
    }

    pub fn features(self) -> FeatureSpec {
        match self {
            Head::Mlp => FeatureSpec::CharNgrams { min: 3, max: 3 },
            Head::Cnn => FeatureSpec::CharNgrams { min: 3, max: 5 },
            Head::Lstm => FeatureSpec::WordUnigrams,
        }
    }
}

impl fmt::Display for Head {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Head {
    type Err = String;

    /// Accepts the role name or the feature alias (`ngram33`, `ngram35`, `word1`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mlp" | "ngram33" => Ok(Head::Mlp),
            "cnn" | "ngram35" => Ok(Head::Cnn),
            "lstm" | "word1" => Ok(Head::Lstm),
            other => Err(format!("unknown head {other:?} (expected mlp|cnn|lstm or ngram33|ngram35|word1)")),
        }
    }
}

/// Anything that emits class probabilities for a batch of texts.
pub trait Predictor: Send + Sync {
    fn producer(&self) -> &str;
    fn predict_proba(&self, texts: &[&str]) -> ProbabilityMatrix;
}

/// A learner that can be fit repeatedly, as stacking requires.
pub trait BaseLearner: Send + Sync {
    fn producer(&self) -> &str;
    fn fit(&self, texts: &[&str], labels: &[ClassLabel], seed: u64) -> Result<Box<dyn Predictor>, TrainError>;
}

/// A trained text classifier: feature extraction plus softmax weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TextClassifier {
    producer: String,
    features: FeatureSpec,
    model: SoftmaxModel,
    config: TrainConfig,
    log: TrainingLog,
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("not a model checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("corrupt checkpoint header: {0}")]
    Header(String),
    #[error("checkpoint weights truncated: expected {expected} values")]
    Truncated { expected: usize },
}

const MAGIC: &[u8; 8] = b"FRGMODL\0";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    producer: String,
    features: FeatureSpec,
    config: TrainConfig,
    log: TrainingLog,
    classes: usize,
    dim: usize,
}

impl TextClassifier {
    pub fn new(producer: impl Into<String>, features: FeatureSpec, model: SoftmaxModel) -> Self {
        TextClassifier {
            producer: producer.into(),
            features,
            model,
            config: TrainConfig::default(),
            log: TrainingLog::default(),
        }
    }

    pub fn features(&self) -> FeatureSpec {
        self.features
    }

    pub fn model(&self) -> &SoftmaxModel {
        &self.model
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn training_log(&self) -> &TrainingLog {
        &self.log
    }

    /// Trains on `train` with early stopping on `validation`.
    pub fn train(
        producer: impl Into<String>,
        features: FeatureSpec,
        train: (&[&str], &[ClassLabel]),
        validation: (&[&str], &[ClassLabel]),
        config: &TrainConfig,
        weights: &ClassWeights,
    ) -> Result<Self, TrainError> {
        let featurize = |(texts, labels): (&[&str], &[ClassLabel])| -> Result<Vec<Sample>, TrainError> {
            if texts.len() != labels.len() {
                return Err(TrainError::Data(format!(
                    "{} texts but {} labels",
                    texts.len(),
                    labels.len()
                )));
            }
            Ok(texts.iter().map(|t| features.featurize(t)).zip(labels.iter().copied()).collect())
        };
        let train = featurize(train)?;
        let validation = featurize(validation)?;
        let (model, log) = SoftmaxModel::fit(FEATURE_DIM, &train, &validation, config, weights)?;
        Ok(TextClassifier {
            producer: producer.into(),
            features,
            model,
            config: *config,
            log,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        Self::read_from(&mut std::io::BufReader::new(std::fs::File::open(path)?))
    }

    /// Layout: 8-byte magic, u32 LE version, u32 LE header length, JSON header,
    /// then `classes * dim` little-endian f64 weights.
    pub fn write_to(&self, w: &mut impl Write) -> Result<(), CheckpointError> {
        let header = CheckpointHeader {
            producer: self.producer.clone(),
            features: self.features,
            config: self.config,
            log: self.log.clone(),
            classes: NUM_CLASSES,
            dim: self.model.dim(),
        };
        let json = serde_json::to_vec(&header).map_err(|e| CheckpointError::Header(e.to_string()))?;
        w.write_all(MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        w.write_all(&(json.len() as u32).to_le_bytes())?;
        w.write_all(&json)?;
        for v in self.model.weights() {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self, CheckpointError> {
        let eof_as = |err: CheckpointError| {
            move |e: std::io::Error| match e.kind() {
                std::io::ErrorKind::UnexpectedEof => err,
                _ => CheckpointError::Io(e),
            }
        };
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(eof_as(CheckpointError::BadMagic))?;
        if &magic != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let mut word = [0u8; 4];
        r.read_exact(&mut word).map_err(eof_as(CheckpointError::Header("truncated".into())))?;
        let version = u32::from_le_bytes(word);
        if version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Version(version));
        }
        r.read_exact(&mut word).map_err(eof_as(CheckpointError::Header("truncated".into())))?;
        let len = u32::from_le_bytes(word) as usize;
        let mut json = Vec::new();
        r.take(len as u64).read_to_end(&mut json)?;
        if json.len() != len {
            return Err(CheckpointError::Header("truncated".into()));
        }
        let header: CheckpointHeader =
            serde_json::from_slice(&json).map_err(|e| CheckpointError::Header(e.to_string()))?;
        if header.classes != NUM_CLASSES {
            return Err(CheckpointError::Header(format!("expected {NUM_CLASSES} classes, found {}", header.classes)));
        }
        let expected = header.classes * header.dim;
        let mut bytes = Vec::with_capacity(expected * 8);
        r.take(expected as u64 * 8).read_to_end(&mut bytes)?;
        if bytes.len() != expected * 8 {
            return Err(CheckpointError::Truncated { expected });
        }
        let weights = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let model = SoftmaxModel::from_weights(header.dim, weights).map_err(|e| CheckpointError::Header(e.to_string()))?;
        Ok(TextClassifier {
            producer: header.producer,
            features: header.features,
            model,
            config: header.config,
            log: header.log,
        })
    }
}

impl Predictor for TextClassifier {
    fn producer(&self) -> &str {
        &self.producer
    }

    fn predict_proba(&self, texts: &[&str]) -> ProbabilityMatrix {
        let rows = texts
            .iter()
            .map(|t| self.model.predict_proba(&self.features.featurize(t)))
            .collect();
        ProbabilityMatrix::from_valid_rows(self.producer.clone(), rows)
    }
}

/// How a learner weights classes in its loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Weighting {
    /// Inverse-frequency weights from the training labels.
    Balanced,
    Uniform,
    Fixed(ClassWeights),
}

/// Fits a [`TextClassifier`] for one head, holding out a stratified 10% of the
/// given data for early stopping.
#[derive(Debug, Clone)]
pub struct HeadLearner {
    pub head: Head,
    pub config: TrainConfig,
    pub weighting: Weighting,
    pub validation_ratio: f64,
}

impl HeadLearner {
    pub fn new(head: Head) -> Self {
        HeadLearner {
            head,
            config: TrainConfig::default(),
            weighting: Weighting::Balanced,
            validation_ratio: 0.1,
        }
    }

    pub fn with_config(mut self, config: TrainConfig) -> Self {
        self.config = config;
        self
    }

    pub fn train(&self, texts: &[&str], labels: &[ClassLabel], seed: u64) -> Result<TextClassifier, TrainError> {
        if texts.len() != labels.len() {
            return Err(TrainError::Data(format!("{} texts but {} labels", texts.len(), labels.len())));
        }
        let r = self.validation_ratio;
        let plan = stratified_split(labels, [1.0 - r, r, 0.0], seed).map_err(|e| TrainError::Data(e.to_string()))?;
        let pick = |idx: &[usize]| -> (Vec<&str>, Vec<ClassLabel>) {
            idx.iter().map(|&i| (texts[i], labels[i])).unzip()
        };
        let (tt, tl) = pick(&plan.train);
        let (vt, vl) = pick(&plan.validation);
        let weights = self.class_weights(&tl)?;
        let config = TrainConfig { seed, ..self.config };
        TextClassifier::train(self.head.tag(), self.head.features(), (&tt, &tl), (&vt, &vl), &config, &weights)
    }

    fn class_weights(&self, labels: &[ClassLabel]) -> Result<ClassWeights, TrainError> {
        match self.weighting {
            Weighting::Uniform => Ok(ClassWeights::uniform()),
            Weighting::Fixed(w) => Ok(w),
            Weighting::Balanced => match class_weights(Histogram::of(labels)) {
                Ok(w) => Ok(w),
                Err(DatasetError::EmptyClass(c)) => Err(TrainError::Data(format!("class {c} absent from training data"))),
                Err(e) => Err(TrainError::Data(e.to_string())),
            },
        }
    }
}

impl BaseLearner for HeadLearner {
    fn producer(&self) -> &str {
        self.head.tag()
    }

    fn fit(&self, texts: &[&str], labels: &[ClassLabel], seed: u64) -> Result<Box<dyn Predictor>, TrainError> {
        Ok(Box::new(self.train(texts, labels, seed)?))
    }
}
