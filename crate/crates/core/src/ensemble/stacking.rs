//! Stacked generalization with out-of-fold member predictions.
//!
//! For each fold `j`, every member is trained on the other folds and predicts
//! the rows of fold `j`. The concatenated out-of-fold probabilities (`m * 3`
//! features per row) train a softmax meta-learner. Members are then retrained
//! on the full training set for inference.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{EnsembleError, ProbabilityMatrix};
use crate::baselines::{BaseLearner, FeatureVector, Predictor, SoftmaxModel, TrainConfig, TrainingLog};
use crate::datasets::{class_weights, shuffled_by_class, stratified_split, ClassWeights, Histogram};
use crate::label::{ClassLabel, NUM_CLASSES};

/// Stratified partition of `0..n` into `k` folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub seed: u64,
    folds: Vec<Vec<usize>>,
}

impl FoldAssignment {
    /// Each class is shuffled with `seed` and dealt across folds so per-class
    /// fold counts differ by at most one. Every class needs at least `k` examples.
    pub fn stratified(labels: &[ClassLabel], k: usize, seed: u64) -> Result<Self, EnsembleError> {
        if k < 2 {
            return Err(EnsembleError::InvalidFolds(format!("need at least 2 folds, got {k}")));
        }
        let mut folds = vec![Vec::new(); k];
        let mut offset = 0;
        for (class, idx) in ClassLabel::ALL.iter().zip(shuffled_by_class(labels, seed)) {
            if idx.len() < k {
                return Err(EnsembleError::FoldTooSmall {
                    class: *class,
                    count: idx.len(),
                    k,
                });
            }
            // start where the previous class stopped so fold sizes stay balanced too
            for (pos, i) in idx.into_iter().enumerate() {
                folds[(offset + pos) % k].push(i);
            }
            offset = (offset + labels.iter().filter(|l| *l == class).count()) % k;
        }
        for f in &mut folds {
            f.sort_unstable();
        }
        Ok(FoldAssignment { k, seed, folds })
    }

    pub fn folds(&self) -> &[Vec<usize>] {
        &self.folds
    }

    pub fn len(&self) -> usize {
        self.folds.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every index outside fold `j`, ascending.
    pub fn complement(&self, j: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|(f, _)| *f != j)
            .flat_map(|(_, idx)| idx.iter().copied())
            .collect();
        out.sort_unstable();
        out
    }

    /// Fold number of each index.
    pub fn fold_of(&self) -> Vec<usize> {
        let mut out = vec![usize::MAX; self.len()];
        for (j, idx) in self.folds.iter().enumerate() {
            for &i in idx {
                out[i] = j;
            }
        }
        out
    }
}

/// Record of which fold model produced every out-of-fold prediction and what
/// that model was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OofAudit {
    /// `predicted_by[member][row]` = fold whose model wrote that prediction.
    pub predicted_by: Vec<Vec<Option<usize>>>,
    /// `trained_on[member][fold]` = row indices passed to that model's `fit`.
    pub trained_on: Vec<Vec<Vec<usize>>>,
}

impl OofAudit {
    /// Fails if any prediction is missing or was made by a model that saw the row in training.
    pub fn verify(&self) -> Result<(), EnsembleError> {
        for (member, (rows, trained)) in self.predicted_by.iter().zip(&self.trained_on).enumerate() {
            let seen: Vec<HashSet<usize>> = trained.iter().map(|t| t.iter().copied().collect()).collect();
            for (row, by) in rows.iter().enumerate() {
                let fold = by.ok_or(EnsembleError::Leakage { member, row, fold: None })?;
                if seen.get(fold).is_none_or(|s| s.contains(&row)) {
                    return Err(EnsembleError::Leakage {
                        member,
                        row,
                        fold: Some(fold),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Softmax regression over stacked member probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaLearner {
    members: usize,
    model: SoftmaxModel,
    log: TrainingLog,
}

impl MetaLearner {
    pub fn default_config() -> TrainConfig {
        TrainConfig {
            batch_size: 32,
            max_epochs: 200,
            learning_rate: 0.5,
            patience: 20,
            seed: 0,
        }
    }

    /// Wraps an existing model; its dimension must be `members * 3 + 1` (bias included).
    pub fn from_model(members: usize, model: SoftmaxModel) -> Result<Self, EnsembleError> {
        if model.dim() != members * NUM_CLASSES + 1 {
            return Err(EnsembleError::DimensionMismatch {
                expected: members * NUM_CLASSES,
                found: model.dim().saturating_sub(1),
            });
        }
        Ok(MetaLearner {
            members,
            model,
            log: TrainingLog::default(),
        })
    }

    pub fn members(&self) -> usize {
        self.members
    }

    /// Number of stacked probability features (`members * 3`).
    pub fn input_dim(&self) -> usize {
        self.members * NUM_CLASSES
    }

    pub fn model(&self) -> &SoftmaxModel {
        &self.model
    }

    pub fn training_log(&self) -> &TrainingLog {
        &self.log
    }

    /// Row `i` becomes bias plus member 0's probabilities, then member 1's, and so on.
    pub fn stack_features(matrices: &[ProbabilityMatrix]) -> Result<Vec<FeatureVector>, EnsembleError> {
        let n = matrices.first().map_or(0, ProbabilityMatrix::len);
        if let Some(bad) = matrices.iter().find(|m| m.len() != n) {
            return Err(EnsembleError::ShapeMismatch {
                producer: bad.producer().to_string(),
                expected: n,
                found: bad.len(),
            });
        }
        Ok((0..n)
            .map(|r| {
                FeatureVector::from_pairs(matrices.iter().enumerate().flat_map(|(t, m)| {
                    m.row(r)
                        .iter()
                        .enumerate()
                        .map(move |(c, &p)| ((1 + t * NUM_CLASSES + c) as u32, p))
                }))
            })
            .collect())
    }

    pub fn fit(oof: &[ProbabilityMatrix], labels: &[ClassLabel], config: &TrainConfig) -> Result<Self, EnsembleError> {
        if oof.is_empty() {
            return Err(EnsembleError::TooFewMembers(0));
        }
        let z = Self::stack_features(oof)?;
        if z.len() != labels.len() {
            return Err(EnsembleError::ShapeMismatch {
                producer: "labels".into(),
                expected: z.len(),
                found: labels.len(),
            });
        }
        let samples: Vec<(FeatureVector, ClassLabel)> = z.into_iter().zip(labels.iter().copied()).collect();
        let (train, validation): (Vec<_>, Vec<_>) = match stratified_split(labels, [0.9, 0.1, 0.0], config.seed) {
            Ok(plan) => (
                plan.train.iter().map(|&i| samples[i].clone()).collect(),
                plan.validation.iter().map(|&i| samples[i].clone()).collect(),
            ),
            // too few rows per class to hold any out: monitor the training rows
            Err(_) => (samples.clone(), samples),
        };
        let train_labels: Vec<ClassLabel> = train.iter().map(|s| s.1).collect();
        let weights = class_weights(Histogram::of(&train_labels)).unwrap_or(ClassWeights::uniform());
        let dim = oof.len() * NUM_CLASSES + 1;
        let (model, log) = SoftmaxModel::fit(dim, &train, &validation, config, &weights)?;
        Ok(MetaLearner {
            members: oof.len(),
            model,
            log,
        })
    }

    pub fn predict(&self, members: &[ProbabilityMatrix]) -> Result<(Vec<ClassLabel>, ProbabilityMatrix), EnsembleError> {
        if members.len() * NUM_CLASSES != self.input_dim() {
            return Err(EnsembleError::DimensionMismatch {
                expected: self.input_dim(),
                found: members.len() * NUM_CLASSES,
            });
        }
        let z = Self::stack_features(members)?;
        let rows: Vec<[f64; NUM_CLASSES]> = z.iter().map(|x| self.model.predict_proba(x)).collect();
        let proba = ProbabilityMatrix::from_valid_rows("stack", rows);
        Ok((proba.labels(), proba))
    }
}

/// Members retrained on the full training set plus the meta-learner trained on their out-of-fold predictions.
pub struct StackedModel {
    members: Vec<Box<dyn Predictor>>,
    meta: MetaLearner,
    folds: FoldAssignment,
    audit: OofAudit,
    oof: Vec<ProbabilityMatrix>,
}

impl std::fmt::Debug for StackedModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StackedModel")
            .field("members", &self.member_names())
            .field("meta", &self.meta)
            .field("folds", &self.folds.k)
            .finish()
    }
}

impl StackedModel {
    pub fn member_names(&self) -> Vec<&str> {
        self.members.iter().map(|m| m.producer()).collect()
    }

    pub fn members(&self) -> &[Box<dyn Predictor>] {
        &self.members
    }

    pub fn meta(&self) -> &MetaLearner {
        &self.meta
    }

    pub fn folds(&self) -> &FoldAssignment {
        &self.folds
    }

    pub fn audit(&self) -> &OofAudit {
        &self.audit
    }

    /// Out-of-fold member predictions the meta-learner was trained on (one matrix per member).
    pub fn out_of_fold(&self) -> &[ProbabilityMatrix] {
        &self.oof
    }
}

/// Out-of-fold predictions of one learner over the whole training set, with
/// the bookkeeping needed to audit them.
pub fn out_of_fold(
    learner: &dyn BaseLearner,
    texts: &[&str],
    labels: &[ClassLabel],
    folds: &FoldAssignment,
) -> Result<(ProbabilityMatrix, Vec<Option<usize>>, Vec<Vec<usize>>), EnsembleError> {
    let n = texts.len();
    let results: Vec<Result<(Vec<usize>, ProbabilityMatrix), EnsembleError>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..folds.k)
            .map(|j| {
                s.spawn(move || {
                    let train_idx = folds.complement(j);
                    let tt: Vec<&str> = train_idx.iter().map(|&i| texts[i]).collect();
                    let tl: Vec<ClassLabel> = train_idx.iter().map(|&i| labels[i]).collect();
                    let model = learner.fit(&tt, &tl, fold_seed(folds.seed, j))?;
                    let held: Vec<&str> = folds.folds()[j].iter().map(|&i| texts[i]).collect();
                    Ok((train_idx, model.predict_proba(&held)))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("fold worker panicked")).collect()
    });

    let mut rows = vec![[0.0; NUM_CLASSES]; n];
    let mut predicted_by = vec![None; n];
    let mut trained_on = Vec::with_capacity(folds.k);
    for (j, res) in results.into_iter().enumerate() {
        let (train_idx, proba) = res?;
        for (&i, row) in folds.folds()[j].iter().zip(proba.rows()) {
            rows[i] = *row;
            predicted_by[i] = Some(j);
        }
        trained_on.push(train_idx);
    }
    Ok((
        ProbabilityMatrix::from_valid_rows(learner.producer(), rows),
        predicted_by,
        trained_on,
    ))
}

fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed.wrapping_add(fold as u64 + 1)
}

/// Trains a stacked ensemble over `learners` on one training set.
pub fn stack_train(
    learners: &[&dyn BaseLearner],
    texts: &[&str],
    labels: &[ClassLabel],
    folds: &FoldAssignment,
    meta_config: &TrainConfig,
) -> Result<StackedModel, EnsembleError> {
    if learners.len() < 2 {
        return Err(EnsembleError::TooFewMembers(learners.len()));
    }
    if texts.len() != labels.len() || folds.len() != texts.len() {
        return Err(EnsembleError::InvalidFolds(format!(
            "{} texts, {} labels, folds over {} rows",
            texts.len(),
            labels.len(),
            folds.len()
        )));
    }

    let mut oof = Vec::with_capacity(learners.len());
    let mut audit = OofAudit {
        predicted_by: Vec::new(),
        trained_on: Vec::new(),
    };
    for learner in learners {
        let (m, by, trained) = out_of_fold(*learner, texts, labels, folds)?;
        oof.push(m);
        audit.predicted_by.push(by);
        audit.trained_on.push(trained);
    }
    audit.verify()?;

    let meta = MetaLearner::fit(&oof, labels, meta_config)?;

    let full_seed = fold_seed(folds.seed, folds.k);
    let members: Vec<Box<dyn Predictor>> = std::thread::scope(|s| {
        let handles: Vec<_> = learners
            .iter()
            .map(|l| s.spawn(move || l.fit(texts, labels, full_seed)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("member worker panicked"))
            .collect::<Result<_, _>>()
    })?;

    Ok(StackedModel {
        members,
        meta,
        folds: folds.clone(),
        audit,
        oof,
    })
}

/// Member probabilities stacked into the meta-learner; returns its argmax labels.
pub fn stack_predict(model: &StackedModel, texts: &[&str]) -> Result<Vec<ClassLabel>, EnsembleError> {
    let member_preds: Vec<ProbabilityMatrix> = model.members.iter().map(|m| m.predict_proba(texts)).collect();
    Ok(model.meta.predict(&member_preds)?.0)
}
