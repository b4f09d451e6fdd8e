//! Multinomial softmax regression trained with class-weighted cross-entropy.
//!
//! The loss over a set of `n` examples is
//!
//! ```text
//! L(W) = (1/n) * sum_i w[y_i] * -ln softmax(W x_i)[y_i]
//! ```
//!
//! with gradient `dL/dW[k] = (1/n) * sum_i w[y_i] * (p_ik - [k == y_i]) * x_i`.
//! Mini-batch gradient descent minimizes it; training keeps the weights from
//! the epoch with the best validation accuracy and stops once that has not
//! improved for `patience` epochs.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::features::FeatureVector;
use crate::datasets::ClassWeights;
use crate::label::{argmax, ClassLabel, NUM_CLASSES};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("non-finite loss {loss} at epoch {epoch}, batch {batch}")]
    NonFinite { epoch: usize, batch: usize, loss: f64 },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("validation set is empty")]
    EmptyValidationSet,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("feature index {index} outside model dimension {dim}")]
    FeatureOutOfRange { index: u32, dim: usize },
    #[error("{0}")]
    Data(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub learning_rate: f64,
    /// Epochs without validation-accuracy improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            max_epochs: 50,
            learning_rate: 0.1,
            patience: 5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.batch_size == 0 {
            return Err(TrainError::InvalidConfig("batch_size must be at least 1".into()));
        }
        if self.max_epochs == 0 {
            return Err(TrainError::InvalidConfig("max_epochs must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(TrainError::InvalidConfig(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: f64,
    pub validation_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose weights were kept (0 when no epoch ran).
    pub best_epoch: usize,
}

/// A labeled feature vector.
pub type Sample = (FeatureVector, ClassLabel);

/// Dense `NUM_CLASSES x dim` weight matrix over sparse inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxModel {
    dim: usize,
    weights: Vec<f64>,
}

impl SoftmaxModel {
    pub fn zeros(dim: usize) -> Self {
        SoftmaxModel {
            dim,
            weights: vec![0.0; NUM_CLASSES * dim],
        }
    }

    /// `weights` is row-major, one row of length `dim` per class.
    pub fn from_weights(dim: usize, weights: Vec<f64>) -> Result<Self, TrainError> {
        if weights.len() != NUM_CLASSES * dim {
            return Err(TrainError::Data(format!(
                "expected {} weights, got {}",
                NUM_CLASSES * dim,
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(TrainError::Data("weights must be finite".into()));
        }
        Ok(SoftmaxModel { dim, weights })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn logits(&self, x: &FeatureVector) -> [f64; NUM_CLASSES] {
        let mut z = [0.0; NUM_CLASSES];
        for (k, zk) in z.iter_mut().enumerate() {
            let row = &self.weights[k * self.dim..(k + 1) * self.dim];
            *zk = x.entries().iter().map(|&(i, v)| row[i as usize] * v).sum();
        }
        z
    }

    pub fn predict_proba(&self, x: &FeatureVector) -> [f64; NUM_CLASSES] {
        softmax(self.logits(x))
    }

    pub fn predict(&self, x: &FeatureVector) -> ClassLabel {
        ClassLabel::from_index(argmax(&self.logits(x))).expect("class index")
    }

    /// Mean class-weighted cross-entropy over `data`.
    pub fn loss(&self, data: &[Sample], weights: &ClassWeights) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        let total: f64 = data
            .iter()
            .map(|(x, y)| weights.get(*y) * -log_softmax(self.logits(x))[y.index()])
            .sum();
        total / data.len() as f64
    }

    /// Dense gradient of [`SoftmaxModel::loss`], same layout as the weights.
    pub fn gradient(&self, data: &[Sample], weights: &ClassWeights) -> Vec<f64> {
        let mut grad = vec![0.0; self.weights.len()];
        if data.is_empty() {
            return grad;
        }
        let scale = 1.0 / data.len() as f64;
        for (x, y) in data {
            let p = self.predict_proba(x);
            let w = weights.get(*y);
            for (k, &pk) in p.iter().enumerate() {
                let coef = scale * w * (pk - if k == y.index() { 1.0 } else { 0.0 });
                for &(i, v) in x.entries() {
                    grad[k * self.dim + i as usize] += coef * v;
                }
            }
        }
        grad
    }

    pub fn accuracy(&self, data: &[Sample]) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        let correct = data.iter().filter(|(x, y)| self.predict(x) == *y).count();
        correct as f64 / data.len() as f64
    }

    fn check_range(&self, data: &[Sample]) -> Result<(), TrainError> {
        for (x, _) in data {
            if x.min_dim() > self.dim {
                let index = x.entries().last().map_or(0, |e| e.0);
                return Err(TrainError::FeatureOutOfRange { index, dim: self.dim });
            }
        }
        Ok(())
    }

    /// One gradient step over `batch`; returns the batch loss measured before the step.
    fn step(&mut self, batch: &[&Sample], weights: &ClassWeights, lr: f64) -> f64 {
        let scale = lr / batch.len() as f64;
        let mut loss = 0.0;
        let mut updates: Vec<([f64; NUM_CLASSES], &FeatureVector)> = Vec::with_capacity(batch.len());
        for (x, y) in batch.iter().map(|s| (&s.0, s.1)) {
            let z = self.logits(x);
            let logp = log_softmax(z);
            let w = weights.get(y);
            loss += w * -logp[y.index()];
            let mut coef = [0.0; NUM_CLASSES];
            for k in 0..NUM_CLASSES {
                coef[k] = w * (logp[k].exp() - if k == y.index() { 1.0 } else { 0.0 });
            }
            updates.push((coef, x));
        }
        for (coef, x) in updates {
            for (k, c) in coef.iter().enumerate() {
                let row = &mut self.weights[k * self.dim..(k + 1) * self.dim];
                for &(i, v) in x.entries() {
                    row[i as usize] -= scale * c * v;
                }
            }
        }
        loss / batch.len() as f64
    }

    /// Trains from zero-initialized weights.
    pub fn fit(
        dim: usize,
        train: &[Sample],
        validation: &[Sample],
        config: &TrainConfig,
        weights: &ClassWeights,
    ) -> Result<(SoftmaxModel, TrainingLog), TrainError> {
        config.validate()?;
        if train.is_empty() {
            return Err(TrainError::EmptyTrainingSet);
        }
        if validation.is_empty() {
            return Err(TrainError::EmptyValidationSet);
        }
        let mut model = SoftmaxModel::zeros(dim);
        model.check_range(train)?;
        model.check_range(validation)?;

        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut order: Vec<usize> = (0..train.len()).collect();
        let mut log = TrainingLog::default();
        let mut best: Option<(f64, f64, Vec<f64>)> = None;
        let mut stale = 0;

        for epoch in 1..=config.max_epochs {
            order.shuffle(&mut rng);
            let mut epoch_loss = 0.0;
            for (b, chunk) in order.chunks(config.batch_size).enumerate() {
                let batch: Vec<&Sample> = chunk.iter().map(|&i| &train[i]).collect();
                let loss = model.step(&batch, weights, config.learning_rate);
                if !loss.is_finite() || model.weights.iter().any(|w| !w.is_finite()) {
                    return Err(TrainError::NonFinite { epoch, batch: b, loss });
                }
                epoch_loss += loss * chunk.len() as f64;
            }
            let validation_accuracy = model.accuracy(validation);
            let validation_loss = model.loss(validation, weights);
            log.epochs.push(EpochRecord {
                epoch,
                train_loss: epoch_loss / train.len() as f64,
                validation_loss,
                validation_accuracy,
            });
            // accuracy first; equal accuracy with lower loss also counts
            let improved = best.as_ref().is_none_or(|(acc, loss, _)| {
                validation_accuracy > *acc || (validation_accuracy == *acc && validation_loss < *loss)
            });
            if improved {
                best = Some((validation_accuracy, validation_loss, model.weights.clone()));
                log.best_epoch = epoch;
                stale = 0;
            } else {
                stale += 1;
                if stale >= config.patience {
                    break;
                }
            }
        }
        if let Some((_, _, w)) = best {
            model.weights = w;
        }
        Ok((model, log))
    }
}

pub fn softmax(z: [f64; NUM_CLASSES]) -> [f64; NUM_CLASSES] {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut e = z.map(|v| (v - m).exp());
    let s: f64 = e.iter().sum();
    for v in &mut e {
        *v /= s;
    }
    e
}

fn log_softmax(z: [f64; NUM_CLASSES]) -> [f64; NUM_CLASSES] {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    z.map(|v| v - lse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_samples(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Sample> {
        (0..n)
            .map(|_| {
                let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                let y = ClassLabel::from_index(rng.random_range(0..NUM_CLASSES)).unwrap();
                (FeatureVector::from_dense(&x), y)
            })
            .collect()
    }

    #[test]
    fn zero_model_is_uniform() {
        let m = SoftmaxModel::zeros(10);
        let p = m.predict_proba(&FeatureVector::from_dense(&[1.0, 2.0, 3.0]));
        assert_eq!(p, [1.0 / 3.0; 3]);
    }

    #[test]
    fn softmax_rows_sum_to_one_for_extreme_logits() {
        for z in [[1000.0, -1000.0, 0.0], [-745.0, -745.0, -745.0], [0.0, 1e-300, 700.0]] {
            let p = softmax(z);
            assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn full_batch_step_matches_dense_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = random_samples(&mut rng, 6, 4);
        let weights = ClassWeights([0.5, 1.5, 2.0]);
        let mut model = SoftmaxModel::from_weights(5, (0..15).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap();
        let grad = model.gradient(&data, &weights);
        let expected: Vec<f64> = model.weights.iter().zip(&grad).map(|(w, g)| w - 0.1 * g).collect();
        let batch: Vec<&Sample> = data.iter().collect();
        model.step(&batch, &weights, 0.1);
        for (a, b) in model.weights.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn config_validation() {
        let bad = TrainConfig {
            max_epochs: 0,
            ..TrainConfig::default()
        };
        assert!(matches!(bad.validate(), Err(TrainError::InvalidConfig(_))));
        let bad = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn non_finite_loss_aborts() {
        let x = FeatureVector::from_dense(&[1e300, -1e300]);
        let data = vec![(x.clone(), ClassLabel::Hateful), (x, ClassLabel::Neither)];
        let cfg = TrainConfig {
            learning_rate: 1e300,
            ..TrainConfig::default()
        };
        let err = SoftmaxModel::fit(3, &data, &data, &cfg, &ClassWeights::uniform()).unwrap_err();
        assert!(matches!(err, TrainError::NonFinite { epoch: 1, .. }), "{err:?}");
    }

    #[test]
    fn out_of_range_features_rejected() {
        let data = vec![(FeatureVector::from_dense(&[1.0, 1.0, 1.0]), ClassLabel::Hateful)];
        let err = SoftmaxModel::fit(2, &data, &data, &TrainConfig::default(), &ClassWeights::uniform());
        assert!(matches!(err, Err(TrainError::FeatureOutOfRange { .. })));
    }

    #[test]
    fn empty_sets_rejected() {
        let data = vec![(FeatureVector::from_dense(&[1.0]), ClassLabel::Hateful)];
        let cfg = TrainConfig::default();
        let w = ClassWeights::uniform();
        assert_eq!(SoftmaxModel::fit(2, &[], &data, &cfg, &w).unwrap_err(), TrainError::EmptyTrainingSet);
        assert_eq!(SoftmaxModel::fit(2, &data, &[], &cfg, &w).unwrap_err(), TrainError::EmptyValidationSet);
    }

    #[test]
    fn early_stopping_keeps_best_epoch() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let data = random_samples(&mut rng, 40, 3);
        let cfg = TrainConfig {
            patience: 2,
            max_epochs: 50,
            ..TrainConfig::default()
        };
        let (model, log) = SoftmaxModel::fit(4, &data, &data, &cfg, &ClassWeights::uniform()).unwrap();
        let best = log.epochs.iter().map(|e| e.validation_accuracy).fold(0.0, f64::max);
        assert_eq!(model.accuracy(&data), best);
        let first_best = log.epochs.iter().find(|e| e.validation_accuracy == best).unwrap().epoch;
        assert_eq!(log.best_epoch, first_best);
        assert!(log.epochs.len() <= log.best_epoch + cfg.patience);
    }
}
