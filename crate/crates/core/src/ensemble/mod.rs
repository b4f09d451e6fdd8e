//! Combining member probability matrices into one prediction.

pub mod combine;
pub mod matrix;
pub mod stacking;
pub mod topology;

use thiserror::Error;

pub use combine::{hard_vote, majority, max_value, soft_vote};
pub use matrix::{MatrixError, ProbabilityMatrix};
pub use stacking::{out_of_fold, stack_predict, stack_train, FoldAssignment, MetaLearner, OofAudit, StackedModel};
pub use topology::{build_em, EnsembleSpec, Rule, Topology};

use crate::baselines::TrainError;
use crate::label::ClassLabel;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("an ensemble needs at least 2 members, got {0}")]
    TooFewMembers(usize),
    #[error("member {producer} has {found} rows, expected {expected}")]
    ShapeMismatch {
        producer: String,
        expected: usize,
        found: usize,
    },
    #[error("invalid member weights: {0}")]
    InvalidWeights(String),
    #[error("hard voting requires an odd number of members, got {0}")]
    EvenMemberCount(usize),
    #[error("no predictions for member {0}")]
    MissingMember(String),
    #[error("stacking needs a trained meta-learner")]
    NeedsMetaLearner,
    #[error("class {class} has {count} examples, fewer than the {k} folds")]
    FoldTooSmall { class: ClassLabel, count: usize, k: usize },
    #[error("invalid fold assignment: {0}")]
    InvalidFolds(String),
    #[error("out-of-fold leak: member {member}, row {row}, fold {fold:?}")]
    Leakage {
        member: usize,
        row: usize,
        fold: Option<usize>,
    },
    #[error("meta-learner expects {expected} stacked features, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}
