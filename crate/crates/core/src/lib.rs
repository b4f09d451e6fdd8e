//! Ensemble harness for three-class abusive-language classification of tweets.
//!
//! The crate covers the full pipeline: tweet normalization, corpus loading and
//! fusion, stratified splitting, shallow base learners, the ensemble combiners
//! (soft voting, maximum value, hard voting, stacking) and macro-averaged
//! evaluation. External models plug in through the prediction file format in
//! [`predformat`].

pub mod baselines;
pub mod cli;
pub mod datasets;
pub mod ensemble;
pub mod label;
pub mod metrics;
pub mod predformat;
pub mod preprocess;
pub mod synth;

pub use label::{ClassLabel, NUM_CLASSES};
