//! TF-IDF features + multinomial logistic regression.
//!
//! The backend is intentionally small: vocabulary and IDF are fitted on the
//! training split only, weights start at zero and are fitted by full-batch
//! gradient descent, so a given training set and config always produce the
//! same bits.

mod features;
mod model;
mod split;
mod train;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::taxonomy::Task;

pub use features::{feature_terms, FeatureSpace, SparseVector};
pub use model::{
    classify_transcript, ClassifierModel, Prediction, TranscriptPredictions, MODEL_FORMAT_VERSION,
};
pub use split::split;
pub use train::{data_fingerprint, train, train_with_history, Problem, TrainOutcome};

/// A text with its gold label for one task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub target: String,
    pub text: String,
    pub task: Task,
    pub label: String,
}

impl LabeledExample {
    pub fn new(target: impl Into<String>, text: impl Into<String>, task: Task, label: impl Into<String>) -> Self {
        Self { target: target.into(), text: text.into(), task, label: label.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { train_fraction: 0.8, seed: 0, stratified: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeighting {
    #[default]
    None,
    /// Scale each example's loss by `N / (K * n_class)`.
    InverseFrequency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: u32,
    pub l2_penalty: f64,
    pub class_weighting: ClassWeighting,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 0.5, epochs: 200, l2_penalty: 1e-4, class_weighting: ClassWeighting::None, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ClassifyError> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(ClassifyError::InvalidConfig("learning_rate must be > 0"));
        }
        if self.epochs < 1 {
            return Err(ClassifyError::InvalidConfig("epochs must be >= 1"));
        }
        if !(self.l2_penalty.is_finite() && self.l2_penalty >= 0.0) {
            return Err(ClassifyError::InvalidConfig("l2_penalty must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClassifyError {
    #[error("need at least 2 examples to split, got {0}")]
    TooFewExamples(usize),
    #[error("training set has a single class")]
    SingleClassTrainingSet,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("model is untrained")]
    UntrainedModel,
    #[error("transcript has no sentences")]
    EmptyTranscript,
    #[error("label `{label}` is not a {task} class")]
    InvalidLabel { task: Task, label: String },
    #[error("example is for task {found}, expected {expected}")]
    TaskMismatch { expected: Task, found: Task },
    #[error("invalid config: {0}")]
    InvalidConfig(&'static str),
    #[error("malformed model: {0}")]
    MalformedModel(String),
}

/// Train/predict surface that other backends (e.g. a transformer served
/// out of process) can implement.
pub trait ClassifierBackend {
    type Model;

    fn train(&self, task: Task, examples: &[LabeledExample], config: &TrainConfig) -> Result<Self::Model, ClassifyError>;

    fn predict(&self, model: &Self::Model, text: &str) -> Result<Prediction, ClassifyError>;

    fn predict_batch(&self, model: &Self::Model, texts: &[&str]) -> Result<Vec<Prediction>, ClassifyError> {
        texts.iter().map(|t| self.predict(model, t)).collect()
    }
}

/// The built-in TF-IDF + logistic regression backend.
#[derive(Debug, Clone, Copy, Default)]
pub struct TfidfLogistic;

impl ClassifierBackend for TfidfLogistic {
    type Model = ClassifierModel;

    fn train(&self, task: Task, examples: &[LabeledExample], config: &TrainConfig) -> Result<ClassifierModel, ClassifyError> {
        train(task, examples, config)
    }

    fn predict(&self, model: &ClassifierModel, text: &str) -> Result<Prediction, ClassifyError> {
        model.predict(text)
    }
}
