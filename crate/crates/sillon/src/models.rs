//! Training runs and the on-disk model registry.
//!
//! ```text
//! <data_dir>/models/<model_id>.json          the model
//! <data_dir>/models/<model_id>.meta.json     dataset source, split and sizes
//! <data_dir>/models/<model_id>.report.json   test-split evaluation
//! <data_dir>/models/latest.json              task -> most recently trained model id
//! ```
//!
//! A model id is `<task>-<fingerprint>`, so retraining on the same data with
//! the same settings rewrites identical files.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sillon_core::classify::{self, data_fingerprint, ClassifierModel, ClassifyError, LabeledExample, SplitConfig, TrainConfig};
use sillon_core::evaluate::{self, EvalError, EvalReport};
use sillon_core::taxonomy::Task;

use crate::pipeline::majority_labels;
use crate::store::Store;

pub const MODELS_DIR: &str = "models";
const LATEST_FILE: &str = "latest.json";

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("no usable examples for task {0}")]
    NoExamples(Task),
    #[error("dataset {path} line {line}: {message}")]
    Dataset { path: String, line: usize, message: String },
    #[error("the dataset of model `{0}` has changed since it was trained")]
    DatasetChanged(String),
    #[error("corrupt model registry: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Where training examples come from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    /// Majority-vote labels of the store's annotations.
    Annotations,
    /// A JSON Lines file of labeled examples.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRequest {
    pub task: Task,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_source")]
    pub dataset: DatasetSource,
}

fn default_source() -> DatasetSource {
    DatasetSource::Annotations
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub model_id: String,
    pub task: Task,
    pub dataset: DatasetSource,
    pub split: SplitConfig,
    pub train_config: TrainConfig,
    pub examples: usize,
    pub skipped_empty: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub data_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    pub meta: ModelMeta,
    pub report: EvalReport,
    pub model_path: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub examples: Vec<LabeledExample>,
    pub skipped_empty: usize,
}

/// One example per annotated target, labeled by majority vote, ordered by target.
pub fn dataset_from_annotations(store: &Store, task: Task) -> Dataset {
    let mut examples = Vec::new();
    let mut skipped_empty = 0;
    for (target, label) in majority_labels(store, task) {
        match store.target_text(&target) {
            Some(text) if !text.trim().is_empty() => examples.push(LabeledExample::new(target.to_string(), text, task, label)),
            _ => skipped_empty += 1,
        }
    }
    Dataset { examples, skipped_empty }
}

pub fn read_dataset_file(path: &Path, task: Task) -> Result<Dataset, ModelError> {
    let bad = |line: usize, message: String| ModelError::Dataset { path: path.display().to_string(), line, message };
    let file = io::BufReader::new(fs::File::open(path)?);
    let mut examples = Vec::new();
    let mut skipped_empty = 0;
    for (i, line) in file.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let ex: LabeledExample = serde_json::from_str(&line).map_err(|e| bad(i + 1, e.to_string()))?;
        if ex.task != task {
            continue;
        }
        if !task.is_valid_label(&ex.label) {
            return Err(bad(i + 1, format!("label `{}` is not a {task} class", ex.label)));
        }
        if ex.text.trim().is_empty() {
            skipped_empty += 1;
        } else {
            examples.push(ex);
        }
    }
    Ok(Dataset { examples, skipped_empty })
}

pub fn load_dataset(store: &Store, source: &DatasetSource, task: Task) -> Result<Dataset, ModelError> {
    match source {
        DatasetSource::Annotations => Ok(dataset_from_annotations(store, task)),
        DatasetSource::File(path) => read_dataset_file(path, task),
    }
}

fn models_dir(data_dir: &Path) -> PathBuf {
    data_dir.join(MODELS_DIR)
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

fn file_of(data_dir: &Path, id: &str, suffix: &str) -> Result<PathBuf, ModelError> {
    if !valid_id(id) {
        return Err(ModelError::UnknownModel(id.to_string()));
    }
    Ok(models_dir(data_dir).join(format!("{id}{suffix}")))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(io::Error::other)?;
    bytes.push(b'\n');
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(tmp, path)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, id: &str) -> Result<T, ModelError> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(ModelError::UnknownModel(id.to_string())),
        Err(e) => return Err(e.into()),
    };
    serde_json::from_slice(&bytes).map_err(|e| ModelError::Corrupt(format!("{}: {e}", path.display())))
}

pub fn load_model(data_dir: &Path, id: &str) -> Result<ClassifierModel, ModelError> {
    read_json(&file_of(data_dir, id, ".json")?, id)
}

pub fn load_meta(data_dir: &Path, id: &str) -> Result<ModelMeta, ModelError> {
    read_json(&file_of(data_dir, id, ".meta.json")?, id)
}

pub fn load_report(data_dir: &Path, id: &str) -> Result<EvalReport, ModelError> {
    read_json(&file_of(data_dir, id, ".report.json")?, id)
}

/// task -> id of the most recently trained model.
pub fn latest(data_dir: &Path) -> Result<BTreeMap<String, String>, ModelError> {
    let path = models_dir(data_dir).join(LATEST_FILE);
    match fs::read(&path) {
        Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| ModelError::Corrupt(format!("{}: {e}", path.display()))),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(BTreeMap::new()),
        Err(e) => Err(e.into()),
    }
}

/// Metadata of every stored model, by id.
pub fn list(data_dir: &Path) -> Result<Vec<ModelMeta>, ModelError> {
    let dir = models_dir(data_dir);
    let entries = match fs::read_dir(&dir) {
        Ok(e) => e,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut ids: Vec<String> = entries
        .flatten()
        .filter_map(|e| e.file_name().to_str().and_then(|n| n.strip_suffix(".meta.json")).map(String::from))
        .collect();
    ids.sort();
    ids.iter().map(|id| load_meta(data_dir, id)).collect()
}

/// Splits, trains, evaluates on the held-out part and writes the model,
/// its metadata and report. Also records the model as the task's latest.
pub fn train(data_dir: &Path, store: &Store, request: &TrainRequest) -> Result<TrainResult, ModelError> {
    let dataset = load_dataset(store, &request.dataset, request.task)?;
    if dataset.examples.is_empty() {
        return Err(ModelError::NoExamples(request.task));
    }
    let (train_set, test_set) = classify::split(&dataset.examples, &request.split)?;
    let model = classify::train(request.task, &train_set, &request.train)?;
    let report = evaluate::evaluate(&model, &test_set)?;
    let model_id = format!("{}-{}", request.task.as_str(), model.fingerprint());
    let meta = ModelMeta {
        model_id: model_id.clone(),
        task: request.task,
        dataset: request.dataset.clone(),
        split: request.split.clone(),
        train_config: request.train.clone(),
        examples: dataset.examples.len(),
        skipped_empty: dataset.skipped_empty,
        train_size: train_set.len(),
        test_size: test_set.len(),
        data_fingerprint: model.data_fingerprint.clone(),
    };

    fs::create_dir_all(models_dir(data_dir))?;
    let model_path = file_of(data_dir, &model_id, ".json")?;
    write_json(&model_path, &model)?;
    write_json(&file_of(data_dir, &model_id, ".meta.json")?, &meta)?;
    write_json(&file_of(data_dir, &model_id, ".report.json")?, &report)?;
    let mut latest_ids = latest(data_dir)?;
    latest_ids.insert(request.task.as_str().to_string(), model_id);
    write_json(&models_dir(data_dir).join(LATEST_FILE), &latest_ids)?;
    Ok(TrainResult { meta, report, model_path })
}

/// Re-evaluates a stored model on its held-out split, rebuilt from the
/// recorded dataset source and split settings.
pub fn evaluate(data_dir: &Path, store: &Store, id: &str) -> Result<EvalReport, ModelError> {
    let model = load_model(data_dir, id)?;
    let meta = load_meta(data_dir, id)?;
    let dataset = load_dataset(store, &meta.dataset, meta.task)?;
    if dataset.examples.len() < 2 {
        return Err(ModelError::DatasetChanged(id.to_string()));
    }
    let (train_set, test_set) = classify::split(&dataset.examples, &meta.split)?;
    if data_fingerprint(&train_set) != model.data_fingerprint {
        return Err(ModelError::DatasetChanged(id.to_string()));
    }
    Ok(evaluate::evaluate(&model, &test_set)?)
}
