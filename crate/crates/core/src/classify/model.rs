use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::features::{tfidf_vector, FeatureSpace};
use super::{ClassifyError, TrainConfig};
use crate::math;
use crate::taxonomy::Task;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Trained TF-IDF + softmax regression model.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    pub task: Task,
    pub classes: Vec<String>,
    pub vocabulary: BTreeMap<String, u32>,
    pub idf: Vec<f64>,
    /// Row-major `(vocabulary.len() + 1) × classes.len()`; the last row is the bias.
    pub weights: Vec<f64>,
    pub train_config: TrainConfig,
    pub data_fingerprint: String,
    pub train_size: usize,
}

/// Class probabilities for one text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: String,
    pub probabilities: Vec<f64>,
}

impl ClassifierModel {
    /// A model with no parameters. `predict` fails on it.
    pub fn untrained(task: Task) -> Self {
        Self {
            task,
            classes: task.classes().iter().map(|c| c.to_string()).collect(),
            vocabulary: BTreeMap::new(),
            idf: Vec::new(),
            weights: Vec::new(),
            train_config: TrainConfig::default(),
            data_fingerprint: String::new(),
            train_size: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.vocabulary.len() + 1
    }

    pub fn is_trained(&self) -> bool {
        !self.classes.is_empty() && self.weights.len() == self.dim() * self.classes.len()
    }

    pub fn feature_space(&self) -> FeatureSpace {
        FeatureSpace { vocabulary: self.vocabulary.clone(), idf: self.idf.clone() }
    }

    /// Short stable identifier derived from the serialized parameters.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(self.task.as_str().as_bytes());
        for c in &self.classes {
            h.update(c.as_bytes());
            h.update([0]);
        }
        for (term, idx) in &self.vocabulary {
            h.update(term.as_bytes());
            h.update(idx.to_le_bytes());
        }
        for v in self.idf.iter().chain(&self.weights) {
            h.update(v.to_bits().to_le_bytes());
        }
        h.update(self.data_fingerprint.as_bytes());
        let digest = h.finalize();
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Softmax over `Wᵀx`. Ties in the argmax go to the earliest class.
    pub fn predict(&self, text: &str) -> Result<Prediction, ClassifyError> {
        if !self.is_trained() {
            return Err(ClassifyError::UntrainedModel);
        }
        let x = tfidf_vector(&self.vocabulary, &self.idf, text);
        let k = self.classes.len();
        let mut scores = alloc::vec![0.0; k];
        for (j, v) in x.iter() {
            for (s, w) in scores.iter_mut().zip(&self.weights[j * k..(j + 1) * k]) {
                *s += v * w;
            }
        }
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut probabilities: Vec<f64> = scores.iter().map(|s| math::exp(s - max)).collect();
        let sum: f64 = probabilities.iter().sum();
        for p in &mut probabilities {
            *p /= sum;
        }
        let mut best = 0;
        for (c, s) in scores.iter().enumerate() {
            if *s > scores[best] {
                best = c;
            }
        }
        Ok(Prediction { label: self.classes[best].clone(), probabilities })
    }
}

/// Per-sentence predictions and the transcript-level label multiset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptPredictions {
    pub sentences: Vec<Prediction>,
    /// Count of each non-negative label over the sentences.
    pub aggregate: BTreeMap<String, usize>,
}

pub fn classify_transcript<S: AsRef<str>>(model: &ClassifierModel, sentences: &[S]) -> Result<TranscriptPredictions, ClassifyError> {
    if sentences.is_empty() {
        return Err(ClassifyError::EmptyTranscript);
    }
    let preds: Vec<Prediction> = sentences.iter().map(|s| model.predict(s.as_ref())).collect::<Result<_, _>>()?;
    Ok(TranscriptPredictions { aggregate: aggregate_labels(model.task, &preds), sentences: preds })
}

pub(crate) fn aggregate_labels(task: Task, preds: &[Prediction]) -> BTreeMap<String, usize> {
    let mut aggregate = BTreeMap::new();
    for p in preds.iter().filter(|p| p.label != task.negative_class()) {
        *aggregate.entry(p.label.clone()).or_insert(0) += 1;
    }
    aggregate
}

// Versioned wire format. Reals are written as shortest round-trip decimal
// strings so a model reloads bit-for-bit.
#[derive(Serialize, Deserialize)]
struct ModelWire {
    format_version: u32,
    task: Task,
    classes: Vec<String>,
    vocabulary: BTreeMap<String, u32>,
    idf: Vec<String>,
    weights: Vec<Vec<String>>,
    train_config: TrainConfig,
    data_fingerprint: String,
    train_size: usize,
}

fn encode(x: f64) -> String {
    format!("{x:e}")
}

fn decode(s: &str) -> Result<f64, ClassifyError> {
    s.parse::<f64>().map_err(|_| ClassifyError::MalformedModel(format!("not a number: `{s}`")))
}

impl ClassifierModel {
    fn to_wire(&self) -> ModelWire {
        let k = self.classes.len().max(1);
        ModelWire {
            format_version: MODEL_FORMAT_VERSION,
            task: self.task,
            classes: self.classes.clone(),
            vocabulary: self.vocabulary.clone(),
            idf: self.idf.iter().copied().map(encode).collect(),
            weights: self.weights.chunks(k).map(|row| row.iter().copied().map(encode).collect()).collect(),
            train_config: self.train_config.clone(),
            data_fingerprint: self.data_fingerprint.clone(),
            train_size: self.train_size,
        }
    }

    fn from_wire(w: ModelWire) -> Result<Self, ClassifyError> {
        if w.format_version != MODEL_FORMAT_VERSION {
            return Err(ClassifyError::MalformedModel(format!("unsupported format version {}", w.format_version)));
        }
        let k = w.classes.len();
        let idf = w.idf.iter().map(|s| decode(s)).collect::<Result<Vec<_>, _>>()?;
        let mut weights = Vec::with_capacity(w.weights.len() * k);
        for row in &w.weights {
            if row.len() != k {
                return Err(ClassifyError::MalformedModel("weight row length differs from class count".into()));
            }
            for s in row {
                weights.push(decode(s)?);
            }
        }
        if idf.len() != w.vocabulary.len() {
            return Err(ClassifyError::MalformedModel("idf length differs from vocabulary size".into()));
        }
        if !weights.is_empty() && w.weights.len() != w.vocabulary.len() + 1 {
            return Err(ClassifyError::MalformedModel("weight rows must be vocabulary size + 1".into()));
        }
        if w.vocabulary.values().any(|&i| i as usize >= idf.len()) {
            return Err(ClassifyError::MalformedModel("vocabulary index out of range".into()));
        }
        Ok(Self {
            task: w.task,
            classes: w.classes,
            vocabulary: w.vocabulary,
            idf,
            weights,
            train_config: w.train_config,
            data_fingerprint: w.data_fingerprint,
            train_size: w.train_size,
        })
    }
}

impl Serialize for ClassifierModel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_wire().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ClassifierModel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = ModelWire::deserialize(deserializer)?;
        Self::from_wire(wire).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{train, LabeledExample};
    use alloc::vec;

    fn toy_model() -> ClassifierModel {
        let ex = vec![
            LabeledExample::new("1", "arnaque totale", Task::Controversy, "Controverse"),
            LabeledExample::new("2", "merci bravo", Task::Controversy, "NonControverse"),
            LabeledExample::new("3", "super merci", Task::Controversy, "NonControverse"),
        ];
        train(Task::Controversy, &ex, &TrainConfig::default()).unwrap()
    }

    #[test]
    fn untrained_model_errors() {
        assert_eq!(ClassifierModel::untrained(Task::InfoType).predict("x"), Err(ClassifyError::UntrainedModel));
    }

    #[test]
    fn probabilities_normalized() {
        let m = toy_model();
        for text in ["arnaque", "merci", "", "rien à voir"] {
            let p = m.predict(text).unwrap();
            let sum: f64 = p.probabilities.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            assert!(p.probabilities.iter().all(|&x| x >= 0.0));
        }
        assert_eq!(m.predict("arnaque").unwrap().label, "Controverse");
    }

    #[test]
    fn empty_text_follows_bias_prior() {
        // two of three training examples are NonControverse
        assert_eq!(toy_model().predict("").unwrap().label, "NonControverse");
    }

    #[test]
    fn positive_scaling_preserves_argmax() {
        let m = toy_model();
        let mut scaled = m.clone();
        for w in &mut scaled.weights {
            *w *= 3.5;
        }
        for text in ["arnaque totale", "merci", "bravo arnaque", ""] {
            assert_eq!(m.predict(text).unwrap().label, scaled.predict(text).unwrap().label);
        }
    }

    #[test]
    fn encode_decode_exact() {
        for x in [0.0, -0.0, 1.0 / 3.0, 1e-300, -2.5e300, f64::MIN_POSITIVE, 0.1 + 0.2] {
            assert_eq!(decode(&encode(x)).unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn transcript_aggregate() {
        let m = toy_model();
        let out = classify_transcript(&m, &["arnaque totale", "merci bravo", "arnaque"]).unwrap();
        assert_eq!(out.sentences.len(), 3);
        let expected: Vec<&str> = out.sentences.iter().map(|p| p.label.as_str()).filter(|l| *l != "NonControverse").collect();
        assert_eq!(out.aggregate.values().sum::<usize>(), expected.len());
        assert_eq!(classify_transcript::<&str>(&m, &[]), Err(ClassifyError::EmptyTranscript));
    }
}
