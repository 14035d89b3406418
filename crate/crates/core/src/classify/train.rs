use alloc::string::String;
use alloc::vec::Vec;

use sha2::{Digest, Sha256};

use super::features::{FeatureSpace, SparseVector};
use super::model::ClassifierModel;
use super::{ClassWeighting, ClassifyError, LabeledExample, TrainConfig};
use crate::math;
use crate::taxonomy::Task;

/// A regularized, example-weighted softmax regression objective:
///
/// `L(W) = (1/N) Σ_i s_i · (−ln softmax(Wᵀx_i)[y_i]) + λ‖W‖²`
///
/// `W` is stored row-major with shape `dim × num_classes`, the last row
/// being the bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub features: Vec<SparseVector>,
    pub labels: Vec<usize>,
    pub sample_weights: Vec<f64>,
    pub dim: usize,
    pub num_classes: usize,
    pub l2_penalty: f64,
}

impl Problem {
    /// Builds a problem from dense feature rows (the caller includes any bias column).
    pub fn from_dense(rows: &[Vec<f64>], labels: Vec<usize>, sample_weights: Vec<f64>, num_classes: usize, l2_penalty: f64) -> Self {
        let dim = rows.first().map_or(0, Vec::len);
        let features = rows
            .iter()
            .map(|r| {
                let mut v = SparseVector::default();
                for (i, &x) in r.iter().enumerate() {
                    if x != 0.0 {
                        v.indices.push(i as u32);
                        v.values.push(x);
                    }
                }
                v
            })
            .collect();
        Self { features, labels, sample_weights, dim, num_classes, l2_penalty }
    }

    pub fn num_weights(&self) -> usize {
        self.dim * self.num_classes
    }

    fn scores(&self, x: &SparseVector, w: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let k = self.num_classes;
        for (j, v) in x.iter() {
            let row = &w[j * k..(j + 1) * k];
            for (o, wj) in out.iter_mut().zip(row) {
                *o += v * wj;
            }
        }
    }

    pub fn loss(&self, w: &[f64]) -> f64 {
        self.evaluate(w, false).0
    }

    pub fn loss_and_gradient(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let (loss, grad) = self.evaluate(w, true);
        (loss, grad.expect("gradient requested"))
    }

    fn evaluate(&self, w: &[f64], with_grad: bool) -> (f64, Option<Vec<f64>>) {
        assert_eq!(w.len(), self.num_weights(), "weight vector has the wrong length");
        let n = self.features.len() as f64;
        let k = self.num_classes;
        let mut grad = with_grad.then(|| alloc::vec![0.0; w.len()]);
        let mut scores = alloc::vec![0.0; k];
        let mut data_loss = 0.0;

        for ((x, &y), &s) in self.features.iter().zip(&self.labels).zip(&self.sample_weights) {
            self.scores(x, w, &mut scores);
            let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = scores.iter().map(|z| math::exp(z - max)).sum();
            let lse = max + math::ln(sum);
            data_loss += s * (lse - scores[y]);
            if let Some(g) = grad.as_mut() {
                let scale = s / n;
                for (c, z) in scores.iter_mut().enumerate() {
                    let p = math::exp(*z - lse);
                    *z = scale * (p - if c == y { 1.0 } else { 0.0 });
                }
                for (j, v) in x.iter() {
                    let row = &mut g[j * k..(j + 1) * k];
                    for (gj, d) in row.iter_mut().zip(&scores) {
                        *gj += v * d;
                    }
                }
            }
        }

        let penalty: f64 = w.iter().map(|v| v * v).sum();
        if let Some(g) = grad.as_mut() {
            for (gj, wj) in g.iter_mut().zip(w) {
                *gj += 2.0 * self.l2_penalty * wj;
            }
        }
        (data_loss / n + self.l2_penalty * penalty, grad)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: ClassifierModel,
    /// Objective value before each update, plus the final value.
    pub loss_history: Vec<f64>,
    /// Examples dropped because their text was blank.
    pub skipped_empty: usize,
}

pub fn train(task: Task, examples: &[LabeledExample], config: &TrainConfig) -> Result<ClassifierModel, ClassifyError> {
    train_with_history(task, examples, config).map(|o| o.model)
}

/// Fits a model by full-batch gradient descent from zero weights.
pub fn train_with_history(task: Task, examples: &[LabeledExample], config: &TrainConfig) -> Result<TrainOutcome, ClassifyError> {
    config.validate()?;
    for ex in examples {
        if ex.task != task {
            return Err(ClassifyError::TaskMismatch { expected: task, found: ex.task });
        }
        if !task.is_valid_label(&ex.label) {
            return Err(ClassifyError::InvalidLabel { task, label: ex.label.clone() });
        }
    }
    let usable: Vec<&LabeledExample> = examples.iter().filter(|e| !e.text.trim().is_empty()).collect();
    let skipped_empty = examples.len() - usable.len();
    if usable.is_empty() {
        return Err(ClassifyError::EmptyTrainingSet);
    }

    let classes: Vec<String> = task.classes().iter().map(|c| String::from(*c)).collect();
    let k = classes.len();
    let labels: Vec<usize> = usable
        .iter()
        .map(|e| classes.iter().position(|c| *c == e.label).expect("validated"))
        .collect();
    let mut class_counts = alloc::vec![0usize; k];
    for &y in &labels {
        class_counts[y] += 1;
    }
    let present = class_counts.iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(ClassifyError::SingleClassTrainingSet);
    }

    let space = FeatureSpace::fit(usable.iter().map(|e| e.text.as_str()));
    let features: Vec<SparseVector> = usable.iter().map(|e| space.featurize(&e.text)).collect();
    let n = labels.len() as f64;
    let sample_weights: Vec<f64> = match config.class_weighting {
        ClassWeighting::None => alloc::vec![1.0; labels.len()],
        ClassWeighting::InverseFrequency => {
            labels.iter().map(|&y| n / (present as f64 * class_counts[y] as f64)).collect()
        }
    };
    let problem = Problem {
        features,
        labels,
        sample_weights,
        dim: space.dim(),
        num_classes: k,
        l2_penalty: config.l2_penalty,
    };

    let mut weights = alloc::vec![0.0; problem.num_weights()];
    let mut loss_history = Vec::with_capacity(config.epochs as usize + 1);
    for _ in 0..config.epochs {
        let (loss, grad) = problem.loss_and_gradient(&weights);
        loss_history.push(loss);
        for (w, g) in weights.iter_mut().zip(&grad) {
            *w -= config.learning_rate * g;
        }
    }
    loss_history.push(problem.loss(&weights));

    let model = ClassifierModel {
        task,
        classes,
        vocabulary: space.vocabulary,
        idf: space.idf,
        weights,
        train_config: config.clone(),
        data_fingerprint: data_fingerprint(examples),
        train_size: usable.len(),
    };
    Ok(TrainOutcome { model, loss_history, skipped_empty })
}

/// Hex SHA-256 over the (target, label, text) triples in order.
pub fn data_fingerprint(examples: &[LabeledExample]) -> String {
    let mut hasher = Sha256::new();
    for e in examples {
        hasher.update(e.target.as_bytes());
        hasher.update([0u8]);
        hasher.update(e.label.as_bytes());
        hasher.update([0u8]);
        hasher.update(e.text.as_bytes());
        hasher.update(b"\n");
    }
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest.iter() {
        out.push(char::from_digit((b >> 4) as u32, 16).expect("nibble"));
        out.push(char::from_digit((b & 0xf) as u32, 16).expect("nibble"));
    }
    out
}
