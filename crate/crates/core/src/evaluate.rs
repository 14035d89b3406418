//! Confusion matrix and the precision / recall / F1 / accuracy suite.
//!
//! Zero-division rule: a class that is never predicted has precision 0, a
//! class with no gold instances has recall 0, and F1 is 0 when precision and
//! recall are both 0. Such classes still count in the macro averages, which
//! pulls macro scores down on imbalanced data.
//!
//! F1 is computed per class and then averaged; the averaged F1 is not the
//! harmonic mean of the averaged precision and recall.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::classify::{ClassifierModel, ClassifyError, LabeledExample};
use crate::taxonomy::Task;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("{preds} predictions for {golds} gold labels")]
    LengthMismatch { preds: usize, golds: usize },
    #[error("label `{0}` is not in the class list")]
    UnknownLabel(String),
    #[error("nothing to evaluate")]
    EmptyMatrix,
    #[error("test examples are for task {found}, model is for {expected}")]
    TaskMismatch { expected: Task, found: Task },
    #[error(transparent)]
    Classify(#[from] ClassifyError),
}

/// Rows are gold classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_counts(classes: Vec<String>, counts: Vec<Vec<u64>>) -> Self {
        assert_eq!(classes.len(), counts.len(), "matrix must be K x K");
        assert!(counts.iter().all(|r| r.len() == classes.len()), "matrix must be K x K");
        Self { classes, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn gold_count(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn predicted_count(&self, class: usize) -> u64 {
        self.counts.iter().map(|r| r[class]).sum()
    }
}

/// Counts `counts[g][p] = #{i : golds[i] = g and preds[i] = p}`.
pub fn confusion<P, G, C>(preds: &[P], golds: &[G], classes: &[C]) -> Result<ConfusionMatrix, EvalError>
where
    P: AsRef<str>,
    G: AsRef<str>,
    C: AsRef<str>,
{
    if preds.len() != golds.len() {
        return Err(EvalError::LengthMismatch { preds: preds.len(), golds: golds.len() });
    }
    if preds.is_empty() {
        return Err(EvalError::EmptyMatrix);
    }
    let k = classes.len();
    let position = |label: &str| {
        classes.iter().position(|c| c.as_ref() == label).ok_or_else(|| EvalError::UnknownLabel(label.into()))
    };
    let mut counts = alloc::vec![alloc::vec![0u64; k]; k];
    for (p, g) in preds.iter().zip(golds) {
        let (pi, gi) = (position(p.as_ref())?, position(g.as_ref())?);
        counts[gi][pi] += 1;
    }
    Ok(ConfusionMatrix { classes: classes.iter().map(|c| c.as_ref().into()).collect(), counts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub task: Option<Task>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub model_fingerprint: Option<String>,
    pub per_class: Vec<ClassMetrics>,
    #[serde(rename = "macro")]
    pub macro_avg: Averages,
    #[serde(rename = "weighted")]
    pub weighted_avg: Averages,
    pub accuracy: f64,
    pub total: u64,
    pub confusion: ConfusionMatrix,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn report(matrix: &ConfusionMatrix) -> Result<EvalReport, EvalError> {
    let total = matrix.total();
    if total == 0 || matrix.classes.is_empty() {
        return Err(EvalError::EmptyMatrix);
    }
    let k = matrix.classes.len();
    let mut per_class = Vec::with_capacity(k);
    for c in 0..k {
        let tp = matrix.counts[c][c];
        let support = matrix.gold_count(c);
        let precision = ratio(tp, matrix.predicted_count(c));
        let recall = ratio(tp, support);
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        per_class.push(ClassMetrics { class: matrix.classes[c].clone(), precision, recall, f1, support });
    }

    let kf = k as f64;
    let macro_avg = Averages {
        precision: per_class.iter().map(|m| m.precision).sum::<f64>() / kf,
        recall: per_class.iter().map(|m| m.recall).sum::<f64>() / kf,
        f1: per_class.iter().map(|m| m.f1).sum::<f64>() / kf,
    };
    let weighted = |f: fn(&ClassMetrics) -> f64| {
        per_class.iter().map(|m| m.support as f64 * f(m)).sum::<f64>() / total as f64
    };
    let accuracy = ratio(matrix.trace(), total);
    let weighted_avg = Averages {
        precision: weighted(|m| m.precision),
        // the trace over the total
        recall: accuracy,
        f1: weighted(|m| m.f1),
    };

    Ok(EvalReport {
        task: None,
        model_fingerprint: None,
        per_class,
        macro_avg,
        weighted_avg,
        accuracy,
        total,
        confusion: matrix.clone(),
    })
}

/// Predicts every test example and reports against the gold labels.
pub fn evaluate(model: &ClassifierModel, test_set: &[LabeledExample]) -> Result<EvalReport, EvalError> {
    if let Some(ex) = test_set.iter().find(|e| e.task != model.task) {
        return Err(EvalError::TaskMismatch { expected: model.task, found: ex.task });
    }
    let preds: Vec<String> = test_set.iter().map(|e| model.predict(&e.text).map(|p| p.label)).collect::<Result<_, _>>()?;
    let golds: Vec<&str> = test_set.iter().map(|e| e.label.as_str()).collect();
    let matrix = confusion(&preds, &golds, &model.classes)?;
    let mut rep = report(&matrix)?;
    rep.task = Some(model.task);
    rep.model_fingerprint = Some(model.fingerprint());
    Ok(rep)
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

impl EvalReport {
    /// Aligned text table: one summary row with macro (weighted) precision,
    /// recall and F1 plus accuracy, all as percentages, then per-class rows.
    pub fn render(&self) -> String {
        let name = self.task.map_or("model", Task::as_str);
        let pair = |m: f64, w: f64| format!("{} ({})", pct(m), pct(w));
        let row = [
            String::from(name),
            pair(self.macro_avg.precision, self.weighted_avg.precision),
            pair(self.macro_avg.recall, self.weighted_avg.recall),
            pair(self.macro_avg.f1, self.weighted_avg.f1),
            pct(self.accuracy),
        ];
        let header = ["Dataset", "Precision", "Recall", "F1", "Accuracy"];
        let sub = ["", "macro (weighted)", "macro (weighted)", "macro (weighted)", "(accuracy)"];
        let widths: Vec<usize> = (0..5)
            .map(|i| header[i].chars().count().max(sub[i].chars().count()).max(row[i].chars().count()))
            .collect();

        let mut out = String::new();
        let line = |out: &mut String, cells: &[&str]| {
            out.push('|');
            for (cell, w) in cells.iter().zip(&widths) {
                let _ = write!(out, " {cell:<w$} |");
            }
            out.push('\n');
        };
        let rule: String = {
            let mut r = String::from("+");
            for w in &widths {
                r.push_str(&"-".repeat(w + 2));
                r.push('+');
            }
            r.push('\n');
            r
        };
        out.push_str(&rule);
        line(&mut out, &header);
        line(&mut out, &sub);
        out.push_str(&rule);
        line(&mut out, &row.iter().map(String::as_str).collect::<Vec<_>>());
        out.push_str(&rule);

        let cw = self.per_class.iter().map(|m| m.class.chars().count()).max().unwrap_or(5).max(5);
        let _ = writeln!(out, "\n{:<cw$}  {:>9}  {:>9}  {:>9}  {:>7}", "class", "precision", "recall", "f1", "support");
        for m in &self.per_class {
            let _ = writeln!(
                out,
                "{:<cw$}  {:>9}  {:>9}  {:>9}  {:>7}",
                m.class,
                pct(m.precision),
                pct(m.recall),
                pct(m.f1),
                m.support
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn two_class() -> ConfusionMatrix {
        ConfusionMatrix::from_counts(vec!["A".into(), "B".into()], vec![vec![8, 2], vec![1, 9]])
    }

    #[test]
    fn hand_worked_two_class() {
        // 20 examples: gold A 10 (8 right), gold B 10 (9 right)
        let mut preds = Vec::new();
        let mut golds = Vec::new();
        for (g, p, n) in [("A", "A", 8), ("A", "B", 2), ("B", "A", 1), ("B", "B", 9)] {
            for _ in 0..n {
                golds.push(g);
                preds.push(p);
            }
        }
        let m = confusion(&preds, &golds, &["A", "B"]).unwrap();
        assert_eq!(m, two_class());

        let r = report(&m).unwrap();
        // precision A = 8/9, B = 9/11; recall A = 0.8, B = 0.9
        assert!((r.per_class[0].precision - 8.0 / 9.0).abs() < 1e-15);
        assert!((r.per_class[1].precision - 9.0 / 11.0).abs() < 1e-15);
        assert_eq!(r.per_class[0].recall, 0.8);
        assert_eq!(r.per_class[1].recall, 0.9);
        // F1 A = 16/19, F1 B = 6/7
        assert!((r.per_class[0].f1 - 16.0 / 19.0).abs() < 1e-15);
        assert!((r.per_class[1].f1 - 6.0 / 7.0).abs() < 1e-15);
        assert!((r.per_class[0].f1 - 0.8421).abs() < 5e-5);
        assert!((r.per_class[1].f1 - 0.8571).abs() < 5e-5);
        assert!((r.macro_avg.f1 - 0.8496).abs() < 5e-5);
        assert_eq!(r.accuracy, 0.85);
        assert_eq!(r.weighted_avg.recall, 0.85);
    }

    #[test]
    fn perfect_diagonal() {
        let m = confusion(&["A", "B", "C"], &["A", "B", "C"], &["A", "B", "C"]).unwrap();
        assert_eq!(m.counts, vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
        let r = report(&m).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.macro_avg, Averages { precision: 1.0, recall: 1.0, f1: 1.0 });
        assert_eq!(r.weighted_avg, Averages { precision: 1.0, recall: 1.0, f1: 1.0 });
    }

    #[test]
    fn single_example() {
        let m = confusion(&["B"], &["A"], &["A", "B"]).unwrap();
        assert_eq!(m.counts, vec![vec![0, 1], vec![0, 0]]);
        assert_eq!(m.total(), 1);
    }

    #[test]
    fn zero_division_on_absent_classes() {
        // one class present, matching constant predictions
        let m = confusion(&["A", "A"], &["A", "A"], &["A", "B", "C"]).unwrap();
        let r = report(&m).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.per_class[1].precision, 0.0);
        assert_eq!(r.per_class[1].recall, 0.0);
        assert_eq!(r.per_class[1].f1, 0.0);
        assert!((r.macro_avg.f1 - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.weighted_avg.f1, 1.0);
    }

    #[test]
    fn errors() {
        assert_eq!(confusion(&["A"], &["A", "B"], &["A", "B"]), Err(EvalError::LengthMismatch { preds: 1, golds: 2 }));
        assert_eq!(confusion(&["Z"], &["A"], &["A"]), Err(EvalError::UnknownLabel("Z".into())));
        assert_eq!(confusion::<&str, &str, &str>(&[], &[], &["A"]), Err(EvalError::EmptyMatrix));
        let empty = ConfusionMatrix::from_counts(vec!["A".into()], vec![vec![0]]);
        assert_eq!(report(&empty), Err(EvalError::EmptyMatrix));
    }

    #[test]
    fn render_matches_table_layout() {
        let mut r = report(&two_class()).unwrap();
        r.task = Some(Task::Controversy);
        let text = r.render();
        assert!(text.contains("Precision"));
        assert!(text.contains("macro (weighted)"));
        // macro and weighted precision are both (8/9 + 9/11) / 2
        assert!(text.contains("85.35 (85.35)"), "{text}");
        assert!(text.contains("85.00 (85.00)"));
        assert!(text.contains("| 85.00"));
        assert!(text.contains("controversy"));

        // the format of a reference row: macro 70.54 / weighted 92.2 renders with two decimals
        let reference = EvalReport {
            macro_avg: Averages { precision: 0.7054, recall: 0.7381, f1: 0.7201 },
            weighted_avg: Averages { precision: 0.922, recall: 0.9152, f1: 0.9183 },
            accuracy: 0.9152,
            ..r
        };
        let text = reference.render();
        assert!(text.contains("70.54 (92.20)"), "{text}");
        assert!(text.contains("73.81 (91.52)"));
        assert!(text.contains("72.01 (91.83)"));
        assert!(text.contains("| 91.52"));
    }
}
