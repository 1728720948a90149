use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use super::{Dataset, Task};
use crate::engine::Prediction;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("{predictions} predictions for {instances} instances")]
    LengthMismatch { predictions: usize, instances: usize },
    #[error("prediction {position} is for `{found}`, expected `{expected}`")]
    IdMismatch {
        position: usize,
        expected: String,
        found: String,
    },
    #[error("instance `{id}` has no gold {task} label")]
    MissingLabel { id: String, task: Task },
    #[error("gold and predicted label sequences differ in length")]
    Unaligned,
    #[error("class index {0} out of range")]
    ClassOutOfRange(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub name: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    pub predicted: usize,
}

/// Metrics are fractions in [0, 1]; rendering converts to percent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub task: Task,
    pub total: usize,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// Classes present in gold or predictions, in canonical order.
    pub classes: Vec<ClassMetrics>,
    /// `confusion[g][p]` over `classes`.
    pub confusion: Vec<Vec<usize>>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl EvalReport {
    /// Scores aligned gold and predicted class indices into `names`. Macro
    /// averages run over every class that occurs in either sequence; a class
    /// with no predictions has precision 0, one with no gold has recall 0.
    pub fn from_indices(task: Task, names: &[&str], gold: &[usize], pred: &[usize]) -> Result<EvalReport, EvalError> {
        if gold.len() != pred.len() {
            return Err(EvalError::Unaligned);
        }
        let n = names.len();
        if let Some(&bad) = gold.iter().chain(pred).find(|&&i| i >= n) {
            return Err(EvalError::ClassOutOfRange(bad));
        }
        let mut full = vec![vec![0usize; n]; n];
        for (&g, &p) in gold.iter().zip(pred) {
            full[g][p] += 1;
        }
        let support: Vec<usize> = (0..n).map(|c| full[c].iter().sum()).collect();
        let predicted: Vec<usize> = (0..n).map(|c| full.iter().map(|row| row[c]).sum()).collect();
        let present: Vec<usize> = (0..n).filter(|&c| support[c] + predicted[c] > 0).collect();

        let classes: Vec<ClassMetrics> = present
            .iter()
            .map(|&c| {
                let tp = full[c][c];
                let precision = ratio(tp, predicted[c]);
                let recall = ratio(tp, support[c]);
                let f1 = if precision + recall > 0.0 {
                    2.0 * precision * recall / (precision + recall)
                } else {
                    0.0
                };
                ClassMetrics {
                    name: names[c].to_string(),
                    precision,
                    recall,
                    f1,
                    support: support[c],
                    predicted: predicted[c],
                }
            })
            .collect();
        let mean = |f: fn(&ClassMetrics) -> f64| {
            if classes.is_empty() {
                0.0
            } else {
                classes.iter().map(f).sum::<f64>() / classes.len() as f64
            }
        };
        let correct = (0..n).map(|c| full[c][c]).sum();
        Ok(EvalReport {
            task,
            total: gold.len(),
            accuracy: ratio(correct, gold.len()),
            macro_precision: mean(|c| c.precision),
            macro_recall: mean(|c| c.recall),
            macro_f1: mean(|c| c.f1),
            confusion: present
                .iter()
                .map(|&g| present.iter().map(|&p| full[g][p]).collect())
                .collect(),
            classes,
        })
    }

    pub fn render_text(&self) -> String {
        let width = self.classes.iter().map(|c| c.name.len()).max().unwrap_or(5).max(9);
        let mut out = String::new();
        let _ = writeln!(out, "task: {}  instances: {}", self.task, self.total);
        let _ = writeln!(out, "macro averages over classes present in gold or predictions");
        let _ = writeln!(
            out,
            "{:<width$}  {:>9}  {:>9}  {:>9}  {:>7}",
            "class", "precision", "recall", "f1", "support"
        );
        for c in &self.classes {
            let _ = writeln!(
                out,
                "{:<width$}  {:>9.1}  {:>9.1}  {:>9.1}  {:>7}",
                c.name,
                c.precision * 100.0,
                c.recall * 100.0,
                c.f1 * 100.0,
                c.support
            );
        }
        let _ = writeln!(
            out,
            "{:<width$}  {:>9.1}  {:>9.1}  {:>9.1}  {:>7}",
            "macro avg",
            self.macro_precision * 100.0,
            self.macro_recall * 100.0,
            self.macro_f1 * 100.0,
            self.total
        );
        let _ = writeln!(out, "accuracy: {:.1}", self.accuracy * 100.0);
        let _ = writeln!(out, "confusion (rows gold, columns predicted):");
        let _ = write!(out, "{:<width$}", "");
        for c in &self.classes {
            let _ = write!(out, "  {:>w$}", c.name, w = c.name.len().max(3));
        }
        let _ = writeln!(out);
        for (c, row) in self.classes.iter().zip(&self.confusion) {
            let _ = write!(out, "{:<width$}", c.name);
            for (col, v) in self.classes.iter().zip(row) {
                let _ = write!(out, "  {:>w$}", v, w = col.name.len().max(3));
            }
            let _ = writeln!(out);
        }
        out
    }

    /// One row per class plus a `macro` row; percent with two decimals.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("task\tclass\tprecision\trecall\tf1\tsupport\n");
        let pct = |v: f64| format!("{:.2}", v * 100.0);
        for c in &self.classes {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                self.task,
                c.name,
                pct(c.precision),
                pct(c.recall),
                pct(c.f1),
                c.support
            );
        }
        let _ = writeln!(
            out,
            "{}\tmacro\t{}\t{}\t{}\t{}",
            self.task,
            pct(self.macro_precision),
            pct(self.macro_recall),
            pct(self.macro_f1),
            self.total
        );
        let _ = writeln!(out, "{}\taccuracy\t\t\t{}\t{}", self.task, pct(self.accuracy), self.total);
        out
    }
}

/// Compares predictions with the gold labels of `dataset` for one task.
/// Predictions must be in dataset order.
pub fn evaluate(predictions: &[Prediction], dataset: &Dataset, task: Task) -> Result<EvalReport, EvalError> {
    if predictions.len() != dataset.instances.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            instances: dataset.instances.len(),
        });
    }
    let mut gold = Vec::with_capacity(predictions.len());
    let mut pred = Vec::with_capacity(predictions.len());
    for (position, (p, instance)) in predictions.iter().zip(&dataset.instances).enumerate() {
        if p.instance_id != instance.id {
            return Err(EvalError::IdMismatch {
                position,
                expected: instance.id.clone(),
                found: p.instance_id.clone(),
            });
        }
        let g = task.gold_index(&instance.gold).ok_or_else(|| EvalError::MissingLabel {
            id: instance.id.clone(),
            task,
        })?;
        gold.push(g);
        pred.push(task.prediction_index(p));
    }
    EvalReport::from_indices(task, &task.class_names(), &gold, &pred)
}
