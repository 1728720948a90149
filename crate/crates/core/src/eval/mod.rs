//! Datasets, metrics and the ablation runner.

mod ablation;
mod dataset;
mod metrics;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::engine::{GoldLabels, Prediction};
use crate::ontology::{BinaryClass, Quadcode, Rootcode};

pub use ablation::{run_ablation, AblationCell, AblationError, AblationGrid, TableChoice, TableVariants};
pub use dataset::{Dataset, DatasetError, TaskCoverage};
pub use metrics::{evaluate, ClassMetrics, EvalError, EvalReport};

/// Label granularity being scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Binary,
    Quad,
    Root,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Binary, Task::Quad, Task::Root];

    pub fn name(self) -> &'static str {
        match self {
            Task::Binary => "binary",
            Task::Quad => "quad",
            Task::Root => "root",
        }
    }

    pub fn class_names(self) -> Vec<&'static str> {
        match self {
            Task::Binary => BinaryClass::ALL.iter().map(|b| b.name()).collect(),
            Task::Quad => Quadcode::ALL.iter().map(|q| q.short_name()).collect(),
            Task::Root => Rootcode::ALL.iter().map(|r| r.name()).collect(),
        }
    }

    pub fn gold_index(self, gold: &GoldLabels) -> Option<usize> {
        match self {
            Task::Binary => gold.binary.map(binary_index),
            Task::Quad => gold.quad.map(quad_index),
            Task::Root => gold.root.map(Rootcode::index),
        }
    }

    pub fn prediction_index(self, prediction: &Prediction) -> usize {
        match self {
            Task::Binary => binary_index(prediction.binary),
            Task::Quad => quad_index(prediction.quad),
            Task::Root => prediction.root.index(),
        }
    }
}

fn binary_index(b: BinaryClass) -> usize {
    match b {
        BinaryClass::Cooperation => 0,
        BinaryClass::Conflict => 1,
    }
}

fn quad_index(q: Quadcode) -> usize {
    usize::from(q.digit() - 1)
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "binary" => Ok(Task::Binary),
            "quad" | "quadcode" => Ok(Task::Quad),
            "root" | "rootcode" => Ok(Task::Root),
            other => Err(format!("unknown task `{other}` (expected binary, quad or root)")),
        }
    }
}
