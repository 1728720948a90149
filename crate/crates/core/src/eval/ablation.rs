use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use super::{evaluate, Dataset, EvalError, Task};
use crate::engine::{Classifier, ClassifierConfig, EngineError, Mode};
use crate::hypotheses::HypothesisTable;
use crate::scorer::EntailmentScorer;

#[derive(Debug, Error)]
pub enum AblationError {
    #[error("unknown ablation cell `{0}` (expected Tiny, Full, L1, L2 or L3, optionally suffixed -c)")]
    UnknownCell(String),
    #[error("ablation grid is empty")]
    EmptyGrid,
    #[error("dataset `{0}` has no gold labels for any task")]
    NoGoldLabels(String),
    #[error("cell {cell}: {source}")]
    Engine { cell: String, source: EngineError },
    #[error("cell {cell}: {source}")]
    Eval { cell: String, source: EvalError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TableChoice {
    Tiny,
    Full,
}

/// Tables an ablation can draw on.
#[derive(Debug, Clone)]
pub struct TableVariants {
    pub tiny: HypothesisTable,
    pub full: HypothesisTable,
}

impl TableVariants {
    pub fn new(tiny: HypothesisTable, full: HypothesisTable) -> TableVariants {
        TableVariants { tiny, full }
    }

    pub fn get(&self, choice: TableChoice) -> &HypothesisTable {
        match choice {
            TableChoice::Tiny => &self.tiny,
            TableChoice::Full => &self.full,
        }
    }
}

/// One configuration in the grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationCell {
    pub name: String,
    pub table: TableChoice,
    pub config: ClassifierConfig,
}

impl AblationCell {
    pub const DEFAULT_GRID: &'static str = "Tiny-c,Tiny,Full-c,Full,L1-c,L1,L2-c,L2,L3";

    /// `Tiny` and `Full` are flat queries over the tiny and full tables;
    /// `L1`, `L2`, `L3` run the cascade over the full table. A `-c` suffix
    /// turns the consult penalty off. Other settings come from `base`.
    pub fn parse(name: &str, base: &ClassifierConfig) -> Result<AblationCell, AblationError> {
        let trimmed = name.trim();
        let (stem, no_penalty) = match trimmed.strip_suffix("-c") {
            Some(stem) => (stem, true),
            None => (trimmed, false),
        };
        let (table, mode, canonical) = match stem.to_ascii_lowercase().as_str() {
            "tiny" | "flattiny" => (TableChoice::Tiny, Mode::Flat, "Tiny"),
            "full" | "flatfull" => (TableChoice::Full, Mode::Flat, "Full"),
            "l1" => (TableChoice::Full, Mode::L1, "L1"),
            "l2" => (TableChoice::Full, Mode::L2, "L2"),
            "l3" => (TableChoice::Full, Mode::L3, "L3"),
            _ => return Err(AblationError::UnknownCell(trimmed.to_string())),
        };
        let mut config = base.clone().with_mode(mode);
        if no_penalty {
            config = config.without_penalty();
        }
        Ok(AblationCell {
            name: if no_penalty { format!("{canonical}-c") } else { canonical.to_string() },
            table,
            config,
        })
    }

    /// Comma-separated list of cell names.
    pub fn parse_grid(spec: &str, base: &ClassifierConfig) -> Result<Vec<AblationCell>, AblationError> {
        let cells = spec
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| AblationCell::parse(s, base))
            .collect::<Result<Vec<_>, _>>()?;
        if cells.is_empty() {
            return Err(AblationError::EmptyGrid);
        }
        Ok(cells)
    }
}

/// Macro F1 per task and cell, all cells over the same instances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationGrid {
    pub dataset: String,
    pub instances: usize,
    pub tasks: Vec<Task>,
    pub cells: Vec<String>,
    /// `macro_f1[t][c]` for `tasks[t]` and `cells[c]`, as a fraction.
    pub macro_f1: Vec<Vec<f64>>,
}

impl AblationGrid {
    pub fn get(&self, task: Task, cell: &str) -> Option<f64> {
        let t = self.tasks.iter().position(|x| *x == task)?;
        let c = self.cells.iter().position(|x| x == cell)?;
        Some(self.macro_f1[t][c])
    }

    /// Header `task` followed by the cell names; one row per task, percent
    /// with two decimals.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("task");
        for cell in &self.cells {
            out.push('\t');
            out.push_str(cell);
        }
        out.push('\n');
        for (task, row) in self.tasks.iter().zip(&self.macro_f1) {
            out.push_str(task.name());
            for v in row {
                let _ = write!(out, "\t{:.2}", v * 100.0);
            }
            out.push('\n');
        }
        out
    }
}

/// Classifies the dataset once per cell and records macro F1 for every task
/// the dataset has gold labels for.
pub fn run_ablation(
    dataset: &Dataset,
    variants: &TableVariants,
    scorer: &dyn EntailmentScorer,
    cells: &[AblationCell],
    jobs: usize,
) -> Result<AblationGrid, AblationError> {
    if cells.is_empty() {
        return Err(AblationError::EmptyGrid);
    }
    let tasks = dataset.coverage.tasks();
    if tasks.is_empty() {
        return Err(AblationError::NoGoldLabels(dataset.name.clone()));
    }
    let mut macro_f1 = vec![Vec::with_capacity(cells.len()); tasks.len()];
    for cell in cells {
        let classifier = Classifier::new(variants.get(cell.table), scorer, cell.config.clone());
        let predictions = classifier
            .classify_all(&dataset.instances, jobs)
            .into_iter()
            .collect::<Result<Vec<_>, _>>()
            .map_err(|source| AblationError::Engine {
                cell: cell.name.clone(),
                source,
            })?;
        for (t, task) in tasks.iter().enumerate() {
            let report = evaluate(&predictions, dataset, *task).map_err(|source| AblationError::Eval {
                cell: cell.name.clone(),
                source,
            })?;
            macro_f1[t].push(report.macro_f1);
        }
    }
    Ok(AblationGrid {
        dataset: dataset.name.clone(),
        instances: dataset.len(),
        tasks,
        cells: cells.iter().map(|c| c.name.clone()).collect(),
        macro_f1,
    })
}
