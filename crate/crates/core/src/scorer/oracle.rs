use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{EntailmentScore, EntailmentScorer, ScoreRequest, ScorerError};

/// How an oracle identifies the premise of a request.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PremiseKeying {
    /// Instance id; requests without an id fall back to the premise text.
    #[default]
    Id,
    /// Trimmed premise text.
    Text,
}

/// Fixed entailment scores keyed by premise and instantiated hypothesis.
///
/// File form (JSON):
///
/// ```json
/// { "default_score": 0.0, "keying": "id",
///   "premises": { "worked-1": { "Indonesian students requested ...": 0.927 } } }
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleTable {
    #[serde(default)]
    pub default_score: f64,
    #[serde(default)]
    pub keying: PremiseKeying,
    #[serde(default)]
    pub premises: BTreeMap<String, BTreeMap<String, f64>>,
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("cannot read oracle file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed oracle file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("oracle score {score} for premise `{premise}` is outside [0, 1]")]
    OutOfRange { premise: String, score: f64 },
}

impl OracleTable {
    pub fn new(default_score: f64) -> OracleTable {
        OracleTable {
            default_score,
            ..OracleTable::default()
        }
    }

    pub fn insert(&mut self, premise_key: &str, hypothesis: &str, score: f64) -> &mut OracleTable {
        self.premises
            .entry(premise_key.to_string())
            .or_default()
            .insert(hypothesis.to_string(), score);
        self
    }

    pub fn from_json(text: &str) -> Result<OracleTable, OracleError> {
        let table: OracleTable = serde_json::from_str(text)?;
        table.validate()?;
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<OracleTable, OracleError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| OracleError::Io {
            path: path.display().to_string(),
            source,
        })?;
        OracleTable::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("oracle tables serialize")
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        let in_range = |s: f64| (0.0..=1.0).contains(&s);
        if !in_range(self.default_score) {
            return Err(OracleError::OutOfRange {
                premise: "<default>".into(),
                score: self.default_score,
            });
        }
        for (premise, scores) in &self.premises {
            if let Some(&score) = scores.values().find(|&&s| !in_range(s)) {
                return Err(OracleError::OutOfRange {
                    premise: premise.clone(),
                    score,
                });
            }
        }
        Ok(())
    }

    fn premise_key<'a>(&self, request: &'a ScoreRequest) -> &'a str {
        match (self.keying, &request.premise_id) {
            (PremiseKeying::Id, Some(id)) => id,
            _ => request.premise.trim(),
        }
    }

    pub fn lookup(&self, request: &ScoreRequest, hypothesis: &str) -> f64 {
        self.premises
            .get(self.premise_key(request))
            .and_then(|scores| scores.get(hypothesis))
            .copied()
            .unwrap_or(self.default_score)
    }
}

/// Deterministic table-driven scorer for tests and fixture runs.
#[derive(Debug, Default)]
pub struct OracleScorer {
    table: OracleTable,
    requests: AtomicUsize,
    hypotheses: AtomicUsize,
}

impl OracleScorer {
    pub fn new(table: OracleTable) -> OracleScorer {
        OracleScorer {
            table,
            ..OracleScorer::default()
        }
    }

    pub fn table(&self) -> &OracleTable {
        &self.table
    }

    /// Number of `score_batch` calls served.
    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::Relaxed)
    }

    /// Number of hypotheses scored across all calls.
    pub fn hypothesis_count(&self) -> usize {
        self.hypotheses.load(Ordering::Relaxed)
    }
}

impl EntailmentScorer for OracleScorer {
    fn score_batch(&self, request: &ScoreRequest) -> Result<Vec<EntailmentScore>, ScorerError> {
        request.validate()?;
        self.requests.fetch_add(1, Ordering::Relaxed);
        self.hypotheses.fetch_add(request.hypotheses.len(), Ordering::Relaxed);
        request
            .hypotheses
            .iter()
            .map(|h| EntailmentScore::new(self.table.lookup(request, h)))
            .collect()
    }
}
