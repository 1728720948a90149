//! Entailment scoring backends.
//!
//! The engine only needs one primitive: given a premise and a list of
//! hypothesis sentences, return the probability that the premise entails each
//! hypothesis. [`OracleScorer`] answers from a fixture table, [`RemoteScorer`]
//! forwards to a model-serving sidecar over HTTP and [`CachedScorer`] memoizes
//! any backend.

mod cache;
mod oracle;
mod remote;

use std::sync::Arc;

use thiserror::Error;

pub use cache::CachedScorer;
pub use oracle::{OracleError, OracleScorer, OracleTable, PremiseKeying};
pub use remote::{HealthStatus, RemoteConfig, RemoteScorer};

/// Probability that the premise entails a hypothesis, in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct EntailmentScore(f64);

impl EntailmentScore {
    pub fn new(value: f64) -> Result<EntailmentScore, ScorerError> {
        if (0.0..=1.0).contains(&value) {
            Ok(EntailmentScore(value))
        } else {
            Err(ScorerError::ScoreOutOfRange(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ScoreRequest {
    /// Instance id, used by fixture-backed scorers to look up the premise.
    pub premise_id: Option<String>,
    pub premise: String,
    pub hypotheses: Vec<String>,
}

impl ScoreRequest {
    pub fn new(premise: impl Into<String>, hypotheses: Vec<String>) -> ScoreRequest {
        ScoreRequest {
            premise_id: None,
            premise: premise.into(),
            hypotheses,
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> ScoreRequest {
        self.premise_id = Some(id.into());
        self
    }

    pub fn validate(&self) -> Result<(), ScorerError> {
        if self.premise.trim().is_empty() {
            return Err(ScorerError::InvalidRequest("premise is empty".into()));
        }
        if self.hypotheses.is_empty() {
            return Err(ScorerError::InvalidRequest("no hypotheses".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScorerError {
    #[error("scorer backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("malformed scorer response: {0}")]
    MalformedResponse(String),
    #[error("scorer returned {0}, outside [0, 1]")]
    ScoreOutOfRange(f64),
    #[error("invalid score request: {0}")]
    InvalidRequest(String),
}

/// A backend that scores hypotheses against a premise.
///
/// Output is order-preserving: `scores[i]` belongs to `request.hypotheses[i]`.
/// Implementations must tolerate concurrent calls.
pub trait EntailmentScorer: Send + Sync {
    fn score_batch(&self, request: &ScoreRequest) -> Result<Vec<EntailmentScore>, ScorerError>;
}

impl<S: EntailmentScorer + ?Sized> EntailmentScorer for &S {
    fn score_batch(&self, request: &ScoreRequest) -> Result<Vec<EntailmentScore>, ScorerError> {
        (**self).score_batch(request)
    }
}

impl<S: EntailmentScorer + ?Sized> EntailmentScorer for Box<S> {
    fn score_batch(&self, request: &ScoreRequest) -> Result<Vec<EntailmentScore>, ScorerError> {
        (**self).score_batch(request)
    }
}

impl<S: EntailmentScorer + ?Sized> EntailmentScorer for Arc<S> {
    fn score_batch(&self, request: &ScoreRequest) -> Result<Vec<EntailmentScore>, ScorerError> {
        (**self).score_batch(request)
    }
}

/// Wraps `backend` in a premise/hypothesis keyed cache.
pub fn cached<S: EntailmentScorer>(backend: S) -> CachedScorer<S> {
    CachedScorer::new(backend)
}
