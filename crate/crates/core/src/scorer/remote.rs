use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{EntailmentScore, EntailmentScorer, ScoreRequest, ScorerError};

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteConfig {
    /// Base URL of the sidecar, e.g. `http://127.0.0.1:8000`.
    pub endpoint: String,
    pub model: Option<String>,
    pub timeout: Duration,
    /// Extra attempts after a transport failure.
    pub retries: u32,
    /// Delay before the first retry; doubles on each further attempt.
    pub backoff: Duration,
    /// Hypotheses per HTTP call; larger requests are split.
    pub max_batch: usize,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>) -> RemoteConfig {
        RemoteConfig {
            endpoint: endpoint.into(),
            model: None,
            timeout: Duration::from_secs(30),
            retries: 2,
            backoff: Duration::from_millis(250),
            max_batch: 32,
        }
    }
}

#[derive(Debug, Serialize)]
struct WireRequest<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<&'a str>,
    premise: &'a str,
    hypotheses: &'a [String],
}

#[derive(Debug, Deserialize)]
struct WireResponse {
    scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct HealthStatus {
    pub status: String,
    pub model: String,
}

/// Client for the `/v1/score` sidecar protocol.
pub struct RemoteScorer {
    config: RemoteConfig,
    client: reqwest::blocking::Client,
}

impl RemoteScorer {
    pub fn new(config: RemoteConfig) -> Result<RemoteScorer, ScorerError> {
        if config.max_batch == 0 {
            return Err(ScorerError::InvalidRequest("max batch size must be positive".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| ScorerError::BackendUnavailable(e.to_string()))?;
        Ok(RemoteScorer { config, client })
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.config.endpoint.trim_end_matches('/'), path)
    }

    pub fn health(&self) -> Result<HealthStatus, ScorerError> {
        let response = self.with_retries(|| self.client.get(self.url("/v1/health")).send())?;
        if !response.status().is_success() {
            return Err(ScorerError::MalformedResponse(format!("health check returned {}", response.status())));
        }
        response
            .json::<HealthStatus>()
            .map_err(|e| ScorerError::MalformedResponse(e.to_string()))
    }

    fn with_retries(
        &self,
        send: impl Fn() -> reqwest::Result<reqwest::blocking::Response>,
    ) -> Result<reqwest::blocking::Response, ScorerError> {
        let mut delay = self.config.backoff;
        let mut attempt = 0;
        loop {
            match send() {
                Ok(response) => return Ok(response),
                Err(_) if attempt < self.config.retries => {
                    thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
                Err(err) => {
                    return Err(ScorerError::BackendUnavailable(format!(
                        "{} after {} attempt(s): {err}",
                        self.config.endpoint,
                        attempt + 1
                    )))
                }
            }
        }
    }

    fn score_chunk(&self, premise: &str, hypotheses: &[String]) -> Result<Vec<EntailmentScore>, ScorerError> {
        let body = WireRequest {
            model: self.config.model.as_deref(),
            premise,
            hypotheses,
        };
        let url = self.url("/v1/score");
        let response = self.with_retries(|| self.client.post(&url).json(&body).send())?;
        let status = response.status();
        if status != reqwest::StatusCode::OK {
            let detail = response.text().unwrap_or_default();
            return Err(ScorerError::MalformedResponse(format!("status {status}: {}", detail.trim())));
        }
        let parsed: WireResponse = response
            .json()
            .map_err(|e| ScorerError::MalformedResponse(e.to_string()))?;
        if parsed.scores.len() != hypotheses.len() {
            return Err(ScorerError::MalformedResponse(format!(
                "expected {} scores, got {}",
                hypotheses.len(),
                parsed.scores.len()
            )));
        }
        parsed.scores.into_iter().map(EntailmentScore::new).collect()
    }
}

impl EntailmentScorer for RemoteScorer {
    fn score_batch(&self, request: &ScoreRequest) -> Result<Vec<EntailmentScore>, ScorerError> {
        request.validate()?;
        let mut scores = Vec::with_capacity(request.hypotheses.len());
        for chunk in request.hypotheses.chunks(self.config.max_batch) {
            scores.extend(self.score_chunk(&request.premise, chunk)?);
        }
        Ok(scores)
    }
}
