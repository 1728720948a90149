use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::RwLock;

use super::{EntailmentScore, EntailmentScorer, ScoreRequest, ScorerError};

type CacheKey = (Option<String>, String, String);

/// Memoizes scores per `(premise id, premise, hypothesis)`.
///
/// Only hypotheses missing from the cache are forwarded, in one request.
/// Failed requests leave the cache untouched.
pub struct CachedScorer<S> {
    inner: S,
    cache: RwLock<HashMap<CacheKey, EntailmentScore>>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl<S: EntailmentScorer> CachedScorer<S> {
    pub fn new(inner: S) -> CachedScorer<S> {
        CachedScorer {
            inner,
            cache: RwLock::new(HashMap::new()),
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
        }
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.cache.read().expect("score cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn key(request: &ScoreRequest, hypothesis: &str) -> CacheKey {
        (request.premise_id.clone(), request.premise.clone(), hypothesis.to_string())
    }
}

impl<S: EntailmentScorer> EntailmentScorer for CachedScorer<S> {
    fn score_batch(&self, request: &ScoreRequest) -> Result<Vec<EntailmentScore>, ScorerError> {
        request.validate()?;
        let mut scores: Vec<Option<EntailmentScore>> = {
            let cache = self.cache.read().expect("score cache poisoned");
            request
                .hypotheses
                .iter()
                .map(|h| cache.get(&Self::key(request, h)).copied())
                .collect()
        };

        // Deduplicate misses so a repeated hypothesis is only queried once.
        let mut missing: Vec<String> = Vec::new();
        for (h, s) in request.hypotheses.iter().zip(&scores) {
            if s.is_none() && !missing.contains(h) {
                missing.push(h.clone());
            }
        }
        let hit_count = scores.iter().filter(|s| s.is_some()).count();
        self.hits.fetch_add(hit_count, Ordering::Relaxed);

        if !missing.is_empty() {
            let sub = ScoreRequest {
                premise_id: request.premise_id.clone(),
                premise: request.premise.clone(),
                hypotheses: missing,
            };
            let fresh = self.inner.score_batch(&sub)?;
            if fresh.len() != sub.hypotheses.len() {
                return Err(ScorerError::MalformedResponse(format!(
                    "backend returned {} scores for {} hypotheses",
                    fresh.len(),
                    sub.hypotheses.len()
                )));
            }
            self.misses.fetch_add(sub.hypotheses.len(), Ordering::Relaxed);
            let mut cache = self.cache.write().expect("score cache poisoned");
            for (h, score) in sub.hypotheses.iter().zip(&fresh) {
                cache.insert(Self::key(request, h), *score);
            }
            for (h, slot) in request.hypotheses.iter().zip(scores.iter_mut()) {
                if slot.is_none() {
                    *slot = cache.get(&Self::key(request, h)).copied();
                }
            }
        }
        Ok(scores.into_iter().map(|s| s.expect("every hypothesis scored")).collect())
    }
}
