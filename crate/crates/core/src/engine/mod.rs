//! Tree-query cascade.
//!
//! Level 1 scores the past-tense hypothesis of every table entry and keeps
//! the few whose (penalized) scores sit close to the best one. Level 2 adds
//! the future-tense branch of each survivor, labeled through the modality
//! map. Level 3 applies the override rules and the final argmax picks the
//! label. A flat mode scores every form at once and skips all three levels.

mod levels;
mod trace;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hypotheses::{instantiate, EntryTags, Form, HypothesisEntry, HypothesisTable, InstantiateError};
use crate::ontology::{BinaryClass, Label, Quadcode, Rootcode};
use crate::scorer::{EntailmentScorer, ScoreRequest, ScorerError};

pub use levels::{level1_filter, level2_expand, level3_disambiguate, Disambiguation, Level1Split};
pub use trace::{TraceAction, TraceRecord};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("hypothesis table is empty")]
    EmptyTable,
    #[error("no candidates to filter")]
    EmptyInput,
    #[error("invalid classifier config: {0}")]
    InvalidConfig(String),
    #[error("invalid event instance `{id}`: {reason}")]
    InvalidInstance { id: String, reason: String },
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error(transparent)]
    Instantiate(#[from] InstantiateError),
}

/// Gold annotation of an instance; any level may be missing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldLabels {
    pub root: Option<Rootcode>,
    pub quad: Option<Quadcode>,
    pub binary: Option<BinaryClass>,
}

/// A premise sentence with its source and target mentions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventInstance {
    pub id: String,
    pub text: String,
    pub source: String,
    pub target: String,
    #[serde(default)]
    pub gold: GoldLabels,
}

impl EventInstance {
    pub fn new(id: &str, text: &str, source: &str, target: &str) -> EventInstance {
        EventInstance {
            id: id.to_string(),
            text: text.to_string(),
            source: source.to_string(),
            target: target.to_string(),
            gold: GoldLabels::default(),
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        for (field, value) in [("text", &self.text), ("source", &self.source), ("target", &self.target)] {
            if value.trim().is_empty() {
                return Err(EngineError::InvalidInstance {
                    id: self.id.clone(),
                    reason: format!("empty {field}"),
                });
            }
        }
        Ok(())
    }
}

/// Cascade depth, or the flat single-pass baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mode {
    L1,
    L2,
    L3,
    Flat,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::L1 => "l1",
            Mode::L2 => "l2",
            Mode::L3 => "l3",
            Mode::Flat => "flat",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "l1" => Ok(Mode::L1),
            "l2" => Ok(Mode::L2),
            "l3" => Ok(Mode::L3),
            "flat" => Ok(Mode::Flat),
            other => Err(format!("unknown mode `{other}` (expected l1, l2, l3 or flat)")),
        }
    }
}

/// Disambiguation rules applied at level 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Override {
    Conflict,
    Peace,
    Blockade,
}

impl Override {
    pub const ALL: [Override; 3] = [Override::Conflict, Override::Peace, Override::Blockade];

    pub fn rule(self) -> Rule {
        match self {
            Override::Conflict => Rule::Conflict,
            Override::Peace => Rule::Peace,
            Override::Blockade => Rule::Blockade,
        }
    }
}

impl FromStr for Override {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "conflict" => Ok(Override::Conflict),
            "peace" => Ok(Override::Peace),
            "blockade" => Ok(Override::Blockade),
            other => Err(format!("unknown override `{other}` (expected conflict, peace or blockade)")),
        }
    }
}

/// Why a candidate left the pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Margin,
    TopK,
    Conflict,
    Peace,
    Blockade,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Margin => "margin",
            Rule::TopK => "top_k",
            Rule::Conflict => "conflict",
            Rule::Peace => "peace",
            Rule::Blockade => "blockade",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub top_k: usize,
    pub margin: f64,
    pub consult_penalty: f64,
    pub mode: Mode,
    pub overrides: BTreeSet<Override>,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            top_k: 3,
            margin: 0.1,
            consult_penalty: 0.02,
            mode: Mode::L3,
            overrides: Override::ALL.into_iter().collect(),
        }
    }
}

impl ClassifierConfig {
    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn without_penalty(mut self) -> Self {
        self.consult_penalty = 0.0;
        self
    }

    pub fn without_overrides(mut self) -> Self {
        self.overrides.clear();
        self
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.top_k == 0 {
            return Err(EngineError::InvalidConfig("top_k must be positive".into()));
        }
        if !(self.margin.is_finite() && self.margin >= 0.0) {
            return Err(EngineError::InvalidConfig(format!("margin must be >= 0, got {}", self.margin)));
        }
        if !(self.consult_penalty.is_finite() && self.consult_penalty >= 0.0) {
            return Err(EngineError::InvalidConfig(format!(
                "consult penalty must be >= 0, got {}",
                self.consult_penalty
            )));
        }
        Ok(())
    }

    pub fn penalize(&self, label: Label, raw: f64) -> f64 {
        if label.root == Rootcode::Consult {
            raw - self.consult_penalty
        } else {
            raw
        }
    }
}

/// One scored `(entry, form)` pair moving through the cascade.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub entry_id: usize,
    pub form: Form,
    /// Label this form realizes.
    pub label: Label,
    /// Label of the entry's past form.
    pub context: Label,
    pub tags: EntryTags,
    pub raw_score: f64,
    /// Raw score minus the consult penalty for CONSULT labels; may be negative.
    pub adjusted_score: f64,
    pub eliminated_by: Option<Rule>,
}

impl Candidate {
    pub fn new(entry: &HypothesisEntry, form: Form, raw_score: f64, config: &ClassifierConfig) -> Candidate {
        let label = entry.label(form);
        Candidate {
            entry_id: entry.id,
            form,
            label,
            context: entry.context_label(),
            tags: entry.tags,
            raw_score,
            adjusted_score: config.penalize(label, raw_score),
            eliminated_by: None,
        }
    }

    /// Descending score, then ascending entry id, then past before future.
    pub fn rank_cmp(&self, other: &Candidate) -> std::cmp::Ordering {
        other
            .adjusted_score
            .total_cmp(&self.adjusted_score)
            .then(self.entry_id.cmp(&other.entry_id))
            .then(self.form.cmp(&other.form))
    }
}

pub(crate) fn sort_ranked(candidates: &mut [Candidate]) {
    candidates.sort_by(Candidate::rank_cmp);
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub instance_id: String,
    pub root: Rootcode,
    pub quad: Quadcode,
    pub binary: BinaryClass,
    /// Surviving candidates, best first.
    pub ranked: Vec<Candidate>,
    /// Candidates removed along the way, with the rule that removed them.
    pub eliminated: Vec<Candidate>,
    pub trace: Vec<TraceRecord>,
}

impl Prediction {
    pub fn label(&self) -> Label {
        Label {
            root: self.root,
            quad: self.quad,
        }
    }

    pub fn top(&self) -> &Candidate {
        &self.ranked[0]
    }

    pub fn trace_lines(&self) -> Vec<String> {
        self.trace.iter().map(ToString::to_string).collect()
    }

    fn from_ranked(
        instance: &EventInstance,
        mut ranked: Vec<Candidate>,
        eliminated: Vec<Candidate>,
        mut trace: Vec<TraceRecord>,
        level: u8,
    ) -> Prediction {
        sort_ranked(&mut ranked);
        let top = &ranked[0];
        trace.push(TraceRecord::new(level, TraceAction::Select, top, None));
        Prediction {
            instance_id: instance.id.clone(),
            root: top.label.root,
            quad: top.label.quad,
            binary: top.label.binary(),
            ranked,
            eliminated,
            trace,
        }
    }
}

fn score_forms(
    instance: &EventInstance,
    table: &HypothesisTable,
    scorer: &dyn EntailmentScorer,
    config: &ClassifierConfig,
    forms: &[(usize, Form)],
) -> Result<Vec<Candidate>, EngineError> {
    if forms.is_empty() {
        return Ok(Vec::new());
    }
    let entries: Vec<&HypothesisEntry> = forms
        .iter()
        .map(|(id, _)| table.get(*id).expect("entry ids come from the table"))
        .collect();
    let hypotheses = entries
        .iter()
        .zip(forms)
        .map(|(entry, (_, form))| instantiate(entry, *form, &instance.source, &instance.target).map(|h| h.text))
        .collect::<Result<Vec<_>, _>>()?;
    let request = ScoreRequest::new(instance.text.clone(), hypotheses).with_id(instance.id.clone());
    let scores = scorer.score_batch(&request)?;
    if scores.len() != forms.len() {
        return Err(ScorerError::MalformedResponse(format!(
            "expected {} scores, got {}",
            forms.len(),
            scores.len()
        ))
        .into());
    }
    Ok(entries
        .iter()
        .zip(forms)
        .zip(scores)
        .map(|((entry, (_, form)), score)| Candidate::new(entry, *form, score.value(), config))
        .collect())
}

/// Runs the cascade up to the depth selected by `config.mode`.
pub fn classify(
    instance: &EventInstance,
    table: &HypothesisTable,
    scorer: &dyn EntailmentScorer,
    config: &ClassifierConfig,
) -> Result<Prediction, EngineError> {
    if config.mode == Mode::Flat {
        return flat_classify(instance, table, scorer, config);
    }
    config.validate()?;
    instance.validate()?;
    if table.is_empty() {
        return Err(EngineError::EmptyTable);
    }

    let past_forms: Vec<_> = table.entries().iter().map(|e| (e.id, Form::Past)).collect();
    let scored = score_forms(instance, table, scorer, config, &past_forms)?;

    let mut trace = Vec::new();
    let Level1Split { kept, dropped } = levels::split_level1(scored, config)?;
    trace.extend(kept.iter().map(|c| TraceRecord::new(1, TraceAction::Keep, c, None)));
    trace.extend(dropped.iter().map(|c| TraceRecord::new(1, TraceAction::Drop, c, c.eliminated_by)));
    let mut eliminated = dropped;

    if config.mode == Mode::L1 {
        return Ok(Prediction::from_ranked(instance, kept, eliminated, trace, 1));
    }

    let survivors = kept.len();
    let pool = level2_expand(kept, instance, table, scorer, config)?;
    trace.extend(pool[survivors..].iter().map(|c| TraceRecord::new(2, TraceAction::Expand, c, None)));

    if config.mode == Mode::L2 {
        return Ok(Prediction::from_ranked(instance, pool, eliminated, trace, 2));
    }

    let Disambiguation { survivors, eliminated: removed, skipped } = level3_disambiguate(pool, config);
    for rule in levels::OVERRIDE_ORDER.map(Override::rule) {
        trace.extend(
            removed
                .iter()
                .filter(|c| c.eliminated_by == Some(rule))
                .map(|c| TraceRecord::new(3, TraceAction::Eliminate, c, Some(rule))),
        );
        for (_, candidates) in skipped.iter().filter(|(r, _)| *r == rule) {
            trace.extend(candidates.iter().map(|c| TraceRecord::new(3, TraceAction::Skip, c, Some(rule))));
        }
    }
    eliminated.extend(removed);
    Ok(Prediction::from_ranked(instance, survivors, eliminated, trace, 3))
}

/// Scores every form of every entry in one pass and returns the argmax.
pub fn flat_classify(
    instance: &EventInstance,
    table: &HypothesisTable,
    scorer: &dyn EntailmentScorer,
    config: &ClassifierConfig,
) -> Result<Prediction, EngineError> {
    config.validate()?;
    instance.validate()?;
    if table.is_empty() {
        return Err(EngineError::EmptyTable);
    }
    let forms: Vec<_> = table
        .entries()
        .iter()
        .flat_map(|e| {
            let future = e.has_future().then_some((e.id, Form::Future));
            std::iter::once((e.id, Form::Past)).chain(future)
        })
        .collect();
    let scored = score_forms(instance, table, scorer, config, &forms)?;
    let trace = scored
        .iter()
        .map(|c| TraceRecord::new(1, TraceAction::Keep, c, None))
        .collect();
    Ok(Prediction::from_ranked(instance, scored, Vec::new(), trace, 1))
}

/// Binds a table, a scorer and a config for repeated classification.
pub struct Classifier<'a> {
    pub table: &'a HypothesisTable,
    pub scorer: &'a dyn EntailmentScorer,
    pub config: ClassifierConfig,
}

impl<'a> Classifier<'a> {
    pub fn new(table: &'a HypothesisTable, scorer: &'a dyn EntailmentScorer, config: ClassifierConfig) -> Self {
        Classifier { table, scorer, config }
    }

    pub fn classify(&self, instance: &EventInstance) -> Result<Prediction, EngineError> {
        classify(instance, self.table, self.scorer, &self.config)
    }

    /// Classifies every instance, using up to `jobs` worker threads. Results
    /// keep the input order.
    pub fn classify_all(&self, instances: &[EventInstance], jobs: usize) -> Vec<Result<Prediction, EngineError>> {
        use rayon::prelude::*;
        if jobs <= 1 {
            return instances.iter().map(|i| self.classify(i)).collect();
        }
        match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            Ok(pool) => pool.install(|| instances.par_iter().map(|i| self.classify(i)).collect()),
            Err(_) => instances.iter().map(|i| self.classify(i)).collect(),
        }
    }
}
