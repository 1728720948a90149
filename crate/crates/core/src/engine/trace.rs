use std::fmt;

use serde::Serialize;

use super::{Candidate, Rule};
use crate::hypotheses::Form;
use crate::ontology::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TraceAction {
    /// Candidate passed the context filter.
    Keep,
    /// Candidate removed by the context filter.
    Drop,
    /// Future branch added for a surviving candidate.
    Expand,
    /// Candidate removed by a disambiguation rule.
    Eliminate,
    /// Rule would have emptied the pool; candidate kept.
    Skip,
    /// Final decision.
    Select,
}

impl TraceAction {
    pub fn name(self) -> &'static str {
        match self {
            TraceAction::Keep => "KEEP",
            TraceAction::Drop => "DROP",
            TraceAction::Expand => "EXPAND",
            TraceAction::Eliminate => "ELIMINATE",
            TraceAction::Skip => "SKIP",
            TraceAction::Select => "SELECT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub level: u8,
    pub action: TraceAction,
    pub entry_id: usize,
    pub form: Form,
    pub label: Label,
    pub raw_score: f64,
    pub adjusted_score: f64,
    pub rule: Option<Rule>,
}

impl TraceRecord {
    pub fn new(level: u8, action: TraceAction, candidate: &Candidate, rule: Option<Rule>) -> TraceRecord {
        TraceRecord {
            level,
            action,
            entry_id: candidate.entry_id,
            form: candidate.form,
            label: candidate.label,
            raw_score: candidate.raw_score,
            adjusted_score: candidate.adjusted_score,
            rule,
        }
    }
}

/// `LEVEL<k> <ACTION> entry=<id> form=<P|F> label=<ROOT> <quad> score=<raw>/<adj> [rule=<name>]`
impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "LEVEL{} {} entry={} form={} label={} score={:.4}/{:.4}",
            self.level,
            self.action.name(),
            self.entry_id,
            self.form,
            self.label,
            self.raw_score,
            self.adjusted_score
        )?;
        if let Some(rule) = self.rule {
            write!(f, " rule={}", rule.name())?;
        }
        Ok(())
    }
}
