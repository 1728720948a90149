use std::collections::BTreeSet;

use super::{sort_ranked, Candidate, ClassifierConfig, EngineError, EventInstance, Override, Rule};
use crate::hypotheses::{Form, HypothesisTable};
use crate::ontology::{Quadcode, Rootcode};
use crate::scorer::EntailmentScorer;

/// Entity-specific rules fire before the quad-level conflict rule.
pub(crate) const OVERRIDE_ORDER: [Override; 3] = [Override::Peace, Override::Blockade, Override::Conflict];

/// Level-1 outcome with the dropped candidates tagged by the rule that cut them.
#[derive(Debug, Clone, PartialEq)]
pub struct Level1Split {
    pub kept: Vec<Candidate>,
    pub dropped: Vec<Candidate>,
}

pub(crate) fn split_level1(mut scored: Vec<Candidate>, config: &ClassifierConfig) -> Result<Level1Split, EngineError> {
    if scored.is_empty() {
        return Err(EngineError::EmptyInput);
    }
    sort_ranked(&mut scored);
    let threshold = scored[0].adjusted_score - config.margin;
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for (rank, mut candidate) in scored.into_iter().enumerate() {
        let rule = if rank > 0 && candidate.adjusted_score <= threshold {
            Some(Rule::Margin)
        } else if kept.len() >= config.top_k {
            Some(Rule::TopK)
        } else {
            None
        };
        match rule {
            None => kept.push(candidate),
            Some(rule) => {
                candidate.eliminated_by = Some(rule);
                dropped.push(candidate);
            }
        }
    }
    Ok(Level1Split { kept, dropped })
}

/// Keeps candidates scoring strictly above `max - margin`, at most `top_k`
/// of them, best first. The best candidate always survives.
pub fn level1_filter(scored: &[Candidate], config: &ClassifierConfig) -> Result<Vec<Candidate>, EngineError> {
    split_level1(scored.to_vec(), config).map(|split| split.kept)
}

/// Adds the future-form branch of every surviving past-form candidate whose
/// entry has one. All new hypotheses go to the scorer in a single request;
/// nothing is queried when no survivor has a future form.
pub fn level2_expand(
    survivors: Vec<Candidate>,
    instance: &EventInstance,
    table: &HypothesisTable,
    scorer: &dyn EntailmentScorer,
    config: &ClassifierConfig,
) -> Result<Vec<Candidate>, EngineError> {
    let expanded: BTreeSet<usize> = survivors
        .iter()
        .filter(|c| c.form == Form::Future)
        .map(|c| c.entry_id)
        .collect();
    let mut seen = BTreeSet::new();
    let forms: Vec<(usize, Form)> = survivors
        .iter()
        .filter(|c| c.form == Form::Past && !expanded.contains(&c.entry_id))
        .filter(|c| table.get(c.entry_id).is_some_and(|e| e.has_future()))
        .filter(|c| seen.insert(c.entry_id))
        .map(|c| (c.entry_id, Form::Future))
        .collect();
    let branches = super::score_forms(instance, table, scorer, config, &forms)?;
    let mut pool = survivors;
    pool.extend(branches);
    Ok(pool)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Disambiguation {
    pub survivors: Vec<Candidate>,
    /// Removed candidates, `eliminated_by` set, in removal order.
    pub eliminated: Vec<Candidate>,
    /// Rules that would have emptied the pool, with the candidates they spared.
    pub skipped: Vec<(Rule, Vec<Candidate>)>,
}

/// Applies the enabled override rules in order peace, blockade, conflict.
///
/// Rules act on whole entries: eliminating a context candidate removes its
/// future branch as well. A rule that would leave nothing is skipped.
pub fn level3_disambiguate(pool: Vec<Candidate>, config: &ClassifierConfig) -> Disambiguation {
    let mut survivors = pool;
    let mut eliminated = Vec::new();
    let mut skipped = Vec::new();

    for rule in OVERRIDE_ORDER {
        if !config.overrides.contains(&rule) {
            continue;
        }
        let victims = victim_entries(rule, &survivors);
        if victims.is_empty() {
            continue;
        }
        let (out, keep): (Vec<_>, Vec<_>) = survivors.into_iter().partition(|c| victims.contains(&c.entry_id));
        if keep.is_empty() {
            skipped.push((rule.rule(), out.clone()));
            survivors = out;
            continue;
        }
        survivors = keep;
        eliminated.extend(out.into_iter().map(|mut c| {
            c.eliminated_by = Some(rule.rule());
            c
        }));
    }
    Disambiguation {
        survivors,
        eliminated,
        skipped,
    }
}

fn victim_entries(rule: Override, pool: &[Candidate]) -> BTreeSet<usize> {
    match rule {
        Override::Peace => {
            let specific: BTreeSet<usize> = pool
                .iter()
                .filter(|c| c.tags.peace_specific)
                .map(|c| c.entry_id)
                .collect();
            pool.iter()
                .filter(|c| c.tags.peace_general.is_some_and(|id| specific.contains(&id)))
                .map(|c| c.entry_id)
                .collect()
        }
        Override::Blockade => {
            if !pool.iter().any(|c| c.context.root == Rootcode::Protest) {
                return BTreeSet::new();
            }
            pool.iter()
                .filter(|c| c.tags.blockade_coerce)
                .map(|c| c.entry_id)
                .collect()
        }
        Override::Conflict => {
            if !pool.iter().any(|c| c.context.quad == Quadcode::MaterialConflict) {
                return BTreeSet::new();
            }
            pool.iter()
                .filter(|c| c.context.quad == Quadcode::VerbalConflict)
                .map(|c| c.entry_id)
                .collect()
        }
    }
}
