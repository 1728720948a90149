//! Synthetic oracle tables and cascade property checks shared by test targets.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rand::seq::IndexedRandom;
use rand::Rng;
use zsp_core::engine::{classify, Candidate, ClassifierConfig, EventInstance, Mode, Prediction, Rule};
use zsp_core::hypotheses::{instantiate, Form, HypothesisEntry, HypothesisTable};
use zsp_core::ontology::{Quadcode, Rootcode};
use zsp_core::scorer::{cached, OracleScorer, OracleTable};

/// Scores live on a 1/1024 grid so shifted copies compare exactly.
pub const GRID: f64 = 1024.0;
/// Largest generated score in grid units; leaves room for shifts.
pub const MAX_UNITS: u32 = 960;
pub const MAX_SHIFT: u32 = 64;

pub const PENALTIES: [f64; 5] = [0.0, 0.01, 0.02, 0.05, 0.1];
pub const MODES: [Mode; 4] = [Mode::Flat, Mode::L1, Mode::L2, Mode::L3];

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/fixtures").join(name)
}

/// Random score assignment for every form of every entry of a table.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub instance: EventInstance,
    pub units: BTreeMap<(usize, Form), u32>,
}

impl Synthetic {
    pub fn from_units(table: &HypothesisTable, index: usize, past: &[u32], future: &[u32]) -> Synthetic {
        let mut units = BTreeMap::new();
        for (i, entry) in table.entries().iter().enumerate() {
            units.insert((entry.id, Form::Past), past[i % past.len()].min(MAX_UNITS));
            if entry.has_future() {
                units.insert((entry.id, Form::Future), future[i % future.len()].min(MAX_UNITS));
            }
        }
        Synthetic {
            instance: EventInstance::new(&format!("synthetic-{index}"), "Alpha did something to Beta.", "Alpha", "Beta"),
            units,
        }
    }

    /// A few entries score high, the rest low; hot entries (consult rows,
    /// override-tagged rows, conflict rows) are favored and ties are common.
    pub fn generate<R: Rng>(rng: &mut R, table: &HypothesisTable, index: usize) -> Synthetic {
        let hot: Vec<usize> = table
            .entries()
            .iter()
            .filter(|e| {
                e.context_root == Rootcode::Consult
                    || !e.tags.is_empty()
                    || e.context_root == Rootcode::Protest
                    || e.context_quad == Quadcode::VerbalConflict
            })
            .map(|e| e.id)
            .collect();
        let ids: Vec<usize> = table.entries().iter().map(|e| e.id).collect();
        let mut past: Vec<u32> = ids.iter().map(|_| rng.random_range(0..=400)).collect();
        let future: Vec<u32> = ids
            .iter()
            .map(|_| {
                if rng.random_bool(0.3) {
                    rng.random_range(500..=MAX_UNITS)
                } else {
                    rng.random_range(0..=400)
                }
            })
            .collect();
        let n_high = rng.random_range(1..=8);
        let mut highs = Vec::new();
        for _ in 0..n_high {
            let pool = if rng.random_bool(0.6) { &hot } else { &ids };
            let id = *pool.choose(rng).expect("non-empty table");
            let score = rng.random_range(600..=MAX_UNITS);
            past[id - 1] = score;
            highs.push(score);
        }
        if rng.random_bool(0.3) {
            let id = *ids.choose(rng).expect("non-empty table");
            past[id - 1] = *highs.choose(rng).expect("at least one high score");
        }
        Synthetic::from_units(table, index, &past, &future)
    }

    pub fn oracle(&self, table: &HypothesisTable, shift: u32) -> OracleScorer {
        let mut oracle = OracleTable::new(0.0);
        for (&(id, form), &units) in &self.units {
            let Some(entry) = table.get(id) else { continue };
            if !entry.has_future() && form == Form::Future {
                continue;
            }
            let text = instantiate(entry, form, &self.instance.source, &self.instance.target)
                .expect("synthetic forms exist")
                .text;
            oracle.insert(&self.instance.id, &text, f64::from(units + shift) / GRID);
        }
        OracleScorer::new(oracle)
    }
}

/// The shipped table with every future template removed.
pub fn past_only(table: &HypothesisTable) -> HypothesisTable {
    let entries = table
        .entries()
        .iter()
        .map(|e| HypothesisEntry {
            future_template: None,
            ..e.clone()
        })
        .collect();
    HypothesisTable::new(entries).expect("stripping futures keeps the table valid")
}

fn run(table: &HypothesisTable, syn: &Synthetic, scorer: &OracleScorer, config: &ClassifierConfig) -> Prediction {
    classify(&syn.instance, table, scorer, config).expect("synthetic classification succeeds")
}

pub const PROPERTIES: [&str; 7] = [
    "filter soundness",
    "consult monotonicity",
    "override soundness",
    "branch integrity",
    "determinism",
    "shift invariance",
    "mode nesting",
];

/// Violations found for one synthetic table, tagged with the property name.
pub fn check_properties(
    table: &HypothesisTable,
    stripped: &HypothesisTable,
    syn: &Synthetic,
    shift: u32,
) -> Vec<(&'static str, String)> {
    let mut out = Vec::new();
    let oracle = syn.oracle(table, 0);
    let base = ClassifierConfig::default();
    let id = &syn.instance.id;

    // filter soundness
    for config in [
        base.clone(),
        ClassifierConfig { top_k: 1, ..base.clone() },
        ClassifierConfig { top_k: 5, margin: 0.2, ..base.clone() },
        ClassifierConfig { margin: 0.0, ..base.clone() },
    ] {
        let scored: Vec<Candidate> = table
            .entries()
            .iter()
            .map(|e| Candidate::new(e, Form::Past, f64::from(syn.units[&(e.id, Form::Past)]) / GRID, &config))
            .collect();
        let kept = zsp_core::engine::level1_filter(&scored, &config).expect("non-empty input");
        let max = scored.iter().map(|c| c.adjusted_score).fold(f64::NEG_INFINITY, f64::max);
        let best = scored
            .iter()
            .min_by(|a, b| a.rank_cmp(b))
            .expect("non-empty input");
        if kept.is_empty() || kept.len() > config.top_k {
            out.push(("filter soundness", format!("{id}: {} survivors with top_k {}", kept.len(), config.top_k)));
        }
        if !kept.iter().any(|c| c.entry_id == best.entry_id) {
            out.push(("filter soundness", format!("{id}: argmax entry {} dropped", best.entry_id)));
        }
        for c in &kept {
            if !scored.contains(c) {
                out.push(("filter soundness", format!("{id}: survivor {} not in input", c.entry_id)));
            }
            if c.entry_id != best.entry_id && c.adjusted_score <= max - config.margin {
                out.push(("filter soundness", format!("{id}: entry {} below threshold", c.entry_id)));
            }
        }
    }

    // consult monotonicity
    for mode in MODES {
        let roots: Vec<Rootcode> = PENALTIES
            .iter()
            .map(|&c| {
                let config = ClassifierConfig {
                    consult_penalty: c,
                    ..base.clone().with_mode(mode)
                };
                run(table, syn, &oracle, &config).root
            })
            .collect();
        for i in 0..roots.len() {
            for j in i + 1..roots.len() {
                if roots[i] != Rootcode::Consult && roots[j] == Rootcode::Consult {
                    out.push((
                        "consult monotonicity",
                        format!(
                            "{id}: mode {mode} predicts {} at c={} but CONSULT at c={}",
                            roots[i], PENALTIES[i], PENALTIES[j]
                        ),
                    ));
                }
            }
        }
    }

    // override soundness and branch integrity
    let l3 = run(table, syn, &oracle, &base);
    if l3.ranked.is_empty() {
        out.push(("override soundness", format!("{id}: empty pool")));
    }
    let has = |pred: &dyn Fn(&Candidate) -> bool| l3.ranked.iter().any(pred);
    if has(&|c| c.context.quad == Quadcode::MaterialConflict) && has(&|c| c.context.quad == Quadcode::VerbalConflict) {
        out.push(("override soundness", format!("{id}: quad-3 context survives next to quad-4 context")));
    }
    let specific: BTreeSet<usize> = l3.ranked.iter().filter(|c| c.tags.peace_specific).map(|c| c.entry_id).collect();
    if has(&|c| c.tags.peace_general.is_some_and(|g| specific.contains(&g))) {
        out.push(("override soundness", format!("{id}: peace-general entry survives its specific pair")));
    }
    if has(&|c| c.context.root == Rootcode::Protest) && has(&|c| c.tags.blockade_coerce) {
        out.push(("override soundness", format!("{id}: blockade entry survives next to PROTEST")));
    }
    let survivors: BTreeSet<usize> = l3.ranked.iter().map(|c| c.entry_id).collect();
    for c in &l3.eliminated {
        let whole_entry = matches!(c.eliminated_by, Some(Rule::Conflict | Rule::Peace | Rule::Blockade))
            || c.form == Form::Past;
        if whole_entry && survivors.contains(&c.entry_id) {
            out.push((
                "branch integrity",
                format!("{id}: entry {} eliminated by {:?} but a branch survives", c.entry_id, c.eliminated_by),
            ));
        }
    }
    for c in &l3.ranked {
        if c.form == Form::Future && !l3.ranked.iter().chain(&l3.eliminated).any(|p| p.entry_id == c.entry_id && p.form == Form::Past) {
            out.push(("branch integrity", format!("{id}: future branch of {} without its context", c.entry_id)));
        }
    }

    // determinism
    let again = run(table, syn, &oracle, &base);
    let via_cache = classify(&syn.instance, table, &cached(syn.oracle(table, 0)), &base).expect("cached run succeeds");
    if again != l3 || via_cache != l3 {
        out.push(("determinism", format!("{id}: repeated classification differs")));
    }

    // shift invariance
    let shifted = syn.oracle(table, shift);
    for mode in MODES {
        let config = base.clone().with_mode(mode);
        let a = run(table, syn, &oracle, &config);
        let b = run(table, syn, &shifted, &config);
        if a.label() != b.label() {
            out.push((
                "shift invariance",
                format!("{id}: mode {mode} shift {shift}: {} became {}", a.label(), b.label()),
            ));
        }
    }

    // mode nesting
    let plain = base.clone().without_overrides();
    let outputs: Vec<(zsp_core::Label, Vec<(usize, Form)>)> = [Mode::L1, Mode::L2, Mode::L3]
        .into_iter()
        .map(|mode| {
            let p = run(stripped, syn, &oracle, &plain.clone().with_mode(mode));
            (p.label(), p.ranked.iter().map(|c| (c.entry_id, c.form)).collect())
        })
        .collect();
    if outputs[0] != outputs[1] || outputs[1] != outputs[2] {
        out.push(("mode nesting", format!("{id}: L1/L2/L3 disagree on a past-only table")));
    }
    out
}
