//! Modality-aware hypothesis tables.
//!
//! A table row pairs a context label with a past-tense template and an
//! optional future-tense template. Templates carry exactly one `<S>` and one
//! `<T>` placeholder, filled with the source and target mentions at query time.

use std::fmt;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ontology::{modality_map, Label, Modality, OntologyError, Quadcode, Rootcode};

pub const SOURCE_PLACEHOLDER: &str = "<S>";
pub const TARGET_PLACEHOLDER: &str = "<T>";

const SHIPPED_TABLE: &str = include_str!("../data/hypotheses.tsv");

/// Which template of an entry is being queried.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Form {
    #[serde(rename = "P")]
    Past,
    #[serde(rename = "F")]
    Future,
}

impl Form {
    pub fn modality(self) -> Modality {
        match self {
            Form::Past => Modality::Past,
            Form::Future => Modality::Future,
        }
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.modality().abbrev())
    }
}

/// Override annotations attached to a table row.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntryTags {
    /// Row mentions peace forces and wins over its general counterpart.
    pub peace_specific: bool,
    /// Row mentions forces in general; loses to the referenced peace-specific row.
    pub peace_general: Option<usize>,
    /// Row is the COERCE blockade hypothesis dropped when PROTEST is in play.
    pub blockade_coerce: bool,
}

impl EntryTags {
    pub fn is_empty(&self) -> bool {
        *self == EntryTags::default()
    }

    fn parse(field: &str) -> Result<EntryTags, RowErrorKind> {
        let mut tags = EntryTags::default();
        for token in field.split(';').map(str::trim).filter(|t| !t.is_empty()) {
            let lower = token.to_ascii_lowercase();
            if lower == "peace_specific" {
                tags.peace_specific = true;
            } else if lower == "blockade_coerce" {
                tags.blockade_coerce = true;
            } else if let Some(id) = lower.strip_prefix("peace_general=") {
                let id = id
                    .trim()
                    .parse()
                    .map_err(|_| RowErrorKind::BadTag(token.to_string()))?;
                tags.peace_general = Some(id);
            } else {
                return Err(RowErrorKind::BadTag(token.to_string()));
            }
        }
        Ok(tags)
    }
}

impl fmt::Display for EntryTags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut tokens = Vec::new();
        if self.peace_specific {
            tokens.push("peace_specific".to_string());
        }
        if let Some(id) = self.peace_general {
            tokens.push(format!("peace_general={id}"));
        }
        if self.blockade_coerce {
            tokens.push("blockade_coerce".to_string());
        }
        f.write_str(&tokens.join(";"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisEntry {
    pub id: usize,
    pub context_root: Rootcode,
    pub context_quad: Quadcode,
    pub past_template: String,
    pub future_template: Option<String>,
    pub tags: EntryTags,
}

impl HypothesisEntry {
    /// Unnumbered entry; the id is assigned when the entry joins a table.
    pub fn new(root: Rootcode, past: &str, future: Option<&str>) -> HypothesisEntry {
        HypothesisEntry {
            id: 0,
            context_root: root,
            context_quad: root.base_quad(),
            past_template: past.to_string(),
            future_template: future.map(str::to_string),
            tags: EntryTags::default(),
        }
    }

    pub fn with_tags(mut self, tags: EntryTags) -> HypothesisEntry {
        self.tags = tags;
        self
    }

    pub fn context_label(&self) -> Label {
        Label {
            root: self.context_root,
            quad: self.context_quad,
        }
    }

    pub fn has_future(&self) -> bool {
        self.future_template.is_some()
    }

    /// Label realized by the given form of this entry.
    pub fn label(&self, form: Form) -> Label {
        match form {
            Form::Past => self.context_label(),
            Form::Future => modality_map(self.context_root, Modality::Future),
        }
    }

    pub fn template(&self, form: Form) -> Option<&str> {
        match form {
            Form::Past => Some(&self.past_template),
            Form::Future => self.future_template.as_deref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstantiatedHypothesis {
    pub entry_id: usize,
    pub form: Form,
    pub text: String,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstantiateError {
    #[error("entry {0} has no future form")]
    NoFutureForm(usize),
    #[error("source and target mentions must be non-empty")]
    EmptyMention,
}

/// Fills an entry's template with the source and target mentions.
pub fn instantiate(
    entry: &HypothesisEntry,
    form: Form,
    source: &str,
    target: &str,
) -> Result<InstantiatedHypothesis, InstantiateError> {
    if source.trim().is_empty() || target.trim().is_empty() {
        return Err(InstantiateError::EmptyMention);
    }
    let template = entry
        .template(form)
        .ok_or(InstantiateError::NoFutureForm(entry.id))?;
    // Substitute in a single left-to-right pass so mentions that themselves
    // contain "<S>" or "<T>" are never re-expanded.
    let mut text = String::with_capacity(template.len() + source.len() + target.len());
    let mut rest = template;
    while let Some(pos) = rest.find('<') {
        text.push_str(&rest[..pos]);
        let tail = &rest[pos..];
        if let Some(after) = tail.strip_prefix(SOURCE_PLACEHOLDER) {
            text.push_str(source);
            rest = after;
        } else if let Some(after) = tail.strip_prefix(TARGET_PLACEHOLDER) {
            text.push_str(target);
            rest = after;
        } else {
            text.push('<');
            rest = &tail[1..];
        }
    }
    text.push_str(rest);
    Ok(InstantiatedHypothesis {
        entry_id: entry.id,
        form,
        text,
        label: entry.label(form),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RowErrorKind {
    #[error("{column} template must contain {placeholder} exactly once")]
    MissingPlaceholder {
        column: &'static str,
        placeholder: &'static str,
    },
    #[error("declared quad {declared} does not match {root} (expected {expected})")]
    LabelMismatch {
        root: Rootcode,
        declared: Quadcode,
        expected: Quadcode,
    },
    #[error("{0}")]
    UnknownLabel(OntologyError),
    #[error("peace_general={0} does not reference a peace_specific entry")]
    DanglingOverridePair(usize),
    #[error("unrecognized tag `{0}`")]
    BadTag(String),
    #[error("missing {0} column value")]
    MissingField(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct RowError {
    /// 1-based line in the source file (header is line 1).
    pub line: u64,
    /// Entry id the row would have received.
    pub entry_id: usize,
    pub kind: RowErrorKind,
}

#[derive(Debug, Error)]
pub enum TableError {
    #[error("cannot read hypothesis table {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed hypothesis table: {0}")]
    Csv(#[from] csv::Error),
    #[error("hypothesis table header lacks required column `{0}`")]
    MissingColumn(&'static str),
    #[error("hypothesis table has no entries")]
    Empty,
    #[error("{} invalid row(s):\n{}", .0.len(), format_rows(.0))]
    Invalid(Vec<RowError>),
}

fn format_rows(rows: &[RowError]) -> String {
    rows.iter()
        .map(|r| format!("  {r}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl TableError {
    pub fn row_errors(&self) -> &[RowError] {
        match self {
            TableError::Invalid(rows) => rows,
            _ => &[],
        }
    }
}

/// Validated, immutable list of hypothesis entries with dense ids `1..=len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HypothesisTable {
    entries: Vec<HypothesisEntry>,
}

impl HypothesisTable {
    /// Numbers the entries in order and validates them.
    pub fn new(entries: Vec<HypothesisEntry>) -> Result<HypothesisTable, TableError> {
        let entries: Vec<_> = entries
            .into_iter()
            .enumerate()
            .map(|(i, mut e)| {
                e.id = i + 1;
                e
            })
            .collect();
        let mut errors = Vec::new();
        for entry in &entries {
            let line = entry.id as u64 + 1;
            for kind in check_entry(entry) {
                errors.push(RowError { line, entry_id: entry.id, kind });
            }
        }
        errors.extend(check_pairs(&entries, |id| id as u64 + 1));
        finish(entries, errors)
    }

    /// The hypothesis table bundled with the crate.
    pub fn shipped() -> HypothesisTable {
        HypothesisTable::parse_str(SHIPPED_TABLE).expect("bundled hypothesis table is valid")
    }

    pub fn shipped_source() -> &'static str {
        SHIPPED_TABLE
    }

    pub fn load(path: impl AsRef<Path>) -> Result<HypothesisTable, TableError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| TableError::Io {
            path: path.display().to_string(),
            source,
        })?;
        HypothesisTable::parse_str(&text)
    }

    pub fn from_reader<R: Read>(mut reader: R) -> Result<HypothesisTable, TableError> {
        let mut text = String::new();
        reader.read_to_string(&mut text).map_err(|source| TableError::Io {
            path: "<stream>".to_string(),
            source,
        })?;
        HypothesisTable::parse_str(&text)
    }

    /// Parses tab- or comma-separated text with a `Root, Quad, Past, Future[, Tags]`
    /// header. The delimiter is tab when the header line contains one.
    pub fn parse_str(text: &str) -> Result<HypothesisTable, TableError> {
        let header_line = text
            .lines()
            .find(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
            .ok_or(TableError::Empty)?;
        let delimiter = if header_line.contains('\t') { b'\t' } else { b',' };
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .flexible(true)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .quoting(delimiter == b',')
            .from_reader(text.as_bytes());

        let headers = reader.headers()?.clone();
        let column = |name: &'static str| {
            headers
                .iter()
                .position(|h| h.eq_ignore_ascii_case(name))
                .ok_or(TableError::MissingColumn(name))
        };
        let root_col = column("Root")?;
        let quad_col = column("Quad")?;
        let past_col = column("Past")?;
        let future_col = column("Future")?;
        let tags_col = column("Tags").ok();

        let mut entries = Vec::new();
        let mut lines = Vec::new();
        let mut errors = Vec::new();
        for record in reader.records() {
            let record = record?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let entry_id = entries.len() + 1;
            let field = |col: usize| record.get(col).unwrap_or("").trim();
            let mut row_errors = Vec::new();

            let root = match crate::ontology::normalize_alias(field(root_col)) {
                Ok(root) => Some(root),
                Err(e) => {
                    row_errors.push(RowErrorKind::UnknownLabel(e));
                    None
                }
            };
            let declared = match field(quad_col).parse::<Quadcode>() {
                Ok(q) => Some(q),
                Err(e) => {
                    row_errors.push(RowErrorKind::UnknownLabel(e));
                    None
                }
            };
            let past = field(past_col);
            if past.is_empty() {
                row_errors.push(RowErrorKind::MissingField("Past"));
            }
            let future = match field(future_col) {
                "" => None,
                f if f.eq_ignore_ascii_case("none") => None,
                f => Some(f.to_string()),
            };
            let tags = match tags_col.map(field) {
                Some(t) => EntryTags::parse(t).unwrap_or_else(|kind| {
                    row_errors.push(kind);
                    EntryTags::default()
                }),
                None => EntryTags::default(),
            };

            let entry = HypothesisEntry {
                id: entry_id,
                context_root: root.unwrap_or(Rootcode::Agree),
                context_quad: declared.or(root.map(Rootcode::base_quad)).unwrap_or(Quadcode::VerbalCooperation),
                past_template: past.to_string(),
                future_template: future,
                tags,
            };
            if root.is_some() && declared.is_some() {
                row_errors.extend(check_entry(&entry));
            } else if !past.is_empty() {
                row_errors.extend(
                    check_templates(&entry)
                        .into_iter()
                        .filter(|k| matches!(k, RowErrorKind::MissingPlaceholder { .. })),
                );
            }
            errors.extend(row_errors.into_iter().map(|kind| RowError { line, entry_id, kind }));
            lines.push(line);
            entries.push(entry);
        }
        errors.extend(check_pairs(&entries, |id| lines[id - 1]));
        finish(entries, errors)
    }

    pub fn entries(&self) -> &[HypothesisEntry] {
        &self.entries
    }

    pub fn get(&self, id: usize) -> Option<&HypothesisEntry> {
        id.checked_sub(1).and_then(|i| self.entries.get(i))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn past_count(&self) -> usize {
        self.entries.len()
    }

    pub fn future_count(&self) -> usize {
        self.entries.iter().filter(|e| e.has_future()).count()
    }

    /// Per-root `(past, future)` template counts, in rootcode order.
    pub fn coverage(&self) -> Vec<(Rootcode, usize, usize)> {
        Rootcode::ALL
            .iter()
            .map(|&root| {
                let rows = self.entries.iter().filter(|e| e.context_root == root);
                let (past, future) = rows.fold((0, 0), |(p, f), e| (p + 1, f + e.has_future() as usize));
                (root, past, future)
            })
            .collect()
    }

    /// `(general, specific)` id pairs of the peace override.
    pub fn peace_pairs(&self) -> Vec<(usize, usize)> {
        self.entries
            .iter()
            .filter_map(|e| e.tags.peace_general.map(|specific| (e.id, specific)))
            .collect()
    }

    /// Serializes to the tab-separated file format.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("Root\tQuad\tPast\tFuture\tTags\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                e.context_root,
                e.context_quad.short_name(),
                e.past_template,
                e.future_template.as_deref().unwrap_or("None"),
                e.tags
            ));
        }
        out
    }
}

fn finish(entries: Vec<HypothesisEntry>, mut errors: Vec<RowError>) -> Result<HypothesisTable, TableError> {
    if !errors.is_empty() {
        errors.sort_by_key(|e| e.line);
        return Err(TableError::Invalid(errors));
    }
    if entries.is_empty() {
        return Err(TableError::Empty);
    }
    Ok(HypothesisTable { entries })
}

fn check_entry(entry: &HypothesisEntry) -> Vec<RowErrorKind> {
    let mut errors = Vec::new();
    let expected = entry.context_root.base_quad();
    if entry.context_quad != expected {
        errors.push(RowErrorKind::LabelMismatch {
            root: entry.context_root,
            declared: entry.context_quad,
            expected,
        });
    }
    errors.extend(check_templates(entry));
    errors
}

fn check_templates(entry: &HypothesisEntry) -> Vec<RowErrorKind> {
    let mut errors = Vec::new();
    let mut templates = vec![("Past", entry.past_template.as_str())];
    if let Some(future) = &entry.future_template {
        templates.push(("Future", future.as_str()));
    }
    for (column, template) in templates {
        for placeholder in [SOURCE_PLACEHOLDER, TARGET_PLACEHOLDER] {
            if template.matches(placeholder).count() != 1 {
                errors.push(RowErrorKind::MissingPlaceholder { column, placeholder });
            }
        }
    }
    errors
}

fn check_pairs(entries: &[HypothesisEntry], line_of: impl Fn(usize) -> u64) -> Vec<RowError> {
    entries
        .iter()
        .filter_map(|e| {
            let target = e.tags.peace_general?;
            let valid = target != e.id
                && target >= 1
                && entries.get(target - 1).is_some_and(|t| t.tags.peace_specific);
            (!valid).then(|| RowError {
                line: line_of(e.id),
                entry_id: e.id,
                kind: RowErrorKind::DanglingOverridePair(target),
            })
        })
        .collect()
}

/// Flat 18-hypothesis table, one row per CAMEO root category 03-20,
/// past form only.
pub fn tiny_table() -> HypothesisTable {
    use Rootcode::*;
    let rows: [(Rootcode, &str); 18] = [
        (Agree, "<S> expressed intent to cooperate with <T>."),
        (Consult, "<S> consulted with <T>."),
        (Support, "<S> engaged in diplomatic cooperation with <T>."),
        (Cooperate, "<S> engaged in material cooperation with <T>."),
        (Aid, "<S> provided aid to <T>."),
        (Yield, "<S> yielded to <T>."),
        (Accuse, "<S> investigated <T>."),
        (Request, "<S> requested <T>."),
        (Accuse, "<S> disapproved of <T>."),
        (Reject, "<S> rejected <T>."),
        (Threaten, "<S> threatened <T>."),
        (Protest, "<S> protested against <T>."),
        (Mobilize, "<S> exhibited force posture against <T>."),
        (Sanction, "<S> reduced relations with <T>."),
        (Coerce, "<S> coerced <T>."),
        (Assault, "<S> assaulted <T>."),
        (Assault, "<S> fought with <T>."),
        (Assault, "<S> engaged in unconventional mass violence against <T>."),
    ];
    HypothesisTable::new(
        rows.iter()
            .map(|(root, past)| HypothesisEntry::new(*root, past, None))
            .collect(),
    )
    .expect("tiny table is valid")
}
