use std::collections::HashSet;
use std::path::Path;

use serde_json::{Map, Value};
use thiserror::Error;

use super::Task;
use crate::engine::{EventInstance, GoldLabels};
use crate::ontology::{normalize_alias, BinaryClass, Quadcode};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read dataset {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: invalid JSON record: {message}")]
    Json { line: usize, message: String },
    #[error("line {line}: missing field `{field}`")]
    MissingField { line: usize, field: &'static str },
    #[error("line {line}: {message}")]
    UnknownLabel { line: usize, message: String },
    #[error("line {line}: duplicate instance id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: inconsistent gold labels: {message}")]
    LabelMismatch { line: usize, message: String },
}

/// Which tasks every instance carries gold labels for.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TaskCoverage {
    pub binary: bool,
    pub quad: bool,
    pub root: bool,
}

impl TaskCoverage {
    pub fn covers(&self, task: Task) -> bool {
        match task {
            Task::Binary => self.binary,
            Task::Quad => self.quad,
            Task::Root => self.root,
        }
    }

    pub fn tasks(&self) -> Vec<Task> {
        Task::ALL.into_iter().filter(|t| self.covers(*t)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub instances: Vec<EventInstance>,
    pub coverage: TaskCoverage,
}

impl Dataset {
    pub fn new(name: &str, instances: Vec<EventInstance>) -> Dataset {
        let all = |f: fn(&GoldLabels) -> bool| !instances.is_empty() && instances.iter().all(|i| f(&i.gold));
        let coverage = TaskCoverage {
            binary: all(|g| g.binary.is_some()),
            quad: all(|g| g.quad.is_some()),
            root: all(|g| g.root.is_some()),
        };
        Dataset {
            name: name.to_string(),
            instances,
            coverage,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Dataset, DatasetError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into());
        Dataset::parse_jsonl(&name, &text)
    }

    /// Parses one JSON object per line with fields `id`, `text`, `source`,
    /// `target` and optional gold labels `root`, `quad`, `binary`. Blank lines
    /// and lines starting with `#` or `//` are skipped.
    pub fn parse_jsonl(name: &str, text: &str) -> Result<Dataset, DatasetError> {
        let mut instances = Vec::new();
        let mut ids = HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with("//") {
                continue;
            }
            let value: Value = serde_json::from_str(trimmed).map_err(|e| DatasetError::Json {
                line,
                message: e.to_string(),
            })?;
            let record = value.as_object().ok_or_else(|| DatasetError::Json {
                line,
                message: "record is not an object".into(),
            })?;
            let instance = parse_record(record, line)?;
            if !ids.insert(instance.id.clone()) {
                return Err(DatasetError::DuplicateId { line, id: instance.id });
            }
            instances.push(instance);
        }
        Ok(Dataset::new(name, instances))
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }
}

fn text_field(record: &Map<String, Value>, field: &'static str, line: usize) -> Result<String, DatasetError> {
    let value = match record.get(field) {
        Some(Value::String(s)) => s.trim().to_string(),
        Some(Value::Number(n)) if field == "id" => n.to_string(),
        _ => String::new(),
    };
    if value.is_empty() {
        return Err(DatasetError::MissingField { line, field });
    }
    Ok(value)
}

fn label_field(record: &Map<String, Value>, field: &str) -> Option<String> {
    match record.get(field)? {
        Value::String(s) if !s.trim().is_empty() => Some(s.trim().to_string()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn parse_record(record: &Map<String, Value>, line: usize) -> Result<EventInstance, DatasetError> {
    let unknown = |e: crate::ontology::OntologyError| DatasetError::UnknownLabel {
        line,
        message: e.to_string(),
    };
    let id = text_field(record, "id", line)?;
    let text = text_field(record, "text", line)?;
    let source = text_field(record, "source", line)?;
    let target = text_field(record, "target", line)?;

    let root = label_field(record, "root").map(|r| normalize_alias(&r)).transpose().map_err(unknown)?;
    let quad = label_field(record, "quad").map(|q| q.parse::<Quadcode>()).transpose().map_err(unknown)?;
    let binary = label_field(record, "binary")
        .map(|b| b.parse::<BinaryClass>())
        .transpose()
        .map_err(unknown)?;

    let derived_quad = root.map(|r| r.base_quad());
    if let (Some(given), Some(derived)) = (quad, derived_quad) {
        if given != derived {
            return Err(DatasetError::LabelMismatch {
                line,
                message: format!("root {} has quad {}, record says {}", root.unwrap(), derived, given),
            });
        }
    }
    let quad = quad.or(derived_quad);
    let derived_binary = quad.map(Quadcode::binary);
    if let (Some(given), Some(derived)) = (binary, derived_binary) {
        if given != derived {
            return Err(DatasetError::LabelMismatch {
                line,
                message: format!("quad {} is {}, record says {}", quad.unwrap(), derived, given),
            });
        }
    }
    Ok(EventInstance {
        id,
        text,
        source,
        target,
        gold: GoldLabels {
            root,
            quad,
            binary: binary.or(derived_binary),
        },
    })
}
