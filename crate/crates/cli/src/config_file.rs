//! `key=value` run files. Each key is a long flag name; command-line flags
//! given after the file override it.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context, Result};

const VALUE_KEYS: &[&str] = &[
    "table",
    "dataset",
    "oracle",
    "endpoint",
    "model",
    "timeout",
    "max-batch",
    "top-k",
    "margin",
    "consult-penalty",
    "mode",
    "task",
    "format",
    "out",
    "jobs",
    "grid",
    "tiny-table",
];
const LIST_KEYS: &[&str] = &["disable-override"];
const FLAG_KEYS: &[&str] = &["verbose"];

/// Turns a run file into long-flag arguments.
pub fn to_args(path: &Path) -> Result<Vec<OsString>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config file {}", path.display()))?;
    parse(&text).with_context(|| format!("in config file {}", path.display()))
}

pub fn parse(text: &str) -> Result<Vec<OsString>> {
    let mut args = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected key=value, got `{line}`", idx + 1);
        };
        let key = key.trim().replace('_', "-").to_ascii_lowercase();
        let value = value.trim();
        if VALUE_KEYS.contains(&key.as_str()) {
            args.push(format!("--{key}").into());
            args.push(value.into());
        } else if LIST_KEYS.contains(&key.as_str()) {
            for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                args.push(format!("--{key}").into());
                args.push(item.into());
            }
        } else if FLAG_KEYS.contains(&key.as_str()) {
            match value.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" => args.push(format!("--{key}").into()),
                "false" | "no" | "0" => {}
                other => bail!("line {}: `{key}` expects true or false, got `{other}`", idx + 1),
            }
        } else {
            bail!("line {}: unknown key `{key}`", idx + 1);
        }
    }
    Ok(args)
}

/// Splices run-file arguments in right after the subcommand so that later
/// command-line flags take precedence.
pub fn expand(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut config = None;
    let mut iter = argv.iter().enumerate().skip(1);
    while let Some((_, arg)) = iter.next() {
        let text = arg.to_string_lossy();
        if text == "--config" {
            config = iter.next().map(|(_, v)| v.clone());
        } else if let Some(path) = text.strip_prefix("--config=") {
            config = Some(path.into());
        } else if text == "--" {
            break;
        }
    }
    let Some(config) = config else { return Ok(argv) };
    let Some(sub) = argv.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')) else {
        return Ok(argv);
    };
    let sub = sub + 1;
    let mut out: Vec<OsString> = argv[..=sub].to_vec();
    out.extend(to_args(Path::new(&config))?);
    out.extend(argv[sub + 1..].iter().cloned());
    Ok(out)
}
