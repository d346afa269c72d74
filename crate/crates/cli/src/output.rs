//! Artifact writing: every file carries seed, streams, parameters and version.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;
use crate::{CliError, VERSION};

#[derive(Clone, Debug, Serialize)]
pub struct Meta {
    pub command: String,
    pub seed: u64,
    pub streams: usize,
    pub version: String,
    pub params: BTreeMap<String, Value>,
}

impl Meta {
    pub fn new(config: &RunConfig) -> Self {
        let command = serde_json::to_value(config.command)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        Meta {
            command,
            seed: config.seed,
            streams: config.streams,
            version: VERSION.to_string(),
            params: BTreeMap::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    fn comment_lines(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# command={}", self.command);
        let _ = writeln!(out, "# seed={}", self.seed);
        let _ = writeln!(out, "# streams={}", self.streams);
        let _ = writeln!(out, "# version={}", self.version);
        for (k, v) in &self.params {
            let _ = writeln!(out, "# {k}={v}");
        }
        out
    }
}

/// CSV body prefixed by `# key=value` metadata lines.
pub fn write_csv(dir: &Path, name: &str, meta: &Meta, body: &str) -> Result<(), CliError> {
    let mut text = meta.comment_lines();
    text.push_str(body);
    write(dir, name, &text)
}

/// JSON object `{"meta": ..., "data": ...}`.
pub fn write_json<T: Serialize>(dir: &Path, name: &str, meta: &Meta, data: &T) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Artifact<'a, T> {
        meta: &'a Meta,
        data: &'a T,
    }
    let mut text = serde_json::to_string_pretty(&Artifact { meta, data })
        .map_err(|e| CliError::Io(format!("serialization failed: {e}")))?;
    text.push('\n');
    write(dir, name, &text)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// `u,value` rows with 17 significant digits.
pub fn series_csv(axis: &str, xs: &[f64], ys: &[f64]) -> String {
    let mut out = format!("{axis},value\n");
    for (x, y) in xs.iter().zip(ys) {
        let _ = writeln!(out, "{x:.16e},{y:.16e}");
    }
    out
}
