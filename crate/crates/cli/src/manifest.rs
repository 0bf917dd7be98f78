use std::fmt::Display;
use std::path::{Path, PathBuf};

use dstft::{Error, ErrorClass};
use serde::Serialize;
use serde_json::Value;

use crate::Global;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(msg: impl Display) -> Self {
        Self { code: 2, message: msg.to_string() }
    }

    pub fn io(msg: impl Display) -> Self {
        Self { code: 3, message: msg.to_string() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e.class() {
            ErrorClass::Config => 2,
            ErrorClass::Io => 3,
            ErrorClass::Degenerate => 4,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::io(e)
    }
}

/// Resolved configuration of one run. Contains no timestamps or host data so
/// that identical configurations produce identical files.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub reduction: &'static str,
    pub threads: Option<usize>,
    pub config: Value,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(global: &Global, command: &'static str, config: Value) -> Self {
        Self {
            tool: "dstft",
            version: env!("CARGO_PKG_VERSION"),
            command,
            reduction: if global.fast_reduce { "fast" } else { "ordered" },
            threads: global.threads,
            config,
            outputs: Vec::new(),
        }
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Writes `<out-dir>/<command>.manifest.json`.
    pub fn write(&self, out_dir: &Path) -> Result<PathBuf, CliError> {
        let path = out_dir.join(format!("{}.manifest.json", self.command));
        write_json(&path, self)?;
        Ok(path)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(format!("serialize: {e}")))?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}
