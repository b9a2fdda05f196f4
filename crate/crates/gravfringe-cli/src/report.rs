//! File output and the run-metadata record.

use std::fs;
use std::path::PathBuf;

use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::error::CliError;

pub struct Report {
    dir: PathBuf,
    command: String,
    config: RunConfig,
    files: Vec<String>,
    results: Map<String, Value>,
    advisories: Vec<String>,
}

impl Report {
    pub fn new(command: &str, config: &RunConfig) -> Result<Self, CliError> {
        fs::create_dir_all(&config.out_dir)?;
        Ok(Self {
            dir: config.out_dir.clone(),
            command: command.to_string(),
            config: config.clone(),
            files: Vec::new(),
            results: Map::new(),
            advisories: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        fs::write(self.dir.join(name), contents)?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &impl serde::Serialize) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Invariant(e.to_string()))?;
        self.write(name, &(text + "\n"))
    }

    pub fn record(&mut self, key: &str, value: Value) {
        self.results.insert(key.to_string(), value);
    }

    pub fn advise(&mut self, notes: impl IntoIterator<Item = String>) {
        for note in notes {
            if !self.advisories.contains(&note) {
                self.advisories.push(note);
            }
        }
    }

    /// Write `run_metadata.json` and return the list of files produced.
    pub fn finish(mut self) -> Result<Vec<String>, CliError> {
        let c = &self.config;
        let metadata = json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config_hash": c.hash(),
            "config": c.render(),
            "tolerances": { "quad_tol": c.quad_tol, "tail_tol": c.tail_tol },
            "flags": {
                "f_as_printed": c.f_as_printed,
                "rel_kernel_outer": c.rel_kernel_outer,
                "normalize": c.normalize,
                "verify": c.verify,
            },
            "advisories": self.advisories,
            "results": Value::Object(std::mem::take(&mut self.results)),
            "files": self.files,
        });
        let text = serde_json::to_string_pretty(&metadata).map_err(|e| CliError::Invariant(e.to_string()))?;
        fs::write(self.dir.join("run_metadata.json"), text + "\n")?;
        self.files.push("run_metadata.json".into());
        Ok(self.files)
    }
}

/// Finite numbers as JSON numbers, everything else as null.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}
