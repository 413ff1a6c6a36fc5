//! CSV and manifest writing.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, CliResult};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "SYMREC_OUT_DIR";

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'a str,
    pub csv: String,
    pub outputs: Vec<String>,
    pub config: Value,
    pub constants_used: BTreeMap<String, f64>,
    pub summary: Value,
    pub assertion_failure: Option<String>,
}

/// A finished run: named CSV bodies plus what goes into every manifest.
pub struct Report {
    pub stem: String,
    pub csvs: Vec<(String, String)>,
    pub config: Value,
    pub constants_used: BTreeMap<String, f64>,
    pub summary: Value,
    /// First failed experiment assertion, if any.
    pub failure: Option<String>,
}

impl Report {
    pub fn new(stem: impl Into<String>, config: Value) -> Self {
        Report {
            stem: stem.into(),
            csvs: Vec::new(),
            config,
            constants_used: BTreeMap::new(),
            summary: Value::Null,
            failure: None,
        }
    }

    /// Records `msg` as a failure unless `ok`; the first failure wins.
    pub fn require(mut self, ok: bool, msg: impl FnOnce() -> String) -> Self {
        if !ok && self.failure.is_none() {
            self.failure = Some(msg());
        }
        self
    }

    /// Adds `<stem><suffix>.csv`.
    pub fn csv(mut self, suffix: &str, body: String) -> Self {
        self.csvs.push((format!("{}{suffix}.csv", self.stem), body));
        self
    }

    pub fn constant(mut self, name: &str, value: f64) -> Self {
        self.constants_used.insert(name.to_string(), value);
        self
    }

    pub fn constants(mut self, c: &BTreeMap<String, f64>) -> Self {
        self.constants_used.extend(c.iter().map(|(k, v)| (k.clone(), *v)));
        self
    }

    pub fn summary(mut self, summary: Value) -> Self {
        self.summary = summary;
        self
    }

    /// Writes every CSV with a `<name>.manifest.json` next to it and returns
    /// the paths written.
    pub fn write(&self, dir: &Path, subcommand: &str) -> CliResult<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let outputs: Vec<String> = self.csvs.iter().map(|c| c.0.clone()).collect();
        let mut written = Vec::new();
        for (name, body) in &self.csvs {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
            let manifest = Manifest {
                tool: "symrec",
                version: env!("CARGO_PKG_VERSION"),
                subcommand,
                csv: name.clone(),
                outputs: outputs.clone(),
                config: self.config.clone(),
                constants_used: self.constants_used.clone(),
                summary: self.summary.clone(),
                assertion_failure: self.failure.clone(),
            };
            let mpath = dir.join(format!("{}.manifest.json", name.trim_end_matches(".csv")));
            let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Config(e.to_string()))?;
            text.push('\n');
            std::fs::write(&mpath, text).map_err(|e| CliError::io(&mpath, e))?;
            written.push(path);
            written.push(mpath);
        }
        Ok(written)
    }
}
