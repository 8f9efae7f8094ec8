use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use heisflow_core::io::write_atomic;
use serde::Serialize;

use crate::config::{Entry, RunConfig, Source};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AtMost,
    AtLeast,
    Holds,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub comparison: Comparison,
    pub tolerance: f64,
    /// Config key the tolerance came from, if any.
    pub tolerance_key: Option<&'static str>,
    pub tolerance_source: Source,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub status: Status,
    /// First failing check, or the stage that raised a numerical error.
    pub failing_check: Option<String>,
    pub error: Option<String>,
    pub workers: usize,
    pub config: BTreeMap<&'static str, Entry>,
    pub derived: BTreeMap<String, serde_json::Value>,
    pub checks: Vec<Check>,
    pub timings_s: BTreeMap<String, f64>,
    pub artifacts: Vec<PathBuf>,
}

/// Collects checks, constants, timings and artifacts during a run.
pub struct Recorder {
    pub out: PathBuf,
    manifest: RunManifest,
    cfg: RunConfig,
    started: Instant,
}

impl Recorder {
    pub fn new(out: &Path, subcommand: &str, cfg: &RunConfig, workers: usize) -> Self {
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            status: Status::Pass,
            failing_check: None,
            error: None,
            workers,
            config: cfg.entries().clone(),
            derived: BTreeMap::new(),
            checks: Vec::new(),
            timings_s: BTreeMap::new(),
            artifacts: Vec::new(),
        };
        Self { out: out.to_path_buf(), manifest, cfg: cfg.clone(), started: Instant::now() }
    }

    pub fn derived(&mut self, name: impl Into<String>, value: impl Serialize) {
        let value = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.manifest.derived.insert(name.into(), value);
    }

    /// Runs `f` and records its wall-clock time under `stage`.
    pub fn timed<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let v = f();
        *self.manifest.timings_s.entry(stage.to_string()).or_default() += start.elapsed().as_secs_f64();
        v
    }

    pub fn artifact(&mut self, path: &Path) -> PathBuf {
        let rel = path.strip_prefix(&self.out).unwrap_or(path).to_path_buf();
        self.manifest.artifacts.push(rel);
        path.to_path_buf()
    }

    fn push(&mut self, check: Check) -> bool {
        let pass = check.pass;
        if !pass && self.manifest.failing_check.is_none() {
            self.manifest.failing_check = Some(check.name.clone());
            self.manifest.status = Status::Fail;
        }
        self.manifest.checks.push(check);
        pass
    }

    /// `value <= tolerance`, with the tolerance read from config key `key`.
    pub fn at_most(&mut self, name: impl Into<String>, value: f64, key: &'static str, tolerance: f64) -> bool {
        self.compare(name.into(), value, Comparison::AtMost, key, tolerance)
    }

    pub fn at_least(&mut self, name: impl Into<String>, value: f64, key: &'static str, tolerance: f64) -> bool {
        self.compare(name.into(), value, Comparison::AtLeast, key, tolerance)
    }

    fn compare(&mut self, name: String, value: f64, comparison: Comparison, key: &'static str, tolerance: f64) -> bool {
        let pass = match comparison {
            Comparison::AtMost => value <= tolerance,
            Comparison::AtLeast => value >= tolerance,
            Comparison::Holds => value != 0.0,
        };
        let tolerance_source = self.cfg.source(key);
        self.push(Check { name, value, comparison, tolerance, tolerance_key: Some(key), tolerance_source, pass })
    }

    /// A yes/no check with no tolerance.
    pub fn holds(&mut self, name: impl Into<String>, ok: bool) -> bool {
        let check = Check {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            comparison: Comparison::Holds,
            tolerance: 1.0,
            tolerance_key: None,
            tolerance_source: Source::Default,
            pass: ok,
        };
        self.push(check)
    }

    pub fn error(&mut self, stage: &str, message: String) {
        self.manifest.status = Status::Error;
        self.manifest.failing_check = Some(stage.to_string());
        self.manifest.error = Some(message);
    }

    pub fn finish(mut self) -> heisflow_core::Result<RunManifest> {
        self.manifest.timings_s.insert("total".into(), self.started.elapsed().as_secs_f64());
        let json = serde_json::to_vec_pretty(&self.manifest)?;
        write_atomic(&self.out.join(MANIFEST_FILE), &json)?;
        Ok(self.manifest)
    }
}
