//! Flat sectioned `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("{path}:{line}: {msg}")]
    Syntax { path: PathBuf, line: usize, msg: String },
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("key `{key}`: cannot parse `{value}` as {expected}")]
    Parse { key: String, value: String, expected: &'static str },
    #[error("key `{0}` is required for this run")]
    Missing(String),
    #[error("flag `{0}` expects a value")]
    DanglingFlag(String),
    #[error("{0}")]
    Invalid(String),
}

pub type ConfigResult<T> = std::result::Result<T, ConfigError>;

pub struct KeySpec {
    pub name: &'static str,
    pub default: Option<&'static str>,
}

const fn key(name: &'static str, default: Option<&'static str>) -> KeySpec {
    KeySpec { name, default }
}

/// Every accepted key, described in `docs/config.md`. Keys without a default
/// are optional or required per subcommand.
pub const SCHEMA: &[KeySpec] = &[
    key("hardy.sigma_min", Some("1e-3")),
    key("hardy.sigma_max", Some("30")),
    key("hardy.n_points", Some("1024")),
    key("radial.preset", Some("coarse")),
    key("radial.k_max", None),
    key("radial.sigma_step", None),
    key("radial.m_lo", None),
    key("radial.m_hi", None),
    key("radial.n_s", None),
    key("radial.points_per_panel", None),
    key("time.scheme", None),
    key("time.dt", Some("0.01")),
    key("time.t_final", Some("5")),
    key("time.sample_every", Some("10")),
    key("run.betas", Some("0.9,0.95,0.99")),
    key("run.beta", None),
    key("run.gammas", None),
    key("run.n", Some("1000")),
    key("run.r", Some("0.03")),
    key("run.r_values", Some("0.1,0.05,0.01")),
    key("run.samples", Some("4")),
    key("run.seed", None),
    key("run.workers", None),
    key("run.input", None),
    key("run.tol", Some("1e-10")),
    key("run.max_iter", Some("3000")),
    key("run.track_r", None),
    key("run.extra", Some("0.02")),
    key("check.residual", Some("1e-8")),
    key("check.drift", Some("1e-6")),
    key("check.dist_multiple", Some("10")),
    key("check.dist_slope_min", Some("0.9")),
    key("check.r_slope_min", Some("1.5")),
    key("check.fit_distance", None),
    key("check.oracle", Some("1e-2")),
    key("check.parseval", Some("1e-6")),
    key("check.direct", Some("1e-10")),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Default,
    File,
    Override,
    Env,
}

#[derive(Clone, Debug, Serialize)]
pub struct Entry {
    pub value: Option<String>,
    pub source: Source,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    entries: BTreeMap<&'static str, Entry>,
}

fn lookup(name: &str) -> ConfigResult<&'static KeySpec> {
    // Bare keys resolve when unique across sections.
    if let Some(k) = SCHEMA.iter().find(|k| k.name == name) {
        return Ok(k);
    }
    let mut hits = SCHEMA.iter().filter(|k| k.name.split_once('.').map(|(_, b)| b) == Some(name));
    match (hits.next(), hits.next()) {
        (Some(k), None) => Ok(k),
        _ => Err(ConfigError::UnknownKey(name.to_string())),
    }
}

/// Command-line pieces pulled out of the trailing arguments.
#[derive(Debug, Default)]
pub struct Invocation {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub overrides: Vec<(String, String)>,
}

/// Splits `--key value`, `--key=value` and `key=value` forms.
pub fn split_args(args: &[String]) -> ConfigResult<Invocation> {
    let mut inv = Invocation::default();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let (k, v) = if let Some(flag) = arg.strip_prefix("--") {
            match flag.split_once('=') {
                Some((k, v)) => (k.to_string(), v.to_string()),
                None => {
                    let v = it.next().ok_or_else(|| ConfigError::DanglingFlag(arg.clone()))?;
                    (flag.to_string(), v.clone())
                }
            }
        } else if let Some((k, v)) = arg.split_once('=') {
            (k.to_string(), v.to_string())
        } else {
            return Err(ConfigError::Invalid(format!("unexpected argument `{arg}`")));
        };
        match k.as_str() {
            "config" => inv.config = Some(PathBuf::from(v)),
            "out" => inv.out = Some(PathBuf::from(v)),
            _ => inv.overrides.push((k, v)),
        }
    }
    Ok(inv)
}

fn parse_file(path: &Path) -> ConfigResult<Vec<(String, String, usize)>> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
    let mut section = String::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split(['#', ';']).next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let syntax = |msg: &str| ConfigError::Syntax { path: path.to_path_buf(), line: i + 1, msg: msg.to_string() };
        if let Some(rest) = line.strip_prefix('[') {
            section = rest.strip_suffix(']').ok_or_else(|| syntax("unterminated section header"))?.trim().to_string();
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| syntax("expected `key = value`"))?;
        let k = k.trim();
        let full = if section.is_empty() || k.contains('.') { k.to_string() } else { format!("{section}.{k}") };
        out.push((full, v.trim().to_string(), i + 1));
    }
    Ok(out)
}

impl RunConfig {
    pub fn defaults() -> Self {
        let entries = SCHEMA
            .iter()
            .map(|k| (k.name, Entry { value: k.default.map(str::to_string), source: Source::Default }))
            .collect();
        Self { entries }
    }

    /// Defaults, then the file, then overrides.
    pub fn load(file: Option<&Path>, overrides: &[(String, String)]) -> ConfigResult<Self> {
        let mut cfg = Self::defaults();
        if let Some(path) = file {
            for (k, v, _) in parse_file(path)? {
                cfg.set(&k, v, Source::File)?;
            }
        }
        for (k, v) in overrides {
            cfg.set(k, v.clone(), Source::Override)?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, name: &str, value: String, source: Source) -> ConfigResult<()> {
        let spec = lookup(name)?;
        let value = if value.is_empty() { None } else { Some(value) };
        self.entries.insert(spec.name, Entry { value, source });
        Ok(())
    }

    pub fn entries(&self) -> &BTreeMap<&'static str, Entry> {
        &self.entries
    }

    pub fn source(&self, name: &str) -> Source {
        self.entries[lookup(name).expect("schema key").name].source
    }

    pub fn raw(&self, name: &str) -> Option<&str> {
        self.entries[lookup(name).expect("schema key").name].value.as_deref()
    }

    pub fn is_set(&self, name: &str) -> bool {
        self.raw(name).is_some()
    }

    fn parsed<T: std::str::FromStr>(&self, name: &str, expected: &'static str) -> ConfigResult<Option<T>> {
        self.raw(name)
            .map(|v| v.parse().map_err(|_| ConfigError::Parse { key: name.to_string(), value: v.to_string(), expected }))
            .transpose()
    }

    pub fn opt_f64(&self, name: &str) -> ConfigResult<Option<f64>> {
        let v: Option<f64> = self.parsed(name, "a number")?;
        match v {
            Some(x) if !x.is_finite() => Err(ConfigError::Invalid(format!("key `{name}` must be finite"))),
            v => Ok(v),
        }
    }

    pub fn f64(&self, name: &str) -> ConfigResult<f64> {
        self.opt_f64(name)?.ok_or_else(|| ConfigError::Missing(name.to_string()))
    }

    pub fn positive(&self, name: &str) -> ConfigResult<f64> {
        let v = self.f64(name)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(ConfigError::Invalid(format!("key `{name}` must be positive, got {v}")))
        }
    }

    pub fn opt_usize(&self, name: &str) -> ConfigResult<Option<usize>> {
        self.parsed(name, "a non-negative integer")
    }

    pub fn usize(&self, name: &str) -> ConfigResult<usize> {
        self.opt_usize(name)?.ok_or_else(|| ConfigError::Missing(name.to_string()))
    }

    pub fn seed(&self) -> ConfigResult<u64> {
        self.parsed("run.seed", "an unsigned integer")?.ok_or_else(|| ConfigError::Missing("run.seed".into()))
    }

    /// Comma-separated numbers; an empty list is an error.
    pub fn list(&self, name: &str) -> ConfigResult<Vec<f64>> {
        let raw = self.raw(name).unwrap_or("");
        let values = raw
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| ConfigError::Parse { key: name.to_string(), value: s.to_string(), expected: "a number" })
            })
            .collect::<ConfigResult<Vec<_>>>()?;
        if values.is_empty() {
            return Err(ConfigError::Invalid(format!("key `{name}` must list at least one value")));
        }
        Ok(values)
    }

    pub fn path(&self, name: &str) -> Option<PathBuf> {
        self.raw(name).map(PathBuf::from)
    }
}
