//! Run configuration: a line-based `key = value` grammar with `[section]`
//! headers.
//!
//! ```text
//! [run]
//! experiment = limit
//! preset = bm-meander
//! seed = 7
//!
//! [strings]
//! m = kind=power alpha=0.5
//!
//! [params]
//! lambdas = [100, 1000, 10000]
//! ```
//!
//! `[run]` takes `experiment`, `mode`, `preset`, `seed`, `workers` and `out`.
//! `[strings]` holds string specifications, `[params]` experiment
//! parameters written as JSON scalars or arrays (bare words are strings).

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::params;

/// Registered experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Classify,
    Tightness,
    Sample,
    Timechange,
    Williams,
    Dichotomy,
    Converge,
    Limit,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::Classify,
        Experiment::Tightness,
        Experiment::Sample,
        Experiment::Timechange,
        Experiment::Williams,
        Experiment::Dichotomy,
        Experiment::Converge,
        Experiment::Limit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Classify => "classify",
            Experiment::Tightness => "tightness",
            Experiment::Sample => "sample",
            Experiment::Timechange => "timechange",
            Experiment::Williams => "williams",
            Experiment::Dichotomy => "dichotomy",
            Experiment::Converge => "converge",
            Experiment::Limit => "limit",
        }
    }

    pub fn is_stochastic(self) -> bool {
        !matches!(self, Experiment::Classify | Experiment::Tightness)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

/// A config error, with the 1-based line it refers to when there is one.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    pub fn at(line: Option<usize>, message: impl Into<String>) -> Self {
        ConfigError {
            line,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub mode: Option<String>,
    pub preset: Option<String>,
    pub seed: Option<u64>,
    /// Worker threads, 0 for all cores. Never part of a report.
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub strings: BTreeMap<String, String>,
    pub params: BTreeMap<String, Value>,
}

impl RunConfig {
    pub fn new(experiment: Experiment) -> Self {
        RunConfig {
            experiment,
            mode: None,
            preset: None,
            seed: None,
            workers: 1,
            out: None,
            strings: BTreeMap::new(),
            params: BTreeMap::new(),
        }
    }

    /// Serializes to the config grammar; `parse_config` reads it back to an
    /// equal value.
    pub fn to_text(&self) -> String {
        let mut s = String::from("[run]\n");
        s += &format!("experiment = {}\n", self.experiment);
        if let Some(m) = &self.mode {
            s += &format!("mode = {m}\n");
        }
        if let Some(p) = &self.preset {
            s += &format!("preset = {p}\n");
        }
        if let Some(seed) = self.seed {
            s += &format!("seed = {seed}\n");
        }
        s += &format!("workers = {}\n", self.workers);
        if let Some(o) = &self.out {
            s += &format!("out = {}\n", o.display());
        }
        if !self.strings.is_empty() {
            s += "\n[strings]\n";
            for (k, v) in &self.strings {
                s += &format!("{k} = {v}\n");
            }
        }
        if !self.params.is_empty() {
            s += "\n[params]\n";
            for (k, v) in &self.params {
                s += &format!("{k} = {}\n", value_text(v));
            }
        }
        s
    }
}

/// Writes a parameter value so that `parse_value` returns it unchanged.
pub fn value_text(v: &Value) -> String {
    match v {
        Value::String(s) if serde_json::from_str::<Value>(s).is_err() && !s.is_empty() && s.trim() == s => s.clone(),
        other => other.to_string(),
    }
}

/// JSON when it parses, otherwise the bare text as a string.
pub fn parse_value(text: &str) -> Value {
    serde_json::from_str(text).unwrap_or_else(|_| Value::String(text.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    Run,
    Strings,
    Params,
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut section = None;
    let mut run: Vec<(usize, String, String)> = Vec::new();
    let mut strings = Vec::new();
    let mut params = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            section = Some(match name.trim() {
                "run" => Section::Run,
                "strings" => Section::Strings,
                "params" => Section::Params,
                other => return Err(ConfigError::at(Some(line), format!("unknown section [{other}]"))),
            });
            continue;
        }
        let (k, v) = t
            .split_once('=')
            .ok_or_else(|| ConfigError::at(Some(line), format!("expected `key = value`, got `{t}`")))?;
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if k.is_empty() || v.is_empty() {
            return Err(ConfigError::at(Some(line), "empty key or value"));
        }
        let bucket = match section {
            Some(Section::Run) => &mut run,
            Some(Section::Strings) => &mut strings,
            Some(Section::Params) => &mut params,
            None => return Err(ConfigError::at(Some(line), "key outside of a section")),
        };
        if bucket.iter().any(|(_, key, _)| *key == k) {
            return Err(ConfigError::at(Some(line), format!("duplicate key `{k}`")));
        }
        bucket.push((line, k, v));
    }
    let find = |k: &str| run.iter().find(|(_, key, _)| key == k);
    let (exp_line, _, exp) = find("experiment").ok_or_else(|| ConfigError::at(None, "missing required key `experiment` in [run]"))?;
    let experiment: Experiment = exp.parse().map_err(|e: String| ConfigError::at(Some(*exp_line), e))?;
    let mut cfg = RunConfig::new(experiment);
    for (line, k, v) in &run {
        let line = Some(*line);
        match k.as_str() {
            "experiment" => {}
            "mode" => cfg.mode = Some(v.clone()),
            "preset" => cfg.preset = Some(v.clone()),
            "seed" => {
                cfg.seed = Some(v.parse().map_err(|_| ConfigError::at(line, format!("seed must be a non-negative integer, got `{v}`")))?)
            }
            "workers" => {
                cfg.workers = v
                    .parse()
                    .map_err(|_| ConfigError::at(line, format!("workers must be a non-negative integer, got `{v}`")))?
            }
            "out" => cfg.out = Some(PathBuf::from(v)),
            other => return Err(ConfigError::at(line, format!("unknown key `{other}` in [run]"))),
        }
    }
    if let Some(p) = &cfg.preset {
        let line = find("preset").map(|r| r.0);
        params::preset(experiment, p).map_err(|e| ConfigError::at(line, e))?;
    }
    let mode = params::effective_mode(&cfg).map_err(|e| ConfigError::at(find("mode").map(|r| r.0), e))?;
    let allowed = params::string_keys(experiment, &mode);
    for (line, k, v) in strings {
        if !allowed.contains(&k.as_str()) {
            return Err(ConfigError::at(
                Some(line),
                format!("unknown key `{k}` in [strings] for {experiment} (allowed: {})", allowed.join(", ")),
            ));
        }
        cfg.strings.insert(k, v);
    }
    let defaults = params::default_params(experiment, &mode).map_err(|e| ConfigError::at(None, e))?;
    for (line, k, v) in params {
        let value = parse_value(&v);
        params::check_param(experiment, &mode, &defaults, &k, &value).map_err(|e| ConfigError::at(Some(line), e))?;
        cfg.params.insert(k, value);
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_classify() {
        let c = parse_config("[run]\nexperiment = classify\n\n[params]\nalphas = [0.5]\n").unwrap();
        assert_eq!(c.experiment, Experiment::Classify);
        assert_eq!(c.params["alphas"], serde_json::json!([0.5]));
        assert_eq!(parse_config(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn errors_carry_lines() {
        let e = parse_config("[run]\nexperiment = williams\nseed = 1\n[params]\n\ndt = -1\n").unwrap_err();
        assert_eq!(e.line, Some(6));
        let e = parse_config("[run]\nexperiment = williams\n[params]\nbogus = 1\n").unwrap_err();
        assert_eq!(e.line, Some(4));
        assert!(e.message.contains("bogus"));
        let e = parse_config("[run]\nexperiment = nope\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        let e = parse_config("[params]\nn = 1\n").unwrap_err();
        assert_eq!(e.line, None);
        let e = parse_config("[run]\nexperiment = williams\nfoo\n").unwrap_err();
        assert_eq!(e.line, Some(3));
        let e = parse_config("[run]\nexperiment = limit\n[strings]\nq = kind=power alpha=1\n").unwrap_err();
        assert_eq!(e.line, Some(4));
        let e = parse_config("[run]\nexperiment = williams\n[params]\nn_max_law = \"many\"\n").unwrap_err();
        assert_eq!(e.line, Some(4));
    }

    #[test]
    fn bare_words_are_strings() {
        assert_eq!(parse_value("log1p"), Value::String("log1p".into()));
        assert_eq!(parse_value("[1, 2]"), serde_json::json!([1, 2]));
        assert_eq!(value_text(&Value::String("12".into())), "\"12\"");
        assert_eq!(value_text(&Value::String("log1p".into())), "log1p");
    }
}
