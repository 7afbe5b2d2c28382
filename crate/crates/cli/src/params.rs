//! Parameter defaults, modes and presets of every experiment.

use std::collections::BTreeMap;

use excursion_core::experiments::{
    ConvergenceParams, DichotomyParams, Expectation, IdentityParams, LimitParams, MeanderParams, QmParams,
    Reference, Route, WilliamsParams,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{Experiment, RunConfig};

/// Keys whose value may be zero; every other number must be positive.
const ZERO_OK: &[&str] = &["min_decade_growth"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyParams {
    /// Power strings `m^{(α)}` to classify.
    pub alphas: Vec<f64>,
    /// A single power string; replaces `alphas` when set.
    pub alpha: Option<f64>,
    /// Also classify `m(x) = −1/x`.
    pub inverse: bool,
}

impl Default for ClassifyParams {
    fn default() -> Self {
        ClassifyParams {
            alphas: vec![0.3, 0.5, 0.9, 1.0, 1.5, 2.5, 3.0],
            alpha: None,
            inverse: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessParams {
    pub family: String,
    pub lambdas: Vec<f64>,
    pub deltas: Vec<f64>,
    /// Outcome of a convergence run on the same family, if known.
    pub convergence_observed: Option<bool>,
}

impl Default for TightnessParams {
    fn default() -> Self {
        TightnessParams {
            family: "linear".into(),
            lambdas: vec![10.0, 100.0, 1e3, 1e4],
            deltas: vec![0.1, 0.01, 1e-3, 1e-4],
            convergence_observed: None,
        }
    }
}

/// Path sampling for `bm`, `bes3`, `excursion` and `qm`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleParams {
    pub n: usize,
    /// Start of `bm`, `bes3` and `qm` paths.
    pub x: f64,
    /// Excursions are conditioned on `M > a`.
    pub a: f64,
    pub dt: f64,
    pub new_dt: f64,
    /// Bin width relative to the path maximum.
    pub h_rel: f64,
    pub t_max: f64,
    pub step_cap: usize,
}

impl Default for SampleParams {
    fn default() -> Self {
        SampleParams {
            n: 10,
            x: 1.0,
            a: 1.0,
            dt: 1e-4,
            new_dt: 1e-3,
            h_rel: 0.005,
            t_max: 10.0,
            step_cap: 50_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanderRunParams {
    pub alpha: f64,
    pub ks: f64,
    #[serde(flatten)]
    pub meander: MeanderParams,
}

impl Default for MeanderRunParams {
    fn default() -> Self {
        MeanderRunParams {
            alpha: 0.5,
            ks: 0.02,
            meander: MeanderParams::default(),
        }
    }
}

pub fn modes(e: Experiment) -> &'static [&'static str] {
    match e {
        Experiment::Sample => &["excursion", "bm", "bes3", "qm", "meander"],
        Experiment::Timechange => &["identity", "qm_formula"],
        _ => &[""],
    }
}

/// The mode named in the config, else the preset's, else the default.
pub fn effective_mode(cfg: &RunConfig) -> Result<String, String> {
    let allowed = modes(cfg.experiment);
    let mode = match (&cfg.mode, &cfg.preset) {
        (Some(m), _) => m.clone(),
        (None, Some(p)) => preset(cfg.experiment, p)?.mode.unwrap_or(allowed[0]).to_string(),
        (None, None) => allowed[0].to_string(),
    };
    if !allowed.contains(&mode.as_str()) {
        return Err(if allowed == [""] {
            format!("{} takes no mode", cfg.experiment)
        } else {
            format!("unknown mode `{mode}` for {} (allowed: {})", cfg.experiment, allowed.join(", "))
        });
    }
    Ok(mode)
}

fn to_value<T: Serialize>(t: T) -> Value {
    serde_json::to_value(t).expect("parameters serialize")
}

pub fn default_params(e: Experiment, mode: &str) -> Result<Value, String> {
    Ok(match (e, mode) {
        (Experiment::Classify, _) => to_value(ClassifyParams::default()),
        (Experiment::Tightness, _) => to_value(TightnessParams::default()),
        (Experiment::Sample, "meander") => to_value(MeanderRunParams::default()),
        (Experiment::Sample, _) => to_value(SampleParams::default()),
        (Experiment::Timechange, "qm_formula") => to_value(QmParams::default()),
        (Experiment::Timechange, _) => to_value(IdentityParams::default()),
        (Experiment::Williams, _) => to_value(WilliamsParams::default()),
        (Experiment::Dichotomy, _) => to_value(DichotomyParams::default()),
        (Experiment::Converge, _) => to_value(ConvergenceParams::default()),
        (Experiment::Limit, _) => to_value(LimitParams::default()),
    })
}

pub fn string_keys(e: Experiment, mode: &str) -> &'static [&'static str] {
    match (e, mode) {
        (Experiment::Limit, _) => &["m", "k"],
        (Experiment::Sample, "meander") | (Experiment::Timechange, "identity") | (Experiment::Williams, _) => &[],
        _ => &["m"],
    }
}

fn default_strings(e: Experiment, mode: &str) -> BTreeMap<String, String> {
    let pairs: &[(&str, &str)] = match (e, mode) {
        (Experiment::Dichotomy, _) => &[("m", "builtin=inverse")],
        (Experiment::Timechange, "qm_formula") => &[("m", "kind=power alpha=3")],
        (Experiment::Limit, _) => &[("m", "kind=power alpha=0.5"), ("k", "one")],
        (Experiment::Sample, "qm") => &[("m", "kind=power alpha=0.5")],
        _ => &[],
    };
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub mode: Option<&'static str>,
    pub strings: Vec<(&'static str, &'static str)>,
    pub params: Vec<(&'static str, Value)>,
}

impl Preset {
    fn params(params: Vec<(&'static str, Value)>) -> Self {
        Preset {
            mode: None,
            strings: Vec::new(),
            params,
        }
    }
}

pub fn preset_names(e: Experiment) -> &'static [&'static str] {
    match e {
        Experiment::Classify => &["example-table"],
        Experiment::Tightness => &["linear", "spike"],
        Experiment::Sample => &["meander"],
        Experiment::Timechange => &["identity", "qm-formula"],
        Experiment::Williams => &["suite"],
        Experiment::Dichotomy => &["inverse", "power3"],
        Experiment::Converge => &["linear", "log1p"],
        Experiment::Limit => &["bm-meander", "self-similar", "log"],
    }
}

pub fn preset(e: Experiment, name: &str) -> Result<Preset, String> {
    let p = match (e, name) {
        (Experiment::Classify, "example-table") => Preset::params(vec![]),
        (Experiment::Tightness, "linear") => Preset::params(vec![("family", json!("linear"))]),
        (Experiment::Tightness, "spike") => Preset::params(vec![("family", json!("spike"))]),
        (Experiment::Sample, "meander") => Preset {
            mode: Some("meander"),
            strings: vec![],
            params: vec![],
        },
        (Experiment::Timechange, "identity") => Preset {
            mode: Some("identity"),
            strings: vec![],
            params: vec![],
        },
        (Experiment::Timechange, "qm-formula") => Preset {
            mode: Some("qm_formula"),
            strings: vec![("m", "kind=power alpha=3")],
            params: vec![],
        },
        (Experiment::Williams, "suite") => Preset::params(vec![]),
        (Experiment::Dichotomy, "inverse") => Preset {
            mode: None,
            strings: vec![("m", "builtin=inverse")],
            params: vec![("expect", to_value(Expectation::Divergent))],
        },
        (Experiment::Dichotomy, "power3") => Preset {
            mode: None,
            strings: vec![("m", "kind=power alpha=3")],
            params: vec![("expect", to_value(Expectation::Stable))],
        },
        (Experiment::Converge, "linear") => Preset::params(vec![
            ("family", json!("linear")),
            ("linear_identity", json!(true)),
            ("check_thresholds", json!(false)),
        ]),
        (Experiment::Converge, "log1p") => Preset::params(vec![("family", json!("log1p"))]),
        (Experiment::Limit, "bm-meander") => Preset::params(vec![]),
        (Experiment::Limit, "self-similar") => Preset {
            mode: None,
            strings: vec![("m", "kind=power alpha=3"), ("k", "one")],
            params: vec![
                ("alpha", json!(3.0)),
                ("lambdas", json!([1e2, 1e4])),
                ("n", json!(20000)),
                ("route", to_value(Route::Excursion)),
                ("reference", to_value(Reference::SelfSimilar)),
                ("relative_grid", json!(true)),
                ("a_cut", json!(0.01)),
                // Brownian step half the bin width at every excursion height
                ("dt", json!(1e-8)),
                ("h", json!(2e-4)),
                ("ks", json!(0.03)),
            ],
        },
        (Experiment::Limit, "log") => Preset {
            mode: None,
            strings: vec![("m", "builtin=log1p"), ("k", "log")],
            params: vec![
                ("alpha", json!(1.0)),
                ("lambdas", json!([1e2, 1e3, 1e4])),
                ("n", json!(2000)),
                ("route", to_value(Route::Excursion)),
                ("reference", to_value(Reference::Meander)),
                ("relative_grid", json!(true)),
                ("a_cut", json!(0.1)),
                ("dt", json!(1e-6)),
                ("h", json!(2e-3)),
                ("trend", json!(true)),
            ],
        },
        _ => {
            return Err(format!(
                "unknown preset `{name}` for {e} (available: {})",
                preset_names(e).join(", ")
            ))
        }
    };
    Ok(p)
}

fn check_numbers(key: &str, v: &Value) -> Result<(), String> {
    match v {
        Value::Number(n) => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            let ok = if ZERO_OK.contains(&key) { x >= 0.0 } else { x > 0.0 };
            if ok {
                Ok(())
            } else {
                Err(format!("`{key}` must be {}, got {n}", if ZERO_OK.contains(&key) { "non-negative" } else { "positive" }))
            }
        }
        Value::Array(items) => items.iter().try_for_each(|i| check_numbers(key, i)),
        _ => Ok(()),
    }
}

fn deserialize<T: DeserializeOwned>(v: &Value) -> Result<T, String> {
    serde_json::from_value(v.clone()).map_err(|e| e.to_string())
}

fn typecheck(e: Experiment, mode: &str, v: &Value) -> Result<(), String> {
    match (e, mode) {
        (Experiment::Classify, _) => deserialize::<ClassifyParams>(v).map(drop),
        (Experiment::Tightness, _) => deserialize::<TightnessParams>(v).map(drop),
        (Experiment::Sample, "meander") => deserialize::<MeanderRunParams>(v).map(drop),
        (Experiment::Sample, _) => deserialize::<SampleParams>(v).map(drop),
        (Experiment::Timechange, "qm_formula") => deserialize::<QmParams>(v).map(drop),
        (Experiment::Timechange, _) => deserialize::<IdentityParams>(v).map(drop),
        (Experiment::Williams, _) => deserialize::<WilliamsParams>(v).map(drop),
        (Experiment::Dichotomy, _) => deserialize::<DichotomyParams>(v).map(drop),
        (Experiment::Converge, _) => deserialize::<ConvergenceParams>(v).map(drop),
        (Experiment::Limit, _) => deserialize::<LimitParams>(v).map(drop),
    }
}

/// Checks one `key = value` against the defaults of the experiment: the key
/// must exist, numbers must be positive and the value must have the right
/// type.
pub fn check_param(e: Experiment, mode: &str, defaults: &Value, key: &str, value: &Value) -> Result<(), String> {
    let obj = defaults.as_object().expect("parameters are an object");
    if !obj.contains_key(key) {
        let keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        return Err(format!("unknown parameter `{key}` for {e} (known: {})", keys.join(", ")));
    }
    check_numbers(key, value)?;
    let mut probe = defaults.clone();
    probe[key] = value.clone();
    typecheck(e, mode, &probe).map_err(|err| format!("bad value for `{key}`: {err}"))
}

/// A configuration with preset, defaults and overrides applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub experiment: Experiment,
    pub mode: String,
    pub seed: Option<u64>,
    pub strings: BTreeMap<String, String>,
    pub params: Value,
}

impl Resolved {
    /// The fully expanded config with no preset, worker count or output
    /// directory; its text is what the config hash covers.
    pub fn canonical(&self) -> RunConfig {
        let mut c = RunConfig::new(self.experiment);
        c.mode = (!self.mode.is_empty()).then(|| self.mode.clone());
        c.seed = self.seed;
        c.strings = self.strings.clone();
        c.params = self
            .params
            .as_object()
            .expect("parameters are an object")
            .iter()
            .filter(|(_, v)| !v.is_null())
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        c
    }

    pub fn get<T: DeserializeOwned>(&self) -> Result<T, String> {
        deserialize(&self.params)
    }
}

/// Layers defaults, preset, config values and `overrides` (in that order).
pub fn resolve(cfg: &RunConfig, overrides: &[(String, Value)]) -> Result<Resolved, String> {
    let mode = effective_mode(cfg)?;
    let mut params = default_params(cfg.experiment, &mode)?;
    let mut strings = default_strings(cfg.experiment, &mode);
    if let Some(name) = &cfg.preset {
        let p = preset(cfg.experiment, name)?;
        for (k, v) in p.strings {
            strings.insert(k.to_string(), v.to_string());
        }
        for (k, v) in p.params {
            params[k] = v;
        }
    }
    for (k, v) in &cfg.strings {
        strings.insert(k.clone(), v.clone());
    }
    let allowed = string_keys(cfg.experiment, &mode);
    if let Some(k) = strings.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(format!("string `{k}` is not used by {}", cfg.experiment));
    }
    for (k, v) in cfg.params.iter().chain(overrides.iter().map(|(k, v)| (k, v))) {
        check_param(cfg.experiment, &mode, &params, k, v)?;
        params[k.as_str()] = v.clone();
    }
    typecheck(cfg.experiment, &mode, &params)?;
    Ok(Resolved {
        experiment: cfg.experiment,
        mode,
        seed: cfg.seed,
        strings,
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_resolves() {
        for e in Experiment::ALL {
            for name in preset_names(e) {
                let mut c = RunConfig::new(e);
                c.preset = Some(name.to_string());
                let r = resolve(&c, &[]).unwrap_or_else(|err| panic!("{e}/{name}: {err}"));
                let canon = r.canonical();
                let again = resolve(&canon, &[]).unwrap();
                assert_eq!(again.params, r.params, "{e}/{name}");
                assert_eq!(again.strings, r.strings);
            }
        }
    }

    #[test]
    fn overrides_are_checked() {
        let c = RunConfig::new(Experiment::Williams);
        assert!(resolve(&c, &[("dt".into(), json!(-1))]).is_err());
        assert!(resolve(&c, &[("nope".into(), json!(1))]).is_err());
        let r = resolve(&c, &[("a".into(), json!(2.0))]).unwrap();
        assert_eq!(r.params["a"], json!(2.0));
    }

    #[test]
    fn zero_only_where_allowed() {
        let c = RunConfig::new(Experiment::Dichotomy);
        assert!(resolve(&c, &[("min_decade_growth".into(), json!(0.0))]).is_ok());
        assert!(resolve(&c, &[("dt".into(), json!(0.0))]).is_err());
    }
}
