//! Dispatch of a resolved configuration and the artifacts it leaves on disk.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use excursion_core::error::Error as CoreError;
use excursion_core::experiments::families::{inverse_string, linear_perturbation, log1p_family, log1p_string, spike_family};
use excursion_core::experiments::{
    conditional_limit_experiment, converse_tightness_check, convergence_experiment, dichotomy_experiment,
    identity_time_change_check, meander_report, qm_formula_check, williams_and_raylaw_suite, Check, ConverseParams,
    MeanEstimate, Outcome, Provenance, Runner, SeedRange, Statistic, Table, TestReport, Verdict,
};
use excursion_core::rng::SeedSpec;
use excursion_core::samplers::GridPolicy;
use excursion_core::strings::{classify, make_power_string, parse_string_spec, Flag, SlowlyVarying, StringModel};
use excursion_core::timechange::{BinWidth, Membership, PipelineConfig, TimeChanger};
use sha2::{Digest, Sha256};

use crate::config::Experiment;
use crate::params::{ClassifyParams, MeanderRunParams, Resolved, SampleParams, TightnessParams};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

const BLOCK_SAMPLE: u16 = 70;

/// Failure categories and their exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Failure {
    Verdict,
    Input,
    Numerical,
    Io,
}

impl Failure {
    pub fn code(self) -> i32 {
        match self {
            Failure::Verdict => 2,
            Failure::Input => 3,
            Failure::Numerical => 4,
            Failure::Io => 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunError {
    pub kind: Failure,
    pub message: String,
}

impl RunError {
    pub fn input(message: impl Into<String>) -> Self {
        RunError {
            kind: Failure::Input,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        RunError {
            kind: Failure::Io,
            message: message.into(),
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for RunError {}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        let kind = match &e {
            CoreError::Io(_) => Failure::Io,
            CoreError::InvalidArgument(_)
            | CoreError::InvalidString(_)
            | CoreError::NotTimeChangeable(_)
            | CoreError::Parse(_) => Failure::Input,
            CoreError::Quadrature { .. }
            | CoreError::Bracket(_)
            | CoreError::StepCap { .. }
            | CoreError::OpenEnded(_)
            | CoreError::AcceptanceFloor { .. } => Failure::Numerical,
        };
        RunError {
            kind,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::io(e.to_string())
    }
}

type Result<T> = std::result::Result<T, RunError>;

/// `builtin=inverse` (`−1/x`), `builtin=log1p` (`log(1+x)`) or the string
/// specification grammar of the core crate.
pub fn string_from_spec(spec: &str) -> Result<StringModel<f64>> {
    match spec.trim() {
        "builtin=inverse" => Ok(inverse_string()?),
        "builtin=log1p" => Ok(log1p_string()?),
        other if other.starts_with("builtin=") => Err(RunError::input(format!(
            "unknown builtin string `{other}` (builtins: inverse, log1p)"
        ))),
        other => Ok(parse_string_spec(other, None)?),
    }
}

pub fn slowly_varying(name: &str) -> Result<SlowlyVarying<f64>> {
    match name.trim() {
        "one" => Ok(SlowlyVarying::one()),
        "log" => Ok(SlowlyVarying::log()),
        other => Err(RunError::input(format!("unknown slowly varying function `{other}` (one, log)"))),
    }
}

type Family = Box<dyn Fn(f64) -> excursion_core::error::Result<StringModel<f64>> + Sync>;

/// A named family `λ ↦ m_λ` and its limit string.
pub fn family(name: &str, m: Option<&StringModel<f64>>) -> Result<(Family, StringModel<f64>)> {
    let half = || make_power_string(0.5);
    Ok(match name {
        "linear" => (Box::new(linear_perturbation), half()?),
        "log1p" => (Box::new(log1p_family), make_power_string(1.0)?),
        "spike" => (Box::new(spike_family), half()?),
        "constant" => {
            let m = m
                .ok_or_else(|| RunError::input("family `constant` needs a string `m`"))?
                .clone();
            let limit = m.clone();
            (Box::new(move |_| Ok(m.clone())), limit)
        }
        other => {
            return Err(RunError::input(format!(
                "unknown family `{other}` (linear, log1p, spike, constant)"
            )))
        }
    })
}

fn string_param(r: &Resolved, key: &str) -> Result<Option<StringModel<f64>>> {
    r.strings.get(key).map(|s| string_from_spec(s)).transpose()
}

fn required_string(r: &Resolved, key: &str) -> Result<StringModel<f64>> {
    string_param(r, key)?.ok_or_else(|| RunError::input(format!("missing string `{key}`")))
}

fn params<T: serde::de::DeserializeOwned>(r: &Resolved) -> Result<T> {
    r.get().map_err(RunError::input)
}

fn seed(r: &Resolved) -> Result<u64> {
    r.seed
        .ok_or_else(|| RunError::input(format!("--seed is required for {}", r.experiment)))
}

fn flag_value(f: Flag) -> f64 {
    match f {
        Flag::True => 1.0,
        Flag::False => 0.0,
        Flag::Undetermined => 0.5,
    }
}

fn classify_run(r: &Resolved) -> Result<Outcome> {
    let p: ClassifyParams = params(r)?;
    let alphas = p.alpha.map(|a| vec![a]).unwrap_or(p.alphas.clone());
    let mut cases: Vec<(String, StringModel<f64>, Option<[bool; 4]>)> = Vec::new();
    for a in &alphas {
        // closed-form table for power strings
        cases.push((format!("alpha={a}"), make_power_string(*a)?, Some([*a < 1.0, *a < 2.0, true, true])));
    }
    if p.inverse {
        cases.push(("inverse".into(), inverse_string()?, Some([false, false, false, false])));
    }
    if let Some(m) = string_param(r, "m")? {
        cases.push((m.label().to_string(), m, None));
    }
    let mut report = TestReport::new("classify", 0);
    report.params_from(&p);
    // power strings carry their alpha, other cases NaN
    let mut table = Table::new("classes", &["alpha", "in_m0", "in_m1", "in_ml", "in_m"]);
    let mut checks = Vec::new();
    let names = ["in_m0", "in_m1", "in_ml", "in_m"];
    for (i, (label, m, expect)) in cases.iter().enumerate() {
        let c = classify(m)?;
        let flags = c.flags();
        let mut row = vec![alphas.get(i).copied().unwrap_or(f64::NAN)];
        for (k, f) in flags.iter().enumerate() {
            report.stat(format!("{label}.{}", names[k]), flag_value(*f), 1, &[]);
            row.push(flag_value(*f));
        }
        table.push(row);
        if let Some(e) = expect {
            // m = −1/x is only asserted outside M
            let which: &[usize] = if label == "inverse" { &[3] } else { &[0, 1, 2, 3] };
            for &k in which {
                let ok = flags[k] == if e[k] { Flag::True } else { Flag::False };
                checks.push(Check::flag(format!("{label}.{}", names[k]), ok));
            }
        }
    }
    report.verdict = Verdict::from_checks(checks, ("pass", "fail"));
    Ok(Outcome {
        report,
        tables: vec![table],
    })
}

/// The classification rows as text, one per case.
pub fn class_table(report: &TestReport) -> String {
    let mut rows: Vec<(String, [f64; 4])> = Vec::new();
    for (k, s) in &report.statistics {
        if let Some((case, flag)) = k.rsplit_once('.') {
            let idx = match flag {
                "in_m0" => 0,
                "in_m1" => 1,
                "in_ml" => 2,
                "in_m" => 3,
                _ => continue,
            };
            match rows.iter_mut().find(|(c, _)| c == case) {
                Some((_, v)) => v[idx] = s.value,
                None => {
                    let mut v = [f64::NAN; 4];
                    v[idx] = s.value;
                    rows.push((case.to_string(), v));
                }
            }
        }
    }
    let key = |case: &str| case.strip_prefix("alpha=").and_then(|a| a.parse::<f64>().ok()).unwrap_or(f64::INFINITY);
    rows.sort_by(|a, b| key(&a.0).total_cmp(&key(&b.0)));
    let show = |v: f64| match v {
        1.0 => "true",
        0.0 => "false",
        _ => "?",
    };
    let mut s = format!("{:<14} {:>6} {:>6} {:>6} {:>6}\n", "string", "M0", "M1", "ML", "M");
    for (case, v) in rows {
        s += &format!(
            "{:<14} {:>6} {:>6} {:>6} {:>6}\n",
            case,
            show(v[0]),
            show(v[1]),
            show(v[2]),
            show(v[3])
        );
    }
    s
}

fn tightness_run(r: &Resolved) -> Result<Outcome> {
    let p: TightnessParams = params(r)?;
    let m = string_param(r, "m")?;
    let (fam, _) = family(&p.family, m.as_ref())?;
    let cp = ConverseParams {
        family: p.family.clone(),
        lambdas: p.lambdas.clone(),
        deltas: p.deltas.clone(),
    };
    Ok(converse_tightness_check(fam, &cp, p.convergence_observed)?)
}

fn sample_run(r: &Resolved, runner: &Runner) -> Result<Outcome> {
    let seed = seed(r)?;
    if r.mode == "meander" {
        let p: MeanderRunParams = params(r)?;
        return Ok(meander_report(p.alpha, &p.meander, p.ks, seed, runner)?);
    }
    let p: SampleParams = params(r)?;
    let m = string_param(r, "m")?;
    let cfg = PipelineConfig {
        dt: p.dt,
        new_dt: p.new_dt,
        h: BinWidth::RelativeToMax(p.h_rel),
        t_max: p.t_max,
        grid: GridPolicy::Fixed,
        step_cap: p.step_cap,
        ..PipelineConfig::default()
    };
    let changer = m.map(|m| TimeChanger::new(m, cfg, Membership::Verify)).transpose()?;
    let mode = r.mode.as_str();
    let paths = runner.map(0..p.n as u64, |i| {
        let mut rng = SeedSpec::in_block(seed, BLOCK_SAMPLE, i).rng();
        use excursion_core::samplers::*;
        Ok(match (mode, &changer) {
            ("bm", None) => sample_bm_absorbed_with(p.x, p.dt, p.t_max, &mut rng)?,
            ("bes3", None) => sample_bes3_with(p.x, p.dt, p.t_max, &mut rng)?,
            ("excursion", None) => sample_excursion_parts_with(p.a, p.dt, GridPolicy::Fixed, p.step_cap, &mut rng)?.join()?,
            ("bm" | "qm", Some(tc)) => tc.sample_qm_with(p.x, &mut rng)?.path,
            ("bes3", Some(tc)) => tc.sample_pm_with(p.x, &mut rng)?.path,
            ("excursion", Some(tc)) => tc.sample_excursion_nm_with(p.a, &mut rng)?.path,
            _ => return Err(CoreError::InvalidArgument(format!("mode {mode} needs a string m"))),
        })
    })?;
    let mut report = TestReport::new(format!("sample_{mode}"), seed);
    report.params_from(&p);
    let range = SeedRange::new(BLOCK_SAMPLE, p.n as u64);
    report.seed_range("paths", range);
    let maxima: Vec<f64> = paths.iter().map(|q| q.max()).collect();
    let durations: Vec<f64> = paths.iter().map(|q| q.duration()).collect();
    report.mean_stat("max", MeanEstimate::from_values(&maxima), &[range]);
    report.mean_stat("duration", MeanEstimate::from_values(&durations), &[range]);
    let absorbed = paths.iter().filter(|q| !q.is_open_ended()).count();
    report.stat("absorbed_fraction", absorbed as f64 / p.n as f64, p.n, &[range]);
    report.verdict = Verdict::from_checks(vec![], ("pass", "fail"));
    let mut t = Table::new("paths", &["path", "t", "value"]);
    for (i, q) in paths.iter().enumerate() {
        for (k, v) in q.values().iter().enumerate() {
            t.push(vec![i as f64, q.time_of(k), *v]);
        }
    }
    Ok(Outcome {
        report,
        tables: vec![t],
    })
}

fn timechange_run(r: &Resolved, runner: &Runner) -> Result<Outcome> {
    let seed = seed(r)?;
    if r.mode == "qm_formula" {
        let m = required_string(r, "m")?;
        return Ok(qm_formula_check(&m, &params(r)?, seed, runner)?);
    }
    Ok(identity_time_change_check(&params(r)?, seed, runner)?)
}

fn converge_run(r: &Resolved, runner: &Runner) -> Result<Outcome> {
    let p: excursion_core::experiments::ConvergenceParams = params(r)?;
    let m = string_param(r, "m")?;
    let (fam, limit) = family(&p.family, m.as_ref())?;
    Ok(convergence_experiment(fam, &limit, &p, seed(r)?, runner)?)
}

fn limit_run(r: &Resolved, runner: &Runner) -> Result<Outcome> {
    let m = required_string(r, "m")?;
    let k = slowly_varying(r.strings.get("k").map(String::as_str).unwrap_or("one"))?;
    Ok(conditional_limit_experiment(&m, &k, &params(r)?, seed(r)?, runner)?)
}

/// Runs the experiment. The report carries the config hash and code version;
/// the worker count only affects scheduling.
pub fn execute(r: &Resolved, workers: usize) -> Result<Outcome> {
    let runner = Runner::new(workers)?;
    if r.experiment.is_stochastic() {
        seed(r)?;
    }
    let mut out = match r.experiment {
        Experiment::Classify => classify_run(r)?,
        Experiment::Tightness => tightness_run(r)?,
        Experiment::Sample => sample_run(r, &runner)?,
        Experiment::Timechange => timechange_run(r, &runner)?,
        Experiment::Williams => williams_and_raylaw_suite(&params(r)?, seed(r)?, &runner)?,
        Experiment::Dichotomy => {
            let m = required_string(r, "m")?;
            dichotomy_experiment(&m, &params(r)?, seed(r)?, &runner)?
        }
        Experiment::Converge => converge_run(r, &runner)?,
        Experiment::Limit => limit_run(r, &runner)?,
    };
    for (k, v) in &r.strings {
        out.report.param(&format!("strings.{k}"), v);
    }
    out.report.provenance = Some(Provenance {
        config_hash: config_hash(r),
        code_version: CODE_VERSION.to_string(),
    });
    Ok(out)
}

/// SHA-256 of the canonical config text.
pub fn config_hash(r: &Resolved) -> String {
    let digest = Sha256::digest(r.canonical().to_text().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `report.json`, `config.txt`, `summary.txt` and one CSV per table.
/// CSVs start with a `#` line naming the config hash and master seed.
pub fn write_artifacts(dir: &Path, r: &Resolved, out: &Outcome) -> Result<Vec<PathBuf>> {
    let io = |p: &Path, e: std::io::Error| RunError::io(format!("{}: {e}", p.display()));
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: &str, bytes: &[u8]| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| io(&path, e))?;
        written.push(path);
        Ok(())
    };
    put("report.json", out.report.to_json().as_bytes())?;
    put("config.txt", r.canonical().to_text().as_bytes())?;
    put("summary.txt", summary(out).as_bytes())?;
    let hash = config_hash(r);
    for t in &out.tables {
        let mut buf = Vec::new();
        writeln!(buf, "# config_hash={hash} master_seed={}", out.report.seeds.master_seed)?;
        t.write_csv(&mut buf)?;
        put(&format!("{}.csv", t.name), &buf)?;
    }
    Ok(written)
}

/// Human-readable summary; classification runs get their table as well.
pub fn summary(out: &Outcome) -> String {
    let mut s = String::new();
    if out.report.id == "classify" {
        s += &class_table(&out.report);
    }
    s += &out.report.summary();
    s
}

/// Pretty-prints a stored report.
pub fn pretty_report(text: &str) -> Result<String> {
    let report = TestReport::from_json(text)?;
    let mut s = format!("{} (seed {})\n", report.id, report.seeds.master_seed);
    if let Some(p) = &report.provenance {
        s += &format!("config {} / version {}\n", p.config_hash, p.code_version);
    }
    s += "parameters:\n";
    for (k, v) in &report.params {
        s += &format!("  {k} = {v}\n");
    }
    s += "statistics:\n";
    for (k, st) in &report.statistics {
        s += &format!("  {k} = {}\n", fmt_stat(st));
    }
    if report.id == "classify" {
        s += &class_table(&report);
    }
    s += &report.summary();
    Ok(s)
}

fn fmt_stat(s: &Statistic) -> String {
    match s.half_width {
        Some(h) => format!("{} ± {} (n = {})", s.value, h, s.n),
        None => format!("{} (n = {})", s.value, s.n),
    }
}

pub fn exit_code(report: &TestReport) -> i32 {
    if report.verdict.pass {
        0
    } else {
        Failure::Verdict.code()
    }
}
