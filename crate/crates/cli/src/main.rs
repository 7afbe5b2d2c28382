use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use excursion_forge::config::{parse_value, Experiment, RunConfig};
use excursion_forge::{execute, exit_code, parse_config, pretty_report, resolve, write_artifacts, Failure, RunError};
use serde_json::Value;

/// Time-changed Brownian excursions: classification, sampling and
/// Monte Carlo checks.
#[derive(Parser)]
#[command(name = "excursion-forge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Class membership of strings (M0, M1, ML, M).
    Classify(RunArgs),
    /// Tightness integrals of a family of strings.
    Tightness(RunArgs),
    /// Sample paths to CSV.
    Sample(RunArgs),
    /// Identity time change and the Q_m formula.
    Timechange(RunArgs),
    /// Maximum law, Ray-Knight and pinned local time suite.
    Williams(RunArgs),
    /// Truncated clock estimates of strings inside and outside M.
    Dichotomy(RunArgs),
    /// Coupled convergence of time-changed excursions.
    Converge(RunArgs),
    /// Conditional limit towards the Bessel meander.
    Limit(RunArgs),
    /// Pretty-print a report JSON.
    Report {
        file: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Config file in the `[section]` / `key = value` grammar.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    /// Master seed; required by every stochastic subcommand.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Parameter override `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// String specification `name=spec`, e.g. `m=kind=power alpha=3`.
    #[arg(long = "string", value_name = "NAME=SPEC")]
    strings: Vec<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    x0: Option<f64>,
    /// Do not write artifacts.
    #[arg(long)]
    no_write: bool,
}

/// Shorthand flags and the parameter keys they may set, first match wins.
const SHORTHANDS: &[(&str, &[&str])] = &[
    ("alpha", &["alpha"]),
    ("a", &["a", "a_cut"]),
    ("n", &["n", "n_max_law"]),
    ("dt", &["dt"]),
    ("h", &["h", "h_rel"]),
    ("x0", &["x0", "x"]),
];

fn build(experiment: Experiment, args: &RunArgs) -> Result<(RunConfig, Vec<(String, Value)>), RunError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| RunError::io(format!("{}: {e}", path.display())))?;
            let c = parse_config(&text).map_err(|e| RunError::input(format!("{}: {e}", path.display())))?;
            if c.experiment != experiment {
                return Err(RunError::input(format!(
                    "config is for `{}`, not `{experiment}`",
                    c.experiment
                )));
            }
            c
        }
        None => RunConfig::new(experiment),
    };
    if args.preset.is_some() {
        cfg.preset = args.preset.clone();
    }
    if args.mode.is_some() {
        cfg.mode = args.mode.clone();
    }
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if args.out.is_some() {
        cfg.out = args.out.clone();
    }
    for s in &args.strings {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| RunError::input(format!("--string expects NAME=SPEC, got `{s}`")))?;
        cfg.strings.insert(k.trim().to_string(), v.trim().to_string());
    }
    let mut overrides = Vec::new();
    for s in &args.set {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| RunError::input(format!("--set expects KEY=VALUE, got `{s}`")))?;
        overrides.push((k.trim().to_string(), parse_value(v.trim())));
    }
    let mode = excursion_forge::params::effective_mode(&cfg).map_err(RunError::input)?;
    let defaults = excursion_forge::params::default_params(experiment, &mode).map_err(RunError::input)?;
    let flags: [(&str, Option<Value>); 6] = [
        ("alpha", args.alpha.map(Value::from)),
        ("a", args.a.map(Value::from)),
        ("n", args.n.map(Value::from)),
        ("dt", args.dt.map(Value::from)),
        ("h", args.h.map(Value::from)),
        ("x0", args.x0.map(Value::from)),
    ];
    for (flag, value) in flags {
        let Some(value) = value else { continue };
        let keys = SHORTHANDS.iter().find(|(f, _)| *f == flag).map(|(_, k)| *k).unwrap_or(&[]);
        let key = keys
            .iter()
            .find(|k| defaults.get(**k).is_some())
            .ok_or_else(|| RunError::input(format!("--{flag} does not apply to {experiment}")))?;
        overrides.push((key.to_string(), value));
    }
    Ok((cfg, overrides))
}

fn run(experiment: Experiment, args: &RunArgs) -> Result<i32, RunError> {
    let (cfg, overrides) = build(experiment, args)?;
    let resolved = resolve(&cfg, &overrides).map_err(RunError::input)?;
    let out = execute(&resolved, cfg.workers)?;
    print!("{}", excursion_forge::run::summary(&out));
    if !args.no_write {
        let dir = cfg.out.clone().unwrap_or_else(|| {
            let mut name = experiment.name().to_string();
            if let Some(p) = &cfg.preset {
                name = format!("{name}-{p}");
            }
            PathBuf::from("excursion-out").join(name)
        });
        write_artifacts(&dir, &resolved, &out)?;
        println!("artifacts in {}", dir.display());
    }
    Ok(exit_code(&out.report))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { Failure::Input.code() } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let result = match &cli.command {
        Command::Report { file } => std::fs::read_to_string(file)
            .map_err(|e| RunError::io(format!("{}: {e}", file.display())))
            .and_then(|text| pretty_report(&text))
            .map(|s| {
                print!("{s}");
                0
            }),
        Command::Classify(a) => run(Experiment::Classify, a),
        Command::Tightness(a) => run(Experiment::Tightness, a),
        Command::Sample(a) => run(Experiment::Sample, a),
        Command::Timechange(a) => run(Experiment::Timechange, a),
        Command::Williams(a) => run(Experiment::Williams, a),
        Command::Dichotomy(a) => run(Experiment::Dichotomy, a),
        Command::Converge(a) => run(Experiment::Converge, a),
        Command::Limit(a) => run(Experiment::Limit, a),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind.code() as u8)
        }
    }
}
