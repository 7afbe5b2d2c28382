//! Acceptance criteria, run end to end through the binary. Prints one
//! PASS/FAIL line per criterion and exits nonzero when an outcome differs
//! from its expectation.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use serde_json::Value;

const SEED: &str = "20261015";

/// Criteria whose FAIL is the honest outcome at the specified sizes; see
/// the README.
const EXPECTED_FAIL: &[(u32, &str)] = &[
    (5, "log(1+x) family: e-metric at lambda = 1e4 stays near 0.29 with a = 1"),
    (6, "m^(3) truncated estimates still move ~8% between 1e-3 and 1e-4"),
];

struct Run {
    args: Vec<String>,
    code: i32,
    json: String,
    report: Value,
    elapsed: Duration,
}

fn forge(args: &[&str], workers: usize, dir: &Path) -> Run {
    let out = dir.join(args.join("_").replace(['-', ' '], ""));
    let mut all: Vec<String> = args.iter().map(|s| s.to_string()).collect();
    all.extend(["--seed".into(), SEED.into(), "--workers".into(), workers.to_string()]);
    all.extend(["--out".into(), out.display().to_string()]);
    let t = Instant::now();
    let o = Command::new(env!("CARGO_BIN_EXE_excursion-forge"))
        .args(&all)
        .output()
        .expect("binary runs");
    let elapsed = t.elapsed();
    let json = std::fs::read_to_string(out.join("report.json")).unwrap_or_else(|e| {
        panic!(
            "no report for {all:?}: {e}\nstdout:\n{}\nstderr:\n{}",
            String::from_utf8_lossy(&o.stdout),
            String::from_utf8_lossy(&o.stderr)
        )
    });
    let report = serde_json::from_str(&json).expect("report parses");
    Run {
        args: all,
        code: o.status.code().unwrap_or(-1),
        json,
        report,
        elapsed,
    }
}

fn checks(r: &Run) -> Vec<(String, bool, String)> {
    r.report["verdict"]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| {
            let name = c["name"].as_str().unwrap().to_string();
            let line = format!("{} = {} {} {}", name, c["value"], op(&c["op"]), c["threshold"]);
            (name, c["pass"].as_bool().unwrap(), line)
        })
        .collect()
}

fn op(v: &Value) -> &'static str {
    match v.as_str().unwrap_or("") {
        "le" => "<=",
        "lt" => "<",
        "ge" => ">=",
        _ => ">",
    }
}

/// Passes when every selected check passes; returns the failing lines.
fn judge(runs: &[&Run], select: impl Fn(&str) -> bool) -> (bool, Vec<String>) {
    let mut failing = Vec::new();
    let mut any = false;
    for r in runs {
        for (name, pass, line) in checks(r) {
            if select(&name) {
                any = true;
                if !pass {
                    failing.push(line);
                }
            }
        }
    }
    (any && failing.is_empty(), failing)
}

struct Criterion {
    id: u32,
    title: &'static str,
    limit: Duration,
    runs: Vec<Vec<&'static str>>,
}

fn main() {
    let mins = |m: u64| Duration::from_secs(60 * m);
    let criteria = vec![
        Criterion {
            id: 1,
            title: "classification table",
            limit: Duration::from_secs(10),
            runs: vec![vec!["classify", "--preset", "example-table"]],
        },
        Criterion {
            id: 2,
            title: "identity time change",
            limit: mins(2),
            runs: vec![vec!["timechange", "--preset", "identity"]],
        },
        Criterion {
            id: 3,
            title: "Williams maximum law",
            limit: mins(5),
            runs: vec![vec!["williams", "--preset", "suite"]],
        },
        Criterion {
            id: 4,
            title: "Ray-Knight and pinned local time",
            limit: mins(10),
            runs: vec![],
        },
        Criterion {
            id: 5,
            title: "convergence of time-changed excursions",
            limit: mins(10),
            runs: vec![vec!["converge", "--preset", "linear"], vec!["converge", "--preset", "log1p"]],
        },
        Criterion {
            id: 6,
            title: "finiteness dichotomy",
            limit: mins(10),
            runs: vec![vec!["dichotomy", "--preset", "inverse"], vec!["dichotomy", "--preset", "power3"]],
        },
        Criterion {
            id: 7,
            title: "Q_m formula",
            limit: mins(15),
            runs: vec![vec!["timechange", "--preset", "qm-formula"]],
        },
        Criterion {
            id: 8,
            title: "conditional limit, Brownian meander",
            limit: mins(30),
            runs: vec![vec!["limit", "--preset", "bm-meander"]],
        },
        Criterion {
            id: 9,
            title: "conditional limit, self-similar case",
            limit: mins(30),
            runs: vec![vec!["limit", "--preset", "self-similar"]],
        },
    ];
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("workers1");
    let second = dir.path().join("workers2");
    let mut results: Vec<(u32, bool, String)> = Vec::new();
    let mut all_runs: Vec<(Run, Duration)> = Vec::new();
    let mut williams: Option<usize> = None;
    for c in &criteria {
        let start = all_runs.len();
        for args in &c.runs {
            let r = forge(args, 1, &first);
            let limit = c.limit;
            all_runs.push((r, limit));
        }
        if c.id == 3 {
            williams = Some(start);
        }
        let runs: Vec<&Run> = if c.id == 4 {
            vec![&all_runs[williams.unwrap()].0]
        } else {
            all_runs[start..].iter().map(|(r, _)| r).collect()
        };
        let elapsed: Duration = runs.iter().map(|r| r.elapsed).sum();
        let (pass, failing) = match c.id {
            3 => judge(&runs, |n| n.starts_with("max_law")),
            4 => judge(&runs, |n| n.starts_with("ray_knight") || n.starts_with("pinned")),
            _ => judge(&runs, |_| true),
        };
        let in_time = elapsed <= c.limit;
        let mut detail = format!("{:.1}s of {}s", elapsed.as_secs_f64(), c.limit.as_secs());
        if !in_time {
            detail += ", over time";
        }
        for f in &failing {
            detail += &format!("; {f}");
        }
        results.push((c.id, pass && in_time, format!("{} ({detail})", c.title)));
    }

    // criterion 10: same seed, different worker count, byte-identical JSON
    let mut identical = true;
    let mut detail = String::new();
    let mut slowest = 0.0f64;
    for (r, limit) in &all_runs {
        let args: Vec<&str> = r.args.iter().take_while(|a| *a != "--seed").map(String::as_str).collect();
        let again = forge(&args, 2, &second);
        slowest = slowest.max(again.elapsed.as_secs_f64() / limit.as_secs_f64());
        if again.json != r.json || again.code != r.code {
            identical = false;
            detail += &format!("; {} differs", args.join(" "));
        }
    }
    results.push((
        10,
        identical && slowest <= 1.0,
        format!("reproducibility across worker counts ({} reports{detail})", all_runs.len()),
    ));

    let mut unexpected = 0;
    for (id, pass, text) in &results {
        let expected_fail = EXPECTED_FAIL.iter().find(|(e, _)| e == id);
        let verdict = if *pass { "PASS" } else { "FAIL" };
        let note = match (expected_fail, pass) {
            (Some((_, why)), false) => format!(" [expected: {why}]"),
            (Some(_), true) => {
                unexpected += 1;
                " [unexpected PASS]".to_string()
            }
            (None, false) => {
                unexpected += 1;
                String::new()
            }
            (None, true) => String::new(),
        };
        println!("criterion {id}: {verdict} {text}{note}");
    }
    for (r, _) in &all_runs {
        let want = if r.report["verdict"]["pass"].as_bool().unwrap() { 0 } else { 2 };
        if r.code != want {
            println!("exit code {} for {:?}, expected {want}", r.code, r.args);
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        println!("{unexpected} outcome(s) differ from expectations");
        std::process::exit(1);
    }
}
