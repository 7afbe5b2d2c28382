//! Experiment reports: JSON summaries plus raw-sample tables for CSV.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Consecutive streams `first..first + count` of one seed block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRange {
    pub block: u16,
    pub first: u64,
    pub count: u64,
}

impl SeedRange {
    pub fn new(block: u16, count: u64) -> Self {
        SeedRange { block, first: 0, count }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statistic {
    pub value: f64,
    /// 95% CLT half-width, for means.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    pub n: usize,
    pub seeds: Vec<SeedRange>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    Le,
    Lt,
    Ge,
    Gt,
}

impl Op {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Op::Le => value <= threshold,
            Op::Lt => value < threshold,
            Op::Ge => value >= threshold,
            Op::Gt => value > threshold,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Le => "<=",
            Op::Lt => "<",
            Op::Ge => ">=",
            Op::Gt => ">",
        }
    }
}

/// One thresholded comparison. Boolean checks use `1.0 >= 1.0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub op: Op,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, op: Op, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            op,
            threshold,
            pass: op.holds(value, threshold),
        }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Check::new(name, if ok { 1.0 } else { 0.0 }, Op::Ge, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub label: String,
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl Verdict {
    /// Passes iff every check passes; `labels` is `(on pass, on fail)`.
    pub fn from_checks(checks: Vec<Check>, labels: (&str, &str)) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Verdict {
            label: if pass { labels.0 } else { labels.1 }.to_string(),
            pass,
            checks,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub master_seed: u64,
    pub ranges: BTreeMap<String, SeedRange>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub code_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub id: String,
    pub params: BTreeMap<String, Value>,
    pub statistics: BTreeMap<String, Statistic>,
    pub verdict: Verdict,
    pub seeds: Seeds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl TestReport {
    pub fn new(id: impl Into<String>, master_seed: u64) -> Self {
        TestReport {
            id: id.into(),
            params: BTreeMap::new(),
            statistics: BTreeMap::new(),
            verdict: Verdict {
                label: "pending".into(),
                pass: false,
                checks: Vec::new(),
            },
            seeds: Seeds {
                master_seed,
                ranges: BTreeMap::new(),
            },
            provenance: None,
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        let v = serde_json::to_value(value).expect("parameters serialise");
        self.params.insert(key.to_string(), v);
        self
    }

    /// Adds every field of a serialisable parameter struct.
    pub fn params_from(&mut self, params: &impl Serialize) -> &mut Self {
        if let Value::Object(map) = serde_json::to_value(params).expect("parameters serialise") {
            self.params.extend(map);
        }
        self
    }

    pub fn seed_range(&mut self, role: &str, range: SeedRange) -> &mut Self {
        self.seeds.ranges.insert(role.to_string(), range);
        self
    }

    pub fn stat(&mut self, key: impl Into<String>, value: f64, n: usize, seeds: &[SeedRange]) -> &mut Self {
        self.statistics.insert(
            key.into(),
            Statistic {
                value,
                half_width: None,
                n,
                seeds: seeds.to_vec(),
            },
        );
        self
    }

    pub fn mean_stat(
        &mut self,
        key: impl Into<String>,
        mean: super::stats::MeanEstimate,
        seeds: &[SeedRange],
    ) -> &mut Self {
        self.statistics.insert(
            key.into(),
            Statistic {
                value: mean.mean,
                half_width: Some(mean.half_width),
                n: mean.n,
                seeds: seeds.to_vec(),
            },
        );
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialise");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("report JSON: {e}")))
    }

    /// Short human-readable summary.
    pub fn summary(&self) -> String {
        let mut out = format!("{}: {}\n", self.id, self.verdict.label);
        for c in &self.verdict.checks {
            out.push_str(&format!(
                "  [{}] {} = {} {} {}\n",
                if c.pass { "ok" } else { "FAIL" },
                c.name,
                c.value,
                c.op.symbol(),
                c.threshold
            ));
        }
        out
    }
}

/// Columns of raw samples written as CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Table {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// A one-column table.
    pub fn column(name: impl Into<String>, header: &str, values: &[f64]) -> Self {
        let mut t = Table::new(name, &[header]);
        t.rows = values.iter().map(|v| vec![*v]).collect();
        t
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Io(e.to_string());
        out.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            out.write_record(row.iter().map(|v| v.to_string())).map_err(io)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// A report plus its raw samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: TestReport,
    pub tables: Vec<Table>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_is_stable() {
        let mut r = TestReport::new("demo", 7);
        r.param("lambdas", [10.0, 100.0]).param("n", 5);
        r.stat("ks", 0.01, 5, &[SeedRange::new(1, 5)]);
        r.verdict = Verdict::from_checks(vec![Check::new("ks", 0.01, Op::Le, 0.02)], ("pass", "fail"));
        let text = r.to_json();
        let back = TestReport::from_json(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.to_json(), text);
        assert!(r.verdict.pass);
    }

    #[test]
    fn failing_check_fails_verdict() {
        let v = Verdict::from_checks(
            vec![Check::new("a", 1.0, Op::Lt, 1.0), Check::flag("b", true)],
            ("ok", "bad"),
        );
        assert!(!v.pass);
        assert_eq!(v.label, "bad");
    }

    #[test]
    fn table_csv() {
        let mut t = Table::new("x", &["a", "b"]);
        t.push(vec![1.0, 0.5]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n1,0.5\n");
    }
}
