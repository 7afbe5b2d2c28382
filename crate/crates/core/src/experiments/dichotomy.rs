//! Truncated clocks `A^{x_min}(τ_a)` of BES(3) first-passage paths: they
//! diverge as `x_min → 0` for strings outside `M` and settle for strings in it.

use serde::{Deserialize, Serialize};

use super::report::{Check, Op, Outcome, SeedRange, Table, TestReport, Verdict};
use super::runner::Runner;
use super::stats::EmpiricalSample;
use super::williams::bes3_pinned_occupation;
use crate::error::{Error, Result};
use crate::rng::SeedSpec;
use crate::strings::StringModel;
use crate::timechange::BinWeights;

const BLOCK_PATHS: u16 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    /// Estimates grow without bound as `x_min` decreases.
    Divergent,
    /// Estimates settle.
    Stable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyParams {
    pub expect: Expectation,
    /// Strictly decreasing truncation levels.
    pub x_mins: Vec<f64>,
    pub n: usize,
    /// First-passage level of the BES(3) paths.
    pub level: f64,
    pub dt: f64,
    pub h: f64,
    pub strict_fraction: f64,
    /// Smallest accepted growth of the median per decade of `x_min`.
    pub min_decade_growth: f64,
    /// Largest accepted relative change of the median over the last pair.
    pub stable_tol: f64,
    pub step_cap: usize,
}

impl Default for DichotomyParams {
    fn default() -> Self {
        DichotomyParams {
            expect: Expectation::Divergent,
            x_mins: vec![1e-2, 1e-3, 1e-4],
            n: 1000,
            level: 1.0,
            dt: 1e-6,
            h: 0.005,
            strict_fraction: 0.95,
            min_decade_growth: 0.0,
            stable_tol: 0.02,
            step_cap: 50_000_000,
        }
    }
}

pub fn dichotomy_experiment(
    m: &StringModel<f64>,
    p: &DichotomyParams,
    seed: u64,
    runner: &Runner,
) -> Result<Outcome> {
    if p.x_mins.len() < 2 || p.x_mins.windows(2).any(|w| !(w[1] < w[0])) || !(p.x_mins[p.x_mins.len() - 1] > 0.0) {
        return Err(Error::arg("x_mins must be positive and strictly decreasing"));
    }
    if !(p.level > 0.0 && p.dt > 0.0 && p.h > 0.0 && p.n > 0) {
        return Err(Error::arg("level, dt, h and n must be positive"));
    }
    let count = (p.level / p.h).ceil() as usize;
    let weights = p
        .x_mins
        .iter()
        .map(|&x| BinWeights::new(m, p.h, count, x).map(|w| w.weights))
        .collect::<Result<Vec<_>>>()?;
    let range = SeedRange::new(BLOCK_PATHS, p.n as u64);
    let rows = runner.map(0..p.n as u64, |i| {
        let mut rng = SeedSpec::in_block(seed, BLOCK_PATHS, i).rng();
        let occ = bes3_pinned_occupation(p.level, p.dt, p.h, p.step_cap, &mut rng)?;
        Ok(weights
            .iter()
            .map(|w| {
                occ.totals
                    .iter()
                    .zip(w)
                    .map(|(o, w)| o * w)
                    .sum::<f64>()
                    / (2.0 * p.h)
            })
            .collect::<Vec<f64>>())
    })?;

    let strict = rows
        .iter()
        .filter(|r| r.windows(2).all(|w| w[1] > w[0]))
        .count() as f64
        / p.n as f64;
    let k = p.x_mins.len();
    let medians = (0..k)
        .map(|j| Ok(EmpiricalSample::new("A", rows.iter().map(|r| r[j]).collect())?.median()))
        .collect::<Result<Vec<f64>>>()?;
    let slopes: Vec<f64> = (0..k - 1)
        .map(|j| (medians[j + 1] - medians[j]) / (p.x_mins[j] / p.x_mins[j + 1]).log10())
        .collect();
    let min_slope = slopes.iter().cloned().fold(f64::INFINITY, f64::min);
    let last_change = (medians[k - 1] - medians[k - 2]).abs() / medians[k - 2].abs();

    let mut report = TestReport::new("dichotomy", seed);
    report.params_from(p);
    report.param("string", m.label());
    report.seed_range("paths", range);
    report.stat("strict_increase_fraction", strict, p.n, &[range]);
    for (x, med) in p.x_mins.iter().zip(&medians) {
        report.stat(format!("median[x_min={x}]"), *med, p.n, &[range]);
    }
    for (j, s) in slopes.iter().enumerate() {
        report.stat(
            format!("median_growth_per_decade[{}..{}]", p.x_mins[j], p.x_mins[j + 1]),
            *s,
            p.n,
            &[range],
        );
    }
    report.stat("last_relative_change", last_change, p.n, &[range]);
    report.verdict = match p.expect {
        Expectation::Divergent => Verdict::from_checks(
            vec![
                Check::new("strict_increase_fraction", strict, Op::Ge, p.strict_fraction),
                Check::new("min_median_growth_per_decade", min_slope, Op::Gt, p.min_decade_growth),
            ],
            ("divergent", "not_divergent"),
        ),
        Expectation::Stable => Verdict::from_checks(
            vec![Check::new("last_relative_change", last_change, Op::Le, p.stable_tol)],
            ("stable", "not_stable"),
        ),
    };
    let header: Vec<String> = p.x_mins.iter().map(|x| format!("A(x_min={x})")).collect();
    let mut t = Table::new("dichotomy", &header.iter().map(String::as_str).collect::<Vec<_>>());
    t.rows = rows;
    Ok(Outcome {
        report,
        tables: vec![t],
    })
}
