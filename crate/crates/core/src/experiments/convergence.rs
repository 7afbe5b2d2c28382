//! Coupled convergence of time-changed excursions along a string family, and
//! the tightness integral that is close to necessary for it.

use serde::{Deserialize, Serialize};

use super::report::{Check, Op, Outcome, SeedRange, Table, TestReport, Verdict};
use super::runner::Runner;
use super::stats::{EmpiricalSample, MeanEstimate};
use crate::error::{Error, Result};
use crate::localtime::{occupation_field, LocalTimeField};
use crate::path::SampledPath;
use crate::rng::SeedSpec;
use crate::samplers::{sample_excursion_parts_with, GridPolicy};
use crate::strings::{tightness_report, ClassKind, StringModel, TightnessVerdict};
use crate::timechange::{additive_functional_with, check_time_changeable, BinWeights, MonotoneFunctional};

const BLOCK_SOURCE: u16 = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceParams {
    pub family: String,
    pub lambdas: Vec<f64>,
    pub a: f64,
    pub n: usize,
    pub dt: f64,
    pub new_dt: f64,
    /// Bin width as a fraction of each excursion's maximum.
    pub h_rel: f64,
    /// Excursions with `M` above this level get a proportionally coarser grid.
    pub grid_reference: f64,
    pub a_threshold: f64,
    pub e_threshold: f64,
    /// Check `mean sup|A_λ − A| = mean(ζ)/(2λ)` (the `m + x/λ` family).
    pub linear_identity: bool,
    /// Check the final means against `a_threshold` and `e_threshold`.
    pub check_thresholds: bool,
    pub linear_identity_tol: f64,
    pub step_cap: usize,
}

impl Default for ConvergenceParams {
    fn default() -> Self {
        ConvergenceParams {
            family: "log1p".into(),
            lambdas: vec![10.0, 100.0, 1e3, 1e4],
            a: 1.0,
            n: 200,
            dt: 1e-4,
            new_dt: 1e-4,
            h_rel: 0.005,
            grid_reference: 10.0,
            a_threshold: 0.05,
            e_threshold: 0.05,
            linear_identity: false,
            check_thresholds: true,
            linear_identity_tol: 1e-10,
            step_cap: 50_000_000,
        }
    }
}

/// `sup_t |A_1(t) − A_2(t)|` accumulated from the weight differences with
/// compensated summation, so that small differences keep full precision.
pub fn clock_sup_difference(field: &LocalTimeField<f64>, w1: &[f64], w2: &[f64]) -> f64 {
    let two_h = 2.0 * field.bins().h;
    let (mut sum, mut comp, mut sup) = (0.0f64, 0.0f64, 0.0f64);
    for (i, j) in field.attributed_bins().enumerate() {
        let term = field.step_duration(i) * (w1[j] - w2[j]) / two_h;
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        sup = sup.max(sum.abs());
    }
    sup
}

/// `sup_s |e(A_1⁻¹(s)) − e(A_2⁻¹(s))|` on the grid `s = k·new_dt`.
pub fn path_sup_difference(
    e: &SampledPath<f64>,
    a1: &MonotoneFunctional<f64>,
    a2: &MonotoneFunctional<f64>,
    new_dt: f64,
) -> f64 {
    let (i1, i2) = (a1.inverse(), a2.inverse());
    let end = a1.terminal().max(a2.terminal());
    let mut sup = 0.0f64;
    let mut k = 0usize;
    loop {
        let s = k as f64 * new_dt;
        let d = (e.value_at_time(i1.eval(s)) - e.value_at_time(i2.eval(s))).abs();
        sup = sup.max(d);
        if s >= end {
            return sup;
        }
        k += 1;
    }
}

/// Strictly decreasing, or identically zero from some point on.
fn decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0] || (w[1] == 0.0 && w[0] == 0.0))
}

/// For `n` excursions under `n(· | M > a)`, each shared by every `λ`, the
/// per-path sup distances between the clocks and between the time-changed
/// paths of `m_λ` and of `m_limit`.
pub fn convergence_experiment<F>(
    family: F,
    m_limit: &StringModel<f64>,
    p: &ConvergenceParams,
    seed: u64,
    runner: &Runner,
) -> Result<Outcome>
where
    F: Fn(f64) -> Result<StringModel<f64>>,
{
    if !(p.a > 0.0 && p.dt > 0.0 && p.new_dt > 0.0 && p.h_rel > 0.0 && p.n > 0) {
        return Err(Error::arg("a, dt, new_dt, h_rel and n must be positive"));
    }
    if p.lambdas.is_empty() || p.lambdas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::arg("lambdas must be nonempty and strictly increasing"));
    }
    check_time_changeable(m_limit)?;
    let members = p
        .lambdas
        .iter()
        .map(|&l| {
            let m = family(l)?;
            check_time_changeable(&m)
                .map_err(|e| Error::NotTimeChangeable(format!("family member at lambda = {l}: {e}")))?;
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    let grid = GridPolicy::ScaleWithMax {
        reference: p.grid_reference,
    };
    let nl = p.lambdas.len();
    let range = SeedRange::new(BLOCK_SOURCE, p.n as u64);

    // row: zeta, then A-sup per λ, then e-sup per λ
    let rows = runner.map(0..p.n as u64, |i| {
        let mut rng = SeedSpec::in_block(seed, BLOCK_SOURCE, i).rng();
        let e = sample_excursion_parts_with(p.a, p.dt, grid, p.step_cap, &mut rng)?.join()?;
        let h = p.h_rel * e.max();
        let field = occupation_field(&e, h, e.max())?;
        let count = field.bins().count;
        let w = BinWeights::new(m_limit, h, count, 0.0)?.weights;
        let clock = additive_functional_with(&field, &w)?;
        // the output grid follows the source grid, which is coarser for tall excursions
        let new_dt = p.new_dt * e.dt() / p.dt;
        let mut row = vec![field.total_time(); 1 + 2 * nl];
        for (k, m) in members.iter().enumerate() {
            let wl = BinWeights::new(m, h, count, 0.0)?.weights;
            row[1 + k] = clock_sup_difference(&field, &wl, &w);
            let cl = additive_functional_with(&field, &wl)?;
            row[1 + nl + k] = path_sup_difference(&e, &cl, &clock, new_dt);
        }
        Ok(row)
    })?;

    let mut report = TestReport::new("converge", seed);
    report.params_from(p);
    report.param("limit", m_limit.label());
    report.seed_range("excursions", range);
    let zeta: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let zeta_mean = MeanEstimate::from_values(&zeta);
    report.mean_stat("zeta.mean", zeta_mean, &[range]);
    let mut a_means = Vec::new();
    let mut e_means = Vec::new();
    let mut checks = Vec::new();
    for (k, l) in p.lambdas.iter().enumerate() {
        let a_col: Vec<f64> = rows.iter().map(|r| r[1 + k]).collect();
        let e_col: Vec<f64> = rows.iter().map(|r| r[1 + nl + k]).collect();
        let (am, em) = (MeanEstimate::from_values(&a_col), MeanEstimate::from_values(&e_col));
        report.mean_stat(format!("A_sup[lambda={l}].mean"), am, &[range]);
        report.mean_stat(format!("e_sup[lambda={l}].mean"), em, &[range]);
        report.stat(
            format!("A_sup[lambda={l}].p95"),
            EmpiricalSample::new("A", a_col)?.quantile(0.95),
            p.n,
            &[range],
        );
        report.stat(
            format!("e_sup[lambda={l}].p95"),
            EmpiricalSample::new("e", e_col)?.quantile(0.95),
            p.n,
            &[range],
        );
        if p.linear_identity {
            let target = zeta_mean.mean / (2.0 * l);
            let rel = (am.mean - target).abs() / target;
            report.stat(format!("linear_identity[lambda={l}].rel_error"), rel, p.n, &[range]);
            checks.push(Check::new(
                format!("linear_identity[lambda={l}].rel_error"),
                rel,
                Op::Le,
                p.linear_identity_tol,
            ));
        }
        a_means.push(am.mean);
        e_means.push(em.mean);
    }
    checks.push(Check::flag("A_sup.decreasing", decreasing(&a_means)));
    checks.push(Check::flag("e_sup.decreasing", decreasing(&e_means)));
    if p.check_thresholds {
        checks.push(Check::new("A_sup.final_mean", a_means[nl - 1], Op::Le, p.a_threshold));
        checks.push(Check::new("e_sup.final_mean", e_means[nl - 1], Op::Le, p.e_threshold));
    }
    report.verdict = Verdict::from_checks(checks, ("consistent", "inconsistent"));

    let mut header = vec!["zeta".to_string()];
    header.extend(p.lambdas.iter().map(|l| format!("A_sup(lambda={l})")));
    header.extend(p.lambdas.iter().map(|l| format!("e_sup(lambda={l})")));
    let mut t = Table::new("converge", &header.iter().map(String::as_str).collect::<Vec<_>>());
    t.rows = rows;
    Ok(Outcome {
        report,
        tables: vec![t],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConverseParams {
    pub family: String,
    pub lambdas: Vec<f64>,
    pub deltas: Vec<f64>,
}

/// The M-tightness integral `∫_(0,δ] x dm_λ` on the `(δ, λ)` grid. When
/// `convergence_observed` is given and tightness fails, the report flags the
/// contradiction.
pub fn converse_tightness_check<F>(
    family: F,
    p: &ConverseParams,
    convergence_observed: Option<bool>,
) -> Result<Outcome>
where
    F: Fn(f64) -> Result<StringModel<f64>>,
{
    let t = tightness_report(&p.family, family, ClassKind::M, &p.deltas, &p.lambdas)?;
    let mut report = TestReport::new("converse_tightness", 0);
    report.params_from(p);
    for (i, d) in p.deltas.iter().enumerate() {
        report.stat(format!("limsup[delta={d}]"), t.limsup[i], p.lambdas.len(), &[]);
    }
    report.stat("final_slope", t.final_slope, p.deltas.len(), &[]);
    report.param("tightness_note", &t.note);
    let tight = t.verdict == TightnessVerdict::Tight;
    let mut checks = vec![Check::flag("tight", tight)];
    if let Some(conv) = convergence_observed {
        report.param("convergence_observed", conv);
        checks.push(Check::flag("no_contradiction", tight || !conv));
    }
    report.verdict = Verdict::from_checks(checks, ("tight", "not_tight"));
    if !tight && convergence_observed == Some(true) {
        report.verdict.label = "contradiction".into();
    }
    let mut header = vec!["delta".to_string()];
    header.extend(p.lambdas.iter().map(|l| format!("I(lambda={l})")));
    let mut table = Table::new("tightness", &header.iter().map(String::as_str).collect::<Vec<_>>());
    for (d, row) in p.deltas.iter().zip(&t.values) {
        let mut r = vec![*d];
        r.extend(row);
        table.push(r);
    }
    Ok(Outcome {
        report,
        tables: vec![table],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::families::{linear_perturbation, spike_family};
    use crate::strings::make_power_string;

    fn small(lambdas: Vec<f64>) -> ConvergenceParams {
        ConvergenceParams {
            lambdas,
            a: 0.5,
            n: 6,
            dt: 1e-3,
            new_dt: 1e-3,
            h_rel: 0.01,
            grid_reference: 2.0,
            ..ConvergenceParams::default()
        }
    }

    #[test]
    fn linear_family_identity_is_exact() {
        let p = ConvergenceParams {
            linear_identity: true,
            ..small(vec![10.0, 100.0, 1e3, 1e4])
        };
        let m = make_power_string(0.5).unwrap();
        let out = convergence_experiment(linear_perturbation, &m, &p, 9, &Runner::new(1).unwrap()).unwrap();
        assert!(out.report.verdict.pass, "{}", out.report.summary());
    }

    #[test]
    fn constant_family_is_zero() {
        let m = make_power_string(0.5).unwrap();
        let out = convergence_experiment(|_| make_power_string(0.5), &m, &small(vec![1.0, 2.0]), 9, &Runner::new(1).unwrap())
            .unwrap();
        assert!(out.report.verdict.pass);
        for (k, s) in &out.report.statistics {
            if k.starts_with("A_sup") || k.starts_with("e_sup") {
                assert_eq!(s.value, 0.0, "{k}");
            }
        }
    }

    #[test]
    fn spike_family_does_not_converge() {
        let m = make_power_string(0.5).unwrap();
        let out = convergence_experiment(spike_family, &m, &small(vec![10.0, 100.0, 1e3]), 9, &Runner::new(1).unwrap())
            .unwrap();
        assert!(!out.report.verdict.pass, "{}", out.report.summary());
        let conv = ConverseParams {
            family: "spike".into(),
            lambdas: vec![10.0, 100.0, 1e3, 1e4],
            deltas: vec![0.1, 0.01, 1e-3, 1e-4],
        };
        let t = converse_tightness_check(spike_family, &conv, Some(true)).unwrap();
        assert_eq!(t.report.verdict.label, "contradiction");
        let t = converse_tightness_check(linear_perturbation, &conv, Some(true)).unwrap();
        assert_eq!(t.report.verdict.label, "tight");
    }
}
