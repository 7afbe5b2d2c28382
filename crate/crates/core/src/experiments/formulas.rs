//! Path-level identities of the time change: the identity string reproduces
//! the source path, and the lifetime of `Q^x_m` matches the excursion
//! remainder `A(ζ) − A(τ_x)` under `n(· | M > x)`.

use serde::{Deserialize, Serialize};

use super::report::{Check, Op, Outcome, SeedRange, Table, TestReport, Verdict};
use super::runner::Runner;
use super::stats::{ks_two_sample, EmpiricalSample};
use crate::error::{Error, Result};
use crate::localtime::occupation_field;
use crate::path::{PathEnd, SampledPath};
use crate::rng::SeedSpec;
use crate::samplers::{
    draw_max, sample_bes3_first_passage_with, sample_bm_absorbed_with, sample_excursion_parts_with,
    GridPolicy,
};
use crate::strings::{make_power_string, StringModel};
use crate::timechange::{
    additive_functional_with, time_change_path, BinWeights, BinWidth, Membership, PipelineConfig,
    TimeChanger,
};

const BLOCK_IDENTITY: u16 = 10;
const BLOCK_QM: u16 = 11;
const BLOCK_SHIFTED: u16 = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityParams {
    pub a: f64,
    pub n: usize,
    pub dt: f64,
    pub h: f64,
    /// Excursions with `M` above this level get a proportionally coarser grid.
    pub grid_reference: f64,
    /// Allowed `sup |A(t) − t| / ζ`.
    pub clock_tol: f64,
    pub step_cap: usize,
}

impl Default for IdentityParams {
    fn default() -> Self {
        IdentityParams {
            a: 0.5,
            n: 100,
            dt: 1e-4,
            h: 0.005,
            grid_reference: 5.0,
            clock_tol: 1e-9,
            step_cap: 50_000_000,
        }
    }
}

/// Time change by `m^{(1/2)}`, whose clock is `min(t, ζ)`: checks the clock
/// to accounting precision and the time-changed path against the source to
/// within one value-grid cell (the largest one-step increment of the path).
pub fn identity_time_change_check(p: &IdentityParams, seed: u64, runner: &Runner) -> Result<Outcome> {
    if !(p.a > 0.0 && p.dt > 0.0 && p.h > 0.0 && p.grid_reference > 0.0 && p.n > 0) {
        return Err(Error::arg("a, dt, h, grid_reference and n must be positive"));
    }
    let m = make_power_string(0.5)?;
    let grid = GridPolicy::ScaleWithMax {
        reference: p.grid_reference,
    };
    let range = SeedRange::new(BLOCK_IDENTITY, p.n as u64);
    let rows = runner.map(0..p.n as u64, |i| {
        let mut rng = SeedSpec::in_block(seed, BLOCK_IDENTITY, i).rng();
        let e = sample_excursion_parts_with(p.a, p.dt, grid, p.step_cap, &mut rng)?.join()?;
        let field = occupation_field(&e, p.h, e.max().max(p.h))?;
        let w = BinWeights::new(&m, p.h, field.bins().count, 0.0)?;
        let clock = additive_functional_with(&field, &w.weights)?;
        let zeta = e.duration();
        let clock_dev = clock
            .times()
            .iter()
            .zip(clock.values())
            .map(|(t, a)| (a - t.min(zeta)).abs())
            .fold(0.0, f64::max);
        let em = time_change_path(&e, &clock, e.dt())?;
        let path_dev = (0..em.len())
            .map(|k| (em.values()[k] - e.value_at_time(em.time_of(k))).abs())
            .fold(0.0, f64::max);
        let cell = e
            .values()
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(0.0, f64::max);
        Ok(vec![e.max(), zeta, clock_dev / zeta, path_dev, cell])
    })?;
    let worst_clock = rows.iter().map(|r| r[2]).fold(0.0, f64::max);
    let cells_ok = rows.iter().filter(|r| r[3] <= r[4]).count();
    let worst_ratio = rows.iter().map(|r| r[3] / r[4]).fold(0.0, f64::max);

    let mut report = TestReport::new("identity", seed);
    report.params_from(p);
    report.seed_range("excursions", range);
    report.stat("clock.max_rel_deviation", worst_clock, p.n, &[range]);
    report.stat("path.max_deviation_over_cell", worst_ratio, p.n, &[range]);
    report.stat("path.within_one_cell", cells_ok as f64, p.n, &[range]);
    report.verdict = Verdict::from_checks(
        vec![
            Check::new("clock.max_rel_deviation", worst_clock, Op::Le, p.clock_tol),
            Check::new("path.max_deviation_over_cell", worst_ratio, Op::Le, 1.0),
        ],
        ("pass", "fail"),
    );
    let mut t = Table::new("identity", &["M", "zeta", "clock_rel_dev", "path_dev", "cell"]);
    t.rows = rows;
    Ok(Outcome {
        report,
        tables: vec![t],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QmParams {
    pub x: f64,
    pub n: usize,
    pub dt: f64,
    pub h: f64,
    /// Source-time horizon: lifetimes of paths whose source duration after
    /// `τ_x` exceeds it are recorded as `+∞` on both sides.
    pub horizon: f64,
    pub ks: f64,
    pub step_cap: usize,
}

impl Default for QmParams {
    fn default() -> Self {
        QmParams {
            x: 0.5,
            n: 10_000,
            dt: 1e-5,
            h: 0.005,
            horizon: 16.0,
            ks: 0.03,
            step_cap: 50_000_000,
        }
    }
}

/// `A(ζ) − A(τ_x)` of an excursion under `n(· | M > x)`, or `+∞` when its
/// source duration after `τ_x` exceeds `horizon`. The fall segment is drawn
/// first so that long excursions are censored early.
fn shifted_excursion_lifetime<R: rand::Rng + ?Sized>(
    tc: &TimeChanger<f64>,
    p: &QmParams,
    rng: &mut R,
) -> Result<f64> {
    let budget = (p.horizon / p.dt).ceil() as usize;
    let max = draw_max(p.x, rng);
    let fall = match sample_bes3_first_passage_with(max, p.dt, budget + 1, rng) {
        Ok(f) => f,
        Err(Error::StepCap { .. }) => return Ok(f64::INFINITY),
        Err(e) => return Err(e),
    };
    let rise = match sample_bes3_first_passage_with(max, p.dt, p.step_cap, rng) {
        Ok(r) => r,
        Err(Error::StepCap { .. }) => return Ok(f64::INFINITY),
        Err(e) => return Err(e),
    };
    let tau = rise
        .first_passage_index(p.x)
        .expect("rise ends at M > x");
    let mut values = rise.values()[tau..].to_vec();
    values.extend(fall.values().iter().rev().skip(1));
    if (values.len() - 1) as f64 * p.dt > p.horizon {
        return Ok(f64::INFINITY);
    }
    let n = values.len();
    let e = SampledPath::new(p.dt, values, PathEnd::Absorbed { index: n - 1 }, "shifted excursion")?;
    Ok(tc.clock(&e)?.1.terminal())
}

/// Two-sample KS between lifetimes of `Q^x_m` and `A(ζ) − A(τ_x)` under
/// `n(· | M > x)`, both censored at the same source-time horizon.
pub fn qm_formula_check(m: &StringModel<f64>, p: &QmParams, seed: u64, runner: &Runner) -> Result<Outcome> {
    if !(p.x > 0.0 && p.dt > 0.0 && p.h > 0.0 && p.horizon > 0.0 && p.n > 0) {
        return Err(Error::arg("x, dt, h, horizon and n must be positive"));
    }
    let cfg = PipelineConfig {
        dt: p.dt,
        new_dt: p.dt,
        h: BinWidth::Absolute(p.h),
        t_max: p.horizon,
        step_cap: p.step_cap,
        ..PipelineConfig::default()
    };
    let tc = TimeChanger::new(m.clone(), cfg, Membership::Verify)?;
    let q_range = SeedRange::new(BLOCK_QM, p.n as u64);
    let e_range = SeedRange::new(BLOCK_SHIFTED, p.n as u64);
    let q = runner.map(0..p.n as u64, |i| {
        let mut rng = SeedSpec::in_block(seed, BLOCK_QM, i).rng();
        let path = sample_bm_absorbed_with(p.x, p.dt, p.horizon, &mut rng)?;
        if path.is_open_ended() {
            return Ok(f64::INFINITY);
        }
        Ok(tc.clock(&path)?.1.terminal())
    })?;
    let e = runner.map(0..p.n as u64, |i| {
        let mut rng = SeedSpec::in_block(seed, BLOCK_SHIFTED, i).rng();
        shifted_excursion_lifetime(&tc, p, &mut rng)
    })?;
    let qs = EmpiricalSample::new("Q lifetime", q.clone())?;
    let es = EmpiricalSample::new("shifted excursion lifetime", e.clone())?;
    let ks = ks_two_sample(&qs, &es);
    let censored = |v: &[f64]| v.iter().filter(|x| x.is_infinite()).count() as f64 / v.len() as f64;

    let mut report = TestReport::new("qm_formula", seed);
    report.params_from(p);
    report.param("string", m.label());
    report.seed_range("q", q_range).seed_range("excursion", e_range);
    report.stat("ks", ks, p.n, &[q_range, e_range]);
    report.stat("q.censored_fraction", censored(&q), p.n, &[q_range]);
    report.stat("excursion.censored_fraction", censored(&e), p.n, &[e_range]);
    report.stat("q.median", qs.median(), p.n, &[q_range]);
    report.stat("excursion.median", es.median(), p.n, &[e_range]);
    report.verdict = Verdict::from_checks(vec![Check::new("ks", ks, Op::Le, p.ks)], ("pass", "fail"));
    let mut t = Table::new("lifetimes", &["q", "excursion"]);
    t.rows = q.into_iter().zip(e).map(|(a, b)| vec![a, b]).collect();
    Ok(Outcome {
        report,
        tables: vec![t],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_holds_on_a_few_paths() {
        let p = IdentityParams {
            n: 5,
            dt: 1e-3,
            ..IdentityParams::default()
        };
        let out = identity_time_change_check(&p, 3, &Runner::new(1).unwrap()).unwrap();
        assert!(out.report.verdict.pass, "{}", out.report.summary());
    }

    #[test]
    fn qm_formula_small() {
        let m = make_power_string(3.0).unwrap();
        let p = QmParams {
            n: 600,
            dt: 1e-3,
            h: 0.01,
            horizon: 4.0,
            ks: 0.1,
            ..QmParams::default()
        };
        let out = qm_formula_check(&m, &p, 5, &Runner::new(1).unwrap()).unwrap();
        assert!(out.report.verdict.pass, "{}", out.report.summary());
        let c = out.report.statistics["q.censored_fraction"].value;
        assert!(c > 0.05 && c < 0.4, "{c}");
    }
}
