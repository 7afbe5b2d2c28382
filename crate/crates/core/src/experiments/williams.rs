//! Williams maximum law and the BES(3) local-time laws (Ray–Knight totals and
//! the profile at a first-passage time).

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::report::{Check, Op, Outcome, SeedRange, Table, TestReport, Verdict};
use super::runner::Runner;
use super::stats::{ks_one_sample, EmpiricalSample, MeanEstimate};
use crate::error::{Error, Result};
use crate::localtime::{Bins, Occupation};
use crate::rng::SeedSpec;
use crate::samplers::{sample_excursion_parts_with, BesselWalk, GridPolicy};
use crate::scalar::Scalar;

const BLOCK_MAX: u16 = 1;
const BLOCK_RAY_KNIGHT: u16 = 2;
const BLOCK_PINNED: u16 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilliamsParams {
    /// Threshold of the maximum-law sample, `n(· | M > a)`.
    pub a: f64,
    pub n_max_law: usize,
    /// Grid step of the maximum-law excursions; scaled up with `M` above `a`.
    pub max_law_dt: f64,
    pub x_levels: Vec<f64>,
    pub n_ray_knight: usize,
    pub delta: f64,
    pub pinned_levels: Vec<f64>,
    pub n_pinned: usize,
    pub dt: f64,
    pub h: f64,
    pub step_cap: usize,
    pub ks_max_law: f64,
    pub mean_tol_ray_knight: f64,
    pub ks_ray_knight: f64,
    pub mean_tol_pinned: f64,
}

impl Default for WilliamsParams {
    fn default() -> Self {
        WilliamsParams {
            a: 1.0,
            n_max_law: 100_000,
            max_law_dt: 1e-3,
            x_levels: vec![0.5, 1.0],
            n_ray_knight: 10_000,
            delta: 1.0,
            pinned_levels: vec![0.25, 0.5],
            n_pinned: 10_000,
            dt: 1e-4,
            h: 0.005,
            step_cap: 50_000_000,
            ks_max_law: 0.02,
            mean_tol_ray_knight: 0.03,
            ks_ray_knight: 0.03,
            mean_tol_pinned: 0.05,
        }
    }
}

impl WilliamsParams {
    fn validate(&self) -> Result<()> {
        let positive = [self.a, self.max_law_dt, self.delta, self.dt, self.h];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::arg("a, dt, h and delta must be positive"));
        }
        if self.n_max_law == 0 || self.n_ray_knight == 0 || self.n_pinned == 0 {
            return Err(Error::arg("sample sizes must be positive"));
        }
        if self.x_levels.is_empty() || self.x_levels.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(Error::arg("x_levels must be positive"));
        }
        if self.pinned_levels.iter().any(|x| !(*x > 0.0 && *x < self.delta)) {
            return Err(Error::arg("pinned levels must lie in (0, delta)"));
        }
        Ok(())
    }
}

/// Occupation of a BES(3) path from 0 over all time, on bins covering
/// `[0, x_top + 2h)`.
///
/// Only levels below `b = 1.5 x_top` are tracked. Whenever the walk reaches
/// `R = 2b` it returns to `b` with probability `b/r` (the BES(3) hitting
/// probability from `r`) and is restarted there, otherwise the path has left
/// for good. Occupation below `b` is therefore unaffected by the excision.
pub fn bes3_total_occupation<S: Scalar, R: Rng + ?Sized>(
    x_top: S,
    dt: S,
    h: S,
    cap: usize,
    rng: &mut R,
) -> Result<Occupation<S>> {
    let bins = Bins::covering(h, x_top + h + h)?;
    let upper = bins.upper();
    let b = (S::lit(1.5) * x_top).max(upper);
    let far = b + b;
    let mut occ = Occupation::new(bins);
    let mut walk = BesselWalk::new(S::zero(), dt);
    let mut prev = S::zero();
    let mut steps = 0usize;
    loop {
        let r = walk.step(rng);
        if (prev + r) * S::lit(0.5) < upper {
            occ.add_step(prev, r, dt);
        }
        prev = r;
        if r >= far {
            if S::open01(rng) < b / r {
                walk.place(b);
                prev = b;
            } else {
                return Ok(occ);
            }
        }
        steps += 1;
        if steps > cap {
            return Err(Error::StepCap {
                cap,
                context: format!("BES(3) total occupation below {upper}"),
            });
        }
    }
}

/// Occupation of a BES(3) path from 0 up to its first passage at `delta`.
pub fn bes3_pinned_occupation<S: Scalar, R: Rng + ?Sized>(
    delta: S,
    dt: S,
    h: S,
    cap: usize,
    rng: &mut R,
) -> Result<Occupation<S>> {
    let mut occ = Occupation::new(Bins::covering(h, delta)?);
    let mut walk = BesselWalk::new(S::zero(), dt);
    let mut prev = S::zero();
    for _ in 0..cap {
        let r = walk.step(rng).min(delta);
        occ.add_step(prev, r, dt);
        if r >= delta {
            return Ok(occ);
        }
        prev = r;
    }
    Err(Error::StepCap {
        cap,
        context: format!("BES(3) first passage to {delta}"),
    })
}

fn exp_cdf(mean: f64) -> impl Fn(f64) -> f64 {
    move |y| if y <= 0.0 { 0.0 } else { 1.0 - (-y / mean).exp() }
}

/// Maximum-law KS test, Ray–Knight total local times and the pinned profile
/// at `τ_δ`, bundled into one report.
///
/// Local times are reported in the occupation-density normalisation
/// `L = 2ℓ̂`, read at each level with a window of width `2h` centred there.
pub fn williams_and_raylaw_suite(p: &WilliamsParams, seed: u64, runner: &Runner) -> Result<Outcome> {
    p.validate()?;
    let mut report = TestReport::new("williams", seed);
    report.params_from(p);
    let mut checks = Vec::new();
    let mut tables = Vec::new();

    // maximum law
    let max_range = SeedRange::new(BLOCK_MAX, p.n_max_law as u64);
    let grid = GridPolicy::ScaleWithMax { reference: p.a };
    let maxima = runner.map(0..p.n_max_law as u64, |i| {
        let mut rng = SeedSpec::in_block(seed, BLOCK_MAX, i).rng();
        let parts = sample_excursion_parts_with(p.a, p.max_law_dt, grid, p.step_cap, &mut rng)?;
        Ok(parts.join()?.max())
    })?;
    let sample = EmpiricalSample::new("M", maxima.clone())?;
    let ks = ks_one_sample(&sample, |y| if y <= p.a { 0.0 } else { 1.0 - p.a / y });
    report.stat("max_law.ks", ks, p.n_max_law, &[max_range]);
    checks.push(Check::new("max_law.ks", ks, Op::Le, p.ks_max_law));
    tables.push(Table::column("max_law", "M", &maxima));
    report.seed_range("max_law", max_range);

    // Ray–Knight totals
    let rk_range = SeedRange::new(BLOCK_RAY_KNIGHT, p.n_ray_knight as u64);
    let x_top = p.x_levels.iter().cloned().fold(0.0, f64::max);
    let totals = runner.map(0..p.n_ray_knight as u64, |i| {
        let mut rng = SeedSpec::in_block(seed, BLOCK_RAY_KNIGHT, i).rng();
        let occ = bes3_total_occupation(x_top, p.dt, p.h, p.step_cap, &mut rng)?;
        Ok(p.x_levels
            .iter()
            .map(|x| 2.0 * occ.local_time_centered(*x))
            .collect::<Vec<f64>>())
    })?;
    let mut header: Vec<String> = Vec::new();
    for (k, x) in p.x_levels.iter().enumerate() {
        let col: Vec<f64> = totals.iter().map(|row| row[k]).collect();
        let mean = MeanEstimate::from_values(&col);
        let key = format!("ray_knight[x={x}]");
        let rel = (mean.mean - 2.0 * x).abs() / (2.0 * x);
        report.mean_stat(format!("{key}.mean"), mean, &[rk_range]);
        report.stat(format!("{key}.mean_rel_error"), rel, col.len(), &[rk_range]);
        let ks = ks_one_sample(&EmpiricalSample::new(key.clone(), col)?, exp_cdf(2.0 * x));
        report.stat(format!("{key}.ks_exponential"), ks, totals.len(), &[rk_range]);
        checks.push(Check::new(format!("{key}.mean_rel_error"), rel, Op::Le, p.mean_tol_ray_knight));
        checks.push(Check::new(format!("{key}.ks_exponential"), ks, Op::Le, p.ks_ray_knight));
        header.push(format!("L(x={x})"));
    }
    let mut t = Table::new("ray_knight", &header.iter().map(String::as_str).collect::<Vec<_>>());
    t.rows = totals;
    tables.push(t);
    report.seed_range("ray_knight", rk_range);

    // pinned profile at τ_δ
    if !p.pinned_levels.is_empty() {
        let pin_range = SeedRange::new(BLOCK_PINNED, p.n_pinned as u64);
        let rows = runner.map(0..p.n_pinned as u64, |i| {
            let mut rng = SeedSpec::in_block(seed, BLOCK_PINNED, i).rng();
            let occ = bes3_pinned_occupation(p.delta, p.dt, p.h, p.step_cap, &mut rng)?;
            Ok(p.pinned_levels
                .iter()
                .map(|x| 2.0 * occ.local_time_centered(*x) / x)
                .collect::<Vec<f64>>())
        })?;
        let mut header = Vec::new();
        for (k, x) in p.pinned_levels.iter().enumerate() {
            let col: Vec<f64> = rows.iter().map(|row| row[k]).collect();
            let mean = MeanEstimate::from_values(&col);
            let target = 2.0 * (p.delta - x) / p.delta;
            let rel = (mean.mean - target).abs() / target;
            let key = format!("pinned[x={x}]");
            report.mean_stat(format!("{key}.mean"), mean, &[pin_range]);
            report.stat(format!("{key}.mean_rel_error"), rel, col.len(), &[pin_range]);
            checks.push(Check::new(format!("{key}.mean_rel_error"), rel, Op::Le, p.mean_tol_pinned));
            header.push(format!("L(x={x})/x"));
        }
        let mut t = Table::new("pinned", &header.iter().map(String::as_str).collect::<Vec<_>>());
        t.rows = rows;
        tables.push(t);
        report.seed_range("pinned", pin_range);
    }

    report.verdict = Verdict::from_checks(checks, ("pass", "fail"));
    Ok(Outcome { report, tables })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn excision_keeps_occupation_below_b() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let occ = bes3_total_occupation(1.0f64, 1e-3, 0.05, 10_000_000, &mut rng).unwrap();
        assert_eq!(occ.bins.count, 22);
        assert!(occ.total_time() > 0.0);
    }

    #[test]
    fn pinned_occupation_stops_at_delta() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let occ = bes3_pinned_occupation(1.0f64, 1e-3, 0.05, 10_000_000, &mut rng).unwrap();
        assert_eq!(occ.bins.count, 20);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!(bes3_pinned_occupation(1.0f64, 1e-3, 0.05, 3, &mut rng).is_err());
    }

    #[test]
    fn small_suite_is_consistent() {
        let p = WilliamsParams {
            n_max_law: 2000,
            n_ray_knight: 400,
            n_pinned: 400,
            dt: 1e-3,
            h: 0.02,
            ks_max_law: 0.05,
            mean_tol_ray_knight: 0.15,
            ks_ray_knight: 0.1,
            mean_tol_pinned: 0.15,
            ..WilliamsParams::default()
        };
        let out = williams_and_raylaw_suite(&p, 1, &Runner::new(1).unwrap()).unwrap();
        assert!(out.report.verdict.pass, "{}", out.report.summary());
        assert_eq!(out.tables.len(), 3);
    }
}
