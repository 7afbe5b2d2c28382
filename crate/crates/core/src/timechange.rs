//! The clock `A_m(t) = ∫ ℓ(t, x) dm(x)`, its right-continuous inverse and the
//! time-changed path `e_m(t) = e(A_m⁻¹(t))`.
//!
//! On the bin grid, `A_m(t) = Σ_j ℓ̂(t, x_j) w_j` where
//! `w_j = c_j⁻¹ ∫_bin x ρ(x) dx + Σ_{atoms in bin} c_k` and `c_j` is the bin
//! centre. For linear `m` this is exactly `dm(bin)`, and unlike `dm(bin)` it
//! stays finite in the first bin whenever `∫_0 x dm < ∞`.

use std::io::Write;
use std::sync::RwLock;

use rand::Rng;

use crate::error::{Error, Result};
use crate::localtime::{occupation_field, Bins, LocalTimeField};
use crate::path::{PathEnd, SampledPath};
use crate::rng::SeedSpec;
use crate::samplers::{
    sample_bes3_with, sample_bm_absorbed_with, sample_excursion_parts_with, GridPolicy,
    DEFAULT_STEP_CAP,
};
use crate::scalar::Scalar;
use crate::strings::{membership_m, Flag, StringModel};

/// Whether to verify `m ∈ M` before building `A_m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Verify,
    /// Skip the check; used to drive the divergent case on purpose.
    Override,
}

/// Refuses strings outside `M`: for those `A_m(ζ) = ∞` for almost every
/// excursion, so the time change is meaningless.
pub fn check_time_changeable<S: Scalar>(m: &StringModel<S>) -> Result<()> {
    let trend = membership_m(m)?;
    match trend.flag {
        Flag::True => Ok(()),
        other => Err(Error::NotTimeChangeable(format!(
            "{}: membership in M is {other} (estimates {:?}); A_m(zeta) is infinite for almost every path when the first moment of dm diverges at 0",
            m.label(),
            trend.estimates
        ))),
    }
}

/// Per-bin clock weights `w_j` of a string.
#[derive(Debug, Clone, PartialEq)]
pub struct BinWeights<S> {
    pub h: S,
    pub x_min: S,
    pub weights: Vec<S>,
}

impl<S: Scalar> BinWeights<S> {
    /// Weights of the first `count` bins of width `h`; mass at or below
    /// `x_min` is dropped.
    pub fn new(m: &StringModel<S>, h: S, count: usize, x_min: S) -> Result<Self> {
        let mut w = BinWeights {
            h,
            x_min,
            weights: Vec::new(),
        };
        w.extend(m, count)?;
        Ok(w)
    }

    fn extend(&mut self, m: &StringModel<S>, count: usize) -> Result<()> {
        let bins = Bins { h: self.h, count };
        for j in self.weights.len()..count {
            let hi = bins.lower_edge(j + 1);
            let lo = bins.lower_edge(j).max(self.x_min);
            if lo >= hi {
                self.weights.push(S::zero());
                continue;
            }
            let (mut atom_moment, mut atom_mass) = (S::zero(), S::zero());
            for a in m.atoms().iter().filter(|a| a.x > lo && a.x <= hi) {
                atom_moment = atom_moment + a.x * a.mass;
                atom_mass = atom_mass + a.mass;
            }
            let moment = m.first_moment(lo, hi)? - atom_moment;
            self.weights.push(moment / bins.midpoint(j) + atom_mass);
        }
        Ok(())
    }
}

/// A nondecreasing piecewise-linear function given on a grid `t_0 < t_1 < …`,
/// constant after the last grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneFunctional<S> {
    times: Vec<S>,
    values: Vec<S>,
}

impl<S: Scalar> MonotoneFunctional<S> {
    pub fn new(times: Vec<S>, values: Vec<S>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::arg("a monotone functional needs matching nonempty grids"));
        }
        if times.windows(2).any(|w| !(w[1] >= w[0])) || values.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(Error::arg("grid and values must be nondecreasing"));
        }
        Ok(MonotoneFunctional { times, values })
    }

    pub fn times(&self) -> &[S] {
        &self.times
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    /// Value after the last grid point (`A(ζ)` for a clock).
    pub fn terminal(&self) -> S {
        self.values[self.values.len() - 1]
    }

    pub fn domain_end(&self) -> S {
        self.times[self.times.len() - 1]
    }

    pub fn eval(&self, t: S) -> S {
        let n = self.times.len();
        if t >= self.times[n - 1] {
            return self.values[n - 1];
        }
        if t <= self.times[0] {
            return self.values[0];
        }
        let i = self.times.partition_point(|x| *x <= t);
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        if t1 == t0 {
            return v1;
        }
        v0 + (v1 - v0) * ((t - t0) / (t1 - t0))
    }

    /// Right-continuous inverse `s ↦ inf{t : A(t) > s}`, equal to the end of
    /// the domain for `s >= A(end)`.
    pub fn inverse(&self) -> MonotoneFunctional<S> {
        let mut times = Vec::with_capacity(self.values.len());
        let mut values = Vec::with_capacity(self.values.len());
        for (v, t) in self.values.iter().zip(&self.times) {
            if times.last() == Some(v) {
                *values.last_mut().expect("nonempty") = *t;
            } else {
                times.push(*v);
                values.push(*t);
            }
        }
        MonotoneFunctional { times, values }
    }

    /// CSV `t,A` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,A")?;
        for (t, a) in self.times.iter().zip(&self.values) {
            writeln!(w, "{t},{a}")?;
        }
        Ok(())
    }
}

/// `A_m` on the source grid of `field`, with `m` checked for membership in `M`
/// unless overridden.
pub fn additive_functional<S: Scalar>(
    field: &LocalTimeField<S>,
    m: &StringModel<S>,
    x_min: S,
    membership: Membership,
) -> Result<MonotoneFunctional<S>> {
    if membership == Membership::Verify {
        check_time_changeable(m)?;
    }
    let b = field.bins();
    let w = BinWeights::new(m, b.h, b.count, x_min)?;
    additive_functional_with(field, &w.weights)
}

/// `A_m` from precomputed bin weights (at least one per bin of the field).
pub fn additive_functional_with<S: Scalar>(
    field: &LocalTimeField<S>,
    weights: &[S],
) -> Result<MonotoneFunctional<S>> {
    let b = field.bins();
    if weights.len() < b.count {
        return Err(Error::arg(format!(
            "{} weights for {} bins",
            weights.len(),
            b.count
        )));
    }
    let two_h = b.h + b.h;
    let mut values = Vec::with_capacity(field.times().len());
    let mut acc = S::zero();
    values.push(acc);
    for (i, j) in field.attributed_bins().enumerate() {
        acc = acc + field.step_duration(i) * weights[j] / two_h;
        values.push(acc);
    }
    MonotoneFunctional::new(field.times().to_vec(), values)
}

/// Samples `e(A⁻¹(k·new_dt))` for `k·new_dt < A(end)`. When `p` is absorbed
/// the output is absorbed with lifetime `A(ζ)`.
pub fn time_change_path<S: Scalar>(
    p: &SampledPath<S>,
    a: &MonotoneFunctional<S>,
    new_dt: S,
) -> Result<SampledPath<S>> {
    if !(new_dt > S::zero() && new_dt.is_finite()) {
        return Err(Error::arg(format!("new_dt must be positive, got {new_dt}")));
    }
    let total = a.terminal();
    if !total.is_finite() {
        return Err(Error::NotTimeChangeable(format!(
            "clock of `{}` is infinite",
            p.origin()
        )));
    }
    let inv = a.inverse();
    let absorbed = p.zeta_index().is_some();
    let origin = format!("time_change({})", p.origin());
    let mut values = Vec::new();
    let mut k = 0usize;
    loop {
        let s = new_dt * S::from_usize(k).expect("index fits");
        if s >= total && k > 0 {
            break;
        }
        let v = p.value_at_time(inv.eval(s));
        if absorbed && k > 0 && v <= S::zero() {
            break;
        }
        values.push(v);
        k += 1;
        if k > DEFAULT_STEP_CAP {
            return Err(Error::StepCap {
                cap: DEFAULT_STEP_CAP,
                context: format!("time change of `{}` with new_dt = {new_dt}", p.origin()),
            });
        }
    }
    if absorbed {
        values.push(S::zero());
        let index = values.len() - 1;
        Ok(SampledPath::new(new_dt, values, PathEnd::Absorbed { index }, origin)?.with_lifetime(total))
    } else {
        SampledPath::new(new_dt, values, p.end(), origin)
    }
}

/// Bin width of the occupation field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BinWidth<S> {
    Absolute(S),
    /// A fraction of the path maximum.
    RelativeToMax(S),
}

impl<S: Scalar> BinWidth<S> {
    pub fn resolve(&self, path_max: S) -> S {
        match *self {
            BinWidth::Absolute(h) => h,
            BinWidth::RelativeToMax(f) => f * path_max,
        }
    }
}

/// Discretisation shared by the sampling pipelines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig<S> {
    pub dt: S,
    pub new_dt: S,
    pub h: BinWidth<S>,
    pub x_min: S,
    /// Time budget of the source path (absorbed BM, BES(3)).
    pub t_max: S,
    pub grid: GridPolicy<S>,
    pub step_cap: usize,
}

impl<S: Scalar> Default for PipelineConfig<S> {
    fn default() -> Self {
        PipelineConfig {
            dt: S::lit(1e-4),
            new_dt: S::lit(1e-4),
            h: BinWidth::RelativeToMax(S::lit(0.005)),
            x_min: S::zero(),
            t_max: S::lit(100.0),
            grid: GridPolicy::Fixed,
            step_cap: DEFAULT_STEP_CAP,
        }
    }
}

/// Source path, its clock and the time-changed path.
#[derive(Debug, Clone)]
pub struct TimeChanged<S> {
    pub source: SampledPath<S>,
    pub clock: MonotoneFunctional<S>,
    pub path: SampledPath<S>,
}

/// A string prepared for repeated time changes: membership is checked once
/// and bin weights for absolute bin widths are cached.
pub struct TimeChanger<S> {
    m: StringModel<S>,
    cfg: PipelineConfig<S>,
    cache: RwLock<Option<BinWeights<S>>>,
}

impl<S: Scalar> TimeChanger<S> {
    pub fn new(m: StringModel<S>, cfg: PipelineConfig<S>, membership: Membership) -> Result<Self> {
        if membership == Membership::Verify {
            check_time_changeable(&m)?;
        }
        Ok(TimeChanger {
            m,
            cfg,
            cache: RwLock::new(None),
        })
    }

    pub fn string(&self) -> &StringModel<S> {
        &self.m
    }

    pub fn config(&self) -> &PipelineConfig<S> {
        &self.cfg
    }

    /// Weights for `count` bins of width `h`.
    pub fn weights(&self, h: S, count: usize) -> Result<Vec<S>> {
        if !matches!(self.cfg.h, BinWidth::Absolute(_)) {
            return Ok(BinWeights::new(&self.m, h, count, self.cfg.x_min)?.weights);
        }
        {
            let guard = self.cache.read().expect("weight cache poisoned");
            if let Some(w) = guard.as_ref() {
                if w.h == h && w.weights.len() >= count {
                    return Ok(w.weights[..count].to_vec());
                }
            }
        }
        let mut guard = self.cache.write().expect("weight cache poisoned");
        match guard.as_mut() {
            Some(w) if w.h == h => w.extend(&self.m, count)?,
            _ => *guard = Some(BinWeights::new(&self.m, h, count, self.cfg.x_min)?),
        }
        Ok(guard.as_ref().expect("just filled").weights[..count].to_vec())
    }

    /// Field and clock of `source`.
    pub fn clock(&self, source: &SampledPath<S>) -> Result<(LocalTimeField<S>, MonotoneFunctional<S>)> {
        let top = source.max();
        let h = self.cfg.h.resolve(top);
        let field = occupation_field(source, h, top.max(h))?;
        let w = self.weights(h, field.bins().count)?;
        let clock = additive_functional_with(&field, &w)?;
        Ok((field, clock))
    }

    pub fn apply(&self, source: SampledPath<S>) -> Result<TimeChanged<S>> {
        let (_, clock) = self.clock(&source)?;
        let path = time_change_path(&source, &clock, self.cfg.new_dt)?;
        Ok(TimeChanged {
            source,
            clock,
            path,
        })
    }

    /// `Q^x_m`: absorbed Brownian motion from `x` run on the clock of `m`.
    pub fn sample_qm_with<R: Rng + ?Sized>(&self, x: S, rng: &mut R) -> Result<TimeChanged<S>> {
        let source = sample_bm_absorbed_with(x, self.cfg.dt, self.cfg.t_max, rng)?;
        self.apply(source)
    }

    /// `P^x_m`: BES(3) from `x` up to `t_max`, run on the clock of `m`.
    pub fn sample_pm_with<R: Rng + ?Sized>(&self, x: S, rng: &mut R) -> Result<TimeChanged<S>> {
        let source = sample_bes3_with(x, self.cfg.dt, self.cfg.t_max, rng)?;
        self.apply(source)
    }

    /// `n_m(· | M > a)`: a Brownian excursion given `M > a`, time-changed.
    pub fn sample_excursion_nm_with<R: Rng + ?Sized>(&self, a: S, rng: &mut R) -> Result<TimeChanged<S>> {
        let parts = sample_excursion_parts_with(a, self.cfg.dt, self.cfg.grid, self.cfg.step_cap, rng)?;
        self.apply(parts.join()?)
    }
}

pub fn sample_qm<S: Scalar>(x: S, m: &StringModel<S>, cfg: PipelineConfig<S>, seed: SeedSpec) -> Result<SampledPath<S>> {
    let tc = TimeChanger::new(m.clone(), cfg, Membership::Verify)?;
    Ok(tc.sample_qm_with(x, &mut seed.rng())?.path)
}

pub fn sample_pm<S: Scalar>(x: S, m: &StringModel<S>, cfg: PipelineConfig<S>, seed: SeedSpec) -> Result<SampledPath<S>> {
    let tc = TimeChanger::new(m.clone(), cfg, Membership::Verify)?;
    Ok(tc.sample_pm_with(x, &mut seed.rng())?.path)
}

pub fn sample_excursion_nm<S: Scalar>(
    a: S,
    m: &StringModel<S>,
    cfg: PipelineConfig<S>,
    seed: SeedSpec,
) -> Result<SampledPath<S>> {
    let tc = TimeChanger::new(m.clone(), cfg, Membership::Verify)?;
    Ok(tc.sample_excursion_nm_with(a, &mut seed.rng())?.path)
}
