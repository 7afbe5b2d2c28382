//! Path samplers: absorbed Brownian motion, BES(3), first passages and
//! Brownian excursions with a prescribed maximum (Williams decomposition).

use rand::Rng;

use crate::error::{Error, Result};
use crate::path::{PathEnd, SampledPath};
use crate::rng::SeedSpec;
use crate::scalar::Scalar;

/// Default safety cap on the number of grid steps of a single segment.
pub const DEFAULT_STEP_CAP: usize = 50_000_000;

/// Bisection depth used to locate a hitting time inside one grid step.
const REFINE_LEVELS: usize = 12;

fn check_dt<S: Scalar>(dt: S) -> Result<()> {
    if dt > S::zero() && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::arg(format!("dt must be positive, got {dt}")))
    }
}

fn steps_for<S: Scalar>(t_max: S, dt: S) -> Result<usize> {
    if !(t_max > S::zero() && t_max.is_finite()) {
        return Err(Error::arg(format!("t_max must be positive, got {t_max}")));
    }
    (t_max / dt)
        .ceil()
        .to_usize()
        .ok_or_else(|| Error::arg("t_max / dt does not fit in an index"))
}

/// Probability that a Brownian bridge from `a > 0` to `b > 0` over time `t`
/// touches 0.
#[inline]
fn bridge_hit_probability<S: Scalar>(a: S, b: S, t: S) -> S {
    (-(a + a) * b / t).exp()
}

/// Offset in `[0, t]` of the first zero of a Brownian bridge from `a > 0` to
/// `b` over time `t`, given that the bridge does reach 0.
///
/// A bridge to `b > 0` conditioned to hit 0 has the same hitting time as the
/// unconditioned bridge to `−b` (reflection after the hit), so the search only
/// ever follows bridges whose hit is certain.
pub fn refine_hitting_time<S: Scalar, R: Rng + ?Sized>(a: S, b: S, t: S, rng: &mut R) -> S {
    let half = S::lit(0.5);
    let (mut a, mut b, mut span, mut offset) = (a, if b > S::zero() { -b } else { b }, t, S::zero());
    for _ in 0..REFINE_LEVELS {
        let h = span * half;
        let mid = (a + b) * half + (span * S::lit(0.25)).sqrt() * S::standard_normal(rng);
        if mid <= S::zero() {
            b = mid;
        } else if S::open01(rng) < bridge_hit_probability(a, mid, h) {
            b = -mid;
        } else {
            a = mid;
            offset = offset + h;
        }
        span = h;
    }
    offset + span * half
}

pub fn sample_bm_absorbed<S: Scalar>(x: S, dt: S, t_max: S, seed: SeedSpec) -> Result<SampledPath<S>> {
    sample_bm_absorbed_with(x, dt, t_max, &mut seed.rng())
}

/// Brownian motion from `x > 0`, absorbed at 0. Zero crossings hidden inside
/// a step are detected with the bridge probability `exp(−2 e(t) e(t+dt)/dt)`
/// and the hitting time is then located by bridge bisection.
pub fn sample_bm_absorbed_with<S: Scalar, R: Rng + ?Sized>(
    x: S,
    dt: S,
    t_max: S,
    rng: &mut R,
) -> Result<SampledPath<S>> {
    if !(x > S::zero() && x.is_finite()) {
        return Err(Error::arg(format!("start must be positive, got {x}")));
    }
    check_dt(dt)?;
    let n = steps_for(t_max, dt)?;
    let sd = dt.sqrt();
    let mut values = Vec::with_capacity(n.min(1 << 16) + 1);
    values.push(x);
    let mut cur = x;
    for i in 0..n {
        let next = cur + sd * S::standard_normal(rng);
        let hit = next <= S::zero() || S::open01(rng) < bridge_hit_probability(cur, next, dt);
        if hit {
            let offset = refine_hitting_time(cur, next, dt, rng);
            values.push(S::zero());
            let zeta = dt * S::from_usize(i).expect("index fits") + offset;
            return Ok(SampledPath::new(
                dt,
                values,
                PathEnd::Absorbed { index: i + 1 },
                format!("bm_absorbed(x={x})"),
            )?
            .with_lifetime(zeta));
        }
        values.push(next);
        cur = next;
    }
    SampledPath::new(dt, values, PathEnd::Open, format!("bm_absorbed(x={x})"))
}

/// A 3-dimensional Gaussian random walk whose norm is BES(3) at grid times.
#[derive(Debug, Clone, Copy)]
pub struct BesselWalk<S> {
    pos: [S; 3],
    sd: S,
}

impl<S: Scalar> BesselWalk<S> {
    pub fn new(x: S, dt: S) -> Self {
        BesselWalk {
            pos: [x, S::zero(), S::zero()],
            sd: dt.sqrt(),
        }
    }

    #[inline]
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> S {
        for c in self.pos.iter_mut() {
            *c = *c + self.sd * S::standard_normal(rng);
        }
        self.norm()
    }

    #[inline]
    pub fn norm(&self) -> S {
        let [a, b, c] = self.pos;
        (a * a + b * b + c * c).sqrt()
    }

    /// Moves to a point at distance `r` from the origin. The BES(3) law only
    /// depends on the radius, so the direction is irrelevant.
    pub fn place(&mut self, r: S) {
        self.pos = [r, S::zero(), S::zero()];
    }
}

pub fn sample_bes3<S: Scalar>(x: S, dt: S, t_max: S, seed: SeedSpec) -> Result<SampledPath<S>> {
    sample_bes3_with(x, dt, t_max, &mut seed.rng())
}

pub fn sample_bes3_with<S: Scalar, R: Rng + ?Sized>(
    x: S,
    dt: S,
    t_max: S,
    rng: &mut R,
) -> Result<SampledPath<S>> {
    if !(x >= S::zero() && x.is_finite()) {
        return Err(Error::arg(format!("start must be >= 0, got {x}")));
    }
    check_dt(dt)?;
    let n = steps_for(t_max, dt)?;
    let mut walk = BesselWalk::new(x, dt);
    let mut values = Vec::with_capacity(n + 1);
    values.push(x);
    for _ in 0..n {
        values.push(walk.step(rng));
    }
    SampledPath::new(dt, values, PathEnd::Stopped, format!("bes3(x={x})"))
}

pub fn sample_bes3_first_passage<S: Scalar>(
    a: S,
    dt: S,
    cap: usize,
    seed: SeedSpec,
) -> Result<SampledPath<S>> {
    sample_bes3_first_passage_with(a, dt, cap, &mut seed.rng())
}

/// BES(3) from 0 stopped at the first grid time with value `>= a`; the final
/// value is clamped to `a`.
pub fn sample_bes3_first_passage_with<S: Scalar, R: Rng + ?Sized>(
    a: S,
    dt: S,
    cap: usize,
    rng: &mut R,
) -> Result<SampledPath<S>> {
    if !(a > S::zero() && a.is_finite()) {
        return Err(Error::arg(format!("level must be positive, got {a}")));
    }
    check_dt(dt)?;
    let mut walk = BesselWalk::new(S::zero(), dt);
    let mut values = vec![S::zero()];
    loop {
        if values.len() > cap {
            return Err(Error::StepCap {
                cap,
                context: format!("BES(3) first passage to {a} with dt = {dt}"),
            });
        }
        let r = walk.step(rng);
        if r >= a {
            values.push(a);
            break;
        }
        values.push(r);
    }
    SampledPath::new(dt, values, PathEnd::Stopped, format!("bes3_first_passage(a={a})"))
}

/// Grid step used for an excursion of maximum `M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridPolicy<S> {
    Fixed,
    /// `dt · max(1, (M/reference)²)`: the step count stays bounded for the
    /// heavy-tailed maximum while keeping the resolution relative to `M`.
    ScaleWithMax { reference: S },
    /// `dt · (M/reference)²` for every `M`: each excursion gets the same
    /// expected number of steps, so the grid is exactly self-similar.
    Relative { reference: S },
}

impl<S: Scalar> GridPolicy<S> {
    pub fn step_for(&self, dt: S, max: S) -> S {
        match *self {
            GridPolicy::Fixed => dt,
            GridPolicy::ScaleWithMax { reference } => {
                let r = max / reference;
                dt * (r * r).max(S::one())
            }
            GridPolicy::Relative { reference } => {
                let r = max / reference;
                dt * r * r
            }
        }
    }
}

/// `M = a/V` with `V` uniform on (0, 1): the law `a dx/x²` on `(a, ∞)`.
pub fn draw_max<S: Scalar, R: Rng + ?Sized>(a: S, rng: &mut R) -> S {
    a / S::open01(rng)
}

/// The two BES(3) first-passage segments of an excursion with maximum `max`.
#[derive(Debug, Clone)]
pub struct ExcursionParts<S> {
    pub max: S,
    /// 0 → `max`, forward in time.
    pub rise: SampledPath<S>,
    /// 0 → `max`, to be run backward.
    pub fall: SampledPath<S>,
}

impl<S: Scalar> ExcursionParts<S> {
    /// Glues `rise` to the reversal of `fall`, dropping the repeated maximum.
    pub fn join(&self) -> Result<SampledPath<S>> {
        let mut values = self.rise.values().to_vec();
        values.extend(self.fall.values().iter().rev().skip(1));
        let n = values.len();
        SampledPath::new(
            self.rise.dt(),
            values,
            PathEnd::Absorbed { index: n - 1 },
            format!("excursion(M={})", self.max),
        )
    }

    /// Index of the maximum in the joined path.
    pub fn peak_index(&self) -> usize {
        self.rise.len() - 1
    }
}

/// Draws `M` first, then the two segments, in that order from `rng`.
pub fn sample_excursion_parts_with<S: Scalar, R: Rng + ?Sized>(
    a: S,
    dt: S,
    policy: GridPolicy<S>,
    cap: usize,
    rng: &mut R,
) -> Result<ExcursionParts<S>> {
    if !(a > S::zero() && a.is_finite()) {
        return Err(Error::arg(format!("threshold must be positive, got {a}")));
    }
    check_dt(dt)?;
    let max = draw_max(a, rng);
    let step = policy.step_for(dt, max);
    let rise = sample_bes3_first_passage_with(max, step, cap, rng)?;
    let fall = sample_bes3_first_passage_with(max, step, cap, rng)?;
    Ok(ExcursionParts { max, rise, fall })
}

/// A Brownian excursion under `n_BE(· | M > a)`.
pub fn sample_excursion_given_max<S: Scalar>(
    a: S,
    dt: S,
    policy: GridPolicy<S>,
    cap: usize,
    seed: SeedSpec,
) -> Result<SampledPath<S>> {
    sample_excursion_parts_with(a, dt, policy, cap, &mut seed.rng())?.join()
}
