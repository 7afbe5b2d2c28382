//! Occupation-density local time `ℓ̂(t, x) = O(t, bin(x)) / (2h)`, so that
//! `2 ∫ f ℓ̂ dx` reproduces `∫₀ᵗ f(e(s)) ds` for `f` constant on bins.

use std::io::Write;

use crate::error::{Error, Result};
use crate::path::SampledPath;
use crate::scalar::Scalar;

/// Marker for steps that are not attributed to any bin (after absorption).
const UNATTRIBUTED: u32 = u32::MAX;

/// Uniform bins `[jh, (j+1)h)` on `[0, n·h)`; the last bin is closed at `x_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bins<S> {
    pub h: S,
    pub count: usize,
}

impl<S: Scalar> Bins<S> {
    pub fn covering(h: S, x_max: S) -> Result<Self> {
        if !(h > S::zero() && h.is_finite()) {
            return Err(Error::arg(format!("bin width must be positive, got {h}")));
        }
        if !(x_max >= S::zero() && x_max.is_finite()) {
            return Err(Error::arg(format!("x_max must be finite and >= 0, got {x_max}")));
        }
        let count = (x_max / h).ceil().to_usize().unwrap_or(0).max(1);
        if count >= UNATTRIBUTED as usize {
            return Err(Error::arg("too many bins"));
        }
        Ok(Bins { h, count })
    }

    #[inline]
    pub fn index_of(&self, x: S) -> usize {
        (x / self.h).floor().to_usize().unwrap_or(0).min(self.count - 1)
    }

    pub fn lower_edge(&self, j: usize) -> S {
        self.h * S::from_usize(j).expect("bin index fits")
    }

    pub fn midpoint(&self, j: usize) -> S {
        self.h * (S::from_usize(j).expect("bin index fits") + S::lit(0.5))
    }

    pub fn upper(&self) -> S {
        self.lower_edge(self.count)
    }
}

/// Running per-bin occupation, used directly by streaming estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct Occupation<S> {
    pub bins: Bins<S>,
    pub totals: Vec<S>,
}

impl<S: Scalar> Occupation<S> {
    pub fn new(bins: Bins<S>) -> Self {
        Occupation {
            bins,
            totals: vec![S::zero(); bins.count],
        }
    }

    /// Attributes a step of length `duration` between values `from` and `to`
    /// to the bin of its midpoint; returns the bin index.
    #[inline]
    pub fn add_step(&mut self, from: S, to: S, duration: S) -> usize {
        let j = self.bins.index_of((from + to) * S::lit(0.5));
        self.totals[j] = self.totals[j] + duration;
        j
    }

    /// `O(bin(x)) / (2h)`.
    pub fn local_time(&self, x: S) -> S {
        self.totals[self.bins.index_of(x)] / (self.bins.h + self.bins.h)
    }

    /// Local time read off the bin-midpoint profile by linear interpolation.
    /// At a bin edge this is the average of the two adjacent bins, i.e. a
    /// window of width `2h` centred at `x`.
    pub fn local_time_centered(&self, x: S) -> S {
        let two_h = self.bins.h + self.bins.h;
        let pos = x / self.bins.h - S::lit(0.5);
        if pos <= S::zero() {
            return self.totals[0] / two_h;
        }
        let j = pos.floor().to_usize().unwrap_or(usize::MAX);
        if j + 1 >= self.bins.count {
            return self.totals[self.bins.count - 1] / two_h;
        }
        let w = pos - S::from_usize(j).expect("bin index fits");
        (self.totals[j] * (S::one() - w) + self.totals[j + 1] * w) / two_h
    }

    pub fn total_time(&self) -> S {
        self.totals.iter().fold(S::zero(), |a, b| a + *b)
    }
}

/// Occupation field of one path: the bin of every attributed step plus the
/// final per-bin totals.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTimeField<S> {
    occupation: Occupation<S>,
    step_bins: Vec<u32>,
    /// `t_i` for `i = 0..=attributed steps`.
    times: Vec<S>,
}

/// Builds the field of `p`, attributing each grid step to the bin of its
/// midpoint value. Steps after absorption are not attributed.
pub fn occupation_field<S: Scalar>(p: &SampledPath<S>, h: S, x_max: S) -> Result<LocalTimeField<S>> {
    let top = p.max();
    if x_max < top {
        return Err(Error::arg(format!(
            "x_max = {x_max} is below the path maximum {top}"
        )));
    }
    let bins = Bins::covering(h, x_max)?;
    let steps = p.zeta_index().unwrap_or(p.len() - 1);
    let mut occupation = Occupation::new(bins);
    let mut step_bins = Vec::with_capacity(p.len() - 1);
    let mut times = Vec::with_capacity(steps + 1);
    let v = p.values();
    times.push(S::zero());
    for i in 0..steps {
        let j = occupation.add_step(v[i], v[i + 1], p.step_duration(i));
        step_bins.push(j as u32);
        times.push(p.time_of(i + 1));
    }
    step_bins.resize(p.len() - 1, UNATTRIBUTED);
    Ok(LocalTimeField {
        occupation,
        step_bins,
        times,
    })
}

impl<S: Scalar> LocalTimeField<S> {
    pub fn bins(&self) -> Bins<S> {
        self.occupation.bins
    }

    pub fn occupation(&self) -> &Occupation<S> {
        &self.occupation
    }

    /// Bin of each attributed step, in time order.
    pub fn attributed_bins(&self) -> impl Iterator<Item = usize> + '_ {
        self.step_bins
            .iter()
            .take_while(|b| **b != UNATTRIBUTED)
            .map(|b| *b as usize)
    }

    /// Source times `t_0 = 0, …` at the ends of attributed steps.
    pub fn times(&self) -> &[S] {
        &self.times
    }

    /// Duration of attributed step `i`.
    pub fn step_duration(&self, i: usize) -> S {
        self.times[i + 1] - self.times[i]
    }

    /// `ℓ̂(t, x)`.
    pub fn local_time(&self, t: S, x: S) -> Result<S> {
        let b = self.bins();
        if !(x >= S::zero() && x <= b.upper()) {
            return Err(Error::arg(format!(
                "level {x} outside [0, {}]",
                b.upper()
            )));
        }
        let target = b.index_of(x);
        let mut acc = S::zero();
        for (i, j) in self.attributed_bins().enumerate() {
            if self.times[i + 1] > t {
                if self.times[i] < t && j == target {
                    acc = acc + (t - self.times[i]);
                }
                break;
            }
            if j == target {
                acc = acc + self.step_duration(i);
            }
        }
        Ok(acc / (b.h + b.h))
    }

    /// `ℓ̂(∞, x)`: the local time at the end of the path.
    pub fn total_local_time(&self, x: S) -> Result<S> {
        let b = self.bins();
        if !(x >= S::zero() && x <= b.upper()) {
            return Err(Error::arg(format!(
                "level {x} outside [0, {}]",
                b.upper()
            )));
        }
        Ok(self.occupation.local_time(x))
    }

    /// `Σ_j O(∞, j)`, equal to `min(t_end, ζ)` up to rounding.
    pub fn total_time(&self) -> S {
        self.occupation.total_time()
    }

    /// CSV with one row per `every`-th grid time and one column per bin
    /// midpoint; entries are `ℓ̂(t_i, ·)`.
    pub fn write_csv<W: Write>(&self, mut w: W, every: usize) -> Result<()> {
        let b = self.bins();
        let every = every.max(1);
        write!(w, "t")?;
        for j in 0..b.count {
            write!(w, ",{}", b.midpoint(j))?;
        }
        writeln!(w)?;
        let two_h = b.h + b.h;
        let mut acc = vec![S::zero(); b.count];
        let write_row = |w: &mut W, t: S, acc: &[S]| -> Result<()> {
            write!(w, "{t}")?;
            for o in acc {
                write!(w, ",{}", *o / two_h)?;
            }
            writeln!(w)?;
            Ok(())
        };
        write_row(&mut w, S::zero(), &acc)?;
        let n = self.times.len() - 1;
        for (i, j) in self.attributed_bins().enumerate() {
            acc[j] = acc[j] + self.step_duration(i);
            if (i + 1) % every == 0 || i + 1 == n {
                write_row(&mut w, self.times[i + 1], &acc)?;
            }
        }
        Ok(())
    }
}
