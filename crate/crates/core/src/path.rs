//! Grid-sampled nonnegative paths.

use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// How a path ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathEnd {
    /// Absorbed at 0 at this index; the value there (and after) is 0.
    Absorbed { index: usize },
    /// Deliberately stopped: a first passage, or a transient path cut at `t_max`.
    Stopped,
    /// The time budget ran out before absorption.
    Open,
}

impl fmt::Display for PathEnd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathEnd::Absorbed { index } => write!(f, "{index}"),
            PathEnd::Stopped => f.write_str("stopped"),
            PathEnd::Open => f.write_str("open"),
        }
    }
}

/// Values `e(0), e(dt), e(2dt), …` of a path.
///
/// For absorbed paths the true hitting time of 0 may be known more precisely
/// than the grid; it lies in `((index − 1)·dt, index·dt]` and is reported by
/// [`SampledPath::lifetime`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath<S> {
    dt: S,
    values: Vec<S>,
    end: PathEnd,
    zeta: Option<S>,
    origin: String,
}

impl<S: Scalar> SampledPath<S> {
    pub fn new(dt: S, values: Vec<S>, end: PathEnd, origin: impl Into<String>) -> Result<Self> {
        if !(dt > S::zero() && dt.is_finite()) {
            return Err(Error::arg(format!("dt must be positive, got {dt}")));
        }
        if values.is_empty() {
            return Err(Error::arg("a path needs at least one value"));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= S::zero() && v.is_finite())) {
            return Err(Error::arg(format!("path values must be finite and >= 0, got {v}")));
        }
        if let PathEnd::Absorbed { index } = end {
            if index >= values.len() || index == 0 {
                return Err(Error::arg(format!(
                    "absorption index {index} outside 1..{}",
                    values.len()
                )));
            }
            if values[index..].iter().any(|v| *v != S::zero()) {
                return Err(Error::arg("values must vanish from the absorption index on"));
            }
            if values[1..index].iter().any(|v| *v <= S::zero()) {
                return Err(Error::arg("values must be positive before absorption"));
            }
        }
        Ok(SampledPath {
            dt,
            values,
            end,
            zeta: None,
            origin: origin.into(),
        })
    }

    /// Records the hitting time of 0 inside the absorbing step.
    pub(crate) fn with_lifetime(mut self, zeta: S) -> Self {
        if let PathEnd::Absorbed { index } = self.end {
            let hi = self.dt * S::from_usize(index).expect("index fits");
            let lo = hi - self.dt;
            if zeta > lo && zeta <= hi {
                self.zeta = Some(zeta);
            }
        }
        self
    }

    pub fn dt(&self) -> S {
        self.dt
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn end(&self) -> PathEnd {
        self.end
    }

    pub fn origin(&self) -> &str {
        &self.origin
    }

    pub fn zeta_index(&self) -> Option<usize> {
        match self.end {
            PathEnd::Absorbed { index } => Some(index),
            _ => None,
        }
    }

    pub fn is_open_ended(&self) -> bool {
        self.end == PathEnd::Open
    }

    fn index_time(&self, i: usize) -> S {
        self.dt * S::from_usize(i).expect("index fits")
    }

    /// `ζ`, refined inside the absorbing step when known.
    pub fn lifetime(&self) -> Option<S> {
        self.zeta_index()
            .map(|i| self.zeta.unwrap_or_else(|| self.index_time(i)))
    }

    /// Time of the last grid point (the lifetime for absorbed paths).
    pub fn duration(&self) -> S {
        self.lifetime()
            .unwrap_or_else(|| self.index_time(self.values.len() - 1))
    }

    /// Time of grid point `i`; the absorption index maps to the refined lifetime.
    pub fn time_of(&self, i: usize) -> S {
        match (self.end, self.zeta) {
            (PathEnd::Absorbed { index }, Some(z)) if i == index => z,
            _ => self.index_time(i),
        }
    }

    /// Length of the step from grid point `i` to `i + 1`.
    pub fn step_duration(&self, i: usize) -> S {
        self.time_of(i + 1) - self.time_of(i)
    }

    /// `M`, the maximum over grid points.
    pub fn max(&self) -> S {
        self.values.iter().copied().fold(S::zero(), S::max)
    }

    /// First grid index with value `>= x` (`τ_x`).
    pub fn first_passage_index(&self, x: S) -> Option<usize> {
        self.values.iter().position(|v| *v >= x)
    }

    /// Linear interpolation; 0 after absorption, last value after a stop.
    pub fn value_at_time(&self, t: S) -> S {
        if t <= S::zero() {
            return self.values[0];
        }
        if let Some(z) = self.lifetime() {
            if t >= z {
                return S::zero();
            }
        }
        let pos = t / self.dt;
        let i = pos.floor().to_usize().unwrap_or(usize::MAX);
        if i + 1 >= self.values.len() {
            return self.values[self.values.len() - 1];
        }
        let (t0, t1) = (self.time_of(i), self.time_of(i + 1));
        let w = (t - t0) / (t1 - t0);
        self.values[i] + (self.values[i + 1] - self.values[i]) * w
    }

    /// The path run backward: `e(ζ − t)` (or from its final grid point).
    pub fn time_reverse(&self) -> Result<Self> {
        if self.is_open_ended() {
            return Err(Error::OpenEnded(format!(
                "cannot reverse `{}` without a finite end",
                self.origin
            )));
        }
        let stop = self.zeta_index().map_or(self.values.len(), |i| i + 1);
        let values: Vec<S> = self.values[..stop].iter().rev().copied().collect();
        let n = values.len();
        let end = if n > 1
            && values[n - 1] == S::zero()
            && values[1..n - 1].iter().all(|v| *v > S::zero())
        {
            PathEnd::Absorbed { index: n - 1 }
        } else {
            PathEnd::Stopped
        };
        SampledPath::new(self.dt, values, end, format!("reverse({})", self.origin))
    }

    /// `e^{λ₁,λ₂}(t) = e(λ₁ t)/λ₂`: the grid step becomes `dt/λ₁`.
    pub fn rescale_path(&self, lambda1: S, lambda2: S) -> Result<Self> {
        if !(lambda1 > S::zero() && lambda2 > S::zero()) {
            return Err(Error::arg("rescaling factors must be positive"));
        }
        Ok(SampledPath {
            dt: self.dt / lambda1,
            values: self.values.iter().map(|v| *v / lambda2).collect(),
            end: self.end,
            zeta: self.zeta.map(|z| z / lambda1),
            origin: self.origin.clone(),
        })
    }

    /// Two-column CSV `t,value` after a `#` header line with `dt`,
    /// `zeta_index`, `lifetime` and `origin_note`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let lifetime = self
            .lifetime()
            .map_or_else(|| "-".to_string(), |z| z.to_string());
        writeln!(
            w,
            "# dt={} zeta_index={} lifetime={} origin_note={}",
            self.dt, self.end, lifetime, self.origin
        )?;
        writeln!(w, "t,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", self.time_of(i), v)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty path file".into()))??;
        let header = header
            .strip_prefix("# ")
            .ok_or_else(|| Error::Parse("path file must start with a `# dt=...` header".into()))?;
        let (fields, origin) = header
            .split_once(" origin_note=")
            .ok_or_else(|| Error::Parse("header lacks origin_note".into()))?;
        let mut dt = None;
        let mut end = None;
        let mut zeta = None;
        for kv in fields.split_whitespace() {
            match kv.split_once('=') {
                Some(("dt", v)) => dt = v.parse::<f64>().ok(),
                Some(("zeta_index", "stopped")) => end = Some(PathEnd::Stopped),
                Some(("zeta_index", "open")) => end = Some(PathEnd::Open),
                Some(("zeta_index", v)) => {
                    end = v.parse().ok().map(|index| PathEnd::Absorbed { index })
                }
                Some(("lifetime", "-")) => {}
                Some(("lifetime", v)) => zeta = v.parse::<f64>().ok(),
                _ => return Err(Error::Parse(format!("unexpected header field `{kv}`"))),
            }
        }
        let dt = dt.ok_or_else(|| Error::Parse("header lacks a numeric dt".into()))?;
        let end = end.ok_or_else(|| Error::Parse("header lacks zeta_index".into()))?;
        match lines.next() {
            Some(Ok(l)) if l.trim() == "t,value" => {}
            _ => return Err(Error::Parse("expected column header `t,value`".into())),
        }
        let mut values = Vec::new();
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let v = line
                .split_once(',')
                .and_then(|(_, v)| v.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Parse(format!("line {}: expected `t,value`", n + 3)))?;
            values.push(S::lit(v));
        }
        let p = SampledPath::new(S::lit(dt), values, end, origin)?;
        Ok(match zeta {
            Some(z) => p.with_lifetime(S::lit(z)),
            None => p,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tent() -> SampledPath<f64> {
        SampledPath::new(0.5, vec![0.0, 1.0, 2.0, 1.0, 0.0], PathEnd::Absorbed { index: 4 }, "tent")
            .unwrap()
    }

    #[test]
    fn invariants_are_enforced() {
        assert!(SampledPath::new(0.0, vec![1.0], PathEnd::Stopped, "").is_err());
        assert!(SampledPath::new(1.0, vec![1.0, -0.1], PathEnd::Stopped, "").is_err());
        assert!(SampledPath::new(1.0, vec![1.0, 0.0, 1.0], PathEnd::Absorbed { index: 1 }, "").is_err());
        assert!(SampledPath::new(1.0, vec![1.0, 0.0, 1.0, 0.0], PathEnd::Absorbed { index: 3 }, "").is_err());
    }

    #[test]
    fn basic_accessors() {
        let p = tent();
        assert_eq!(p.max(), 2.0);
        assert_eq!(p.lifetime(), Some(2.0));
        assert_eq!(p.first_passage_index(1.5), Some(2));
        assert_eq!(p.value_at_time(0.25), 0.5);
        assert_eq!(p.value_at_time(5.0), 0.0);
    }

    #[test]
    fn reverse_twice_is_identity() {
        let p = SampledPath::new(0.1, vec![0.0, 0.3, 0.2, 1.0], PathEnd::Stopped, "fp").unwrap();
        let r = p.time_reverse().unwrap();
        assert_eq!(r.values(), &[1.0, 0.2, 0.3, 0.0]);
        assert_eq!(r.zeta_index(), Some(3));
        assert_eq!(r.max(), p.max());
        let rr = r.time_reverse().unwrap();
        assert_eq!(rr.values(), p.values());
        assert_eq!(rr.end(), PathEnd::Stopped);
    }

    #[test]
    fn open_paths_cannot_be_reversed() {
        let p = SampledPath::new(0.1, vec![1.0, 2.0], PathEnd::Open, "bm").unwrap();
        assert!(matches!(p.time_reverse(), Err(Error::OpenEnded(_))));
    }

    #[test]
    fn rescaling() {
        let p = tent();
        assert_eq!(p.rescale_path(1.0, 1.0).unwrap(), p);
        let q = p.rescale_path(4.0, 2.0).unwrap();
        assert_eq!(q.lifetime(), Some(0.5));
        assert_eq!(q.max(), 1.0);
        assert_eq!(q.dt(), 0.125);
    }

    #[test]
    fn refined_lifetime_changes_last_step() {
        let p = tent().with_lifetime(1.8);
        assert_eq!(p.lifetime(), Some(1.8));
        assert!((p.step_duration(3) - 0.3).abs() < 1e-15);
        assert_eq!(p.step_duration(0), 0.5);
        // outside the absorbing step the refinement is ignored
        assert_eq!(tent().with_lifetime(1.2).lifetime(), Some(2.0));
    }

    #[test]
    fn csv_round_trip() {
        let p = tent().with_lifetime(1.9);
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# dt=0.5 zeta_index=4 lifetime=1.9 origin_note=tent\nt,value\n0,0\n"));
        let q = SampledPath::<f64>::read_csv(&buf[..]).unwrap();
        assert_eq!(q, p);
    }
}
