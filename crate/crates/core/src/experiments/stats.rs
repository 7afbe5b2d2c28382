//! Empirical samples and Kolmogorov–Smirnov statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sorted sample of reals. `+∞` is allowed (censored values).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSample {
    pub label: String,
    values: Vec<f64>,
}

impl EmpiricalSample {
    pub fn new(label: impl Into<String>, mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::arg("an empirical sample needs at least one value"));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::arg("empirical samples cannot contain NaN"));
        }
        values.sort_by(f64::total_cmp);
        Ok(EmpiricalSample {
            label: label.into(),
            values,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `F(x) = #{v ≤ x}/n`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.values.partition_point(|v| *v <= x) as f64 / self.len() as f64
    }

    /// Empirical quantile (lower, no interpolation).
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.len();
        let i = ((q.clamp(0.0, 1.0) * n as f64).ceil() as usize).clamp(1, n) - 1;
        self.values[i]
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    pub fn mean_ci(&self) -> MeanEstimate {
        MeanEstimate::from_values(&self.values)
    }
}

/// Mean with a 95% CLT half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub half_width: f64,
    pub n: usize,
}

impl MeanEstimate {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        MeanEstimate {
            mean,
            half_width: 1.96 * (var / n as f64).sqrt(),
            n,
        }
    }
}

/// `sup |F_a − F_b|` over the pooled sample points.
pub fn ks_two_sample(a: &EmpiricalSample, b: &EmpiricalSample) -> f64 {
    let (x, y) = (a.values(), b.values());
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let t = if x[i].total_cmp(&y[j]).is_le() { x[i] } else { y[j] };
        while i < x.len() && x[i] == t {
            i += 1;
        }
        while j < y.len() && y[j] == t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// `sup |F_a − F|` with both one-sided gaps at every sample point.
pub fn ks_one_sample(a: &EmpiricalSample, cdf: impl Fn(f64) -> f64) -> f64 {
    let n = a.len() as f64;
    let v = a.values();
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < v.len() {
        let x = v[i];
        let mut k = i;
        while k < v.len() && v[k] == x {
            k += 1;
        }
        let f = cdf(x);
        d = d.max((k as f64 / n - f).abs()).max((f - i as f64 / n).abs());
        i = k;
    }
    d
}

/// Dvoretzky–Kiefer–Wolfowitz half-width: `P(sup |F_n − F| > ε) ≤ α`.
pub fn dkw_epsilon(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn s(v: &[f64]) -> EmpiricalSample {
        EmpiricalSample::new("t", v.to_vec()).unwrap()
    }

    #[test]
    fn two_sample_examples() {
        assert_eq!(ks_two_sample(&s(&[1.0, 2.0, 3.0]), &s(&[3.0, 1.0, 2.0])), 0.0);
        assert_eq!(ks_two_sample(&s(&[0.0, 0.5]), &s(&[1.0, 2.0])), 1.0);
        let d = ks_two_sample(&s(&[1.0, 2.0, 3.0]), &s(&[1.5, 2.5]));
        assert!((d - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn infinite_values_are_ties() {
        let a = s(&[1.0, f64::INFINITY, f64::INFINITY]);
        let b = s(&[1.0, f64::INFINITY, f64::INFINITY]);
        assert_eq!(ks_two_sample(&a, &b), 0.0);
    }

    #[test]
    fn one_sample_examples() {
        // point mass against a continuous law
        let d = ks_one_sample(&s(&[0.5; 10]), |x| x.clamp(0.0, 1.0));
        assert!(d >= 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>()).collect();
        let d = ks_one_sample(&EmpiricalSample::new("u", u).unwrap(), |x| x.clamp(0.0, 1.0));
        assert!(d <= 0.01);
        assert!(dkw_epsilon(100_000, 1e-3) < 0.01);
    }

    #[test]
    fn summaries() {
        let a = s(&[4.0, 1.0, 3.0, 2.0]);
        assert_eq!(a.values(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(a.median(), 2.0);
        assert_eq!(a.cdf(2.5), 0.5);
        assert_eq!(a.mean(), 2.5);
        assert!(EmpiricalSample::new("e", vec![]).is_err());
        assert!(EmpiricalSample::new("n", vec![f64::NAN]).is_err());
    }
}
