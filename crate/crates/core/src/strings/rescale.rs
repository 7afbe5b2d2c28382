//! Regular-variation rescaling `m ↦ m_λ` and the global bound
//! `|m_λ(x)| ≤ C x^{ε−1}` on `(0, 1]`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Atom, RealFn, StringModel, Values};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Cutoff `X` used to estimate `m(∞)` as `m(X)` when it is not declared.
pub const INFINITY_CUTOFF: f64 = 1e6;

/// A slowly varying function `K`, supplied by the caller.
#[derive(Clone)]
pub struct SlowlyVarying<S> {
    label: String,
    f: RealFn<S>,
}

impl<S: Scalar> std::fmt::Debug for SlowlyVarying<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SlowlyVarying({})", self.label)
    }
}

impl<S: Scalar> SlowlyVarying<S> {
    pub fn one() -> Self {
        SlowlyVarying {
            label: "1".into(),
            f: Arc::new(|_| S::one()),
        }
    }

    /// `K(λ) = log λ`.
    pub fn log() -> Self {
        SlowlyVarying {
            label: "log".into(),
            f: Arc::new(|x: S| x.ln()),
        }
    }

    pub fn custom(label: impl Into<String>, f: RealFn<S>) -> Self {
        SlowlyVarying {
            label: label.into(),
            f,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: S) -> S {
        (self.f)(x)
    }

    /// Heuristic slow-variation check: the largest `|K(λx)/K(λ) − 1|` over the
    /// given grid. It only inspects finitely many points and certifies nothing.
    pub fn ratio_deviation(&self, xs: &[S], lambdas: &[S]) -> S {
        let mut worst = S::zero();
        for &l in lambdas {
            let base = self.eval(l);
            for &x in xs {
                let r = (self.eval(l * x) / base - S::one()).abs();
                worst = if r.is_nan() { S::infinity() } else { worst.max(r) };
            }
        }
        worst
    }
}

/// `m_λ` of the regular-variation family: with `v = λ^{1/α−1} K(λ)`,
/// `m_λ(x) = m(λx)/v` for `α < 1`, `(m(λx) − m(λ))/v` for `α = 1` and
/// `(m(λx) − m(∞))/v` for `α > 1`; in all cases `dm_λ(x) = dm(λx)/v`.
pub fn rescale<S: Scalar>(
    m: &StringModel<S>,
    lambda: S,
    alpha: S,
    k: &SlowlyVarying<S>,
) -> Result<StringModel<S>> {
    if !(lambda > S::zero() && lambda.is_finite()) {
        return Err(Error::arg(format!("lambda must be positive, got {lambda}")));
    }
    if !(alpha > S::zero() && alpha.is_finite()) {
        return Err(Error::arg(format!("alpha must be positive, got {alpha}")));
    }
    let one = S::one();
    let v = lambda.powf(one / alpha - one) * k.eval(lambda);
    if !(v > S::zero() && v.is_finite()) {
        return Err(Error::arg(format!(
            "normalisation lambda^(1/alpha-1) K(lambda) = {v} must be positive and finite"
        )));
    }
    let shift = if alpha < one {
        S::zero()
    } else if alpha == one {
        m.value_at(lambda)?
    } else {
        m.m_infinity(S::lit(INFINITY_CUTOFF)).map_err(|e| {
            Error::InvalidString(format!(
                "case alpha > 1 needs m(inf) < inf: {e}"
            ))
        })?
    };

    let rho = m.density.clone();
    let density: RealFn<S> = Arc::new(move |x: S| lambda * rho(lambda * x) / v);
    let atoms: Vec<Atom<S>> = m
        .atoms
        .iter()
        .map(|a| Atom {
            x: a.x / lambda,
            mass: a.mass / v,
        })
        .collect();
    let values: RealFn<S> = match &m.values {
        Values::Closed(f) => {
            let f = f.clone();
            Arc::new(move |x: S| (f(lambda * x) - shift) / v)
        }
        Values::Anchored { .. } => {
            let base = m.clone();
            Arc::new(move |x: S| match base.value_at(lambda * x) {
                Ok(val) => (val - shift) / v,
                Err(_) => S::nan(),
            })
        }
    };
    let moment = m.moment.as_ref().map(|mom| {
        let mom = mom.clone();
        Arc::new(move |x: S| mom(lambda * x) / (lambda * v)) as RealFn<S>
    });
    let at_infinity = if alpha > one {
        Some(S::zero())
    } else {
        m.at_infinity.map(|inf| (inf - shift) / v)
    };
    Ok(StringModel {
        label: format!(
            "rescale({}, lambda={lambda}, alpha={alpha}, K={})",
            m.label,
            k.label()
        ),
        density,
        atoms,
        values: Values::Closed(values),
        moment,
        at_infinity,
        text: None,
        quad: m.quad,
    })
}

/// Power-law growth exponent above which a running supremum counts as divergent.
pub const GROWTH_EXPONENT_TOL: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonScan {
    pub epsilon: f64,
    pub sup: f64,
    /// Growth exponent of the running sup as `x` decreases (per decade, log10).
    pub x_exponent: f64,
    /// Growth exponent of the running sup as `λ` increases.
    pub lambda_exponent: f64,
    pub admissible: bool,
}

/// Outcome of [`fit_global_bound`]. When `holds` is false no grid value of
/// `ε` gave a bounded trend and `epsilon`/`constant` are NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalBound {
    pub holds: bool,
    pub epsilon: f64,
    pub constant: f64,
    pub lambda_0: f64,
    pub scans: Vec<EpsilonScan>,
}

fn trailing_exponent(running_sup: &[f64], decades_per_step: f64) -> f64 {
    let n = running_sup.len();
    if n < 4 {
        return f64::NAN;
    }
    let (a, b) = (running_sup[n - 4], running_sup[n - 1]);
    if !(a.is_finite() && b.is_finite()) {
        return f64::INFINITY;
    }
    if a <= 0.0 {
        return if b > 0.0 { f64::INFINITY } else { 0.0 };
    }
    (b / a).log10() / (3.0 * decades_per_step)
}

/// Searches `eps_grid` for the largest `ε ∈ (0, 1)` for which
/// `sup |m_λ(x)| x^{1−ε}` over sampled `x ∈ (0, 1]` and `λ > λ0` stays bounded.
pub fn fit_global_bound<S, F>(family: F, lambda_0: S, eps_grid: &[S]) -> Result<GlobalBound>
where
    S: Scalar,
    F: Fn(S) -> Result<StringModel<S>>,
{
    if !(lambda_0 > S::zero()) {
        return Err(Error::arg(format!("lambda_0 must be positive, got {lambda_0}")));
    }
    // x_k = 10^{-k/4} down to 1e-8; λ_j = λ0 · 10^{j/2} up to λ0 · 1e5.
    let xs: Vec<S> = (0..=32).map(|k| S::lit(10f64.powf(-(k as f64) / 4.0))).collect();
    let lambdas: Vec<S> = (1..=10)
        .map(|j| lambda_0 * S::lit(10f64.powf(j as f64 / 2.0)))
        .collect();
    // |m_λ(x)| on the grid, rows = λ.
    let mut table = Vec::with_capacity(lambdas.len());
    for &l in &lambdas {
        let m = family(l)?;
        let row: Result<Vec<f64>> = xs
            .iter()
            .map(|&x| m.value_at(x).map(|v| v.as_f64().abs()))
            .collect();
        table.push(row?);
    }
    let xs_f: Vec<f64> = xs.iter().map(|x| x.as_f64()).collect();
    let mut scans = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let e = eps.as_f64();
        if !(e > 0.0 && e < 1.0) {
            return Err(Error::arg(format!("epsilon must lie in (0, 1), got {e}")));
        }
        let weighted: Vec<Vec<f64>> = table
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&xs_f)
                    .map(|(v, x)| v * x.powf(1.0 - e))
                    .collect()
            })
            .collect();
        // Running sup over x ≥ x_k (all λ), sampled once per decade.
        let mut x_run = Vec::new();
        let mut acc = 0.0f64;
        for (k, _) in xs_f.iter().enumerate() {
            for row in &weighted {
                acc = acc.max(row[k]);
                if row[k].is_nan() {
                    acc = f64::INFINITY;
                }
            }
            if k % 4 == 0 {
                x_run.push(acc);
            }
        }
        // Running sup over λ ≤ λ_j (all x), one entry per half-decade.
        let mut l_run = Vec::new();
        let mut acc_l = 0.0f64;
        for row in &weighted {
            for &v in row {
                acc_l = if v.is_nan() { f64::INFINITY } else { acc_l.max(v) };
            }
            l_run.push(acc_l);
        }
        let x_exponent = trailing_exponent(&x_run, 1.0);
        let lambda_exponent = trailing_exponent(&l_run, 0.5);
        let sup = acc.max(acc_l);
        let admissible = sup.is_finite()
            && x_exponent <= GROWTH_EXPONENT_TOL
            && lambda_exponent <= GROWTH_EXPONENT_TOL;
        scans.push(EpsilonScan {
            epsilon: e,
            sup,
            x_exponent,
            lambda_exponent,
            admissible,
        });
    }
    let best = scans
        .iter()
        .filter(|s| s.admissible)
        .max_by(|a, b| a.epsilon.partial_cmp(&b.epsilon).expect("finite eps"));
    Ok(match best {
        Some(b) => GlobalBound {
            holds: true,
            epsilon: b.epsilon,
            constant: b.sup,
            lambda_0: lambda_0.as_f64(),
            scans: scans.clone(),
        },
        None => GlobalBound {
            holds: false,
            epsilon: f64::NAN,
            constant: f64::NAN,
            lambda_0: lambda_0.as_f64(),
            scans,
        },
    })
}
