//! Tightness integrals `I(δ, λ)` of a family `λ ↦ m_λ`.

use serde::{Deserialize, Serialize};

use super::{class_integral, ClassKind, StringModel};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Slope (log-log, `S(δ)` against `δ`) at or above which the family is tight.
pub const TIGHT_SLOPE: f64 = 0.1;
/// Slope below which the family is declared not tight.
pub const NOT_TIGHT_SLOPE: f64 = 0.02;
/// `S(δ)` below this absolute level counts as zero.
pub const NEGLIGIBLE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TightnessVerdict {
    Tight,
    NotTight,
    Inconclusive,
}

impl std::fmt::Display for TightnessVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TightnessVerdict::Tight => "tight",
            TightnessVerdict::NotTight => "not tight",
            TightnessVerdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessReport {
    pub family: String,
    pub kind: ClassKind,
    pub deltas: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// `values[i][j] = I(deltas[i], lambdas[j])`.
    pub values: Vec<Vec<f64>>,
    /// `S(δ)`: max of `I(δ, ·)` over the upper half of the λ grid.
    pub limsup: Vec<f64>,
    /// Log-log slope of `S` over the two smallest δ.
    pub final_slope: f64,
    pub verdict: TightnessVerdict,
    pub note: String,
}

/// Tabulates the tightness integral on the `(δ, λ)` grid and judges whether
/// `lim_{δ→0} limsup_λ I(δ, λ) = 0`.
///
/// The limsup is approximated by the max over the upper half of `lambdas`; the
/// limit in δ by the trend of that max over the final pair of `deltas`.
pub fn tightness_report<S, F>(
    family_id: &str,
    family: F,
    kind: ClassKind,
    deltas: &[S],
    lambdas: &[S],
) -> Result<TightnessReport>
where
    S: Scalar,
    F: Fn(S) -> Result<StringModel<S>>,
{
    if deltas.len() < 2 || lambdas.is_empty() {
        return Err(Error::arg("tightness needs at least two deltas and one lambda"));
    }
    if deltas.windows(2).any(|w| !(w[1] < w[0])) || !(deltas[deltas.len() - 1] > S::zero()) {
        return Err(Error::arg("deltas must be positive and strictly decreasing"));
    }
    if lambdas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::arg("lambdas must be strictly increasing"));
    }
    let mut columns = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let m = family(l)
            .and_then(|m| m.check_invariants().map(|_| m))
            .map_err(|e| Error::InvalidString(format!("family member at lambda = {l}: {e}")))?;
        let col: Result<Vec<f64>> = deltas
            .iter()
            .map(|&d| class_integral(&m, kind, d, S::zero()).map(|v| v.as_f64()))
            .collect();
        columns.push(col.map_err(|e| match e {
            Error::InvalidArgument(msg) => Error::InvalidArgument(msg),
            other => Error::InvalidString(format!("lambda = {l}: {other}")),
        })?);
    }
    let values: Vec<Vec<f64>> = (0..deltas.len())
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect();
    let upper = lambdas.len() / 2;
    let limsup: Vec<f64> = values
        .iter()
        .map(|row| row[upper..].iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let n = deltas.len();
    let (d0, d1) = (deltas[n - 2].as_f64(), deltas[n - 1].as_f64());
    let (s0, s1) = (limsup[n - 2], limsup[n - 1]);
    let final_slope = if (s1 <= NEGLIGIBLE && s0 <= NEGLIGIBLE) || s1 <= 0.0 {
        f64::INFINITY
    } else {
        (s0 / s1).ln() / (d0 / d1).ln()
    };
    let nonincreasing = limsup.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + NEGLIGIBLE);
    let verdict = if !limsup.iter().all(|v| v.is_finite()) {
        TightnessVerdict::NotTight
    } else if s1 <= NEGLIGIBLE || (nonincreasing && final_slope >= TIGHT_SLOPE) {
        TightnessVerdict::Tight
    } else if final_slope < NOT_TIGHT_SLOPE {
        TightnessVerdict::NotTight
    } else {
        TightnessVerdict::Inconclusive
    };
    let note = format!(
        "limsup over lambda >= {} approximated by the grid max; S(delta) ~ delta^{:.3} between delta = {} and {}",
        lambdas[upper].as_f64(),
        final_slope,
        d0,
        d1
    );
    Ok(TightnessReport {
        family: family_id.to_string(),
        kind,
        deltas: deltas.iter().map(|d| d.as_f64()).collect(),
        lambdas: lambdas.iter().map(|l| l.as_f64()).collect(),
        values,
        limsup,
        final_slope,
        verdict,
        note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strings::{make_power_string, make_table_string, rescale, SlowlyVarying};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn spike_family(l: f64, weight: fn(f64) -> f64) -> Result<StringModel<f64>> {
        let base = make_power_string(1.0)?;
        let spike = make_table_string(
            Arc::new(move |x: f64| if x <= 1.0 / l { weight(l) } else { 0.0 }),
            vec![],
            (1.0, 0.0),
        )?
        // Adaptive quadrature cannot be trusted to find a spike of width 1/λ.
        .with_moment(Arc::new(move |x: f64| 0.5 * weight(l) * x.min(1.0 / l).powi(2)));
        base.plus(&spike)
    }

    #[test]
    fn constant_family_is_lambda_constant() {
        let deltas = [0.1, 0.01, 1e-3, 1e-4];
        let lambdas = [1.0, 10.0, 100.0, 1000.0];
        for kind in [ClassKind::M, ClassKind::ML, ClassKind::M1] {
            let r = tightness_report(
                "power",
                |_| make_power_string(0.5),
                kind,
                &deltas,
                &lambdas,
            )
            .unwrap();
            for row in &r.values {
                for v in row {
                    assert!((v - row[0]).abs() <= 1e-10 * row[0].abs().max(1e-300));
                }
            }
            assert_eq!(r.verdict, TightnessVerdict::Tight, "{kind:?}");
        }
    }

    #[test]
    fn self_similar_family_is_lambda_constant() {
        let m = make_power_string(3.0).unwrap();
        let r = tightness_report(
            "power3",
            |l| rescale(&m, l, 3.0, &SlowlyVarying::one()),
            ClassKind::ML,
            &[0.1, 0.01, 1e-3],
            &[1.0, 1e2, 1e4],
        )
        .unwrap();
        for row in &r.values {
            for v in row {
                assert!((v - row[0]).abs() <= 1e-10 * row[0]);
            }
        }
    }

    #[test]
    fn log_family_is_tight() {
        let m = make_table_string(Arc::new(|x: f64| 1.0 / (1.0 + x)), vec![], (0.0, 0.0))
            .unwrap()
            .with_values(Arc::new(|x: f64| x.ln_1p()));
        let r = tightness_report(
            "log1p",
            |l| rescale(&m, l, 1.0, &SlowlyVarying::one()),
            ClassKind::ML,
            &[0.1, 0.01, 1e-3, 1e-4],
            &[10.0, 100.0, 1e3, 1e4],
        )
        .unwrap();
        assert_eq!(r.verdict, TightnessVerdict::Tight, "{r:?}");
    }

    #[test]
    fn vanishing_spike_is_tight_and_matches_closed_form() {
        let lambdas = [1e4, 1e5, 1e6, 1e7];
        let deltas = [0.1, 0.01, 1e-3];
        let r = tightness_report(
            "spike",
            |l| spike_family(l, |l| l),
            ClassKind::M,
            &deltas,
            &lambdas,
        )
        .unwrap();
        // ∫_(0,δ] x dm_λ = δ + 1/(2λ)
        for (i, d) in deltas.iter().enumerate() {
            for (j, l) in lambdas.iter().enumerate() {
                assert_relative_eq!(r.values[i][j], d + 0.5 / l, max_relative = 1e-7);
            }
        }
        assert_eq!(r.verdict, TightnessVerdict::Tight);
    }

    #[test]
    fn persistent_spike_is_not_tight() {
        // density λ² on (0, 1/λ]: ∫ x dm = 1/2 for every λ.
        let r = tightness_report(
            "fat-spike",
            |l| spike_family(l, |l| l * l),
            ClassKind::M,
            &[0.1, 0.01, 1e-3],
            &[1e4, 1e5, 1e6, 1e7],
        )
        .unwrap();
        assert_eq!(r.verdict, TightnessVerdict::NotTight, "{r:?}");
    }

    #[test]
    fn values_nondecreasing_in_delta() {
        let r = tightness_report(
            "spike",
            |l| spike_family(l, |l| l),
            ClassKind::ML,
            &[0.3, 0.1, 0.01],
            &[10.0, 100.0],
        )
        .unwrap();
        for j in 0..2 {
            for i in 1..3 {
                assert!(r.values[i][j] >= 0.0 && r.values[i][j] <= r.values[i - 1][j]);
            }
        }
    }

    #[test]
    fn invalid_member_names_lambda() {
        let err = tightness_report(
            "broken",
            |l: f64| {
                make_table_string(Arc::new(move |x: f64| if x < l { 1.0 } else { 0.0 }), vec![], (0.0, 0.0))
            },
            ClassKind::M,
            &[0.1, 0.01],
            &[2.0],
        )
        .unwrap_err();
        assert!(err.to_string().contains("lambda = 2"), "{err}");
    }
}
