//! Membership tests for the nested classes `M0 ⊂ M1 ⊂ ML ⊂ M`.

use std::cell::Cell;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::StringModel;
use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre_10, integrate, integrate_positive};
use crate::scalar::Scalar;

/// Truncation levels `x_min` at which class integrals are evaluated.
pub const TRUNCATIONS: [f64; 7] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8];

/// Upper limit of every class integral in [`classify`]; below `1/e`.
pub const CLASS_DELTA: f64 = 0.1;

/// A refinement "grows" when it adds more than this fraction of the new value.
pub const TREND_THRESHOLD: f64 = 0.05;

/// Number of trailing refinements the trend rule inspects.
pub const TREND_WINDOW: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassKind {
    /// `∫ x dm`
    M,
    /// `∫ x log log(1/x) dm`
    ML,
    /// `∫ m(x)² dx`
    M1,
}

impl ClassKind {
    pub fn name(self) -> &'static str {
        match self {
            ClassKind::M => "M",
            ClassKind::ML => "ML",
            ClassKind::M1 => "M1",
        }
    }
}

impl std::str::FromStr for ClassKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "M" | "m" => Ok(ClassKind::M),
            "ML" | "ml" | "mlog" => Ok(ClassKind::ML),
            "M1" | "m1" => Ok(ClassKind::M1),
            other => Err(Error::Parse(format!("unknown class kind `{other}`"))),
        }
    }
}

/// Three-valued membership flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flag {
    True,
    False,
    Undetermined,
}

impl Flag {
    pub fn is_true(self) -> bool {
        self == Flag::True
    }

    pub fn is_false(self) -> bool {
        self == Flag::False
    }
}

impl std::fmt::Display for Flag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Flag::True => "true",
            Flag::False => "false",
            Flag::Undetermined => "undetermined",
        };
        f.write_str(s)
    }
}

/// Estimates along the truncation sequence and the trend verdict drawn from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralTrend {
    pub truncations: Vec<f64>,
    pub estimates: Vec<f64>,
    /// `(I_{k+1} - I_k) / |I_{k+1}|` for each refinement.
    pub relative_increments: Vec<f64>,
    /// Mean growth per decade of `x_min` over the trailing window.
    pub slope_per_decade: f64,
    /// `False` = diverges (unbounded), `True` = converges (bounded).
    pub flag: Flag,
}

impl IntegralTrend {
    /// Applies the trailing-window trend rule: divergent when each of the last
    /// [`TREND_WINDOW`] refinements grows by more than [`TREND_THRESHOLD`],
    /// convergent when none does, undetermined otherwise.
    pub fn from_estimates(truncations: &[f64], estimates: Vec<f64>) -> Self {
        let relative_increments: Vec<f64> = estimates
            .windows(2)
            .map(|w| {
                let denom = w[1].abs();
                if denom == 0.0 {
                    0.0
                } else {
                    (w[1] - w[0]) / denom
                }
            })
            .collect();
        let n = relative_increments.len();
        let window = &relative_increments[n.saturating_sub(TREND_WINDOW)..];
        let flag = if estimates.iter().any(|v| !v.is_finite()) {
            Flag::False
        } else if window.len() < TREND_WINDOW {
            Flag::Undetermined
        } else if window.iter().all(|&r| r > TREND_THRESHOLD) {
            Flag::False
        } else if window.iter().all(|&r| r <= TREND_THRESHOLD) {
            Flag::True
        } else {
            Flag::Undetermined
        };
        let k = estimates.len();
        let slope_per_decade = if k > TREND_WINDOW {
            (estimates[k - 1] - estimates[k - 1 - TREND_WINDOW]) / TREND_WINDOW as f64
        } else {
            f64::NAN
        };
        IntegralTrend {
            truncations: truncations.to_vec(),
            estimates,
            relative_increments,
            slope_per_decade,
            flag,
        }
    }
}

/// Class membership report for one string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub label: String,
    pub in_m0: Flag,
    pub in_m1: Flag,
    pub in_ml: Flag,
    pub in_m: Flag,
    pub integral_estimates: BTreeMap<String, IntegralTrend>,
}

impl ClassReport {
    /// Flags from smallest to largest class.
    pub fn flags(&self) -> [Flag; 4] {
        [self.in_m0, self.in_m1, self.in_ml, self.in_m]
    }
}

/// `∫_(x_min, δ]` of the class integrand (`x dm`, `x log log(1/x) dm`, or `m(x)² dx`).
pub fn class_integral<S: Scalar>(
    m: &StringModel<S>,
    kind: ClassKind,
    delta: S,
    x_min: S,
) -> Result<S> {
    if !(x_min >= S::zero() && delta > x_min && delta.is_finite()) {
        return Err(Error::arg(format!(
            "class integral needs 0 <= x_min < delta, got x_min = {x_min}, delta = {delta}"
        )));
    }
    match kind {
        ClassKind::M => m.first_moment(x_min, delta),
        ClassKind::ML => {
            if delta >= S::one() / S::E() {
                return Err(Error::arg(format!(
                    "kind ML needs delta < 1/e so that log log(1/x) > 0, got {delta}"
                )));
            }
            let rho = m.density_fn();
            let f = |x: S| x * (-x.ln()).ln() * rho(x);
            let ac = if x_min == S::zero() {
                integrate(f, x_min, delta, m.quadrature())?.value
            } else {
                integrate_positive(f, x_min, delta, m.quadrature())?.value
            };
            let atoms = m
                .atoms()
                .iter()
                .filter(|a| a.x > x_min && a.x <= delta)
                .fold(S::zero(), |acc, a| acc + a.x * (-a.x.ln()).ln() * a.mass);
            Ok(ac + atoms)
        }
        ClassKind::M1 if !m.has_closed_values() => square_integral_marching(m, delta, x_min),
        ClassKind::M1 => {
            let failure: Cell<Option<Error>> = Cell::new(None);
            let f = |x: S| match m.value_at(x) {
                Ok(v) => v * v,
                Err(e) => {
                    failure.set(Some(e));
                    S::nan()
                }
            };
            let r = if x_min == S::zero() {
                integrate(f, x_min, delta, m.quadrature())
            } else {
                integrate_positive(f, x_min, delta, m.quadrature())
            };
            if let Some(e) = failure.take() {
                return Err(e);
            }
            Ok(r?.value)
        }
    }
}

/// Panel width in `ln x` for [`square_integral_marching`].
const MARCH_PANEL: f64 = 0.25;

/// `∫_{x_min}^δ m(x)² dx` for a string whose values come from quadrature.
///
/// Evaluating `m` inside an adaptive quadrature would nest two adaptive
/// loops. Instead `m` is marched downward from `δ` through the nodes of a
/// fixed Gauss–Legendre rule on panels of width `MARCH_PANEL` in `ln x`,
/// split at atoms. For `x_min = 0` the range stops at `δ·1e-12` and the
/// remainder is approximated by `m(x)²·x` at that point.
fn square_integral_marching<S: Scalar>(m: &StringModel<S>, delta: S, x_min: S) -> Result<S> {
    let lower = if x_min == S::zero() { delta * S::lit(1e-12) } else { x_min };
    let (lu, hu) = (lower.ln(), delta.ln());
    let mut breaks: Vec<S> = vec![lu, hu];
    let panels = ((hu - lu) / S::lit(MARCH_PANEL)).ceil().to_usize().unwrap_or(1).max(1);
    for i in 1..panels {
        breaks.push(lu + (hu - lu) * S::lit(i as f64 / panels as f64));
    }
    for a in m.atoms() {
        if a.x > lower && a.x < delta {
            breaks.push(a.x.ln());
        }
    }
    breaks.sort_by(|p, q| p.partial_cmp(q).expect("finite breaks"));
    breaks.dedup();
    let mut nodes: Vec<(S, S)> = Vec::with_capacity(10 * breaks.len());
    for w in breaks.windows(2) {
        for (u, wt) in gauss_legendre_10(w[0], w[1]) {
            let x = u.exp();
            nodes.push((x, wt * x));
        }
    }
    let mut value = m.value_at(delta)?;
    let mut at = delta;
    let mut total = S::zero();
    for &(x, w) in nodes.iter().rev() {
        value = value - m.measure_of(x, at)?;
        at = x;
        total = total + w * value * value;
    }
    if x_min == S::zero() {
        let v = m.value_at(lower)?;
        total = total + v * v * lower;
    }
    Ok(total)
}

fn trend_for<S: Scalar>(m: &StringModel<S>, kind: ClassKind) -> Result<IntegralTrend> {
    let delta = S::lit(CLASS_DELTA);
    let mut estimates = Vec::with_capacity(TRUNCATIONS.len());
    for &x in &TRUNCATIONS {
        match class_integral(m, kind, delta, S::lit(x)) {
            Ok(v) => estimates.push(v.as_f64()),
            // A quadrature blow-up on a shrinking range is itself divergence evidence.
            Err(Error::Quadrature { .. }) => estimates.push(f64::INFINITY),
            Err(e) => return Err(e),
        }
    }
    Ok(IntegralTrend::from_estimates(&TRUNCATIONS, estimates))
}

fn boundedness_trend<S: Scalar>(m: &StringModel<S>) -> Result<IntegralTrend> {
    let mut values = Vec::with_capacity(TRUNCATIONS.len());
    for &x in &TRUNCATIONS {
        values.push(m.value_at(S::lit(x))?.as_f64().abs());
    }
    Ok(IntegralTrend::from_estimates(&TRUNCATIONS, values))
}

/// Trend of `∫_(x_min, δ] x dm` along [`TRUNCATIONS`]; its flag decides
/// membership in `M` (time-changeability) on its own.
pub fn membership_m<S: Scalar>(m: &StringModel<S>) -> Result<IntegralTrend> {
    trend_for(m, ClassKind::M)
}

/// Makes flags respect `M0 ⇒ M1 ⇒ ML ⇒ M`: contradictory pairs become
/// undetermined, then implications fill the undetermined slots.
fn reconcile(flags: &mut [Flag; 4]) {
    for i in 0..4 {
        for j in (i + 1)..4 {
            if flags[i].is_true() && flags[j].is_false() {
                flags[i] = Flag::Undetermined;
                flags[j] = Flag::Undetermined;
            }
        }
    }
    if let Some(first_true) = flags.iter().position(|f| f.is_true()) {
        for f in flags.iter_mut().skip(first_true) {
            *f = Flag::True;
        }
    }
    if let Some(last_false) = flags.iter().rposition(|f| f.is_false()) {
        for f in flags.iter_mut().take(last_false + 1) {
            *f = Flag::False;
        }
    }
}

/// Classifies `m` into `M0 ⊂ M1 ⊂ ML ⊂ M` from the trend of each class
/// integral along [`TRUNCATIONS`]. `M0` is decided by boundedness of `|m(x)|`
/// along the same sequence.
pub fn classify<S: Scalar>(m: &StringModel<S>) -> Result<ClassReport> {
    let m0 = boundedness_trend(m)?;
    let m1 = trend_for(m, ClassKind::M1)?;
    let ml = trend_for(m, ClassKind::ML)?;
    let mm = trend_for(m, ClassKind::M)?;
    let mut flags = [m0.flag, m1.flag, ml.flag, mm.flag];
    reconcile(&mut flags);
    let mut integral_estimates = BTreeMap::new();
    integral_estimates.insert("M0".to_string(), m0);
    integral_estimates.insert("M1".to_string(), m1);
    integral_estimates.insert("ML".to_string(), ml);
    integral_estimates.insert("M".to_string(), mm);
    Ok(ClassReport {
        label: m.label().to_string(),
        in_m0: flags[0],
        in_m1: flags[1],
        in_ml: flags[2],
        in_m: flags[3],
        integral_estimates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strings::{make_power_string, make_table_string, Atom};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn minus_inverse() -> StringModel<f64> {
        make_table_string(Arc::new(|x: f64| x.powi(-2)), vec![], (1.0, -1.0)).unwrap()
    }

    #[test]
    fn class_integral_examples() {
        let mh = make_power_string(0.5).unwrap();
        let v = class_integral(&mh, ClassKind::M, 0.1, 0.0).unwrap();
        assert_relative_eq!(v, 0.01, max_relative = 1e-12);
        let v = class_integral(&minus_inverse(), ClassKind::M, 0.1, 1e-3).unwrap();
        assert_relative_eq!(v, 100f64.ln(), max_relative = 1e-8);
    }

    #[test]
    fn ml_integral_matches_independent_refinement() {
        // Oracle: composite Simpson in u = ln x at two refinement levels.
        fn simpson(n: usize) -> f64 {
            let (a, b) = ((1e-6f64).ln(), (0.1f64).ln());
            let h = (b - a) / n as f64;
            let g = |u: f64| {
                let x = u.exp();
                // integrand x log log(1/x) ρ(x) times the Jacobian dx/du = x
                x * (-x.ln()).ln() * (1.0 / x) * x
            };
            let mut s = g(a) + g(b);
            for i in 1..n {
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(a + i as f64 * h);
            }
            s * h / 3.0
        }
        let coarse = simpson(2_000);
        let fine = simpson(4_000);
        assert!((coarse - fine).abs() < 1e-4);
        let m1 = make_power_string(1.0).unwrap();
        let v = class_integral(&m1, ClassKind::ML, 0.1, 1e-6).unwrap();
        assert!((v - fine).abs() < 1e-6 * fine, "{v} vs {fine}");
    }

    #[test]
    fn anchored_square_integral_matches_closed_form() {
        let anchored = make_table_string(Arc::new(|x: f64| x.powi(-2)), vec![], (1.0, -1.0)).unwrap();
        let v = class_integral(&anchored, ClassKind::M1, 0.1, 1e-6).unwrap();
        assert_relative_eq!(v, 1e6 - 10.0, max_relative = 1e-8);
        let jump = make_table_string(Arc::new(|_: f64| 2.0), vec![Atom { x: 0.05, mass: 0.5 }], (0.0, 0.0)).unwrap();
        let closed = jump.clone().with_values(Arc::new(|x: f64| 2.0 * x + if x >= 0.05 { 0.5 } else { 0.0 }));
        let a = class_integral(&jump, ClassKind::M1, 0.1, 0.0).unwrap();
        let b = class_integral(&closed, ClassKind::M1, 0.1, 0.0).unwrap();
        // ∫_0^0.1 4x² dx + ∫_0.05^0.1 (2x + 0.25) dx
        let exact = 4.0 * 1e-3 / 3.0 + (0.1 * 0.1 - 0.05 * 0.05) + 0.25 * 0.05;
        assert_relative_eq!(a, exact, max_relative = 1e-9);
        assert_relative_eq!(b, exact, max_relative = 1e-6);
    }

    #[test]
    fn ml_rejects_large_delta() {
        let m1 = make_power_string(1.0f64).unwrap();
        assert!(class_integral(&m1, ClassKind::ML, 0.5, 1e-3).is_err());
        assert!(class_integral(&m1, ClassKind::M, 0.5, 1e-3).is_ok());
    }

    #[test]
    fn classify_examples() {
        let r = classify(&make_power_string(0.5).unwrap()).unwrap();
        assert_eq!(r.flags(), [Flag::True; 4]);
        let r = classify(&make_power_string(3.0).unwrap()).unwrap();
        assert_eq!(r.flags(), [Flag::False, Flag::False, Flag::True, Flag::True]);
        let r = classify(&minus_inverse()).unwrap();
        assert_eq!(r.in_m, Flag::False);
        assert_eq!(r.flags(), [Flag::False; 4]);
    }

    #[test]
    fn reconcile_never_leaves_contradictions() {
        let all = [Flag::True, Flag::False, Flag::Undetermined];
        for a in all {
            for b in all {
                for c in all {
                    for d in all {
                        let mut f = [a, b, c, d];
                        reconcile(&mut f);
                        for i in 0..4 {
                            for j in (i + 1)..4 {
                                assert!(!(f[i].is_true() && f[j].is_false()), "{f:?}");
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn trend_rule() {
        let t = IntegralTrend::from_estimates(&TRUNCATIONS, (1..=7).map(|k| k as f64).collect());
        assert_eq!(t.flag, Flag::False);
        let t = IntegralTrend::from_estimates(&TRUNCATIONS, vec![1.0; 7]);
        assert_eq!(t.flag, Flag::True);
        let t = IntegralTrend::from_estimates(
            &TRUNCATIONS,
            vec![1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 3.0],
        );
        assert_eq!(t.flag, Flag::Undetermined);
    }
}
