//! Krein strings `m` on `(0, ∞)` and their measures `dm`.
//!
//! A [`StringModel`] is a density for the absolutely continuous part of `dm`
//! plus finitely many atoms. The value function `m(x)` is either supplied in
//! closed form or reconstructed by quadrature from an anchor point.

mod classes;
mod rescale;
mod text;
mod tightness;

use std::fmt;
use std::sync::Arc;

pub use classes::{
    class_integral, classify, membership_m, ClassKind, ClassReport, Flag, IntegralTrend, CLASS_DELTA,
    TRUNCATIONS,
};
pub use rescale::{fit_global_bound, rescale, GlobalBound, SlowlyVarying};
pub use text::{parse_string_spec, read_density_table, TabulatedDensity};
pub use tightness::{tightness_report, TightnessReport, TightnessVerdict};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_positive, QuadConfig};
use crate::scalar::Scalar;

/// Shared real function, the building block of every string.
pub type RealFn<S> = Arc<dyn Fn(S) -> S + Send + Sync>;

/// A point mass `mass · δ_x` of `dm`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom<S> {
    pub x: S,
    pub mass: S,
}

#[derive(Clone)]
enum Values<S> {
    /// `m(x)` in closed form (atoms included).
    Closed(RealFn<S>),
    /// `m(x0) = m0`; `x0 = 0` stands for `0+`.
    Anchored { x0: S, m0: S },
}

/// A string together with enough structure to evaluate `m` and `dm`.
#[derive(Clone)]
pub struct StringModel<S> {
    label: String,
    density: RealFn<S>,
    atoms: Vec<Atom<S>>,
    values: Values<S>,
    /// Antiderivative of `x ρ(x)` for the absolutely continuous part.
    moment: Option<RealFn<S>>,
    at_infinity: Option<S>,
    text: Option<String>,
    quad: QuadConfig<S>,
}

impl<S: Scalar> fmt::Debug for StringModel<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StringModel")
            .field("label", &self.label)
            .field("atoms", &self.atoms)
            .field("closed_values", &matches!(self.values, Values::Closed(_)))
            .field("closed_moment", &self.moment.is_some())
            .field("at_infinity", &self.at_infinity)
            .finish()
    }
}

fn validate_atoms<S: Scalar>(atoms: &mut [Atom<S>]) -> Result<()> {
    for a in atoms.iter() {
        if !(a.x > S::zero() && a.x.is_finite()) {
            return Err(Error::InvalidString(format!(
                "atom location must be positive and finite, got {}",
                a.x
            )));
        }
        if !(a.mass > S::zero() && a.mass.is_finite()) {
            return Err(Error::InvalidString(format!(
                "atom mass must be positive and finite, got {}",
                a.mass
            )));
        }
    }
    atoms.sort_by(|p, q| p.x.partial_cmp(&q.x).expect("finite atom locations"));
    if let Some(w) = atoms.windows(2).find(|w| w[0].x == w[1].x) {
        return Err(Error::InvalidString(format!(
            "duplicate atom location {}",
            w[0].x
        )));
    }
    Ok(())
}

/// Log-spaced probe points on (1e-8, 1e6) used for sign checks.
fn probe_points<S: Scalar>() -> impl Iterator<Item = S> {
    (0..=112).map(|k| S::lit(10f64.powf(-8.0 + k as f64 / 8.0)))
}

/// The power string `m^{(α)}` with `dm = α⁻¹ x^{1/α − 2} dx`.
pub fn make_power_string<S: Scalar>(alpha: S) -> Result<StringModel<S>> {
    if !(alpha > S::zero() && alpha.is_finite()) {
        return Err(Error::arg(format!("alpha must be positive, got {alpha}")));
    }
    let one = S::one();
    let inv = one / alpha;
    let density: RealFn<S> = Arc::new(move |x: S| x.powf(inv - S::lit(2.0)) / alpha);
    let values: RealFn<S> = if alpha < one {
        Arc::new(move |x: S| x.powf(inv - one) / (one - alpha))
    } else if alpha == one {
        Arc::new(|x: S| x.ln())
    } else {
        Arc::new(move |x: S| -x.powf(inv - one) / (alpha - one))
    };
    let moment: RealFn<S> = Arc::new(move |x: S| x.powf(inv));
    Ok(StringModel {
        label: format!("power(alpha={alpha})"),
        density,
        atoms: Vec::new(),
        values: Values::Closed(values),
        moment: Some(moment),
        at_infinity: (alpha > one).then(S::zero),
        text: Some(format!("kind=power alpha={alpha}")),
        quad: QuadConfig::default(),
    })
}

/// A string with tabulated or closed-form density, atoms, and value function
/// anchored at `anchor = (x0, m0)` (`x0 = 0` means `m(0+) = m0`).
pub fn make_table_string<S: Scalar>(
    density: RealFn<S>,
    atoms: Vec<Atom<S>>,
    anchor: (S, S),
) -> Result<StringModel<S>> {
    let mut atoms = atoms;
    validate_atoms(&mut atoms)?;
    for x in probe_points::<S>() {
        let r = density(x);
        if r.is_nan() || r < S::zero() {
            return Err(Error::InvalidString(format!(
                "density must be nonnegative, got {r} at x = {x}"
            )));
        }
    }
    let (x0, m0) = anchor;
    if !(x0 >= S::zero() && x0.is_finite() && m0.is_finite()) {
        return Err(Error::InvalidString(format!(
            "anchor must be (x0 >= 0, finite m0), got ({x0}, {m0})"
        )));
    }
    Ok(StringModel {
        label: "table".to_string(),
        density,
        atoms,
        values: Values::Anchored { x0, m0 },
        moment: None,
        at_infinity: None,
        text: None,
        quad: QuadConfig::default(),
    })
}

/// `m(x) = c·x`. For `c = 2` this is `m^{(1/2)}`, the string of standard
/// Brownian motion.
pub fn make_linear_string<S: Scalar>(slope: S) -> Result<StringModel<S>> {
    if !(slope > S::zero() && slope.is_finite()) {
        return Err(Error::arg(format!("slope must be positive, got {slope}")));
    }
    let half = S::lit(0.5);
    Ok(StringModel {
        label: format!("linear(slope={slope})"),
        density: Arc::new(move |_| slope),
        atoms: Vec::new(),
        values: Values::Closed(Arc::new(move |x| slope * x)),
        moment: Some(Arc::new(move |x| half * slope * x * x)),
        at_infinity: None,
        text: None,
        quad: QuadConfig::default(),
    })
}

impl<S: Scalar> StringModel<S> {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Supplies `m(x)` in closed form; it must include the atoms.
    pub fn with_values(mut self, values: RealFn<S>) -> Self {
        self.values = Values::Closed(values);
        self
    }

    /// Supplies an antiderivative of `x ρ(x)`.
    pub fn with_moment(mut self, moment: RealFn<S>) -> Self {
        self.moment = Some(moment);
        self
    }

    /// Declares the limit `m(∞)`.
    pub fn with_infinity(mut self, value: S) -> Self {
        self.at_infinity = Some(value);
        self
    }

    pub(crate) fn with_text(mut self, text: impl Into<String>) -> Self {
        self.text = Some(text.into());
        self
    }

    pub fn with_quadrature(mut self, quad: QuadConfig<S>) -> Self {
        self.quad = quad;
        self
    }

    pub fn quadrature(&self) -> &QuadConfig<S> {
        &self.quad
    }

    /// Serialized line form, when the string came from one.
    pub fn to_text(&self) -> Option<&str> {
        self.text.as_deref()
    }

    pub fn density(&self, x: S) -> S {
        (self.density)(x)
    }

    pub fn density_fn(&self) -> &RealFn<S> {
        &self.density
    }

    pub fn atoms(&self) -> &[Atom<S>] {
        &self.atoms
    }

    pub fn has_closed_values(&self) -> bool {
        matches!(self.values, Values::Closed(_))
    }

    pub fn declared_infinity(&self) -> Option<S> {
        self.at_infinity
    }

    fn atom_mass(&self, a: S, b: S) -> S {
        self.atoms
            .iter()
            .filter(|at| at.x > a && at.x <= b)
            .fold(S::zero(), |acc, at| acc + at.mass)
    }

    fn density_integral(&self, a: S, b: S) -> Result<S> {
        let rho = &self.density;
        Ok(integrate_positive(|x| rho(x), a, b, &self.quad)?.value)
    }

    /// `m(x)` for `x > 0`.
    pub fn value_at(&self, x: S) -> Result<S> {
        if !(x > S::zero()) {
            return Err(Error::arg(format!("m(x) needs x > 0, got {x}")));
        }
        match &self.values {
            Values::Closed(f) => Ok(f(x)),
            Values::Anchored { x0, m0 } => {
                let (x0, m0) = (*x0, *m0);
                if x == x0 {
                    Ok(m0)
                } else if x > x0 {
                    let ac = if x0 == S::zero() {
                        let rho = &self.density;
                        integrate(|y| rho(y), S::zero(), x, &self.quad)?.value
                    } else {
                        self.density_integral(x0, x)?
                    };
                    Ok(m0 + ac + self.atom_mass(x0, x))
                } else {
                    Ok(m0 - self.density_integral(x, x0)? - self.atom_mass(x, x0))
                }
            }
        }
    }

    /// `dm((a, b])` for `0 < a < b < ∞`.
    pub fn measure_of(&self, a: S, b: S) -> Result<S> {
        if !(a > S::zero() && b > a && b.is_finite()) {
            return Err(Error::arg(format!(
                "measure_of needs 0 < a < b < inf, got ({a}, {b}]"
            )));
        }
        match &self.values {
            Values::Closed(f) => Ok(f(b) - f(a)),
            Values::Anchored { .. } => Ok(self.density_integral(a, b)? + self.atom_mass(a, b)),
        }
    }

    /// `∫_(a, b] x dm(x)` for `0 ≤ a < b` (`a = 0` integrates from `0+`).
    pub fn first_moment(&self, a: S, b: S) -> Result<S> {
        if !(a >= S::zero() && b >= a && b.is_finite()) {
            return Err(Error::arg(format!(
                "first_moment needs 0 <= a <= b < inf, got ({a}, {b}]"
            )));
        }
        if b == a {
            return Ok(S::zero());
        }
        let ac = match &self.moment {
            Some(mom) => mom(b) - mom(a),
            None => {
                let rho = &self.density;
                let f = |x: S| x * rho(x);
                if a == S::zero() {
                    integrate(f, a, b, &self.quad)?.value
                } else {
                    integrate_positive(f, a, b, &self.quad)?.value
                }
            }
        };
        let atoms = self
            .atoms
            .iter()
            .filter(|at| at.x > a && at.x <= b)
            .fold(S::zero(), |acc, at| acc + at.x * at.mass);
        Ok(ac + atoms)
    }

    /// `m(∞)`: the declared value when present, otherwise `m(cutoff)` plus the
    /// tail `∫_cutoff^∞ ρ` when a closed-form value function is available.
    ///
    /// Fails when the estimate does not settle between `cutoff/10` and
    /// `cutoff` (relative change above 1e-3), i.e. when `m(∞)` looks infinite.
    pub fn m_infinity(&self, cutoff: S) -> Result<S> {
        if let Some(v) = self.at_infinity {
            return Ok(v);
        }
        let far = self.value_at(cutoff)?;
        let near = self.value_at(cutoff / S::lit(10.0))?;
        let scale = far.abs().max(S::one());
        if !far.is_finite() || (far - near).abs() > S::lit(1e-3) * scale {
            return Err(Error::InvalidString(format!(
                "m(inf) does not appear finite: m({}) = {}, m({}) = {}",
                cutoff / S::lit(10.0),
                near,
                cutoff,
                far
            )));
        }
        Ok(far)
    }

    /// Sum of two strings: `d(m1 + m2) = dm1 + dm2`.
    pub fn plus(&self, other: &StringModel<S>) -> Result<StringModel<S>> {
        let (d1, d2) = (self.density.clone(), other.density.clone());
        let mut atoms = self.atoms.clone();
        for at in &other.atoms {
            match atoms.iter_mut().find(|a| a.x == at.x) {
                Some(a) => a.mass = a.mass + at.mass,
                None => atoms.push(*at),
            }
        }
        validate_atoms(&mut atoms)?;
        let values = match (&self.values, &other.values) {
            (Values::Closed(f), Values::Closed(g)) => {
                let (f, g) = (f.clone(), g.clone());
                Values::Closed(Arc::new(move |x| f(x) + g(x)))
            }
            _ => {
                // Re-anchor the sum at x = 1.
                let m0 = self.value_at(S::one())? + other.value_at(S::one())?;
                Values::Anchored { x0: S::one(), m0 }
            }
        };
        let moment = match (&self.moment, &other.moment) {
            (Some(f), Some(g)) => {
                let (f, g) = (f.clone(), g.clone());
                Some(Arc::new(move |x| f(x) + g(x)) as RealFn<S>)
            }
            _ => None,
        };
        let at_infinity = match (self.at_infinity, other.at_infinity) {
            (Some(p), Some(q)) => Some(p + q),
            _ => None,
        };
        Ok(StringModel {
            label: format!("{} + {}", self.label, other.label),
            density: Arc::new(move |x| d1(x) + d2(x)),
            atoms,
            values,
            moment,
            at_infinity,
            text: None,
            quad: self.quad,
        })
    }

    /// Checks the structural invariants on a log-spaced probe grid: strict
    /// increase (`dm((a, b]) > 0`) and, for closed-form value functions,
    /// agreement of `m(b) − m(a)` with the quadrature of the density plus atoms.
    pub fn check_invariants(&self) -> Result<()> {
        let pts: Vec<S> = probe_points::<S>().step_by(4).collect();
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let dm = self.measure_of(a, b)?;
            if !(dm > S::zero()) {
                return Err(Error::InvalidString(format!(
                    "{}: not strictly increasing on ({a}, {b}] (dm = {dm})",
                    self.label
                )));
            }
            if let Values::Closed(_) = self.values {
                let direct = self.density_integral(a, b)? + self.atom_mass(a, b);
                let tol = S::lit(1e-6) * dm.abs().max(direct.abs()) + S::lit(1e-12);
                if (direct - dm).abs() > tol {
                    return Err(Error::InvalidString(format!(
                        "{}: value function disagrees with density on ({a}, {b}]: {dm} vs {direct}",
                        self.label
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn table(rho: impl Fn(f64) -> f64 + Send + Sync + 'static, atoms: Vec<Atom<f64>>, anchor: (f64, f64)) -> StringModel<f64> {
        make_table_string(Arc::new(rho), atoms, anchor).unwrap()
    }

    #[test]
    fn power_string_values() {
        let m2 = make_power_string(2.0).unwrap();
        assert_relative_eq!(m2.value_at(4.0).unwrap(), -0.5, max_relative = 1e-15);
        let m1 = make_power_string(1.0).unwrap();
        assert_eq!(m1.value_at(1.0).unwrap(), 0.0);
        let mh = make_power_string(0.5).unwrap();
        assert_relative_eq!(mh.density(3.0), 2.0, max_relative = 1e-15);
        assert_eq!(mh.to_text(), Some("kind=power alpha=0.5"));
    }

    #[test]
    fn power_string_rejects_nonpositive_alpha() {
        assert!(make_power_string(0.0f64).is_err());
        assert!(make_power_string(-1.0f64).is_err());
    }

    #[test]
    fn power_strings_pass_invariant_check() {
        for alpha in [0.3, 0.5, 1.0, 2.5, 3.0] {
            make_power_string(alpha).unwrap().check_invariants().unwrap();
        }
    }

    #[test]
    fn table_string_reconstructs_log() {
        let m = table(|x| 1.0 / (1.0 + x), vec![], (0.0, 0.0));
        for x in [0.01, 0.5, 2.0, 50.0] {
            assert_relative_eq!(m.value_at(x).unwrap(), (1.0 + x).ln(), max_relative = 1e-8);
        }
    }

    #[test]
    fn table_string_minus_inverse() {
        let m = table(|x| x.powi(-2), vec![], (1.0, -1.0));
        for x in [0.01, 0.3, 4.0] {
            assert_relative_eq!(m.value_at(x).unwrap(), -1.0 / x, max_relative = 1e-8);
        }
    }

    #[test]
    fn table_string_with_atom_jumps() {
        let m = table(|_| 2.0, vec![Atom { x: 1.0, mass: 0.5 }], (0.0, 0.0));
        assert_relative_eq!(m.value_at(0.999).unwrap(), 1.998, max_relative = 1e-9);
        assert_relative_eq!(m.value_at(1.0).unwrap(), 2.5, max_relative = 1e-9);
        assert_relative_eq!(m.value_at(2.0).unwrap(), 4.5, max_relative = 1e-9);
    }

    #[test]
    fn table_string_rejects_bad_input() {
        let neg = make_table_string::<f64>(Arc::new(|x| x - 1.0), vec![], (1.0, 0.0));
        assert!(matches!(neg, Err(Error::InvalidString(_))));
        let dup = make_table_string::<f64>(
            Arc::new(|_| 1.0),
            vec![Atom { x: 1.0, mass: 1.0 }, Atom { x: 1.0, mass: 2.0 }],
            (1.0, 0.0),
        );
        assert!(matches!(dup, Err(Error::InvalidString(_))));
    }

    #[test]
    fn measure_of_examples() {
        let mh = make_power_string(0.5).unwrap();
        assert_relative_eq!(mh.measure_of(0.1, 0.2).unwrap(), 0.2, max_relative = 1e-12);
        let inv = table(|x| x.powi(-2), vec![], (1.0, -1.0));
        assert_relative_eq!(inv.measure_of(0.5, 1.0).unwrap(), 1.0, max_relative = 1e-9);
        let atom = table(|_| 0.0, vec![Atom { x: 1.0, mass: 0.5 }], (0.0, 0.0));
        assert_relative_eq!(atom.measure_of(0.9, 1.1).unwrap(), 0.5, max_relative = 1e-12);
        assert!(atom.check_invariants().is_err());
    }

    #[test]
    fn measure_of_rejects_bad_interval() {
        let mh = make_power_string(0.5f64).unwrap();
        assert!(mh.measure_of(0.0, 1.0).is_err());
        assert!(mh.measure_of(2.0, 1.0).is_err());
    }

    #[test]
    fn first_moment_closed_and_quadrature_agree() {
        let closed = make_power_string(3.0).unwrap();
        let quad = table(|x: f64| x.powf(1.0 / 3.0 - 2.0) / 3.0, vec![], (1.0, -0.5));
        for (a, b) in [(0.0, 0.005), (1e-6, 0.1), (0.2, 3.0)] {
            assert_relative_eq!(
                closed.first_moment(a, b).unwrap(),
                quad.first_moment(a, b).unwrap(),
                max_relative = 1e-7
            );
        }
    }

    #[test]
    fn sum_of_strings() {
        let mh = make_power_string(0.5).unwrap();
        let lin = make_linear_string(0.01).unwrap();
        let s = mh.plus(&lin).unwrap();
        assert_relative_eq!(s.measure_of(0.1, 0.3).unwrap(), 0.4 + 0.002, max_relative = 1e-12);
        assert_relative_eq!(s.first_moment(0.0, 1.0).unwrap(), 1.0 + 0.005, max_relative = 1e-12);
    }

    #[test]
    fn m_infinity_detects_divergence() {
        let m3 = make_power_string(3.0).unwrap();
        assert_eq!(m3.m_infinity(1e6).unwrap(), 0.0);
        let log = table(|x| 1.0 / (1.0 + x), vec![], (0.0, 0.0));
        assert!(log.m_infinity(1e6).is_err());
        let conv = table(|x| (1.0 + x).powi(-2), vec![], (0.0, 0.0));
        assert_relative_eq!(conv.m_infinity(1e6).unwrap(), 1.0, max_relative = 1e-5);
    }
}
