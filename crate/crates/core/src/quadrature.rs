//! Globally adaptive midpoint quadrature on dyadic panels.
//!
//! Every panel is estimated twice, once with a single midpoint and once with
//! the two half-panel midpoints; the difference drives refinement and a
//! Richardson step sharpens the accepted value. Endpoints are never evaluated,
//! so integrable endpoint singularities (`x^{-2/3}` at 0, `log log (1/x)` near
//! 1) are handled without special casing.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct QuadConfig<S> {
    pub rel_tol: S,
    pub abs_tol: S,
    pub max_panels: usize,
}

impl<S: Scalar> Default for QuadConfig<S> {
    fn default() -> Self {
        let floor = S::epsilon() * S::lit(256.0);
        QuadConfig {
            rel_tol: S::lit(1e-8).max(floor),
            abs_tol: S::min_positive_value(),
            max_panels: 1 << 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<S> {
    pub value: S,
    pub error: S,
    pub panels: usize,
}

struct Panel<S> {
    lo: S,
    width: S,
    // Midpoint estimates of the left and right halves, reused as the coarse
    // estimates of the children when the panel is split.
    left: S,
    right: S,
    value: S,
    error: S,
}

impl<S: Scalar> PartialEq for Panel<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<S: Scalar> Eq for Panel<S> {}

impl<S: Scalar> PartialOrd for Panel<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<S: Scalar> Ord for Panel<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.lo.partial_cmp(&self.lo).unwrap_or(Ordering::Equal))
    }
}

fn make_panel<S: Scalar, F: Fn(S) -> S>(f: &F, lo: S, width: S, coarse: S) -> Panel<S> {
    let quarter = width * S::lit(0.25);
    let half = width * S::lit(0.5);
    let left = half * f(lo + quarter);
    let right = half * f(lo + S::lit(3.0) * quarter);
    let fine = left + right;
    let diff = (fine - coarse) / S::lit(3.0);
    Panel {
        lo,
        width,
        left,
        right,
        value: fine + diff,
        error: diff.abs(),
    }
}

/// Integrates `f` over `(a, b]` by adaptive midpoint refinement.
///
/// Fails with [`Error::Quadrature`] (carrying the partial estimate) when the
/// panel cap is reached before the tolerance is met.
pub fn integrate<S, F>(f: F, a: S, b: S, cfg: &QuadConfig<S>) -> Result<QuadResult<S>>
where
    S: Scalar,
    F: Fn(S) -> S,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::arg(format!(
            "quadrature bounds must be finite, got ({a}, {b}]"
        )));
    }
    if b <= a {
        return Ok(QuadResult {
            value: S::zero(),
            error: S::zero(),
            panels: 0,
        });
    }
    let width = b - a;
    let coarse = width * f(a + width * S::lit(0.5));
    let first = make_panel(&f, a, width, coarse);
    let mut total = first.value;
    let mut total_err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut panels = 1usize;

    loop {
        if !total.is_finite() {
            return Err(Error::Quadrature {
                estimate: total.as_f64(),
                error: total_err.as_f64(),
                panels,
            });
        }
        if total_err <= (cfg.rel_tol * total.abs()).max(cfg.abs_tol) {
            break;
        }
        if panels >= cfg.max_panels {
            return Err(Error::Quadrature {
                estimate: total.as_f64(),
                error: total_err.as_f64(),
                panels,
            });
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        let half = worst.width * S::lit(0.5);
        let l = make_panel(&f, worst.lo, half, worst.left);
        let r = make_panel(&f, worst.lo + half, half, worst.right);
        total = total - worst.value + l.value + r.value;
        total_err = total_err - worst.error + l.error + r.error;
        heap.push(l);
        heap.push(r);
        panels += 1;
        // Running sums drift; resynchronise occasionally.
        if panels.is_multiple_of(4096) {
            total = heap.iter().fold(S::zero(), |acc, p| acc + p.value);
            total_err = heap.iter().fold(S::zero(), |acc, p| acc + p.error);
        }
    }

    let mut parts: Vec<Panel<S>> = heap.into_vec();
    parts.sort_by(|p, q| p.lo.partial_cmp(&q.lo).unwrap_or(Ordering::Equal));
    let value = parts.iter().fold(S::zero(), |acc, p| acc + p.value);
    let error = parts.iter().fold(S::zero(), |acc, p| acc + p.error);
    Ok(QuadResult {
        value,
        error,
        panels,
    })
}

const GL10: [(f64, f64); 5] = [
    (0.148_874_338_981_631_2, 0.295_524_224_714_752_9),
    (0.433_395_394_129_247_2, 0.269_266_719_309_996_3),
    (0.679_409_568_299_024, 0.219_086_362_515_982),
    (0.865_063_366_688_984_5, 0.149_451_349_150_580_6),
    (0.973_906_528_517_171_7, 0.066_671_344_308_688_1),
];

/// Nodes and weights of the 10-point Gauss–Legendre rule on `[a, b]`,
/// nodes in increasing order.
pub fn gauss_legendre_10<S: Scalar>(a: S, b: S) -> [(S, S); 10] {
    let half = (b - a) * S::lit(0.5);
    let mid = a + half;
    let mut out = [(S::zero(), S::zero()); 10];
    for (i, &(t, w)) in GL10.iter().enumerate() {
        out[4 - i] = (mid - half * S::lit(t), half * S::lit(w));
        out[5 + i] = (mid + half * S::lit(t), half * S::lit(w));
    }
    out
}

/// Like [`integrate`], but switches to the variable `u = ln x` when the
/// interval spans more than a few octaves away from the origin. Integrands of
/// power or logarithmic type near 0 become smooth in `u`.
pub fn integrate_positive<S, F>(f: F, a: S, b: S, cfg: &QuadConfig<S>) -> Result<QuadResult<S>>
where
    S: Scalar,
    F: Fn(S) -> S,
{
    if a > S::zero() && b > a * S::lit(16.0) {
        let g = |u: S| {
            let x = u.exp();
            f(x) * x
        };
        integrate(g, a.ln(), b.ln(), cfg)
    } else {
        integrate(f, a, b, cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg() -> QuadConfig<f64> {
        QuadConfig::default()
    }

    #[test]
    fn polynomial_is_exact_enough() {
        let r = integrate(|x: f64| 3.0 * x * x, 0.0, 2.0, &cfg()).unwrap();
        assert_relative_eq!(r.value, 8.0, max_relative = 1e-10);
    }

    #[test]
    fn endpoint_singularity_at_zero() {
        // int_0^1 x^{-2/3} / 3 dx = 1
        let r = integrate(|x: f64| x.powf(-2.0 / 3.0) / 3.0, 0.0, 1.0, &cfg()).unwrap();
        assert_relative_eq!(r.value, 1.0, max_relative = 1e-7);
    }

    #[test]
    fn log_substitution_handles_harmonic_tail() {
        let r = integrate_positive(|x: f64| 1.0 / x, 1e-3, 0.1, &cfg()).unwrap();
        assert_relative_eq!(r.value, 100f64.ln(), max_relative = 1e-9);
        let r = integrate_positive(|x: f64| x.powi(-2), 1e-8, 1.0, &cfg()).unwrap();
        assert_relative_eq!(r.value, 1e8 - 1.0, max_relative = 1e-8);
    }

    #[test]
    fn panel_cap_reports_partial_estimate() {
        let tight = QuadConfig {
            rel_tol: 1e-14,
            abs_tol: 0.0,
            max_panels: 8,
        };
        let err = integrate(|x: f64| (50.0 * x).sin().abs(), 0.0, 3.0, &tight).unwrap_err();
        match err {
            Error::Quadrature {
                estimate, panels, ..
            } => {
                assert_eq!(panels, 8);
                assert!(estimate > 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_interval_is_zero() {
        let r = integrate(|x: f64| x, 1.0, 1.0, &cfg()).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn gauss_legendre_is_exact_for_degree_19() {
        let s: f64 = gauss_legendre_10(0.0f64, 2.0).iter().map(|(x, w)| w * x.powi(19)).sum();
        assert_relative_eq!(s, 2f64.powi(20) / 20.0, max_relative = 1e-13);
        let nodes = gauss_legendre_10(-1.0f64, 1.0);
        assert!(nodes.windows(2).all(|p| p[0].0 < p[1].0));
    }

    #[test]
    fn works_in_single_precision() {
        let r = integrate(|x: f32| x.exp(), 0.0, 1.0, &QuadConfig::default()).unwrap();
        assert!((r.value - (1f32.exp() - 1.0)).abs() < 1e-5);
    }
}
