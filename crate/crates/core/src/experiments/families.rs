//! String families used by the convergence, tightness and limit experiments.

use std::sync::Arc;

use crate::error::Result;
use crate::strings::{make_linear_string, make_power_string, make_table_string, rescale, SlowlyVarying, StringModel};

/// `m^{(1/2)} + x/λ`: `A_{m_λ} − A_m = t/(2λ)` exactly.
pub fn linear_perturbation(lambda: f64) -> Result<StringModel<f64>> {
    Ok(make_power_string(0.5)?
        .plus(&make_linear_string(1.0 / lambda)?)?
        .with_label(format!("power(alpha=0.5) + x/{lambda}")))
}

/// `m(x) = log(1 + x)` with closed-form values and first moment.
pub fn log1p_string() -> Result<StringModel<f64>> {
    Ok(make_table_string(Arc::new(|x: f64| 1.0 / (1.0 + x)), vec![], (0.0, 0.0))?
        .with_values(Arc::new(|x: f64| x.ln_1p()))
        .with_moment(Arc::new(|x: f64| x - x.ln_1p()))
        .with_label("log(1+x)"))
}

/// The rescaled family of `log(1 + x)` with `α = 1`, `K ≡ 1`; it converges
/// to `m^{(1)}`.
pub fn log1p_family(lambda: f64) -> Result<StringModel<f64>> {
    rescale(&log1p_string()?, lambda, 1.0, &SlowlyVarying::one())
}

/// `m^{(1/2)}` plus the density `λ 1{x ≤ 1/λ} / x`, whose mass near 0 keeps
/// `∫_(0,δ] x dm_λ ≥ 1` for every `λ ≥ 1/δ`.
pub fn spike_family(lambda: f64) -> Result<StringModel<f64>> {
    let cut = 1.0 / lambda;
    let spike = make_table_string(
        Arc::new(move |x: f64| if x <= cut { lambda / x } else { 0.0 }),
        vec![],
        (1.0, 0.0),
    )?
    .with_values(Arc::new(move |x: f64| lambda * (lambda * x.min(cut)).ln()))
    .with_moment(Arc::new(move |x: f64| lambda * x.min(cut)));
    Ok(make_power_string(0.5)?
        .plus(&spike)?
        .with_label(format!("power(alpha=0.5) + spike(lambda={lambda})")))
}

/// `m(x) = −1/x`: `dm = x⁻² dx`, so `∫_0 x dm` diverges and `m ∉ M`.
pub fn inverse_string() -> Result<StringModel<f64>> {
    Ok(make_table_string(Arc::new(|x: f64| 1.0 / (x * x)), vec![], (1.0, -1.0))?
        .with_values(Arc::new(|x: f64| -1.0 / x))
        .with_moment(Arc::new(|x: f64| x.ln()))
        .with_infinity(0.0)
        .with_label("-1/x"))
}
