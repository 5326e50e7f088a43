//! Saddle-point asymptotics for the Merton model: call price, log-return
//! density, implied volatility and the "almost power law" tail of `S_T`.
//!
//! Everything of the form `e^{k(1−ŝ)} M(ŝ)` is assembled as a sum of logs;
//! the linear values are derived from those and may underflow.

use crate::bs_core::g_minus;
use crate::error::{domain, Result};
use crate::kou_asym::ExpansionValue;
use crate::models::{solve_saddle, CgfEval, MertonParams, Model};
use std::f64::consts::{PI, SQRT_2};

/// Residual tolerance of the saddle solver, scaled by `max(1, k)`.
pub const SADDLE_TOL: f64 = 1e-10;

/// Solution of `m′(ŝ, T) = k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleResult {
    pub s_hat: f64,
    pub cgf: CgfEval,
    pub iterations: usize,
    pub residual: f64,
}

/// `ŝ ≈ √(2 log k)/δ − μ/δ²`.
pub fn asymptotic_saddle(params: &MertonParams, k: f64) -> f64 {
    (2.0 * k.ln()).sqrt() / params.delta - params.mu / (params.delta * params.delta)
}

/// Newton/bisection solve of `m′(ŝ) = k` started from the asymptotic guess.
pub fn merton_saddle(params: &MertonParams, k: f64) -> Result<SaddleResult> {
    if !k.is_finite() {
        return Err(domain(format!("k must be finite, got {k}")));
    }
    let threshold = params.t * (params.b + params.lambda * params.mu);
    if k <= threshold {
        return Err(domain(format!("saddle needs k > m'(0) = {threshold}, got {k}")));
    }
    let guess = if k > std::f64::consts::E {
        let g = asymptotic_saddle(params, k);
        if g > 0.0 {
            g
        } else {
            1.0
        }
    } else {
        1.0
    };
    let model = Model::Merton(*params);
    let sp = solve_saddle(&model, k, guess, SADDLE_TOL * k.max(1.0))?;
    Ok(SaddleResult { s_hat: sp.s, cgf: sp.cgf, iterations: sp.iterations, residual: sp.residual })
}

fn require_log_positive(k: f64) -> Result<()> {
    if k > 1.0 && k.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("expansion needs finite k > 1, got {k}")))
    }
}

/// Leading saddle-point term of the call price,
/// `δ² e^{k(1−ŝ)} M(ŝ) / (2 log k √(2π m″(ŝ)))`.
pub fn merton_call_expansion(params: &MertonParams, k: f64) -> Result<ExpansionValue> {
    require_log_positive(k)?;
    let sp = merton_saddle(params, k)?;
    let m = sp.cgf.value.re;
    let m2 = sp.cgf.d2.re;
    let ln = 2.0 * params.delta.ln() + k * (1.0 - sp.s_hat) + m
        - (2.0 * k.ln()).ln()
        - 0.5 * (2.0 * PI * m2).ln();
    Ok(ExpansionValue::from_ln(ln))
}

/// The same leading term with `M` and `m″` written out in terms of the
/// model parameters: `m″ = T(σ² + λ((δ²ŝ + μ)² + δ²) e^{δ²ŝ²/2 + μŝ})`.
pub fn merton_call_expansion_explicit(params: &MertonParams, k: f64) -> Result<ExpansionValue> {
    require_log_positive(k)?;
    let s = merton_saddle(params, k)?.s_hat;
    let MertonParams { sigma, b, lambda, mu, delta, t } = *params;
    let d2 = delta * delta;
    let e = (0.5 * d2 * s * s + mu * s).exp();
    let q = d2 * s + mu;
    let exponent = k * (1.0 - s) + t * (0.5 * sigma * sigma * s * s + b * s + lambda * (e - 1.0));
    let curvature = 2.0 * PI * t * (sigma * sigma + lambda * (q * q + d2) * e);
    let ln = d2.ln() + exponent - (2.0 * k.ln()).ln() - 0.5 * curvature.ln();
    Ok(ExpansionValue::from_ln(ln))
}

/// Saddle-point approximation of the log-return density,
/// `e^{−xŝ} M(ŝ) / √(2π m″(ŝ))`.
pub fn merton_density_expansion(params: &MertonParams, x: f64) -> Result<ExpansionValue> {
    let sp = merton_saddle(params, x)?;
    let ln = -x * sp.s_hat + sp.cgf.value.re - 0.5 * (2.0 * PI * sp.cgf.d2.re).ln();
    Ok(ExpansionValue::from_ln(ln))
}

/// Ingredients of the implied-volatility expansions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MertonIVTerms {
    /// `L = −log C(k)` from the saddle-point call expansion.
    pub l: f64,
    /// `2^{−3/4} √(δk) (log k)^{−1/4}`.
    pub first_order: f64,
    /// `2^{−9/4} δ^{−1/2}(μ + δ²) − 2^{−13/4} δ^{3/2}`.
    pub c: f64,
}

/// Second-order coefficient of the explicit implied-volatility expansion.
pub fn second_order_coefficient(params: &MertonParams) -> f64 {
    let MertonParams { mu, delta, .. } = *params;
    2f64.powf(-2.25) * delta.powf(-0.5) * (mu + delta * delta) - 2f64.powf(-3.25) * delta.powf(1.5)
}

/// First-order large-strike implied volatility `2^{−3/4}√(δk)(log k)^{−1/4}`.
pub fn first_order_iv(params: &MertonParams, k: f64) -> Result<f64> {
    require_log_positive(k)?;
    Ok(2f64.powf(-0.75) * (params.delta * k).sqrt() * k.ln().powf(-0.25))
}

pub fn merton_iv_terms(params: &MertonParams, k: f64) -> Result<MertonIVTerms> {
    let l = -merton_call_expansion(params, k)?.ln_value;
    Ok(MertonIVTerms { l, first_order: first_order_iv(params, k)?, c: second_order_coefficient(params) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MertonIvMode {
    /// `G₋(k, L − (3/2) log L + log(k/(4√π)))` with `L` from the call expansion.
    SemiExplicit,
    /// `2^{−3/4}√(δk)(log k)^{−1/4} + c √k (log k)^{−3/4}`.
    ExplicitTwoTerm,
}

pub fn merton_iv(params: &MertonParams, k: f64, mode: MertonIvMode) -> Result<f64> {
    match mode {
        MertonIvMode::SemiExplicit => {
            let l = -merton_call_expansion(params, k)?.ln_value;
            if !(l > 0.0) {
                return Err(domain(format!("log call price L = {l} must be positive at k = {k}")));
            }
            let u = l - 1.5 * l.ln() + (k / (4.0 * PI.sqrt())).ln();
            if !(u > 0.0) {
                return Err(domain(format!("G₋ argument {u} not positive at k = {k}")));
            }
            g_minus(k, u)
        }
        MertonIvMode::ExplicitTwoTerm => {
            require_log_positive(k)?;
            let lk = k.ln();
            Ok(first_order_iv(params, k)? + second_order_coefficient(params) * k.sqrt() * lk.powf(-0.75))
        }
    }
}

/// Local power-law exponent of the density of `S_T` and the density itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailExponent {
    /// `(√2/δ)√(log log K)`.
    pub exponent: f64,
    /// `f_{S_T}(K) = f_{X_T}(log K)/K` from the saddle-point density.
    pub density: ExpansionValue,
}

/// Tail exponent at strike level `strike` (not log-strike).
pub fn st_tail_exponent(params: &MertonParams, strike: f64) -> Result<TailExponent> {
    if !(strike > std::f64::consts::E.exp()) || !strike.is_finite() {
        return Err(domain(format!("tail exponent needs finite K > e^e, got {strike}")));
    }
    let x = strike.ln();
    let exponent = SQRT_2 / params.delta * x.ln().sqrt();
    let fx = merton_density_expansion(params, x)?;
    Ok(TailExponent { exponent, density: ExpansionValue::from_ln(fx.ln_value - x) })
}

/// Two-term approximation of `L = −log C(k)`:
/// `(√2/δ) k √(log k) − ((μ + δ²)/δ²) k`. Diagnostic only.
pub fn merton_l_refined(params: &MertonParams, k: f64) -> Result<f64> {
    require_log_positive(k)?;
    let d2 = params.delta * params.delta;
    Ok(SQRT_2 / params.delta * k * k.ln().sqrt() - (params.mu + d2) / d2 * k)
}
