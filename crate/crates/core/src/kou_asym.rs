//! Large-strike expansions for the Kou model.
//!
//! The call price behaves like `exp(−α₁k − α_{1/2}√k − α₀) k^{−3/4}` and the
//! implied volatility like
//! `β_{1/2}√k + β₀ + β_{ℓ−1/2} log k/√k + β_{−1/2}/√k`.

use crate::error::{domain, Result};
use crate::models::KouParams;
use std::f64::consts::PI;

/// `Ψ(x) = 2 − 4(√(x² + x) − x)`, Lee's moment-formula map.
pub fn psi(x: f64) -> Result<f64> {
    if !(x > 0.0) || x.is_nan() {
        return Err(domain(format!("Ψ needs x > 0, got {x}")));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    // 2(√(x²+x) − x)/(√(x²+x) + x), free of cancellation for large x
    let r = (x * x + x).sqrt() + x;
    Ok(2.0 * x / (r * r))
}

/// Expansion coefficients, named after the powers of `k` they multiply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KouCoefficients {
    pub alpha_1: f64,
    pub alpha_half: f64,
    pub alpha_0: f64,
    pub beta_half: f64,
    pub beta_0: f64,
    pub beta_log: f64,
    pub beta_minus_half: f64,
    pub gamma: f64,
    pub xi: f64,
}

pub fn kou_coefficients(params: &KouParams) -> KouCoefficients {
    let KouParams { sigma, b, lambda, lambda_plus: lp, lambda_minus: lm, p, t } = *params;
    let xi = params.xi();
    let alpha_1 = lp - 1.0;
    let alpha_half = -2.0 * xi.sqrt();
    let alpha_0 = t * (-0.5 * sigma * sigma * lp * lp - b * lp - lambda * lm * (1.0 - p) / (lm + lp) + lambda)
        - (xi.powf(0.25) / (2.0 * PI.sqrt() * lp * alpha_1)).ln();
    let gamma = 1.0 / (2.0 * alpha_1 + 2.0).sqrt() - 1.0 / (2.0 * alpha_1).sqrt();
    let beta_half = -2.0 * gamma * (alpha_1 * alpha_1 + alpha_1).sqrt();
    let beta_0 = gamma * alpha_half;
    let beta_log = 0.25 * gamma;
    let log_term = ((1.0 - (1.0 + 1.0 / alpha_1).powf(-0.5)) / (4.0 * PI * alpha_1).sqrt()).ln();
    let quad = 1.0 / (2.0 * (2.0 * alpha_1).powf(1.5)) - 1.0 / (2.0 * (2.0 * alpha_1 + 2.0).powf(1.5));
    let beta_minus_half = (alpha_0 + log_term) * gamma + quad * alpha_half * alpha_half;
    KouCoefficients { alpha_1, alpha_half, alpha_0, beta_half, beta_0, beta_log, beta_minus_half, gamma, xi }
}

/// A positive quantity together with its natural log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionValue {
    pub value: f64,
    pub ln_value: f64,
}

impl ExpansionValue {
    pub fn from_ln(ln_value: f64) -> Self {
        Self { value: ln_value.exp(), ln_value }
    }
}

/// Leading term of the large-strike call price.
pub fn kou_call_expansion(params: &KouParams, k: f64) -> Result<ExpansionValue> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(domain(format!("call expansion needs finite k > 0, got {k}")));
    }
    let c = kou_coefficients(params);
    let ln = -c.alpha_1 * k - c.alpha_half * k.sqrt() - c.alpha_0 - 0.75 * k.ln();
    Ok(ExpansionValue::from_ln(ln))
}

/// Partial sum of the implied-volatility expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IvExpansion {
    pub value: f64,
    /// Set when the truncated series is not positive (possible at small k).
    pub nonpositive: bool,
}

/// Implied total volatility from the first `order` (1..=4) expansion terms.
/// Order 1 is the first-order moment-formula slope `Ψ^{1/2}(λ₊ − 1)√k`.
pub fn kou_iv_expansion(params: &KouParams, k: f64, order: u8) -> Result<IvExpansion> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(domain(format!("IV expansion needs finite k > 0, got {k}")));
    }
    if !(1..=4).contains(&order) {
        return Err(domain(format!("order must be 1..=4, got {order}")));
    }
    let c = kou_coefficients(params);
    let sk = k.sqrt();
    let terms = [c.beta_half * sk, c.beta_0, c.beta_log * k.ln() / sk, c.beta_minus_half / sk];
    let value: f64 = terms[..order as usize].iter().sum();
    Ok(IvExpansion { value, nonpositive: value <= 0.0 })
}
