//! Reference call prices and log-return densities from the inverse Fourier
//! (Mellin) representation along a vertical contour `Re s = η`.
//!
//! The call price is
//!
//! ```text
//! C(k) = (e^k / π) ∫₀^∞ Re[ e^{-k s} M(s) / (s (s − 1)) ] dt,   s = η + i t,
//! ```
//!
//! and the density of `X_T` is the same integral without the rational factor
//! and the `e^k`. The factor `e^{k(1−η)} M(η)` is pulled out of the integral
//! and carried as a logarithm, so wing prices far below `f64::MIN_POSITIVE`
//! keep full relative accuracy in [`PriceQuote::ln_value`].

use crate::bs_core;
use crate::error::{domain, Error, Result};
use crate::models::{solve_saddle, Model};
use crate::quadrature;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::fmt;

/// Relative agreement required between successive truncation levels.
pub const REL_TOL: f64 = 1e-10;
/// Absolute floor on the scaled integral.
pub const ABS_FLOOR: f64 = 1e-300;
/// Largest truncation height tried before giving up.
pub const MAX_T: f64 = 1e6;
/// Total node budget of one quadrature.
pub const MAX_NODES: usize = 1 << 22;
/// Minimum node count of a contour.
pub const MIN_NODES: usize = 16;
/// Round-trip tolerance of [`smile_exact`].
pub const SMILE_ROUND_TRIP: f64 = 1e-9;

const INNER_REL_TOL: f64 = 1e-12;
const DEFAULT_NODES: usize = 256;

/// How a quoted value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ExactQuadrature,
    Expansion,
    MonteCarlo,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::ExactQuadrature => "exact-quadrature",
            Method::Expansion => "expansion",
            Method::MonteCarlo => "monte-carlo",
        })
    }
}

/// A price or density with provenance and an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceQuote {
    pub value: f64,
    /// Natural log of `value`; finite even when `value` underflows.
    pub ln_value: f64,
    pub method: Method,
    pub err_estimate: f64,
}

/// Vertical integration contour `Re s = eta`, truncated at `t_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSpec {
    pub eta: f64,
    /// Initial truncation height; doubled until successive estimates agree.
    pub t_max: f64,
    /// Initial node count (rounded up to whole 15-point panels).
    pub n_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Contour {
    /// Saddle-anchored abscissa with model-specific truncation.
    Auto,
    Fixed(ContourSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Call,
    Density,
}

/// Admissible open interval for the call contour abscissa.
fn call_band(model: &Model) -> (f64, f64) {
    (1.0, model.domain().1)
}

/// Abscissa used by [`Contour::Auto`] for the call at log-strike `k`.
///
/// Kou uses the closed-form approximate saddle `λ₊ − √(ξ/k)`; Merton solves
/// `m′(η) = k`. When that point is not right of 1, the fallback is the
/// midpoint `(1 + λ₊)/2` for Kou and `η = 2` for Merton.
pub fn auto_call_eta(model: &Model, k: f64) -> Result<f64> {
    match model {
        Model::Kou(p) => {
            let fallback = 0.5 * (1.0 + p.lambda_plus);
            if k > 0.0 {
                let s_hat = p.lambda_plus - (p.xi() / k).sqrt();
                if s_hat > 1.0 {
                    return Ok(s_hat);
                }
            }
            Ok(fallback)
        }
        Model::Merton(_) => {
            let one = model.cgf_real(1.0)?;
            if k > one.d1.re {
                let sp = solve_saddle(model, k, 1.0, 1e-12 * k.abs().max(1.0))?;
                if sp.s > 1.0 {
                    return Ok(sp.s);
                }
            }
            Ok(2.0)
        }
    }
}

/// Abscissa used by [`Contour::Auto`] for the density at `x`: the real
/// saddle point `m′(η) = x`.
pub fn auto_density_eta(model: &Model, x: f64) -> Result<f64> {
    let sp = solve_saddle(model, x, 0.0, 1e-12 * x.abs().max(1.0))?;
    Ok(sp.s)
}

fn default_t_max(model: &Model, kind: Kind, k: f64) -> f64 {
    let gauss = 10.0 / (model.sigma() * model.maturity().sqrt());
    match (model, kind) {
        (Model::Kou(_), Kind::Call) => {
            let scale = if k.abs() > 0.0 { (1.0 / k.abs()).max(1.0) } else { 1.0 };
            (1e3 * scale).min(MAX_T)
        }
        _ => gauss.min(MAX_T),
    }
}

fn resolve(model: &Model, kind: Kind, x: f64, contour: Contour) -> Result<ContourSpec> {
    let spec = match contour {
        Contour::Auto => {
            let eta = match kind {
                Kind::Call => auto_call_eta(model, x)?,
                Kind::Density => auto_density_eta(model, x)?,
            };
            ContourSpec { eta, t_max: default_t_max(model, kind, x), n_points: DEFAULT_NODES }
        }
        Contour::Fixed(spec) => spec,
    };
    let (lo, hi) = match kind {
        Kind::Call => call_band(model),
        Kind::Density => model.domain(),
    };
    if !(spec.eta > lo && spec.eta < hi) {
        return Err(domain(format!("contour abscissa {} outside ({lo}, {hi})", spec.eta)));
    }
    if !(spec.t_max > 0.0 && spec.t_max.is_finite()) {
        return Err(domain(format!("t_max must be positive, got {}", spec.t_max)));
    }
    if spec.n_points < MIN_NODES {
        return Err(domain(format!("n_points must be at least {MIN_NODES}, got {}", spec.n_points)));
    }
    Ok(spec)
}

/// Initial panel boundaries: geometric from the local width of the
/// integrand at `t = 0` out to `t_max`.
fn breakpoints(model: &Model, kind: Kind, eta: f64, m2: f64, t_max: f64, n_points: usize) -> Vec<f64> {
    let mut width = 1.0 / m2.max(1e-300).sqrt();
    let (lo, hi) = model.domain();
    for d in [eta - lo, hi - eta] {
        if d.is_finite() {
            width = width.min(d);
        }
    }
    if kind == Kind::Call {
        width = width.min(eta - 1.0);
    }
    let width = width.max(t_max * 1e-12);
    let mut breaks = vec![0.0];
    let mut t = width;
    while t < t_max {
        breaks.push(t);
        t *= 2.0;
    }
    breaks.push(t_max);
    let panels = n_points.div_ceil(quadrature::NODES_PER_PANEL);
    while breaks.len() - 1 < panels {
        let mut finer = Vec::with_capacity(2 * breaks.len());
        for w in breaks.windows(2) {
            finer.push(w[0]);
            finer.push(0.5 * (w[0] + w[1]));
        }
        finer.push(t_max);
        breaks = finer;
    }
    breaks
}

struct ContourIntegral {
    ln_scale: f64,
    integral: f64,
    abs_error: f64,
}

fn integrate_contour(model: &Model, kind: Kind, x: f64, spec: ContourSpec) -> Result<ContourIntegral> {
    let eta = spec.eta;
    let at_eta = model.cgf_real(eta)?;
    let m_eta = at_eta.value.re;
    let ln_scale = match kind {
        Kind::Call => x * (1.0 - eta) + m_eta,
        Kind::Density => -x * eta + m_eta,
    };
    let integrand = |t: f64| -> f64 {
        let s = Complex64::new(eta, t);
        let m = match model.cgf(s) {
            Ok(c) => c.value,
            Err(_) => return f64::NAN,
        };
        let z = Complex64::new(m.re - m_eta, m.im - x * t).exp();
        match kind {
            Kind::Call => (z / (s * (s - 1.0))).re,
            Kind::Density => z.re,
        }
    };

    let mut t_max = spec.t_max;
    let mut previous: Option<quadrature::QuadResult> = None;
    loop {
        let breaks = breakpoints(model, kind, eta, at_eta.d2.re, t_max, spec.n_points);
        let r = quadrature::integrate(integrand, &breaks, ABS_FLOOR, INNER_REL_TOL, MAX_NODES);
        if !r.value.is_finite() {
            return Err(Error::Convergence(format!(
                "non-finite contour integral at eta = {eta}, t_max = {t_max}"
            )));
        }
        if r.roundoff_limited && r.abs_error > REL_TOL * r.value.abs() {
            return Err(Error::Convergence(format!(
                "roundoff-limited: integral {:e} is {:.1e} of the integrand mass at eta = {eta}",
                r.value,
                r.value.abs() / r.abs_integral
            )));
        }
        if !r.converged && !r.roundoff_limited {
            return Err(Error::Convergence(format!(
                "quadrature exhausted {} nodes at eta = {eta}, t_max = {t_max}: value {:e}, error {:e}",
                r.evaluations, r.value, r.abs_error
            )));
        }
        if let Some(prev) = previous {
            let diff = (r.value - prev.value).abs();
            if diff <= REL_TOL * r.value.abs() || diff <= ABS_FLOOR {
                return Ok(ContourIntegral { ln_scale, integral: r.value, abs_error: diff + r.abs_error });
            }
        }
        previous = Some(r);
        t_max *= 2.0;
        if t_max > MAX_T {
            return Err(Error::Convergence(format!(
                "truncation height exceeded {MAX_T:e} at eta = {eta} without agreement"
            )));
        }
    }
}

fn quote(ci: ContourIntegral, what: &str, at: f64) -> Result<PriceQuote> {
    let scaled = ci.integral / PI;
    if !(scaled > 0.0) {
        return Err(Error::Convergence(format!(
            "non-positive {what} integral {scaled:e} at {at}"
        )));
    }
    let ln_value = ci.ln_scale + scaled.ln();
    Ok(PriceQuote {
        value: ln_value.exp(),
        ln_value,
        method: Method::ExactQuadrature,
        err_estimate: ci.ln_scale.exp() * ci.abs_error / PI,
    })
}

/// Call price on unit spot at log-strike `k` by contour quadrature.
pub fn call_exact(model: &Model, k: f64, contour: Contour) -> Result<PriceQuote> {
    if !k.is_finite() {
        return Err(domain(format!("k must be finite, got {k}")));
    }
    let spec = resolve(model, Kind::Call, k, contour)?;
    let ci = integrate_contour(model, Kind::Call, k, spec)?;
    quote(ci, "call", k)
}

/// Density of the log-return `X_T` at `x` by contour quadrature.
pub fn density_exact(model: &Model, x: f64, contour: Contour) -> Result<PriceQuote> {
    if !x.is_finite() {
        return Err(domain(format!("x must be finite, got {x}")));
    }
    let spec = resolve(model, Kind::Density, x, contour)?;
    let ci = integrate_contour(model, Kind::Density, x, spec)?;
    quote(ci, "density", x)
}

/// One point of an exact smile.
#[derive(Debug, Clone, PartialEq)]
pub struct SmilePoint {
    pub k: f64,
    pub price: Option<PriceQuote>,
    pub iv: Result<f64>,
}

/// Implied total volatility of an exact price, inverted in log space for
/// out-of-the-money strikes.
pub fn implied_vol_of_quote(k: f64, q: &PriceQuote) -> Result<f64> {
    let v = if k >= 0.0 {
        bs_core::implied_vol_from_ln_price(k, q.ln_value)?
    } else {
        bs_core::implied_vol(k, q.value)?
    };
    let gap = (bs_core::bs_call(k, v)? - q.value).abs();
    if gap > SMILE_ROUND_TRIP {
        return Err(Error::Convergence(format!("smile round trip off by {gap:e}")));
    }
    Ok(v)
}

/// Exact implied volatility `V(k)` on a grid; failures are reported per point.
pub fn smile_exact(model: &Model, k_grid: &[f64]) -> Vec<SmilePoint> {
    k_grid
        .par_iter()
        .map(|&k| {
            let wrap = |e: Error| Error::AtStrike { k, source: Box::new(e) };
            match call_exact(model, k, Contour::Auto) {
                Ok(q) => SmilePoint { k, price: Some(q), iv: implied_vol_of_quote(k, &q).map_err(wrap) },
                Err(e) => SmilePoint { k, price: None, iv: Err(wrap(e)) },
            }
        })
        .collect()
}
