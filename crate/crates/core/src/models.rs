//! Kou and Merton jump-diffusion parameter records and their cumulant
//! generating functions `m(s, T) = log E[exp(s X_T)]`.
//!
//! Both cgfs are evaluated at complex arguments together with their first
//! three `s`-derivatives in closed form.

use crate::error::{domain, Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Guard radius around the poles of the Kou mgf.
pub const POLE_GUARD: f64 = 1e-12;

/// Largest argument of `exp` that stays finite in `f64`.
const MAX_EXP_ARG: f64 = 709.78;

/// Kou double-exponential jump diffusion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, try_from = "KouRecord")]
pub struct KouParams {
    pub sigma: f64,
    pub b: f64,
    pub lambda: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub p: f64,
    #[serde(rename = "T")]
    pub t: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KouRecord {
    sigma: f64,
    b: f64,
    lambda: f64,
    lambda_plus: f64,
    lambda_minus: f64,
    p: f64,
    #[serde(rename = "T")]
    t: f64,
}

impl TryFrom<KouRecord> for KouParams {
    type Error = Error;

    fn try_from(r: KouRecord) -> Result<Self> {
        KouParams::new(r.sigma, r.b, r.lambda, r.lambda_plus, r.lambda_minus, r.p, r.t)
    }
}

/// Merton Gaussian-jump diffusion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, try_from = "MertonRecord")]
pub struct MertonParams {
    pub sigma: f64,
    pub b: f64,
    pub lambda: f64,
    pub mu: f64,
    pub delta: f64,
    #[serde(rename = "T")]
    pub t: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MertonRecord {
    sigma: f64,
    b: f64,
    lambda: f64,
    mu: f64,
    delta: f64,
    #[serde(rename = "T")]
    t: f64,
}

impl TryFrom<MertonRecord> for MertonParams {
    type Error = Error;

    fn try_from(r: MertonRecord) -> Result<Self> {
        MertonParams::new(r.sigma, r.b, r.lambda, r.mu, r.delta, r.t)
    }
}

fn positive(field: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { field, reason: format!("must be finite and > 0, got {x}") })
    }
}

fn finite(field: &'static str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { field, reason: format!("must be finite, got {x}") })
    }
}

impl KouParams {
    pub fn new(
        sigma: f64,
        b: f64,
        lambda: f64,
        lambda_plus: f64,
        lambda_minus: f64,
        p: f64,
        t: f64,
    ) -> Result<Self> {
        positive("sigma", sigma)?;
        finite("b", b)?;
        positive("lambda", lambda)?;
        if !(lambda_plus.is_finite() && lambda_plus > 1.0) {
            return Err(Error::InvalidParameter {
                field: "lambda_plus",
                reason: format!("must be finite and > 1, got {lambda_plus}"),
            });
        }
        positive("lambda_minus", lambda_minus)?;
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter {
                field: "p",
                reason: format!("must lie in (0, 1), got {p}"),
            });
        }
        positive("T", t)?;
        Ok(Self { sigma, b, lambda, lambda_plus, lambda_minus, p, t })
    }

    /// Same parameters with `b` replaced by the martingale drift.
    pub fn with_martingale_drift(mut self) -> Self {
        self.b = self.martingale_drift();
        self
    }

    /// Drift making `exp(X_t)` a martingale, i.e. `m(1, T) = 0`.
    pub fn martingale_drift(&self) -> f64 {
        let jump = self.lambda_plus * self.p / (self.lambda_plus - 1.0)
            + self.lambda_minus * (1.0 - self.p) / (self.lambda_minus + 1.0)
            - 1.0;
        -0.5 * self.sigma * self.sigma - self.lambda * jump
    }

    /// `ξ = λ λ₊ p T`.
    pub fn xi(&self) -> f64 {
        self.lambda * self.lambda_plus * self.p * self.t
    }

    /// Open strip `(−λ₋, λ₊)` where the mgf is analytic.
    pub fn strip(&self) -> (f64, f64) {
        (-self.lambda_minus, self.lambda_plus)
    }

    /// `m(s, T)` and its derivatives.
    pub fn cgf(&self, s: Complex64) -> Result<CgfEval> {
        kou_cgf(self, s)
    }
}

impl MertonParams {
    pub fn new(sigma: f64, b: f64, lambda: f64, mu: f64, delta: f64, t: f64) -> Result<Self> {
        positive("sigma", sigma)?;
        finite("b", b)?;
        positive("lambda", lambda)?;
        finite("mu", mu)?;
        positive("delta", delta)?;
        positive("T", t)?;
        Ok(Self { sigma, b, lambda, mu, delta, t })
    }

    pub fn with_martingale_drift(mut self) -> Self {
        self.b = self.martingale_drift();
        self
    }

    pub fn martingale_drift(&self) -> f64 {
        let jump = (0.5 * self.delta * self.delta + self.mu).exp_m1();
        -0.5 * self.sigma * self.sigma - self.lambda * jump
    }

    pub fn cgf(&self, s: Complex64) -> Result<CgfEval> {
        merton_cgf(self, s)
    }
}

/// Either supported model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", content = "params", rename_all = "lowercase")]
pub enum Model {
    Kou(KouParams),
    Merton(MertonParams),
}

impl Model {
    pub fn cgf(&self, s: Complex64) -> Result<CgfEval> {
        match self {
            Model::Kou(p) => kou_cgf(p, s),
            Model::Merton(p) => merton_cgf(p, s),
        }
    }

    /// Real-axis evaluation.
    pub fn cgf_real(&self, s: f64) -> Result<CgfEval> {
        self.cgf(Complex64::new(s, 0.0))
    }

    /// Open interval of real `s` where the mgf is finite.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            Model::Kou(p) => p.strip(),
            Model::Merton(_) => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn sigma(&self) -> f64 {
        match self {
            Model::Kou(p) => p.sigma,
            Model::Merton(p) => p.sigma,
        }
    }

    pub fn maturity(&self) -> f64 {
        match self {
            Model::Kou(p) => p.t,
            Model::Merton(p) => p.t,
        }
    }

    pub fn drift(&self) -> f64 {
        match self {
            Model::Kou(p) => p.b,
            Model::Merton(p) => p.b,
        }
    }

    pub fn martingale_drift(&self) -> f64 {
        match self {
            Model::Kou(p) => p.martingale_drift(),
            Model::Merton(p) => p.martingale_drift(),
        }
    }

    pub fn with_martingale_drift(self) -> Self {
        match self {
            Model::Kou(p) => Model::Kou(p.with_martingale_drift()),
            Model::Merton(p) => Model::Merton(p.with_martingale_drift()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::Kou(_) => "kou",
            Model::Merton(_) => "merton",
        }
    }
}

impl From<KouParams> for Model {
    fn from(p: KouParams) -> Self {
        Model::Kou(p)
    }
}

impl From<MertonParams> for Model {
    fn from(p: MertonParams) -> Self {
        Model::Merton(p)
    }
}

/// Drift `b` with `m(1, T) = 0`.
pub fn risk_neutral_drift(model: &Model) -> f64 {
    model.martingale_drift()
}

/// `m` and its first three derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgfEval {
    pub value: Complex64,
    pub d1: Complex64,
    pub d2: Complex64,
    pub d3: Complex64,
}

pub fn kou_cgf(params: &KouParams, s: Complex64) -> Result<CgfEval> {
    if !(s.re.is_finite() && s.im.is_finite()) {
        return Err(domain(format!("s must be finite, got {s}")));
    }
    let KouParams { sigma, b, lambda, lambda_plus: lp, lambda_minus: lm, p, t } = *params;
    if !(s.re > -lm && s.re < lp) {
        return Err(domain(format!("Re(s) = {} outside the strip ({}, {lp})", s.re, -lm)));
    }
    let up = lp - s;
    let down = lm + s;
    if up.norm() < POLE_GUARD {
        return Err(Error::PoleProximity { pole: lp, distance: up.norm() });
    }
    if down.norm() < POLE_GUARD {
        return Err(Error::PoleProximity { pole: -lm, distance: down.norm() });
    }
    let a = lp * p;
    let c = lm * (1.0 - p);
    let su = 1.0 / up;
    let sd = 1.0 / down;
    let s2 = sigma * sigma;
    let value = t * (0.5 * s2 * s * s + b * s + lambda * (a * su + c * sd - 1.0));
    let d1 = t * (s2 * s + b + lambda * (a * su * su - c * sd * sd));
    let d2 = t * (s2 + 2.0 * lambda * (a * su.powi(3) + c * sd.powi(3)));
    let d3 = 6.0 * t * lambda * (a * su.powi(4) - c * sd.powi(4));
    Ok(CgfEval { value, d1, d2, d3 })
}

pub fn merton_cgf(params: &MertonParams, s: Complex64) -> Result<CgfEval> {
    if !(s.re.is_finite() && s.im.is_finite()) {
        return Err(domain(format!("s must be finite, got {s}")));
    }
    let MertonParams { sigma, b, lambda, mu, delta, t } = *params;
    let d2j = delta * delta;
    let q = 0.5 * d2j * s * s + mu * s;
    if q.re > MAX_EXP_ARG {
        return Err(Error::Overflow { exponent: q.re });
    }
    let e = q.exp();
    // q'(s) = δ² s + μ
    let qp = d2j * s + mu;
    let s2 = sigma * sigma;
    let value = t * (0.5 * s2 * s * s + b * s + lambda * q.exp_m1_complex());
    let d1 = t * (s2 * s + b + lambda * qp * e);
    let d2 = t * (s2 + lambda * (qp * qp + d2j) * e);
    let d3 = t * lambda * (qp * qp * qp + 3.0 * d2j * qp) * e;
    Ok(CgfEval { value, d1, d2, d3 })
}

trait ExpM1 {
    fn exp_m1_complex(self) -> Complex64;
}

impl ExpM1 for Complex64 {
    /// `e^z − 1` without cancellation near zero.
    fn exp_m1_complex(self) -> Complex64 {
        if self.norm() < 0.5 {
            // e^{x+iy} − 1 = (e^x − 1)cos y + (cos y − 1) + i e^x sin y
            let em1 = self.re.exp_m1();
            let cm1 = -2.0 * (0.5 * self.im).sin().powi(2);
            Complex64::new(
                em1 * self.im.cos() + cm1,
                self.re.exp() * self.im.sin(),
            )
        } else {
            self.exp() - 1.0
        }
    }
}

/// Real solution of `m′(s) = target` together with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealSaddle {
    pub s: f64,
    pub cgf: CgfEval,
    pub iterations: usize,
    pub residual: f64,
}

/// Solve `m′(s, T) = target` on the real axis.
///
/// `m′` is strictly increasing, so Newton steps are kept inside a bracket
/// that is grown geometrically from `guess` (towards the strip edge for Kou)
/// and bisected whenever a step leaves it.
pub fn solve_saddle(model: &Model, target: f64, guess: f64, tol: f64) -> Result<RealSaddle> {
    const MAX_ITER: usize = 200;
    if !target.is_finite() {
        return Err(domain(format!("saddle target must be finite, got {target}")));
    }
    let (dom_lo, dom_hi) = model.domain();
    let mut s = if guess > dom_lo && guess < dom_hi { guess } else { 0.0 };
    let slope_at = |x: f64| -> Result<Option<CgfEval>> {
        match model.cgf_real(x) {
            Ok(c) => Ok(Some(c)),
            Err(Error::Overflow { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };

    // bracket [lo, hi] with m'(lo) < target < m'(hi)
    let mut lo = f64::NAN;
    let mut hi = f64::NAN;
    match slope_at(s)? {
        Some(c) if c.d1.re < target => lo = s,
        Some(c) if c.d1.re > target => hi = s,
        Some(c) => {
            return Ok(RealSaddle { s, cgf: c, iterations: 0, residual: 0.0 });
        }
        // overflow: which side depends on the sign of s
        None if s > 0.0 => hi = s,
        None => lo = s,
    }
    let step0 = s.abs().max(1.0);
    let mut j = 0;
    while lo.is_nan() || hi.is_nan() {
        j += 1;
        if j > 2000 {
            return Err(Error::Convergence(format!("could not bracket saddle for m' = {target}")));
        }
        let (anchor, edge, up) = if lo.is_nan() { (hi, dom_lo, false) } else { (lo, dom_hi, true) };
        let x = if edge.is_finite() {
            edge + (anchor - edge) * 0.5f64.powi(j)
        } else if up {
            anchor + step0 * 2f64.powi(j)
        } else {
            anchor - step0 * 2f64.powi(j)
        };
        match slope_at(x) {
            Ok(Some(c)) if c.d1.re < target => lo = x,
            Ok(Some(c)) if c.d1.re > target => hi = x,
            Ok(Some(c)) => {
                return Ok(RealSaddle { s: x, cgf: c, iterations: j as usize, residual: 0.0 });
            }
            Ok(None) if x > 0.0 => hi = x,
            Ok(None) => lo = x,
            Err(Error::PoleProximity { .. }) => {
                return Err(Error::Convergence(format!(
                    "saddle for m' = {target} lies within the pole guard"
                )))
            }
            Err(e) => return Err(e),
        }
    }
    s = s.clamp(lo, hi);
    if !(s > lo && s < hi) {
        s = 0.5 * (lo + hi);
    }
    for it in 1..=MAX_ITER {
        let c = match slope_at(s)? {
            Some(c) => c,
            None => {
                hi = s;
                s = 0.5 * (lo + hi);
                continue;
            }
        };
        let r = c.d1.re - target;
        if r.abs() <= tol {
            // one polishing Newton step; kept only if it does not worsen the residual
            let polished = s - r / c.d2.re;
            if polished > lo && polished < hi {
                if let Ok(cp) = model.cgf_real(polished) {
                    let rp = (cp.d1.re - target).abs();
                    if rp <= r.abs() {
                        return Ok(RealSaddle { s: polished, cgf: cp, iterations: it, residual: rp });
                    }
                }
            }
            return Ok(RealSaddle { s, cgf: c, iterations: it, residual: r.abs() });
        }
        if r < 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let newton = s - r / c.d2.re;
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if next == s || hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()) {
            // bracket exhausted at double precision
            let c = model.cgf_real(next)?;
            let r = (c.d1.re - target).abs();
            if r <= tol {
                return Ok(RealSaddle { s: next, cgf: c, iterations: it, residual: r });
            }
            return Err(Error::Convergence(format!(
                "saddle residual {r:e} above tolerance {tol:e} at s = {next}"
            )));
        }
        s = next;
    }
    Err(Error::Convergence(format!("saddle iteration cap {MAX_ITER} exceeded for m' = {target}")))
}
