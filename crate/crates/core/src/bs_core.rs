//! Black–Scholes call prices in dimensionless form, implied-volatility
//! inversion and the `G₋` transfer map.
//!
//! Spot is normalised to one and rates are zero, so a call is described by
//! its log-strike `k` and total volatility `v` (volatility times the square
//! root of maturity). Out-of-the-money prices are evaluated through the
//! scaled complementary error function so that prices far below the
//! smallest normal `f64` can still be handled in log space.

use crate::error::{domain, ensure_finite, Error, Result};
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

const FRAC_1_SQRT_2_LO: f64 = -4.833_646_656_726_457e-17;
const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Price tolerance met by [`implied_vol`] on the round trip.
pub const PRICE_TOLERANCE: f64 = 1e-12;

const MAX_ITERATIONS: usize = 200;

/// `-x / √2` split into a head and an exact-ish tail.
fn scaled_arg(x: f64) -> (f64, f64) {
    let y = -x;
    let hi = y * FRAC_1_SQRT_2;
    let lo = y.mul_add(FRAC_1_SQRT_2, -hi) + y * FRAC_1_SQRT_2_LO;
    (hi, lo)
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function, accurate in relative terms deep
/// into the left tail.
pub fn norm_cdf(x: f64) -> f64 {
    let (hi, lo) = scaled_arg(x);
    // first-order correction for the rounding of -x/√2
    0.5 * (libm::erfc(hi) - lo * std::f64::consts::FRAC_2_SQRT_PI * (-hi * hi).exp())
}

/// Scaled complementary error function `exp(a²)·erfc(a)`.
pub fn erfcx(a: f64) -> f64 {
    if a.is_nan() {
        return f64::NAN;
    }
    if a < 0.0 {
        if a < -26.6 {
            return f64::INFINITY;
        }
        return 2.0 * exp_square(a) - erfcx(-a);
    }
    if a < 10.0 {
        exp_square(a) * libm::erfc(a)
    } else {
        // asymptotic series: 1/(a√π) Σ (-1)^n (2n-1)!! / (2a²)^n
        let z = 1.0 / (2.0 * a * a);
        let mut term = 1.0;
        let mut sum = 1.0;
        for n in 1..24 {
            term *= -((2 * n - 1) as f64) * z;
            sum += term;
        }
        FRAC_1_SQRT_PI / a * sum
    }
}

/// `exp(a²)` with the rounding of `a²` compensated.
fn exp_square(a: f64) -> f64 {
    let h = a * a;
    let l = a.mul_add(a, -h);
    h.exp() * (1.0 + l)
}

/// [`erfcx`] evaluated at `hi + lo` with a first-order tail correction.
fn erfcx_split(hi: f64, lo: f64) -> f64 {
    let e = erfcx(hi);
    let de = 2.0 * hi * e - std::f64::consts::FRAC_2_SQRT_PI;
    e + lo * de
}

/// `d₁ = −k/v + v/2`.
pub fn d1(k: f64, v: f64) -> f64 {
    -k / v + 0.5 * v
}

/// `d₂ = −k/v − v/2`.
pub fn d2(k: f64, v: f64) -> f64 {
    -k / v - 0.5 * v
}

fn check_inputs(k: f64, v: f64) -> Result<()> {
    ensure_finite("k", k)?;
    ensure_finite("v", v)?;
    if v <= 0.0 {
        return Err(domain(format!("total volatility must be positive, got {v}")));
    }
    Ok(())
}

/// Out-of-the-money representation: the price is
/// `½·exp(−d₁²/2)·scaled`, valid when `d₁ < 0`.
fn otm_scaled(k: f64, v: f64) -> (f64, f64) {
    let d1 = d1(k, v);
    let d2 = d2(k, v);
    let (h1, l1) = scaled_arg(d1);
    let (h2, l2) = scaled_arg(d2);
    let scaled = erfcx_split(h1, l1) - erfcx_split(h2, l2);
    (d1, scaled)
}

/// In-the-money-side price `Φ(d₁) − e^k Φ(d₂)` for `d₁ ≥ 0`. For `k > 0`,
/// `e^k Φ(d₂) = ½·exp(−d₁²/2)·erfcx(−d₂/√2)`, which cannot overflow.
fn itm_price(k: f64, v: f64) -> f64 {
    let d1 = d1(k, v);
    let strike_leg = if k > 0.0 {
        let (h2, l2) = scaled_arg(d2(k, v));
        0.5 * (-0.5 * d1 * d1).exp() * erfcx_split(h2, l2)
    } else {
        k.exp() * norm_cdf(d2(k, v))
    };
    norm_cdf(d1) - strike_leg
}

/// Black–Scholes call `Φ(d₁) − e^k Φ(d₂)` on unit spot.
pub fn bs_call(k: f64, v: f64) -> Result<f64> {
    check_inputs(k, v)?;
    let d1 = d1(k, v);
    if d1 < 0.0 {
        let (d1, scaled) = otm_scaled(k, v);
        Ok(0.5 * (-0.5 * d1 * d1).exp() * scaled)
    } else {
        Ok(itm_price(k, v).max(intrinsic(k)))
    }
}

/// Natural log of [`bs_call`], finite even where the price underflows.
pub fn ln_bs_call(k: f64, v: f64) -> Result<f64> {
    check_inputs(k, v)?;
    let d1 = d1(k, v);
    if d1 < 0.0 {
        let (d1, scaled) = otm_scaled(k, v);
        Ok((0.5 * scaled).ln() - 0.5 * d1 * d1)
    } else {
        Ok(bs_call(k, v)?.ln())
    }
}

/// Vega `∂c/∂v = φ(d₁)` in total-volatility units.
pub fn bs_vega(k: f64, v: f64) -> Result<f64> {
    check_inputs(k, v)?;
    Ok(norm_pdf(d1(k, v)))
}

/// Lower edge of the arbitrage band, `max(1 − e^k, 0)`.
pub fn intrinsic(k: f64) -> f64 {
    if k < 0.0 {
        -k.exp_m1()
    } else {
        0.0
    }
}

/// `log c(k, v)` and `∂/∂v log c(k, v)` for `k ≥ 0`.
fn ln_call_and_slope(k: f64, v: f64) -> (f64, f64) {
    let d1 = d1(k, v);
    if d1 < 0.0 {
        let (d1, scaled) = otm_scaled(k, v);
        let ln_price = (0.5 * scaled).ln() - 0.5 * d1 * d1;
        // φ(d₁)/c with the Gaussian factor cancelled
        let slope = 2.0 * FRAC_1_SQRT_2PI / scaled;
        (ln_price, slope)
    } else {
        let price = itm_price(k, v);
        (price.ln(), norm_pdf(d1) / price)
    }
}

/// Solve `log c(k, v) = target` for `k ≥ 0` by Newton's method on `v`,
/// safeguarded by a bracket that starts at `(0, ∞)`.
fn solve_otm(k: f64, target: f64) -> Result<f64> {
    let mut lo = 0.0_f64;
    let mut hi = f64::INFINITY;
    // rational first guess: the vega-maximising volatility, or the
    // at-the-money approximation c ≈ v/√(2π) when k = 0
    let mut v = if k > 0.0 {
        (2.0 * k).sqrt()
    } else {
        (target.exp() * (2.0 * std::f64::consts::PI).sqrt()).clamp(1e-8, 10.0)
    };
    for _ in 0..MAX_ITERATIONS {
        let (ln_price, slope) = ln_call_and_slope(k, v);
        let g = ln_price - target;
        if g == 0.0 {
            return Ok(v);
        }
        // NaN means the scaled difference cancelled to zero: v is far too small
        if g < 0.0 || g.is_nan() {
            lo = v;
        } else {
            hi = v;
        }
        let newton = v - g / slope;
        let in_bracket = newton.is_finite() && newton > lo && newton < hi;
        // residual at the resolution of the log price: steps only dither
        if g.abs() <= 4.0 * f64::EPSILON * target.abs().max(1.0) {
            return Ok(if in_bracket { newton } else { v });
        }
        let next = if in_bracket {
            newton
        } else if hi.is_infinite() {
            2.0 * v
        } else {
            0.5 * (lo + hi)
        };
        if (next - v).abs() <= 2.0 * f64::EPSILON * v || (hi.is_finite() && hi - lo <= 2.0 * f64::EPSILON * hi) {
            return Ok(next);
        }
        v = next;
    }
    Err(Error::Convergence(format!(
        "implied volatility for k = {k} did not converge in {MAX_ITERATIONS} iterations"
    )))
}

/// Implied total volatility `V` with `c_BS(k, V) = price`.
pub fn implied_vol(k: f64, price: f64) -> Result<f64> {
    ensure_finite("k", k)?;
    ensure_finite("price", price)?;
    let lower = intrinsic(k);
    if price < lower || price > 1.0 {
        return Err(Error::NoSolution(format!(
            "price {price} outside ({lower}, 1) for k = {k}"
        )));
    }
    if price == lower || price == 1.0 {
        return Err(Error::Boundary(format!("price {price} at band edge for k = {k}")));
    }
    let v = if k >= 0.0 {
        solve_otm(k, price.ln())?
    } else {
        // c(k) − (1 − e^k) = e^k c(−k)
        let otm = (price - lower) * (-k).exp();
        solve_otm(-k, otm.ln())?
    };
    let err = (bs_call(k, v)? - price).abs();
    if err > PRICE_TOLERANCE {
        return Err(Error::Convergence(format!(
            "round-trip price error {err:e} at k = {k}"
        )));
    }
    Ok(v)
}

/// Implied total volatility from the natural log of an out-of-the-money
/// call price (`k ≥ 0`); usable when the price itself underflows.
pub fn implied_vol_from_ln_price(k: f64, ln_price: f64) -> Result<f64> {
    ensure_finite("k", k)?;
    if ln_price.is_nan() || ln_price == f64::INFINITY {
        return Err(domain(format!("log price must be finite, got {ln_price}")));
    }
    if k < 0.0 {
        return implied_vol(k, ln_price.exp());
    }
    if ln_price >= 0.0 {
        return if ln_price == 0.0 {
            Err(Error::Boundary(format!("price 1 at band edge for k = {k}")))
        } else {
            Err(Error::NoSolution(format!("price e^{ln_price} above 1")))
        };
    }
    if ln_price == f64::NEG_INFINITY {
        return Err(Error::Boundary(format!("price 0 at band edge for k = {k}")));
    }
    solve_otm(k, ln_price)
}

/// Gao–Lee transfer `G₋(k, u) = √2(√(u + k) − √u)`.
pub fn g_minus(k: f64, u: f64) -> Result<f64> {
    ensure_finite("k", k)?;
    ensure_finite("u", u)?;
    if u <= 0.0 {
        return Err(domain(format!("G₋ needs u > 0, got {u}")));
    }
    if u + k <= 0.0 {
        return Err(domain(format!("G₋ needs u + k > 0, got {}", u + k)));
    }
    // rationalised form avoids cancellation when u ≫ k
    Ok(SQRT_2 * k / ((u + k).sqrt() + u.sqrt()))
}
