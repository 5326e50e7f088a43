//! Large-strike asymptotics for the Kou and Merton jump-diffusion models,
//! together with the numerical references used to check them: Fourier
//! contour pricing, an exact-law Monte Carlo simulator and Black–Scholes
//! implied-volatility inversion.

#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod bs_core;
pub mod cli;
pub mod error;
pub mod exact_pricer;
pub mod kou_asym;
pub mod merton_asym;
pub mod models;
pub mod oracle_mc;
pub mod quadrature;

pub use error::{Error, Result};
