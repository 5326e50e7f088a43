#![allow(dead_code)]

use smilewings::models::{KouParams, MertonParams, Model};

pub fn fig1_params() -> KouParams {
    KouParams::new(0.4, 0.0, 1.0, 3.0, 2.0, 0.2, 6.0).unwrap().with_martingale_drift()
}

pub fn fig2_params() -> KouParams {
    KouParams::new(0.1, 0.0, 5.0, 15.0, 15.0, 0.5, 1.0).unwrap().with_martingale_drift()
}

pub fn fig3_params() -> MertonParams {
    MertonParams::new(0.4, 0.0, 0.1, 0.3, 0.4, 0.1).unwrap().with_martingale_drift()
}

pub fn fig1() -> Model {
    Model::Kou(fig1_params())
}

pub fn fig2() -> Model {
    Model::Kou(fig2_params())
}

pub fn fig3() -> Model {
    Model::Merton(fig3_params())
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect()
}

pub fn geomspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| if i + 1 == n { b } else { a * (b / a).powf(i as f64 / (n - 1) as f64) }).collect()
}

/// Points in the upper half of a grid.
pub fn upper_half(grid: &[f64]) -> &[f64] {
    &grid[grid.len() / 2..]
}

pub fn config_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}
