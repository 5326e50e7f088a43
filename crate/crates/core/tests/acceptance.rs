//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test --test acceptance`.

mod common;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use smilewings::bs_core::{bs_call, bs_vega, implied_vol};
use smilewings::cli::{Overrides, RunConfig};
use smilewings::exact_pricer::{auto_call_eta, call_exact, density_exact, smile_exact, Contour, ContourSpec};
use smilewings::kou_asym::{kou_call_expansion, kou_coefficients, kou_iv_expansion, psi};
use smilewings::merton_asym::{first_order_iv, merton_call_expansion, merton_density_expansion, merton_iv, merton_saddle, MertonIvMode};
use smilewings::models::{KouParams, Model};
use smilewings::oracle_mc::mc_calls;
use smilewings::quadrature::integrate;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn load(name: &str) -> RunConfig {
    RunConfig::load(&config_dir().join(name), &Overrides::default()).unwrap()
}

fn kou_of(m: &Model) -> KouParams {
    match m {
        Model::Kou(p) => *p,
        Model::Merton(_) => panic!("expected kou"),
    }
}

fn bs_round_trip() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let (mut checked, mut underflow, mut ill, mut worst) = (0, 0, 0, 0.0f64);
    let mut bad = Vec::new();
    for _ in 0..10_000 {
        let k = rng.random_range(-5.0..=5.0);
        let v = rng.random_range(1e-3..=5.0);
        let p = bs_call(k, v).unwrap();
        if p <= 0.0 {
            underflow += 1;
            continue;
        }
        // a 2-ulp price change moving v by more than the tolerance
        let ulp = (f64::EPSILON * p).max(f64::from_bits(1));
        if 2.0 * ulp / bs_vega(k, v).unwrap() > 1e-9 {
            ill += 1;
            continue;
        }
        checked += 1;
        match implied_vol(k, p) {
            Ok(iv) => {
                let err = (iv - v).abs();
                worst = worst.max(err);
                if err > 1e-9 {
                    bad.push((k, v, err));
                }
            }
            Err(_) => bad.push((k, v, f64::NAN)),
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "{checked} checked, max |err| {worst:.2e}; excluded {underflow} underflowed and {ill} ill-conditioned; {} failures {:?}",
            bad.len(),
            bad.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

fn contour_independence() -> Outcome {
    let mut worst = 0.0f64;
    for model in [fig1(), fig2()] {
        let lp = kou_of(&model).lambda_plus;
        for k in [0.5, 1.0, 2.0, 4.0] {
            // the saddle-anchored contour and one halfway from it to the pole
            let eta = auto_call_eta(&model, k).unwrap();
            let spec = ContourSpec { eta: 0.5 * (eta + lp), t_max: 1e3, n_points: 256 };
            let a = call_exact(&model, k, Contour::Auto).unwrap().value;
            let b = call_exact(&model, k, Contour::Fixed(spec)).unwrap().value;
            worst = worst.max(((a - b) / a).abs());
        }
    }
    outcome(worst <= 1e-9, format!("max relative gap {worst:.2e} (tol 1e-9)"))
}

fn oracle_agreement() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let ks = [0.0, 0.5, 1.0];
    for (name, model) in [("fig1", fig1()), ("fig2", fig2()), ("fig3", fig3())] {
        let mc = mc_calls(&model, &ks, 10_000_000, 2024).unwrap();
        let (mut z_max, mut se_max) = (0.0f64, 0.0f64);
        for (k, r) in ks.iter().zip(&mc) {
            let exact = call_exact(&model, *k, Contour::Auto).unwrap().value;
            z_max = z_max.max((r.estimate - exact).abs() / r.std_error);
            se_max = se_max.max(r.std_error);
        }
        pass &= z_max <= 3.0 && se_max <= 1e-4;
        parts.push(format!("{name}: max |z| {z_max:.2}, max se {se_max:.1e}"));
    }
    outcome(pass, format!("{} (need |z| <= 3, se <= 1e-4)", parts.join("; ")))
}

fn kou_identity() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let p = KouParams::new(
            rng.random_range(0.01..2.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(0.01..10.0),
            rng.random_range(1.001..50.0),
            rng.random_range(0.01..50.0),
            rng.random_range(0.01..0.99),
            rng.random_range(0.01..10.0),
        )
        .unwrap();
        let c = kou_coefficients(&p);
        let lhs = -2.0 * c.gamma * (c.alpha_1 * c.alpha_1 + c.alpha_1).sqrt();
        worst = worst.max((lhs - psi(c.alpha_1).unwrap().sqrt()).abs());
    }
    outcome(worst <= 1e-12, format!("max |diff| {worst:.2e} over 1000 sets (tol 1e-12)"))
}

fn kou_call_order() -> Outcome {
    let model = fig1();
    let p = kou_of(&model);
    let scaled: Vec<f64> = geomspace(5.0, 40.0, 15)
        .into_iter()
        .map(|k| {
            let exact = call_exact(&model, k, Contour::Auto).unwrap().ln_value;
            let approx = kou_call_expansion(&p, k).unwrap().ln_value;
            (approx - exact).exp_m1().abs() * k.powf(0.25)
        })
        .collect();
    let (lo, hi) = min_max(&scaled);
    outcome(hi / lo < 3.0, format!("k^(1/4)·|rel err| in [{lo:.3e}, {hi:.3e}], ratio {:.2} (need < 3)", hi / lo))
}

fn min_max(xs: &[f64]) -> (f64, f64) {
    xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
}

fn kou_iv_ordering() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["fig1_kou.json", "fig2_kou.json"] {
        let cfg = load(name);
        let p = kou_of(&cfg.model);
        let grid = cfg.k_grid.points();
        let ks = upper_half(&grid);
        let mut wins = 0;
        for sp in smile_exact(&cfg.model, ks) {
            let Ok(v) = sp.iv else { continue };
            let e1 = (kou_iv_expansion(&p, sp.k, 1).unwrap().value - v).abs();
            let e4 = (kou_iv_expansion(&p, sp.k, 4).unwrap().value - v).abs();
            wins += usize::from(e4 < e1);
        }
        pass &= wins == ks.len();
        parts.push(format!("{name}: {wins}/{} on k in [{}, {}]", ks.len(), ks[0], ks[ks.len() - 1]));
    }
    outcome(pass, parts.join("; "))
}

fn merton_saddle_check() -> Outcome {
    let p = fig3_params();
    let (mut res, mut ident) = (0.0f64, 0.0f64);
    for k in geomspace(2.0, 1e6, 60) {
        let s = merton_saddle(&p, k).unwrap();
        res = res.max((s.cgf.d1.re - k).abs() / k.max(1.0));
        let h = s.s_hat;
        let lhs = (p.delta * p.delta * h * h / 2.0 + p.mu * h).exp();
        let rhs = (k / p.t - p.sigma * p.sigma * h - p.b) / (p.lambda * (p.delta * p.delta * h + p.mu));
        ident = ident.max((lhs / rhs - 1.0).abs());
    }
    outcome(
        res <= 1e-10 && ident <= 1e-9,
        format!("max residual/max(1,k) {res:.2e} (tol 1e-10); identity rel {ident:.2e} (tol 1e-9)"),
    )
}

fn merton_iv_refinement() -> Outcome {
    let cfg = load("fig3_merton.json");
    let Model::Merton(p) = cfg.model else { unreachable!() };
    let grid = cfg.k_grid.points();
    let ks = upper_half(&grid);
    let mut wins = 0;
    for sp in smile_exact(&cfg.model, ks) {
        let Ok(v) = sp.iv else { continue };
        let semi = (merton_iv(&p, sp.k, MertonIvMode::SemiExplicit).unwrap() - v).abs();
        let first = (first_order_iv(&p, sp.k).unwrap() - v).abs();
        wins += usize::from(semi < first);
    }
    outcome(wins == ks.len(), format!("{wins}/{} on k in [{}, {}]", ks.len(), ks[0], ks[ks.len() - 1]))
}

fn merton_density() -> Outcome {
    let model = fig3();
    let p = fig3_params();
    let scaled: Vec<f64> = linspace(1.0, 6.0, 26)
        .into_iter()
        .map(|x| {
            let exact = density_exact(&model, x, Contour::Auto).unwrap().ln_value;
            let approx = merton_density_expansion(&p, x).unwrap().ln_value;
            (approx - exact).exp_m1().abs() * x.sqrt()
        })
        .collect();
    let (lo, hi) = min_max(&scaled);
    let breaks = linspace(-4.0, 6.0, 201);
    let mass = integrate(|x| density_exact(&model, x, Contour::Auto).unwrap().value, &breaks, 1e-12, 1e-12, 1 << 20);
    let normalized = (mass.value - 1.0).abs() <= 1e-6;
    outcome(
        hi / lo < 3.0 && normalized,
        format!(
            "√x·|rel err| in [{lo:.2e}, {hi:.2e}], ratio {:.1} (need < 3); ∫f = 1 {:+.2e} (tol 1e-6)",
            hi / lo,
            mass.value - 1.0
        ),
    )
}

fn first_order_limits() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, model) in [("fig1", fig1()), ("fig2", fig2())] {
        let p = kou_of(&model);
        let target = psi(p.lambda_plus - 1.0).unwrap().sqrt();
        let v50 = kou_iv_expansion(&p, 50.0, 4).unwrap().value / 50f64.sqrt();
        let self_gap = (v50 / target - 1.0).abs();
        let ks: Vec<f64> = (0..11).map(|j| 50.0 * 2f64.powi(j)).collect();
        let last = smile_exact(&model, &ks).into_iter().filter_map(|sp| Some((sp.k, sp.iv.ok()?))).next_back();
        let (k_max, v) = last.expect("quadrature holds at k = 50");
        let exact_gap = (v / k_max.sqrt() / target - 1.0).abs();
        pass &= self_gap <= 0.10 && exact_gap <= 0.25;
        parts.push(format!("{name}: order4 gap {:.1}%, exact gap {:.1}% at k = {k_max}", 100.0 * self_gap, 100.0 * exact_gap));
    }
    let p = fig3_params();
    let k = 1e3;
    let l = -merton_call_expansion(&p, k).unwrap().ln_value;
    let ratio = l / (k * k.ln().sqrt()) / (std::f64::consts::SQRT_2 / p.delta);
    pass &= (ratio - 1.0).abs() <= 0.15;
    parts.push(format!("merton: L/(k√log k) / (√2/δ) = {ratio:.3}"));
    outcome(pass, format!("{} (tol 10%/25%/15%)", parts.join("; ")))
}

fn csv_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_smilewings");
    let dir = tempfile::tempdir().unwrap();
    let mut parts = Vec::new();
    let mut pass = true;
    for name in ["fig1_kou.json", "fig2_kou.json", "fig3_merton.json", "fig3_merton_tails.json"] {
        let work = dir.path().join(name);
        std::fs::create_dir_all(&work).unwrap();
        let mut outputs = Vec::new();
        for _ in 0..2 {
            let status = Command::new(bin)
                .args(["run", "--config"])
                .arg(config_dir().join(name))
                .current_dir(&work)
                .output()
                .unwrap()
                .status;
            pass &= status.success();
            let out = work.join(load(name).out_path);
            let mut files: Vec<_> = std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().path()).collect();
            files.sort();
            outputs.push(files.iter().map(|f| std::fs::read(f).unwrap()).collect::<Vec<_>>());
        }
        let same = outputs[0] == outputs[1];
        pass &= same && !outputs[0].is_empty();
        parts.push(format!("{name}: {} files {}", outputs[0].len(), if same { "identical" } else { "DIFFER" }));
    }
    outcome(pass, parts.join("; "))
}

type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("Black-Scholes round trip", bs_round_trip, Some(Duration::from_secs(5))),
        ("Kou contour independence", contour_independence, Some(Duration::from_secs(10))),
        ("Monte Carlo oracle agreement", oracle_agreement, Some(Duration::from_secs(120))),
        ("Kou coefficient identity", kou_identity, Some(Duration::from_secs(1))),
        ("Kou call error order", kou_call_order, Some(Duration::from_secs(30))),
        ("Kou IV ordering", kou_iv_ordering, Some(Duration::from_secs(30))),
        ("Merton saddle", merton_saddle_check, Some(Duration::from_secs(1))),
        ("Merton IV refinement", merton_iv_refinement, Some(Duration::from_secs(30))),
        ("Merton density", merton_density, Some(Duration::from_secs(30))),
        ("First-order limits", first_order_limits, None),
        ("CSV determinism", csv_determinism, Some(Duration::from_secs(60))),
    ];
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let took = start.elapsed();
        let pass = o.pass && budget.is_none_or(|b| took <= b);
        failed += usize::from(!pass);
        println!(
            "{} {:>2}. {name}: {} [{:.2} s{}]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            took.as_secs_f64(),
            budget.map_or(String::new(), |b| format!(", budget {} s", b.as_secs()))
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
