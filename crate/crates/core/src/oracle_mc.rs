//! Exact-law Monte Carlo for `X_T = bT + σW_T + Σ_{j≤N_T} Y_j`.
//!
//! Paths are generated in fixed-size chunks. Chunk `c` draws from a
//! ChaCha20 generator seeded with `seed` on stream `c`, and chunk statistics
//! are merged in chunk order, so estimates do not depend on the thread count.

use crate::error::{domain, Result};
use crate::models::{KouParams, MertonParams, Model};
use rand::distr::{Distribution, Open01};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Poisson, StandardNormal};
use rayon::prelude::*;

/// Identity of the generator, recorded in every [`MCResult`].
pub const RNG_ALGORITHM: &str = "chacha20/seed_from_u64/stream=chunk";
/// Paths per chunk (one generator stream each).
pub const CHUNK_PATHS: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCResult {
    pub estimate: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub rng: &'static str,
    /// No path contributed a nonzero value (e.g. a strike beyond every sample).
    pub degenerate: bool,
}

/// Running mean and centred second moment.
#[derive(Debug, Clone, Copy, Default)]
struct Stats {
    n: f64,
    mean: f64,
    m2: f64,
    nonzero: bool,
}

impl Stats {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
        self.nonzero |= x != 0.0;
    }

    fn merge(self, o: Stats) -> Stats {
        if o.n == 0.0 {
            return self;
        }
        if self.n == 0.0 {
            return o;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Stats {
            n,
            mean: self.mean + d * o.n / n,
            m2: self.m2 + o.m2 + d * d * self.n * o.n / n,
            nonzero: self.nonzero || o.nonzero,
        }
    }

    fn result(&self, seed: u64) -> MCResult {
        let var = if self.n > 1.0 { self.m2 / (self.n - 1.0) } else { 0.0 };
        MCResult {
            estimate: self.mean,
            std_error: (var / self.n).sqrt(),
            n_paths: self.n as usize,
            seed,
            rng: RNG_ALGORITHM,
            degenerate: !self.nonzero,
        }
    }
}

enum Sampler {
    Kou { drift: f64, vol: f64, jumps: Option<Poisson<f64>>, lp: f64, lm: f64, p: f64 },
    Merton { drift: f64, vol: f64, jumps: Option<Poisson<f64>>, mu: f64, delta: f64 },
}

fn poisson(mean: f64) -> Result<Option<Poisson<f64>>> {
    if mean == 0.0 {
        return Ok(None);
    }
    Poisson::new(mean)
        .map(Some)
        .map_err(|e| domain(format!("jump intensity λT = {mean}: {e}")))
}

impl Sampler {
    fn new(model: &Model) -> Result<Self> {
        Ok(match *model {
            Model::Kou(KouParams { sigma, b, lambda, lambda_plus, lambda_minus, p, t }) => Sampler::Kou {
                drift: b * t,
                vol: sigma * t.sqrt(),
                jumps: poisson(lambda * t)?,
                lp: lambda_plus,
                lm: lambda_minus,
                p,
            },
            Model::Merton(MertonParams { sigma, b, lambda, mu, delta, t }) => Sampler::Merton {
                drift: b * t,
                vol: sigma * t.sqrt(),
                jumps: poisson(lambda * t)?,
                mu,
                delta,
            },
        })
    }

    fn draw(&self, rng: &mut ChaCha20Rng) -> f64 {
        match self {
            Sampler::Kou { drift, vol, jumps, lp, lm, p } => {
                let z: f64 = StandardNormal.sample(rng);
                let n = jumps.as_ref().map_or(0.0, |d| d.sample(rng));
                let mut sum = 0.0;
                for _ in 0..n as u64 {
                    // inverse cdf of the double-exponential law
                    let u: f64 = Open01.sample(rng);
                    sum += if u < 1.0 - p {
                        (u / (1.0 - p)).ln() / lm
                    } else {
                        -((1.0 - u) / p).ln() / lp
                    };
                }
                drift + vol * z + sum
            }
            Sampler::Merton { drift, vol, jumps, mu, delta } => {
                let z: f64 = StandardNormal.sample(rng);
                let n = jumps.as_ref().map_or(0.0, |d| d.sample(rng));
                let jump = if n > 0.0 {
                    let y: f64 = StandardNormal.sample(rng);
                    n * mu + delta * n.sqrt() * y
                } else {
                    0.0
                };
                drift + vol * z + jump
            }
        }
    }
}

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

fn chunks(n_paths: usize) -> impl IndexedParallelIterator<Item = (usize, usize)> {
    let n_chunks = n_paths.div_ceil(CHUNK_PATHS);
    (0..n_chunks)
        .into_par_iter()
        .map(move |c| (c, CHUNK_PATHS.min(n_paths - c * CHUNK_PATHS)))
}

/// Draw `n_paths` independent samples of `X_T`.
pub fn simulate_xt(model: &Model, n_paths: usize, seed: u64) -> Result<Vec<f64>> {
    if n_paths == 0 {
        return Err(domain("n_paths must be at least 1"));
    }
    let sampler = Sampler::new(model)?;
    let parts: Vec<Vec<f64>> = chunks(n_paths)
        .map(|(c, len)| {
            let mut rng = chunk_rng(seed, c);
            (0..len).map(|_| sampler.draw(&mut rng)).collect()
        })
        .collect();
    Ok(parts.concat())
}

/// Sample means (with standard errors) of several functionals of `X_T`,
/// all evaluated on the same paths.
pub fn mc_functionals<F>(model: &Model, functionals: &[F], n_paths: usize, seed: u64) -> Result<Vec<MCResult>>
where
    F: Fn(f64) -> f64 + Sync,
{
    if n_paths == 0 {
        return Err(domain("n_paths must be at least 1"));
    }
    let sampler = Sampler::new(model)?;
    let per_chunk: Vec<Vec<Stats>> = chunks(n_paths)
        .map(|(c, len)| {
            let mut rng = chunk_rng(seed, c);
            let mut stats = vec![Stats::default(); functionals.len()];
            for _ in 0..len {
                let x = sampler.draw(&mut rng);
                for (st, f) in stats.iter_mut().zip(functionals) {
                    st.push(f(x));
                }
            }
            stats
        })
        .collect();
    let mut total = vec![Stats::default(); functionals.len()];
    for chunk in per_chunk {
        for (t, s) in total.iter_mut().zip(chunk) {
            *t = t.merge(s);
        }
    }
    Ok(total.iter().map(|s| s.result(seed)).collect())
}

/// Monte Carlo estimate of `E[(e^{X_T} − e^k)⁺]`.
pub fn mc_call(model: &Model, k: f64, n_paths: usize, seed: u64) -> Result<MCResult> {
    Ok(mc_calls(model, &[k], n_paths, seed)?[0])
}

/// [`mc_call`] for several strikes on one set of paths.
pub fn mc_calls(model: &Model, ks: &[f64], n_paths: usize, seed: u64) -> Result<Vec<MCResult>> {
    for &k in ks {
        if !k.is_finite() {
            return Err(domain(format!("k must be finite, got {k}")));
        }
    }
    let payoffs: Vec<_> = ks
        .iter()
        .map(|&k| {
            let strike = k.exp();
            move |x: f64| (x.exp() - strike).max(0.0)
        })
        .collect();
    mc_functionals(model, &payoffs, n_paths, seed)
}

/// Monte Carlo estimate of `P(X_T ≤ x)`.
pub fn mc_cdf(model: &Model, x: f64, n_paths: usize, seed: u64) -> Result<MCResult> {
    let f = [move |y: f64| if y <= x { 1.0 } else { 0.0 }];
    Ok(mc_functionals(model, &f, n_paths, seed)?[0])
}

/// Density at `x` by differencing the empirical CDF over `[x − h/2, x + h/2]`.
pub fn mc_density(model: &Model, x: f64, bandwidth: f64, n_paths: usize, seed: u64) -> Result<MCResult> {
    if !(bandwidth > 0.0) {
        return Err(domain(format!("bandwidth must be positive, got {bandwidth}")));
    }
    let (lo, hi) = (x - 0.5 * bandwidth, x + 0.5 * bandwidth);
    let f = [move |y: f64| if y > lo && y <= hi { 1.0 / bandwidth } else { 0.0 }];
    Ok(mc_functionals(model, &f, n_paths, seed)?[0])
}
