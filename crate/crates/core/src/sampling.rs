//! Seeded sampling of points and directions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::scalar::Real;

/// Default seed for every sampled check.
pub const DEFAULT_SEED: u64 = 20_240_611;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform direction on the unit sphere in `R^n`.
pub fn unit_vector<R: Real>(rng: &mut impl Rng, n: usize) -> Vec<R> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return v.iter().map(|x| R::cst(x / norm)).collect();
        }
    }
}

/// Uniform point in the closed ball of the given radius.
pub fn ball_point<R: Real>(rng: &mut impl Rng, n: usize, radius: R) -> Vec<R> {
    let dir: Vec<R> = unit_vector(rng, n);
    let u: f64 = rng.gen();
    let r = radius * R::cst(u.powf(1.0 / n as f64));
    dir.into_iter().map(|d| d * r).collect()
}

/// `count` pairs `(x, y)` with `|x| ≤ radius` and `|y| = 1`.
pub fn sample_pairs<R: Real>(n: usize, radius: R, count: usize, seed: u64) -> Vec<(Vec<R>, Vec<R>)> {
    let mut g = rng(seed);
    (0..count)
        .map(|_| {
            let x = ball_point(&mut g, n, radius);
            let y = unit_vector(&mut g, n);
            (x, y)
        })
        .collect()
}

pub fn sample_points<R: Real>(n: usize, radius: R, count: usize, seed: u64) -> Vec<Vec<R>> {
    let mut g = rng(seed);
    (0..count).map(|_| ball_point(&mut g, n, radius)).collect()
}
