//! Seeded randomness. Every stream is ChaCha20 (`rand_chacha` 0.9) keyed
//! by a `u64` seed; replicate `i` of a run seeded with `s` uses `s ^ i`.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

pub type SimRng = ChaCha20Rng;

pub fn seeded(seed: u64) -> SimRng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Generator for one replicate of a simulation.
pub fn replicate(seed: u64, index: u64) -> SimRng {
    seeded(seed ^ index)
}

pub fn normal(rng: &mut SimRng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn normal_vec(rng: &mut SimRng, n: usize) -> Array1<f64> {
    Array1::from_shape_simple_fn(n, || normal(rng))
}

pub fn normal_matrix(rng: &mut SimRng, n: usize, p: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((n, p), || normal(rng))
}

/// Uniform on `[lo, hi)`.
pub fn uniform(rng: &mut SimRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Random permutation of `0..n`.
pub fn permutation(rng: &mut SimRng, n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx
}
