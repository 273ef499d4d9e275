//! Shared helpers for the criterion benchmarks.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use wbary_core::DiscreteMeasure;

/// Deterministic random discrete measure with `atoms` support points in
/// the unit box of dimension `dim`.
pub fn random_discrete(rng: &mut ChaCha8Rng, dim: usize, atoms: usize) -> DiscreteMeasure {
    let points: Vec<Vec<f64>> = (0..atoms)
        .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let mut weights: Vec<f64> = (0..atoms).map(|_| rng.gen::<f64>() + 0.05).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    DiscreteMeasure::new(points, weights).expect("valid measure")
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
