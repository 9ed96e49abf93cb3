//! Seeded synthetic data for the scaling benchmark: two Gaussian clouds at
//! `+-c * e / sqrt(m)`, with `c` controlling separability. Deterministic for
//! a given seed, so benchmark runs are reproducible.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::{ClassMap, Column, RawDataset};

/// Generate `n` rows of `m` features, alternating classes so every
/// contiguous partition sees both labels.
pub fn two_clouds(n: usize, m: usize, separation: f64, seed: u64) -> RawDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center = separation / (m as f64).sqrt();
    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(n); m];
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        labels.push(if i % 2 == 0 { 1i8 } else { -1i8 });
        for col in columns.iter_mut() {
            let noise: f64 = rng.sample(StandardNormal);
            col.push(sign * center + noise);
        }
    }
    RawDataset {
        n,
        raw_width: m,
        columns: columns.into_iter().map(Column::Numeric).collect(),
        labels,
        class_map: ClassMap { positive: "+1".into(), negative: "-1".into() },
    }
}
