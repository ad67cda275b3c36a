//! Synthetic inputs shared by the benchmarks.

use labelshift::{Dataset, FeatureMatrix, Label};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two overlapping Gaussian-ish blobs with roughly one minority sample in three.
pub fn blobs(n: usize, d: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = if i % 3 == 0 {
            Label::Minority
        } else {
            Label::Majority
        };
        let centre = 0.6 * label.sign();
        let row: Vec<f64> = (0..d)
            .map(|_| {
                let u: f64 = (0..4).map(|_| rng.random_range(-1.0..1.0)).sum();
                centre + u
            })
            .collect();
        rows.push(row);
        labels.push(label);
    }
    Dataset::new(
        "blobs",
        FeatureMatrix::from_rows(&rows).expect("rectangular"),
        labels,
    )
    .expect("valid dataset")
}
