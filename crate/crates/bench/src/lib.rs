//! Benchmark fixtures. The benches themselves live in `benches/`.

use harmonrank::data::{generate, Dataset, GeneratorSpec};
use harmonrank::experiments::random_batch;
use harmonrank::BatchLabels;

/// Standard-normal scores with balanced labels over `m` objectives.
pub fn batch(n: usize, m: usize) -> (Vec<f64>, BatchLabels) {
    random_batch(n, m, 0.5, 0).expect("n ≥ 2")
}

/// The five-objective ladder with `n` samples.
pub fn ladder(n: usize) -> Dataset {
    generate(&GeneratorSpec {
        num_samples: n,
        ..GeneratorSpec::standard(0)
    })
    .expect("standard spec is valid")
}
