//! Criterion benchmarks for the pair-sum engines; see `benches/`.

use udep_core::{generate_path, ProcessModel};

/// Uniform iid sample used by every benchmark.
pub fn sample(n: usize, seed: u64) -> Vec<f64> {
    generate_path(&ProcessModel::iid_uniform(), n, seed)
        .expect("iid generation cannot fail for n > 0")
        .values
}
