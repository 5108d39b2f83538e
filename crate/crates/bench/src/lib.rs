//! Benchmark-only crate; see `benches/kernels.rs`.
//!
//! Shared fixtures for the benchmark targets live here so they are
//! compiled once.

use extinction_core::exponents::Exponents;
use extinction_core::solver::{init_from, RadialField, RadialGrid};

/// Reference triple used across the benchmarks.
pub fn reference_exponents() -> Exponents {
    Exponents::derive(1, 1.6, 0.7).expect("reference triple is admissible")
}

/// Fast-tail initial field on an `n`-cell grid.
pub fn fast_tail_field(n: usize) -> RadialField {
    let grid = RadialGrid::new(60.0, n, 1).expect("valid grid");
    init_from(|r: f64| 1.0 / (1.0 + r.powi(9)), grid).expect("valid field")
}
