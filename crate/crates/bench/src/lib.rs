//! Benchmark fixtures shared by the criterion benches.

use kinetic_core::field_calculus::{GaussianField, GridField, GridSpec};

/// Cube grid of half-width 6 with `n` points per axis.
pub fn cube(n: usize) -> GridSpec {
    GridSpec::cube(6.0, n).expect("valid grid")
}

/// The modulated Gaussian sampled on `cube(n)`.
pub fn sampled(n: usize) -> GridField {
    GridField::sample(&GaussianField::modulated(2.0), &cube(n))
}
