//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use dfnls_core::{seeded_solve, PeriodicGrid, RealField, SolverConfig, WaveProfile};

pub fn grid(n: usize) -> Arc<PeriodicGrid> {
    PeriodicGrid::new(n).expect("power-of-two grid")
}

/// Smooth odd test field with a decaying spectrum.
pub fn test_field(n: usize) -> RealField {
    RealField::from_fn(&grid(n), |x| x.sin() / (1.2 - x.cos()))
}

pub fn wave(n: usize, s: f64, omega: f64) -> WaveProfile {
    seeded_solve(&grid(n), s, omega, &SolverConfig::default()).expect("solve converges")
}
