//! Odd periodic standing waves of the defocusing fractional cubic NLS
//! `i u_t = (-Δ)^s u + |u|² u` on `[-π, π)`, and a Krein-index stability
//! verdict built from the linearized operators about those waves.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod elliptic;
pub mod error;
pub mod gmres;
pub mod grid;
pub mod io;
pub mod krein;
pub mod linops;
pub mod wave;

pub use analysis::{analyze, sweep_chain, AnalysisOptions, CellAnalysis, ChainResult, SweepRow};
pub use error::{Error, Result};
pub use grid::{
    derivative, frac_laplacian, inner_product, parity_defect, parity_project, product, Parity,
    PeriodicGrid, RealField,
};
pub use krein::{KreinCounts, KreinReport, OperatorSpectra, VMatrix, Verdict};
pub use linops::{
    apply, assemble, eig_counts, LinearizedOperator, OperatorKind, Restriction, SpectrumRecord,
    SpectrumReport,
};
pub use wave::{
    continue_in_omega, lobe_check, newton_solve, seeded_solve, stokes_seed, ContinuationRun,
    ProfileRecord, SolverConfig, WaveProfile,
};
