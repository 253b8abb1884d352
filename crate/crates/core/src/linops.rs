//! Linearized operators `L₁ = (-Δ)^s - ω + 3φ²` and `L₂ = (-Δ)^s - ω + φ²`
//! about a standing wave, applied matrix-free on the grid or assembled as
//! dense symmetric matrices in an orthonormal parity basis.
//!
//! Odd sector basis: `sin(mx)/√π`, `m = 1..=M`.
//! Even sector basis: `1/√(2π)` and `cos(mx)/√π`, `m = 1..=M`.
//!
//! With `ĉ_j` the (real) Fourier coefficients of the potential `V`, the
//! potential block is `ĉ_{|m-n|} ∓ ĉ_{m+n}` (sine / cosine), and the constant
//! row of the cosine block is `√2 ĉ_m`. Coefficients beyond the grid's
//! resolved band are taken as zero.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{frac_laplacian, frac_symbol, parity_defect, parity_project, Parity, RealField};
use crate::wave::WaveProfile;

/// Relative kernel tolerance; multiplied by `max(1, ω)`.
pub const DEFAULT_KERNEL_REL_TOL: f64 = 1e-4;
/// Lowest eigenvalues kept in the JSON record.
pub const DEFAULT_REPORTED_EIGENVALUES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OperatorKind {
    L1,
    L2,
}

impl OperatorKind {
    /// Coefficient of `φ²` in the operator.
    pub fn potential_weight(self) -> f64 {
        match self {
            OperatorKind::L1 => 3.0,
            OperatorKind::L2 => 1.0,
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OperatorKind::L1 => "L1",
            OperatorKind::L2 => "L2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Restriction {
    Full,
    Odd,
    Even,
}

impl Restriction {
    pub fn parity(self) -> Option<Parity> {
        match self {
            Restriction::Full => None,
            Restriction::Odd => Some(Parity::Odd),
            Restriction::Even => Some(Parity::Even),
        }
    }
}

impl From<Parity> for Restriction {
    fn from(p: Parity) -> Self {
        match p {
            Parity::Odd => Restriction::Odd,
            Parity::Even => Restriction::Even,
        }
    }
}

impl fmt::Display for Restriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Restriction::Full => "full",
            Restriction::Odd => "odd",
            Restriction::Even => "even",
        })
    }
}

/// Default basis cutoff for a grid of `n_modes` points.
pub fn default_cutoff(n_modes: usize) -> usize {
    n_modes / 4
}

/// `L₁` or `L₂` about `wave`, optionally restricted to one parity sector.
#[derive(Debug, Clone, Copy)]
pub struct LinearizedOperator<'a> {
    pub kind: OperatorKind,
    pub wave: &'a WaveProfile,
    pub restriction: Restriction,
    pub cutoff: usize,
}

impl<'a> LinearizedOperator<'a> {
    pub fn new(kind: OperatorKind, wave: &'a WaveProfile, restriction: Restriction) -> Self {
        Self {
            kind,
            wave,
            restriction,
            cutoff: default_cutoff(wave.n_modes()),
        }
    }

    pub fn with_cutoff(mut self, cutoff: usize) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn restricted(mut self, restriction: Restriction) -> Self {
        self.restriction = restriction;
        self
    }

    fn potential(&self) -> RealField {
        let w = self.kind.potential_weight();
        self.wave.field.map(|p| w * p * p)
    }

    /// Real Fourier coefficients `ĉ_0..=ĉ_{len-1}` of the (even) potential.
    fn potential_coefficients(&self, len: usize) -> Vec<f64> {
        let pot = self.potential();
        let grid = pot.grid().clone();
        let c = pot.coefficients();
        let half = grid.n_modes() / 2;
        (0..len)
            .map(|j| if j < half { c[j].re } else { 0.0 })
            .collect()
    }
}

/// Matrix-free application; output is projected onto the declared parity.
pub fn apply(op: &LinearizedOperator<'_>, f: &RealField) -> Result<RealField> {
    f.same_grid(&op.wave.field)?;
    if let Some(parity) = op.restriction.parity() {
        let defect = parity_defect(f, parity);
        if defect > 1e-10 * f.max_norm().max(f64::MIN_POSITIVE) {
            return Err(Error::Parity {
                expected: parity.as_str(),
                defect,
            });
        }
    }
    let lap = frac_laplacian(f, op.wave.s)?;
    let omega = op.wave.omega;
    let pot = op.potential();
    let out = lap
        .zip_map(f, |l, v| l - omega * v)?
        .zip_map(&pot.zip_map(f, |p, v| p * v)?, |a, b| a + b)?;
    Ok(match op.restriction.parity() {
        Some(p) => parity_project(&out, p),
        None => out,
    })
}

/// Orthonormal sine or cosine basis truncated at wavenumber `cutoff`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SectorBasis {
    pub parity: Parity,
    pub cutoff: usize,
}

impl SectorBasis {
    pub fn new(parity: Parity, cutoff: usize) -> Self {
        Self { parity, cutoff }
    }

    pub fn dim(&self) -> usize {
        match self.parity {
            Parity::Odd => self.cutoff,
            Parity::Even => self.cutoff + 1,
        }
    }

    fn check_grid(&self, n_modes: usize) -> Result<()> {
        if self.cutoff == 0 || self.cutoff >= n_modes / 2 {
            return Err(Error::domain(format!(
                "basis cutoff must lie in [1, N/2) = [1, {}), got {}",
                n_modes / 2,
                self.cutoff
            )));
        }
        Ok(())
    }

    /// Coordinates `(f, e_m)` of `f` in this basis.
    pub fn coordinates(&self, f: &RealField) -> Result<DVector<f64>> {
        self.check_grid(f.len())?;
        let c = f.coefficients();
        let sqrt_pi = std::f64::consts::PI.sqrt();
        Ok(match self.parity {
            Parity::Odd => DVector::from_iterator(
                self.cutoff,
                (1..=self.cutoff).map(|m| -2.0 * sqrt_pi * c[m].im),
            ),
            Parity::Even => {
                let mut v = DVector::zeros(self.cutoff + 1);
                v[0] = (2.0 * std::f64::consts::PI).sqrt() * c[0].re;
                for m in 1..=self.cutoff {
                    v[m] = 2.0 * sqrt_pi * c[m].re;
                }
                v
            }
        })
    }

    /// The grid field `Σ y_m e_m`.
    pub fn synthesize(
        &self,
        coords: &DVector<f64>,
        grid: &std::sync::Arc<crate::grid::PeriodicGrid>,
    ) -> Result<RealField> {
        self.check_grid(grid.n_modes())?;
        if coords.len() != self.dim() {
            return Err(Error::domain(format!(
                "expected {} coordinates, got {}",
                self.dim(),
                coords.len()
            )));
        }
        let n = grid.n_modes();
        let sqrt_pi = std::f64::consts::PI.sqrt();
        let mut c = vec![Complex64::new(0.0, 0.0); n];
        match self.parity {
            Parity::Odd => {
                for m in 1..=self.cutoff {
                    let cm = Complex64::new(0.0, -coords[m - 1] / (2.0 * sqrt_pi));
                    c[m] = cm;
                    c[n - m] = cm.conj();
                }
            }
            Parity::Even => {
                c[0] = Complex64::new(coords[0] / (2.0 * std::f64::consts::PI).sqrt(), 0.0);
                for m in 1..=self.cutoff {
                    let cm = Complex64::new(coords[m] / (2.0 * sqrt_pi), 0.0);
                    c[m] = cm;
                    c[n - m] = cm;
                }
            }
        }
        RealField::from_coefficients(grid, &c)
    }
}

/// Dense finite section of a parity-restricted operator.
pub fn assemble(op: &LinearizedOperator<'_>) -> Result<DMatrix<f64>> {
    let parity = op.restriction.parity().ok_or_else(|| {
        Error::domain("assemble needs an odd or even restriction; counts add across sectors")
    })?;
    let basis = SectorBasis::new(parity, op.cutoff);
    basis.check_grid(op.wave.n_modes())?;
    let m_max = op.cutoff;
    let s = op.wave.s;
    let omega = op.wave.omega;
    let chat = op.potential_coefficients(2 * m_max + 1);
    let sym = |m: usize| frac_symbol(m as i64, s) - omega;

    Ok(match parity {
        Parity::Odd => DMatrix::from_fn(m_max, m_max, |i, j| {
            let (m, n) = (i + 1, j + 1);
            let diag = if m == n { sym(m) } else { 0.0 };
            diag + chat[m.abs_diff(n)] - chat[m + n]
        }),
        Parity::Even => {
            let sqrt2 = std::f64::consts::SQRT_2;
            DMatrix::from_fn(m_max + 1, m_max + 1, |m, n| match (m, n) {
                (0, 0) => chat[0] - omega,
                (0, k) | (k, 0) => sqrt2 * chat[k],
                (m, n) => {
                    let diag = if m == n { sym(m) } else { 0.0 };
                    diag + chat[m.abs_diff(n)] + chat[m + n]
                }
            })
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectorCount {
    pub parity: Parity,
    pub n_neg: usize,
    pub n_zero: usize,
    pub basis_dim: usize,
}

/// Sorted spectrum of a finite section with negative/kernel counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub kind: OperatorKind,
    pub parity: Restriction,
    pub s: f64,
    pub omega: f64,
    pub kernel_tol: f64,
    pub cutoff: usize,
    pub eigenvalues: Vec<f64>,
    pub n_neg: usize,
    pub n_zero: usize,
    pub basis_dim: usize,
    pub sectors: Vec<SectorCount>,
    pub warnings: Vec<String>,
    /// Kernel eigenvectors as basis coordinates, tagged by sector.
    #[serde(skip)]
    pub kernel_vectors: Vec<(Parity, DVector<f64>)>,
}

/// JSON form of a [`SpectrumReport`] with only the lowest eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub kind: OperatorKind,
    pub parity: Restriction,
    pub s: f64,
    pub omega: f64,
    pub kernel_tol: f64,
    pub eigenvalues: Vec<f64>,
    pub n_neg: usize,
    pub n_zero: usize,
}

impl SpectrumReport {
    pub fn to_record(&self, keep: usize) -> SpectrumRecord {
        SpectrumRecord {
            kind: self.kind,
            parity: self.parity,
            s: self.s,
            omega: self.omega,
            kernel_tol: self.kernel_tol,
            eigenvalues: self.eigenvalues.iter().take(keep).copied().collect(),
            n_neg: self.n_neg,
            n_zero: self.n_zero,
        }
    }

    pub fn sector(&self, parity: Parity) -> Option<&SectorCount> {
        self.sectors.iter().find(|c| c.parity == parity)
    }

    /// Largest `|⟨v, t⟩| / ‖t‖` over unit kernel vectors `v` in the sector of
    /// `target`'s parity.
    pub fn kernel_alignment(&self, target: &RealField, parity: Parity) -> Result<Option<f64>> {
        let t = SectorBasis::new(parity, self.cutoff).coordinates(target)?;
        let tn = t.norm();
        if tn == 0.0 {
            return Ok(None);
        }
        Ok(self
            .kernel_vectors
            .iter()
            .filter(|(p, _)| *p == parity)
            .map(|(_, v)| v.dot(&t).abs() / (tn * v.norm()))
            .reduce(f64::max))
    }

    /// Merges sector reports of one operator into the full-space report.
    pub fn combine(parts: &[SpectrumReport]) -> Result<SpectrumReport> {
        let first = parts
            .first()
            .ok_or_else(|| Error::domain("no sector reports to combine"))?;
        for p in parts {
            if p.kind != first.kind || p.parity == Restriction::Full {
                return Err(Error::CountMismatch(
                    "combine expects sector reports of a single operator".into(),
                ));
            }
        }
        let mut eigenvalues: Vec<f64> = parts.iter().flat_map(|p| p.eigenvalues.clone()).collect();
        eigenvalues.sort_by(f64::total_cmp);
        Ok(SpectrumReport {
            kind: first.kind,
            parity: Restriction::Full,
            s: first.s,
            omega: first.omega,
            kernel_tol: first.kernel_tol,
            cutoff: first.cutoff,
            eigenvalues,
            n_neg: parts.iter().map(|p| p.n_neg).sum(),
            n_zero: parts.iter().map(|p| p.n_zero).sum(),
            basis_dim: parts.iter().map(|p| p.basis_dim).sum(),
            sectors: parts.iter().flat_map(|p| p.sectors.clone()).collect(),
            warnings: parts.iter().flat_map(|p| p.warnings.clone()).collect(),
            kernel_vectors: parts
                .iter()
                .flat_map(|p| p.kernel_vectors.clone())
                .collect(),
        })
    }
}

pub fn default_kernel_tol(omega: f64) -> f64 {
    DEFAULT_KERNEL_REL_TOL * omega.max(1.0)
}

/// Eigenvalues and counts of `op`; full-space counts sum the two sectors.
pub fn eig_counts(op: &LinearizedOperator<'_>, kernel_tol: Option<f64>) -> Result<SpectrumReport> {
    let tol = kernel_tol.unwrap_or_else(|| default_kernel_tol(op.wave.omega));
    if !(tol > 0.0) {
        return Err(Error::domain(format!(
            "kernel tolerance must be positive, got {tol}"
        )));
    }
    match op.restriction.parity() {
        None => {
            let odd = eig_counts(&op.restricted(Restriction::Odd), Some(tol))?;
            let even = eig_counts(&op.restricted(Restriction::Even), Some(tol))?;
            SpectrumReport::combine(&[odd, even])
        }
        Some(parity) => {
            let a = assemble(op)?;
            let dim = a.nrows();
            let eig = SymmetricEigen::try_new(a, f64::EPSILON, 0).ok_or_else(|| {
                Error::Numerical(format!(
                    "symmetric eigensolver failed for {} {}",
                    op.kind, parity
                ))
            })?;
            let mut order: Vec<usize> = (0..dim).collect();
            order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
            let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
            if eigenvalues.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical("non-finite eigenvalue".into()));
            }
            let n_neg = eigenvalues.iter().filter(|&&l| l < -tol).count();
            let n_zero = eigenvalues.iter().filter(|&&l| l.abs() <= tol).count();
            let warnings = eigenvalues
                .iter()
                .filter(|&&l| l.abs() >= tol / 10.0 && l.abs() <= tol * 10.0)
                .map(|l| {
                    format!(
                        "ambiguous kernel: {} {} eigenvalue {l:.3e} within a factor 10 of tol {tol:.3e}",
                        op.kind, parity
                    )
                })
                .collect();
            let kernel_vectors = order
                .iter()
                .filter(|&&i| eig.eigenvalues[i].abs() <= tol)
                .map(|&i| (parity, eig.eigenvectors.column(i).into_owned()))
                .collect();
            Ok(SpectrumReport {
                kind: op.kind,
                parity: op.restriction,
                s: op.wave.s,
                omega: op.wave.omega,
                kernel_tol: tol,
                cutoff: op.cutoff,
                eigenvalues,
                n_neg,
                n_zero,
                basis_dim: dim,
                sectors: vec![SectorCount {
                    parity,
                    n_neg,
                    n_zero,
                    basis_dim: dim,
                }],
                warnings,
                kernel_vectors,
            })
        }
    }
}

/// `‖L₁φ'‖/‖φ'‖` and `‖L₂φ‖/‖φ‖` in L².
pub fn kernel_residuals(wave: &WaveProfile) -> Result<(f64, f64)> {
    let dphi = wave.derivative();
    let l1 = LinearizedOperator::new(OperatorKind::L1, wave, Restriction::Full);
    let l2 = LinearizedOperator::new(OperatorKind::L2, wave, Restriction::Full);
    let r1 = apply(&l1, &dphi)?.l2_norm() / dphi.l2_norm();
    let r2 = apply(&l2, &wave.field)?.l2_norm() / wave.field.l2_norm();
    Ok((r1, r2))
}
