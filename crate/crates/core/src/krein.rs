//! Krein-index bookkeeping for the linearization `JL`, `L = diag(L₁, L₂)`.
//!
//! `JL` preserves the parity of both components, so the problem splits into
//! an odd sector `diag(L₁, L₂)|odd` and an even sector `diag(L₁, L₂)|even`.
//! The kernel generators are `(0, φ)` (odd) and `(φ', 0)` (even), giving the
//! diagonal entries `V_odd = (L₁⁻¹φ, φ)` and `V_even = (L₂⁻¹φ', φ')`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{inner_product, Parity, RealField};
use crate::linops::{assemble, LinearizedOperator, OperatorKind, SectorBasis, SpectrumReport};
use crate::wave::{newton_solve, stokes_amplitude, SolverConfig, WaveProfile};

/// Default centered-difference step in ω.
pub const DEFAULT_FD_STEP: f64 = 1e-3;
/// Largest accepted relative residual of a sector solve.
pub const SOLVE_RESIDUAL_TOL: f64 = 1e-8;
/// Pivot-ratio bound beyond which a sector is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    SpectrallyUnstable,
    Inconclusive,
    StableCandidate,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::SpectrallyUnstable => "spectrally_unstable",
            Verdict::Inconclusive => "inconclusive",
            Verdict::StableCandidate => "stable_candidate",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Result of one dense sector solve `A y = b`.
#[derive(Debug, Clone)]
pub struct SectorSolve {
    /// Solution synthesized on the wave's grid.
    pub solution: RealField,
    /// `‖A y - b‖ / ‖b‖`.
    pub rel_residual: f64,
    /// `max |uᵢᵢ| / min |uᵢᵢ|` of the fully pivoted LU factor.
    pub condition: f64,
}

fn solve_sector(
    kind: OperatorKind,
    parity: Parity,
    wave: &WaveProfile,
    cutoff: usize,
    rhs: &RealField,
) -> Result<SectorSolve> {
    let op = LinearizedOperator::new(kind, wave, parity.into()).with_cutoff(cutoff);
    let a = assemble(&op)?;
    let basis = SectorBasis::new(parity, cutoff);
    let b = basis.coordinates(rhs)?;
    let context = format!("{kind} restricted to the {parity} sector");

    let lu = a.clone().full_piv_lu();
    let diag = lu.u().diagonal();
    let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), d| {
        (lo.min(d.abs()), hi.max(d.abs()))
    });
    let condition = if lo == 0.0 { f64::INFINITY } else { hi / lo };
    if condition > MAX_CONDITION {
        return Err(Error::Singular { condition, context });
    }
    let y: DVector<f64> = lu.solve(&b).ok_or_else(|| Error::Singular {
        condition,
        context: context.clone(),
    })?;
    let rel_residual = residual_ratio(&a, &y, &b);
    if !(rel_residual <= SOLVE_RESIDUAL_TOL) {
        return Err(Error::Numerical(format!(
            "{context}: sector solve residual {rel_residual:.3e} exceeds {SOLVE_RESIDUAL_TOL:.0e}"
        )));
    }
    Ok(SectorSolve {
        solution: basis.synthesize(&y, wave.grid())?,
        rel_residual,
        condition,
    })
}

fn residual_ratio(a: &DMatrix<f64>, y: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let bn = b.norm();
    if bn == 0.0 {
        return 0.0;
    }
    (a * y - b).norm() / bn
}

/// `χ = L₁⁻¹φ` in the odd sector and `(χ, φ)`.
pub fn v_odd(wave: &WaveProfile, cutoff: usize) -> Result<(f64, SectorSolve)> {
    let sol = solve_sector(OperatorKind::L1, Parity::Odd, wave, cutoff, &wave.field)?;
    let v = inner_product(&sol.solution, &wave.field)?;
    Ok((v, sol))
}

/// `β = L₂⁻¹φ'` in the even sector and `(β, φ')`.
pub fn v_even(wave: &WaveProfile, cutoff: usize) -> Result<(f64, SectorSolve)> {
    let dphi = wave.derivative();
    let sol = solve_sector(OperatorKind::L2, Parity::Even, wave, cutoff, &dphi)?;
    let v = inner_product(&sol.solution, &dphi)?;
    Ok((v, sol))
}

/// `(‖φ_{ω+h}‖² - ‖φ_{ω-h}‖²) / (4h)`, i.e. `½ d/dω ‖φ‖²`.
///
/// Both endpoint solves start from `wave` rescaled to the endpoint's Stokes
/// amplitude and run concurrently.
pub fn dnorm_domega(wave: &WaveProfile, h: f64, cfg: &SolverConfig) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::domain(format!("FD step must be positive, got {h}")));
    }
    let (lo, hi) = (wave.omega - h, wave.omega + h);
    if !(lo > 1.0 + h) {
        return Err(Error::domain(format!(
            "omega - h = {lo} is too close to the bifurcation point at 1"
        )));
    }
    let base = stokes_amplitude(wave.omega)?;
    let solve_at = |omega: f64| -> Result<f64> {
        let seed = wave.field.scaled(stokes_amplitude(omega)? / base);
        Ok(newton_solve(&seed, omega, wave.s, cfg)?.norm_sq())
    };
    let (minus, plus) = rayon::join(|| solve_at(lo), || solve_at(hi));
    Ok((plus? - minus?) / (4.0 * h))
}

/// Negative counts of `L` and `V`, per sector and in full.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KreinCounts {
    pub n_l_odd: usize,
    pub n_l_even: usize,
    pub n_l_full: usize,
    pub n_v_odd: usize,
    pub n_v_even: usize,
}

impl KreinCounts {
    pub fn n_v_full(&self) -> usize {
        self.n_v_odd + self.n_v_even
    }

    /// `n(L) - n(V)` for the odd sector, even sector and full space.
    pub fn differences(&self) -> (i64, i64, i64) {
        let d = |a: usize, b: usize| a as i64 - b as i64;
        (
            d(self.n_l_odd, self.n_v_odd),
            d(self.n_l_even, self.n_v_even),
            d(self.n_l_full, self.n_v_full()),
        )
    }

    pub fn check(&self) -> Result<()> {
        if self.n_l_full != self.n_l_odd + self.n_l_even {
            return Err(Error::CountMismatch(format!(
                "n(L) = {} but sector counts give {} + {}",
                self.n_l_full, self.n_l_odd, self.n_l_even
            )));
        }
        if self.n_v_odd > 1 || self.n_v_even > 1 {
            return Err(Error::CountMismatch("V has one entry per sector".into()));
        }
        Ok(())
    }

    /// An odd difference in any sector forces a real unstable eigenvalue; a
    /// zero full difference leaves no room for unstable or embedded modes.
    pub fn verdict(&self) -> Result<Verdict> {
        self.check()?;
        let (odd, even, full) = self.differences();
        if odd < 0 || even < 0 || full < 0 {
            return Err(Error::CountMismatch(format!(
                "negative Krein difference (odd {odd}, even {even}, full {full})"
            )));
        }
        Ok(if odd % 2 != 0 || even % 2 != 0 || full % 2 != 0 {
            Verdict::SpectrallyUnstable
        } else if full == 0 {
            Verdict::StableCandidate
        } else {
            Verdict::Inconclusive
        })
    }
}

/// Full-space spectra of both operators, each carrying its sector counts.
#[derive(Debug, Clone)]
pub struct OperatorSpectra {
    pub l1: SpectrumReport,
    pub l2: SpectrumReport,
}

impl OperatorSpectra {
    fn sector_neg(report: &SpectrumReport, parity: Parity) -> Result<usize> {
        report.sector(parity).map(|c| c.n_neg).ok_or_else(|| {
            Error::CountMismatch(format!("{} report lacks the {parity} sector", report.kind))
        })
    }

    pub fn counts(&self, v_odd: f64, v_even: f64) -> Result<KreinCounts> {
        if self.l1.kind != OperatorKind::L1 || self.l2.kind != OperatorKind::L2 {
            return Err(Error::CountMismatch(
                "spectra passed in the wrong order".into(),
            ));
        }
        let n_l_odd =
            Self::sector_neg(&self.l1, Parity::Odd)? + Self::sector_neg(&self.l2, Parity::Odd)?;
        let n_l_even =
            Self::sector_neg(&self.l1, Parity::Even)? + Self::sector_neg(&self.l2, Parity::Even)?;
        Ok(KreinCounts {
            n_l_odd,
            n_l_even,
            n_l_full: self.l1.n_neg + self.l2.n_neg,
            n_v_odd: usize::from(v_odd < 0.0),
            n_v_even: usize::from(v_even < 0.0),
        })
    }
}

/// Grid, tolerances and solver effort behind a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub n_modes: usize,
    pub basis_cutoff: usize,
    pub newton_tol: f64,
    pub gmres_tol: f64,
    pub kernel_tol: f64,
    pub fd_step: Option<f64>,
    pub newton_iters: usize,
    pub residual_norm: f64,
    pub v_odd_solve_residual: f64,
    pub v_even_solve_residual: f64,
    pub v_odd_condition: f64,
    pub v_even_condition: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KreinReport {
    pub s: f64,
    pub omega: f64,
    pub v_odd: f64,
    pub v_even: f64,
    pub n_l_odd: usize,
    pub n_l_even: usize,
    pub n_l_full: usize,
    pub n_v_odd: usize,
    pub n_v_even: usize,
    pub n_v_full: usize,
    pub diff_odd: i64,
    pub diff_even: i64,
    pub diff_full: i64,
    pub verdict: Verdict,
    pub dnorm_domega: Option<f64>,
    /// `(L₁⁻¹φ, φ')` and `(L₂⁻¹φ', φ)`; zero by parity.
    pub cross_odd_even: f64,
    pub cross_even_odd: f64,
    pub provenance: Provenance,
}

/// V entries together with the solves that produced them.
#[derive(Debug, Clone)]
pub struct VMatrix {
    pub v_odd: f64,
    pub v_even: f64,
    pub odd_solve: SectorSolve,
    pub even_solve: SectorSolve,
    pub cross_odd_even: f64,
    pub cross_even_odd: f64,
}

impl VMatrix {
    pub fn compute(wave: &WaveProfile, cutoff: usize) -> Result<Self> {
        let (v_odd, odd_solve) = v_odd(wave, cutoff)?;
        let (v_even, even_solve) = v_even(wave, cutoff)?;
        let cross_odd_even = inner_product(&odd_solve.solution, &wave.derivative())?;
        let cross_even_odd = inner_product(&even_solve.solution, &wave.field)?;
        Ok(Self {
            v_odd,
            v_even,
            odd_solve,
            even_solve,
            cross_odd_even,
            cross_even_odd,
        })
    }

    /// Largest cross entry relative to the diagonal scale.
    pub fn off_diagonal_ratio(&self) -> f64 {
        let scale = self
            .v_odd
            .abs()
            .max(self.v_even.abs())
            .max(f64::MIN_POSITIVE);
        self.cross_odd_even.abs().max(self.cross_even_odd.abs()) / scale
    }
}

/// Assembles the report from precomputed spectra and V entries.
pub fn krein_verdict(
    wave: &WaveProfile,
    spectra: &OperatorSpectra,
    v: &VMatrix,
    dnorm: Option<f64>,
    cfg: &SolverConfig,
    fd_step: Option<f64>,
) -> Result<KreinReport> {
    let counts = spectra.counts(v.v_odd, v.v_even)?;
    let verdict = counts.verdict()?;
    let (diff_odd, diff_even, diff_full) = counts.differences();
    Ok(KreinReport {
        s: wave.s,
        omega: wave.omega,
        v_odd: v.v_odd,
        v_even: v.v_even,
        n_l_odd: counts.n_l_odd,
        n_l_even: counts.n_l_even,
        n_l_full: counts.n_l_full,
        n_v_odd: counts.n_v_odd,
        n_v_even: counts.n_v_even,
        n_v_full: counts.n_v_full(),
        diff_odd,
        diff_even,
        diff_full,
        verdict,
        dnorm_domega: dnorm,
        cross_odd_even: v.cross_odd_even,
        cross_even_odd: v.cross_even_odd,
        provenance: Provenance {
            n_modes: wave.n_modes(),
            basis_cutoff: spectra.l1.cutoff,
            newton_tol: cfg.newton_tol,
            gmres_tol: cfg.gmres_tol,
            kernel_tol: spectra.l1.kernel_tol,
            fd_step,
            newton_iters: wave.newton_iters,
            residual_norm: wave.residual_norm,
            v_odd_solve_residual: v.odd_solve.rel_residual,
            v_even_solve_residual: v.even_solve.rel_residual,
            v_odd_condition: v.odd_solve.condition,
            v_even_condition: v.even_solve.condition,
        },
    })
}
