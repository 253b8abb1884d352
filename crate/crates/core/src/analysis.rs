//! End-to-end pipeline for one wave (spectra, V entries, verdict) and for a
//! continuation chain of waves at fixed `s`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::PeriodicGrid;
use crate::krein::{dnorm_domega, krein_verdict, KreinReport, OperatorSpectra, VMatrix, Verdict};
use crate::linops::{
    default_cutoff, eig_counts, kernel_residuals, LinearizedOperator, OperatorKind, Restriction,
};
use crate::wave::{lobe_check, seeded_solve, step_to, LobeCertificate, SolverConfig, WaveProfile};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisOptions {
    /// Basis cutoff `M`; `None` means `N/4`.
    pub cutoff: Option<usize>,
    /// Kernel tolerance; `None` means `1e-4 · max(1, ω)`.
    pub kernel_tol: Option<f64>,
    /// FD step for the `d/dω ‖φ‖²` cross-check; `None` skips it.
    pub fd_step: Option<f64>,
    /// Recount at cutoff `min(2M, N/2 - 1)`.
    pub check_cutoff_doubling: bool,
    pub solver: SolverConfig,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            cutoff: None,
            kernel_tol: None,
            fd_step: Some(crate::krein::DEFAULT_FD_STEP),
            check_cutoff_doubling: false,
            solver: SolverConfig::default(),
        }
    }
}

impl AnalysisOptions {
    pub fn cutoff_for(&self, n_modes: usize) -> usize {
        self.cutoff.unwrap_or_else(|| default_cutoff(n_modes))
    }
}

/// Full-space spectra of `L₁` and `L₂` at one cutoff.
pub fn operator_spectra(
    wave: &WaveProfile,
    cutoff: usize,
    kernel_tol: Option<f64>,
) -> Result<OperatorSpectra> {
    let count = |kind| {
        eig_counts(
            &LinearizedOperator::new(kind, wave, Restriction::Full).with_cutoff(cutoff),
            kernel_tol,
        )
    };
    Ok(OperatorSpectra {
        l1: count(OperatorKind::L1)?,
        l2: count(OperatorKind::L2)?,
    })
}

#[derive(Debug, Clone)]
pub struct CellAnalysis {
    pub wave: WaveProfile,
    pub spectra: OperatorSpectra,
    pub doubled: Option<OperatorSpectra>,
    /// `‖L₁φ'‖/‖φ'‖` and `‖L₂φ‖/‖φ‖`.
    pub kernel_residuals: (f64, f64),
    /// Lobe certificate, or the shape error message.
    pub lobe: std::result::Result<LobeCertificate, String>,
    pub v: VMatrix,
    pub report: KreinReport,
}

impl CellAnalysis {
    /// `(n(L₁), z(L₁), n(L₂), z(L₂))`.
    pub fn counts(&self) -> (usize, usize, usize, usize) {
        counts_of(&self.spectra)
    }

    /// True when the doubled-cutoff counts (if computed) agree.
    pub fn counts_stable(&self) -> bool {
        self.doubled
            .as_ref()
            .is_none_or(|d| counts_of(d) == self.counts())
    }
}

fn counts_of(s: &OperatorSpectra) -> (usize, usize, usize, usize) {
    (s.l1.n_neg, s.l1.n_zero, s.l2.n_neg, s.l2.n_zero)
}

pub fn analyze(wave: &WaveProfile, opts: &AnalysisOptions) -> Result<CellAnalysis> {
    let n = wave.n_modes();
    let cutoff = opts.cutoff_for(n);
    let spectra = operator_spectra(wave, cutoff, opts.kernel_tol)?;
    let doubled = if opts.check_cutoff_doubling {
        let m2 = (2 * cutoff).min(n / 2 - 1);
        Some(operator_spectra(wave, m2, opts.kernel_tol)?)
    } else {
        None
    };
    let v = VMatrix::compute(wave, cutoff)?;
    let dnorm = opts
        .fd_step
        .map(|h| dnorm_domega(wave, h, &opts.solver))
        .transpose()?;
    let report = krein_verdict(wave, &spectra, &v, dnorm, &opts.solver, opts.fd_step)?;
    Ok(CellAnalysis {
        wave: wave.clone(),
        kernel_residuals: kernel_residuals(wave)?,
        lobe: lobe_check(wave).map_err(|e| e.to_string()),
        spectra,
        doubled,
        v,
        report,
    })
}

/// One row of a sweep table; failed cells carry `status = "failed: ..."`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub s: f64,
    pub omega: f64,
    pub norm_sq: Option<f64>,
    pub v_odd: Option<f64>,
    pub v_even: Option<f64>,
    pub n_l1: Option<usize>,
    pub z_l1: Option<usize>,
    pub n_l2: Option<usize>,
    pub z_l2: Option<usize>,
    pub verdict: Option<Verdict>,
    pub status: String,
}

impl SweepRow {
    pub fn ok(cell: &CellAnalysis) -> Self {
        let (n1, z1, n2, z2) = cell.counts();
        Self {
            s: cell.wave.s,
            omega: cell.wave.omega,
            norm_sq: Some(cell.wave.norm_sq()),
            v_odd: Some(cell.report.v_odd),
            v_even: Some(cell.report.v_even),
            n_l1: Some(n1),
            z_l1: Some(z1),
            n_l2: Some(n2),
            z_l2: Some(z2),
            verdict: Some(cell.report.verdict),
            status: "ok".into(),
        }
    }

    pub fn failed(s: f64, omega: f64, norm_sq: Option<f64>, err: &Error) -> Self {
        Self {
            s,
            omega,
            norm_sq,
            v_odd: None,
            v_even: None,
            n_l1: None,
            z_l1: None,
            n_l2: None,
            z_l2: None,
            verdict: None,
            status: format!("failed: {err}"),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone)]
pub struct ChainResult {
    pub s: f64,
    pub rows: Vec<SweepRow>,
    pub cells: Vec<Option<CellAnalysis>>,
}

impl ChainResult {
    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(SweepRow::is_ok)
    }

    /// Strict increase of `‖φ‖²` over the converged rows.
    pub fn norms_increasing(&self) -> bool {
        let norms: Vec<f64> = self.rows.iter().filter_map(|r| r.norm_sq).collect();
        norms.windows(2).all(|w| w[1] > w[0])
    }
}

/// Solves at `omega` from scratch: Stokes seed at `min(ω, seed_trust_omega)`
/// followed by continuation if needed.
pub fn bootstrap(
    grid: &Arc<PeriodicGrid>,
    s: f64,
    omega: f64,
    cfg: &SolverConfig,
) -> Result<WaveProfile> {
    if omega <= cfg.seed_trust_omega {
        return seeded_solve(grid, s, omega, cfg);
    }
    let start = seeded_solve(grid, s, cfg.seed_trust_omega, cfg)?;
    step_to(&start, omega, cfg)
}

/// Continuation along increasing `omegas` with a full analysis per cell.
/// A failing cell is recorded and the chain resumes from the last good wave.
pub fn sweep_chain(
    grid: &Arc<PeriodicGrid>,
    s: f64,
    omegas: &[f64],
    opts: &AnalysisOptions,
) -> Result<ChainResult> {
    if omegas.is_empty() {
        return Err(Error::domain("empty omega list"));
    }
    if omegas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("omega list must be strictly increasing"));
    }
    crate::wave::check_exponent(s)?;
    opts.solver.validate()?;
    let mut rows = Vec::with_capacity(omegas.len());
    let mut cells = Vec::with_capacity(omegas.len());
    let mut last: Option<WaveProfile> = None;
    for &omega in omegas {
        let solved = match &last {
            None => bootstrap(grid, s, omega, &opts.solver),
            Some(prev) => step_to(prev, omega, &opts.solver),
        };
        match solved {
            Err(e) => {
                rows.push(SweepRow::failed(s, omega, None, &e));
                cells.push(None);
            }
            Ok(wave) => {
                match analyze(&wave, opts) {
                    Ok(cell) => {
                        rows.push(SweepRow::ok(&cell));
                        cells.push(Some(cell));
                    }
                    Err(e) => {
                        rows.push(SweepRow::failed(s, omega, Some(wave.norm_sq()), &e));
                        cells.push(None);
                    }
                }
                last = Some(wave);
            }
        }
    }
    Ok(ChainResult { s, rows, cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_rows_in_order() {
        let grid = PeriodicGrid::new(256).unwrap();
        let opts = AnalysisOptions {
            check_cutoff_doubling: true,
            ..AnalysisOptions::default()
        };
        let chain = sweep_chain(&grid, 0.7, &[1.2, 1.6, 2.0], &opts).unwrap();
        assert!(chain.all_ok());
        let omegas: Vec<f64> = chain.rows.iter().map(|r| r.omega).collect();
        assert_eq!(omegas, vec![1.2, 1.6, 2.0]);
        assert!(chain.norms_increasing());
        for cell in chain.cells.iter().flatten() {
            assert_eq!(cell.counts(), (1, 1, 2, 1));
            assert!(cell.counts_stable());
            assert!(cell.lobe.is_ok());
            let v = cell.report.v_odd;
            let fd = cell.report.dnorm_domega.unwrap();
            assert!((v - fd).abs() <= 1e-3 * v.abs());
        }
    }

    #[test]
    fn bootstrap_beyond_seed_range() {
        let grid = PeriodicGrid::new(128).unwrap();
        let cfg = SolverConfig::default();
        let w = bootstrap(&grid, 0.5, 2.5, &cfg).unwrap();
        assert_eq!(w.omega, 2.5);
        assert!(lobe_check(&w).is_ok());
    }

    #[test]
    fn failed_cell_is_recorded() {
        let grid = PeriodicGrid::new(128).unwrap();
        let opts = AnalysisOptions {
            solver: SolverConfig {
                max_newton_iters: 1,
                max_step_halvings: 0,
                ..SolverConfig::default()
            },
            fd_step: None,
            ..AnalysisOptions::default()
        };
        let chain = sweep_chain(&grid, 0.5, &[1.1, 3.0], &opts).unwrap();
        assert_eq!(chain.rows.len(), 2);
        assert!(!chain.all_ok());
        assert!(chain.rows.iter().any(|r| r.status.starts_with("failed")));
    }

    #[test]
    fn rejects_bad_lists() {
        let grid = PeriodicGrid::new(64).unwrap();
        let opts = AnalysisOptions::default();
        assert!(sweep_chain(&grid, 0.5, &[], &opts).is_err());
        assert!(sweep_chain(&grid, 0.5, &[1.5, 1.2], &opts).is_err());
        assert!(sweep_chain(&grid, 0.2, &[1.5], &opts).is_err());
    }
}
