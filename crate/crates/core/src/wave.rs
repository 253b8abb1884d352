//! Odd two-lobe standing waves of
//! `(-Δ)^s φ - ω φ + φ³ = 0` on the circle.
//!
//! Waves are found by Newton iteration with matrix-free GMRES for the
//! Jacobian `(-Δ)^s - ω + 3φ²`. Every linear solve and every iterate is kept in
//! the odd subspace; on the full space the Jacobian at a converged wave has the
//! even kernel `φ'`. Small-amplitude waves are seeded from the two-term Stokes
//! expansion, larger ones by continuation in `ω`.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmres::{gmres, GmresOptions};
use crate::grid::{
    derivative, frac_laplacian, frac_symbol, inner_product, parity_defect, parity_project, product,
    Parity, PeriodicGrid, RealField,
};

/// Smallest admissible fractional exponent (exclusive).
pub const MIN_EXPONENT: f64 = 0.25;

pub fn check_exponent(s: f64) -> Result<()> {
    if s > MIN_EXPONENT && s <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "fractional exponent s must lie in (1/4, 1], got {s}"
        )))
    }
}

fn check_frequency(omega: f64) -> Result<()> {
    if omega > 1.0 && omega.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "omega must exceed 1 (only the zero solution exists for omega <= 1), got {omega}"
        )))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Max-norm residual at which Newton stops.
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    /// Relative tolerance of each inner GMRES solve.
    pub gmres_tol: f64,
    pub gmres_restart: usize,
    pub gmres_max_restarts: usize,
    /// Zero-pad cubic products to 2N.
    pub dealias: bool,
    /// Largest ω the Stokes seed is trusted for without continuation.
    pub seed_trust_omega: f64,
    pub max_step_halvings: usize,
    /// An iterate whose max-norm falls below this fraction of the Stokes
    /// amplitude `√(4(ω-1)/3)` counts as the zero solution.
    pub collapse_threshold: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            newton_tol: 1e-6,
            max_newton_iters: 50,
            gmres_tol: 1e-8,
            gmres_restart: 60,
            gmres_max_restarts: 20,
            dealias: false,
            seed_trust_omega: 1.2,
            max_step_halvings: 6,
            collapse_threshold: 1e-3,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("newton_tol", self.newton_tol),
            ("gmres_tol", self.gmres_tol),
            ("collapse_threshold", self.collapse_threshold),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_newton_iters == 0 || self.gmres_restart == 0 || self.gmres_max_restarts == 0 {
            return Err(Error::domain("iteration limits must be at least 1"));
        }
        Ok(())
    }
}

/// A converged (or closed-form) standing wave.
#[derive(Debug, Clone)]
pub struct WaveProfile {
    pub field: RealField,
    pub s: f64,
    pub omega: f64,
    /// Max-norm of the stationary-equation residual.
    pub residual_norm: f64,
    pub newton_iters: usize,
    pub residual_history: Vec<f64>,
}

impl WaveProfile {
    pub fn grid(&self) -> &Arc<PeriodicGrid> {
        self.field.grid()
    }

    pub fn n_modes(&self) -> usize {
        self.field.len()
    }

    /// `‖φ‖²` in L²(-π, π).
    pub fn norm_sq(&self) -> f64 {
        self.field.norm_sq()
    }

    pub fn amplitude(&self) -> f64 {
        self.field.max_norm()
    }

    pub fn derivative(&self) -> RealField {
        derivative(&self.field)
    }

    pub fn to_record(&self) -> ProfileRecord {
        ProfileRecord {
            s: self.s,
            omega: self.omega,
            n_modes: self.n_modes(),
            residual_norm: self.residual_norm,
            values: self.field.values().to_vec(),
        }
    }
}

/// JSON form of a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub s: f64,
    pub omega: f64,
    pub n_modes: usize,
    pub residual_norm: f64,
    pub values: Vec<f64>,
}

impl ProfileRecord {
    pub fn into_profile(self) -> Result<WaveProfile> {
        let grid = PeriodicGrid::new(self.n_modes)?;
        Ok(WaveProfile {
            field: RealField::new(grid, self.values)?,
            s: self.s,
            omega: self.omega,
            residual_norm: self.residual_norm,
            newton_iters: 0,
            residual_history: Vec::new(),
        })
    }
}

/// Amplitude `a` of the leading `sin x` mode from `ω = 1 + ¾a²`.
pub fn stokes_amplitude(omega: f64) -> Result<f64> {
    check_frequency(omega)?;
    Ok((4.0 * (omega - 1.0) / 3.0).sqrt())
}

/// Coefficient of `a³ sin 3x` in the Stokes expansion.
pub fn stokes_third_harmonic(s: f64) -> f64 {
    1.0 / (4.0 * (3f64.powf(2.0 * s) - 1.0))
}

/// Two-term small-amplitude wave `a sin x + a³ sin 3x / (4(3^{2s} - 1))`.
pub fn stokes_seed(omega: f64, s: f64, grid: &Arc<PeriodicGrid>) -> Result<RealField> {
    check_exponent(s)?;
    let a = stokes_amplitude(omega)?;
    let c3 = a * a * a * stokes_third_harmonic(s);
    Ok(RealField::from_fn(grid, |x| {
        a * x.sin() + c3 * (3.0 * x).sin()
    }))
}

/// Physical-space residual `(-Δ)^s φ - ωφ + φ³`.
pub fn residual(phi: &RealField, omega: f64, s: f64, dealias: bool) -> Result<RealField> {
    let lap = frac_laplacian(phi, s)?;
    let cube = product(&[phi, phi, phi], dealias)?;
    let vals = lap
        .values()
        .iter()
        .zip(phi.values())
        .zip(cube.values())
        .map(|((l, p), c)| l - omega * p + c)
        .collect();
    RealField::new(phi.grid().clone(), vals)
}

struct OddJacobian<'a> {
    grid: &'a Arc<PeriodicGrid>,
    phi: &'a RealField,
    potential: RealField,
    omega: f64,
    s: f64,
    dealias: bool,
}

impl<'a> OddJacobian<'a> {
    fn new(phi: &'a RealField, omega: f64, s: f64, dealias: bool) -> Result<Self> {
        let sq = product(&[phi, phi], false)?;
        Ok(Self {
            grid: phi.grid(),
            phi,
            potential: sq.scaled(3.0),
            omega,
            s,
            dealias,
        })
    }

    fn apply(&self, q: &[f64]) -> Vec<f64> {
        let q = RealField::new(self.grid.clone(), q.to_vec()).expect("length fixed by grid");
        let lap = frac_laplacian(&q, self.s).expect("exponent validated");
        let pot = if self.dealias {
            product(&[self.phi, self.phi, &q], true)
                .expect("same grid")
                .scaled(3.0)
        } else {
            product(&[&self.potential, &q], false).expect("same grid")
        };
        let out = lap
            .values()
            .iter()
            .zip(q.values())
            .zip(pot.values())
            .map(|((l, qv), p)| l - self.omega * qv + p)
            .collect();
        let out = RealField::new(self.grid.clone(), out).expect("length fixed by grid");
        parity_project(&out, Parity::Odd).into_values()
    }

    fn precondition(&self, r: &[f64]) -> Vec<f64> {
        let shift = 1.0 + self.omega;
        let r = RealField::new(self.grid.clone(), r.to_vec()).expect("length fixed by grid");
        r.apply_multiplier(|xi| Complex64::new(1.0 / (frac_symbol(xi, self.s) + shift), 0.0))
            .into_values()
    }
}

/// Newton–Krylov solve of the stationary equation on the odd subspace.
pub fn newton_solve(
    seed: &RealField,
    omega: f64,
    s: f64,
    cfg: &SolverConfig,
) -> Result<WaveProfile> {
    check_exponent(s)?;
    check_frequency(omega)?;
    cfg.validate()?;
    let gmres_opts = GmresOptions {
        rel_tol: cfg.gmres_tol,
        restart: cfg.gmres_restart,
        max_restarts: cfg.gmres_max_restarts,
    };
    let collapse_floor = cfg.collapse_threshold * stokes_amplitude(omega)?;
    let mut phi = parity_project(seed, Parity::Odd);
    let mut history = Vec::new();

    for iter in 0..=cfg.max_newton_iters {
        let res = residual(&phi, omega, s, cfg.dealias)?;
        let r_norm = res.max_norm();
        history.push(r_norm);
        let amplitude = phi.max_norm();
        if amplitude < collapse_floor {
            return Err(Error::TrivialSolution { omega, amplitude });
        }
        if r_norm <= cfg.newton_tol {
            return Ok(WaveProfile {
                field: phi,
                s,
                omega,
                residual_norm: r_norm,
                newton_iters: iter,
                residual_history: history,
            });
        }
        if iter == cfg.max_newton_iters || !r_norm.is_finite() {
            break;
        }
        let rhs = parity_project(&res, Parity::Odd);
        let jac = OddJacobian::new(&phi, omega, s, cfg.dealias)?;
        let step = gmres(
            |q| jac.apply(q),
            |r| jac.precondition(r),
            rhs.values(),
            &gmres_opts,
        );
        let updated: Vec<f64> = phi
            .values()
            .iter()
            .zip(&step.x)
            .map(|(p, d)| p - d)
            .collect();
        phi = parity_project(&RealField::new(phi.grid().clone(), updated)?, Parity::Odd);
    }
    Err(Error::Convergence {
        iterations: cfg.max_newton_iters,
        last: history.last().copied().unwrap_or(f64::NAN),
        history,
    })
}

/// Solves at `to` seeded by `from`, halving the ω-step on failure.
pub fn step_to(from: &WaveProfile, to: f64, cfg: &SolverConfig) -> Result<WaveProfile> {
    step_recursive(from, to, cfg, 0)
}

fn step_recursive(
    from: &WaveProfile,
    to: f64,
    cfg: &SolverConfig,
    depth: usize,
) -> Result<WaveProfile> {
    match predict_and_solve(from, to, cfg) {
        Ok(p) => Ok(p),
        Err(e @ Error::Domain(_)) => Err(e),
        Err(e) => {
            if depth >= cfg.max_step_halvings {
                return Err(Error::Continuation {
                    omega: to,
                    source: Box::new(e),
                });
            }
            let mid = 0.5 * (from.omega + to);
            let halfway = step_recursive(from, mid, cfg, depth + 1)?;
            step_recursive(&halfway, to, cfg, depth + 1)
        }
    }
}

/// Newton from the previous profile rescaled by the ratio of Stokes
/// amplitudes; the result must stay positively aligned with `from`.
fn predict_and_solve(from: &WaveProfile, to: f64, cfg: &SolverConfig) -> Result<WaveProfile> {
    let scale = stokes_amplitude(to)? / stokes_amplitude(from.omega)?;
    let seed = from.field.scaled(scale);
    let p = newton_solve(&seed, to, from.s, cfg)?;
    let overlap =
        inner_product(&p.field, &from.field)? / (p.field.l2_norm() * from.field.l2_norm());
    if overlap < 0.5 {
        return Err(Error::BranchJump { omega: to, overlap });
    }
    Ok(p)
}

/// Solves at the first target from the Stokes seed.
pub fn seeded_solve(
    grid: &Arc<PeriodicGrid>,
    s: f64,
    omega: f64,
    cfg: &SolverConfig,
) -> Result<WaveProfile> {
    let seed = stokes_seed(omega, s, grid)?;
    newton_solve(&seed, omega, s, cfg)
}

#[derive(Debug, Clone)]
pub struct ContinuationRun {
    pub s: f64,
    pub omegas: Vec<f64>,
    pub profiles: Vec<WaveProfile>,
    /// `‖φ‖²` per target.
    pub norms: Vec<f64>,
}

impl ContinuationRun {
    /// Diagnostic only: whether `‖φ‖²` grows strictly along the run.
    pub fn norms_increasing(&self) -> bool {
        self.norms.windows(2).all(|w| w[1] > w[0])
    }

    pub fn amplitudes_increasing(&self) -> bool {
        self.profiles
            .windows(2)
            .all(|w| w[1].amplitude() > w[0].amplitude())
    }
}

pub fn validate_targets(targets: &[f64], cfg: &SolverConfig) -> Result<()> {
    let first = *targets
        .first()
        .ok_or_else(|| Error::domain("empty list of omega targets"))?;
    check_frequency(first)?;
    if first > cfg.seed_trust_omega {
        return Err(Error::domain(format!(
            "first omega target {first} lies outside the Stokes-seed region (omega <= {})",
            cfg.seed_trust_omega
        )));
    }
    if targets.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("omega targets must be strictly increasing"));
    }
    Ok(())
}

/// Continuation along increasing `omega_targets`.
pub fn continue_in_omega(
    grid: &Arc<PeriodicGrid>,
    s: f64,
    omega_targets: &[f64],
    cfg: &SolverConfig,
) -> Result<ContinuationRun> {
    check_exponent(s)?;
    validate_targets(omega_targets, cfg)?;
    let mut profiles: Vec<WaveProfile> = Vec::with_capacity(omega_targets.len());
    for &omega in omega_targets {
        let next = match profiles.last() {
            None => seeded_solve(grid, s, omega, cfg).map_err(|e| Error::Continuation {
                omega,
                source: Box::new(e),
            })?,
            Some(prev) => step_to(prev, omega, cfg)?,
        };
        profiles.push(next);
    }
    let norms = profiles.iter().map(WaveProfile::norm_sq).collect();
    Ok(ContinuationRun {
        s,
        omegas: omega_targets.to_vec(),
        profiles,
        norms,
    })
}

/// Evidence that a profile has exactly one maximum and one minimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LobeCertificate {
    pub critical_points: usize,
    pub max_location: f64,
    pub min_location: f64,
    pub max_value: f64,
    pub min_value: f64,
}

pub fn lobe_check(phi: &WaveProfile) -> Result<LobeCertificate> {
    lobe_check_field(&phi.field)
}

/// Counts sign changes of the spectral derivative around the circle and
/// locates the extrema.
pub fn lobe_check_field(phi: &RealField) -> Result<LobeCertificate> {
    let grid = phi.grid();
    let d = derivative(phi);
    let floor = 1e-9 * d.max_norm();
    let signs: Vec<bool> = d
        .values()
        .iter()
        .filter(|v| v.abs() > floor)
        .map(|&v| v > 0.0)
        .collect();
    let critical_points = if signs.is_empty() {
        0
    } else {
        (0..signs.len())
            .filter(|&i| signs[i] != signs[(i + 1) % signs.len()])
            .count()
    };
    let vals = phi.values();
    let (imax, imin) = vals.iter().enumerate().fold((0, 0), |(a, b), (i, &v)| {
        (
            if v > vals[a] { i } else { a },
            if v < vals[b] { i } else { b },
        )
    });
    let cert = LobeCertificate {
        critical_points,
        max_location: grid.points()[imax],
        min_location: grid.points()[imin],
        max_value: vals[imax],
        min_value: vals[imin],
    };
    if critical_points != 2 {
        return Err(Error::Shape(format!(
            "{critical_points} critical points instead of 2"
        )));
    }
    let tol = 2.0 * grid.spacing();
    if (cert.max_location - FRAC_PI_2).abs() > tol || (cert.min_location + FRAC_PI_2).abs() > tol {
        return Err(Error::Shape(format!(
            "extrema at x = {:.6} (max) and x = {:.6} (min), expected ±π/2",
            cert.max_location, cert.min_location
        )));
    }
    Ok(cert)
}

/// Max-norm defect of oddness relative to the amplitude.
pub fn relative_odd_defect(phi: &RealField) -> f64 {
    parity_defect(phi, Parity::Odd) / phi.max_norm().max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::exact_profile;
    use approx::assert_relative_eq;

    fn max_diff(a: &RealField, b: &RealField) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn stokes_seed_examples() {
        assert_relative_eq!(stokes_amplitude(1.03).unwrap(), 0.2, max_relative = 1e-14);
        assert_relative_eq!(stokes_third_harmonic(1.0), 1.0 / 32.0, max_relative = 1e-15);
        let grid = PeriodicGrid::new(64).unwrap();
        let seed = stokes_seed(1.0 + 1e-14, 0.5, &grid).unwrap();
        assert!(seed.max_norm() < 1e-6);
        assert!(stokes_seed(1.0, 0.5, &grid).is_err());
        assert!(stokes_seed(1.5, 0.2, &grid).is_err());
        let seed = stokes_seed(1.2, 0.7, &grid).unwrap();
        assert!(relative_odd_defect(&seed) < 1e-15);
    }

    #[test]
    fn residual_examples() {
        let grid = PeriodicGrid::new(256).unwrap();
        assert_eq!(
            residual(&RealField::zeros(&grid), 1.4, 0.6, false)
                .unwrap()
                .max_norm(),
            0.0
        );
        let exact = exact_profile(1.5, &grid).unwrap();
        let r = residual(&exact.field, 1.5, 1.0, false).unwrap();
        assert!(r.max_norm() <= 1e-8);
    }

    #[test]
    fn stokes_residual_shrinks_toward_bifurcation() {
        let grid = PeriodicGrid::new(128).unwrap();
        for s in [0.5, 1.0] {
            let mut ratios = Vec::new();
            for omega in [1.04, 1.02, 1.01] {
                let seed = stokes_seed(omega, s, &grid).unwrap();
                let r = residual(&seed, omega, s, false).unwrap().max_norm();
                let a = stokes_amplitude(omega).unwrap();
                ratios.push((r, r / a.powi(5)));
            }
            assert!(ratios[2].0 < ratios[1].0 && ratios[1].0 < ratios[0].0);
            // O(a⁵): the scaled residual stays bounded
            assert!(ratios.iter().all(|(_, q)| *q < 1.0), "{ratios:?}");
        }
    }

    #[test]
    fn newton_matches_exact_solution() {
        let grid = PeriodicGrid::new(1024).unwrap();
        let cfg = SolverConfig::default();
        let wave = seeded_solve(&grid, 1.0, 1.5, &cfg).unwrap();
        let exact = exact_profile(1.5, &grid).unwrap();
        assert!(max_diff(&wave.field, &exact.field) <= 1e-5);
        assert!(wave.residual_norm <= cfg.newton_tol);
        assert!(relative_odd_defect(&wave.field) <= 1e-10);
        // quadratic convergence: the history must fall monotonically
        assert!(wave.residual_history.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn newton_small_amplitude_close_to_seed() {
        let grid = PeriodicGrid::new(256).unwrap();
        for s in [0.3, 0.6, 1.0] {
            let seed = stokes_seed(1.001, s, &grid).unwrap();
            let wave = newton_solve(&seed, 1.001, s, &SolverConfig::default()).unwrap();
            assert!(wave.residual_norm <= 1e-6);
            assert!(max_diff(&wave.field, &seed) < 1e-6);
        }
    }

    #[test]
    fn zero_seed_is_trivial() {
        let grid = PeriodicGrid::new(64).unwrap();
        let err =
            newton_solve(&RealField::zeros(&grid), 1.5, 0.5, &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, Error::TrivialSolution { .. }));
    }

    #[test]
    fn non_convergence_reports_history() {
        let grid = PeriodicGrid::new(128).unwrap();
        let cfg = SolverConfig {
            max_newton_iters: 1,
            newton_tol: 1e-14,
            ..SolverConfig::default()
        };
        let seed = stokes_seed(1.2, 0.5, &grid).unwrap();
        match newton_solve(&seed, 2.5, 0.5, &cfg) {
            Err(Error::Convergence { history, .. }) => assert_eq!(history.len(), 2),
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn continuation_reaches_exact_solution() {
        let grid = PeriodicGrid::new(512).unwrap();
        let cfg = SolverConfig::default();
        let run = continue_in_omega(&grid, 1.0, &[1.1, 1.5], &cfg).unwrap();
        let exact = exact_profile(1.5, &grid).unwrap();
        assert!(max_diff(&run.profiles[1].field, &exact.field) <= 1e-5);
        assert!(run.norms_increasing());

        let single = continue_in_omega(&grid, 1.0, &[1.1], &cfg).unwrap();
        let direct = seeded_solve(&grid, 1.0, 1.1, &cfg).unwrap();
        assert_eq!(single.profiles[0].field.values(), direct.field.values());
    }

    #[test]
    fn continuation_fractional_norms_increase() {
        let grid = PeriodicGrid::new(256).unwrap();
        let targets: Vec<f64> = (0..=19).map(|i| 1.1 + 0.1 * i as f64).collect();
        let run = continue_in_omega(&grid, 0.5, &targets, &SolverConfig::default()).unwrap();
        assert!(run.norms_increasing());
        assert!(run.amplitudes_increasing());
        for p in &run.profiles {
            lobe_check(p).unwrap();
        }
    }

    #[test]
    fn continuation_rejects_bad_targets() {
        let grid = PeriodicGrid::new(64).unwrap();
        let cfg = SolverConfig::default();
        assert!(continue_in_omega(&grid, 0.5, &[], &cfg).is_err());
        assert!(continue_in_omega(&grid, 0.5, &[1.5, 2.0], &cfg).is_err());
        assert!(continue_in_omega(&grid, 0.5, &[1.1, 1.1], &cfg).is_err());
    }

    #[test]
    fn step_halving_rescues_large_jump() {
        let grid = PeriodicGrid::new(256).unwrap();
        let cfg = SolverConfig {
            max_newton_iters: 6,
            ..SolverConfig::default()
        };
        let start = seeded_solve(&grid, 0.5, 1.1, &cfg).unwrap();
        let far = step_to(&start, 4.0, &cfg).unwrap();
        assert!(far.residual_norm <= cfg.newton_tol);
        lobe_check(&far).unwrap();
    }

    #[test]
    fn lobe_examples() {
        let grid = PeriodicGrid::new(256).unwrap();
        let exact = exact_profile(1.5, &grid).unwrap();
        let cert = lobe_check(&exact).unwrap();
        assert_eq!(cert.critical_points, 2);
        assert!((cert.max_location - FRAC_PI_2).abs() < 1e-12);
        assert!((cert.min_location + FRAC_PI_2).abs() < 1e-12);
        lobe_check_field(&RealField::from_fn(&grid, f64::sin)).unwrap();
        let err = lobe_check_field(&RealField::from_fn(&grid, |x| (2.0 * x).sin())).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
    }

    #[test]
    fn dealiased_solve_agrees() {
        let grid = PeriodicGrid::new(256).unwrap();
        let plain = seeded_solve(&grid, 0.7, 1.15, &SolverConfig::default()).unwrap();
        let cfg = SolverConfig {
            dealias: true,
            ..SolverConfig::default()
        };
        let padded = seeded_solve(&grid, 0.7, 1.15, &cfg).unwrap();
        assert!(max_diff(&plain.field, &padded.field) < 1e-9);
    }

    #[test]
    fn record_round_trip() {
        let grid = PeriodicGrid::new(64).unwrap();
        let wave = exact_profile(1.3, &grid).unwrap();
        let json = serde_json::to_string(&wave.to_record()).unwrap();
        let back: ProfileRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, wave.to_record());
        let p = back.into_profile().unwrap();
        assert_eq!(p.field.values(), wave.field.values());
    }
}
