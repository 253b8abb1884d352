//! Acceptance criteria, run headless at the stated tolerances. Prints one
//! PASS/FAIL line per criterion (details indented below it) and exits
//! nonzero if any criterion fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use dfnls_core::analysis::{analyze, bootstrap, sweep_chain, AnalysisOptions, ChainResult};
use dfnls_core::elliptic::{complete_k, exact_profile, jacobi_sn};
use dfnls_core::grid::frac_symbol;
use dfnls_core::linops::default_kernel_tol;
use dfnls_core::wave::{
    continue_in_omega, seeded_solve, stokes_amplitude, stokes_seed, stokes_third_harmonic,
};
use dfnls_core::{
    inner_product, parity_project, Parity, PeriodicGrid, RealField, SolverConfig, Verdict,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const SWEEP_S: [f64; 4] = [0.5, 0.7, 0.9, 1.0];
const SWEEP_OMEGA: [f64; 4] = [1.2, 1.5, 2.0, 3.0];
const SWEEP_N: usize = 4096;
const SWEEP_M: usize = 256;

struct Outcome {
    pass: bool,
    lines: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            pass: true,
            lines: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, msg: impl Into<String>) {
        let msg = msg.into();
        self.lines
            .push(format!("{} {msg}", if ok { "ok  " } else { "FAIL" }));
        self.pass &= ok;
    }

    fn note(&mut self, msg: impl Into<String>) {
        self.lines.push(format!("     {}", msg.into()));
    }
}

struct Sweep {
    chains: Vec<ChainResult>,
    elapsed: Duration,
}

fn sweep_options() -> AnalysisOptions {
    AnalysisOptions {
        cutoff: Some(SWEEP_M),
        kernel_tol: None,
        fd_step: Some(1e-3),
        check_cutoff_doubling: true,
        solver: SolverConfig::default(),
    }
}

fn run_sweep() -> Sweep {
    let start = Instant::now();
    let grid = PeriodicGrid::new(SWEEP_N).unwrap();
    let opts = sweep_options();
    let chains = SWEEP_S
        .par_iter()
        .map(|&s| sweep_chain(&grid, s, &SWEEP_OMEGA, &opts).unwrap())
        .collect();
    Sweep {
        chains,
        elapsed: start.elapsed(),
    }
}

fn for_cells(
    sweep: &Sweep,
    out: &mut Outcome,
    mut f: impl FnMut(&dfnls_core::CellAnalysis, &mut Outcome),
) {
    for chain in &sweep.chains {
        for (row, cell) in chain.rows.iter().zip(&chain.cells) {
            match cell {
                Some(c) => f(c, out),
                None => out.check(
                    false,
                    format!("s={} omega={}: {}", row.s, row.omega, row.status),
                ),
            }
        }
    }
}

fn max_diff(a: &RealField, b: &RealField) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

fn criterion_1() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let grid = PeriodicGrid::new(4096).unwrap();
    let run = continue_in_omega(&grid, 1.0, &[1.1, 1.5], &SolverConfig::default()).unwrap();
    let numeric = &run.profiles[1];
    let exact = exact_profile(1.5, &grid).unwrap();
    let err = max_diff(&numeric.field, &exact.field);
    let elapsed = start.elapsed();
    out.check(
        err <= 1e-5,
        format!("L-inf error {err:.3e} <= 1e-5 (N=4096)"),
    );
    out.check(
        elapsed.as_secs_f64() <= 30.0,
        format!("runtime {:.2} s <= 30 s", elapsed.as_secs_f64()),
    );
    out.note(format!(
        "Newton residual {:.3e} after {} iterations",
        numeric.residual_norm, numeric.newton_iters
    ));
    out
}

fn criterion_2(sweep: &Sweep) -> Outcome {
    let mut out = Outcome::new();
    for_cells(sweep, &mut out, |c, out| {
        let (s, w) = (c.wave.s, c.wave.omega);
        let counts = c.counts();
        let l1_kernel_even = c.spectra.l1.sector(Parity::Even).map(|x| x.n_zero) == Some(1);
        let l2_kernel_odd = c.spectra.l2.sector(Parity::Odd).map(|x| x.n_zero) == Some(1);
        let ok = counts == (1, 1, 2, 1) && l1_kernel_even && l2_kernel_odd && c.counts_stable();
        out.check(
            ok,
            format!(
                "s={s} omega={w}: (n,z)(L1)=({},{}) (n,z)(L2)=({},{}), L1 kernel even: {l1_kernel_even}, L2 kernel odd: {l2_kernel_odd}, stable under M={}->{}: {}",
                counts.0,
                counts.1,
                counts.2,
                counts.3,
                SWEEP_M,
                2 * SWEEP_M,
                c.counts_stable()
            ),
        );
        if !c.spectra.l1.warnings.is_empty() || !c.spectra.l2.warnings.is_empty() {
            out.note(format!(
                "s={s} omega={w}: ambiguous-kernel warnings present"
            ));
        }
    });
    out
}

fn criterion_3(sweep: &Sweep) -> Outcome {
    let mut out = Outcome::new();
    let mut signs_ok = true;
    let mut verdicts = Vec::new();
    for_cells(sweep, &mut out, |c, _| {
        signs_ok &= c.report.v_odd > 0.0 && c.report.v_even < 0.0;
        verdicts.push((c.wave.s, c.wave.omega, c.report.clone()));
    });
    out.check(signs_ok, "v_odd > 0 and v_even < 0 in every cell");
    for (s, w, r) in &verdicts {
        out.check(
            r.verdict == Verdict::SpectrallyUnstable,
            format!(
                "s={s} omega={w}: verdict {} (n(L) odd/even/full = {}/{}/{}, n(V) = {}/{}/{}, differences {}/{}/{})",
                r.verdict,
                r.n_l_odd,
                r.n_l_even,
                r.n_l_full,
                r.n_v_odd,
                r.n_v_even,
                r.n_v_full,
                r.diff_odd,
                r.diff_even,
                r.diff_full
            ),
        );
    }
    for chain in &sweep.chains {
        out.check(
            chain.norms_increasing(),
            format!("s={}: ||phi||^2 strictly increasing in omega", chain.s),
        );
    }
    out
}

fn criterion_4(sweep: &Sweep) -> Outcome {
    let mut out = Outcome::new();
    for_cells(sweep, &mut out, |c, out| {
        let v = c.report.v_odd;
        let fd = c.report.dnorm_domega.unwrap_or(f64::NAN);
        let gap = (v - fd).abs() / v.abs();
        out.check(
            gap <= 1e-3,
            format!(
                "s={} omega={}: v_odd={v:.8e} fd={fd:.8e} rel gap {gap:.2e} <= 1e-3",
                c.wave.s, c.wave.omega
            ),
        );
    });
    out
}

fn criterion_5(sweep: &Sweep) -> Outcome {
    let mut out = Outcome::new();
    for_cells(sweep, &mut out, |c, out| {
        let (r1, r2) = c.kernel_residuals;
        out.check(
            r1 <= 1e-5 && r2 <= 1e-5,
            format!(
                "s={} omega={}: |L1 phi'|/|phi'| = {r1:.2e}, |L2 phi|/|phi| = {r2:.2e}",
                c.wave.s, c.wave.omega
            ),
        );
    });
    out
}

fn criterion_6() -> Outcome {
    let mut out = Outcome::new();
    // small waves are resolved on a coarse grid, which also keeps the
    // roundoff floor of the residual well below the tolerance
    let grid = PeriodicGrid::new(256).unwrap();
    let cfg = SolverConfig {
        newton_tol: 1e-11,
        gmres_tol: 1e-12,
        ..SolverConfig::default()
    };
    for s in [0.5, 1.0] {
        let mut ratios = Vec::new();
        for omega in [1.04, 1.02, 1.01] {
            let wave = seeded_solve(&grid, s, omega, &cfg).unwrap();
            let stokes = stokes_seed(omega, s, &grid).unwrap();
            let a = stokes_amplitude(omega).unwrap();
            let err = max_diff(&wave.field, &stokes);
            let ratio = err / a.powi(5);
            out.check(
                err <= 5.0 * a.powi(5),
                format!("s={s} omega={omega}: |phi - stokes| = {err:.3e} <= 5 a^5 = {:.3e} (ratio {ratio:.4})", 5.0 * a.powi(5)),
            );
            ratios.push(ratio);

            // same comparison with a read off the wave's sin x coefficient
            let b = -2.0 * wave.field.coefficients()[1].im;
            let t = stokes_third_harmonic(s);
            let branch =
                RealField::from_fn(&grid, |x| b * x.sin() + t * b.powi(3) * (3.0 * x).sin());
            let err_b = max_diff(&wave.field, &branch);
            out.note(format!(
                "s={s} omega={omega}: with a = sin x coefficient {b:.6}: error {err_b:.3e}, error/a^5 {:.4}, amplitude offset (b - a)/a^3 {:.5}",
                err_b / b.powi(5),
                (b - a) / a.powi(3)
            ));
        }
        let monotone = ratios.windows(2).all(|w| w[1] <= w[0]);
        out.check(
            monotone,
            format!("s={s}: error/a^5 does not grow as omega -> 1 ({ratios:.4?})"),
        );
    }
    out
}

/// `K(k) = π/2 Σ [(2n)!/(2^{2n} (n!)²)]² k^{2n}`.
fn k_maclaurin(k: f64) -> f64 {
    let mut coef = 1.0_f64;
    let mut pow = 1.0_f64;
    let mut sum = 0.0;
    for n in 0..100_000 {
        let term = coef * coef * pow;
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
        let nf = n as f64;
        coef *= (2.0 * nf + 1.0) / (2.0 * nf + 2.0);
        pow *= k * k;
    }
    FRAC_PI_2 * sum
}

fn criterion_7() -> Outcome {
    let mut out = Outcome::new();
    let mut worst = 0.0_f64;
    for i in 0..10 {
        let k = i as f64 / 10.0;
        let rel = (complete_k(k).unwrap() - k_maclaurin(k)).abs() / k_maclaurin(k);
        worst = worst.max(rel);
    }
    out.check(
        worst <= 1e-12,
        format!("K(k) vs Maclaurin series, worst rel err {worst:.2e} <= 1e-12"),
    );
    let (mut sn_k, mut period) = (0.0_f64, 0.0_f64);
    for i in 0..10 {
        let k = i as f64 / 10.0;
        let big_k = complete_k(k).unwrap();
        sn_k = sn_k.max((jacobi_sn(big_k, k).unwrap() - 1.0).abs());
        for j in 0..16 {
            let u = -3.0 + 0.41 * j as f64;
            let d = (jacobi_sn(u + 4.0 * big_k, k).unwrap() - jacobi_sn(u, k).unwrap()).abs();
            period = period.max(d);
        }
    }
    out.check(
        sn_k <= 1e-10,
        format!("|sn(K,k) - 1| max {sn_k:.2e} <= 1e-10"),
    );
    out.check(
        period <= 1e-10,
        format!("4K-periodicity defect max {period:.2e} <= 1e-10"),
    );
    out
}

fn random_field(grid: &Arc<PeriodicGrid>, rng: &mut ChaCha8Rng) -> RealField {
    let coeffs: Vec<(f64, f64)> = (0..40)
        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    RealField::from_fn(grid, |x| {
        coeffs
            .iter()
            .enumerate()
            .map(|(m, (a, b))| a * (m as f64 * x).cos() + b * (m as f64 * x).sin())
            .sum()
    })
}

fn criterion_8(sweep: &Sweep) -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let grid = PeriodicGrid::new(256).unwrap();
    let (mut idem, mut adj, mut parseval) = (0.0_f64, 0.0_f64, 0.0_f64);
    for _ in 0..64 {
        let f = random_field(&grid, &mut rng);
        let g = random_field(&grid, &mut rng);
        for p in [Parity::Odd, Parity::Even] {
            let once = parity_project(&f, p);
            idem = idem.max(max_diff(&parity_project(&once, p), &once));
        }
        let s = rng.gen_range(0.26..1.0);
        let mult = |h: &RealField| {
            h.apply_multiplier(|xi| {
                num_complex::Complex64::new(frac_symbol(xi, s) + 0.5 * (xi as f64).cos(), 0.0)
            })
        };
        let lhs = inner_product(&mult(&f), &g).unwrap();
        let rhs = inner_product(&f, &mult(&g)).unwrap();
        adj = adj.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0));
        let energy: f64 = f.coefficients().iter().map(|c| c.norm_sqr()).sum::<f64>() * 2.0 * PI;
        parseval = parseval.max((energy - f.norm_sq()).abs() / f.norm_sq());
    }
    out.check(
        idem <= 1e-15,
        format!("parity projection idempotent (defect {idem:.1e})"),
    );
    out.check(
        adj <= 1e-12,
        format!("real even multiplier self-adjoint (rel defect {adj:.1e})"),
    );
    out.check(
        parseval <= 1e-12,
        format!("Parseval (rel defect {parseval:.1e})"),
    );

    let mut worst_cross = 0.0_f64;
    for_cells(sweep, &mut out, |c, _| {
        worst_cross = worst_cross.max(c.v.off_diagonal_ratio())
    });
    out.check(
        worst_cross <= 1e-8,
        format!("V off-diagonal entries / scale max {worst_cross:.2e} <= 1e-8"),
    );

    let fine = PeriodicGrid::new(2 * SWEEP_N).unwrap();
    let opts = AnalysisOptions {
        fd_step: None,
        check_cutoff_doubling: false,
        ..sweep_options()
    };
    let coarse_verdicts: Vec<(f64, f64, Option<Verdict>)> = sweep
        .chains
        .iter()
        .flat_map(|ch| ch.rows.iter().map(|r| (r.s, r.omega, r.verdict)))
        .collect();
    let fine_verdicts: Vec<Option<Verdict>> = coarse_verdicts
        .par_iter()
        .map(|&(s, w, _)| {
            bootstrap(&fine, s, w, &opts.solver)
                .and_then(|wave| analyze(&wave, &opts))
                .ok()
                .map(|c| c.report.verdict)
        })
        .collect();
    let mut invariant = true;
    for ((s, w, a), b) in coarse_verdicts.iter().zip(&fine_verdicts) {
        if a.is_none() || a != b {
            invariant = false;
            out.note(format!(
                "s={s} omega={w}: N={SWEEP_N} {a:?} vs N={} {b:?}",
                2 * SWEEP_N
            ));
        }
    }
    out.check(
        invariant,
        format!(
            "verdict invariant under N={} -> {} in all {} cells",
            SWEEP_N,
            2 * SWEEP_N,
            coarse_verdicts.len()
        ),
    );
    let total = start.elapsed() + sweep.elapsed;
    out.check(
        total.as_secs_f64() <= 300.0,
        format!(
            "property suite incl. sweep in {:.1} s <= 300 s",
            total.as_secs_f64()
        ),
    );
    out
}

type Criterion<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn main() -> ExitCode {
    let started = Instant::now();
    println!("acceptance: sweep s in {SWEEP_S:?}, omega in {SWEEP_OMEGA:?}, N={SWEEP_N}, M={SWEEP_M} (doubled to {})", 2 * SWEEP_M);
    println!(
        "acceptance: kernel tolerance 1e-4*max(1,omega), e.g. {:.1e} at omega=3",
        default_kernel_tol(3.0)
    );
    let sweep = run_sweep();
    println!(
        "acceptance: sweep finished in {:.1} s",
        sweep.elapsed.as_secs_f64()
    );

    let criteria: Vec<(&str, Criterion<'_>)> = vec![
        ("1 exact-solution reproduction", Box::new(criterion_1)),
        ("2 spectral counts", Box::new(|| criterion_2(&sweep))),
        (
            "3 sign results and verdict",
            Box::new(|| criterion_3(&sweep)),
        ),
        (
            "4 v_odd vs d/domega identity",
            Box::new(|| criterion_4(&sweep)),
        ),
        ("5 kernel residuals", Box::new(|| criterion_5(&sweep))),
        ("6 Stokes-expansion order", Box::new(criterion_6)),
        ("7 special-function oracle", Box::new(criterion_7)),
        ("8 property suite", Box::new(|| criterion_8(&sweep))),
    ];

    let mut failed = 0;
    for (name, run) in &criteria {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            let mut o = Outcome::new();
            o.check(false, format!("panicked: {msg}"));
            o
        });
        println!(
            "criterion {name}: {}",
            if outcome.pass { "PASS" } else { "FAIL" }
        );
        for line in &outcome.lines {
            println!("    {line}");
        }
        failed += usize::from(!outcome.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed, {:.1} s total",
        criteria.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
