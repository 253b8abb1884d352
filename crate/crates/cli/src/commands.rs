use std::collections::BTreeMap;

use rayon::prelude::*;
use serde_json::{json, Value};

use dfnls_core::analysis::{analyze, bootstrap, sweep_chain, AnalysisOptions};
use dfnls_core::elliptic::exact_profile;
use dfnls_core::io::{write_comparison_csv, write_json, write_profile_csv, write_sweep_csv};
use dfnls_core::linops::{eig_counts, LinearizedOperator, OperatorKind, Restriction};
use dfnls_core::wave::{check_exponent, lobe_check};
use dfnls_core::{Error, KreinReport, PeriodicGrid, SolverConfig, WaveProfile};

use crate::args::{
    KreinArgs, OperatorChoice, ParityChoice, SolveArgs, SolverArgs, SpectralArgs, SpectrumArgs,
    SweepArgs, ValidateArgs,
};
use crate::error::CliError;
use crate::output::OutputDir;

fn input(e: Error) -> CliError {
    CliError::stage("input", e)
}

fn solver_config(args: &SolverArgs) -> Result<SolverConfig, CliError> {
    let cfg = SolverConfig {
        newton_tol: args.tol,
        gmres_tol: args.gmres_tol,
        ..SolverConfig::default()
    };
    cfg.validate().map_err(input)?;
    Ok(cfg)
}

fn finite(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("--{name} must be finite, got {v}")))
    }
}

/// Checks `s`, `N`, tolerances and `ω`; `ω ≤ 1` is reported as trivial.
fn check_wave_args(args: &SolveArgs) -> Result<SolverConfig, CliError> {
    check_exponent(finite("s", args.s)?).map_err(input)?;
    finite("omega", args.omega)?;
    PeriodicGrid::new(args.solver.n_modes).map_err(input)?;
    let cfg = solver_config(&args.solver)?;
    if args.omega <= 1.0 {
        return Err(CliError::Trivial(format!(
            "omega = {} <= 1: the zero solution is the only odd periodic wave, Newton has nothing to converge to",
            args.omega
        )));
    }
    Ok(cfg)
}

fn check_cutoff(spectral: &SpectralArgs, n_modes: usize) -> Result<(), CliError> {
    if let Some(m) = spectral.basis_cutoff {
        if m == 0 || m >= n_modes / 2 {
            return Err(CliError::Usage(format!(
                "--basis-cutoff must lie in [1, N/2) = [1, {}), got {m}",
                n_modes / 2
            )));
        }
    }
    if let Some(t) = spectral.kernel_tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Usage(format!(
                "--kernel-tol must be positive, got {t}"
            )));
        }
    }
    Ok(())
}

fn solve_wave(
    s: f64,
    omega: f64,
    n_modes: usize,
    cfg: &SolverConfig,
) -> Result<WaveProfile, CliError> {
    let grid = PeriodicGrid::new(n_modes).map_err(input)?;
    bootstrap(&grid, s, omega, cfg).map_err(|e| match e {
        Error::TrivialSolution { omega, amplitude } => CliError::Trivial(format!(
            "Newton collapsed to phi = 0 at omega = {omega} (max |phi| = {amplitude:.3e})"
        )),
        other => CliError::stage("solve", other),
    })
}

fn solver_params(args: &SolveArgs) -> BTreeMap<String, Value> {
    BTreeMap::from([
        ("s".into(), json!(args.s)),
        ("omega".into(), json!(args.omega)),
        ("n_modes".into(), json!(args.solver.n_modes)),
        ("tol".into(), json!(args.solver.tol)),
        ("gmres_tol".into(), json!(args.solver.gmres_tol)),
        (
            "seed_omega".into(),
            json!(SolverConfig::default().seed_trust_omega),
        ),
    ])
}

fn write_profile(out: &mut OutputDir, wave: &WaveProfile) -> Result<(), CliError> {
    write_json(&out.file("profile.json"), &wave.to_record())
        .map_err(|e| CliError::stage("output", e))?;
    write_profile_csv(&out.file("profile.csv"), wave).map_err(|e| CliError::stage("output", e))
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).unwrap_or_default());
}

pub fn solve(args: &SolveArgs) -> Result<(), CliError> {
    let cfg = check_wave_args(args)?;
    let wave = solve_wave(args.s, args.omega, args.solver.n_modes, &cfg)?;
    let lobe = lobe_check(&wave);

    let mut out = OutputDir::prepare(&args.output.output_dir, args.output.force)?;
    write_profile(&mut out, &wave)?;
    out.write_manifest("solve", solver_params(args))?;

    if args.output.json {
        print_json(&json!({
            "s": wave.s,
            "omega": wave.omega,
            "residual_norm": wave.residual_norm,
            "newton_iters": wave.newton_iters,
            "norm_sq": wave.norm_sq(),
            "lobe": lobe.as_ref().ok(),
            "lobe_error": lobe.as_ref().err().map(|e| e.to_string()),
        }));
    } else {
        println!(
            "solve: s = {}, omega = {}, N = {}",
            wave.s,
            wave.omega,
            wave.n_modes()
        );
        println!(
            "residual {:.3e} after {} Newton iterations (final leg), ||phi||^2 = {:.10e}",
            wave.residual_norm,
            wave.newton_iters,
            wave.norm_sq()
        );
        if let Ok(c) = &lobe {
            println!(
                "two-lobe certificate: {} critical points, max {:.8} at x = {:.6}, min {:.8} at x = {:.6}",
                c.critical_points, c.max_value, c.max_location, c.min_value, c.min_location
            );
        }
    }
    lobe.map(|_| ())
        .map_err(|e| CliError::Validation(format!("solve: {e}")))
}

fn analysis_options(
    spectral: &SpectralArgs,
    fd_step: f64,
    solver: SolverConfig,
) -> Result<AnalysisOptions, CliError> {
    if !(fd_step > 0.0 && fd_step.is_finite()) {
        return Err(CliError::Usage(format!(
            "--fd-step must be positive, got {fd_step}"
        )));
    }
    Ok(AnalysisOptions {
        cutoff: spectral.basis_cutoff,
        kernel_tol: spectral.kernel_tol,
        fd_step: Some(fd_step),
        check_cutoff_doubling: false,
        solver,
    })
}

fn print_krein_table(r: &KreinReport, n_l1: (usize, usize, usize), n_l2: (usize, usize, usize)) {
    println!("sector  n(L1)  n(L2)  n(L)  n(V)  n(L)-n(V)");
    println!(
        "odd     {:>5}  {:>5}  {:>4}  {:>4}  {:>9}",
        n_l1.0, n_l2.0, r.n_l_odd, r.n_v_odd, r.diff_odd
    );
    println!(
        "even    {:>5}  {:>5}  {:>4}  {:>4}  {:>9}",
        n_l1.1, n_l2.1, r.n_l_even, r.n_v_even, r.diff_even
    );
    println!(
        "full    {:>5}  {:>5}  {:>4}  {:>4}  {:>9}",
        n_l1.2, n_l2.2, r.n_l_full, r.n_v_full, r.diff_full
    );
    println!("v_odd  = (L1^-1 phi, phi)   = {:.10e}", r.v_odd);
    println!("v_even = (L2^-1 phi', phi') = {:.10e}", r.v_even);
    if let Some(d) = r.dnorm_domega {
        println!(
            "1/2 d/domega ||phi||^2    = {d:.10e} (relative gap to v_odd {:.2e})",
            (d - r.v_odd).abs() / r.v_odd.abs()
        );
    }
    println!("verdict: {}", r.verdict);
}

pub fn krein(args: &KreinArgs) -> Result<(), CliError> {
    let cfg = check_wave_args(&args.wave)?;
    check_cutoff(&args.spectral, args.wave.solver.n_modes)?;
    let opts = analysis_options(&args.spectral, args.fd_step, cfg.clone())?;
    let wave = solve_wave(args.wave.s, args.wave.omega, args.wave.solver.n_modes, &cfg)?;
    let cell = analyze(&wave, &opts).map_err(|e| CliError::stage("krein", e))?;

    let mut out = OutputDir::prepare(&args.wave.output.output_dir, args.wave.output.force)?;
    write_profile(&mut out, &wave)?;
    write_json(&out.file("krein.json"), &cell.report).map_err(|e| CliError::stage("output", e))?;
    let mut params = solver_params(&args.wave);
    params.insert(
        "basis_cutoff".into(),
        json!(opts.cutoff_for(wave.n_modes())),
    );
    params.insert(
        "kernel_tol".into(),
        json!(cell.report.provenance.kernel_tol),
    );
    params.insert("fd_step".into(), json!(args.fd_step));
    out.write_manifest("krein", params)?;

    for w in cell
        .spectra
        .l1
        .warnings
        .iter()
        .chain(&cell.spectra.l2.warnings)
    {
        eprintln!("warning: {w}");
    }
    if args.wave.output.json {
        print_json(&serde_json::to_value(&cell.report).unwrap_or(Value::Null));
    } else {
        let sector = |r: &dfnls_core::SpectrumReport, p| r.sector(p).map_or(0, |c| c.n_neg);
        use dfnls_core::Parity::{Even, Odd};
        let (l1, l2) = (&cell.spectra.l1, &cell.spectra.l2);
        println!(
            "krein: s = {}, omega = {}, N = {}, M = {}",
            wave.s,
            wave.omega,
            wave.n_modes(),
            l1.cutoff
        );
        println!(
            "n(L1) = {}, z(L1) = {}; n(L2) = {}, z(L2) = {}",
            l1.n_neg, l1.n_zero, l2.n_neg, l2.n_zero
        );
        print_krein_table(
            &cell.report,
            (sector(l1, Odd), sector(l1, Even), l1.n_neg),
            (sector(l2, Odd), sector(l2, Even), l2.n_neg),
        );
    }
    Ok(())
}

pub fn spectrum(args: &SpectrumArgs) -> Result<(), CliError> {
    let cfg = check_wave_args(&args.wave)?;
    check_cutoff(&args.spectral, args.wave.solver.n_modes)?;
    let wave = solve_wave(args.wave.s, args.wave.omega, args.wave.solver.n_modes, &cfg)?;
    let kinds: &[OperatorKind] = match args.operator {
        OperatorChoice::L1 => &[OperatorKind::L1],
        OperatorChoice::L2 => &[OperatorKind::L2],
        OperatorChoice::Both => &[OperatorKind::L1, OperatorKind::L2],
    };
    let restriction = match args.parity {
        ParityChoice::Full => Restriction::Full,
        ParityChoice::Odd => Restriction::Odd,
        ParityChoice::Even => Restriction::Even,
    };
    let cutoff = args
        .spectral
        .basis_cutoff
        .unwrap_or_else(|| dfnls_core::linops::default_cutoff(wave.n_modes()));
    let mut reports = Vec::new();
    for &kind in kinds {
        let op = LinearizedOperator::new(kind, &wave, restriction).with_cutoff(cutoff);
        reports.push(
            eig_counts(&op, args.spectral.kernel_tol)
                .map_err(|e| CliError::stage("spectrum", e))?,
        );
    }
    let records: Vec<_> = reports.iter().map(|r| r.to_record(args.keep)).collect();

    let mut out = OutputDir::prepare(&args.wave.output.output_dir, args.wave.output.force)?;
    write_profile(&mut out, &wave)?;
    write_json(&out.file("spectrum.json"), &records).map_err(|e| CliError::stage("output", e))?;
    let mut params = solver_params(&args.wave);
    params.insert("basis_cutoff".into(), json!(cutoff));
    params.insert("parity".into(), json!(restriction));
    params.insert("keep".into(), json!(args.keep));
    out.write_manifest("spectrum", params)?;

    for w in reports.iter().flat_map(|r| &r.warnings) {
        eprintln!("warning: {w}");
    }
    if args.wave.output.json {
        print_json(&serde_json::to_value(&records).unwrap_or(Value::Null));
    } else {
        for r in &reports {
            println!(
                "{} ({}, M = {}, tol {:.1e}): n = {}, z = {}",
                r.kind, r.parity, r.cutoff, r.kernel_tol, r.n_neg, r.n_zero
            );
            for c in &r.sectors {
                println!(
                    "  {:<4} sector: n = {}, z = {}, dim {}",
                    c.parity, c.n_neg, c.n_zero, c.basis_dim
                );
            }
            let low: Vec<String> = r
                .eigenvalues
                .iter()
                .take(args.keep)
                .map(|v| format!("{v:.6e}"))
                .collect();
            println!("  lowest: {}", low.join(" "));
        }
    }
    Ok(())
}

/// `omega_min, omega_min + step, ...` up to `omega_max` inclusive.
pub fn omega_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>, CliError> {
    for (n, v) in [("omega-min", min), ("omega-max", max), ("omega-step", step)] {
        finite(n, v)?;
    }
    if !(step > 0.0) {
        return Err(CliError::Usage(format!(
            "--omega-step must be positive, got {step}"
        )));
    }
    if !(min > 1.0) {
        return Err(CliError::Usage(format!(
            "--omega-min must exceed 1 (only the zero wave exists below), got {min}"
        )));
    }
    if max < min {
        return Err(CliError::Usage(format!("empty omega range [{min}, {max}]")));
    }
    let count = ((max - min) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| min + i as f64 * step).collect())
}

pub fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    for &s in &args.s_list {
        check_exponent(finite("s-list", s)?).map_err(input)?;
    }
    let omegas = omega_grid(args.omega_min, args.omega_max, args.omega_step)?;
    let grid = PeriodicGrid::new(args.solver.n_modes).map_err(input)?;
    check_cutoff(&args.spectral, args.solver.n_modes)?;
    let cfg = solver_config(&args.solver)?;
    let mut opts = analysis_options(&args.spectral, args.fd_step, cfg)?;
    if omegas[0] - args.fd_step <= 1.0 + args.fd_step {
        opts.fd_step = None;
        eprintln!("warning: omega-min too close to 1 for the FD cross-check; skipped");
    }

    let chains = args
        .s_list
        .par_iter()
        .map(|&s| sweep_chain(&grid, s, &omegas, &opts))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::stage("sweep", e))?;

    let mut out = OutputDir::prepare(&args.output.output_dir, args.output.force)?;
    for chain in &chains {
        write_sweep_csv(&out.file(&format!("sweep_s{}.csv", chain.s)), &chain.rows)
            .map_err(|e| CliError::stage("output", e))?;
    }
    let combined = json!({
        "n_modes": args.solver.n_modes,
        "omegas": omegas,
        "chains": chains.iter().map(|c| json!({"s": c.s, "rows": c.rows})).collect::<Vec<_>>(),
    });
    write_json(&out.file("sweep.json"), &combined).map_err(|e| CliError::stage("output", e))?;
    let params = BTreeMap::from([
        ("s_list".into(), json!(args.s_list)),
        ("omega_min".into(), json!(args.omega_min)),
        ("omega_max".into(), json!(args.omega_max)),
        ("omega_step".into(), json!(args.omega_step)),
        ("n_modes".into(), json!(args.solver.n_modes)),
        ("tol".into(), json!(args.solver.tol)),
        ("gmres_tol".into(), json!(args.solver.gmres_tol)),
        (
            "seed_omega".into(),
            json!(SolverConfig::default().seed_trust_omega),
        ),
        (
            "basis_cutoff".into(),
            json!(opts.cutoff_for(args.solver.n_modes)),
        ),
        ("kernel_tol".into(), json!(args.spectral.kernel_tol)),
        ("fd_step".into(), json!(opts.fd_step)),
    ]);
    out.write_manifest("sweep", params)?;

    if args.output.json {
        print_json(&combined);
    } else {
        println!(
            "{:>5} {:>8} {:>14} {:>14} {:>14}  n,z(L1) n,z(L2)  verdict",
            "s", "omega", "norm_sq", "v_odd", "v_even"
        );
        for r in chains.iter().flat_map(|c| &c.rows) {
            let f = |v: Option<f64>| v.map_or_else(|| "-".into(), |x| format!("{x:.6e}"));
            let c = |v: Option<usize>| v.map_or_else(|| "-".into(), |x| x.to_string());
            println!(
                "{:>5} {:>8.4} {:>14} {:>14} {:>14}  {},{}     {},{}      {}",
                r.s,
                r.omega,
                f(r.norm_sq),
                f(r.v_odd),
                f(r.v_even),
                c(r.n_l1),
                c(r.z_l1),
                c(r.n_l2),
                c(r.z_l2),
                r.verdict
                    .map_or_else(|| r.status.clone(), |v| v.to_string())
            );
        }
    }
    let total: usize = chains.iter().map(|c| c.rows.len()).sum();
    let failed = chains
        .iter()
        .flat_map(|c| &c.rows)
        .filter(|r| !r.is_ok())
        .count();
    if failed > 0 {
        return Err(CliError::PartialSweep { failed, total });
    }
    Ok(())
}

pub fn validate_exact(args: &ValidateArgs) -> Result<(), CliError> {
    let omega = finite("omega", args.omega)?;
    if omega <= 1.0 {
        return Err(CliError::Usage(format!(
            "--omega must exceed 1 for the elliptic wave, got {omega}"
        )));
    }
    if !(args.max_err > 0.0) {
        return Err(CliError::Usage(format!(
            "--max-err must be positive, got {}",
            args.max_err
        )));
    }
    let cfg = solver_config(&args.solver)?;
    let grid = PeriodicGrid::new(args.solver.n_modes).map_err(input)?;
    let numeric = solve_wave(1.0, omega, args.solver.n_modes, &cfg)?;
    let exact = exact_profile(omega, &grid).map_err(|e| CliError::stage("exact", e))?;
    let err = exact
        .field
        .values()
        .iter()
        .zip(numeric.field.values())
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));

    let mut out = OutputDir::prepare(&args.output.output_dir, args.output.force)?;
    write_comparison_csv(&out.file("comparison.csv"), &exact.field, &numeric.field)
        .map_err(|e| CliError::stage("output", e))?;
    let params = BTreeMap::from([
        ("s".into(), json!(1.0)),
        ("omega".into(), json!(omega)),
        ("n_modes".into(), json!(args.solver.n_modes)),
        ("tol".into(), json!(args.solver.tol)),
        ("gmres_tol".into(), json!(args.solver.gmres_tol)),
        (
            "seed_omega".into(),
            json!(SolverConfig::default().seed_trust_omega),
        ),
        ("max_err".into(), json!(args.max_err)),
    ]);
    out.write_manifest("validate-exact", params)?;

    let pass = err <= args.max_err;
    if args.output.json {
        print_json(
            &json!({"omega": omega, "max_error": err, "threshold": args.max_err, "pass": pass}),
        );
    } else {
        println!(
            "validate-exact: omega = {omega}, N = {}, max |phi_exact - phi_numeric| = {err:.3e} (threshold {:.1e})",
            args.solver.n_modes, args.max_err
        );
    }
    if pass {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "validate-exact: max error {err:.3e} exceeds {:.1e}",
            args.max_err
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_grid_inclusive() {
        let g = omega_grid(1.1, 3.0, 0.1).unwrap();
        assert_eq!(g.len(), 20);
        assert!((g[19] - 3.0).abs() < 1e-12);
        assert_eq!(omega_grid(1.5, 1.5, 0.1).unwrap(), vec![1.5]);
        assert!(omega_grid(2.0, 1.5, 0.1).is_err());
        assert!(omega_grid(1.1, 2.0, 0.0).is_err());
        assert!(omega_grid(0.9, 2.0, 0.1).is_err());
    }
}
