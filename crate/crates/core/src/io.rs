//! CSV and JSON artifacts. Floats in CSV carry 17 significant digits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::analysis::SweepRow;
use crate::error::Result;
use crate::grid::RealField;
use crate::wave::WaveProfile;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Columns `x,phi`.
pub fn write_profile_csv(path: &Path, wave: &WaveProfile) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x,phi")?;
    for (x, v) in wave.grid().points().iter().zip(wave.field.values()) {
        writeln!(w, "{},{}", fmt_f64(*x), fmt_f64(*v))?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `x,phi_exact,phi_numeric,abs_diff`.
pub fn write_comparison_csv(path: &Path, exact: &RealField, numeric: &RealField) -> Result<()> {
    exact.same_grid(numeric)?;
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x,phi_exact,phi_numeric,abs_diff")?;
    for ((x, e), n) in exact
        .grid()
        .points()
        .iter()
        .zip(exact.values())
        .zip(numeric.values())
    {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_f64(*x),
            fmt_f64(*e),
            fmt_f64(*n),
            fmt_f64((e - n).abs())
        )?;
    }
    w.flush()?;
    Ok(())
}

pub const SWEEP_HEADER: &str = "omega,norm_sq,v_odd,v_even,n_L1,z_L1,n_L2,z_L2,verdict,status";

pub fn sweep_row_csv(r: &SweepRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},\"{}\"",
        fmt_f64(r.omega),
        opt_f64(r.norm_sq),
        opt_f64(r.v_odd),
        opt_f64(r.v_even),
        opt(r.n_l1),
        opt(r.z_l1),
        opt(r.n_l2),
        opt(r.z_l2),
        opt(r.verdict.map(|v| v.as_str())),
        r.status.replace('"', "'")
    )
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", sweep_row_csv(r))?;
    }
    w.flush()?;
    Ok(())
}
