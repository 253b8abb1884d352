//! Uniform collocation of the circle `[-π, π)` and the spectral operations
//! built on it: Fourier multipliers, the spectral derivative, parity
//! projections and the trapezoidal inner product.
//!
//! Wavenumbers follow the FFT ordering `0, 1, …, N/2-1, -N/2, …, -1`. The
//! grid starts at `x₀ = -π`, so the true Fourier coefficients differ from the
//! raw DFT output by the phase `(-1)^ξ`; [`RealField::coefficients`] applies it.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_MODES: usize = 16;

/// Uniform periodic grid with `N` points and the paired wavenumber set.
pub struct PeriodicGrid {
    n_modes: usize,
    points: Vec<f64>,
    wavenumbers: Vec<i64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    fine: OnceLock<Arc<PeriodicGrid>>,
}

impl fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicGrid")
            .field("n_modes", &self.n_modes)
            .finish_non_exhaustive()
    }
}

impl PeriodicGrid {
    pub fn new(n_modes: usize) -> Result<Arc<Self>> {
        if n_modes < MIN_MODES || !n_modes.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "N must be a power of two and at least {MIN_MODES}, got {n_modes}"
            )));
        }
        let h = 2.0 * PI / n_modes as f64;
        let points = (0..n_modes).map(|j| -PI + h * j as f64).collect();
        let half = (n_modes / 2) as i64;
        let wavenumbers = (0..n_modes as i64)
            .map(|k| if k < half { k } else { k - n_modes as i64 })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Self {
            n_modes,
            points,
            wavenumbers,
            forward: planner.plan_fft_forward(n_modes),
            inverse: planner.plan_fft_inverse(n_modes),
            fine: OnceLock::new(),
        }))
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Wavenumbers in transform order.
    pub fn wavenumbers(&self) -> &[i64] {
        &self.wavenumbers
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n_modes as f64
    }

    /// Transform-order index of wavenumber `xi`, if it is resolved.
    pub fn index_of(&self, xi: i64) -> Option<usize> {
        let n = self.n_modes as i64;
        if xi >= -n / 2 && xi < n / 2 {
            Some(xi.rem_euclid(n) as usize)
        } else {
            None
        }
    }

    /// Index of the grid point `-x_j`.
    #[inline]
    pub fn reflect(&self, j: usize) -> usize {
        (self.n_modes - j) % self.n_modes
    }

    /// The 2N grid used for zero-padded products.
    pub fn fine(&self) -> Arc<PeriodicGrid> {
        self.fine
            .get_or_init(|| PeriodicGrid::new(2 * self.n_modes).expect("2N is a valid grid"))
            .clone()
    }

    fn dft(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        let scale = 1.0 / self.n_modes as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    fn idft(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        self.inverse.process(&mut spectrum);
        spectrum.into_iter().map(|c| c.re).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Odd,
    Even,
}

impl Parity {
    pub fn as_str(self) -> &'static str {
        match self {
            Parity::Odd => "odd",
            Parity::Even => "even",
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Real samples of a periodic function on a [`PeriodicGrid`].
#[derive(Debug, Clone)]
pub struct RealField {
    grid: Arc<PeriodicGrid>,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: Arc<PeriodicGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_modes {
            return Err(Error::InvalidGrid(format!(
                "field has {} samples but the grid has {} points",
                values.len(),
                grid.n_modes
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: &Arc<PeriodicGrid>) -> Self {
        Self {
            values: vec![0.0; grid.n_modes],
            grid: grid.clone(),
        }
    }

    pub fn from_fn(grid: &Arc<PeriodicGrid>, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: grid.points.iter().map(|&x| f(x)).collect(),
            grid: grid.clone(),
        }
    }

    pub fn grid(&self) -> &Arc<PeriodicGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `‖f‖` in L²(-π, π) via the trapezoidal rule.
    pub fn l2_norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.grid.spacing() * self.values.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn same_grid(&self, other: &RealField) -> Result<()> {
        if self.grid.n_modes != other.grid.n_modes {
            return Err(Error::GridMismatch {
                left: self.grid.n_modes,
                right: other.grid.n_modes,
            });
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> RealField {
        RealField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &RealField, f: impl Fn(f64, f64) -> f64) -> Result<RealField> {
        self.same_grid(other)?;
        Ok(RealField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scaled(&self, alpha: f64) -> RealField {
        self.map(|v| alpha * v)
    }

    /// Raw DFT divided by `N`, in transform order.
    pub fn spectrum(&self) -> Vec<Complex64> {
        self.grid.dft(&self.values)
    }

    /// Fourier coefficients `c_ξ` with `f(x) = Σ c_ξ e^{iξx}`, in transform order.
    pub fn coefficients(&self) -> Vec<Complex64> {
        let mut c = self.spectrum();
        for (ck, &xi) in c.iter_mut().zip(&self.grid.wavenumbers) {
            if xi & 1 != 0 {
                *ck = -*ck;
            }
        }
        c
    }

    /// Inverse of [`RealField::coefficients`]. Imaginary residue is discarded.
    pub fn from_coefficients(grid: &Arc<PeriodicGrid>, coeffs: &[Complex64]) -> Result<Self> {
        if coeffs.len() != grid.n_modes {
            return Err(Error::InvalidGrid(format!(
                "{} coefficients for a grid of {} points",
                coeffs.len(),
                grid.n_modes
            )));
        }
        let raw = coeffs
            .iter()
            .zip(&grid.wavenumbers)
            .map(|(&c, &xi)| if xi & 1 != 0 { -c } else { c })
            .collect();
        Ok(Self {
            grid: grid.clone(),
            values: grid.idft(raw),
        })
    }

    /// Applies the Fourier multiplier `symbol(ξ)` to the field.
    pub fn apply_multiplier(&self, symbol: impl Fn(i64) -> Complex64) -> RealField {
        let mut spec = self.spectrum();
        for (c, &xi) in spec.iter_mut().zip(&self.grid.wavenumbers) {
            *c *= symbol(xi);
        }
        RealField {
            grid: self.grid.clone(),
            values: self.grid.idft(spec),
        }
    }

    /// Trigonometric interpolation onto the 2N grid.
    pub fn refine(&self) -> RealField {
        let fine = self.grid.fine();
        let n = self.grid.n_modes;
        let coarse = self.coefficients();
        let mut padded = vec![Complex64::new(0.0, 0.0); 2 * n];
        for (k, &xi) in self.grid.wavenumbers.iter().enumerate() {
            if xi == -(n as i64) / 2 {
                // split the unpaired Nyquist mode symmetrically
                let half = coarse[k] * 0.5;
                padded[fine.index_of(xi).unwrap()] += half;
                padded[fine.index_of(-xi).unwrap()] += half;
            } else {
                padded[fine.index_of(xi).unwrap()] = coarse[k];
            }
        }
        RealField::from_coefficients(&fine, &padded).expect("padded length matches")
    }

    /// Spectral truncation of a field living on `self.grid().fine()` back onto `coarse`.
    pub fn truncate_to(&self, coarse: &Arc<PeriodicGrid>) -> Result<RealField> {
        if self.grid.n_modes != 2 * coarse.n_modes {
            return Err(Error::GridMismatch {
                left: self.grid.n_modes,
                right: 2 * coarse.n_modes,
            });
        }
        let fine_c = self.coefficients();
        let kept: Vec<Complex64> = coarse
            .wavenumbers
            .iter()
            .map(|&xi| fine_c[self.grid.index_of(xi).unwrap()])
            .collect();
        RealField::from_coefficients(coarse, &kept)
    }
}

/// `(-Δ)^s f`: mode `ξ` scaled by `|ξ|^{2s}`, the Nyquist mode included.
pub fn frac_laplacian(f: &RealField, s: f64) -> Result<RealField> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::domain(format!(
            "fractional exponent s must lie in (0, 1], got {s}"
        )));
    }
    Ok(f.apply_multiplier(|xi| Complex64::new(frac_symbol(xi, s), 0.0)))
}

#[inline]
pub fn frac_symbol(xi: i64, s: f64) -> f64 {
    if xi == 0 {
        0.0
    } else {
        (xi.unsigned_abs() as f64).powf(2.0 * s)
    }
}

/// Spectral derivative `iξ f̂(ξ)` with the unpaired Nyquist mode dropped.
pub fn derivative(f: &RealField) -> RealField {
    let nyquist = -(f.grid.n_modes as i64) / 2;
    f.apply_multiplier(|xi| {
        if xi == nyquist {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, xi as f64)
        }
    })
}

/// Trapezoidal approximation of `∫_{-π}^{π} f g dx`.
pub fn inner_product(f: &RealField, g: &RealField) -> Result<f64> {
    f.same_grid(g)?;
    let sum: f64 = f.values.iter().zip(&g.values).map(|(a, b)| a * b).sum();
    Ok(f.grid.spacing() * sum)
}

/// `(f(x) ∓ f(-x)) / 2` computed by index reflection.
pub fn parity_project(f: &RealField, parity: Parity) -> RealField {
    let grid = &f.grid;
    let sign = match parity {
        Parity::Odd => -1.0,
        Parity::Even => 1.0,
    };
    let values = (0..grid.n_modes)
        .map(|j| 0.5 * (f.values[j] + sign * f.values[grid.reflect(j)]))
        .collect();
    RealField {
        grid: grid.clone(),
        values,
    }
}

/// Max-norm distance from `f` to its projection onto `parity`.
pub fn parity_defect(f: &RealField, parity: Parity) -> f64 {
    let p = parity_project(f, parity);
    f.values
        .iter()
        .zip(&p.values)
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
}

/// Pointwise product of several fields, optionally zero-padded to 2N first.
pub fn product(factors: &[&RealField], dealias: bool) -> Result<RealField> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| Error::domain("product of zero factors"))?;
    for f in rest {
        first.same_grid(f)?;
    }
    if !dealias {
        let mut out = (*first).clone();
        for f in rest {
            out.values
                .iter_mut()
                .zip(&f.values)
                .for_each(|(a, b)| *a *= b);
        }
        return Ok(out);
    }
    let mut out = first.refine();
    for f in rest {
        let r = f.refine();
        out.values
            .iter_mut()
            .zip(&r.values)
            .for_each(|(a, b)| *a *= b);
    }
    out.truncate_to(&first.grid)
}
