//! Complete elliptic integral `K(k)` and the Jacobi elliptic sine, enough to
//! build the closed-form `s = 1` standing wave
//! `φ(x) = η sn(2K x / π, k)` with `η = 2√2 k K / π` and
//! `ω = 4 (1 + k²) K² / π²`.
//!
//! All functions take the modulus `k`, not the parameter `m = k²`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{PeriodicGrid, RealField};
use crate::wave::{residual, WaveProfile};

/// Landen descent stops once the modulus drops below this.
const LANDEN_FLOOR: f64 = 1e-14;
/// Upper end of the bisection bracket for `ω ↦ k`.
const K_BRACKET_HI: f64 = 1.0 - 1e-12;

fn check_modulus(k: f64) -> Result<()> {
    if (0.0..1.0).contains(&k) {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "modulus k must lie in [0, 1), got {k}"
        )))
    }
}

/// Arithmetic–geometric mean of two positive numbers.
pub fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        if (a - b).abs() <= f64::EPSILON * a {
            break;
        }
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    0.5 * (a + b)
}

/// `K(k) = π / (2 AGM(1, √(1 - k²)))`.
pub fn complete_k(k: f64) -> Result<f64> {
    check_modulus(k)?;
    let kp = ((1.0 - k) * (1.0 + k)).sqrt();
    Ok(PI / (2.0 * agm(1.0, kp)))
}

/// Jacobi `sn(u, k)` by descending Landen transformation.
pub fn jacobi_sn(u: f64, k: f64) -> Result<f64> {
    check_modulus(k)?;
    Ok(sn_landen(u, k))
}

fn sn_landen(u: f64, k: f64) -> f64 {
    if k < LANDEN_FLOOR {
        return u.sin();
    }
    // k₁ = (1 - k')/(1 + k') written without cancellation
    let kp = ((1.0 - k) * (1.0 + k)).sqrt();
    let k1 = k * k / ((1.0 + kp) * (1.0 + kp));
    let v = sn_landen(u / (1.0 + k1), k1);
    (1.0 + k1) * v / (1.0 + k1 * v * v)
}

/// `ω(k) = 4 (1 + k²) K(k)² / π²`.
pub fn omega_of_k(k: f64) -> Result<f64> {
    let big_k = complete_k(k)?;
    Ok(4.0 * (1.0 + k * k) * big_k * big_k / (PI * PI))
}

/// Inverts [`omega_of_k`] by bisection on `(0, 1 - 10⁻¹²)`.
pub fn k_of_omega(omega: f64) -> Result<f64> {
    if !(omega > 1.0) {
        return Err(Error::domain(format!(
            "only the zero solution exists for omega <= 1 (got {omega})"
        )));
    }
    let (mut lo, mut hi) = (0.0_f64, K_BRACKET_HI);
    if omega_of_k(hi)? < omega {
        return Err(Error::domain(format!(
            "omega = {omega} needs a modulus beyond the bisection bracket"
        )));
    }
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if omega_of_k(mid)? < omega {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Parameters of the closed-form `s = 1` wave for one modulus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticParams {
    pub k: f64,
    pub big_k: f64,
    pub eta: f64,
    pub omega: f64,
}

impl EllipticParams {
    pub fn from_k(k: f64) -> Result<Self> {
        let big_k = complete_k(k)?;
        Ok(Self {
            k,
            big_k,
            eta: 2.0 * std::f64::consts::SQRT_2 * k * big_k / PI,
            omega: 4.0 * (1.0 + k * k) * big_k * big_k / (PI * PI),
        })
    }

    pub fn from_omega(omega: f64) -> Result<Self> {
        Self::from_k(k_of_omega(omega)?)
    }

    /// `η sn(2K x / π, k)`.
    pub fn profile_at(&self, x: f64) -> f64 {
        self.eta * sn_landen(2.0 * self.big_k * x / PI, self.k)
    }
}

/// Samples the exact `s = 1` wave of frequency `omega` on `grid`.
pub fn exact_profile(omega: f64, grid: &Arc<PeriodicGrid>) -> Result<WaveProfile> {
    let params = EllipticParams::from_omega(omega)?;
    let field = RealField::from_fn(grid, |x| params.profile_at(x));
    let res = residual(&field, omega, 1.0, false)?;
    Ok(WaveProfile {
        field,
        s: 1.0,
        omega,
        residual_norm: res.max_norm(),
        newton_iters: 0,
        residual_history: Vec::new(),
    })
}
