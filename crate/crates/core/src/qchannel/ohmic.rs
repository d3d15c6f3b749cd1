//! Pure dephasing from a zero-temperature bath of bosonic oscillators with an
//! Ohmic-family spectral density `J(ω) ∝ ω^s ω_c^{1-s} e^{-ω/ω_c}`.

use serde::{Deserialize, Serialize};

use super::gamma::gamma_function;
use crate::error::{Error, Result};

/// `|s - 1|` below which the Ohmic (logarithmic) branch is used.
pub const OHMIC_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OhmicBathParams {
    s: f64,
    omega_c: f64,
}

impl OhmicBathParams {
    pub fn new(s: f64, omega_c: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::domain(format!("Ohmicity must be positive, got {s}")));
        }
        if !(omega_c > 0.0 && omega_c.is_finite()) {
            return Err(Error::domain(format!(
                "cutoff frequency must be positive, got {omega_c}"
            )));
        }
        Ok(OhmicBathParams { s, omega_c })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn omega_c(&self) -> f64 {
        self.omega_c
    }
}

/// Decoherence exponent `Γ(t, ω_c, s)`.
pub fn decoherence_exponent(t: f64, p: &OhmicBathParams) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("time must be non-negative, got {t}")));
    }
    let wt = p.omega_c * t;
    // ln(1 + ω²t²) computed without losing small arguments
    let log_growth = (wt * wt).ln_1p();
    let e = p.s - 1.0;
    if e.abs() < OHMIC_THRESHOLD {
        return Ok(0.5 * log_growth);
    }
    // 1 - cos(eθ)(1+ω²t²)^{-e/2}
    //   = -expm1(-e·L/2) + 2 sin²(eθ/2) (1+ω²t²)^{-e/2}
    let theta = wt.atan();
    let damp = (-0.5 * e * log_growth).exp();
    let half = (0.5 * e * theta).sin();
    let bracket = -(-0.5 * e * log_growth).exp_m1() + 2.0 * half * half * damp;
    Ok(gamma_function(e)? * bracket)
}

/// Dephasing coefficient `Λ_q(t, s) = exp(-Γ(t, ω_c, s))`.
pub fn lambda_quantum(t: f64, p: &OhmicBathParams) -> Result<f64> {
    Ok((-decoherence_exponent(t, p)?).exp())
}
