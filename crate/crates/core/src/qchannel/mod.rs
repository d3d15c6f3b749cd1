//! Single-qubit dephasing channels.
//!
//! A dephasing channel leaves populations untouched and multiplies the
//! coherence by a real factor `Λ(t)`. Two microscopic models supply `Λ`:
//! classical `1/f^α` noise ([`lambda_classical`]) and a zero-temperature
//! boson bath ([`lambda_quantum`]).

mod colored;
mod gamma;
mod ohmic;
pub mod quadrature;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use colored::{
    color_weight, lambda_classical, rtn_kernel, ColoredNoiseParams, ALPHA_ONE_THRESHOLD,
    KERNEL_BRANCH_THRESHOLD,
};
pub use gamma::gamma_function;
pub use ohmic::{decoherence_exponent, lambda_quantum, OhmicBathParams, OHMIC_THRESHOLD};

/// Tolerance used when checking density-matrix invariants.
pub const STATE_TOL: f64 = 1e-12;

/// A qubit density matrix `[[a00, a01], [conj(a01), a11]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    a00: f64,
    a11: f64,
    a01: Complex64,
}

impl DensityMatrix {
    /// Validates trace, positivity and purity bounds.
    pub fn new(a00: f64, a11: f64, a01: Complex64) -> Result<Self> {
        let rho = DensityMatrix { a00, a11, a01 };
        rho.check()?;
        Ok(rho)
    }

    fn check(&self) -> Result<()> {
        let finite = self.a00.is_finite()
            && self.a11.is_finite()
            && self.a01.re.is_finite()
            && self.a01.im.is_finite();
        if !finite {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        if !(-STATE_TOL..=1.0 + STATE_TOL).contains(&self.a00)
            || !(-STATE_TOL..=1.0 + STATE_TOL).contains(&self.a11)
        {
            return Err(Error::InvalidState(format!(
                "populations ({}, {}) outside [0, 1]",
                self.a00, self.a11
            )));
        }
        if (self.trace() - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {} != 1", self.trace())));
        }
        if self.determinant() < -STATE_TOL {
            return Err(Error::InvalidState(format!(
                "negative determinant {}",
                self.determinant()
            )));
        }
        Ok(())
    }

    /// `|ψ⟩ = β₁|0⟩ + β₂|1⟩`, normalized on the way in.
    pub fn from_amplitudes(beta1: Complex64, beta2: Complex64) -> Result<Self> {
        let norm = beta1.norm_sqr() + beta2.norm_sqr();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidState("zero or non-finite amplitudes".into()));
        }
        let a00 = beta1.norm_sqr() / norm;
        DensityMatrix::new(a00, 1.0 - a00, beta1 * beta2.conj() / norm)
    }

    /// `ρ = (I + b·σ)/2`; requires `|b| ≤ 1`.
    pub fn from_bloch(b: [f64; 3]) -> Result<Self> {
        let a00 = 0.5 * (1.0 + b[2]);
        DensityMatrix::new(a00, 1.0 - a00, Complex64::new(0.5 * b[0], -0.5 * b[1]))
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix {
            a00: 0.5,
            a11: 0.5,
            a01: Complex64::new(0.0, 0.0),
        }
    }

    pub fn a00(&self) -> f64 {
        self.a00
    }

    pub fn a11(&self) -> f64 {
        self.a11
    }

    pub fn a01(&self) -> Complex64 {
        self.a01
    }

    pub fn trace(&self) -> f64 {
        self.a00 + self.a11
    }

    pub fn determinant(&self) -> f64 {
        self.a00 * self.a11 - self.a01.norm_sqr()
    }

    /// `Tr[ρ²]`.
    pub fn purity(&self) -> f64 {
        self.a00 * self.a00 + self.a11 * self.a11 + 2.0 * self.a01.norm_sqr()
    }

    /// `(Tr[σx ρ], Tr[σy ρ], Tr[σz ρ])`.
    pub fn bloch(&self) -> [f64; 3] {
        [2.0 * self.a01.re, -2.0 * self.a01.im, self.a00 - self.a11]
    }
}

/// Applies the dephasing map with coefficient `lam`: populations are kept,
/// the coherence is scaled by `lam`.
pub fn dephase(rho0: &DensityMatrix, lam: f64) -> Result<DensityMatrix> {
    if !(lam.abs() <= 1.0) {
        return Err(Error::domain(format!(
            "dephasing coefficient {lam} outside [-1, 1]"
        )));
    }
    Ok(DensityMatrix {
        a01: rho0.a01 * lam,
        ..*rho0
    })
}

/// Which microscopic model generates `Λ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Classical,
    Quantum,
}

impl NoiseKind {
    pub fn parameter_symbol(&self) -> &'static str {
        match self {
            NoiseKind::Classical => "alpha",
            NoiseKind::Quantum => "s",
        }
    }
}

impl std::fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NoiseKind::Classical => "classical",
            NoiseKind::Quantum => "quantum",
        })
    }
}

/// Physical constants shared by every class of a model; the class parameter
/// (`α` or `s`) is supplied per evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathConstants {
    pub gamma1: f64,
    pub gamma2: f64,
    pub quad_tol: f64,
    pub omega_c: f64,
}

impl Default for BathConstants {
    fn default() -> Self {
        BathConstants {
            gamma1: ColoredNoiseParams::DEFAULT_GAMMA1,
            gamma2: ColoredNoiseParams::DEFAULT_GAMMA2,
            quad_tol: ColoredNoiseParams::DEFAULT_QUAD_TOL,
            omega_c: 1.0,
        }
    }
}

impl BathConstants {
    /// `Λ(t)` of model `kind` with class parameter `nu` (`α` or `s`).
    pub fn lambda(&self, kind: NoiseKind, t: f64, nu: f64) -> Result<f64> {
        match kind {
            NoiseKind::Classical => {
                let p = ColoredNoiseParams::new(nu, self.gamma1, self.gamma2, self.quad_tol)?;
                lambda_classical(t, &p)
            }
            NoiseKind::Quantum => lambda_quantum(t, &OhmicBathParams::new(nu, self.omega_c)?),
        }
    }
}
