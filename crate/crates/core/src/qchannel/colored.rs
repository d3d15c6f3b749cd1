//! Classical dephasing from an ensemble of random telegraph fluctuators whose
//! switching rates are distributed so that the total spectrum is `1/f^α`.

use serde::{Deserialize, Serialize};

use super::quadrature;
use crate::error::{Error, Result};

/// `|γ - 2|` below which the kernel switches to its series in `δ²`.
pub const KERNEL_BRANCH_THRESHOLD: f64 = 1e-6;

/// `|α - 1|` below which the rate density uses its logarithmic form.
pub const ALPHA_ONE_THRESHOLD: f64 = 1e-9;

const MAX_SEGMENTS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColoredNoiseParams {
    alpha: f64,
    gamma1: f64,
    gamma2: f64,
    quad_tol: f64,
}

impl ColoredNoiseParams {
    pub const DEFAULT_GAMMA1: f64 = 1e-4;
    pub const DEFAULT_GAMMA2: f64 = 1e4;
    pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

    pub fn new(alpha: f64, gamma1: f64, gamma2: f64, quad_tol: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::domain(format!(
                "noise color must be positive, got {alpha}"
            )));
        }
        if !(gamma1 > 0.0 && gamma1 < gamma2 && gamma2.is_finite()) {
            return Err(Error::domain(format!(
                "switching-rate bounds must satisfy 0 < gamma1 < gamma2, got [{gamma1}, {gamma2}]"
            )));
        }
        if !(quad_tol > 0.0) {
            return Err(Error::domain("quad_tol must be positive"));
        }
        Ok(ColoredNoiseParams {
            alpha,
            gamma1,
            gamma2,
            quad_tol,
        })
    }

    /// Rates in `[1e-4, 1e4]`, quadrature tolerance `1e-10`.
    pub fn with_alpha(alpha: f64) -> Result<Self> {
        Self::new(
            alpha,
            Self::DEFAULT_GAMMA1,
            Self::DEFAULT_GAMMA2,
            Self::DEFAULT_QUAD_TOL,
        )
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    pub fn gamma2(&self) -> f64 {
        self.gamma2
    }

    pub fn quad_tol(&self) -> f64 {
        self.quad_tol
    }

    /// Same rate bounds and tolerance, different color.
    pub fn recolor(&self, alpha: f64) -> Result<Self> {
        Self::new(alpha, self.gamma1, self.gamma2, self.quad_tol)
    }
}

/// Coherence decay `G(t, γ)` of a qubit coupled to one symmetric random
/// telegraph fluctuator with switching rate `γ`.
pub fn rtn_kernel(t: f64, gamma: f64) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("time must be non-negative, got {t}")));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::domain(format!(
            "switching rate must be positive, got {gamma}"
        )));
    }
    Ok(rtn_kernel_unchecked(t, gamma))
}

pub(crate) fn rtn_kernel_unchecked(t: f64, gamma: f64) -> f64 {
    if (gamma - 2.0).abs() < KERNEL_BRANCH_THRESHOLD {
        // cosh(δt) and sinh(δt)/δ as power series in z = δ²t²
        let z = (gamma - 2.0) * (gamma + 2.0) * t * t;
        let cosh = 1.0 + z / 2.0 * (1.0 + z / 12.0 * (1.0 + z / 30.0));
        let sinhc = 1.0 + z / 6.0 * (1.0 + z / 20.0 * (1.0 + z / 42.0));
        (-gamma * t).exp() * (cosh + gamma * t * sinhc)
    } else if gamma > 2.0 {
        let delta = ((gamma - 2.0) * (gamma + 2.0)).sqrt();
        // γ - δ = 4 / (γ + δ) without cancellation
        let slow = (-4.0 / (gamma + delta) * t).exp();
        let fast = (-(gamma + delta) * t).exp();
        0.5 * (slow + fast) + 0.5 * gamma / delta * (slow - fast)
    } else {
        let omega = ((2.0 - gamma) * (2.0 + gamma)).sqrt();
        (-gamma * t).exp() * ((omega * t).cos() + gamma / omega * (omega * t).sin())
    }
}

/// Density of switching rates producing a `1/f^α` spectrum on `[γ₁, γ₂]`.
pub fn color_weight(gamma: f64, p: &ColoredNoiseParams) -> Result<f64> {
    if !(gamma >= p.gamma1 && gamma <= p.gamma2) {
        return Err(Error::domain(format!(
            "switching rate {gamma} outside [{}, {}]",
            p.gamma1, p.gamma2
        )));
    }
    Ok(color_weight_unchecked(gamma, p))
}

pub(crate) fn color_weight_unchecked(gamma: f64, p: &ColoredNoiseParams) -> f64 {
    let span = (p.gamma2 / p.gamma1).ln();
    let a = p.alpha - 1.0;
    if a.abs() < ALPHA_ONE_THRESHOLD {
        return 1.0 / (gamma * span);
    }
    // (α-1)(γ₁γ₂)^{α-1} / (γ^α (γ₂^{α-1} - γ₁^{α-1}))
    //   = a / expm1(a·ln(γ₂/γ₁)) · exp(a·ln γ₂ - α·ln γ)
    a / (a * span).exp_m1() * (a * p.gamma2.ln() - p.alpha * gamma.ln()).exp()
}

/// Dephasing coefficient `Λ_c(t, α) = ∫ G(t, γ) p_α(γ) dγ` over the rate band.
///
/// Integrated in `u = ln γ`, split at the kernel's branch point `γ = 2` when it
/// lies inside the band.
pub fn lambda_classical(t: f64, p: &ColoredNoiseParams) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("time must be non-negative, got {t}")));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    let integrand = |u: f64| {
        let gamma = u.exp();
        rtn_kernel_unchecked(t, gamma) * color_weight_unchecked(gamma, p) * gamma
    };
    let lo = p.gamma1.ln();
    let hi = p.gamma2.ln();
    let split = 2f64.ln();
    let value = if lo < split && split < hi {
        let tol = 0.5 * p.quad_tol;
        let left = quadrature::integrate(integrand, lo, split, tol, MAX_SEGMENTS)?;
        let right = quadrature::integrate(integrand, split, hi, tol, MAX_SEGMENTS)?;
        left.value + right.value
    } else {
        quadrature::integrate(integrand, lo, hi, p.quad_tol, MAX_SEGMENTS)?.value
    };
    Ok(value.clamp(-1.0, 1.0))
}

#[cfg(test)]
#[allow(clippy::approx_constant)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    /// Direct complex evaluation with δ = sqrt(γ² - 4) possibly imaginary.
    fn kernel_complex_oracle(t: f64, gamma: f64) -> f64 {
        let delta = Complex64::new(gamma * gamma - 4.0, 0.0).sqrt();
        // e^{-γt}cosh(δt) and e^{-γt}sinh(δt) written as exponentials so large γt stays finite
        let up = ((delta - gamma) * t).exp();
        let down = ((-delta - gamma) * t).exp();
        let val = 0.5 * (up + down) + gamma / delta * 0.5 * (up - down);
        val.re
    }

    #[test]
    fn kernel_at_zero_time_is_one() {
        for g in [1e-4, 0.5, 2.0, 2.0 + 1e-7, 3.0, 1e4] {
            assert!((rtn_kernel(0.0, g).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn kernel_critical_point() {
        // δ → 0 limit: e^{-2}(1 + 2) = 3e^{-2}
        let expected = 3.0 * (-2.0f64).exp();
        assert!((rtn_kernel(1.0, 2.0).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.406_006).abs() < 1e-6);
        // neighbours evaluated through the ordinary branches
        for g in [2.0 - 1e-6 * 1.5, 2.0 + 1e-6 * 1.5] {
            assert!((rtn_kernel(1.0, g).unwrap() - expected).abs() < 1e-5);
        }
    }

    #[test]
    fn kernel_underdamped_matches_complex_oracle() {
        let s3 = 3f64.sqrt();
        let expected = (-1f64).exp() * (s3.cos() + s3.sin() / s3);
        assert!((rtn_kernel(1.0, 1.0).unwrap() - expected).abs() < 1e-14);
        for &g in &[0.01, 0.7, 1.9, 2.5, 10.0, 300.0] {
            for &t in &[0.1, 1.0, 3.3, 9.0] {
                let k = rtn_kernel(t, g).unwrap();
                let o = kernel_complex_oracle(t, g);
                assert!((k - o).abs() < 1e-10, "t={t} γ={g}: {k} vs {o}");
            }
        }
    }

    #[test]
    fn kernel_continuous_across_branch_point() {
        let eps = 1e-7;
        for t in [0.5, 1.0, 3.0] {
            let up = rtn_kernel(t, 2.0 + eps).unwrap();
            let down = rtn_kernel(t, 2.0 - eps).unwrap();
            assert!((up - down).abs() <= 1e-6);
            // across the threshold edge itself
            let a = rtn_kernel(t, 2.0 + 0.999e-6).unwrap();
            let b = rtn_kernel(t, 2.0 + 1.001e-6).unwrap();
            assert!((a - b).abs() < 1e-9, "t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn kernel_domain_errors() {
        assert!(rtn_kernel(-1.0, 1.0).is_err());
        assert!(rtn_kernel(1.0, 0.0).is_err());
        assert!(rtn_kernel(1.0, -3.0).is_err());
    }

    #[test]
    fn weight_alpha_one_value() {
        let p = ColoredNoiseParams::with_alpha(1.0).unwrap();
        let w = color_weight(1.0, &p).unwrap();
        assert!((w - 1.0 / 1e8f64.ln()).abs() < 1e-15);
        assert!((w - 0.054_286_8).abs() < 1e-7);
    }

    #[test]
    fn weight_continuous_at_alpha_one() {
        let one = ColoredNoiseParams::with_alpha(1.0).unwrap();
        for g in [1e-3, 0.2, 1.0, 7.0, 900.0] {
            let w1 = color_weight(g, &one).unwrap();
            for a in [1.0 - 1e-7, 1.0 + 1e-7] {
                let w = color_weight(g, &one.recolor(a).unwrap()).unwrap();
                assert!((w - w1).abs() < 1e-6 * w1.max(1.0), "γ={g} α={a}");
            }
        }
    }

    #[test]
    fn weight_rejects_out_of_band_rates() {
        let p = ColoredNoiseParams::with_alpha(1.5).unwrap();
        assert!(color_weight(1e-5, &p).is_err());
        assert!(color_weight(2e4, &p).is_err());
        assert!(color_weight(5.0, &p).unwrap() > 0.0);
    }

    #[test]
    fn weight_is_normalized() {
        // high-resolution trapezoid on the log grid, independent of the GK routine
        for alpha in [0.7, 1.0, 1.5] {
            let p = ColoredNoiseParams::with_alpha(alpha).unwrap();
            let (lo, hi) = (p.gamma1().ln(), p.gamma2().ln());
            let n = 200_000;
            let h = (hi - lo) / n as f64;
            let f = |u: f64| {
                let g = u.exp().clamp(p.gamma1(), p.gamma2());
                color_weight(g, &p).unwrap() * g
            };
            let mut s = 0.5 * (f(lo) + f(hi));
            for i in 1..n {
                s += f(lo + i as f64 * h);
            }
            assert!((s * h - 1.0).abs() < 1e-8, "α={alpha}: {}", s * h);
        }
    }

    #[test]
    fn lambda_at_zero_is_one() {
        for alpha in [0.5, 1.0, 2.0] {
            let p = ColoredNoiseParams::with_alpha(alpha).unwrap();
            assert_eq!(lambda_classical(0.0, &p).unwrap(), 1.0);
        }
    }

    // Reference values from a 10⁶-interval composite Simpson rule on the log grid.
    const SIMPSON_T1_ALPHA1: f64 = 0.261_650_570_884_219_2;
    const SIMPSON_T314_ALPHA2: f64 = 0.997_336_975_688_977_7;
    const SIMPSON_T02_ALPHA2: f64 = 0.921_072_942_528_432_9;

    #[test]
    fn lambda_matches_frozen_simpson_values() {
        let one = ColoredNoiseParams::with_alpha(1.0).unwrap();
        let two = ColoredNoiseParams::with_alpha(2.0).unwrap();
        assert!((lambda_classical(1.0, &one).unwrap() - SIMPSON_T1_ALPHA1).abs() < 1e-10);
        assert!((lambda_classical(3.14, &two).unwrap() - SIMPSON_T314_ALPHA2).abs() < 1e-10);
        assert!((lambda_classical(0.2, &two).unwrap() - SIMPSON_T02_ALPHA2).abs() < 1e-10);
    }

    #[test]
    fn early_coherence_decreases_with_color() {
        let mut prev = f64::INFINITY;
        for i in 0..16 {
            let p = ColoredNoiseParams::with_alpha(0.5 + 0.1 * i as f64).unwrap();
            let v = lambda_classical(0.2, &p).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn params_validate() {
        assert!(ColoredNoiseParams::new(0.0, 1e-4, 1e4, 1e-10).is_err());
        assert!(ColoredNoiseParams::new(1.0, 1e4, 1e-4, 1e-10).is_err());
        assert!(ColoredNoiseParams::new(1.0, 1e-4, 1e4, 0.0).is_err());
    }
}
