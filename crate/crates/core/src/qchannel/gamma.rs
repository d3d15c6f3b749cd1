//! Complete gamma function for real arguments.
//!
//! Lanczos approximation (g = 7, nine terms) on `x >= 1/2`, reflection below.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;

const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `sin(πx)` with the argument reduced first, so it vanishes exactly at integers.
fn sin_pi(x: f64) -> f64 {
    let r = x.rem_euclid(2.0);
    let (r, sign) = if r > 1.0 { (r - 1.0, -1.0) } else { (r, 1.0) };
    let v = if r == 0.0 || r == 1.0 {
        0.0
    } else if r <= 0.5 {
        (PI * r).sin()
    } else {
        (PI * (1.0 - r)).sin()
    };
    sign * v
}

fn lanczos(x: f64) -> f64 {
    // Γ(x) = Γ(z + 1) with z = x - 1
    let z = x - 1.0;
    let mut series = LANCZOS_COEFFS[0];
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        series += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * series
}

/// The complete gamma function Γ(x).
///
/// Non-positive integers are poles and return [`Error::Pole`].
pub fn gamma_function(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("gamma of non-finite argument {x}")));
    }
    if x <= 0.0 && x == x.floor() {
        return Err(Error::Pole(x));
    }
    if x < 0.5 {
        Ok(PI / (sin_pi(x) * lanczos(1.0 - x)))
    } else {
        Ok(lanczos(x))
    }
}
