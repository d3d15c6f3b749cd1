//! Qubit SIC-POVM tomography: states to outcome probabilities and back.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::qchannel::DensityMatrix;

/// Four outcome probabilities of a qubit SIC-POVM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SicVector(pub [f64; 4]);

impl SicVector {
    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// A qubit SIC-POVM given by its tetrahedron of Bloch directions `a_k`;
/// the effects are `M_k = (I + a_k·σ)/4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SicPovm {
    dirs: [[f64; 3]; 4],
}

impl Default for SicPovm {
    fn default() -> Self {
        SicPovm::tetrahedron()
    }
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl SicPovm {
    /// Directions `(1,1,1), (1,-1,-1), (-1,1,-1), (-1,-1,1)` over `√3`.
    pub fn tetrahedron() -> Self {
        let c = 1.0 / 3f64.sqrt();
        SicPovm {
            dirs: [[c, c, c], [c, -c, -c], [-c, c, -c], [-c, -c, c]],
        }
    }

    /// Accepts any four unit vectors with pairwise inner products `-1/3`.
    pub fn from_directions(dirs: [[f64; 3]; 4]) -> Result<Self> {
        for (k, a) in dirs.iter().enumerate() {
            if (dot(a, a) - 1.0).abs() > 1e-12 {
                return Err(Error::domain(format!("direction {k} is not a unit vector")));
            }
            for b in &dirs[k + 1..] {
                if (dot(a, b) + 1.0 / 3.0).abs() > 1e-12 {
                    return Err(Error::domain(
                        "directions do not form a regular tetrahedron",
                    ));
                }
            }
        }
        Ok(SicPovm { dirs })
    }

    pub fn directions(&self) -> &[[f64; 3]; 4] {
        &self.dirs
    }

    /// Hilbert–Schmidt product `Tr(M_k M_j) = (1 + a_k·a_j)/8`.
    pub fn hs_product(&self, k: usize, j: usize) -> f64 {
        (1.0 + dot(&self.dirs[k], &self.dirs[j])) / 8.0
    }
}

/// `p_k = Tr[M_k ρ] = (1 + b·a_k)/4`.
pub fn sic_encode(rho: &DensityMatrix, povm: &SicPovm) -> SicVector {
    let b = rho.bloch();
    SicVector(povm.dirs.map(|a| 0.25 * (1.0 + dot(&b, &a))))
}

/// Outcome of inverting the SIC map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decoded {
    Physical(DensityMatrix),
    /// The reconstructed Bloch vector leaves the unit ball (noisy input).
    NonPhysical {
        bloch: [f64; 3],
    },
}

impl Decoded {
    pub fn bloch(&self) -> [f64; 3] {
        match self {
            Decoded::Physical(rho) => rho.bloch(),
            Decoded::NonPhysical { bloch } => *bloch,
        }
    }

    pub fn state(&self) -> Option<&DensityMatrix> {
        match self {
            Decoded::Physical(rho) => Some(rho),
            Decoded::NonPhysical { .. } => None,
        }
    }
}

/// Inverse of [`sic_encode`]: `b = 3 Σ p_k a_k`, `ρ = (I + b·σ)/2`.
pub fn sic_decode(p: &SicVector, povm: &SicPovm) -> Decoded {
    let mut b = [0.0; 3];
    for (pk, a) in p.0.iter().zip(&povm.dirs) {
        for i in 0..3 {
            b[i] += 3.0 * pk * a[i];
        }
    }
    let norm = dot(&b, &b).sqrt();
    if norm > 1.0 + 1e-9 {
        return Decoded::NonPhysical { bloch: b };
    }
    if norm > 1.0 {
        b.iter_mut().for_each(|x| *x /= norm);
    }
    match DensityMatrix::from_bloch(b) {
        Ok(rho) => Decoded::Physical(rho),
        Err(_) => Decoded::NonPhysical { bloch: b },
    }
}

/// Adds independent `N(0, sigma²)` noise to every component. No clipping and
/// no renormalization.
pub fn perturb<R: Rng + ?Sized>(p: &SicVector, sigma: f64, rng: &mut R) -> Result<SicVector> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!(
            "noise level must be non-negative, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(*p);
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::domain(e.to_string()))?;
    Ok(SicVector(p.0.map(|x| x + normal.sample(rng))))
}
