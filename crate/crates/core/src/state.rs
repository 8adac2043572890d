//! State carriers for the two tracks.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix2;

/// Reduced density matrix in the (a, b) basis.
///
/// Only ρ_aa and ρ_ab are stored; ρ_bb = 1 − ρ_aa and ρ_ba = ρ_ab*, so unit
/// trace and hermiticity hold by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityMatrix {
    pub rho_aa: f64,
    pub rho_ab: Complex64,
}

impl DensityMatrix {
    pub fn new(rho_aa: f64, rho_ab: Complex64) -> Self {
        Self { rho_aa, rho_ab }
    }

    /// |a⟩⟨a|
    pub fn excited() -> Self {
        Self::new(1.0, Complex64::new(0.0, 0.0))
    }

    /// |b⟩⟨b|
    pub fn ground() -> Self {
        Self::new(0.0, Complex64::new(0.0, 0.0))
    }

    pub fn maximally_mixed() -> Self {
        Self::new(0.5, Complex64::new(0.0, 0.0))
    }

    pub fn rho_bb(&self) -> f64 {
        1.0 - self.rho_aa
    }

    pub fn rho_ba(&self) -> Complex64 {
        self.rho_ab.conj()
    }

    pub fn to_matrix(&self) -> ComplexMatrix2 {
        ComplexMatrix2::new(
            Complex64::new(self.rho_aa, 0.0),
            self.rho_ab,
            self.rho_ba(),
            Complex64::new(self.rho_bb(), 0.0),
        )
    }

    /// Projects a general matrix onto the hermitian unit-trace form and
    /// returns the size of what was discarded (max of trace error and
    /// anti-hermitian part).
    pub fn from_matrix(m: &ComplexMatrix2) -> (Self, f64) {
        let herm = (m.get(0, 1) - m.get(1, 0).conj()).norm() * 0.5;
        let diag_im = m.get(0, 0).im.abs().max(m.get(1, 1).im.abs());
        let trace = (m.trace() - Complex64::new(1.0, 0.0)).norm();
        let rho_ab = (m.get(0, 1) + m.get(1, 0).conj()) * 0.5;
        let rho_aa = 0.5 * (1.0 + m.get(0, 0).re - m.get(1, 1).re);
        (Self::new(rho_aa, rho_ab), herm.max(diag_im).max(trace))
    }

    /// Eigenvalues ½ ± √((ρ_aa − ½)² + |ρ_ab|²), ascending.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let r = ((self.rho_aa - 0.5).powi(2) + self.rho_ab.norm_sqr()).sqrt();
        (0.5 - r, 0.5 + r)
    }

    pub fn is_physical(&self, tol: f64) -> bool {
        let (lo, hi) = self.eigenvalues();
        lo >= -tol && hi <= 1.0 + tol
    }

    /// Checked constructor for user-supplied initial states.
    pub fn physical(rho_aa: f64, rho_ab: Complex64, tol: f64) -> Result<Self> {
        let d = Self::new(rho_aa, rho_ab);
        if !rho_aa.is_finite() || !rho_ab.is_finite() || !d.is_physical(tol) {
            return Err(Error::InvalidParams(vec![format!(
                "initial density matrix (rho_aa={rho_aa}, rho_ab={rho_ab}) is not positive semidefinite"
            )]));
        }
        Ok(d)
    }
}

/// Amplitudes (C_a, C_b) of the non-hermitian track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmplitudePair {
    pub c_a: Complex64,
    pub c_b: Complex64,
}

impl AmplitudePair {
    pub fn new(c_a: Complex64, c_b: Complex64) -> Self {
        Self { c_a, c_b }
    }

    pub fn upper() -> Self {
        Self::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c_a.norm_sqr() + self.c_b.norm_sqr()
    }

    pub fn population_a(&self) -> f64 {
        self.c_a.norm_sqr()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.c_a * s, self.c_b * s)
    }

    pub fn to_array(self) -> [Complex64; 2] {
        [self.c_a, self.c_b]
    }

    pub fn from_array(v: [Complex64; 2]) -> Self {
        Self::new(v[0], v[1])
    }

    /// Amplitudes of a pure density matrix, with C_a real and non-negative.
    pub fn from_pure(rho: &DensityMatrix, tol: f64) -> Result<Self> {
        let (lo, _) = rho.eigenvalues();
        if lo.abs() > tol {
            return Err(Error::InvalidParams(vec![
                "initial state is mixed; the non-hermitian track needs a pure state".into(),
            ]));
        }
        if rho.rho_aa > tol {
            let ca = rho.rho_aa.sqrt();
            Ok(Self::new(Complex64::new(ca, 0.0), rho.rho_ba() / ca))
        } else {
            Ok(Self::new(
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
            ))
        }
    }
}
