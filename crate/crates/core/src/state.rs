use std::ops::Deref;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, NEG_EIG_TOL};

pub const TRACE_TOL: f64 = 1e-10;

/// A validated density matrix: Hermitian, positive semidefinite, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::InvalidState(format!(
                "density matrix must be square, got {:?}",
                m.shape()
            )));
        }
        let herm = linalg::hermiticity_residual(&m);
        if herm > linalg::HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (residual {herm:e})")));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let spec = linalg::eig_hermitian(&m)?;
        if let Some(&low) = spec.eigenvalues.first() {
            if low < NEG_EIG_TOL {
                return Err(Error::InvalidState(format!("negative eigenvalue {low:e}")));
            }
        }
        Ok(Self(linalg::hermitize(&m)))
    }

    /// Normalize a positive operator by its trace.
    pub fn from_unnormalized(m: &CMatrix) -> Result<Self> {
        let tr = m.trace().re;
        if tr <= 0.0 {
            return Err(Error::InvalidState(format!(
                "cannot normalize operator with trace {tr:e}"
            )));
        }
        Self::new(m.unscale(tr))
    }

    /// Wrap without checks; callers guarantee the invariants.
    pub(crate) fn new_unchecked(m: CMatrix) -> Self {
        Self(m)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(linalg::identity(dim).unscale(dim as f64))
    }

    pub fn pure(psi: &[linalg::C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        Self::new(linalg::projector(psi).unscale(norm))
    }

    pub fn diagonal(populations: &[f64]) -> Result<Self> {
        Self::new(linalg::diag(populations))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn purity(&self) -> f64 {
        (&self.0 * &self.0).trace().re
    }

    /// `(1 - eps) rho + eps 1/d`.
    pub fn mix_with_identity(&self, eps: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::InvalidArgument(format!("mixing weight {eps} outside [0, 1]")));
        }
        let d = self.dim() as f64;
        Ok(Self(
            self.0.scale(1.0 - eps) + linalg::identity(self.dim()).scale(eps / d),
        ))
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix(linalg::tensor(&self.0, &other.0))
    }

    /// Bloch coordinates `(<sx>, <sy>, <sz>)` of a qubit, with
    /// `sz = |1><1| - |0><0|`. `None` for other dimensions.
    pub fn bloch(&self) -> Option<[f64; 3]> {
        if self.dim() != 2 {
            return None;
        }
        let m = &self.0;
        Some([2.0 * m[(0, 1)].re, -2.0 * m[(0, 1)].im, (m[(1, 1)] - m[(0, 0)]).re])
    }
}

impl Deref for DensityMatrix {
    type Target = CMatrix;

    fn deref(&self) -> &CMatrix {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, diag, real_matrix};

    #[test]
    fn rejects_invalid_states() {
        assert!(DensityMatrix::new(diag(&[0.5, 0.4])).is_err());
        assert!(DensityMatrix::new(diag(&[1.2, -0.2])).is_err());
        assert!(DensityMatrix::new(real_matrix(2, &[0.5, 0.3, 0.0, 0.5])).is_err());
        assert!(DensityMatrix::new(diag(&[0.3, 0.7])).is_ok());
    }

    #[test]
    fn bloch_of_xplus_and_excited() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let xp = DensityMatrix::pure(&[c(s, 0.0), c(s, 0.0)]).unwrap();
        let b = xp.bloch().unwrap();
        assert!((b[0] - 1.0).abs() < 1e-12 && b[1].abs() < 1e-12 && b[2].abs() < 1e-12);
        let e = DensityMatrix::diagonal(&[0.0, 1.0]).unwrap();
        assert_eq!(e.bloch().unwrap(), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn mixing_regularizes_pure_states() {
        let p = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
        let m = p.mix_with_identity(0.1).unwrap();
        assert!((m[(1, 1)].re - 0.05).abs() < 1e-15);
        assert!(p.mix_with_identity(1.5).is_err());
    }
}
