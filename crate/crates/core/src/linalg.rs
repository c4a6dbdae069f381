//! Dense complex linear algebra for small Hilbert spaces.
//!
//! Composite spaces follow one index convention everywhere: the leftmost
//! tensor factor is the most significant (slowest) index. For a two-qubit
//! space `|ab>` has flat index `2a + b`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Eigenvalues are clamped to zero above this (negative) threshold.
pub const NEG_EIG_TOL: f64 = -1e-9;
/// Default eigenvalue floor for logarithms on the support.
pub const LOG_FLOOR: f64 = 1e-12;
/// Tolerance on `h - h^dagger` accepted by [`eig_hermitian`].
pub const HERMITIAN_TOL: f64 = 1e-10;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Build a matrix from real row-major entries.
pub fn real_matrix(dim: usize, entries: &[f64]) -> CMatrix {
    assert_eq!(entries.len(), dim * dim);
    CMatrix::from_fn(dim, dim, |r, k| c(entries[r * dim + k], 0.0))
}

pub fn diag(values: &[f64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |r, k| if r == k { c(values[r], 0.0) } else { ZERO })
}

/// `|psi><psi|` for a (not necessarily normalized) ket.
pub fn projector(psi: &[C64]) -> CMatrix {
    let n = psi.len();
    CMatrix::from_fn(n, n, |r, k| psi[r] * psi[k].conj())
}

/// Computational basis projector `|k><k|` in dimension `dim`.
pub fn basis_projector(dim: usize, k: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    m[(k, k)] = ONE;
    m
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

pub fn trace(m: &CMatrix) -> C64 {
    m.trace()
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// `max |U U^dagger - 1|`.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(&(u * u.adjoint()), &identity(u.nrows()))
}

/// `(h + h^dagger) / 2`.
pub fn hermitize(h: &CMatrix) -> CMatrix {
    (h + h.adjoint()).scale(0.5)
}

/// `U rho U^dagger`.
pub fn conjugate(u: &CMatrix, rho: &CMatrix) -> CMatrix {
    u * rho * u.adjoint()
}

/// Kronecker product; `a` carries the slow index.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Kronecker product of a sequence, leftmost factor slowest.
pub fn tensor_all<'a, I>(factors: I) -> CMatrix
where
    I: IntoIterator<Item = &'a CMatrix>,
{
    factors
        .into_iter()
        .fold(CMatrix::from_element(1, 1, ONE), |acc, f| tensor(&acc, f))
}

fn check_dims(total: usize, dims: &[usize]) -> Result<()> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::InvalidArgument(format!(
            "subsystem dimensions must be non-empty and positive, got {dims:?}"
        )));
    }
    let prod: usize = dims.iter().product();
    if prod != total {
        return Err(Error::InvalidArgument(format!(
            "product of subsystem dimensions {dims:?} = {prod} does not match matrix dimension {total}"
        )));
    }
    Ok(())
}

/// Split a flat index into per-subsystem digits (leftmost most significant).
fn digits(mut index: usize, dims: &[usize], out: &mut [usize]) {
    for (slot, &d) in out.iter_mut().zip(dims).rev() {
        *slot = index % d;
        index /= d;
    }
}

fn flat(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

/// Trace out every subsystem not listed in `keep`.
///
/// The kept subsystems appear in the result in ascending order of their
/// index, regardless of the order in `keep`.
pub fn partial_trace(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    if !m.is_square() {
        return Err(Error::InvalidArgument("partial trace of a non-square matrix".into()));
    }
    check_dims(m.nrows(), dims)?;
    if keep.is_empty() || keep.iter().any(|&k| k >= dims.len()) {
        return Err(Error::InvalidArgument(format!(
            "keep set {keep:?} must be a non-empty subset of 0..{}",
            dims.len()
        )));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !kept.contains(k)).collect();
    let kept_dims: Vec<usize> = kept.iter().map(|&k| dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let d_keep: usize = kept_dims.iter().product();
    let d_trace: usize = traced_dims.iter().product();

    let n = dims.len();
    let mut out = CMatrix::zeros(d_keep, d_keep);
    let (mut kr, mut kc, mut tr) = (vec![0; kept.len()], vec![0; kept.len()], vec![0; traced.len()]);
    let (mut full_r, mut full_c) = (vec![0; n], vec![0; n]);
    for r in 0..d_keep {
        digits(r, &kept_dims, &mut kr);
        for col in 0..d_keep {
            digits(col, &kept_dims, &mut kc);
            let mut acc = ZERO;
            for t in 0..d_trace {
                digits(t, &traced_dims, &mut tr);
                for (slot, &k) in kept.iter().enumerate() {
                    full_r[k] = kr[slot];
                    full_c[k] = kc[slot];
                }
                for (slot, &k) in traced.iter().enumerate() {
                    full_r[k] = tr[slot];
                    full_c[k] = tr[slot];
                }
                acc += m[(flat(&full_r, dims), flat(&full_c, dims))];
            }
            out[(r, col)] = acc;
        }
    }
    Ok(out)
}

/// Embed `op`, acting on the subsystems `targets` (in that order), into the
/// full space described by `dims`; identity on everything else.
pub fn embed(op: &CMatrix, dims: &[usize], targets: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    check_dims(total, dims)?;
    if targets.iter().any(|&t| t >= dims.len()) {
        return Err(Error::InvalidArgument(format!(
            "embedding targets {targets:?} out of range"
        )));
    }
    let target_dims: Vec<usize> = targets.iter().map(|&t| dims[t]).collect();
    let d_op: usize = target_dims.iter().product();
    if op.shape() != (d_op, d_op) {
        return Err(Error::InvalidArgument(format!(
            "operator shape {:?} does not match targets of dimension {d_op}",
            op.shape()
        )));
    }
    let n = dims.len();
    let (mut dr, mut dc) = (vec![0; n], vec![0; n]);
    let (mut sr, mut sc) = (vec![0; targets.len()], vec![0; targets.len()]);
    let mut out = CMatrix::zeros(total, total);
    for r in 0..total {
        digits(r, dims, &mut dr);
        for col in 0..total {
            digits(col, dims, &mut dc);
            let spectator_match = (0..n).all(|k| targets.contains(&k) || dr[k] == dc[k]);
            if !spectator_match {
                continue;
            }
            for (slot, &t) in targets.iter().enumerate() {
                sr[slot] = dr[t];
                sc[slot] = dc[t];
            }
            out[(r, col)] = op[(flat(&sr, &target_dims), flat(&sc, &target_dims))];
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianSpectrum {
    pub eigenvalues: Vec<f64>,
    /// Columns are the eigenvectors, in the order of `eigenvalues`.
    pub eigenvectors: CMatrix,
}

impl HermitianSpectrum {
    pub fn reconstruct(&self) -> CMatrix {
        let d = CMatrix::from_diagonal(&DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|&l| c(l, 0.0)),
        ));
        &self.eigenvectors * d * self.eigenvectors.adjoint()
    }

    /// `V f(diag) V^dagger`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.eigenvalues.len();
        let mut out = CMatrix::zeros(n, n);
        for (k, &l) in self.eigenvalues.iter().enumerate() {
            let w = f(l);
            if w == 0.0 {
                continue;
            }
            let v = self.eigenvectors.column(k);
            for r in 0..n {
                let vr = v[r] * w;
                for col in 0..n {
                    out[(r, col)] += vr * v[col].conj();
                }
            }
        }
        out
    }
}

pub fn eig_hermitian(h: &CMatrix) -> Result<HermitianSpectrum> {
    if !h.is_square() {
        return Err(Error::InvalidArgument(
            "eigendecomposition of a non-square matrix".into(),
        ));
    }
    let res = hermiticity_residual(h);
    if res > HERMITIAN_TOL {
        return Err(Error::InvalidArgument(format!(
            "matrix is not Hermitian (max |h - h^dagger| = {res:e})"
        )));
    }
    let eig = SymmetricEigen::new(hermitize(h));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = CMatrix::from_columns(&order.iter().map(|&k| eig.eigenvectors.column(k)).collect::<Vec<_>>());
    Ok(HermitianSpectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Spectrum of a positive semidefinite operator with tiny negative
/// eigenvalues (down to [`NEG_EIG_TOL`]) clamped to zero.
pub fn psd_spectrum(rho: &CMatrix) -> Result<HermitianSpectrum> {
    let mut spec = eig_hermitian(rho)?;
    for l in spec.eigenvalues.iter_mut() {
        if *l < NEG_EIG_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {l:e} below tolerance {NEG_EIG_TOL:e}"
            )));
        }
        if *l < 0.0 {
            *l = 0.0;
        }
    }
    Ok(spec)
}

/// Matrix logarithm restricted to the support: eigenvalues at or below
/// `floor` map to 0.
pub fn log_on_support(rho: &CMatrix, floor: f64) -> Result<CMatrix> {
    let spec = psd_spectrum(rho)?;
    Ok(spec.map(|l| if l > floor { l.ln() } else { 0.0 }))
}
