use nalgebra::linalg::{SymmetricEigen, SVD};

use super::{CMatrix, C64};
use crate::error::{Error, Result};

/// Hermiticity tolerance on `max |M - M^dagger|`.
pub const HTOL: f64 = 1e-9;

const MAX_SWEEPS: usize = 10_000;

/// Spectral decomposition `M = V diag(eigenvalues) V^dagger` with eigenvalues
/// sorted non-increasing and eigenvectors stored as the columns of `V`.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl HermEig {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn column(&self, k: usize) -> Vec<C64> {
        (0..self.dim()).map(|i| self.eigenvectors[(i, k)]).collect()
    }

    /// `V f(Λ) V^dagger`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.dim();
        let v = &self.eigenvectors;
        let fl: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        CMatrix::from_fn(n, n, |i, j| {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..n {
                if fl[k] != 0.0 {
                    acc += v[(i, k)] * v[(j, k)].conj() * fl[k];
                }
            }
            acc
        })
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(|l| l)
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }
}

/// Eigendecomposition of a Hermitian matrix. The input is symmetrized before
/// the solver sees it, so anything within [`HTOL`] of Hermitian is accepted.
pub fn hermitian_eig(m: &CMatrix) -> Result<HermEig> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("{}x{} is not square", m.rows(), m.cols())));
    }
    let defect = m.hermiticity_defect();
    if !(defect <= HTOL) {
        return Err(Error::NotHermitian { deviation: defect });
    }
    let n = m.dim();
    if n == 0 {
        return Ok(HermEig { eigenvalues: vec![], eigenvectors: CMatrix::square_zeros(0) });
    }
    let h = m.hermitian_part();
    let eig = SymmetricEigen::try_new(h.to_nalgebra(), f64::EPSILON, MAX_SWEEPS)
        .ok_or_else(|| Error::NumericalFailure("Hermitian eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermEig { eigenvalues, eigenvectors })
}

pub fn min_eigenvalue(m: &CMatrix) -> Result<f64> {
    Ok(hermitian_eig(m)?.min())
}

/// Sum of singular values. Hermitian inputs go through the eigensolver,
/// everything else through an SVD.
pub fn trace_norm(m: &CMatrix) -> Result<f64> {
    if m.is_square() && m.hermiticity_defect() <= 1e-13 * m.max_abs().max(1.0) {
        return Ok(hermitian_eig(m)?.eigenvalues.iter().map(|l| l.abs()).sum());
    }
    let svd = SVD::try_new(m.to_nalgebra(), false, false, f64::EPSILON, MAX_SWEEPS)
        .ok_or_else(|| Error::NumericalFailure("SVD did not converge".into()))?;
    Ok(svd.singular_values.iter().sum())
}

/// True iff the smallest eigenvalue is at least `-tol * max(1, ||M||_1)`.
pub fn is_psd(m: &CMatrix, tol: f64) -> Result<bool> {
    let eig = hermitian_eig(m)?;
    let norm1: f64 = eig.eigenvalues.iter().map(|l| l.abs()).sum();
    Ok(eig.min() >= -tol * norm1.max(1.0))
}

/// Checks that `rho` is a density matrix: square, Hermitian, PSD and unit
/// trace, the last two within `tol`.
pub fn check_density(rho: &CMatrix, tol: f64) -> Result<()> {
    if !rho.is_square() {
        return Err(Error::NotAState(format!("{}x{} is not square", rho.rows(), rho.cols())));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
        return Err(Error::NotAState(format!("trace {tr} is not 1")));
    }
    match is_psd(rho, tol) {
        Ok(true) => Ok(()),
        Ok(false) => Err(Error::NotAState("negative eigenvalue".into())),
        Err(Error::NotHermitian { deviation }) => {
            Err(Error::NotAState(format!("not Hermitian (deviation {deviation:.3e})")))
        }
        Err(e) => Err(e),
    }
}
