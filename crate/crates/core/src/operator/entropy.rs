//! Von Neumann and relative entropies, in nats.

use super::spectral::{check_density, hermitian_eig};
use super::CMatrix;
use crate::error::Result;

/// Eigenvalues at or below this count as exact zeros in entropy formulas.
pub const ZTOL: f64 = 1e-14;

const STATE_TOL: f64 = 1e-9;

/// `-Σ λ ln λ` over `λ > ZTOL`.
pub fn entropy_of_spectrum(eigenvalues: &[f64]) -> f64 {
    let s: f64 = eigenvalues.iter().filter(|&&l| l > ZTOL).map(|&l| -l * l.ln()).sum();
    s.max(0.0)
}

pub fn von_neumann_entropy(rho: &CMatrix) -> Result<f64> {
    check_density(rho, STATE_TOL)?;
    Ok(entropy_of_spectrum(&hermitian_eig(rho)?.eigenvalues))
}

/// `S(ρ‖τ) = tr ρ ln ρ - tr ρ ln τ`, or `+∞` when the support of `rho` is not
/// contained in the support of `tau`.
pub fn relative_entropy(rho: &CMatrix, tau: &CMatrix) -> Result<f64> {
    check_density(rho, STATE_TOL)?;
    check_density(tau, STATE_TOL)?;
    relative_entropy_unchecked(rho, tau)
}

pub(crate) fn relative_entropy_unchecked(rho: &CMatrix, tau: &CMatrix) -> Result<f64> {
    let er = hermitian_eig(rho)?;
    let et = hermitian_eig(tau)?;
    let neg_s_rho = -entropy_of_spectrum(&er.eigenvalues);

    // tr(ρ ln τ) = Σ_j ln μ_j <v_j|ρ|v_j>
    let n = rho.dim();
    let mut cross = 0.0;
    for (j, &mu) in et.eigenvalues.iter().enumerate() {
        let v = et.column(j);
        let mut w = 0.0;
        for a in 0..n {
            for b in 0..n {
                w += (v[a].conj() * rho[(a, b)] * v[b]).re;
            }
        }
        if mu <= ZTOL {
            if w > ZTOL {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        cross += w * mu.ln();
    }
    Ok((neg_s_rho - cross).max(0.0))
}
