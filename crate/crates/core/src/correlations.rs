//! Classical-quantum correlations of hybrid states.
//!
//! The mutual information of a hybrid state is the Holevo quantity of the
//! ensemble `{(p_n, σ_n / p_n)}` over cells with `p_n > 0`. Two more
//! evaluations are provided as cross-checks: the three-term entropy formula
//! and the relative entropy of the block-diagonal embedding against the
//! product of its marginals.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelKind, HybridChannel};
use crate::error::{Error, Result};
use crate::operator::{check_density, entropy_of_spectrum, hermitian_eig, relative_entropy_unchecked, CMatrix};
use crate::state::{HybridState, PTOL, STATE_TOL};

/// Allowed increase of the mutual information under a non-interacting
/// channel before a report flags a violation.
pub const MONOTONICITY_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    probs: Vec<f64>,
    states: Vec<CMatrix>,
}

impl Ensemble {
    pub fn new(probs: Vec<f64>, states: Vec<CMatrix>) -> Result<Self> {
        if probs.len() != states.len() || probs.is_empty() {
            return Err(Error::NotAnEnsemble(format!("{} weights for {} states", probs.len(), states.len())));
        }
        if probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::NotAnEnsemble("negative probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > STATE_TOL {
            return Err(Error::NotAnEnsemble(format!("probabilities sum to {total}")));
        }
        let dim = states[0].rows();
        for (r, rho) in states.iter().enumerate() {
            if rho.rows() != dim {
                return Err(Error::NotAnEnsemble(format!("member {r} has dimension {}", rho.rows())));
            }
            check_density(rho, STATE_TOL).map_err(|e| Error::NotAnEnsemble(format!("member {r}: {e}")))?;
        }
        Ok(Self { probs, states })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn states(&self) -> &[CMatrix] {
        &self.states
    }

    pub fn average(&self) -> CMatrix {
        let mut avg = CMatrix::square_zeros(self.states[0].rows());
        for (p, rho) in self.probs.iter().zip(&self.states) {
            avg.axpy(crate::operator::c64(*p, 0.0), rho);
        }
        avg.hermitian_part()
    }
}

fn entropy(m: &CMatrix) -> Result<f64> {
    Ok(entropy_of_spectrum(&hermitian_eig(m)?.eigenvalues))
}

fn holevo_unchecked(probs: &[f64], states: &[CMatrix]) -> Result<f64> {
    let mut avg = CMatrix::square_zeros(states[0].rows());
    let mut mixed = 0.0;
    for (p, rho) in probs.iter().zip(states) {
        avg.axpy(crate::operator::c64(*p, 0.0), rho);
        mixed += p * entropy(rho)?;
    }
    Ok((entropy(&avg.hermitian_part())? - mixed).max(0.0))
}

/// `χ = S(Σ p_r ρ_r) - Σ p_r S(ρ_r)`.
pub fn holevo(ens: &Ensemble) -> Result<f64> {
    holevo_unchecked(&ens.probs, &ens.states)
}

/// Cells with `p_n > PTOL` as (probability, conditional state) pairs, with
/// probabilities renormalized over the retained cells.
pub fn cell_ensemble(w: &HybridState) -> (Vec<f64>, Vec<CMatrix>) {
    let mut probs = Vec::new();
    let mut states = Vec::new();
    for m in w.masses() {
        let p = m.trace().re;
        if p > PTOL {
            probs.push(p);
            states.push(m.scale(1.0 / p));
        }
    }
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    (probs, states)
}

/// Classical-quantum mutual information through the Holevo quantity.
pub fn mutual_information(w: &HybridState) -> Result<f64> {
    let (probs, states) = cell_ensemble(w);
    holevo_unchecked(&probs, &states)
}

/// `Σ_n tr(σ_n ln σ_n) - Σ_n p_n ln p_n - tr(ρ ln ρ)`. Ill-conditioned when
/// blocks are close to singular; kept as a cross-check.
pub fn mutual_information_three_term(w: &HybridState) -> Result<f64> {
    let mut blocks = 0.0;
    let mut classical = 0.0;
    for m in w.masses() {
        blocks -= entropy(m)?;
        let p = m.trace().re;
        if p > PTOL {
            classical -= p * p.ln();
        }
    }
    let s_rho = entropy(&w.quantum_marginal())?;
    Ok(blocks + classical + s_rho)
}

/// `S(ω̂ ‖ ρ ⊗ Σ_n p_n |n⟩⟨n|)` on the block-diagonal embedding.
pub fn mutual_information_relative(w: &HybridState) -> Result<f64> {
    let embedded = w.embed_quantum();
    let p = w.classical_marginal().masses;
    let reference = w.quantum_marginal().kron(&CMatrix::from_real_diag(&p));
    relative_entropy_unchecked(&embedded, &reference)
}

/// `2 S(ρ)` for the quantum marginal `ρ`, the upper bound on the mutual
/// information.
pub fn araki_lieb_bound(w: &HybridState) -> Result<f64> {
    Ok(2.0 * entropy(&w.quantum_marginal())?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    #[serde(rename = "I_before")]
    pub i_before: f64,
    #[serde(rename = "I_after")]
    pub i_after: f64,
    pub violation: bool,
    #[serde(rename = "bound_2S")]
    pub bound_2s: f64,
}

/// Mutual information before and after a non-interacting channel. The bound
/// field is `2 S(ρ)` of the input state.
pub fn monotonicity_report(w: &HybridState, ch: &HybridChannel) -> Result<MonotonicityReport> {
    if ch.kind() != ChannelKind::NonInteracting {
        return Err(Error::NotNonInteracting);
    }
    let after = ch.apply(w)?;
    let i_before = mutual_information(w)?;
    let i_after = mutual_information(&after)?;
    Ok(MonotonicityReport {
        i_before,
        i_after,
        violation: i_after > i_before + MONOTONICITY_SLACK,
        bound_2s: araki_lieb_bound(w)?,
    })
}
