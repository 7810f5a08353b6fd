//! Simple hybrid states: one positive block per classical cell.
//!
//! The stored block for cell `n` is the cell mass `σ_n = μ_n ω_n`, where
//! `ω_n` is the state density on that cell. Probabilities, marginals and the
//! trace-norm metric are all weight-free in this representation; the
//! weights only enter when densities are reported.

use rand::Rng;

use crate::classical::ClassicalSpace;
use crate::error::{Error, Result};
use crate::operator::{check_density, hermitian_eig, is_psd, partial_trace, trace_norm, CMatrix, Subsystem, C64};
use crate::random::{self, rng_from_seed};

/// Positivity and normalization tolerance for states and effects.
pub const STATE_TOL: f64 = 1e-9;
/// Below this probability a cell or an effect counts as impossible.
pub const PTOL: f64 = 1e-12;

/// A POVM element, `0 <= E <= I`.
#[derive(Debug, Clone, PartialEq)]
pub struct Effect(CMatrix);

impl Effect {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::BadEffect(format!("{}x{} is not square", matrix.rows(), matrix.cols())));
        }
        let below = is_psd(&matrix, STATE_TOL).map_err(|e| Error::BadEffect(e.to_string()))?;
        if !below {
            return Err(Error::BadEffect("E is not positive".into()));
        }
        let complement = &CMatrix::identity(matrix.dim()) - &matrix;
        if !is_psd(&complement, STATE_TOL).map_err(|e| Error::BadEffect(e.to_string()))? {
            return Err(Error::BadEffect("I - E is not positive".into()));
        }
        Ok(Self(matrix))
    }

    pub fn identity(dim: usize) -> Self {
        Self(CMatrix::identity(dim))
    }

    pub fn projector(dim: usize, k: usize) -> Self {
        Self(CMatrix::basis_projector(dim, k))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    /// `self ⊗ other`, again an effect.
    pub fn kron(&self, other: &Effect) -> Effect {
        Effect(self.0.kron(&other.0))
    }
}

/// Per-cell probability masses `p_n = tr σ_n` and densities `f_n = p_n / μ_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalMarginal {
    pub masses: Vec<f64>,
    pub densities: Vec<f64>,
}

/// Result of conditioning on an ancilla effect.
#[derive(Debug, Clone)]
pub struct Conditioned {
    pub probability: f64,
    pub state: HybridState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridState {
    space: ClassicalSpace,
    qdim: usize,
    masses: Vec<CMatrix>,
}

impl HybridState {
    pub fn new(space: ClassicalSpace, masses: Vec<CMatrix>) -> Result<Self> {
        Self::with_options(space, masses, false)
    }

    /// With `renormalize`, a total trace within `[0.9, 1.1]` is divided out
    /// before validation. Anything further from 1 is rejected.
    pub fn with_options(space: ClassicalSpace, mut masses: Vec<CMatrix>, renormalize: bool) -> Result<Self> {
        if masses.len() != space.len() {
            return Err(Error::DimensionMismatch(format!("{} mass blocks for {} cells", masses.len(), space.len())));
        }
        let qdim = masses[0].rows();
        if let Some(bad) = masses.iter().position(|m| !m.is_square() || m.rows() != qdim) {
            return Err(Error::DimensionMismatch(format!("block {bad} is not {qdim}x{qdim}")));
        }
        if renormalize {
            let total: f64 = masses.iter().map(|m| m.trace().re).sum();
            if (0.9..=1.1).contains(&total) {
                masses.iter_mut().for_each(|m| m.scale_mut(1.0 / total));
            }
        }
        let state = Self { space, qdim, masses };
        state.validate()?;
        Ok(state)
    }

    pub(crate) fn from_parts_unchecked(space: ClassicalSpace, qdim: usize, masses: Vec<CMatrix>) -> Self {
        debug_assert_eq!(space.len(), masses.len());
        Self { space, qdim, masses }
    }

    /// Positivity of every block, then unit total trace.
    pub fn validate(&self) -> Result<()> {
        for (n, m) in self.masses.iter().enumerate() {
            match is_psd(m, STATE_TOL) {
                Ok(true) => {}
                _ => return Err(Error::NotPositive(n)),
            }
        }
        let total = self.total_trace();
        if (total - 1.0).abs() > STATE_TOL {
            return Err(Error::NotNormalized(total));
        }
        Ok(())
    }

    pub fn space(&self) -> &ClassicalSpace {
        &self.space
    }

    pub fn qdim(&self) -> usize {
        self.qdim
    }

    pub fn cells(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[CMatrix] {
        &self.masses
    }

    pub fn mass(&self, cell: usize) -> &CMatrix {
        &self.masses[cell]
    }

    /// `ω_n = σ_n / μ_n`.
    pub fn density(&self, cell: usize) -> CMatrix {
        self.masses[cell].scale(1.0 / self.space.weight(cell))
    }

    pub fn total_trace(&self) -> f64 {
        self.masses.iter().map(|m| m.trace().re).sum()
    }

    pub fn min_block_eigenvalue(&self) -> Result<f64> {
        let mut lo = f64::INFINITY;
        for m in &self.masses {
            lo = lo.min(hermitian_eig(m)?.min());
        }
        Ok(lo)
    }

    fn check_event(&self, event: &[usize]) -> Result<()> {
        let mut seen = vec![false; self.cells()];
        for &n in event {
            if n >= self.cells() {
                return Err(Error::BadEvent(format!("cell {n} out of range 0..{}", self.cells())));
            }
            if std::mem::replace(&mut seen[n], true) {
                return Err(Error::BadEvent(format!("cell {n} listed twice")));
            }
        }
        Ok(())
    }

    /// `w(A, E) = Σ_{n ∈ A} tr(σ_n E)`.
    pub fn probability(&self, event: &[usize], effect: &Effect) -> Result<f64> {
        if effect.dim() != self.qdim {
            return Err(Error::BadEffect(format!("effect has dimension {}, state {}", effect.dim(), self.qdim)));
        }
        self.check_event(event)?;
        Ok(event.iter().map(|&n| self.masses[n].trace_product(effect.matrix()).re).sum())
    }

    /// `w(X, E)`.
    pub fn probability_all(&self, effect: &Effect) -> Result<f64> {
        let all: Vec<usize> = (0..self.cells()).collect();
        self.probability(&all, effect)
    }

    pub fn classical_marginal(&self) -> ClassicalMarginal {
        let masses: Vec<f64> = self.masses.iter().map(|m| m.trace().re.max(0.0)).collect();
        let densities = masses.iter().zip(self.space.weights()).map(|(p, mu)| p / mu).collect();
        ClassicalMarginal { masses, densities }
    }

    /// `ρ = Σ_n σ_n`.
    pub fn quantum_marginal(&self) -> CMatrix {
        let mut rho = CMatrix::square_zeros(self.qdim);
        for m in &self.masses {
            rho += m;
        }
        rho.hermitian_part()
    }

    /// Normalized block `σ_n / tr σ_n`.
    pub fn conditional_quantum(&self, cell: usize) -> Result<CMatrix> {
        if cell >= self.cells() {
            return Err(Error::BadEvent(format!("cell {cell} out of range")));
        }
        let p = self.masses[cell].trace().re;
        if p <= PTOL {
            return Err(Error::ZeroMassCell(cell));
        }
        Ok(self.masses[cell].scale(1.0 / p))
    }

    /// `d(w1, w2) = Σ_n ||σ1_n - σ2_n||_1`.
    pub fn distance(&self, other: &HybridState) -> Result<f64> {
        self.ensure_compatible(other)?;
        let mut d = 0.0;
        for (a, b) in self.masses.iter().zip(&other.masses) {
            d += trace_norm(&canonical_sign(a - b).hermitian_part())?;
        }
        Ok(d)
    }

    pub(crate) fn ensure_compatible(&self, other: &HybridState) -> Result<()> {
        self.space.ensure_matches(&other.space, "states")?;
        if self.qdim != other.qdim {
            return Err(Error::SpaceMismatch(format!("quantum dimensions {} and {}", self.qdim, other.qdim)));
        }
        Ok(())
    }

    /// Product state `σ_n = f_n ρ` from per-cell masses `f`.
    pub fn product(space: &ClassicalSpace, f: &[f64], rho: &CMatrix) -> Result<Self> {
        if f.len() != space.len() {
            return Err(Error::DimensionMismatch(format!("{} masses for {} cells", f.len(), space.len())));
        }
        if f.iter().any(|&x| !(x >= 0.0)) || (f.iter().sum::<f64>() - 1.0).abs() > STATE_TOL {
            return Err(Error::NotAState("classical masses must be non-negative and sum to 1".into()));
        }
        check_density(rho, STATE_TOL)?;
        let masses = f.iter().map(|&x| rho.scale(x)).collect();
        Ok(Self::from_parts_unchecked(space.clone(), rho.dim(), masses))
    }

    /// `σ'_n = σ_n ⊗ ρ_q`.
    pub fn tensor_with_quantum(&self, rho_q: &CMatrix) -> Result<Self> {
        check_density(rho_q, STATE_TOL)?;
        let masses = self.masses.iter().map(|m| m.kron(rho_q)).collect();
        Ok(Self::from_parts_unchecked(self.space.clone(), self.qdim * rho_q.dim(), masses))
    }

    /// Splits `qdim = d * d_q`, conditions on the ancilla effect `f` and
    /// traces the ancilla out: masses `tr_q(σ_n (I ⊗ F)) / w(X, I ⊗ F)`.
    pub fn condition_on_effect(&self, f: &Effect) -> Result<Conditioned> {
        let dq = f.dim();
        if dq == 0 || !self.qdim.is_multiple_of(dq) {
            return Err(Error::DimensionMismatch(format!("ancilla dimension {dq} does not divide {}", self.qdim)));
        }
        let d = self.qdim / dq;
        let lifted = CMatrix::identity(d).kron(f.matrix());
        let mut blocks = Vec::with_capacity(self.cells());
        let mut prob = 0.0;
        for m in &self.masses {
            let prod = m.matmul(&lifted);
            prob += prod.trace().re;
            blocks.push(partial_trace(&prod, d, dq, Subsystem::B)?.hermitian_part());
        }
        if prob <= PTOL {
            return Err(Error::ZeroProbability(prob));
        }
        blocks.iter_mut().for_each(|b| b.scale_mut(1.0 / prob));
        Ok(Conditioned { probability: prob, state: Self::from_parts_unchecked(self.space.clone(), d, blocks) })
    }

    /// Block-diagonal `Σ_n σ_n ⊗ |n⟩⟨n|` on `H ⊗ C^N`.
    pub fn embed_quantum(&self) -> CMatrix {
        let (d, n) = (self.qdim, self.cells());
        let mut out = CMatrix::square_zeros(d * n);
        for (cell, m) in self.masses.iter().enumerate() {
            for i in 0..d {
                for j in 0..d {
                    out[(i * n + cell, j * n + cell)] = m[(i, j)];
                }
            }
        }
        out
    }

    /// Cellwise mixture `t w1 + (1 - t) w2`.
    pub fn mix(t: f64, w1: &HybridState, w2: &HybridState) -> Result<Self> {
        w1.ensure_compatible(w2)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::NotAState(format!("mixing weight {t} outside [0, 1]")));
        }
        let masses = w1
            .masses
            .iter()
            .zip(&w2.masses)
            .map(|(a, b)| {
                let mut m = a.scale(t);
                m.axpy(C64::new(1.0 - t, 0.0), b);
                m
            })
            .collect();
        Ok(Self::from_parts_unchecked(w1.space.clone(), w1.qdim, masses))
    }

    /// Replaces the classical space by one with the same number of cells.
    pub fn with_space(&self, space: ClassicalSpace) -> Result<Self> {
        if space.len() != self.cells() {
            return Err(Error::SpaceMismatch(format!("{} cells vs {}", space.len(), self.cells())));
        }
        Ok(Self::from_parts_unchecked(space, self.qdim, self.masses.clone()))
    }
}

/// `m` or `-m`, whichever has a positive first non-zero component. Since
/// `a - b` is bitwise `-(b - a)`, this makes the distance exactly symmetric.
fn canonical_sign(m: CMatrix) -> CMatrix {
    let first = m.data().iter().flat_map(|z| [z.re, z.im]).find(|&x| x != 0.0);
    match first {
        Some(x) if x < 0.0 => -&m,
        _ => m,
    }
}

/// Deterministic random state with full-rank Wishart blocks.
pub fn random_state(space: &ClassicalSpace, qdim: usize, seed: u64) -> HybridState {
    let mut rng = rng_from_seed(seed);
    sample_state(&mut rng, space, qdim, qdim, false)
}

/// Random state with blocks of rank `rank`; with `allow_empty_cells` some
/// cells get exactly zero mass.
pub fn sample_state(
    rng: &mut impl Rng,
    space: &ClassicalSpace,
    qdim: usize,
    rank: usize,
    allow_empty_cells: bool,
) -> HybridState {
    let n = space.len();
    let empty: Vec<bool> = (0..n).map(|_| allow_empty_cells && n > 1 && rng.random::<f64>() < 0.2).collect();
    let all_empty = empty.iter().all(|&e| e);
    let mut masses: Vec<CMatrix> = (0..n)
        .map(|c| {
            if empty[c] && !(all_empty && c == 0) {
                CMatrix::square_zeros(qdim)
            } else {
                let scale = (1.5 * random::gaussian(rng)).exp();
                random::wishart(rng, qdim, rank).scale(scale)
            }
        })
        .collect();
    let total: f64 = masses.iter().map(|m| m.trace().re).sum();
    masses.iter_mut().for_each(|m| m.scale_mut(1.0 / total));
    HybridState::from_parts_unchecked(space.clone(), qdim, masses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{c64, partial_trace, Subsystem};

    fn two_cell_classical() -> HybridState {
        let space = ClassicalSpace::counting(2);
        HybridState::new(
            space,
            vec![CMatrix::basis_projector(2, 0).scale(0.5), CMatrix::basis_projector(2, 1).scale(0.5)],
        )
        .unwrap()
    }

    #[test]
    fn construction_examples() {
        let s1 = ClassicalSpace::counting(1);
        assert!(HybridState::new(s1.clone(), vec![CMatrix::basis_projector(2, 0)]).is_ok());
        two_cell_classical();
        let bad = CMatrix::from_real_diag(&[1.01, -0.01]);
        assert_eq!(HybridState::new(s1.clone(), vec![bad]), Err(Error::NotPositive(0)));
        let light = CMatrix::from_real_diag(&[0.4, 0.4]);
        assert!(matches!(HybridState::new(s1.clone(), vec![light.clone()]), Err(Error::NotNormalized(_))));
        let heavy = CMatrix::from_real_diag(&[0.5, 0.52]);
        assert!(HybridState::with_options(s1.clone(), vec![heavy], true).is_ok());
        // renormalization refuses gross errors
        assert!(HybridState::with_options(s1, vec![light], true).is_err());
    }

    #[test]
    fn probability_examples() {
        let w = two_cell_classical();
        assert!((w.probability_all(&Effect::identity(2)).unwrap() - 1.0).abs() < 1e-15);
        assert!((w.probability(&[0], &Effect::projector(2, 0)).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(w.probability(&[0, 0], &Effect::identity(2)), Err(Error::BadEvent(_))));
        assert!(matches!(w.probability(&[3], &Effect::identity(2)), Err(Error::BadEvent(_))));
        assert!(matches!(w.probability(&[0], &Effect::identity(3)), Err(Error::BadEffect(_))));
    }

    #[test]
    fn effect_validation() {
        assert!(Effect::new(CMatrix::from_real_diag(&[0.0, 1.0])).is_ok());
        assert!(Effect::new(CMatrix::from_real_diag(&[1.1, 0.5])).is_err());
        assert!(Effect::new(CMatrix::from_real_diag(&[-0.1, 0.5])).is_err());
    }

    #[test]
    fn marginals_of_products() {
        let space = ClassicalSpace::new(vec![0.5, 2.0, 1.0]).unwrap();
        let f = [0.2, 0.5, 0.3];
        let rho = CMatrix::from_fn(
            2,
            2,
            |i, j| if i == j { c64(0.5, 0.0) } else { c64(0.1, if i < j { 0.2 } else { -0.2 }) },
        );
        let w = HybridState::product(&space, &f, &rho).unwrap();
        let cm = w.classical_marginal();
        for (n, &mass) in f.iter().enumerate() {
            assert!((cm.masses[n] - mass).abs() < 1e-15);
            assert!((cm.densities[n] - mass / space.weight(n)).abs() < 1e-15);
            assert!(w.conditional_quantum(n).unwrap().max_abs_diff(&rho) < 1e-12);
        }
        assert!(w.quantum_marginal().max_abs_diff(&rho) < 1e-15);
        assert!(two_cell_classical().quantum_marginal().max_abs_diff(&CMatrix::identity(2).scale(0.5)) < 1e-15);

        let point = HybridState::product(&ClassicalSpace::counting(2), &[1.0, 0.0], &rho).unwrap();
        assert_eq!(point.mass(1), &CMatrix::square_zeros(2));
        assert_eq!(point.conditional_quantum(1), Err(Error::ZeroMassCell(1)));
    }

    #[test]
    fn conditional_of_scaled_block() {
        let tau = CMatrix::from_real_diag(&[0.25, 0.75]);
        let w = HybridState::new(
            ClassicalSpace::counting(2),
            vec![tau.scale(0.3), CMatrix::basis_projector(2, 0).scale(0.7)],
        )
        .unwrap();
        assert!(w.conditional_quantum(0).unwrap().max_abs_diff(&tau) < 1e-15);
    }

    #[test]
    fn distance_examples() {
        let s = ClassicalSpace::counting(1);
        let a = HybridState::new(s.clone(), vec![CMatrix::basis_projector(2, 0)]).unwrap();
        let b = HybridState::new(s, vec![CMatrix::basis_projector(2, 1)]).unwrap();
        assert!(a.distance(&a).unwrap().abs() < 1e-15);
        assert!((a.distance(&b).unwrap() - 2.0).abs() < 1e-14);
        let other = two_cell_classical();
        assert!(matches!(a.distance(&other), Err(Error::SpaceMismatch(_))));
    }

    #[test]
    fn tensor_and_condition() {
        let space = ClassicalSpace::counting(3);
        let v = random_state(&space, 2, 1);
        let scalar = CMatrix::identity(1);
        assert_eq!(v.tensor_with_quantum(&scalar).unwrap(), v);

        let rho_q = CMatrix::from_real_diag(&[0.2, 0.3, 0.5]);
        let w = v.tensor_with_quantum(&rho_q).unwrap();
        for n in 0..3 {
            let back = partial_trace(w.mass(n), 2, 3, Subsystem::B).unwrap();
            assert!(back.max_abs_diff(v.mass(n)) < 1e-15);
        }
        let f = Effect::new(CMatrix::from_real_diag(&[1.0, 0.0, 0.4])).unwrap();
        let c = w.condition_on_effect(&f).unwrap();
        assert!((c.probability - 0.4).abs() < 1e-15);
        for n in 0..3 {
            assert!(c.state.mass(n).max_abs_diff(v.mass(n)) < 1e-14);
        }
        let c = w.condition_on_effect(&Effect::identity(3)).unwrap();
        assert!((c.probability - 1.0).abs() < 1e-14);

        let zero = Effect::new(CMatrix::square_zeros(3)).unwrap();
        assert!(matches!(w.condition_on_effect(&zero), Err(Error::ZeroProbability(_))));
        let wrong = Effect::identity(4);
        assert!(matches!(w.condition_on_effect(&wrong), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn embedding_examples() {
        let s1 = ClassicalSpace::counting(1);
        let rho = CMatrix::from_real_diag(&[0.6, 0.4]);
        let w = HybridState::new(s1, vec![rho.clone()]).unwrap();
        assert_eq!(w.embed_quantum(), rho);

        let f = [0.25, 0.75];
        let p = HybridState::product(&ClassicalSpace::counting(2), &f, &rho).unwrap();
        assert!(p.embed_quantum().max_abs_diff(&rho.kron(&CMatrix::from_real_diag(&f))) < 1e-15);
    }

    #[test]
    fn random_states_are_valid_and_seeded() {
        let space = ClassicalSpace::new(vec![0.3, 1.0, 2.0, 0.7]).unwrap();
        let a = random_state(&space, 3, 42);
        let b = random_state(&space, 3, 42);
        assert_eq!(a, b);
        a.validate().unwrap();
        let c = random_state(&space, 3, 43);
        c.validate().unwrap();
        assert!(a.distance(&c).unwrap() > 0.0);
    }
}
