//! Hybrid operations in discrete Kraus-block form.
//!
//! A channel maps the mass in source cell `n` to target cell `m` through a
//! list of Kraus blocks `L_α(m, n)`:
//!
//! ```text
//! σ'_m = Σ_n Σ_α L_α(m, n) σ_n L_α(m, n)^†
//! ```
//!
//! and is trace preserving iff `Σ_{m, α} L_α(m, n)^† L_α(m, n) = I` for every
//! source cell `n`. Because blocks act on masses rather than densities the
//! cell weights never appear in the completeness condition.

use std::collections::BTreeMap;

use rand::Rng;

use crate::classical::{ClassicalSpace, MarkovKernel};
use crate::error::{Error, Result};
use crate::operator::{c64, hermitian_eig, CMatrix, C64};
use crate::random::{self, rng_from_seed};
use crate::state::HybridState;

/// Entrywise tolerance for `Σ L^† L = I`.
pub const COMPLETENESS_TOL: f64 = 1e-9;
/// Relative cutoff below which coefficient-kernel eigenvalues are dropped.
pub const COEFF_RANK_CUTOFF: f64 = 1e-12;
/// Above this many product blocks per cell pair, [`compose_or_chain`] keeps
/// the composition lazy.
pub const EAGER_BLOCK_LIMIT: usize = 10_000;

/// How a channel was built. Only used to gate operations whose guarantees
/// depend on the construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    General,
    /// Kernel on the classical part, Kraus set on the quantum part.
    NonInteracting,
}

/// Kraus blocks sending source cell `n` to target cell `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausBlock {
    pub m: usize,
    pub n: usize,
    pub ops: Vec<CMatrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridChannel {
    src: ClassicalSpace,
    dst: ClassicalSpace,
    qdim_src: usize,
    qdim_dst: usize,
    blocks: BTreeMap<(usize, usize), Vec<CMatrix>>,
    kind: ChannelKind,
}

impl HybridChannel {
    /// Builds a channel and checks shapes and per-source completeness.
    pub fn from_blocks(
        src: ClassicalSpace,
        dst: ClassicalSpace,
        qdim_src: usize,
        qdim_dst: usize,
        blocks: impl IntoIterator<Item = KrausBlock>,
    ) -> Result<Self> {
        let mut map: BTreeMap<(usize, usize), Vec<CMatrix>> = BTreeMap::new();
        for b in blocks {
            if b.m >= dst.len() || b.n >= src.len() {
                return Err(Error::ShapeMismatch(format!(
                    "block ({}, {}) outside {}x{} cells",
                    b.m,
                    b.n,
                    dst.len(),
                    src.len()
                )));
            }
            for l in &b.ops {
                if l.rows() != qdim_dst || l.cols() != qdim_src {
                    return Err(Error::ShapeMismatch(format!(
                        "block ({}, {}) has a {}x{} operator, expected {qdim_dst}x{qdim_src}",
                        b.m,
                        b.n,
                        l.rows(),
                        l.cols()
                    )));
                }
            }
            if !b.ops.is_empty() {
                map.entry((b.m, b.n)).or_default().extend(b.ops);
            }
        }
        let ch = Self { src, dst, qdim_src, qdim_dst, blocks: map, kind: ChannelKind::General };
        ch.check_completeness()?;
        Ok(ch)
    }

    pub fn identity(space: &ClassicalSpace, qdim: usize) -> Self {
        let blocks = (0..space.len()).map(|n| ((n, n), vec![CMatrix::identity(qdim)])).collect();
        Self {
            src: space.clone(),
            dst: space.clone(),
            qdim_src: qdim,
            qdim_dst: qdim,
            blocks,
            kind: ChannelKind::NonInteracting,
        }
    }

    /// `max |Σ_{m,α} L^† L - I|` for every source cell.
    pub fn completeness_deviations(&self) -> Vec<f64> {
        let mut sums = vec![CMatrix::square_zeros(self.qdim_src); self.src.len()];
        for (&(_, n), ops) in &self.blocks {
            for l in ops {
                sums[n] += &l.gram();
            }
        }
        let id = CMatrix::identity(self.qdim_src);
        sums.iter().map(|s| s.max_abs_diff(&id)).collect()
    }

    pub fn check_completeness(&self) -> Result<()> {
        for (cell, deviation) in self.completeness_deviations().into_iter().enumerate() {
            if !(deviation <= COMPLETENESS_TOL) {
                return Err(Error::IncompleteChannel { cell, deviation });
            }
        }
        Ok(())
    }

    pub fn src(&self) -> &ClassicalSpace {
        &self.src
    }

    pub fn dst(&self) -> &ClassicalSpace {
        &self.dst
    }

    pub fn qdim_src(&self) -> usize {
        self.qdim_src
    }

    pub fn qdim_dst(&self) -> usize {
        self.qdim_dst
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    /// Blocks in ascending `(m, n)` order.
    pub fn blocks(&self) -> impl Iterator<Item = (usize, usize, &[CMatrix])> {
        self.blocks.iter().map(|(&(m, n), ops)| (m, n, ops.as_slice()))
    }

    pub fn block(&self, m: usize, n: usize) -> &[CMatrix] {
        self.blocks.get(&(m, n)).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn block_count(&self) -> usize {
        self.blocks.values().map(Vec::len).sum()
    }

    fn ensure_accepts(&self, w: &HybridState) -> Result<()> {
        self.src.ensure_matches(w.space(), "channel source vs state")?;
        if w.qdim() != self.qdim_src {
            return Err(Error::SpaceMismatch(format!(
                "channel expects quantum dimension {}, state has {}",
                self.qdim_src,
                w.qdim()
            )));
        }
        Ok(())
    }

    /// `σ'_m = Σ_{n,α} L_α(m,n) σ_n L_α(m,n)^†`.
    pub fn apply(&self, w: &HybridState) -> Result<HybridState> {
        self.ensure_accepts(w)?;
        let mut out = vec![CMatrix::square_zeros(self.qdim_dst); self.dst.len()];
        for (&(m, n), ops) in &self.blocks {
            let sigma = w.mass(n);
            if sigma.is_zero(0.0) {
                continue;
            }
            for l in ops {
                out[m] += &l.conjugate(sigma);
            }
        }
        let masses = out.into_iter().map(|m| m.hermitian_part()).collect();
        Ok(HybridState::from_parts_unchecked(self.dst.clone(), self.qdim_dst, masses))
    }

    /// Kraus operators `L_α(m,n) ⊗ |m⟩⟨n|` of the same map acting on the
    /// block-diagonal embedding of the state.
    pub fn embedded_kraus(&self) -> Vec<CMatrix> {
        let (nd, ns) = (self.dst.len(), self.src.len());
        let mut out = Vec::with_capacity(self.block_count());
        for (&(m, n), ops) in &self.blocks {
            let mut cell = CMatrix::zeros(nd, ns);
            cell[(m, n)] = c64(1.0, 0.0);
            for l in ops {
                out.push(l.kron(&cell));
            }
        }
        out
    }

    /// `L_α(m,n) ⊗ I_q` for an idle ancilla of dimension `dq`.
    pub fn extend_with_ancilla(&self, dq: usize) -> Result<Self> {
        if dq == 0 {
            return Err(Error::DimensionMismatch("ancilla dimension must be at least 1".into()));
        }
        if dq == 1 {
            return Ok(self.clone());
        }
        let id = CMatrix::identity(dq);
        let blocks = self.blocks.iter().map(|(&key, ops)| (key, ops.iter().map(|l| l.kron(&id)).collect())).collect();
        Ok(Self {
            src: self.src.clone(),
            dst: self.dst.clone(),
            qdim_src: self.qdim_src * dq,
            qdim_dst: self.qdim_dst * dq,
            blocks,
            kind: self.kind,
        })
    }

    /// Number of product blocks `compose(second, self)` would materialize for
    /// its busiest cell pair.
    fn max_composed_blocks(&self, second: &HybridChannel) -> usize {
        let mut counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (&(k, m), ops2) in &second.blocks {
            for (&(_, n), ops1) in self.blocks.range((m, 0)..(m + 1, 0)) {
                *counts.entry((k, n)).or_default() += ops2.len() * ops1.len();
            }
        }
        counts.values().copied().max().unwrap_or(0)
    }
}

/// `second ∘ first` with eagerly materialized blocks
/// `L2_β(k, m) L1_α(m, n)` for every intermediate cell `m`.
pub fn compose(second: &HybridChannel, first: &HybridChannel) -> Result<HybridChannel> {
    first.dst.ensure_matches(&second.src, "channel composition")?;
    if first.qdim_dst != second.qdim_src {
        return Err(Error::SpaceMismatch(format!(
            "first channel outputs dimension {}, second expects {}",
            first.qdim_dst, second.qdim_src
        )));
    }
    let mut blocks: BTreeMap<(usize, usize), Vec<CMatrix>> = BTreeMap::new();
    for (&(k, m), ops2) in &second.blocks {
        for (&(_, n), ops1) in first.blocks.range((m, 0)..(m + 1, 0)) {
            let entry = blocks.entry((k, n)).or_default();
            for l2 in ops2 {
                for l1 in ops1 {
                    entry.push(l2.matmul(l1));
                }
            }
        }
    }
    let kind = if first.kind == ChannelKind::NonInteracting && second.kind == ChannelKind::NonInteracting {
        ChannelKind::NonInteracting
    } else {
        ChannelKind::General
    };
    Ok(HybridChannel {
        src: first.src.clone(),
        dst: second.dst.clone(),
        qdim_src: first.qdim_src,
        qdim_dst: second.qdim_dst,
        blocks,
        kind,
    })
}

/// Channels applied in sequence without materializing their composition.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPipeline {
    stages: Vec<HybridChannel>,
}

impl ChannelPipeline {
    pub fn new(stages: Vec<HybridChannel>) -> Result<Self> {
        for pair in stages.windows(2) {
            pair[0].dst.ensure_matches(&pair[1].src, "pipeline stages")?;
            if pair[0].qdim_dst != pair[1].qdim_src {
                return Err(Error::SpaceMismatch("pipeline quantum dimensions differ".into()));
            }
        }
        Ok(Self { stages })
    }

    pub fn stages(&self) -> &[HybridChannel] {
        &self.stages
    }

    pub fn apply(&self, w: &HybridState) -> Result<HybridState> {
        let mut cur = w.clone();
        for ch in &self.stages {
            cur = ch.apply(&cur)?;
        }
        Ok(cur)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Composition {
    Eager(HybridChannel),
    Lazy(ChannelPipeline),
}

impl Composition {
    pub fn apply(&self, w: &HybridState) -> Result<HybridState> {
        match self {
            Composition::Eager(ch) => ch.apply(w),
            Composition::Lazy(p) => p.apply(w),
        }
    }
}

/// Eager composition unless some cell pair would exceed
/// [`EAGER_BLOCK_LIMIT`] product blocks.
pub fn compose_or_chain(second: &HybridChannel, first: &HybridChannel) -> Result<Composition> {
    if first.max_composed_blocks(second) > EAGER_BLOCK_LIMIT {
        Ok(Composition::Lazy(ChannelPipeline::new(vec![first.clone(), second.clone()])?))
    } else {
        Ok(Composition::Eager(compose(second, first)?))
    }
}

/// Non-interacting channel: blocks `√P(m,n) L_α` for a Markov kernel `P` and
/// a complete Kraus set `{L_α}`.
pub fn non_interacting(kernel: &MarkovKernel, kraus: &[CMatrix]) -> Result<HybridChannel> {
    kernel.validate().map_err(Error::BadKernel)?;
    let Some(first) = kraus.first() else {
        return Err(Error::IncompleteKraus(1.0));
    };
    let (d_out, d_in) = (first.rows(), first.cols());
    if kraus.iter().any(|l| l.rows() != d_out || l.cols() != d_in) {
        return Err(Error::ShapeMismatch("Kraus operators differ in shape".into()));
    }
    let mut sum = CMatrix::square_zeros(d_in);
    for l in kraus {
        sum += &l.gram();
    }
    let deviation = sum.max_abs_diff(&CMatrix::identity(d_in));
    if !(deviation <= COMPLETENESS_TOL) {
        return Err(Error::IncompleteKraus(deviation));
    }
    let mut blocks = BTreeMap::new();
    for m in 0..kernel.rows() {
        for n in 0..kernel.cols() {
            let p = kernel.get(m, n);
            if p > 0.0 {
                let s = p.sqrt();
                blocks.insert((m, n), kraus.iter().map(|l| l.scale(s)).collect());
            }
        }
    }
    Ok(HybridChannel {
        src: kernel.src().clone(),
        dst: kernel.dst().clone(),
        qdim_src: d_in,
        qdim_dst: d_out,
        blocks,
        kind: ChannelKind::NonInteracting,
    })
}

/// Coefficients `k_{αβ}(m, n)` of a channel written in a fixed operator
/// basis. Each stored matrix is `d² x d²`; missing pairs are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffKernel {
    src: ClassicalSpace,
    dst: ClassicalSpace,
    qdim: usize,
    coeffs: BTreeMap<(usize, usize), CMatrix>,
}

impl CoeffKernel {
    pub fn new(
        src: ClassicalSpace,
        dst: ClassicalSpace,
        qdim: usize,
        entries: impl IntoIterator<Item = ((usize, usize), CMatrix)>,
    ) -> Result<Self> {
        let d2 = qdim * qdim;
        let mut coeffs = BTreeMap::new();
        for ((m, n), k) in entries {
            if m >= dst.len() || n >= src.len() {
                return Err(Error::ShapeMismatch(format!("coefficients at ({m}, {n}) outside the spaces")));
            }
            if k.rows() != d2 || k.cols() != d2 {
                return Err(Error::ShapeMismatch(format!(
                    "coefficients at ({m}, {n}) are {}x{}, expected {d2}x{d2}",
                    k.rows(),
                    k.cols()
                )));
            }
            coeffs.insert((m, n), k);
        }
        Ok(Self { src, dst, qdim, coeffs })
    }

    pub fn qdim(&self) -> usize {
        self.qdim
    }

    pub fn src(&self) -> &ClassicalSpace {
        &self.src
    }

    pub fn dst(&self) -> &ClassicalSpace {
        &self.dst
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &CMatrix)> {
        self.coeffs.iter().map(|(&(m, n), k)| (m, n, k))
    }

    /// Direct double sum `Σ_n Σ_{α,β} k_{αβ}(m,n) B_α σ_n B_β^†`, Hermitian
    /// part taken at the end.
    pub fn apply_direct(&self, basis: &[CMatrix], w: &HybridState) -> Result<HybridState> {
        check_basis(basis, self.qdim)?;
        self.src.ensure_matches(w.space(), "coefficient kernel source vs state")?;
        let d = self.qdim;
        let mut out = vec![CMatrix::square_zeros(d); self.dst.len()];
        let adj: Vec<CMatrix> = basis.iter().map(CMatrix::adjoint).collect();
        for (&(m, n), k) in &self.coeffs {
            let sigma = w.mass(n);
            for (a, ba) in basis.iter().enumerate() {
                let left = ba.matmul(sigma);
                for (b, bb) in adj.iter().enumerate() {
                    let c = k[(a, b)];
                    if c.re == 0.0 && c.im == 0.0 {
                        continue;
                    }
                    out[m].axpy(c, &left.matmul(bb));
                }
            }
        }
        let masses = out.into_iter().map(|m| m.hermitian_part()).collect();
        Ok(HybridState::from_parts_unchecked(self.dst.clone(), d, masses))
    }
}

/// Requires `d²` linearly independent `d x d` matrices.
pub fn check_basis(basis: &[CMatrix], d: usize) -> Result<()> {
    if basis.len() != d * d {
        return Err(Error::BadBasis(format!("{} elements, need {}", basis.len(), d * d)));
    }
    if let Some(i) = basis.iter().position(|b| b.rows() != d || b.cols() != d) {
        return Err(Error::BadBasis(format!("element {i} is not {d}x{d}")));
    }
    let gram = hs_gram(basis);
    let e = hermitian_eig(&gram)?;
    if e.min() <= 1e-10 * e.max() {
        return Err(Error::BadBasis(format!(
            "elements are linearly dependent (Gram eigenvalues {:.3e}..{:.3e})",
            e.min(),
            e.max()
        )));
    }
    Ok(())
}

/// Hilbert-Schmidt Gram matrix `G_{αβ} = tr(B_α^† B_β)`.
fn hs_gram(basis: &[CMatrix]) -> CMatrix {
    let n = basis.len();
    CMatrix::from_fn(n, n, |a, b| basis[a].data().iter().zip(basis[b].data()).map(|(x, y)| x.conj() * y).sum())
}

/// Coordinates of `op` in `basis`: `op = Σ_α c_α B_α`.
pub fn expand_in_basis(basis: &[CMatrix], op: &CMatrix) -> Result<Vec<C64>> {
    let n = basis.len();
    let gram = hs_gram(basis).to_nalgebra();
    let rhs = nalgebra::DVector::from_iterator(
        n,
        basis.iter().map(|b| b.data().iter().zip(op.data()).map(|(x, y)| x.conj() * y).sum::<C64>()),
    );
    let sol = gram.lu().solve(&rhs).ok_or_else(|| Error::BadBasis("Gram matrix is singular".into()))?;
    Ok(sol.iter().copied().collect())
}

/// Lowers coefficient kernels to Kraus blocks by diagonalizing the Hermitian
/// part `S = (k + k^†)/2` of every coefficient matrix:
/// `L_γ(m,n) = √λ_γ Σ_α (v_γ)_α B_α`.
pub fn from_coeff_kernel(basis: &[CMatrix], k: &CoeffKernel) -> Result<HybridChannel> {
    let d = k.qdim;
    check_basis(basis, d)?;
    let mut blocks = Vec::new();
    for (&(m, n), coeffs) in &k.coeffs {
        let s = coeffs.hermitian_part();
        let eig = hermitian_eig(&s)?;
        let scale: f64 = eig.eigenvalues.iter().map(|l| l.abs()).sum::<f64>().max(1.0);
        if eig.min() < -COMPLETENESS_TOL * scale {
            return Err(Error::NotPSDCoefficients { m, n, min_eigenvalue: eig.min() });
        }
        let cutoff = COEFF_RANK_CUTOFF * eig.max().max(0.0);
        let mut ops = Vec::new();
        for (g, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda <= cutoff || lambda <= 0.0 {
                continue;
            }
            let mut l = CMatrix::square_zeros(d);
            for (a, ba) in basis.iter().enumerate() {
                let coef = eig.eigenvectors[(a, g)];
                if coef.norm() > 0.0 {
                    l.axpy(coef, ba);
                }
            }
            l.scale_mut(lambda.sqrt());
            ops.push(l);
        }
        blocks.push(KrausBlock { m, n, ops });
    }
    HybridChannel::from_blocks(k.src.clone(), k.dst.clone(), d, d, blocks)
}

/// Normalized Pauli basis `{I, X, Y, Z}` for a qubit.
pub fn pauli_basis() -> Vec<CMatrix> {
    let z = c64(0.0, 0.0);
    let one = c64(1.0, 0.0);
    let i = c64(0.0, 1.0);
    vec![
        CMatrix::identity(2),
        CMatrix::from_square(2, vec![z, one, one, z]).unwrap(),
        CMatrix::from_square(2, vec![z, -i, i, z]).unwrap(),
        CMatrix::from_square(2, vec![one, z, z, -one]).unwrap(),
    ]
}

/// Matrix units `|i⟩⟨j|`, ordered row-major in `(i, j)`.
pub fn matrix_unit_basis(d: usize) -> Vec<CMatrix> {
    (0..d * d).map(|a| CMatrix::unit(d, a / d, a % d)).collect()
}

/// Seeded random channel. Every source cell feeds every target cell through
/// `branching` Gaussian blocks with random strengths; the blocks of each
/// source cell are then right-normalized by `(Σ L^†L)^{-1/2}`.
pub fn random_channel(
    src: &ClassicalSpace,
    dst: &ClassicalSpace,
    qdim_src: usize,
    qdim_dst: usize,
    branching: usize,
    seed: u64,
) -> Result<HybridChannel> {
    let mut rng = rng_from_seed(seed);
    sample_channel(&mut rng, src, dst, qdim_src, qdim_dst, branching)
}

pub fn sample_channel(
    rng: &mut impl Rng,
    src: &ClassicalSpace,
    dst: &ClassicalSpace,
    qdim_src: usize,
    qdim_dst: usize,
    branching: usize,
) -> Result<HybridChannel> {
    // enough operators per source cell for Σ L^†L to have full rank
    let needed = qdim_src.div_ceil((dst.len() * qdim_dst).max(1));
    let branching = branching.max(needed).max(1);
    let mut blocks = BTreeMap::new();
    for n in 0..src.len() {
        let mut attempt = 0;
        loop {
            let mut keys = Vec::new();
            let mut ops = Vec::new();
            for m in 0..dst.len() {
                let strength: f64 = rng.random::<f64>();
                let strength = strength * strength;
                for _ in 0..branching {
                    keys.push(m);
                    ops.push(random::gaussian_matrix(rng, qdim_dst, qdim_src).scale(strength));
                }
            }
            match random::right_normalize(&mut ops) {
                Ok(()) => {
                    for (m, l) in keys.into_iter().zip(ops) {
                        blocks.entry((m, n)).or_insert_with(Vec::new).push(l);
                    }
                    break;
                }
                Err(e) if attempt >= 3 => return Err(e),
                Err(_) => attempt += 1,
            }
        }
    }
    let ch =
        HybridChannel { src: src.clone(), dst: dst.clone(), qdim_src, qdim_dst, blocks, kind: ChannelKind::General };
    ch.check_completeness()?;
    Ok(ch)
}

/// Random non-interacting channel on `space`.
pub fn sample_non_interacting(
    rng: &mut impl Rng,
    src: &ClassicalSpace,
    dst: &ClassicalSpace,
    qdim: usize,
    kraus_count: usize,
) -> Result<HybridChannel> {
    let kernel = random::random_kernel(rng, src, dst, true);
    let kraus = random::random_kraus(rng, qdim, qdim, kraus_count)?;
    non_interacting(&kernel, &kraus)
}

/// Random valid coefficient kernel in `basis`, obtained by expanding the
/// blocks of a random channel.
pub fn sample_coeff_kernel(
    rng: &mut impl Rng,
    basis: &[CMatrix],
    src: &ClassicalSpace,
    dst: &ClassicalSpace,
    qdim: usize,
    branching: usize,
) -> Result<CoeffKernel> {
    let ch = sample_channel(rng, src, dst, qdim, qdim, branching)?;
    let d2 = qdim * qdim;
    let mut entries = Vec::new();
    for (m, n, ops) in ch.blocks() {
        let mut k = CMatrix::square_zeros(d2);
        for l in ops {
            let c = expand_in_basis(basis, l)?;
            for a in 0..d2 {
                for b in 0..d2 {
                    k[(a, b)] += c[a] * c[b].conj();
                }
            }
        }
        entries.push(((m, n), k));
    }
    CoeffKernel::new(src.clone(), dst.clone(), qdim, entries)
}
