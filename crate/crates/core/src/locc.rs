//! LOCC protocols as sequences of hybrid operations.
//!
//! A protocol alternates local instruments between two parties. The
//! instrument of round `r` may depend on the outcomes of all earlier rounds.
//! Outcomes are written into a classical record `(x_1, …, x_n)` where label
//! `0` means "not yet measured" and complete records carry labels `1..=y_r`.
//!
//! Instruments are stored per history. Histories that can never occur
//! (some earlier operator along them is exactly zero) need no entry.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{non_interacting, HybridChannel, KrausBlock, COMPLETENESS_TOL};
use crate::classical::{ClassicalSpace, MarkovKernel};
use crate::error::{Error, Result};
use crate::operator::{
    check_density, hermitian_eig, kraus_gram_sum, min_eigenvalue, partial_transpose, CMatrix, Subsystem, C64,
};
use crate::random::{random_kraus, random_unitary};
use crate::state::{HybridState, STATE_TOL};

/// Record spaces larger than this are refused by [`as_hybrid_channels`].
pub const MAX_RECORD_CELLS: usize = 100_000;

/// Slack on the smallest eigenvalue of the partial transpose.
pub const PPT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    One,
    Two,
}

impl Side {
    /// Odd rounds act on party one, even rounds on party two (`round` is
    /// zero-based here).
    pub fn alternating(round: usize) -> Self {
        if round.is_multiple_of(2) {
            Side::One
        } else {
            Side::Two
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Side::One => 1,
            Side::Two => 2,
        }
    }

    pub fn from_number(k: u8) -> Result<Self> {
        match k {
            1 => Ok(Side::One),
            2 => Ok(Side::Two),
            _ => Err(Error::BadProtocol(format!("side must be 1 or 2, got {k}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub side: Side,
    pub outcomes: usize,
    /// History `(x_1, …, x_{r-1})` to the operators `V_1, …, V_y`.
    pub instrument: BTreeMap<Vec<usize>, Vec<CMatrix>>,
}

impl Round {
    pub fn new(side: Side, outcomes: usize, instrument: BTreeMap<Vec<usize>, Vec<CMatrix>>) -> Self {
        Self { side, outcomes, instrument }
    }

    /// A round whose instrument does not depend on the history.
    pub fn uniform(side: Side, ops: Vec<CMatrix>, histories: impl IntoIterator<Item = Vec<usize>>) -> Self {
        let outcomes = ops.len();
        let instrument = histories.into_iter().map(|h| (h, ops.clone())).collect();
        Self { side, outcomes, instrument }
    }

    pub fn ops(&self, history: &[usize]) -> Option<&[CMatrix]> {
        self.instrument.get(history).map(Vec::as_slice)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoccProtocol {
    dims: (usize, usize),
    rounds: Vec<Round>,
}

fn is_exact_zero(m: &CMatrix) -> bool {
    m.data().iter().all(|z| z.re == 0.0 && z.im == 0.0)
}

impl LoccProtocol {
    pub fn new(dims: (usize, usize), rounds: Vec<Round>) -> Result<Self> {
        let p = Self { dims, rounds };
        p.validate()?;
        Ok(p)
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    pub fn outcome_counts(&self) -> Vec<usize> {
        self.rounds.iter().map(|r| r.outcomes).collect()
    }

    pub fn side_dim(&self, side: Side) -> usize {
        match side {
            Side::One => self.dims.0,
            Side::Two => self.dims.1,
        }
    }

    pub fn total_dim(&self) -> usize {
        self.dims.0 * self.dims.1
    }

    /// Completeness of every instrument along every reachable history.
    pub fn validate(&self) -> Result<()> {
        self.completeness_deviation().map(|_| ())
    }

    /// Largest `max |Σ V†V - I|` over reachable histories. Missing or
    /// misshapen instruments and deviations above the completeness tolerance
    /// are errors.
    pub fn completeness_deviation(&self) -> Result<f64> {
        if self.dims.0 == 0 || self.dims.1 == 0 {
            return Err(Error::BadProtocol("local dimensions must be positive".into()));
        }
        if self.rounds.is_empty() {
            return Err(Error::BadProtocol("a protocol needs at least one round".into()));
        }
        for (r, round) in self.rounds.iter().enumerate() {
            if round.outcomes == 0 {
                return Err(Error::BadProtocol(format!("round {} has no outcomes", r + 1)));
            }
        }
        let mut worst: f64 = 0.0;
        let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
        for round in &self.rounds {
            let d = self.side_dim(round.side);
            let mut next = Vec::new();
            for history in frontier {
                let fail = |reason: String| Error::IncompleteInstrument { history: history.clone(), reason };
                let ops = round.ops(&history).ok_or_else(|| fail("no instrument for this history".into()))?;
                if ops.len() != round.outcomes {
                    return Err(fail(format!("{} operators for {} outcomes", ops.len(), round.outcomes)));
                }
                if let Some(v) = ops.iter().find(|v| v.rows() != d || v.cols() != d) {
                    return Err(fail(format!("operator is {}x{}, party dimension is {d}", v.rows(), v.cols())));
                }
                let dev = kraus_gram_sum(ops, d).max_abs_diff(&CMatrix::identity(d));
                if dev > COMPLETENESS_TOL {
                    return Err(fail(format!("completeness deviation {dev:.3e}")));
                }
                worst = worst.max(dev);
                for (x, v) in ops.iter().enumerate() {
                    if !is_exact_zero(v) {
                        let mut h = history.clone();
                        h.push(x + 1);
                        next.push(h);
                    }
                }
            }
            frontier = next;
        }
        Ok(worst)
    }

    /// `V ⊗ I` or `I ⊗ V` on the joint space.
    pub fn lift(&self, side: Side, v: &CMatrix) -> CMatrix {
        match side {
            Side::One => v.kron(&CMatrix::identity(self.dims.1)),
            Side::Two => CMatrix::identity(self.dims.0).kron(v),
        }
    }

    /// All complete records in lexicographic order.
    pub fn complete_records(&self) -> Vec<OutcomeRecord> {
        let counts = self.outcome_counts();
        let total: usize = counts.iter().product();
        (0..total)
            .map(|mut idx| {
                let mut labels = vec![0; counts.len()];
                for r in (0..counts.len()).rev() {
                    labels[r] = idx % counts[r] + 1;
                    idx /= counts[r];
                }
                OutcomeRecord(labels)
            })
            .collect()
    }

    /// Number of cells of the record space `Π_r {0, …, y_r}`.
    pub fn record_space_size(&self) -> usize {
        self.rounds.iter().fold(1usize, |acc, r| acc.saturating_mul(r.outcomes + 1))
    }

    /// Position of a record (labels may be 0) in the record space, first
    /// round most significant.
    pub fn record_index(&self, labels: &[usize]) -> Result<usize> {
        if labels.len() != self.rounds.len() {
            return Err(Error::BadProtocol(format!("{} labels for {} rounds", labels.len(), self.rounds.len())));
        }
        let mut idx = 0;
        for (x, round) in labels.iter().zip(&self.rounds) {
            if *x > round.outcomes {
                return Err(Error::BadProtocol(format!("label {x} exceeds {} outcomes", round.outcomes)));
            }
            idx = idx * (round.outcomes + 1) + x;
        }
        Ok(idx)
    }

    pub fn record_labels(&self, mut idx: usize) -> Vec<usize> {
        let mut labels = vec![0; self.rounds.len()];
        for (r, round) in self.rounds.iter().enumerate().rev() {
            labels[r] = idx % (round.outcomes + 1);
            idx /= round.outcomes + 1;
        }
        labels
    }
}

/// A complete record `(x_1, …, x_n)` with `1 <= x_r <= y_r`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OutcomeRecord(pub Vec<usize>);

impl OutcomeRecord {
    pub fn new(labels: Vec<usize>, proto: &LoccProtocol) -> Result<Self> {
        let counts = proto.outcome_counts();
        if labels.len() != counts.len() || labels.iter().zip(&counts).any(|(&x, &y)| x == 0 || x > y) {
            return Err(Error::BadProtocol(format!("{labels:?} is not a complete record for outcomes {counts:?}")));
        }
        Ok(Self(labels))
    }

    pub fn labels(&self) -> &[usize] {
        &self.0
    }
}

impl fmt::Display for OutcomeRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        write!(f, "{}", parts.join("."))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub record: OutcomeRecord,
    /// Product of the lifted operators in round order.
    pub w: CMatrix,
    /// Accumulated operators of each party; `w = factors.0 ⊗ factors.1`.
    pub factors: (CMatrix, CMatrix),
    pub mass: CMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoccRun {
    pub branches: Vec<Branch>,
    /// Masses over complete records (counting measure, lexicographic order).
    pub state: HybridState,
    pub output: CMatrix,
}

/// Runs the protocol on `rho`, keeping one branch per complete record.
pub fn run(proto: &LoccProtocol, rho: &CMatrix) -> Result<LoccRun> {
    let d = proto.total_dim();
    if rho.rows() != d || rho.cols() != d {
        return Err(Error::DimensionMismatch(format!("state is {}x{}, protocol acts on {d}", rho.rows(), rho.cols())));
    }
    check_density(rho, STATE_TOL)?;
    let (d1, d2) = proto.dims;
    let mut branches = Vec::new();
    for record in proto.complete_records() {
        let mut w = CMatrix::identity(d);
        let mut f1 = CMatrix::identity(d1);
        let mut f2 = CMatrix::identity(d2);
        let mut reachable = true;
        for (r, round) in proto.rounds.iter().enumerate() {
            let history = &record.0[..r];
            let Some(ops) = round.ops(history) else {
                reachable = false;
                break;
            };
            let v = &ops[record.0[r] - 1];
            if is_exact_zero(v) {
                reachable = false;
                break;
            }
            w = proto.lift(round.side, v).matmul(&w);
            match round.side {
                Side::One => f1 = v.matmul(&f1),
                Side::Two => f2 = v.matmul(&f2),
            }
        }
        if !reachable {
            w = CMatrix::square_zeros(d);
            f1 = CMatrix::square_zeros(d1);
            f2 = CMatrix::square_zeros(d2);
        }
        let mass = w.conjugate(rho).hermitian_part();
        branches.push(Branch { record, w, factors: (f1, f2), mass });
    }
    let mut output = CMatrix::square_zeros(d);
    for b in &branches {
        output += &b.mass;
    }
    let masses = branches.iter().map(|b| b.mass.clone()).collect();
    let state = HybridState::new(ClassicalSpace::counting(branches.len()), masses)?;
    Ok(LoccRun { branches, state, output })
}

/// One hybrid operation per round on the full record space.
///
/// Round `r` moves mass from record `x'` to every record that differs from
/// `x'` only in position `r`, with Kraus operator `V^r_{x_r}` chosen by the
/// history `x'_1..x'_{r-1}`. Source records whose history is not a reachable
/// complete prefix carry no mass in the protocol; they get an identity block.
pub fn as_hybrid_channels(proto: &LoccProtocol) -> Result<Vec<HybridChannel>> {
    let size = proto.record_space_size();
    if size > MAX_RECORD_CELLS {
        return Err(Error::RecordSpaceTooLarge(size));
    }
    let space = ClassicalSpace::counting(size);
    let d = proto.total_dim();
    let mut channels = Vec::with_capacity(proto.rounds.len());
    for (r, round) in proto.rounds.iter().enumerate() {
        let lifted: BTreeMap<&Vec<usize>, Vec<CMatrix>> = round
            .instrument
            .iter()
            .map(|(h, ops)| (h, ops.iter().map(|v| proto.lift(round.side, v)).collect()))
            .collect();
        let mut blocks = Vec::new();
        for src in 0..size {
            let labels = proto.record_labels(src);
            let history = &labels[..r];
            let defined = if history.contains(&0) { None } else { lifted.get(&history.to_vec()) };
            match defined {
                Some(ops) => {
                    for (x, l) in ops.iter().enumerate() {
                        if is_exact_zero(l) {
                            continue;
                        }
                        let mut dst = labels.clone();
                        dst[r] = x + 1;
                        blocks.push(KrausBlock { m: proto.record_index(&dst)?, n: src, ops: vec![l.clone()] });
                    }
                }
                None => blocks.push(KrausBlock { m: src, n: src, ops: vec![CMatrix::identity(d)] }),
            }
        }
        channels.push(HybridChannel::from_blocks(space.clone(), space.clone(), d, d, blocks)?);
    }
    Ok(channels)
}

/// Point mass at the all-zero record with quantum part `rho`.
pub fn initial_record_state(proto: &LoccProtocol, rho: &CMatrix) -> Result<HybridState> {
    let size = proto.record_space_size();
    if size > MAX_RECORD_CELLS {
        return Err(Error::RecordSpaceTooLarge(size));
    }
    check_density(rho, STATE_TOL)?;
    let d = proto.total_dim();
    if rho.rows() != d {
        return Err(Error::DimensionMismatch(format!("state has dimension {}, protocol acts on {d}", rho.rows())));
    }
    let mut masses = vec![CMatrix::square_zeros(d); size];
    masses[0] = rho.clone();
    HybridState::new(ClassicalSpace::counting(size), masses)
}

fn check_ensemble(space: &ClassicalSpace, f: &[f64], eta1: &[CMatrix], eta2: &[CMatrix]) -> Result<(usize, usize)> {
    let n = space.len();
    if f.len() != n || eta1.len() != n || eta2.len() != n {
        return Err(Error::NotAState(format!(
            "{} cells but {} masses, {} and {} local states",
            n,
            f.len(),
            eta1.len(),
            eta2.len()
        )));
    }
    if f.iter().any(|&p| !(p >= 0.0)) {
        return Err(Error::NotAState("negative cell mass".into()));
    }
    let total: f64 = f.iter().sum();
    if (total - 1.0).abs() > STATE_TOL {
        return Err(Error::NotAState(format!("cell masses sum to {total}")));
    }
    let d1 = eta1.first().map_or(0, CMatrix::rows);
    let d2 = eta2.first().map_or(0, CMatrix::rows);
    for (a, b) in eta1.iter().zip(eta2) {
        if a.rows() != d1 || b.rows() != d2 {
            return Err(Error::NotAState("local states differ in dimension across cells".into()));
        }
        check_density(a, STATE_TOL)?;
        check_density(b, STATE_TOL)?;
    }
    Ok((d1, d2))
}

/// `Σ_n f_n η1_n ⊗ η2_n`.
pub fn separable_from_ensemble(
    space: &ClassicalSpace,
    f: &[f64],
    eta1: &[CMatrix],
    eta2: &[CMatrix],
) -> Result<CMatrix> {
    let (d1, d2) = check_ensemble(space, f, eta1, eta2)?;
    let mut out = CMatrix::square_zeros(d1 * d2);
    for ((p, a), b) in f.iter().zip(eta1).zip(eta2) {
        if *p > 0.0 {
            out.axpy(C64::new(*p, 0.0), &a.kron(b));
        }
    }
    Ok(out.hermitian_part())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PptVerdict {
    /// PPT in 2⊗2 or 2⊗3, where it is equivalent to separability.
    Separable,
    /// PPT in larger dimensions, which does not decide separability.
    PptNecessaryOnly,
    Entangled,
}

impl fmt::Display for PptVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PptVerdict::Separable => "PPT",
            PptVerdict::PptNecessaryOnly => "PPT (necessary only)",
            PptVerdict::Entangled => "NPT",
        })
    }
}

/// Smallest eigenvalue of the partial transpose on the second party.
pub fn partial_transpose_min_eigenvalue(rho: &CMatrix, d1: usize, d2: usize) -> Result<f64> {
    if rho.rows() != d1 * d2 || rho.cols() != d1 * d2 {
        return Err(Error::DimensionMismatch(format!("{}x{} matrix is not {d1}⊗{d2}", rho.rows(), rho.cols())));
    }
    min_eigenvalue(&partial_transpose(rho, d1, d2, Subsystem::B)?)
}

pub fn is_ppt(rho: &CMatrix, d1: usize, d2: usize) -> Result<bool> {
    Ok(partial_transpose_min_eigenvalue(rho, d1, d2)? >= -PPT_TOL)
}

pub fn ppt_verdict(rho: &CMatrix, d1: usize, d2: usize) -> Result<PptVerdict> {
    Ok(if !is_ppt(rho, d1, d2)? {
        PptVerdict::Entangled
    } else if d1 * d2 <= 6 {
        PptVerdict::Separable
    } else {
        PptVerdict::PptNecessaryOnly
    })
}

/// Separable target `Σ_n f_n η1_n ⊗ η2_n` given cell by cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableTarget {
    pub space: ClassicalSpace,
    pub f: Vec<f64>,
    pub eta1: Vec<CMatrix>,
    pub eta2: Vec<CMatrix>,
}

impl SeparableTarget {
    pub fn new(space: ClassicalSpace, f: Vec<f64>, eta1: Vec<CMatrix>, eta2: Vec<CMatrix>) -> Result<Self> {
        check_ensemble(&space, &f, &eta1, &eta2)?;
        Ok(Self { space, f, eta1, eta2 })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.eta1[0].rows(), self.eta2[0].rows())
    }

    pub fn state(&self) -> Result<CMatrix> {
        separable_from_ensemble(&self.space, &self.f, &self.eta1, &self.eta2)
    }
}

/// Collapse to `|0⟩⟨0| ⊗ |0⟩⟨0|`, sample a cell, then prepare both local
/// states of that cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringScript {
    pub collapse: LoccProtocol,
    pub sampling: HybridChannel,
    pub prepare: [HybridChannel; 2],
}

impl SteeringScript {
    pub fn channels(&self) -> Vec<&HybridChannel> {
        vec![&self.sampling, &self.prepare[0], &self.prepare[1]]
    }

    pub fn apply(&self, rho: &CMatrix) -> Result<HybridState> {
        let collapsed = run(&self.collapse, rho)?.output;
        let mut w = HybridState::new(ClassicalSpace::counting(1), vec![collapsed])?;
        for ch in self.channels() {
            w = ch.apply(&w)?;
        }
        Ok(w)
    }
}

/// Local preparation blocks `I - |0⟩⟨0|` and `√λ_k |v_k⟩⟨0|` from the
/// spectrum of `eta`.
fn preparation_ops(eta: &CMatrix) -> Result<Vec<CMatrix>> {
    let d = eta.rows();
    let e = hermitian_eig(eta)?;
    let lambdas: Vec<f64> = e.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = lambdas.iter().sum();
    let mut ops = vec![&CMatrix::identity(d) - &CMatrix::basis_projector(d, 0)];
    for (k, &l) in lambdas.iter().enumerate() {
        if l > 0.0 {
            let v = e.column(k);
            let s = (l / total).sqrt();
            ops.push(CMatrix::from_fn(d, d, |i, j| if j == 0 { v[i] * s } else { C64::new(0.0, 0.0) }));
        }
    }
    Ok(ops)
}

pub fn steer_to_separable(target: &SeparableTarget, dims: (usize, usize)) -> Result<SteeringScript> {
    check_ensemble(&target.space, &target.f, &target.eta1, &target.eta2)?;
    if target.dims() != dims {
        return Err(Error::NotAState(format!("target is {:?}, protocol dimensions are {dims:?}", target.dims())));
    }
    let (d1, d2) = dims;

    let to_ground = |d: usize| (0..d).map(|k| CMatrix::unit(d, 0, k)).collect::<Vec<_>>();
    let first = Round::uniform(Side::One, to_ground(d1), [Vec::new()]);
    let second = Round::uniform(Side::Two, to_ground(d2), (1..=d1).map(|k| vec![k]));
    let collapse = LoccProtocol::new(dims, vec![first, second])?;

    let total: f64 = target.f.iter().sum();
    let p: Vec<f64> = target.f.iter().map(|x| x / total).collect();
    let kernel = MarkovKernel::new(ClassicalSpace::counting(1), target.space.clone(), p)?;
    let sampling = non_interacting(&kernel, &[CMatrix::identity(d1 * d2)])?;

    let side_channel = |side: Side, etas: &[CMatrix]| -> Result<HybridChannel> {
        let mut blocks = Vec::with_capacity(etas.len());
        for (n, eta) in etas.iter().enumerate() {
            let ops = preparation_ops(eta)?
                .iter()
                .map(|l| match side {
                    Side::One => l.kron(&CMatrix::identity(d2)),
                    Side::Two => CMatrix::identity(d1).kron(l),
                })
                .collect();
            blocks.push(KrausBlock { m: n, n, ops });
        }
        HybridChannel::from_blocks(target.space.clone(), target.space.clone(), d1 * d2, d1 * d2, blocks)
    };
    let prepare = [side_channel(Side::One, &target.eta1)?, side_channel(Side::Two, &target.eta2)?];
    Ok(SteeringScript { collapse, sampling, prepare })
}

/// Random instrument with `outcomes` elements on dimension `d`. A quarter of
/// the draws are projective, padding with zero operators when there are more
/// outcomes than basis vectors.
fn random_instrument(rng: &mut impl Rng, d: usize, outcomes: usize) -> Result<Vec<CMatrix>> {
    if rng.random::<f64>() < 0.25 {
        let u = random_unitary(rng, d);
        let mut ops = vec![CMatrix::square_zeros(d); outcomes];
        for k in 0..d {
            let x = if k < outcomes { k } else { rng.random_range(0..outcomes) };
            let col = CMatrix::from_fn(d, 1, |i, _| u[(i, k)]);
            ops[x] += &col.matmul(&col.adjoint());
        }
        Ok(ops)
    } else {
        random_kraus(rng, d, d, outcomes)
    }
}

/// Random protocol with alternating sides, `rounds` rounds and between 1 and
/// `max_outcomes` outcomes per round; every reachable history gets its own
/// instrument.
pub fn random_protocol(
    rng: &mut impl Rng,
    dims: (usize, usize),
    rounds: usize,
    max_outcomes: usize,
) -> Result<LoccProtocol> {
    let mut out = Vec::with_capacity(rounds);
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for r in 0..rounds {
        let side = Side::alternating(r);
        let d = if side == Side::One { dims.0 } else { dims.1 };
        let outcomes = rng.random_range(1..=max_outcomes.max(1));
        let mut instrument = BTreeMap::new();
        let mut next = Vec::new();
        for h in frontier {
            let ops = random_instrument(rng, d, outcomes)?;
            for (x, v) in ops.iter().enumerate() {
                if !is_exact_zero(v) {
                    let mut child = h.clone();
                    child.push(x + 1);
                    next.push(child);
                }
            }
            instrument.insert(h, ops);
        }
        frontier = next;
        out.push(Round::new(side, outcomes, instrument));
    }
    LoccProtocol::new(dims, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{c64, trace_norm};
    use crate::random::{random_density, rng_from_seed};

    fn bell() -> CMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        CMatrix::projector(&[c64(s, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(s, 0.0)])
    }

    fn bell_measurement() -> LoccProtocol {
        let ops = vec![CMatrix::basis_projector(2, 0), CMatrix::basis_projector(2, 1)];
        LoccProtocol::new((2, 2), vec![Round::uniform(Side::One, ops, [Vec::new()])]).unwrap()
    }

    #[test]
    fn trivial_round_is_identity() {
        let proto =
            LoccProtocol::new((2, 2), vec![Round::uniform(Side::One, vec![CMatrix::identity(2)], [vec![]])]).unwrap();
        let rho = random_density(&mut rng_from_seed(1), 4, 4);
        let out = run(&proto, &rho).unwrap();
        assert_eq!(out.branches.len(), 1);
        assert!(out.output.max_abs_diff(&rho) < 1e-15);

        let ch = as_hybrid_channels(&proto).unwrap();
        assert_eq!(ch.len(), 1);
        let w = ch[0].apply(&initial_record_state(&proto, &rho).unwrap()).unwrap();
        assert!(w.mass(0).is_zero(0.0));
        assert!(w.mass(1).max_abs_diff(&rho) < 1e-15);
    }

    #[test]
    fn bell_measurement_decoheres() {
        let out = run(&bell_measurement(), &bell()).unwrap();
        let mut expected = CMatrix::square_zeros(4);
        expected[(0, 0)] = c64(0.5, 0.0);
        expected[(3, 3)] = c64(0.5, 0.0);
        assert!(out.output.max_abs_diff(&expected) < 1e-12);
        assert!(out.state.mass(0).max_abs_diff(&CMatrix::basis_projector(4, 0).scale(0.5)) < 1e-12);
        assert!(out.state.mass(1).max_abs_diff(&CMatrix::basis_projector(4, 3).scale(0.5)) < 1e-12);
        assert!(is_ppt(&out.output, 2, 2).unwrap());
        assert!(!is_ppt(&bell(), 2, 2).unwrap());
    }

    #[test]
    fn channels_reproduce_run() {
        let mut rng = rng_from_seed(21);
        for _ in 0..20 {
            let proto = random_protocol(&mut rng, (2, 3), 3, 3).unwrap();
            let rho = random_density(&mut rng, 6, 3);
            let direct = run(&proto, &rho).unwrap();
            let mut w = initial_record_state(&proto, &rho).unwrap();
            for ch in as_hybrid_channels(&proto).unwrap() {
                w = ch.apply(&w).unwrap();
            }
            for b in &direct.branches {
                let idx = proto.record_index(&b.record.0).unwrap();
                assert!(w.mass(idx).max_abs_diff(&b.mass) < 1e-10);
                assert!(b.w.max_abs_diff(&b.factors.0.kron(&b.factors.1)) < 1e-12);
            }
            assert!((direct.output.trace().re - 1.0).abs() < 1e-9);
            assert!(min_eigenvalue(&direct.output).unwrap() > -1e-9);
        }
    }

    #[test]
    fn incomplete_instruments_are_reported() {
        let ops = vec![CMatrix::basis_projector(2, 0)];
        let err = LoccProtocol::new((2, 2), vec![Round::uniform(Side::One, ops, [vec![]])]).unwrap_err();
        assert!(matches!(err, Error::IncompleteInstrument { ref history, .. } if history.is_empty()));

        let first =
            Round::uniform(Side::One, vec![CMatrix::basis_projector(2, 0), CMatrix::basis_projector(2, 1)], [vec![]]);
        let second = Round::uniform(Side::Two, vec![CMatrix::identity(2)], [vec![1]]);
        let err = LoccProtocol::new((2, 2), vec![first, second]).unwrap_err();
        assert_eq!(
            err,
            Error::IncompleteInstrument { history: vec![2], reason: "no instrument for this history".into() }
        );
    }

    #[test]
    fn unreachable_histories_need_no_instrument() {
        let first = Round::uniform(Side::One, vec![CMatrix::identity(2), CMatrix::square_zeros(2)], [vec![]]);
        let second = Round::uniform(Side::Two, vec![CMatrix::identity(2)], [vec![1]]);
        let proto = LoccProtocol::new((2, 2), vec![first, second]).unwrap();
        let rho = random_density(&mut rng_from_seed(2), 4, 2);
        let out = run(&proto, &rho).unwrap();
        assert!(out.output.max_abs_diff(&rho) < 1e-14);
        for ch in as_hybrid_channels(&proto).unwrap() {
            ch.check_completeness().unwrap();
        }
    }

    #[test]
    fn record_space_limit() {
        let ops: Vec<CMatrix> = (0..2).map(|k| CMatrix::basis_projector(2, k)).collect();
        let mut rounds = Vec::new();
        let mut histories = vec![vec![]];
        for r in 0..11 {
            rounds.push(Round::uniform(Side::alternating(r), ops.clone(), histories.clone()));
            histories = histories.iter().flat_map(|h| (1..=2).map(move |x| [h.clone(), vec![x]].concat())).collect();
        }
        let proto = LoccProtocol::new((2, 2), rounds).unwrap();
        assert_eq!(as_hybrid_channels(&proto).unwrap_err(), Error::RecordSpaceTooLarge(177_147));
    }

    #[test]
    fn separable_examples() {
        let space = ClassicalSpace::counting(2);
        let e = [CMatrix::basis_projector(2, 0), CMatrix::basis_projector(2, 1)];
        let rho = separable_from_ensemble(&space, &[0.5, 0.5], &e, &e).unwrap();
        assert!(is_ppt(&rho, 2, 2).unwrap());
        assert_eq!(ppt_verdict(&rho, 2, 2).unwrap(), PptVerdict::Separable);
        assert_eq!(ppt_verdict(&bell(), 2, 2).unwrap().to_string(), "NPT");
        let big = CMatrix::identity(9).scale(1.0 / 9.0);
        assert_eq!(ppt_verdict(&big, 3, 3).unwrap().to_string(), "PPT (necessary only)");
        assert!(separable_from_ensemble(&space, &[0.5, 0.6], &e, &e).is_err());
    }

    #[test]
    fn steering_from_bell_to_product() {
        let zero = CMatrix::basis_projector(2, 0);
        let target =
            SeparableTarget::new(ClassicalSpace::counting(1), vec![1.0], vec![zero.clone()], vec![zero.clone()])
                .unwrap();
        let script = steer_to_separable(&target, (2, 2)).unwrap();
        let out = script.apply(&bell()).unwrap();
        assert!(out.quantum_marginal().max_abs_diff(&zero.kron(&zero)) < 1e-15);
    }

    #[test]
    fn steering_reaches_random_targets() {
        let mut rng = rng_from_seed(8);
        let space = ClassicalSpace::new(vec![0.5, 1.5, 1.0]).unwrap();
        let eta1: Vec<CMatrix> = (0..3).map(|_| random_density(&mut rng, 2, 2)).collect();
        let eta2: Vec<CMatrix> = (0..3).map(|k| random_density(&mut rng, 3, k + 1)).collect();
        let target = SeparableTarget::new(space, vec![0.2, 0.5, 0.3], eta1, eta2).unwrap();
        let script = steer_to_separable(&target, (2, 3)).unwrap();
        for ch in script.channels() {
            ch.check_completeness().unwrap();
        }
        let rho = random_density(&mut rng, 6, 6);
        let out = script.apply(&rho).unwrap();
        assert!(trace_norm(&(&out.quantum_marginal() - &target.state().unwrap())).unwrap() < 1e-9);
    }
}
