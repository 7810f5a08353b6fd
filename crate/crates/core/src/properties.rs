//! Randomized property suites.
//!
//! Each trial draws its own generator from `derive_indexed(seed, suite, i)`,
//! so trials are independent of each other and of the thread count. Trials
//! run in parallel and are merged in trial order.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    compose, from_coeff_kernel, matrix_unit_basis, pauli_basis, sample_channel, sample_coeff_kernel,
    sample_non_interacting,
};
use crate::classical::ClassicalSpace;
use crate::correlations::{
    araki_lieb_bound, holevo, monotonicity_report, mutual_information, mutual_information_relative,
    mutual_information_three_term, Ensemble,
};
use crate::error::{Error, Result};
use crate::locc::{
    as_hybrid_channels, initial_record_state, partial_transpose_min_eigenvalue, random_protocol, run,
    separable_from_ensemble, steer_to_separable, SeparableTarget,
};
use crate::operator::{min_eigenvalue, partial_trace, trace_norm, CMatrix, Subsystem};
use crate::random::{
    derive_indexed, random_density, random_distribution, random_effect, random_effect_decomposition, random_space,
    rng_from_seed, SimRng,
};
use crate::state::{sample_state, Effect, HybridState};

pub const SUITES: [&str; 6] = ["axioms", "metric", "channel", "vieq", "correlations", "locc"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub trial: usize,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyResult {
    pub name: String,
    pub tolerance: f64,
    pub checks: usize,
    pub violations: usize,
    pub max_deviation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<Failure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub trials: usize,
    pub seed: u64,
    pub passed: bool,
    pub violations: usize,
    pub properties: Vec<PropertyResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

impl SuiteReport {
    pub fn property(&self, name: &str) -> Option<&PropertyResult> {
        self.properties.iter().find(|p| p.name == name)
    }
}

/// Measurements of one trial.
#[derive(Debug, Default)]
pub struct Probe {
    entries: Vec<(&'static str, f64, f64)>,
}

impl Probe {
    /// Records `deviation`, a violation when it exceeds `tolerance` or is NaN.
    pub fn check(&mut self, name: &'static str, deviation: f64, tolerance: f64) {
        self.entries.push((name, deviation, tolerance));
    }
}

type Trial = fn(&mut SimRng, &mut Probe) -> Result<()>;

fn trial_fn(name: &str) -> Result<Trial> {
    Ok(match name {
        "axioms" => axioms_trial,
        "metric" => metric_trial,
        "channel" => channel_trial,
        "vieq" => vieq_trial,
        "correlations" => correlations_trial,
        "locc" => locc_trial,
        _ => return Err(Error::UnknownSuite(name.into())),
    })
}

pub fn run_suite(name: &str, trials: usize, seed: u64) -> Result<SuiteReport> {
    let trial = trial_fn(name)?;
    let outcomes: Vec<(Probe, Option<String>)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_indexed(seed, name, i as u64));
            let mut probe = Probe::default();
            let err = trial(&mut rng, &mut probe).err().map(|e| format!("trial {i}: {e}"));
            (probe, err)
        })
        .collect();

    let mut properties: Vec<PropertyResult> = Vec::new();
    let mut errors = Vec::new();
    for (i, (probe, err)) in outcomes.into_iter().enumerate() {
        errors.extend(err);
        for (pname, dev, tol) in probe.entries {
            let idx = match properties.iter().position(|p| p.name == pname) {
                Some(k) => k,
                None => {
                    properties.push(PropertyResult {
                        name: pname.into(),
                        tolerance: tol,
                        checks: 0,
                        violations: 0,
                        max_deviation: 0.0,
                        first_failure: None,
                    });
                    properties.len() - 1
                }
            };
            let p = &mut properties[idx];
            p.checks += 1;
            if dev.is_nan() || dev > p.max_deviation {
                p.max_deviation = dev;
            }
            if !(dev <= tol) {
                p.violations += 1;
                p.first_failure.get_or_insert(Failure { trial: i, deviation: dev });
            }
        }
    }
    let violations = properties.iter().map(|p| p.violations).sum::<usize>() + errors.len();
    Ok(SuiteReport { suite: name.into(), trials, seed, passed: violations == 0, violations, properties, errors })
}

fn random_event(rng: &mut impl Rng, cells: usize) -> Vec<usize> {
    (0..cells).filter(|_| rng.random::<bool>()).collect()
}

fn random_state(rng: &mut SimRng, space: &ClassicalSpace, qdim: usize) -> HybridState {
    let rank = rng.random_range(1..=qdim);
    let empty = rng.random::<f64>() < 0.3;
    sample_state(rng, space, qdim, rank, empty)
}

fn max_block_diff(a: &HybridState, b: &HybridState) -> f64 {
    a.masses().iter().zip(b.masses()).map(|(x, y)| x.max_abs_diff(y)).fold(0.0, f64::max)
}

fn negativity(m: &CMatrix) -> Result<f64> {
    Ok((-min_eigenvalue(m)?).max(0.0))
}

/// Non-negativity, disjoint additivity, effect additivity, normalization.
fn axioms_trial(rng: &mut SimRng, probe: &mut Probe) -> Result<()> {
    let n = rng.random_range(1..=16);
    let d = rng.random_range(1..=6);
    let space = random_space(rng, n);
    let w = random_state(rng, &space, d);

    let mut a = Vec::new();
    let mut b = Vec::new();
    for cell in 0..n {
        match rng.random_range(0..3) {
            0 => a.push(cell),
            1 => b.push(cell),
            _ => {}
        }
    }
    let mut union: Vec<usize> = a.iter().chain(&b).copied().collect();
    union.shuffle(rng);

    let parts_count = rng.random_range(1..=4);
    let parts: Vec<Effect> =
        random_effect_decomposition(rng, d, parts_count).into_iter().map(Effect::new).collect::<Result<_>>()?;
    let mut total = CMatrix::square_zeros(d);
    for p in &parts {
        total += p.matrix();
    }
    let e = Effect::new(total)?;

    let mut worst_negative = 0.0f64;
    for event in [&a, &b, &union] {
        for eff in parts.iter().chain(std::iter::once(&e)) {
            worst_negative = worst_negative.max(-w.probability(event, eff)?);
        }
    }
    probe.check("nonnegativity", worst_negative.max(0.0), 1e-12);

    let additivity = (w.probability(&union, &e)? - w.probability(&a, &e)? - w.probability(&b, &e)?).abs();
    probe.check("event_additivity", additivity, 1e-12);

    let mut split = 0.0;
    for p in &parts {
        split += w.probability(&union, p)?;
    }
    probe.check("effect_additivity", (w.probability(&union, &e)? - split).abs(), 1e-10);

    probe.check("normalization", (w.probability_all(&Effect::identity(d))? - 1.0).abs(), 1e-9);
    Ok(())
}

/// Metric axioms and the isometry to the trace norm of embedded states.
fn metric_trial(rng: &mut SimRng, probe: &mut Probe) -> Result<()> {
    let n = rng.random_range(1..=16);
    let d = rng.random_range(1..=6);
    let space = random_space(rng, n);
    let w1 = random_state(rng, &space, d);
    let w2 = random_state(rng, &space, d);
    let w3 = random_state(rng, &space, d);

    let d12 = w1.distance(&w2)?;
    let d21 = w2.distance(&w1)?;
    let d13 = w1.distance(&w3)?;
    let d23 = w2.distance(&w3)?;
    probe.check("symmetry", (d12 - d21).abs(), 0.0);
    probe.check("triangle", (d13 - d12 - d23).max(0.0), 1e-10);
    probe.check("identity", w1.distance(&w1.clone())?, 1e-12);
    probe.check("positivity", if d12 > 0.0 || max_block_diff(&w1, &w2) <= 1e-12 { 0.0 } else { 1.0 }, 0.0);
    let embedded = trace_norm(&(&w1.embed_quantum() - &w2.embed_quantum()))?;
    probe.check("embedding_isometry", (embedded - d12).abs(), 1e-10);
    Ok(())
}

/// Validity, convex-linearity, contraction and the alternative evaluation
/// routes of channels.
fn channel_trial(rng: &mut SimRng, probe: &mut Probe) -> Result<()> {
    let ns = rng.random_range(1..=6);
    let nd = rng.random_range(1..=6);
    let ds = rng.random_range(1..=4);
    let dd = rng.random_range(1..=4);
    let branching = rng.random_range(1..=2);
    let src = random_space(rng, ns);
    let dst = random_space(rng, nd);
    let ch = sample_channel(rng, &src, &dst, ds, dd, branching)?;
    let w1 = random_state(rng, &src, ds);
    let w2 = random_state(rng, &src, ds);
    let t: f64 = rng.random();

    let o1 = ch.apply(&w1)?;
    let o2 = ch.apply(&w2)?;
    probe.check("trace_preservation", (o1.total_trace() - 1.0).abs(), 1e-9);
    probe.check("positivity", (-o1.min_block_eigenvalue()?).max(0.0), 1e-9);

    let mixed_in = ch.apply(&HybridState::mix(t, &w1, &w2)?)?;
    let mixed_out = HybridState::mix(t, &o1, &o2)?;
    probe.check("convex_linearity", max_block_diff(&mixed_in, &mixed_out), 1e-11);

    probe.check("contraction", (o1.distance(&o2)? - w1.distance(&w2)?).max(0.0), 1e-9);

    // the same map as ordinary Kraus operators on the embedded state
    let mut embedded = CMatrix::square_zeros(dd * nd);
    let hat = w1.embed_quantum();
    for k in ch.embedded_kraus() {
        embedded += &k.conjugate(&hat);
    }
    probe.check("embedding_equivalence", embedded.max_abs_diff(&o1.embed_quantum()), 1e-11);

    let d = rng.random_range(1..=3);
    let basis = if d == 2 && rng.random::<bool>() { pauli_basis() } else { matrix_unit_basis(d) };
    let k = sample_coeff_kernel(rng, &basis, &src, &dst, d, 1)?;
    let wk = random_state(rng, &src, d);
    let via_blocks = from_coeff_kernel(&basis, &k)?.apply(&wk)?;
    probe.check("coeff_kernel_cross_form", max_block_diff(&via_blocks, &k.apply_direct(&basis, &wk)?), 1e-10);

    let ns_mid = rng.random_range(1..=3);
    let s = random_space(rng, ns_mid);
    let q = rng.random_range(1..=2);
    let a = sample_channel(rng, &src, &s, ds, q, 1)?;
    let b = sample_channel(rng, &s, &s, q, q, 1)?;
    let c = sample_channel(rng, &s, &dst, q, dd, 1)?;
    let left = compose(&compose(&c, &b)?, &a)?.apply(&w1)?;
    let right = compose(&c, &compose(&b, &a)?)?.apply(&w1)?;
    probe.check("composition_associativity", max_block_diff(&left, &right), 1e-10);
    Ok(())
}

/// Ancilla extension commutes with conditioning on an ancilla effect.
fn vieq_trial(rng: &mut SimRng, probe: &mut Probe) -> Result<()> {
    let ns = rng.random_range(1..=5);
    let nd = rng.random_range(1..=5);
    let d = rng.random_range(1..=3);
    let d_out = rng.random_range(1..=3);
    let dq = rng.random_range(1..=3);
    let src = random_space(rng, ns);
    let dst = random_space(rng, nd);
    let branching = rng.random_range(1..=2);
    let ch = sample_channel(rng, &src, &dst, d, d_out, branching)?;
    let ext = ch.extend_with_ancilla(dq)?;
    let big = random_state(rng, &src, d * dq);
    let f = Effect::new(random_effect(rng, dq))?;
    let e = Effect::new(random_effect(rng, d_out))?;
    let event = random_event(rng, nd);

    let after = ext.apply(&big)?;
    let lhs = after.probability(&event, &e.kron(&f))?;
    let prob_f = big.probability_all(&Effect::identity(d).kron(&f))?;
    let rhs = match big.condition_on_effect(&f) {
        Ok(cond) => prob_f * ch.apply(&cond.state)?.probability(&event, &e)?,
        Err(Error::ZeroProbability(_)) => 0.0,
        Err(err) => return Err(err),
    };
    probe.check("probability_identity", (lhs - rhs).abs(), 1e-9);

    let before_q = partial_trace(&big.quantum_marginal(), d, dq, Subsystem::A)?;
    let after_q = partial_trace(&after.quantum_marginal(), d_out, dq, Subsystem::A)?;
    probe.check("ancilla_marginal", before_q.max_abs_diff(&after_q), 1e-10);
    Ok(())
}

/// Araki-Lieb bound, monotonicity, and agreement of the three evaluations
/// of the mutual information.
fn correlations_trial(rng: &mut SimRng, probe: &mut Probe) -> Result<()> {
    let n = rng.random_range(1..=8);
    let d = rng.random_range(1..=6);
    let space = random_space(rng, n);
    let w = random_state(rng, &space, d);
    let i = mutual_information(&w)?;
    probe.check("araki_lieb", (i - araki_lieb_bound(&w)?).max(0.0), 1e-9);

    let nd = rng.random_range(1..=8);
    let dst = random_space(rng, nd);
    let kraus_count = rng.random_range(1..=3);
    let ch = sample_non_interacting(rng, &space, &dst, d, kraus_count)?;
    let report = monotonicity_report(&w, &ch)?;
    probe.check("monotonicity", (report.i_after - report.i_before).max(0.0), 1e-8);

    let full = sample_state(rng, &space, d, d, false);
    let i_full = mutual_information(&full)?;
    probe.check("relative_entropy_identity", (i_full - mutual_information_relative(&full)?).abs(), 1e-8);
    probe.check("three_term_formula", (i_full - mutual_information_three_term(&full)?).abs(), 1e-9);

    // splitting a member into two copies of the same state leaves χ unchanged
    let members = rng.random_range(1..=4);
    let probs = random_distribution(rng, members, false);
    let states: Vec<CMatrix> = (0..members)
        .map(|_| {
            let rank = rng.random_range(1..=d);
            random_density(rng, d, rank)
        })
        .collect();
    let chi = holevo(&Ensemble::new(probs.clone(), states.clone())?)?;
    let cut: f64 = rng.random();
    let mut split_p = probs.clone();
    split_p[0] *= cut;
    split_p.push(probs[0] * (1.0 - cut));
    let mut split_s = states;
    split_s.push(split_s[0].clone());
    let chi_split = holevo(&Ensemble::new(split_p, split_s)?)?;
    probe.check("holevo_duplicate_merge", (chi - chi_split).abs(), 1e-10);
    Ok(())
}

fn random_target(rng: &mut SimRng, n: usize, dims: (usize, usize)) -> Result<SeparableTarget> {
    let space = random_space(rng, n);
    let f = random_distribution(rng, n, true);
    let mut local = |d: usize| {
        (0..n)
            .map(|_| {
                let rank = rng.random_range(1..=d);
                random_density(rng, d, rank)
            })
            .collect::<Vec<_>>()
    };
    let eta1 = local(dims.0);
    let eta2 = local(dims.1);
    SeparableTarget::new(space, f, eta1, eta2)
}

/// Protocol runs, their channel form, PPT preservation and steering.
fn locc_trial(rng: &mut SimRng, probe: &mut Probe) -> Result<()> {
    let dims = if rng.random::<bool>() { (2, 2) } else { (2, 3) };
    let rounds = rng.random_range(1..=3);
    let proto = random_protocol(rng, dims, rounds, 3)?;
    let rank = rng.random_range(1..=dims.0 * dims.1);
    let rho = random_density(rng, dims.0 * dims.1, rank);
    let out = run(&proto, &rho)?;
    probe.check("trace_preservation", (out.output.trace().re - 1.0).abs(), 1e-9);
    probe.check("positivity", negativity(&out.output)?, 1e-9);
    let tensor = out.branches.iter().map(|b| b.w.max_abs_diff(&b.factors.0.kron(&b.factors.1))).fold(0.0, f64::max);
    probe.check("tensor_structure", tensor, 1e-12);

    let mut w = initial_record_state(&proto, &rho)?;
    for ch in as_hybrid_channels(&proto)? {
        w = ch.apply(&w)?;
    }
    let mut agreement = 0.0f64;
    for b in &out.branches {
        agreement = agreement.max(w.mass(proto.record_index(&b.record.0)?).max_abs_diff(&b.mass));
    }
    probe.check("channels_match_run", agreement, 1e-10);

    let cells = rng.random_range(1..=4);
    let sep = random_target(rng, cells, dims)?;
    let sep_out = run(&proto, &sep.state()?)?.output;
    let pt = partial_transpose_min_eigenvalue(&sep_out, dims.0, dims.1)?;
    probe.check("ppt_preservation", (-pt).max(0.0), 1e-9);

    let tdims = (rng.random_range(1..=3), rng.random_range(1..=3));
    let cells = rng.random_range(1..=8);
    let target = random_target(rng, cells, tdims)?;
    let script = steer_to_separable(&target, tdims)?;
    let rank = rng.random_range(1..=tdims.0 * tdims.1);
    let input = random_density(rng, tdims.0 * tdims.1, rank);
    let reached = script.apply(&input)?.quantum_marginal();
    let expected = separable_from_ensemble(&target.space, &target.f, &target.eta1, &target.eta2)?;
    probe.check("steering", trace_norm(&(&reached - &expected))?, 1e-9);
    Ok(())
}
