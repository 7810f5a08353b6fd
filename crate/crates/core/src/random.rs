//! Seeded sampling of matrices, states, effects and Kraus sets.
//!
//! Every public entry point that takes a `u64` seed is deterministic.
//! Sub-streams are derived from a parent seed and a text label, so adding a
//! new consumer never shifts the draws of an existing one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::classical::{ClassicalSpace, MarkovKernel};
use crate::error::{Error, Result};
use crate::operator::{c64, hermitian_eig, kraus_gram_sum, CMatrix, C64};

pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for `label` under `seed` (FNV-1a of the label, then SplitMix64).
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    splitmix64(seed ^ splitmix64(h))
}

/// Child seed for the `index`-th trial of a stream.
pub fn derive_indexed(seed: u64, label: &str, index: u64) -> u64 {
    splitmix64(derive_seed(seed, label) ^ splitmix64(index.wrapping_add(1)))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Complex Ginibre matrix with unit-variance entries.
pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| c64(gaussian(rng) * s, gaussian(rng) * s))
}

/// Haar-ish unitary from Gram-Schmidt on a Ginibre matrix.
pub fn random_unitary(rng: &mut impl Rng, dim: usize) -> CMatrix {
    loop {
        let g = gaussian_matrix(rng, dim, dim);
        let mut cols: Vec<Vec<C64>> = Vec::with_capacity(dim);
        let mut ok = true;
        for j in 0..dim {
            let mut v: Vec<C64> = (0..dim).map(|i| g[(i, j)]).collect();
            for _ in 0..2 {
                for q in &cols {
                    let proj: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                    for (x, y) in v.iter_mut().zip(q) {
                        *x -= proj * y;
                    }
                }
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-8 {
                ok = false;
                break;
            }
            v.iter_mut().for_each(|z| *z /= norm);
            cols.push(v);
        }
        if ok {
            return CMatrix::from_fn(dim, dim, |i, j| cols[j][i]);
        }
    }
}

/// `U diag(spectrum) U^dagger` for a random unitary `U`.
pub fn with_spectrum(rng: &mut impl Rng, spectrum: &[f64]) -> CMatrix {
    let u = random_unitary(rng, spectrum.len());
    u.conjugate(&CMatrix::from_real_diag(spectrum)).hermitian_part()
}

/// Unnormalized Wishart block `G G^dagger` with `G` of shape `dim x rank`.
pub fn wishart(rng: &mut impl Rng, dim: usize, rank: usize) -> CMatrix {
    let g = gaussian_matrix(rng, dim, rank.max(1));
    g.matmul(&g.adjoint()).hermitian_part()
}

pub fn random_density(rng: &mut impl Rng, dim: usize, rank: usize) -> CMatrix {
    let w = wishart(rng, dim, rank);
    let tr = w.trace().re;
    w.scale(1.0 / tr)
}

pub fn random_pure(rng: &mut impl Rng, dim: usize) -> CMatrix {
    random_density(rng, dim, 1)
}

/// Effect `0 <= E <= I` with eigenvalues uniform in `[0, 1]`.
pub fn random_effect(rng: &mut impl Rng, dim: usize) -> CMatrix {
    let spectrum: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    with_spectrum(rng, &spectrum)
}

/// `parts` positive operators whose sum is an effect.
pub fn random_effect_decomposition(rng: &mut impl Rng, dim: usize, parts: usize) -> Vec<CMatrix> {
    let pieces: Vec<CMatrix> = (0..parts)
        .map(|_| {
            let rank = 1 + rng.random_range(0..dim);
            wishart(rng, dim, rank)
        })
        .collect();
    let mut total = CMatrix::square_zeros(dim);
    for p in &pieces {
        total += p;
    }
    let top = hermitian_eig(&total).map(|e| e.max()).unwrap_or(1.0).max(1e-300);
    let fill: f64 = rng.random_range(0.2..1.0);
    pieces.into_iter().map(|p| p.scale(fill / top)).collect()
}

/// `M^{-1/2}` for a positive definite `M`; fails when `M` is numerically
/// singular.
pub fn inverse_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let e = hermitian_eig(m)?;
    if e.min() <= 1e-10 * e.max().max(1e-300) {
        return Err(Error::NumericalFailure(format!(
            "normalizer is singular (eigenvalues {:.3e}..{:.3e})",
            e.min(),
            e.max()
        )));
    }
    Ok(e.map(|l| 1.0 / l.sqrt()))
}

/// Right-normalizes a list of operators so that `Σ L^dagger L = I`.
pub fn right_normalize(ops: &mut [CMatrix]) -> Result<()> {
    let Some(first) = ops.first() else {
        return Err(Error::NumericalFailure("no operators to normalize".into()));
    };
    let dim = first.cols();
    let mut m = CMatrix::square_zeros(dim);
    for l in ops.iter() {
        m += &l.gram();
    }
    let inv = inverse_sqrt(&m.hermitian_part())?;
    for l in ops.iter_mut() {
        *l = l.matmul(&inv);
    }
    // an ill-conditioned normalizer leaves a residual; a few more passes
    // remove it
    let id = CMatrix::identity(dim);
    for _ in 0..4 {
        let gram = kraus_gram_sum(ops.iter(), dim).hermitian_part();
        if gram.max_abs_diff(&id) <= 1e-14 {
            break;
        }
        let inv = inverse_sqrt(&gram)?;
        for l in ops.iter_mut() {
            *l = l.matmul(&inv);
        }
    }
    Ok(())
}

/// Random trace-preserving Kraus set of `count` operators `d_out x d_in`,
/// raised to `⌈d_in / d_out⌉` when fewer could not be complete.
pub fn random_kraus(rng: &mut impl Rng, d_out: usize, d_in: usize, count: usize) -> Result<Vec<CMatrix>> {
    let count = count.max(d_in.div_ceil(d_out.max(1))).max(1);
    for _ in 0..4 {
        let mut ops: Vec<CMatrix> = (0..count).map(|_| gaussian_matrix(rng, d_out, d_in)).collect();
        if right_normalize(&mut ops).is_ok() {
            return Ok(ops);
        }
    }
    Err(Error::NumericalFailure("could not draw a complete Kraus set".into()))
}

/// Random probability vector with occasional exact zeros.
pub fn random_distribution(rng: &mut impl Rng, n: usize, allow_zeros: bool) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            if allow_zeros && n > 1 && rng.random::<f64>() < 0.15 {
                0.0
            } else {
                -rng.random::<f64>().max(1e-12).ln()
            }
        })
        .collect();
    if v.iter().all(|&x| x == 0.0) {
        v[rng.random_range(0..n)] = 1.0;
    }
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Random column-stochastic kernel; sparse columns when `allow_zeros`.
pub fn random_kernel(
    rng: &mut impl Rng,
    src: &ClassicalSpace,
    dst: &ClassicalSpace,
    allow_zeros: bool,
) -> MarkovKernel {
    let (rows, cols) = (dst.len(), src.len());
    let mut p = vec![0.0; rows * cols];
    for n in 0..cols {
        let col = random_distribution(rng, rows, allow_zeros);
        for m in 0..rows {
            p[m * cols + n] = col[m];
        }
    }
    // renormalize each column exactly in the order validation sums it
    for n in 0..cols {
        let s: f64 = (0..rows).map(|m| p[m * cols + n]).sum();
        for m in 0..rows {
            p[m * cols + n] /= s;
        }
    }
    MarkovKernel::new(src.clone(), dst.clone(), p).expect("sampled kernel is stochastic")
}

/// Random space of `n` cells with weights in `[0.1, 2.1)`.
pub fn random_space(rng: &mut impl Rng, n: usize) -> ClassicalSpace {
    let w = (0..n).map(|_| 0.1 + 2.0 * rng.random::<f64>()).collect();
    ClassicalSpace::new(w).expect("weights are positive")
}
