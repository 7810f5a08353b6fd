//! Reference implementations used to check the library. Everything here is
//! written with explicit index loops and shares no numerics with the crate.
#![allow(dead_code, clippy::needless_range_loop)]

use hybridiq::{CMatrix, C64};

pub fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// `Σ_{j,k} L_ij σ_jk conj(L_lk)`, one entry at a time.
pub fn conj_loop(l: &CMatrix, sigma: &CMatrix) -> CMatrix {
    let (r, c) = (l.rows(), l.cols());
    let mut out = CMatrix::zeros(r, r);
    for i in 0..r {
        for q in 0..r {
            let mut acc = zero();
            for j in 0..c {
                for k in 0..c {
                    acc += l[(i, j)] * sigma[(j, k)] * l[(q, k)].conj();
                }
            }
            out[(i, q)] = acc;
        }
    }
    out
}

/// Triple loop over target cell, source cell and Kraus operator.
pub fn naive_apply(ch: &hybridiq::HybridChannel, masses: &[CMatrix]) -> Vec<CMatrix> {
    let d = ch.qdim_dst();
    let mut out = vec![CMatrix::square_zeros(d); ch.dst().len()];
    for m in 0..ch.dst().len() {
        for (n, sigma) in masses.iter().enumerate() {
            for l in ch.block(m, n) {
                out[m] += &conj_loop(l, sigma);
            }
        }
    }
    out
}

/// `σ'_m = Σ_n P(m,n) Σ_k K_k σ_n K_k^†`.
pub fn direct_non_interacting(p: &[f64], rows: usize, kraus: &[CMatrix], masses: &[CMatrix]) -> Vec<CMatrix> {
    let cols = masses.len();
    let d = kraus[0].rows();
    let mut out = vec![CMatrix::square_zeros(d); rows];
    for m in 0..rows {
        for n in 0..cols {
            let w = p[m * cols + n];
            for k in kraus {
                out[m].axpy(C64::new(w, 0.0), &conj_loop(k, &masses[n]));
            }
        }
    }
    out
}

/// `σ'_m = Σ_n Σ_{a,b} k_ab(m,n) B_a σ_n B_b^†` by explicit index sums.
pub fn direct_coeff(
    basis: &[CMatrix],
    entries: &[(usize, usize, CMatrix)],
    rows: usize,
    masses: &[CMatrix],
) -> Vec<CMatrix> {
    let d = basis[0].rows();
    let mut out = vec![CMatrix::square_zeros(d); rows];
    for (m, n, k) in entries {
        let sigma = &masses[*n];
        for (a, ba) in basis.iter().enumerate() {
            for (b, bb) in basis.iter().enumerate() {
                let c = k[(a, b)];
                for i in 0..d {
                    for q in 0..d {
                        let mut acc = zero();
                        for j in 0..d {
                            for l in 0..d {
                                acc += ba[(i, j)] * sigma[(j, l)] * bb[(q, l)].conj();
                            }
                        }
                        out[*m][(i, q)] += c * acc;
                    }
                }
            }
        }
    }
    out
}

/// Eigenvalues of a Hermitian matrix, ascending. Cyclic Jacobi on the real
/// symmetric embedding `[[Re, -Im], [Im, Re]]`, whose spectrum is that of the
/// input with every eigenvalue doubled.
pub fn eigenvalues(m: &CMatrix) -> Vec<f64> {
    let n = m.rows();
    let size = 2 * n;
    let mut a = vec![vec![0.0f64; size]; size];
    for i in 0..n {
        for j in 0..n {
            let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            a[i][j] = z.re;
            a[i + n][j + n] = z.re;
            a[i][j + n] = -z.im;
            a[i + n][j] = z.im;
        }
    }
    for _sweep in 0..100 {
        let off: f64 = (0..size)
            .flat_map(|i| (0..size).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let scale: f64 = (0..size).map(|i| a[i][i] * a[i][i]).sum::<f64>() + off;
        if off <= 1e-32 * scale.max(1e-300) {
            break;
        }
        for p in 0..size {
            for q in p + 1..size {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..size {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..size {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut diag: Vec<f64> = (0..size).map(|i| a[i][i]).collect();
    diag.sort_by(|x, y| x.partial_cmp(y).unwrap());
    diag.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

pub fn min_eig(m: &CMatrix) -> f64 {
    eigenvalues(m)[0]
}

pub fn trace_norm(m: &CMatrix) -> f64 {
    eigenvalues(m).iter().map(|x| x.abs()).sum()
}

/// Natural-log entropy of the spectrum, ignoring non-positive eigenvalues.
pub fn entropy(m: &CMatrix) -> f64 {
    eigenvalues(m).iter().filter(|&&x| x > 1e-15).map(|&x| -x * x.ln()).sum()
}

pub fn trace(m: &CMatrix) -> f64 {
    (0..m.rows()).map(|i| m[(i, i)].re).sum()
}

/// Holevo quantity of the cell ensemble of `masses`.
pub fn holevo_of_masses(masses: &[CMatrix]) -> f64 {
    let d = masses[0].rows();
    let mut avg = CMatrix::square_zeros(d);
    let mut inner = 0.0;
    for s in masses {
        let p = trace(s);
        avg += s;
        if p > 1e-12 {
            inner += p * entropy(&s.scale(1.0 / p));
        }
    }
    entropy(&avg) - inner
}

/// `tr_B` of a `(da·db)`-dimensional operator.
pub fn trace_out_b(m: &CMatrix, da: usize, db: usize) -> CMatrix {
    let mut out = CMatrix::square_zeros(da);
    for i in 0..da {
        for j in 0..da {
            for k in 0..db {
                out[(i, j)] += m[(i * db + k, j * db + k)];
            }
        }
    }
    out
}

/// `tr_A` of a `(da·db)`-dimensional operator.
pub fn trace_out_a(m: &CMatrix, da: usize, db: usize) -> CMatrix {
    let mut out = CMatrix::square_zeros(db);
    for i in 0..db {
        for j in 0..db {
            for k in 0..da {
                out[(i, j)] += m[(k * db + i, k * db + j)];
            }
        }
    }
    out
}

/// Transpose on the second factor.
pub fn transpose_b(m: &CMatrix, da: usize, db: usize) -> CMatrix {
    let mut out = CMatrix::square_zeros(da * db);
    for a in 0..da {
        for b in 0..db {
            for c in 0..da {
                for e in 0..db {
                    out[(a * db + b, c * db + e)] = m[(a * db + e, c * db + b)];
                }
            }
        }
    }
    out
}

pub fn kron_loop(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca, rb, cb) = (a.rows(), a.cols(), b.rows(), b.cols());
    let mut out = CMatrix::zeros(ra * rb, ca * cb);
    for i in 0..ra {
        for j in 0..ca {
            for k in 0..rb {
                for l in 0..cb {
                    out[(i * rb + k, j * cb + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn matmul_loop(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            for k in 0..a.cols() {
                out[(i, j)] += a[(i, k)] * b[(k, j)];
            }
        }
    }
    out
}

/// All complete outcome records for per-round outcome counts, first round
/// varying slowest; labels start at 1.
pub fn enumerate_records(counts: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &y in counts {
        out = out.into_iter().flat_map(|r| (1..=y).map(move |x| [r.clone(), vec![x]].concat())).collect();
    }
    out
}

/// Branch masses of a protocol evaluated record by record: lift each local
/// operator, multiply in round order, conjugate `rho`.
pub fn locc_masses(proto: &hybridiq::locc::LoccProtocol, rho: &CMatrix) -> Vec<(Vec<usize>, CMatrix)> {
    let (d1, d2) = proto.dims();
    let d = d1 * d2;
    let mut out = Vec::new();
    for rec in enumerate_records(&proto.outcome_counts()) {
        let mut w = CMatrix::identity(d);
        let mut live = true;
        for (r, round) in proto.rounds().iter().enumerate() {
            let Some(ops) = round.ops(&rec[..r]) else {
                live = false;
                break;
            };
            let v = &ops[rec[r] - 1];
            if v.data().iter().all(|z| z.re == 0.0 && z.im == 0.0) {
                live = false;
                break;
            }
            let lifted = match round.side {
                hybridiq::locc::Side::One => kron_loop(v, &CMatrix::identity(d2)),
                hybridiq::locc::Side::Two => kron_loop(&CMatrix::identity(d1), v),
            };
            w = matmul_loop(&lifted, &w);
        }
        let mass = if live { conj_loop(&w, rho) } else { CMatrix::square_zeros(d) };
        out.push((rec, mass));
    }
    out
}

pub fn max_diff(a: &[CMatrix], b: &[CMatrix]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.max_abs_diff(y)).fold(0.0, f64::max)
}

pub fn bell() -> CMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let v = [C64::new(h, 0.0), zero(), zero(), C64::new(h, 0.0)];
    CMatrix::projector(&v)
}

/// Characteristic polynomial coefficients `c_0..c_n` (monic) by
/// Faddeev–LeVerrier.
pub fn charpoly(a: &CMatrix) -> Vec<C64> {
    let n = a.rows();
    let mut c = vec![zero(); n + 1];
    c[n] = C64::new(1.0, 0.0);
    let mut m = CMatrix::square_zeros(n);
    for k in 1..=n {
        let mut next = matmul_loop(a, &m);
        for i in 0..n {
            next[(i, i)] += c[n - k + 1];
        }
        let am = matmul_loop(a, &next);
        let tr: C64 = (0..n).map(|i| am[(i, i)]).sum();
        c[n - k] = -tr / k as f64;
        m = next;
    }
    c
}

/// Polynomial roots by Durand–Kerner iteration, real parts ascending.
pub fn charpoly_roots(a: &CMatrix) -> Vec<f64> {
    let c = charpoly(a);
    let n = c.len() - 1;
    let radius = 1.0 + c[..n].iter().map(|z| z.norm()).fold(0.0, f64::max);
    let seed = C64::new(0.4, 0.9);
    let mut z: Vec<C64> = (0..n).map(|k| seed.powu(k as u32) * radius).collect();
    let eval = |x: C64| c.iter().rev().fold(zero(), |acc, &ck| acc * x + ck);
    for _ in 0..2000 {
        let mut delta = 0.0f64;
        for i in 0..n {
            let mut denom = C64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    denom *= z[i] - z[j];
                }
            }
            let step = eval(z[i]) / denom;
            z[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 * radius {
            break;
        }
    }
    let mut re: Vec<f64> = z.iter().map(|x| x.re).collect();
    re.sort_by(|x, y| x.partial_cmp(y).unwrap());
    re
}
