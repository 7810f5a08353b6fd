use serde::{Deserialize, Serialize};

use super::{CMatrix, C64};
use crate::error::{Error, Result};

/// Factor of a bipartite space `H_A ⊗ H_B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subsystem {
    A,
    B,
}

fn check_bipartite(m: &CMatrix, da: usize, db: usize) -> Result<()> {
    if !m.is_square() || m.rows() != da * db || da == 0 || db == 0 {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix is not an operator on {da}⊗{db}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

/// Traces out `side`. Index convention: `(a, b) -> a * db + b`.
pub fn partial_trace(m: &CMatrix, da: usize, db: usize, side: Subsystem) -> Result<CMatrix> {
    check_bipartite(m, da, db)?;
    let out = match side {
        Subsystem::B => CMatrix::from_fn(da, da, |i, j| (0..db).map(|k| m[(i * db + k, j * db + k)]).sum::<C64>()),
        Subsystem::A => CMatrix::from_fn(db, db, |i, j| (0..da).map(|k| m[(k * db + i, k * db + j)]).sum::<C64>()),
    };
    Ok(out)
}

/// Transposes the `side` factor in place of the full matrix.
pub fn partial_transpose(m: &CMatrix, da: usize, db: usize, side: Subsystem) -> Result<CMatrix> {
    check_bipartite(m, da, db)?;
    let n = da * db;
    Ok(CMatrix::from_fn(n, n, |r, c| {
        let (a1, b1) = (r / db, r % db);
        let (a2, b2) = (c / db, c % db);
        match side {
            Subsystem::B => m[(a1 * db + b2, a2 * db + b1)],
            Subsystem::A => m[(a2 * db + b1, a1 * db + b2)],
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{c64, hermitian_eig};

    fn sample(n: usize) -> CMatrix {
        CMatrix::from_fn(n, n, |i, j| c64((i * 7 + j * 3) as f64 % 5.0 - 2.0, (i as f64) - (j as f64) * 0.5))
    }

    #[test]
    fn product_factorization() {
        let rho = CMatrix::from_real_diag(&[0.25, 0.75]);
        let tau = sample(3);
        let prod = rho.kron(&tau);
        let tb = partial_trace(&prod, 2, 3, Subsystem::B).unwrap();
        assert!(tb.max_abs_diff(&rho.scale_complex(tau.trace())) < 1e-12);
        let ta = partial_trace(&prod, 2, 3, Subsystem::A).unwrap();
        assert!(ta.max_abs_diff(&tau.scale_complex(rho.trace())) < 1e-12);
    }

    #[test]
    fn trace_of_identity() {
        let t = partial_trace(&CMatrix::identity(6), 2, 3, Subsystem::A).unwrap();
        assert!(t.max_abs_diff(&CMatrix::identity(3).scale(2.0)) < 1e-15);
    }

    #[test]
    fn index_sum_oracle() {
        let m = sample(6);
        let (da, db) = (2, 3);
        let tb = partial_trace(&m, da, db, Subsystem::B).unwrap();
        for i in 0..da {
            for j in 0..da {
                let mut acc = c64(0.0, 0.0);
                for k in 0..db {
                    acc += m[(i * db + k, j * db + k)];
                }
                assert!((tb[(i, j)] - acc).norm() < 1e-12);
            }
        }
        assert!((tb.trace() - m.trace()).norm() < 1e-12);
    }

    #[test]
    fn transpose_examples() {
        let rho = sample(2).hermitian_part();
        let tau = sample(3);
        let pt = partial_transpose(&rho.kron(&tau), 2, 3, Subsystem::B).unwrap();
        assert!(pt.max_abs_diff(&rho.kron(&tau.transpose())) < 1e-15);

        let m = sample(6);
        for side in [Subsystem::A, Subsystem::B] {
            let twice = partial_transpose(&partial_transpose(&m, 2, 3, side).unwrap(), 2, 3, side).unwrap();
            assert_eq!(twice, m);
        }

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let phi = [c64(s, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(s, 0.0)];
        let bell = CMatrix::projector(&phi);
        let pt = partial_transpose(&bell, 2, 2, Subsystem::B).unwrap();
        let e = hermitian_eig(&pt).unwrap();
        assert!((e.min() + 0.5).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(partial_trace(&CMatrix::identity(5), 2, 3, Subsystem::A).is_err());
        assert!(partial_transpose(&CMatrix::identity(4), 2, 3, Subsystem::B).is_err());
    }
}
