//! Discrete classical sample spaces and Markov kernels between them.
//!
//! A space is a finite partition of the sample space into cells, each with a
//! strictly positive reference weight. Kernels are column-stochastic: entry
//! `(m, n)` is the probability mass sent from source cell `n` to target
//! cell `m`, so they act on cell masses and never need the weights.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for column sums of a Markov kernel.
pub const KERNEL_TOL: f64 = 1e-12;

/// Metadata attached to a cell. Never used in computations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CellLabel {
    Point(i64),
    Interval([f64; 2]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalSpace {
    weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<CellLabel>>,
}

impl ClassicalSpace {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let space = Self { weights, labels: None };
        space.validate()?;
        Ok(space)
    }

    pub fn with_labels(weights: Vec<f64>, labels: Vec<CellLabel>) -> Result<Self> {
        if labels.len() != weights.len() {
            return Err(Error::DimensionMismatch(format!("{} labels for {} cells", labels.len(), weights.len())));
        }
        let space = Self { weights, labels: Some(labels) };
        space.validate()?;
        Ok(space)
    }

    /// Counting measure on `n` points labelled `0..n`.
    pub fn counting(n: usize) -> Self {
        Self { weights: vec![1.0; n], labels: Some((0..n as i64).map(CellLabel::Point).collect()) }
    }

    /// Uniform weights without labels.
    pub fn uniform(n: usize, weight: f64) -> Result<Self> {
        Self::new(vec![weight; n])
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.is_empty() {
            return Err(Error::BadWeight { cell: 0, weight: f64::NAN });
        }
        for (cell, &weight) in self.weights.iter().enumerate() {
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(Error::BadWeight { cell, weight });
            }
        }
        Ok(())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, cell: usize) -> f64 {
        self.weights[cell]
    }

    pub fn labels(&self) -> Option<&[CellLabel]> {
        self.labels.as_deref()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Two spaces are interchangeable when they have the same cells with the
    /// same weights (relative 1e-12). Labels are ignored.
    pub fn matches(&self, other: &ClassicalSpace) -> bool {
        self.len() == other.len()
            && self.weights.iter().zip(&other.weights).all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()))
    }

    pub(crate) fn ensure_matches(&self, other: &ClassicalSpace, what: &str) -> Result<()> {
        if self.matches(other) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch(format!(
                "{what}: {} cells vs {} cells or differing weights",
                self.len(),
                other.len()
            )))
        }
    }
}

/// Splits `[a, b]` into `cells` equal subintervals with Lebesgue weights.
pub fn discretize_interval(a: f64, b: f64, cells: usize) -> Result<ClassicalSpace> {
    if !(a < b) || !a.is_finite() || !b.is_finite() || cells == 0 {
        return Err(Error::BadRange { a, b, cells });
    }
    let h = (b - a) / cells as f64;
    let labels = (0..cells)
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = if i + 1 == cells { b } else { a + h * (i + 1) as f64 };
            CellLabel::Interval([lo, hi])
        })
        .collect();
    ClassicalSpace::with_labels(vec![h; cells], labels)
}

/// What went wrong in a candidate kernel. Always names the first offending
/// column.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelViolation {
    Shape { expected: usize, found: usize },
    NegativeEntry { row: usize, column: usize, value: f64 },
    NonFinite { row: usize, column: usize },
    ColumnSum { column: usize, sum: f64 },
}

impl KernelViolation {
    pub fn column(&self) -> Option<usize> {
        match *self {
            KernelViolation::Shape { .. } => None,
            KernelViolation::NegativeEntry { column, .. }
            | KernelViolation::NonFinite { column, .. }
            | KernelViolation::ColumnSum { column, .. } => Some(column),
        }
    }
}

impl fmt::Display for KernelViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelViolation::Shape { expected, found } => {
                write!(f, "expected {expected} entries, found {found}")
            }
            KernelViolation::NegativeEntry { row, column, value } => {
                write!(f, "negative entry {value} at ({row}, {column})")
            }
            KernelViolation::NonFinite { row, column } => {
                write!(f, "non-finite entry at ({row}, {column})")
            }
            KernelViolation::ColumnSum { column, sum } => {
                write!(f, "column {column} sums to {sum}")
            }
        }
    }
}

/// Checks a row-major `rows x cols` matrix for non-negativity and unit column
/// sums, scanning column by column.
pub fn validate_kernel(p: &[f64], rows: usize, cols: usize) -> std::result::Result<(), KernelViolation> {
    if p.len() != rows * cols {
        return Err(KernelViolation::Shape { expected: rows * cols, found: p.len() });
    }
    for n in 0..cols {
        let mut sum = 0.0;
        for m in 0..rows {
            let v = p[m * cols + n];
            if !v.is_finite() {
                return Err(KernelViolation::NonFinite { row: m, column: n });
            }
            if v < 0.0 {
                return Err(KernelViolation::NegativeEntry { row: m, column: n, value: v });
            }
            sum += v;
        }
        if (sum - 1.0).abs() > KERNEL_TOL {
            return Err(KernelViolation::ColumnSum { column: n, sum });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovKernel {
    src: ClassicalSpace,
    dst: ClassicalSpace,
    p: Vec<f64>,
}

impl MarkovKernel {
    /// `p` is row-major with `dst.len()` rows and `src.len()` columns.
    pub fn new(src: ClassicalSpace, dst: ClassicalSpace, p: Vec<f64>) -> Result<Self> {
        validate_kernel(&p, dst.len(), src.len()).map_err(Error::BadKernel)?;
        Ok(Self { src, dst, p })
    }

    pub fn identity(space: &ClassicalSpace) -> Self {
        kernel_from_map(space, |n| n).expect("identity map is total")
    }

    /// Kernel from a transition density `h(m, n)` with respect to the target
    /// weights: `P(m, n) = h(m, n) * μ_m`.
    pub fn from_density(src: ClassicalSpace, dst: ClassicalSpace, h: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let (rows, cols) = (dst.len(), src.len());
        let mut p = Vec::with_capacity(rows * cols);
        for m in 0..rows {
            for n in 0..cols {
                p.push(h(m, n) * dst.weight(m));
            }
        }
        Self::new(src, dst, p)
    }

    pub fn src(&self) -> &ClassicalSpace {
        &self.src
    }

    pub fn dst(&self) -> &ClassicalSpace {
        &self.dst
    }

    pub fn rows(&self) -> usize {
        self.dst.len()
    }

    pub fn cols(&self) -> usize {
        self.src.len()
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.p[m * self.cols() + n]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.p
    }

    pub fn validate(&self) -> std::result::Result<(), KernelViolation> {
        validate_kernel(&self.p, self.rows(), self.cols())
    }

    /// Pushes cell masses forward: `p'_m = Σ_n P(m, n) p_n`.
    pub fn push_forward(&self, masses: &[f64]) -> Vec<f64> {
        assert_eq!(masses.len(), self.cols());
        (0..self.rows()).map(|m| (0..self.cols()).map(|n| self.get(m, n) * masses[n]).sum()).collect()
    }
}

/// Deterministic kernel of a cell map: `P(m, n) = 1` iff `m = map(n)`.
pub fn kernel_from_map(space: &ClassicalSpace, map: impl Fn(usize) -> usize) -> Result<MarkovKernel> {
    let n_cells = space.len();
    let mut p = vec![0.0; n_cells * n_cells];
    for n in 0..n_cells {
        let image = map(n);
        if image >= n_cells {
            return Err(Error::BadMap { cell: n, image, len: n_cells });
        }
        p[image * n_cells + n] = 1.0;
    }
    Ok(MarkovKernel { src: space.clone(), dst: space.clone(), p })
}

/// Matrix product `second * first`: apply `first`, then `second`.
pub fn compose_kernels(second: &MarkovKernel, first: &MarkovKernel) -> Result<MarkovKernel> {
    first.dst.ensure_matches(&second.src, "kernel composition")?;
    let (rows, inner, cols) = (second.rows(), second.cols(), first.cols());
    let mut p = vec![0.0; rows * cols];
    for k in 0..rows {
        for m in 0..inner {
            let a = second.get(k, m);
            if a == 0.0 {
                continue;
            }
            for n in 0..cols {
                p[k * cols + n] += a * first.get(m, n);
            }
        }
    }
    Ok(MarkovKernel { src: first.src.clone(), dst: second.dst.clone(), p })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_discretization() {
        let s = discretize_interval(0.0, 1.0, 4).unwrap();
        assert_eq!(s.weights(), &[0.25; 4]);
        let s = discretize_interval(0.0, 1.0, 1).unwrap();
        assert_eq!(s.weights(), &[1.0]);
        let s = discretize_interval(-2.0, 3.0, 10).unwrap();
        assert!((s.total_weight() - 5.0).abs() < 1e-12);
        assert_eq!(s.labels().unwrap()[9], CellLabel::Interval([2.5, 3.0]));
        assert!(matches!(discretize_interval(1.0, 1.0, 3), Err(Error::BadRange { .. })));
        assert!(matches!(discretize_interval(0.0, 1.0, 0), Err(Error::BadRange { .. })));
    }

    #[test]
    fn zero_weight_cells_rejected() {
        assert!(matches!(ClassicalSpace::new(vec![1.0, 0.0]), Err(Error::BadWeight { cell: 1, .. })));
        assert!(ClassicalSpace::new(vec![]).is_err());
    }

    #[test]
    fn map_kernels() {
        let s = ClassicalSpace::counting(2);
        assert_eq!(MarkovKernel::identity(&s).matrix(), &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(kernel_from_map(&s, |n| 1 - n).unwrap().matrix(), &[0.0, 1.0, 1.0, 0.0]);
        let s3 = ClassicalSpace::counting(3);
        let k = kernel_from_map(&s3, |_| 0).unwrap();
        assert_eq!(k.matrix(), &[1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(kernel_from_map(&s3, |n| n + 1), Err(Error::BadMap { cell: 2, image: 3, len: 3 })));
    }

    #[test]
    fn composition_examples() {
        let s = ClassicalSpace::counting(2);
        let swap = kernel_from_map(&s, |n| 1 - n).unwrap();
        let id = MarkovKernel::identity(&s);
        assert_eq!(compose_kernels(&swap, &swap).unwrap().matrix(), id.matrix());
        let p = MarkovKernel::new(s.clone(), s.clone(), vec![0.3, 0.6, 0.7, 0.4]).unwrap();
        assert_eq!(compose_kernels(&id, &p).unwrap().matrix(), p.matrix());
        let other = ClassicalSpace::counting(3);
        let k3 = MarkovKernel::identity(&other);
        assert!(matches!(compose_kernels(&k3, &p), Err(Error::SpaceMismatch(_))));
    }

    #[test]
    fn validation_reports_first_bad_column() {
        assert!(validate_kernel(&[1.0, 0.0, 0.0, 1.0], 2, 2).is_ok());
        let v = validate_kernel(&[1.0, 0.5, 0.0, 0.4], 2, 2).unwrap_err();
        assert_eq!(v.column(), Some(1));
        assert!(matches!(v, KernelViolation::ColumnSum { column: 1, .. }));
        let v = validate_kernel(&[1.2, 1.0, -0.2, 0.0], 2, 2).unwrap_err();
        assert!(matches!(v, KernelViolation::NegativeEntry { row: 1, column: 0, .. }));
    }

    #[test]
    fn density_kernel_uses_target_weights() {
        let s = discretize_interval(0.0, 2.0, 4).unwrap();
        // uniform density 1/2 on [0, 2]
        let k = MarkovKernel::from_density(s.clone(), s, |_, _| 0.5).unwrap();
        assert!(k.matrix().iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }
}
