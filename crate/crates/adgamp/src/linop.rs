//! Matrix-free abstraction of the measurement operator.
//!
//! The GAMP recursion touches the matrix through exactly four products:
//! `A x`, `A^T s`, `|A|^2 v`, and `(|A|^2)^T w`, where `|A|^2` is the matrix
//! of elementwise squares. Implementations must be immutable after
//! construction so operators can be shared across concurrent trials.

use nalgebra::{DMatrix, DVector};
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinopError {
    #[error("dimension mismatch: expected length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("abs2 product requires elementwise nonnegative input")]
    NegativeInput,
}

pub trait LinearOperator: Send + Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;

    /// `A x`.
    fn apply(&self, x: &[f64], out: &mut [f64]);
    /// `A^T s`.
    fn adjoint(&self, s: &[f64], out: &mut [f64]);
    /// `|A|^2 v` for elementwise-nonnegative `v`.
    fn abs2_apply(&self, v: &[f64], out: &mut [f64]);
    /// `(|A|^2)^T w` for elementwise-nonnegative `w`.
    fn abs2_adjoint(&self, w: &[f64], out: &mut [f64]);
}

fn check_len(len: usize, expected: usize) -> Result<(), LinopError> {
    if len == expected {
        Ok(())
    } else {
        Err(LinopError::DimensionMismatch { expected, got: len })
    }
}

fn check_nonneg(v: &[f64]) -> Result<(), LinopError> {
    if v.iter().any(|&x| x < 0.0) {
        Err(LinopError::NegativeInput)
    } else {
        Ok(())
    }
}

/// Checked convenience wrappers over the trait, allocating the output.
pub fn apply(op: &dyn LinearOperator, x: &[f64]) -> Result<Vec<f64>, LinopError> {
    check_len(x.len(), op.cols())?;
    let mut out = vec![0.0; op.rows()];
    op.apply(x, &mut out);
    Ok(out)
}

pub fn adjoint(op: &dyn LinearOperator, s: &[f64]) -> Result<Vec<f64>, LinopError> {
    check_len(s.len(), op.rows())?;
    let mut out = vec![0.0; op.cols()];
    op.adjoint(s, &mut out);
    Ok(out)
}

pub fn abs2_apply(op: &dyn LinearOperator, v: &[f64]) -> Result<Vec<f64>, LinopError> {
    check_len(v.len(), op.cols())?;
    check_nonneg(v)?;
    let mut out = vec![0.0; op.rows()];
    op.abs2_apply(v, &mut out);
    Ok(out)
}

pub fn abs2_adjoint(op: &dyn LinearOperator, w: &[f64]) -> Result<Vec<f64>, LinopError> {
    check_len(w.len(), op.rows())?;
    check_nonneg(w)?;
    let mut out = vec![0.0; op.cols()];
    op.abs2_adjoint(w, &mut out);
    Ok(out)
}

/// Dense operator backed by an explicit matrix.
///
/// The elementwise-squared matrix is cached lazily on first use since the
/// abs2 products run every iteration.
pub struct DenseOperator {
    a: DMatrix<f64>,
    abs2: OnceLock<DMatrix<f64>>,
}

impl DenseOperator {
    pub fn new(a: DMatrix<f64>) -> Self {
        Self {
            a,
            abs2: OnceLock::new(),
        }
    }

    /// Row-major coefficient list.
    pub fn from_rows(m: usize, n: usize, coeffs: &[f64]) -> Self {
        assert_eq!(coeffs.len(), m * n);
        Self::new(DMatrix::from_row_slice(m, n, coeffs))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    fn abs2_matrix(&self) -> &DMatrix<f64> {
        self.abs2.get_or_init(|| self.a.map(|x| x * x))
    }
}

impl LinearOperator for DenseOperator {
    fn rows(&self) -> usize {
        self.a.nrows()
    }

    fn cols(&self) -> usize {
        self.a.ncols()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let y = &self.a * DVector::from_column_slice(x);
        out.copy_from_slice(y.as_slice());
    }

    fn adjoint(&self, s: &[f64], out: &mut [f64]) {
        let y = self.a.tr_mul(&DVector::from_column_slice(s));
        out.copy_from_slice(y.as_slice());
    }

    fn abs2_apply(&self, v: &[f64], out: &mut [f64]) {
        let y = self.abs2_matrix() * DVector::from_column_slice(v);
        out.copy_from_slice(y.as_slice());
    }

    fn abs2_adjoint(&self, w: &[f64], out: &mut [f64]) {
        let y = self.abs2_matrix().tr_mul(&DVector::from_column_slice(w));
        out.copy_from_slice(y.as_slice());
    }
}
