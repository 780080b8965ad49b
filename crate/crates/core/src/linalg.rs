//! Small dense helpers on complex matrices.

use nalgebra::DMatrix;
use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest accepted condition number of a Gram matrix.
pub const MAX_CONDITION: f64 = 1e12;

/// Conjugate transpose.
pub fn herm(a: &Array2<Complex64>) -> Array2<Complex64> {
    a.t().mapv(|z| z.conj())
}

pub fn frobenius_sq(a: &Array2<Complex64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

fn to_na(a: &Array2<Complex64>) -> DMatrix<Complex64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

fn from_na(m: &DMatrix<Complex64>) -> Array2<Complex64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Condition number of a Hermitian positive semi-definite matrix.
pub fn hermitian_condition(gram: &Array2<Complex64>) -> f64 {
    let eig = to_na(gram).symmetric_eigenvalues();
    let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Returns `X = (A A^H)^-1 A` for a wide or square `A` via a Cholesky
/// solve of the Gram matrix.
pub fn gram_solve(a: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    let (rows, cols) = a.dim();
    if rows > cols {
        return Err(Error::Singular(format!("Gram matrix of a {rows}x{cols} matrix is rank deficient")));
    }
    let gram = a.dot(&herm(a));
    let cond = hermitian_condition(&gram);
    if cond.is_nan() || cond > MAX_CONDITION {
        return Err(Error::Singular(format!("Gram condition number {cond:.3e} exceeds {MAX_CONDITION:.0e}")));
    }
    let chol = to_na(&gram)
        .cholesky()
        .ok_or_else(|| Error::Singular("Gram matrix is not positive definite".into()))?;
    Ok(from_na(&chol.solve(&to_na(a))))
}
