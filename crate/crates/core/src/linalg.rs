//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

pub type Chol = Cholesky<f64, Dyn>;

/// Cholesky factorization with a single jittered retry.
///
/// The retry adds `1e-10 * trace / D` to the diagonal. A second failure is an
/// error, never a silent fallback.
pub fn cholesky(m: &DMatrix<f64>, what: &str) -> Result<Chol> {
    check_square_symmetric(m, what)?;
    if let Some(c) = Cholesky::new(m.clone()) {
        return Ok(c);
    }
    let d = m.nrows();
    let jitter = 1e-10 * m.trace().abs() / d as f64;
    let mut j = m.clone();
    for i in 0..d {
        j[(i, i)] += jitter;
    }
    Cholesky::new(j).ok_or_else(|| Error::NotPositiveDefinite(what.to_string()))
}

/// Log-determinant from a Cholesky factor.
pub fn log_det(c: &Chol) -> f64 {
    let l = c.l_dirty();
    (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>() * 2.0
}

pub fn check_square_symmetric(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "{what}: matrix is {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.amax().max(1e-300);
    for i in 0..m.nrows() {
        if !m[(i, i)].is_finite() {
            return Err(Error::Domain(format!("{what}: non-finite diagonal")));
        }
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-10 * scale {
                return Err(Error::Domain(format!("{what}: matrix is not symmetric")));
            }
        }
    }
    Ok(())
}

/// Sub-matrix on the given row and column index lists.
pub fn select(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

pub fn select_vec(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_fn(idx.len(), |i, _| v[idx[i]])
}

/// Indices of `0..d` not contained in the sorted-or-unsorted set `subset`.
pub fn complement(d: usize, subset: &[usize]) -> Vec<usize> {
    (0..d).filter(|i| !subset.contains(i)).collect()
}
