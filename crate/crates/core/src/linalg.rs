//! Small dense helpers shared by the solvers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result};

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 10_000;

/// Largest singular value of `m`, by power iteration on `MᵀM`.
///
/// The iteration starts from the normalized all-ones vector. Because that
/// start can be orthogonal to the dominant right singular vector, it is
/// repeated from every coordinate vector and the largest estimate wins; the
/// result is deterministic either way. Matrices with no rows or columns have
/// norm zero.
pub fn spectral_norm(m: &DMatrix<f64>) -> Result<f64> {
    let cols = m.ncols();
    if m.nrows() == 0 || cols == 0 {
        return Ok(0.0);
    }
    let gram = m.transpose() * m;
    let mut best = power_eigenvalue(&gram, DVector::from_element(cols, 1.0))?;
    if cols > 1 {
        for c in 0..cols {
            let mut start = DVector::zeros(cols);
            start[c] = 1.0;
            best = best.max(power_eigenvalue(&gram, start)?);
        }
    }
    Ok(libm::sqrt(best))
}

/// Dominant eigenvalue of the positive semidefinite `gram`.
fn power_eigenvalue(gram: &DMatrix<f64>, start: DVector<f64>) -> Result<f64> {
    let mut v = start.normalize();
    let mut estimate = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let w = gram * &v;
        let next = w.norm();
        if next == 0.0 {
            return Ok(0.0);
        }
        v = w / next;
        if (next - estimate).abs() <= POWER_TOL * next {
            return Ok(next);
        }
        estimate = next;
    }
    Err(Error::PowerIterationStalled {
        iterations: POWER_MAX_ITERS,
    })
}

/// True when every off-diagonal entry is exactly zero.
pub fn is_diagonal(m: &DMatrix<f64>) -> bool {
    m.row_iter()
        .enumerate()
        .all(|(r, row)| row.iter().enumerate().all(|(c, &x)| r == c || x == 0.0))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if is_diagonal(m) {
        return m.diagonal().min();
    }
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if is_diagonal(m) {
        return m.diagonal().max();
    }
    SymmetricEigen::new(m.clone()).eigenvalues.max()
}

/// Componentwise clamp of `v` into `[lo, hi]`.
pub fn clip(v: &DVector<f64>, lo: &DVector<f64>, hi: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(
        v.len(),
        v.iter()
            .zip(lo.iter().zip(hi.iter()))
            .map(|(&x, (&l, &h))| x.max(l).min(h)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_of_row_vector() {
        let m = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        assert!((spectral_norm(&m).unwrap() - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn norm_of_identity() {
        let m = DMatrix::<f64>::identity(3, 3);
        assert!((spectral_norm(&m).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn norm_of_single_column() {
        // MᵀM = [[25, 0], [0, 0]]: the eigenvalues are read off directly.
        let m = DMatrix::<f64>::from_row_slice(2, 2, &[3.0, 0.0, 4.0, 0.0]);
        let gram = m.transpose() * &m;
        let brute = SymmetricEigen::new(gram).eigenvalues.max().sqrt();
        assert!((brute - 5.0).abs() < 1e-12);
        assert!((spectral_norm(&m).unwrap() - 5.0).abs() < 1e-9);
    }

    #[test]
    fn ones_start_in_null_space() {
        let m = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        assert!((spectral_norm(&m).unwrap() - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn ones_start_orthogonal_to_top_vector() {
        // Singular values 3 (along (1,-1)) and 1 (along (1,1)).
        let m = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        assert!((spectral_norm(&m).unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn empty_and_zero() {
        assert_eq!(spectral_norm(&DMatrix::zeros(0, 3)).unwrap(), 0.0);
        assert_eq!(spectral_norm(&DMatrix::zeros(2, 2)).unwrap(), 0.0);
    }

    #[test]
    fn eigen_bounds() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        assert!((min_eigenvalue(&m) - 1.0).abs() < 1e-12);
        assert!((max_eigenvalue(&m) - 3.0).abs() < 1e-12);
        let d = DMatrix::from_diagonal(&DVector::from_vec(alloc::vec![4.0, 0.5]));
        assert_eq!(min_eigenvalue(&d), 0.5);
    }
}
