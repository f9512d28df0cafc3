//! Small dense helpers on top of faer.

use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sq_norm(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    sq_norm(a).sqrt()
}

fn as_column(v: &[f64]) -> MatRef<'_, f64> {
    MatRef::from_column_major_slice(v, v.len(), 1)
}

/// `xᵀ x`.
pub fn gram(x: MatRef<'_, f64>) -> Mat<f64> {
    x.transpose() * x
}

/// `xᵀ v`.
pub fn tmatvec(x: MatRef<'_, f64>, v: &[f64]) -> Vec<f64> {
    let out: Mat<f64> = x.transpose() * as_column(v);
    out.col_as_slice(0).to_vec()
}

/// `x v`.
pub fn matvec(x: MatRef<'_, f64>, v: &[f64]) -> Vec<f64> {
    let out: Mat<f64> = x * as_column(v);
    out.col_as_slice(0).to_vec()
}

/// The square submatrix `m[idx, idx]`.
pub fn principal_submatrix(m: MatRef<'_, f64>, idx: &[usize]) -> Mat<f64> {
    Mat::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

/// Factorization of a symmetric positive semidefinite system.
///
/// Cholesky is tried first; a matrix that is numerically singular falls back
/// to a minimum-norm least-squares solve through the SVD.
pub enum SymmetricFactor {
    Cholesky(faer::linalg::solvers::Llt<f64>),
    LeastSquares(faer::linalg::solvers::Svd<f64>),
}

impl SymmetricFactor {
    pub fn new(a: MatRef<'_, f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                found: a.ncols(),
            });
        }
        if !a.col_iter().all(|c| c.iter().all(|v| v.is_finite())) {
            return Err(Error::SingularSystem);
        }
        match a.llt(Side::Lower) {
            Ok(llt) => Ok(SymmetricFactor::Cholesky(llt)),
            Err(_) => a
                .svd()
                .map(SymmetricFactor::LeastSquares)
                .map_err(|_| Error::SingularSystem),
        }
    }

    pub fn is_cholesky(&self) -> bool {
        matches!(self, SymmetricFactor::Cholesky(_))
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_mat(as_column(b)).col_as_slice(0).to_vec()
    }

    /// Solves for every column of `b`.
    pub fn solve_mat(&self, b: MatRef<'_, f64>) -> Mat<f64> {
        match self {
            SymmetricFactor::Cholesky(llt) => {
                let mut rhs = b.to_owned();
                llt.solve_in_place(rhs.as_mut());
                rhs
            }
            SymmetricFactor::LeastSquares(svd) => {
                // Truncated pseudo-inverse: drop directions below the relative
                // rank threshold.
                let s = svd.S().column_vector();
                let smax = if s.nrows() > 0 { s[0] } else { 0.0 };
                let tol = smax * (b.nrows() as f64) * f64::EPSILON;
                let mut utb: Mat<f64> = svd.U().transpose() * b;
                for i in 0..s.nrows() {
                    let inv = if s[i] > tol { 1.0 / s[i] } else { 0.0 };
                    utb.row_mut(i).iter_mut().for_each(|v| *v *= inv);
                }
                svd.V() * utb
            }
        }
    }
}
