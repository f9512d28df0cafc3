//! Closed-form comparison classifiers: collaborative representation (CRC) and
//! nearest subspace (NSC).

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::ClassPartitionedDataset;
use crate::error::{Error, Result};
use crate::ldsr::{class_scores, ClassDecision};
use crate::linalg::{self, SymmetricFactor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Crc,
    Nsc,
}

fn check_query(train: &ClassPartitionedDataset, x: &[f64]) -> Result<()> {
    if x.len() != train.q() {
        return Err(Error::DimensionMismatch {
            expected: train.q(),
            found: x.len(),
        });
    }
    Ok(())
}

/// Ridge coding over all training samples, scored by `‖x − X_c α_c‖ / ‖α_c‖`.
pub struct CrcModel<'a> {
    train: &'a ClassPartitionedDataset,
    factor: SymmetricFactor,
}

impl<'a> CrcModel<'a> {
    pub fn fit(train: &'a ClassPartitionedDataset, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(
                "lambda",
                format!("must be > 0, got {lambda}"),
            ));
        }
        let mut a = linalg::gram(train.features());
        for i in 0..a.nrows() {
            a[(i, i)] += lambda;
        }
        Ok(Self {
            train,
            factor: SymmetricFactor::new(a.as_ref())?,
        })
    }

    /// `α = (XᵀX + λI)⁻¹ Xᵀ x`.
    pub fn coefficients(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_query(self.train, x)?;
        Ok(self
            .factor
            .solve(&linalg::tmatvec(self.train.features(), x)))
    }

    pub fn classify(&self, x: &[f64]) -> Result<ClassDecision> {
        let alpha = self.coefficients(x)?;
        ClassDecision::from_scores(class_scores(
            self.train.features(),
            self.train.class_ranges(),
            x,
            &alpha,
        ))
    }

    pub fn classify_many(&self, queries: faer::MatRef<'_, f64>) -> Result<Vec<ClassDecision>> {
        if queries.nrows() != self.train.q() {
            return Err(Error::DimensionMismatch {
                expected: self.train.q(),
                found: queries.nrows(),
            });
        }
        let rhs: Mat<f64> = self.train.features().transpose() * queries;
        let alpha = self.factor.solve_mat(rhs.as_ref());
        (0..queries.ncols())
            .into_par_iter()
            .map(|j| {
                let x: Vec<f64> = queries.col(j).iter().copied().collect();
                ClassDecision::from_scores(class_scores(
                    self.train.features(),
                    self.train.class_ranges(),
                    &x,
                    alpha.col_as_slice(j),
                ))
            })
            .collect()
    }
}

pub fn crc_classify(
    train: &ClassPartitionedDataset,
    x: &[f64],
    lambda: f64,
) -> Result<ClassDecision> {
    CrcModel::fit(train, lambda)?.classify(x)
}

/// Least-squares residual against each class's column span.
pub struct NscModel<'a> {
    train: &'a ClassPartitionedDataset,
    /// Orthonormal basis of each class span; `None` for empty classes.
    bases: Vec<Option<Mat<f64>>>,
}

/// Orthonormal basis of `span(x)` from the thin SVD, dropping directions below
/// the relative rank threshold.
fn span_basis(x: faer::MatRef<'_, f64>) -> Result<Mat<f64>> {
    let svd = x.thin_svd().map_err(|_| Error::SingularSystem)?;
    let s = svd.S().column_vector();
    let smax = if s.nrows() > 0 { s[0] } else { 0.0 };
    let tol = smax * (x.nrows().max(x.ncols()) as f64) * f64::EPSILON;
    let rank = (0..s.nrows()).take_while(|&i| s[i] > tol).count();
    Ok(svd.U().subcols(0, rank).to_owned())
}

impl<'a> NscModel<'a> {
    pub fn fit(train: &'a ClassPartitionedDataset) -> Result<Self> {
        let bases = (0..train.n_classes())
            .map(|c| {
                if train.class_ranges()[c].is_empty() {
                    Ok(None)
                } else {
                    span_basis(train.class_block(c)).map(Some)
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self { train, bases })
    }

    /// `min_w ‖x − X_c w‖` per class, infinite for empty classes.
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_query(self.train, x)?;
        Ok(self
            .bases
            .iter()
            .map(|b| match b {
                None => f64::INFINITY,
                Some(q) => {
                    let proj = linalg::matvec(q.as_ref(), &linalg::tmatvec(q.as_ref(), x));
                    x.iter()
                        .zip(&proj)
                        .map(|(a, p)| (a - p) * (a - p))
                        .sum::<f64>()
                        .sqrt()
                }
            })
            .collect())
    }

    pub fn classify(&self, x: &[f64]) -> Result<ClassDecision> {
        ClassDecision::from_scores(self.scores(x)?)
    }
}

pub fn nsc_classify(train: &ClassPartitionedDataset, x: &[f64]) -> Result<ClassDecision> {
    NscModel::fit(train)?.classify(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{self, HyperParams};
    use crate::synthetic::{random_dataset, random_vec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn orthonormal_design_inverts() {
        let x = Mat::from_fn(3, 3, |i, j| if i == j { 1.0 } else { 0.0 });
        let train = ClassPartitionedDataset::from_columns(x, &names(&["a", "a", "b"])).unwrap();
        let q = [0.3, -0.7, 1.1];
        let alpha = CrcModel::fit(&train, 1e-12)
            .unwrap()
            .coefficients(&q)
            .unwrap();
        for (a, b) in alpha.iter().zip(q) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn crc_equals_solver_without_discriminant_terms() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let train = random_dataset(&mut rng, 7, &[3, 4, 2]);
        let x = random_vec(&mut rng, 7);
        let hp = HyperParams {
            lambda: 0.05,
            eta: 0.0,
            gamma: 0.0,
            ..HyperParams::default()
        };
        let crc = CrcModel::fit(&train, 0.05)
            .unwrap()
            .coefficients(&x)
            .unwrap();
        let sol = solver::solve(&train, &x, &hp).unwrap();
        for (a, b) in crc.iter().zip(&sol.coeffs) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn crc_rejects_non_positive_lambda() {
        let train = random_dataset(&mut ChaCha8Rng::seed_from_u64(1), 3, &[1, 1]);
        assert!(matches!(
            crc_classify(&train, &[0.0; 3], 0.0),
            Err(Error::InvalidParameter {
                field: "lambda",
                ..
            })
        ));
    }

    #[test]
    fn nsc_exact_span_membership() {
        let x = Mat::from_fn(3, 4, |i, j| {
            [
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 1.0],
            ][i][j]
        });
        let train =
            ClassPartitionedDataset::from_columns(x, &names(&["1", "1", "2", "2"])).unwrap();
        let d = nsc_classify(&train, &[0.4, -2.0, 0.0]).unwrap();
        assert_eq!(d.predicted, 0);
        assert!(d.scores[0] < 1e-14);
    }

    #[test]
    fn nsc_orthogonal_query_ties_to_lowest_class() {
        let x = Mat::from_fn(3, 2, |i, j| if i == j { 1.0 } else { 0.0 });
        let train = ClassPartitionedDataset::from_columns(x, &names(&["a", "b"])).unwrap();
        let d = nsc_classify(&train, &[0.0, 0.0, 2.0]).unwrap();
        assert_eq!(d.scores, vec![2.0, 2.0]);
        assert_eq!(d.predicted, 0);
    }

    #[test]
    fn nsc_matches_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let train = random_dataset(&mut rng, 8, &[3, 2, 4]);
        let x = random_vec(&mut rng, 8);
        let scores = NscModel::fit(&train).unwrap().scores(&x).unwrap();
        for c in 0..3 {
            let xc = train.class_block(c);
            let g = linalg::gram(xc);
            let w = SymmetricFactor::new(g.as_ref())
                .unwrap()
                .solve(&linalg::tmatvec(xc, &x));
            let r = linalg::matvec(xc, &w);
            let resid: f64 = x
                .iter()
                .zip(&r)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!((scores[c] - resid).abs() < 1e-10);
        }
    }

    #[test]
    fn nsc_handles_rank_deficient_class() {
        let x = Mat::from_fn(3, 4, |i, j| {
            [
                [1.0, 2.0, 0.0, 0.0],
                [1.0, 2.0, 0.0, 1.0],
                [0.0, 0.0, 1.0, 0.0],
            ][i][j]
        });
        let train =
            ClassPartitionedDataset::from_columns(x, &names(&["a", "a", "b", "b"])).unwrap();
        let s = NscModel::fit(&train)
            .unwrap()
            .scores(&[1.0, -1.0, 0.0])
            .unwrap();
        assert!((s[0] - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn nsc_ignores_basis_changes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let train = random_dataset(&mut rng, 6, &[3, 3]);
        let x = random_vec(&mut rng, 6);
        let mixed = Mat::from_fn(6, 6, |i, j| {
            let c = j / 3;
            let r = &train.class_ranges()[c];
            // columns of class c recombined with an invertible upper-triangular map
            (0..3)
                .filter(|&k| k <= j % 3)
                .map(|k| train.features()[(i, r.start + k)] * (1.0 + k as f64))
                .sum()
        });
        let other =
            ClassPartitionedDataset::from_columns(mixed, &names(&["0", "0", "0", "1", "1", "1"]))
                .unwrap();
        let a = NscModel::fit(&train).unwrap().scores(&x).unwrap();
        let b = NscModel::fit(&other).unwrap().scores(&x).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-10);
        }
    }
}
