//! The discriminant coefficient solver.
//!
//! For a design matrix `D` (columns are samples, partitioned by class) and a
//! target `t` the objective is
//!
//! ```text
//! G(α) = ‖t − Dα‖² + λ‖α‖²
//!      + η Σ_c Σ_{i∈c} ‖d_i α_i − D_c α_c‖²
//!      + γ Σ_{a≠b} ‖D_a α_a + D_b α_b‖²
//! ```
//!
//! where the class sums run over classes that hold at least one sample and `M`
//! below is the number of such classes. Its unique stationary point solves
//!
//! ```text
//! ((1+2γ) DᵀD + λI + η H¹ + 2γ(M−2) H²) α = Dᵀ t
//! ```
//!
//! with block-diagonal `H¹_c = Σ_i D̄_{c,i}ᵀ D̄_{c,i} = (N_c−2) G_c + diag(G_c)`
//! (`D̄_{c,i}` is `D_c` with column `i` zeroed) and `H²_c = G_c = D_cᵀ D_c`.
//!
//! Everything the system needs is a function of the Gram matrix `DᵀD`, so the
//! linear and kernel classifiers share this module.

use std::ops::Range;

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::dataset::ClassPartitionedDataset;
use crate::error::{Error, Result};
use crate::kernel::{Bandwidth, KernelKind};
use crate::linalg::{self, SymmetricFactor};

/// Regularization weights and classifier settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HyperParams {
    /// Ridge weight λ.
    pub lambda: f64,
    /// Within-class weight η.
    pub eta: f64,
    /// Between-class weight γ.
    pub gamma: f64,
    /// Fraction of the training set kept in the locality set.
    pub locality_fraction: f64,
    /// RBF bandwidth σ (kernel classifier only).
    pub sigma: Bandwidth,
    /// Kernel family (kernel classifier only).
    pub kernel: KernelKind,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            eta: 0.001,
            gamma: 0.001,
            locality_fraction: 0.2,
            sigma: Bandwidth::Median,
            kernel: KernelKind::Rbf,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("lambda", self.lambda),
            ("eta", self.eta),
            ("gamma", self.gamma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(
                    field,
                    format!("must be a finite value >= 0, got {v}"),
                ));
            }
        }
        let f = self.locality_fraction;
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::invalid(
                "locality_fraction",
                format!("must lie in (0, 1], got {f}"),
            ));
        }
        if let Bandwidth::Fixed(s) = self.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::invalid("sigma", format!("must be > 0, got {s}")));
            }
        }
        Ok(())
    }
}

/// Block-diagonal within-class (`h1`) and between-class (`h2`) regularizers.
#[derive(Debug, Clone)]
pub struct RegularizerBlocks {
    h1: Vec<Mat<f64>>,
    h2: Vec<Mat<f64>>,
    class_ranges: Vec<Range<usize>>,
}

/// `Σ_i Ḡ_iᵀ Ḡ_i` for one class block, in closed form `(N−2)G + diag(G)`.
pub fn within_class_block(g: MatRef<'_, f64>) -> Mat<f64> {
    let n = g.nrows();
    let scale = n as f64 - 2.0;
    Mat::from_fn(n, n, |i, j| {
        if i == j {
            (scale + 1.0) * g[(i, j)]
        } else {
            scale * g[(i, j)]
        }
    })
}

impl RegularizerBlocks {
    /// Builds both regularizers from per-class Gram blocks `G_c`.
    pub fn from_class_grams(grams: Vec<Mat<f64>>, class_ranges: &[Range<usize>]) -> Self {
        let h1 = grams
            .iter()
            .map(|g| within_class_block(g.as_ref()))
            .collect();
        Self {
            h1,
            h2: grams,
            class_ranges: class_ranges.to_vec(),
        }
    }

    /// Builds both regularizers from the full Gram matrix `DᵀD`.
    pub fn from_gram(gram: MatRef<'_, f64>, class_ranges: &[Range<usize>]) -> Self {
        let grams = class_ranges
            .iter()
            .map(|r| {
                gram.submatrix(r.start, r.start, r.len(), r.len())
                    .to_owned()
            })
            .collect();
        Self::from_class_grams(grams, class_ranges)
    }

    pub fn h1_block(&self, c: usize) -> MatRef<'_, f64> {
        self.h1[c].as_ref()
    }

    pub fn h2_block(&self, c: usize) -> MatRef<'_, f64> {
        self.h2[c].as_ref()
    }

    pub fn class_ranges(&self) -> &[Range<usize>] {
        &self.class_ranges
    }

    /// Start index of each class block.
    pub fn class_offsets(&self) -> Vec<usize> {
        self.class_ranges.iter().map(|r| r.start).collect()
    }

    pub fn dim(&self) -> usize {
        self.class_ranges.last().map_or(0, |r| r.end)
    }

    fn dense(&self, blocks: &[Mat<f64>]) -> Mat<f64> {
        let n = self.dim();
        let mut out = Mat::zeros(n, n);
        for (r, b) in self.class_ranges.iter().zip(blocks) {
            out.as_mut()
                .submatrix_mut(r.start, r.start, r.len(), r.len())
                .copy_from(b.as_ref());
        }
        out
    }

    pub fn h1_dense(&self) -> Mat<f64> {
        self.dense(&self.h1)
    }

    pub fn h2_dense(&self) -> Mat<f64> {
        self.dense(&self.h2)
    }

    /// Replaces the between-class blocks (verification hook for the `M = 2`
    /// inertness check).
    pub fn with_h2(mut self, h2: Vec<Mat<f64>>) -> Self {
        assert_eq!(h2.len(), self.h2.len());
        self.h2 = h2;
        self
    }

    fn blockwise_mul(&self, blocks: &[Mat<f64>], v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (r, b) in self.class_ranges.iter().zip(blocks) {
            let part = linalg::matvec(b.as_ref(), &v[r.clone()]);
            out[r.clone()].copy_from_slice(&part);
        }
        out
    }
}

/// Computes the regularizer blocks of a training set.
pub fn build_blocks(train: &ClassPartitionedDataset) -> RegularizerBlocks {
    let grams = (0..train.n_classes())
        .map(|c| linalg::gram(train.class_block(c)))
        .collect();
    RegularizerBlocks::from_class_grams(grams, train.class_ranges())
}

/// Number of classes with at least one sample.
pub fn active_classes(class_ranges: &[Range<usize>]) -> usize {
    class_ranges.iter().filter(|r| !r.is_empty()).count()
}

/// `(1+2γ) G + λI + η H¹ + 2γ(M−2) H²`.
pub fn assemble_system(
    gram: MatRef<'_, f64>,
    blocks: &RegularizerBlocks,
    hp: &HyperParams,
) -> Mat<f64> {
    let n = gram.nrows();
    let m = active_classes(blocks.class_ranges()) as f64;
    let between = 2.0 * hp.gamma * (m - 2.0);
    let mut a = Mat::from_fn(n, n, |i, j| {
        (1.0 + 2.0 * hp.gamma) * gram[(i, j)] + if i == j { hp.lambda } else { 0.0 }
    });
    for (c, r) in blocks.class_ranges().iter().enumerate() {
        let h1 = blocks.h1_block(c);
        let h2 = blocks.h2_block(c);
        for j in 0..r.len() {
            for i in 0..r.len() {
                a[(r.start + i, r.start + j)] += hp.eta * h1[(i, j)] + between * h2[(i, j)];
            }
        }
    }
    a
}

/// Coefficients of one solve, partitioned by class, with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSolution {
    pub coeffs: Vec<f64>,
    pub class_ranges: Vec<Range<usize>>,
    /// `G(α)` at the returned coefficients.
    pub objective: f64,
    /// `‖∇G(α)‖∞` at the returned coefficients.
    pub grad_inf_norm: f64,
}

impl CoefficientSolution {
    pub fn class_coeffs(&self, c: usize) -> &[f64] {
        &self.coeffs[self.class_ranges[c].clone()]
    }
}

/// A factored discriminant system, reusable across targets.
pub struct DiscriminantSystem {
    matrix: Mat<f64>,
    factor: SymmetricFactor,
    class_ranges: Vec<Range<usize>>,
}

impl DiscriminantSystem {
    /// Assembles and factors the system for Gram matrix `DᵀD`.
    pub fn from_gram(
        gram: MatRef<'_, f64>,
        class_ranges: &[Range<usize>],
        hp: &HyperParams,
    ) -> Result<Self> {
        let blocks = RegularizerBlocks::from_gram(gram, class_ranges);
        Self::from_blocks(gram, &blocks, hp)
    }

    pub fn from_blocks(
        gram: MatRef<'_, f64>,
        blocks: &RegularizerBlocks,
        hp: &HyperParams,
    ) -> Result<Self> {
        if gram.nrows() != gram.ncols() || gram.nrows() != blocks.dim() {
            return Err(Error::DimensionMismatch {
                expected: blocks.dim(),
                found: gram.nrows(),
            });
        }
        let matrix = assemble_system(gram, blocks, hp);
        let factor = SymmetricFactor::new(matrix.as_ref())?;
        Ok(Self {
            matrix,
            factor,
            class_ranges: blocks.class_ranges().to_vec(),
        })
    }

    pub fn matrix(&self) -> MatRef<'_, f64> {
        self.matrix.as_ref()
    }

    pub fn is_cholesky(&self) -> bool {
        self.factor.is_cholesky()
    }

    /// Solves for right-hand side `rhs = Dᵀt`; `target_sq_norm = ‖t‖²` is only
    /// used to report the objective value.
    pub fn solve(&self, rhs: &[f64], target_sq_norm: f64) -> Result<CoefficientSolution> {
        let b = MatRef::from_column_major_slice(rhs, rhs.len(), 1);
        let mut out = self.solve_many(b, &[target_sq_norm])?;
        Ok(out.pop().expect("one column"))
    }

    /// Solves for every column of `rhs` at once.
    pub fn solve_many(
        &self,
        rhs: MatRef<'_, f64>,
        target_sq_norms: &[f64],
    ) -> Result<Vec<CoefficientSolution>> {
        let n = self.matrix.nrows();
        if rhs.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: rhs.nrows(),
            });
        }
        assert_eq!(rhs.ncols(), target_sq_norms.len());
        let mut alpha = self.factor.solve_mat(rhs);
        // one step of iterative refinement
        let residual = rhs - &self.matrix * &alpha;
        alpha += self.factor.solve_mat(residual.as_ref());
        let a_alpha = &self.matrix * &alpha;
        (0..rhs.ncols())
            .map(|j| {
                let coeffs = alpha.col_as_slice(j).to_vec();
                if !coeffs.iter().all(|v| v.is_finite()) {
                    return Err(Error::SingularSystem);
                }
                let b: Vec<f64> = rhs.col(j).iter().copied().collect();
                let aa = a_alpha.col_as_slice(j);
                let objective =
                    target_sq_norms[j] - 2.0 * linalg::dot(&coeffs, &b) + linalg::dot(&coeffs, aa);
                let grad_inf_norm = aa
                    .iter()
                    .zip(&b)
                    .map(|(a, b)| (2.0 * (a - b)).abs())
                    .fold(0.0, f64::max);
                Ok(CoefficientSolution {
                    coeffs,
                    class_ranges: self.class_ranges.clone(),
                    objective,
                    grad_inf_norm,
                })
            })
            .collect()
    }
}

/// A class-partitioned design matrix: a training set's features, or a kernel
/// matrix whose columns stand in for the samples.
#[derive(Debug, Clone, Copy)]
pub struct Design<'a> {
    pub matrix: MatRef<'a, f64>,
    pub class_ranges: &'a [Range<usize>],
}

impl<'a> Design<'a> {
    pub fn of(train: &'a ClassPartitionedDataset) -> Self {
        Self {
            matrix: train.features(),
            class_ranges: train.class_ranges(),
        }
    }

    fn check(&self, target: &[f64], alpha: Option<&[f64]>) -> Result<()> {
        if target.len() != self.matrix.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.nrows(),
                found: target.len(),
            });
        }
        if let Some(a) = alpha {
            if a.len() != self.matrix.ncols() {
                return Err(Error::DimensionMismatch {
                    expected: self.matrix.ncols(),
                    found: a.len(),
                });
            }
        }
        Ok(())
    }

    fn class_representation(&self, c: usize, alpha: &[f64]) -> Vec<f64> {
        let r = self.class_ranges[c].clone();
        linalg::matvec(self.matrix.subcols(r.start, r.len()), &alpha[r])
    }
}

/// `G(α)` by direct summation of its four terms.
pub fn design_objective(
    design: Design<'_>,
    target: &[f64],
    alpha: &[f64],
    hp: &HyperParams,
) -> Result<f64> {
    design.check(target, Some(alpha))?;
    let recon = linalg::matvec(design.matrix, alpha);
    let fit: f64 = target
        .iter()
        .zip(&recon)
        .map(|(t, r)| (t - r) * (t - r))
        .sum();
    let ridge = hp.lambda * linalg::sq_norm(alpha);

    let active: Vec<usize> = (0..design.class_ranges.len())
        .filter(|&c| !design.class_ranges[c].is_empty())
        .collect();
    let reps: Vec<Vec<f64>> = active
        .iter()
        .map(|&c| design.class_representation(c, alpha))
        .collect();

    let mut within = 0.0;
    for (&c, rep) in active.iter().zip(&reps) {
        for i in design.class_ranges[c].clone() {
            let col = design.matrix.col(i);
            within += (0..rep.len())
                .map(|k| {
                    let d = col[k] * alpha[i] - rep[k];
                    d * d
                })
                .sum::<f64>();
        }
    }

    let mut between = 0.0;
    for a in 0..reps.len() {
        for b in 0..reps.len() {
            if a != b {
                between += reps[a]
                    .iter()
                    .zip(&reps[b])
                    .map(|(u, v)| (u + v) * (u + v))
                    .sum::<f64>();
            }
        }
    }
    Ok(fit + ridge + hp.eta * within + hp.gamma * between)
}

/// `∇G(α) = −2Dᵀ(t − Dα) + 2λα + 2ηH¹α + 4γDᵀDα + 4γ(M−2)H²α`.
pub fn design_gradient(
    design: Design<'_>,
    target: &[f64],
    alpha: &[f64],
    hp: &HyperParams,
) -> Result<Vec<f64>> {
    design.check(target, Some(alpha))?;
    let grams = design
        .class_ranges
        .iter()
        .map(|r| linalg::gram(design.matrix.subcols(r.start, r.len())))
        .collect();
    let blocks = RegularizerBlocks::from_class_grams(grams, design.class_ranges);
    let m = active_classes(design.class_ranges) as f64;

    let recon = linalg::matvec(design.matrix, alpha);
    let residual: Vec<f64> = target.iter().zip(&recon).map(|(t, r)| t - r).collect();
    let fit = linalg::tmatvec(design.matrix, &residual);
    let dtd_alpha = linalg::tmatvec(design.matrix, &recon);
    let h1_alpha = blocks.blockwise_mul(&blocks.h1, alpha);
    let h2_alpha = blocks.blockwise_mul(&blocks.h2, alpha);

    Ok((0..alpha.len())
        .map(|i| {
            -2.0 * fit[i]
                + 2.0 * hp.lambda * alpha[i]
                + 2.0 * hp.eta * h1_alpha[i]
                + 4.0 * hp.gamma * dtd_alpha[i]
                + 4.0 * hp.gamma * (m - 2.0) * h2_alpha[i]
        })
        .collect())
}

/// Solves for the stationary point of `G` on a design matrix.
pub fn design_solve(
    design: Design<'_>,
    target: &[f64],
    hp: &HyperParams,
) -> Result<CoefficientSolution> {
    design.check(target, None)?;
    let gram = linalg::gram(design.matrix);
    let system = DiscriminantSystem::from_gram(gram.as_ref(), design.class_ranges, hp)?;
    let rhs = linalg::tmatvec(design.matrix, target);
    system.solve(&rhs, linalg::sq_norm(target))
}

pub fn objective(
    train: &ClassPartitionedDataset,
    x: &[f64],
    alpha: &[f64],
    hp: &HyperParams,
) -> Result<f64> {
    design_objective(Design::of(train), x, alpha, hp)
}

pub fn gradient(
    train: &ClassPartitionedDataset,
    x: &[f64],
    alpha: &[f64],
    hp: &HyperParams,
) -> Result<Vec<f64>> {
    design_gradient(Design::of(train), x, alpha, hp)
}

pub fn solve(
    train: &ClassPartitionedDataset,
    x: &[f64],
    hp: &HyperParams,
) -> Result<CoefficientSolution> {
    design_solve(Design::of(train), x, hp)
}

/// `d_i = ‖x − x_i α_i‖` for every training column.
pub fn residual_distances(
    train: &ClassPartitionedDataset,
    x: &[f64],
    sol: &CoefficientSolution,
) -> Vec<f64> {
    (0..train.len())
        .map(|i| {
            let a = sol.coeffs[i];
            train
                .column(i)
                .iter()
                .zip(x)
                .map(|(v, xv)| (xv - v * a) * (xv - v * a))
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}
