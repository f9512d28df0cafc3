//! Per-class dictionary compaction.
//!
//! Each class block `X` is replaced by `k` learned atoms `D` minimizing
//! `‖X − DA‖²_F + τ‖A‖²_F`, solved by alternating least squares.

use faer::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::ClassPartitionedDataset;
use crate::error::{Error, Result};
use crate::linalg::{self, SymmetricFactor};

/// Ridge stabilizer of the atom update.
const ATOM_STABILIZER: f64 = 1e-12;

pub const DEFAULT_ITERS: usize = 30;

/// Compaction settings: atoms per class, code penalty τ and ALS iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompactSpec {
    pub atoms: usize,
    #[serde(default)]
    pub tau: f64,
    #[serde(default = "default_iters")]
    pub iters: usize,
}

fn default_iters() -> usize {
    DEFAULT_ITERS
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDictionary {
    /// `q × k`, unit-norm columns.
    pub atoms: Mat<f64>,
    /// `k × N_c`.
    pub codes: Mat<f64>,
    pub tau: f64,
    /// Objective of the returned `atoms` and `codes`.
    pub final_objective: f64,
    /// Objective after every iteration, before the final atom rescaling.
    pub history: Vec<f64>,
}

/// `‖X − DA‖²_F + τ‖A‖²_F`.
pub fn dictionary_objective(
    x: faer::MatRef<'_, f64>,
    atoms: faer::MatRef<'_, f64>,
    codes: faer::MatRef<'_, f64>,
    tau: f64,
) -> f64 {
    let resid = x - atoms * codes;
    let r = resid.norm_l2();
    let a = codes.norm_l2();
    r * r + tau * a * a
}

/// Codes for fixed atoms: `A = (DᵀD + τI)⁻¹ DᵀX`.
fn code_step(x: faer::MatRef<'_, f64>, d: faer::MatRef<'_, f64>, tau: f64) -> Result<Mat<f64>> {
    let mut g = linalg::gram(d);
    for i in 0..g.nrows() {
        g[(i, i)] += tau;
    }
    let factor = SymmetricFactor::new(g.as_ref())?;
    let dtx: Mat<f64> = d.transpose() * x;
    Ok(factor.solve_mat(dtx.as_ref()))
}

/// Atoms for fixed codes: `D = XAᵀ(AAᵀ + εI)⁻¹`.
fn atom_step(x: faer::MatRef<'_, f64>, a: faer::MatRef<'_, f64>) -> Result<Mat<f64>> {
    let mut g: Mat<f64> = a * a.transpose();
    for i in 0..g.nrows() {
        g[(i, i)] += ATOM_STABILIZER;
    }
    let factor = SymmetricFactor::new(g.as_ref())?;
    // (AAᵀ+εI) Dᵀ = A Xᵀ
    let axt: Mat<f64> = a * x.transpose();
    Ok(factor.solve_mat(axt.as_ref()).transpose().to_owned())
}

pub fn learn_dictionary(
    class_block: faer::MatRef<'_, f64>,
    k: usize,
    tau: f64,
    iters: usize,
    seed: u64,
) -> Result<ClassDictionary> {
    let n = class_block.ncols();
    if k == 0 || k > n {
        return Err(Error::InvalidAtomCount { k, available: n });
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::invalid(
            "compact_tau",
            format!("must be >= 0, got {tau}"),
        ));
    }
    if iters == 0 {
        return Err(Error::invalid("compact_iters", "must be at least 1"));
    }
    let x = class_block;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks = rand::seq::index::sample(&mut rng, n, k).into_vec();
    picks.sort_unstable();
    let mut d = Mat::from_fn(x.nrows(), k, |i, j| x[(i, picks[j])]);
    let mut a = code_step(x, d.as_ref(), tau)?;
    let mut history = vec![dictionary_objective(x, d.as_ref(), a.as_ref(), tau)];
    for _ in 1..iters {
        d = atom_step(x, a.as_ref())?;
        a = code_step(x, d.as_ref(), tau)?;
        history.push(dictionary_objective(x, d.as_ref(), a.as_ref(), tau));
    }

    // Unit-norm atoms. An atom that collapsed to zero carries no code weight;
    // it is replaced by a normalized data column, which leaves the product DA
    // unchanged.
    for j in 0..k {
        let norm = d.col(j).norm_l2();
        if norm > 0.0 {
            d.col_mut(j).iter_mut().for_each(|v| *v /= norm);
            a.row_mut(j).iter_mut().for_each(|v| *v *= norm);
        } else {
            let src = picks[j];
            let cn = x.col(src).norm_l2().max(f64::MIN_POSITIVE);
            for i in 0..x.nrows() {
                d[(i, j)] = x[(i, src)] / cn;
            }
            a.row_mut(j).fill(0.0);
        }
    }
    let final_objective = dictionary_objective(x, d.as_ref(), a.as_ref(), tau);
    Ok(ClassDictionary {
        atoms: d,
        codes: a,
        tau,
        final_objective,
        history,
    })
}

/// Replaces every class block with `k_per_class` learned atoms. Class `c`
/// uses seed `seed + c`.
pub fn compact_dataset(
    train: &ClassPartitionedDataset,
    k_per_class: usize,
    tau: f64,
    iters: usize,
    seed: u64,
) -> Result<ClassPartitionedDataset> {
    let dicts: Vec<ClassDictionary> = (0..train.n_classes())
        .into_par_iter()
        .map(|c| {
            learn_dictionary(
                train.class_block(c),
                k_per_class,
                tau,
                iters,
                seed.wrapping_add(c as u64),
            )
        })
        .collect::<Result<_>>()?;
    let total = k_per_class * dicts.len();
    let features = Mat::from_fn(train.q(), total, |i, j| {
        dicts[j / k_per_class].atoms[(i, j % k_per_class)]
    });
    let names: Vec<String> = (0..total)
        .map(|j| train.class_names()[j / k_per_class].clone())
        .collect();
    ClassPartitionedDataset::from_columns(features, &names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::random_dataset;
    use rand_distr::{Distribution, StandardNormal};

    fn random_mat(seed: u64, q: usize, n: usize) -> Mat<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Mat::from_fn(q, n, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn full_atom_count_reconstructs_exactly() {
        let x = random_mat(1, 8, 5);
        let dict = learn_dictionary(x.as_ref(), 5, 0.0, 10, 3).unwrap();
        let energy = x.norm_l2().powi(2);
        assert!(dict.final_objective <= 1e-8 * energy);
    }

    #[test]
    fn rank_one_block_needs_one_atom() {
        let u = [1.0, -2.0, 0.5];
        let v = [0.3, 1.0, -0.7, 2.0];
        let x = Mat::from_fn(3, 4, |i, j| u[i] * v[j]);
        let dict = learn_dictionary(x.as_ref(), 1, 0.0, 5, 0).unwrap();
        assert!(dict.final_objective <= 1e-8 * x.norm_l2().powi(2));
        assert!((dict.atoms.col(0).norm_l2() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn objective_never_increases() {
        for seed in 0..5 {
            let x = random_mat(seed, 10, 12);
            for (k, tau) in [(3, 0.0), (5, 0.1), (1, 1.0)] {
                let dict = learn_dictionary(x.as_ref(), k, tau, 25, seed).unwrap();
                for w in dict.history.windows(2) {
                    assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "{:?}", dict.history);
                }
            }
        }
    }

    #[test]
    fn final_objective_matches_recomputation() {
        let x = random_mat(4, 6, 9);
        let dict = learn_dictionary(x.as_ref(), 4, 0.3, 12, 8).unwrap();
        let direct =
            dictionary_objective(x.as_ref(), dict.atoms.as_ref(), dict.codes.as_ref(), 0.3);
        assert!((dict.final_objective - direct).abs() <= 1e-8 * direct.max(1.0));
        assert_eq!(dict, learn_dictionary(x.as_ref(), 4, 0.3, 12, 8).unwrap());
    }

    #[test]
    fn atom_count_is_validated() {
        let x = random_mat(5, 4, 3);
        assert!(matches!(
            learn_dictionary(x.as_ref(), 4, 0.0, 3, 0),
            Err(Error::InvalidAtomCount { k: 4, available: 3 })
        ));
        assert!(learn_dictionary(x.as_ref(), 0, 0.0, 3, 0).is_err());
    }

    #[test]
    fn compaction_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let train = random_dataset(&mut rng, 10, &[7, 9, 8]);
        let out = compact_dataset(&train, 3, 0.01, 5, 1).unwrap();
        assert_eq!(out.class_counts(), vec![3, 3, 3]);
        assert_eq!(out.class_names(), train.class_names());
        let one = compact_dataset(&train, 1, 0.01, 5, 1).unwrap();
        assert_eq!(one.len(), 3);
        assert!(compact_dataset(&train, 8, 0.0, 5, 1).is_err());
    }
}
