//! Two-stage locality classifier.
//!
//! Stage 1 solves the discriminant system over the whole training set and
//! ranks every training column by `d_i = ‖x − x_i α_i‖`. The `s` closest
//! columns form the locality set `Y`; stage 2 solves the same system over `Y`
//! and scores each class by `‖x − Y_c β_c‖ / ‖β_c‖`.

use std::ops::Range;

use faer::{Mat, MatRef};
use rayon::prelude::*;

use crate::dataset::ClassPartitionedDataset;
use crate::error::{Error, Result};
use crate::linalg;
use crate::solver::{CoefficientSolution, DiscriminantSystem, HyperParams};

/// Per-class scores and the resulting decision. Smaller scores are better.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDecision {
    /// `s_c`; `f64::INFINITY` for classes that cannot be scored.
    pub scores: Vec<f64>,
    pub predicted: usize,
    /// Class ids sorted by ascending score, ties by lower id.
    pub ranking: Vec<usize>,
}

impl ClassDecision {
    pub fn from_scores(scores: Vec<f64>) -> Result<Self> {
        if scores.iter().all(|s| !s.is_finite()) {
            return Err(Error::AllScoresInfinite);
        }
        let mut ranking: Vec<usize> = (0..scores.len()).collect();
        ranking.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
        Ok(Self {
            predicted: ranking[0],
            scores,
            ranking,
        })
    }

    /// Whether class `c` is among the `k` best-ranked classes.
    pub fn in_top(&self, c: usize, k: usize) -> bool {
        self.ranking.iter().take(k).any(|&r| r == c)
    }
}

/// `s = max(1, round(fraction · total))`, capped at `total`.
pub fn locality_size(fraction: f64, total: usize) -> usize {
    ((fraction * total as f64).round() as usize).clamp(1, total.max(1))
}

/// Positions of the `s` smallest distances (ties to the lower index),
/// returned in ascending position order.
pub fn smallest_indices(distances: &[f64], s: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..distances.len()).collect();
    order.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]).then(a.cmp(&b)));
    let mut picked: Vec<usize> = order.into_iter().take(s).collect();
    picked.sort_unstable();
    picked
}

/// Contiguous class ranges for a class-sorted label list over `n_classes`.
pub(crate) fn ranges_from_labels(labels: &[usize], n_classes: usize) -> Vec<Range<usize>> {
    let mut ranges = Vec::with_capacity(n_classes);
    let mut start = 0;
    for c in 0..n_classes {
        let len = labels[start..].iter().take_while(|&&l| l == c).count();
        ranges.push(start..start + len);
        start += len;
    }
    debug_assert_eq!(start, labels.len(), "labels must be sorted by class");
    ranges
}

/// `‖t − D_c β_c‖ / ‖β_c‖` per class, infinite for empty classes and
/// vanishing coefficient blocks.
pub fn class_scores(
    design: MatRef<'_, f64>,
    class_ranges: &[Range<usize>],
    target: &[f64],
    coeffs: &[f64],
) -> Vec<f64> {
    class_ranges
        .iter()
        .map(|r| {
            if r.is_empty() {
                return f64::INFINITY;
            }
            let beta = &coeffs[r.clone()];
            let beta_norm = linalg::norm(beta);
            if beta_norm == 0.0 {
                return f64::INFINITY;
            }
            let rep = linalg::matvec(design.subcols(r.start, r.len()), beta);
            let resid = target
                .iter()
                .zip(&rep)
                .map(|(t, v)| (t - v) * (t - v))
                .sum::<f64>()
                .sqrt();
            resid / beta_norm
        })
        .collect()
}

/// The stage-2 training subset.
#[derive(Debug, Clone)]
pub struct LocalitySet {
    /// Positions in the training set, ascending.
    pub selected_indices: Vec<usize>,
    pub subset: ClassPartitionedDataset,
    pub surviving_classes: Vec<usize>,
}

/// Everything computed while classifying one query.
#[derive(Debug, Clone)]
pub struct LdsrOutcome {
    pub stage1: CoefficientSolution,
    pub distances: Vec<f64>,
    pub selected_indices: Vec<usize>,
    /// Coefficients over the locality set, partitioned by class.
    pub stage2: CoefficientSolution,
    pub decision: ClassDecision,
}

/// An LDSR classifier with the stage-1 system factored once.
pub struct LdsrModel<'a> {
    train: &'a ClassPartitionedDataset,
    hp: HyperParams,
    gram: Mat<f64>,
    stage1: DiscriminantSystem,
}

impl<'a> LdsrModel<'a> {
    pub fn fit(train: &'a ClassPartitionedDataset, hp: &HyperParams) -> Result<Self> {
        hp.validate()?;
        let gram = linalg::gram(train.features());
        let stage1 = DiscriminantSystem::from_gram(gram.as_ref(), train.class_ranges(), hp)?;
        Ok(Self {
            train,
            hp: *hp,
            gram,
            stage1,
        })
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.train.q() {
            return Err(Error::DimensionMismatch {
                expected: self.train.q(),
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn stage1(&self, x: &[f64]) -> Result<CoefficientSolution> {
        self.check(x)?;
        let rhs = linalg::tmatvec(self.train.features(), x);
        self.stage1.solve(&rhs, linalg::sq_norm(x))
    }

    /// Runs stage 1 and selection, returning the locality set.
    pub fn select(&self, x: &[f64]) -> Result<LocalitySet> {
        let sol = self.stage1(x)?;
        let distances = crate::solver::residual_distances(self.train, x, &sol);
        let selected = smallest_indices(&distances, self.locality_size());
        let subset = self.train.subset(&selected);
        let surviving_classes = (0..subset.n_classes())
            .filter(|&c| !subset.class_ranges()[c].is_empty())
            .collect();
        Ok(LocalitySet {
            selected_indices: selected,
            subset,
            surviving_classes,
        })
    }

    pub fn locality_size(&self) -> usize {
        locality_size(self.hp.locality_fraction, self.train.len())
    }

    pub fn classify_detailed(&self, x: &[f64]) -> Result<LdsrOutcome> {
        self.check(x)?;
        let rhs = linalg::tmatvec(self.train.features(), x);
        let stage1 = self.stage1.solve(&rhs, linalg::sq_norm(x))?;
        self.finish(x, &rhs, stage1)
    }

    /// Selection, stage 2 and scoring, given the stage-1 solution.
    fn finish(&self, x: &[f64], rhs: &[f64], stage1: CoefficientSolution) -> Result<LdsrOutcome> {
        let distances = crate::solver::residual_distances(self.train, x, &stage1);
        let selected = smallest_indices(&distances, self.locality_size());

        let labels: Vec<usize> = selected.iter().map(|&j| self.train.labels()[j]).collect();
        let ranges = ranges_from_labels(&labels, self.train.n_classes());
        let sub_gram = linalg::principal_submatrix(self.gram.as_ref(), &selected);
        let system = DiscriminantSystem::from_gram(sub_gram.as_ref(), &ranges, &self.hp)?;
        let sub_rhs: Vec<f64> = selected.iter().map(|&j| rhs[j]).collect();
        let stage2 = system.solve(&sub_rhs, linalg::sq_norm(x))?;

        let y = Mat::from_fn(self.train.q(), selected.len(), |i, j| {
            self.train.features()[(i, selected[j])]
        });
        let scores = class_scores(y.as_ref(), &ranges, x, &stage2.coeffs);
        let decision = ClassDecision::from_scores(scores)?;
        Ok(LdsrOutcome {
            stage1,
            distances,
            selected_indices: selected,
            stage2,
            decision,
        })
    }

    pub fn classify(&self, x: &[f64]) -> Result<ClassDecision> {
        self.classify_detailed(x).map(|o| o.decision)
    }

    /// Classifies every column of `queries`. Stage 1 is solved for blocks of
    /// queries at once; the rest runs per query in parallel.
    pub fn classify_many(&self, queries: MatRef<'_, f64>) -> Result<Vec<ClassDecision>> {
        if queries.nrows() != self.train.q() {
            return Err(Error::DimensionMismatch {
                expected: self.train.q(),
                found: queries.nrows(),
            });
        }
        let mut out = Vec::with_capacity(queries.ncols());
        let mut start = 0;
        while start < queries.ncols() {
            let width = QUERY_BLOCK.min(queries.ncols() - start);
            let block = queries.subcols(start, width);
            let rhs: Mat<f64> = self.train.features().transpose() * block;
            let norms: Vec<f64> = (0..width).map(|j| block.col(j).squared_norm_l2()).collect();
            let stage1 = self.stage1.solve_many(rhs.as_ref(), &norms)?;
            let decided: Vec<ClassDecision> = stage1
                .into_par_iter()
                .enumerate()
                .map(|(j, s1)| {
                    let x: Vec<f64> = block.col(j).iter().copied().collect();
                    self.finish(&x, rhs.col_as_slice(j), s1).map(|o| o.decision)
                })
                .collect::<Result<_>>()?;
            out.extend(decided);
            start += width;
        }
        Ok(out)
    }
}

/// Queries per batched stage-1 solve.
pub(crate) const QUERY_BLOCK: usize = 256;

pub fn select_locality(
    train: &ClassPartitionedDataset,
    x: &[f64],
    hp: &HyperParams,
) -> Result<LocalitySet> {
    LdsrModel::fit(train, hp)?.select(x)
}

pub fn classify(
    train: &ClassPartitionedDataset,
    x: &[f64],
    hp: &HyperParams,
) -> Result<ClassDecision> {
    LdsrModel::fit(train, hp)?.classify(x)
}

/// Classifies every column of `queries`; results follow column order.
pub fn classify_batch(
    train: &ClassPartitionedDataset,
    queries: MatRef<'_, f64>,
    hp: &HyperParams,
) -> Result<Vec<ClassDecision>> {
    if queries.nrows() != train.q() && queries.ncols() > 0 {
        return Err(Error::DimensionMismatch {
            expected: train.q(),
            found: queries.nrows(),
        });
    }
    if queries.ncols() == 0 {
        return Ok(Vec::new());
    }
    LdsrModel::fit(train, hp)?.classify_many(queries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{random_dataset, random_vec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn order_statistics_selection() {
        assert_eq!(smallest_indices(&[0.1, 0.5, 0.3], 2), vec![0, 2]);
        let d = [0.9, 0.1, 0.2, 0.8, 0.3, 0.7, 0.6, 0.3];
        // 0.1, 0.2 then one slot for the tie at 4 and 7
        assert_eq!(smallest_indices(&d, 3), vec![1, 2, 4]);
    }

    #[test]
    fn locality_size_rounding() {
        assert_eq!(locality_size(0.3, 10), 3);
        assert_eq!(locality_size(0.01, 10), 1);
        assert_eq!(locality_size(1.0, 7), 7);
        assert_eq!(locality_size(0.25, 10), 3);
    }

    #[test]
    fn decision_ranking_and_ties() {
        let d = ClassDecision::from_scores(vec![2.0, 1.0, f64::INFINITY, 1.0]).unwrap();
        assert_eq!(d.predicted, 1);
        assert_eq!(d.ranking, vec![1, 3, 0, 2]);
        assert!(d.in_top(3, 2) && !d.in_top(0, 2));
        assert!(matches!(
            ClassDecision::from_scores(vec![f64::INFINITY; 3]),
            Err(Error::AllScoresInfinite)
        ));
    }

    #[test]
    fn scaling_scores_keeps_decision() {
        let s = vec![0.4, 0.2, 0.9, f64::INFINITY];
        let a = ClassDecision::from_scores(s.clone()).unwrap();
        let b = ClassDecision::from_scores(s.iter().map(|v| v * 7.5).collect()).unwrap();
        assert_eq!(a.predicted, b.predicted);
        assert_eq!(a.ranking, b.ranking);
    }

    #[test]
    fn zero_coefficients_and_empty_classes_score_infinite() {
        let d = Mat::from_fn(2, 3, |i, j| (i + j) as f64 + 1.0);
        let ranges = vec![0..1, 1..1, 1..3];
        let s = class_scores(d.as_ref(), &ranges, &[1.0, 1.0], &[0.0, 0.5, 0.5]);
        assert!(s[0].is_infinite() && s[1].is_infinite() && s[2].is_finite());
    }

    #[test]
    fn full_locality_reproduces_direct_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let train = random_dataset(&mut rng, 9, &[3, 4, 2]);
        let x = random_vec(&mut rng, 9);
        let hp = HyperParams {
            locality_fraction: 1.0,
            lambda: 0.05,
            eta: 0.3,
            gamma: 0.2,
            ..HyperParams::default()
        };
        let out = LdsrModel::fit(&train, &hp)
            .unwrap()
            .classify_detailed(&x)
            .unwrap();
        assert_eq!(out.selected_indices, (0..train.len()).collect::<Vec<_>>());
        let direct = crate::solver::solve(&train, &x, &hp).unwrap();
        for (a, b) in out.stage2.coeffs.iter().zip(&direct.coeffs) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn dropped_class_gets_infinite_score() {
        // class 2 sits far from the query, s = 2 keeps only class 0/1 samples
        let cols = [
            [1.0, 0.0, 0.0],
            [0.9, 0.1, 0.0],
            [0.0, 1.0, 0.05],
            [0.0, 0.0, 1.0],
        ];
        let x = Mat::from_fn(3, 4, |i, j| cols[j][i]);
        let names: Vec<String> = ["a", "a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let train = ClassPartitionedDataset::from_columns(x, &names).unwrap();
        let hp = HyperParams {
            locality_fraction: 0.5,
            lambda: 0.01,
            eta: 0.0,
            gamma: 0.0,
            ..HyperParams::default()
        };
        let query = [1.0, 0.05, 0.0];
        let set = select_locality(&train, &query, &hp).unwrap();
        assert_eq!(set.selected_indices.len(), 2);
        let d = classify(&train, &query, &hp).unwrap();
        assert!(d.scores[2].is_infinite());
        assert_eq!(d.predicted, 0);
    }

    #[test]
    fn stage_two_uses_surviving_class_count() {
        // Three classes, locality keeps two: stage 2 must use M = 2, which
        // makes its between-class term inert.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut train = random_dataset(&mut rng, 6, &[3, 3, 3]);
        train = crate::dataset::normalize_columns(&train).unwrap();
        let x: Vec<f64> = train
            .column(0)
            .iter()
            .zip(train.column(3))
            .map(|(a, b)| a + b)
            .collect();
        let hp = HyperParams {
            locality_fraction: 2.0 / 9.0,
            lambda: 0.1,
            eta: 0.2,
            gamma: 0.7,
            ..HyperParams::default()
        };
        let model = LdsrModel::fit(&train, &hp).unwrap();
        let out = model.classify_detailed(&x).unwrap();
        let labels: Vec<usize> = out
            .selected_indices
            .iter()
            .map(|&j| train.labels()[j])
            .collect();
        let ranges = ranges_from_labels(&labels, 3);
        if crate::solver::active_classes(&ranges) == 2 {
            let sub = train.subset(&out.selected_indices);
            let direct = crate::solver::solve(&sub, &x, &hp).unwrap();
            for (a, b) in out.stage2.coeffs.iter().zip(&direct.coeffs) {
                assert!((a - b).abs() < 1e-10);
            }
            let gram = linalg::gram(sub.features());
            let sys = crate::solver::assemble_system(
                gram.as_ref(),
                &crate::solver::build_blocks(&sub),
                &hp,
            );
            // no 2γ(M−2) contribution: A = (1+2γ)G + λI + ηH¹
            let h1 = crate::solver::build_blocks(&sub).h1_dense();
            for i in 0..sys.nrows() {
                for j in 0..sys.ncols() {
                    let expect = (1.0 + 2.0 * hp.gamma) * gram[(i, j)]
                        + hp.eta * h1[(i, j)]
                        + if i == j { hp.lambda } else { 0.0 };
                    assert!((sys[(i, j)] - expect).abs() < 1e-12);
                }
            }
        } else {
            panic!("expected exactly two surviving classes, got ranges {ranges:?}");
        }
    }

    #[test]
    fn batch_is_consistent_and_order_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let train = random_dataset(&mut rng, 5, &[4, 4]);
        let hp = HyperParams::default();
        let q = Mat::from_fn(5, 3, |i, j| ((i * 3 + j * 5) % 7) as f64 - 3.0);
        let batch = classify_batch(&train, q.as_ref(), &hp).unwrap();
        let single = classify(&train, q.col_as_slice(1), &hp).unwrap();
        assert_eq!(batch[1].ranking, single.ranking);
        for (a, b) in batch[1].scores.iter().zip(&single.scores) {
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
        }
        let perm = Mat::from_fn(5, 3, |i, j| q[(i, [2, 0, 1][j])]);
        let permuted = classify_batch(&train, perm.as_ref(), &hp).unwrap();
        assert_eq!(permuted[0].ranking, batch[2].ranking);
        assert_eq!(permuted[1].ranking, batch[0].ranking);
        assert!(
            classify_batch(&train, Mat::<f64>::zeros(5, 0).as_ref(), &hp)
                .unwrap()
                .is_empty()
        );
        assert!(classify_batch(&train, Mat::<f64>::zeros(4, 2).as_ref(), &hp).is_err());
    }

    #[test]
    fn exact_training_sample_is_recognized() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let train = crate::dataset::normalize_columns(&random_dataset(&mut rng, 20, &[1, 1, 1, 1]))
            .unwrap();
        let hp = HyperParams {
            lambda: 1e-4,
            ..HyperParams::default()
        };
        for c in 0..4 {
            let d = classify(&train, train.column(c), &hp).unwrap();
            assert_eq!(d.predicted, train.labels()[c]);
        }
    }
}
