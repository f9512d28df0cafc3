//! RBF kernel, Gram matrices, and the kernelized two-stage classifier.
//!
//! The kernel classifier reuses the discriminant system of the linear one with
//! the Gram matrix `K` standing in for the sample matrix and `k(·, x)` for the
//! query.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use faer::{Mat, MatRef};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dataset::ClassPartitionedDataset;
use crate::error::{Error, Result};
use crate::ldsr::{
    class_scores, locality_size, ranges_from_labels, smallest_indices, ClassDecision, QUERY_BLOCK,
};
use crate::linalg;
use crate::solver::{self, CoefficientSolution, Design, DiscriminantSystem, HyperParams};

/// RBF bandwidth: a fixed value or the median pairwise squared distance of the
/// training set. Serialized as a number or the string `"median"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    Fixed(f64),
    Median,
}

impl Bandwidth {
    pub fn resolve(&self, train: &ClassPartitionedDataset) -> f64 {
        match *self {
            Bandwidth::Fixed(s) => s,
            Bandwidth::Median => median_sq_distance(train),
        }
    }
}

impl fmt::Display for Bandwidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bandwidth::Fixed(s) => write!(f, "{s}"),
            Bandwidth::Median => f.write_str("median"),
        }
    }
}

impl FromStr for Bandwidth {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("median") {
            return Ok(Bandwidth::Median);
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(Bandwidth::Fixed(v)),
            _ => Err(format!("expected a positive number or `median`, got `{s}`")),
        }
    }
}

impl Serialize for Bandwidth {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Bandwidth::Fixed(v) => s.serialize_f64(*v),
            Bandwidth::Median => s.serialize_str("median"),
        }
    }
}

impl<'de> Deserialize<'de> for Bandwidth {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Bandwidth::Fixed(v)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Kernel family used by the kernel classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    #[default]
    Rbf,
    Linear,
}

impl FromStr for KernelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "rbf" => Ok(KernelKind::Rbf),
            "linear" => Ok(KernelKind::Linear),
            _ => Err(format!("unknown kernel `{s}`, expected rbf or linear")),
        }
    }
}

/// Kernel function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    /// `exp(−‖x − y‖² / σ)`.
    Rbf { sigma: f64 },
    /// `xᵀ y`.
    Linear,
}

impl Kernel {
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            Kernel::Rbf { sigma } => (-sq_dist(x, y) / sigma).exp(),
            Kernel::Linear => linalg::dot(x, y),
        }
    }
}

fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub fn rbf(x: &[f64], y: &[f64], sigma: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("sigma", format!("must be > 0, got {sigma}")));
    }
    Ok(Kernel::Rbf { sigma }.eval(x, y))
}

/// Median of `‖x_i − x_j‖²` over all pairs `i < j`; 1 for a single sample or
/// when every pair coincides.
pub fn median_sq_distance(train: &ClassPartitionedDataset) -> f64 {
    let n = train.len();
    let mut d: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| (i + 1..n).map(move |j| sq_dist(train.column(i), train.column(j))))
        .collect();
    if d.is_empty() {
        return 1.0;
    }
    let mid = d.len() / 2;
    d.select_nth_unstable_by(mid, f64::total_cmp);
    let hi = d[mid];
    let median = if d.len() % 2 == 1 {
        hi
    } else {
        let lo = d[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    };
    if median > 0.0 {
        median
    } else {
        1.0
    }
}

/// Full kernel matrix over a training set.
#[derive(Debug, Clone)]
pub struct KernelGram {
    gram: Mat<f64>,
    class_ranges: Vec<Range<usize>>,
    kernel: Kernel,
}

impl KernelGram {
    pub fn gram(&self) -> MatRef<'_, f64> {
        self.gram.as_ref()
    }

    pub fn class_ranges(&self) -> &[Range<usize>] {
        &self.class_ranges
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    /// `K` as the design matrix of the discriminant objective.
    pub fn design(&self) -> Design<'_> {
        Design {
            matrix: self.gram.as_ref(),
            class_ranges: &self.class_ranges,
        }
    }
}

/// RBF Gram matrix with bandwidth `sigma`.
pub fn build_gram(train: &ClassPartitionedDataset, sigma: f64) -> KernelGram {
    build_gram_with(train, Kernel::Rbf { sigma })
}

pub fn build_gram_with(train: &ClassPartitionedDataset, kernel: Kernel) -> KernelGram {
    let n = train.len();
    let mut gram = match kernel {
        Kernel::Linear => linalg::gram(train.features()),
        Kernel::Rbf { sigma } => {
            // exp(−(‖x_i‖² − 2x_iᵀx_j + ‖x_j‖²)/σ), diagonal forced to 1
            let dots = linalg::gram(train.features());
            let cols: Vec<Vec<f64>> = (0..n)
                .into_par_iter()
                .map(|j| {
                    (0..n)
                        .map(|i| {
                            if i == j {
                                1.0
                            } else {
                                let d = dots[(i, i)] - 2.0 * dots[(i, j)] + dots[(j, j)];
                                (-d.max(0.0) / sigma).exp()
                            }
                        })
                        .collect()
                })
                .collect();
            Mat::from_fn(n, n, |i, j| cols[j][i])
        }
    };
    // exact symmetry
    for j in 0..n {
        for i in 0..j {
            let v = 0.5 * (gram[(i, j)] + gram[(j, i)]);
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    KernelGram {
        gram,
        class_ranges: train.class_ranges().to_vec(),
        kernel,
    }
}

/// `k(x_i, x)` for every training column, plus `k(x, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryKernelVector {
    pub vec: Vec<f64>,
    pub self_similarity: f64,
}

pub fn query_vector(
    train: &ClassPartitionedDataset,
    x: &[f64],
    kernel: Kernel,
) -> Result<QueryKernelVector> {
    if x.len() != train.q() {
        return Err(Error::DimensionMismatch {
            expected: train.q(),
            found: x.len(),
        });
    }
    Ok(QueryKernelVector {
        vec: (0..train.len())
            .map(|i| kernel.eval(train.column(i), x))
            .collect(),
        self_similarity: kernel.eval(x, x),
    })
}

/// Solves the discriminant system with `K` as design and `k(·, x)` as target.
pub fn ksolve(
    gram: &KernelGram,
    kvec: &QueryKernelVector,
    hp: &HyperParams,
) -> Result<CoefficientSolution> {
    solver::design_solve(gram.design(), &kvec.vec, hp)
}

pub fn kobjective(
    gram: &KernelGram,
    kvec: &QueryKernelVector,
    alpha: &[f64],
    hp: &HyperParams,
) -> Result<f64> {
    solver::design_objective(gram.design(), &kvec.vec, alpha, hp)
}

pub fn kgradient(
    gram: &KernelGram,
    kvec: &QueryKernelVector,
    alpha: &[f64],
    hp: &HyperParams,
) -> Result<Vec<f64>> {
    solver::design_gradient(gram.design(), &kvec.vec, alpha, hp)
}

fn distance_from_parts(kxx: f64, kxi: f64, kii: f64, alpha: f64) -> f64 {
    (kxx - 2.0 * kxi * alpha + alpha * alpha * kii)
        .max(0.0)
        .sqrt()
}

/// `‖φ(x) − φ(x_i) α_i‖` in feature space.
pub fn kernel_distance(
    train: &ClassPartitionedDataset,
    x: &[f64],
    i: usize,
    alpha_i: f64,
    kernel: Kernel,
) -> f64 {
    let xi = train.column(i);
    distance_from_parts(
        kernel.eval(x, x),
        kernel.eval(x, xi),
        kernel.eval(xi, xi),
        alpha_i,
    )
}

/// Everything computed while classifying one query in kernel space.
#[derive(Debug, Clone)]
pub struct KldsrOutcome {
    pub stage1: CoefficientSolution,
    pub distances: Vec<f64>,
    pub selected_indices: Vec<usize>,
    pub stage2: CoefficientSolution,
    pub decision: ClassDecision,
}

/// A kernel classifier with the Gram matrix and stage-1 system prepared once.
pub struct KldsrModel<'a> {
    train: &'a ClassPartitionedDataset,
    hp: HyperParams,
    gram: KernelGram,
    stage1: DiscriminantSystem,
}

impl<'a> KldsrModel<'a> {
    /// Model for `hp.kernel`; an RBF bandwidth comes from `hp.sigma`.
    pub fn fit(train: &'a ClassPartitionedDataset, hp: &HyperParams) -> Result<Self> {
        hp.validate()?;
        let kernel = match hp.kernel {
            KernelKind::Rbf => Kernel::Rbf {
                sigma: hp.sigma.resolve(train),
            },
            KernelKind::Linear => Kernel::Linear,
        };
        Self::with_kernel(train, hp, kernel)
    }

    pub fn with_kernel(
        train: &'a ClassPartitionedDataset,
        hp: &HyperParams,
        kernel: Kernel,
    ) -> Result<Self> {
        hp.validate()?;
        let gram = build_gram_with(train, kernel);
        let kk = linalg::gram(gram.gram());
        let stage1 = DiscriminantSystem::from_gram(kk.as_ref(), train.class_ranges(), hp)?;
        Ok(Self {
            train,
            hp: *hp,
            gram,
            stage1,
        })
    }

    pub fn kernel_gram(&self) -> &KernelGram {
        &self.gram
    }

    pub fn classify_detailed(&self, x: &[f64]) -> Result<KldsrOutcome> {
        let kvec = query_vector(self.train, x, self.gram.kernel)?;
        let rhs = linalg::tmatvec(self.gram.gram(), &kvec.vec);
        let stage1 = self.stage1.solve(&rhs, linalg::sq_norm(&kvec.vec))?;
        self.finish(&kvec, stage1)
    }

    /// Classifies every column of `queries`, solving stage 1 for blocks of
    /// queries at once.
    pub fn classify_many(&self, queries: MatRef<'_, f64>) -> Result<Vec<ClassDecision>> {
        let mut out = Vec::with_capacity(queries.ncols());
        let mut start = 0;
        while start < queries.ncols() {
            let width = QUERY_BLOCK.min(queries.ncols() - start);
            let kvecs: Vec<QueryKernelVector> = (start..start + width)
                .into_par_iter()
                .map(|j| {
                    let x: Vec<f64> = queries.col(j).iter().copied().collect();
                    query_vector(self.train, &x, self.gram.kernel)
                })
                .collect::<Result<_>>()?;
            let kmat = Mat::from_fn(self.train.len(), width, |i, j| kvecs[j].vec[i]);
            let rhs: Mat<f64> = self.gram.gram().transpose() * &kmat;
            let norms: Vec<f64> = kvecs.iter().map(|k| linalg::sq_norm(&k.vec)).collect();
            let stage1 = self.stage1.solve_many(rhs.as_ref(), &norms)?;
            let decided: Vec<ClassDecision> = stage1
                .into_par_iter()
                .zip(kvecs.par_iter())
                .map(|(s1, kvec)| self.finish(kvec, s1).map(|o| o.decision))
                .collect::<Result<_>>()?;
            out.extend(decided);
            start += width;
        }
        Ok(out)
    }

    fn finish(
        &self,
        kvec: &QueryKernelVector,
        stage1: CoefficientSolution,
    ) -> Result<KldsrOutcome> {
        let k = self.gram.gram();
        let distances: Vec<f64> = (0..self.train.len())
            .map(|i| {
                distance_from_parts(
                    kvec.self_similarity,
                    kvec.vec[i],
                    k[(i, i)],
                    stage1.coeffs[i],
                )
            })
            .collect();
        let s = locality_size(self.hp.locality_fraction, self.train.len());
        let selected = smallest_indices(&distances, s);

        let labels: Vec<usize> = selected.iter().map(|&j| self.train.labels()[j]).collect();
        let ranges = ranges_from_labels(&labels, self.train.n_classes());
        let u = linalg::principal_submatrix(k, &selected);
        let uvec: Vec<f64> = selected.iter().map(|&j| kvec.vec[j]).collect();
        let uu = linalg::gram(u.as_ref());
        let system = DiscriminantSystem::from_gram(uu.as_ref(), &ranges, &self.hp)?;
        let stage2 = system.solve(&linalg::tmatvec(u.as_ref(), &uvec), linalg::sq_norm(&uvec))?;

        let scores = class_scores(u.as_ref(), &ranges, &uvec, &stage2.coeffs);
        let decision = ClassDecision::from_scores(scores)?;
        Ok(KldsrOutcome {
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
}

pub fn kclassify(
    train: &ClassPartitionedDataset,
    x: &[f64],
    hp: &HyperParams,
) -> Result<ClassDecision> {
    KldsrModel::fit(train, hp)?.classify(x)
}

pub fn kclassify_with(
    train: &ClassPartitionedDataset,
    x: &[f64],
    hp: &HyperParams,
    kernel: Kernel,
) -> Result<ClassDecision> {
    KldsrModel::with_kernel(train, hp, kernel)?.classify(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{gaussian_classes, random_dataset, random_vec, GaussianSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rbf_values() {
        assert_eq!(rbf(&[1.0, 2.0], &[1.0, 2.0], 0.5).unwrap(), 1.0);
        // ‖x − y‖² = 2 = σ
        let v = rbf(&[1.0, 1.0], &[0.0, 0.0], 2.0).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        assert!((v - 0.367879).abs() < 1e-6);
        let far = rbf(&[1e6], &[-1e6], 1.0).unwrap();
        assert!((0.0..1e-300).contains(&far));
        assert!(matches!(
            rbf(&[1.0], &[1.0, 2.0], 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(rbf(&[1.0], &[1.0], 0.0).is_err());
    }

    #[test]
    fn bandwidth_parsing() {
        assert_eq!("median".parse::<Bandwidth>().unwrap(), Bandwidth::Median);
        assert_eq!("2.5".parse::<Bandwidth>().unwrap(), Bandwidth::Fixed(2.5));
        assert!("-1".parse::<Bandwidth>().is_err());
        let v: Bandwidth = serde_json::from_str("3.0").unwrap();
        assert_eq!(v, Bandwidth::Fixed(3.0));
        let m: Bandwidth = serde_json::from_str("\"median\"").unwrap();
        assert_eq!(serde_json::to_string(&m).unwrap(), "\"median\"");
    }

    #[test]
    fn gram_matches_entrywise_rbf() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let train = random_dataset(&mut rng, 5, &[3, 3]);
        let sigma = 1.7;
        let g = build_gram(&train, sigma);
        for i in 0..6 {
            for j in 0..6 {
                let e = rbf(train.column(i), train.column(j), sigma).unwrap();
                assert!((g.gram()[(i, j)] - e).abs() < 1e-14);
            }
        }
        assert_eq!(g.class_ranges(), train.class_ranges());
    }

    #[test]
    fn gram_is_symmetric_unit_diagonal_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let train = random_dataset(&mut rng, 4, &[5, 4, 3]);
        let g = build_gram(&train, median_sq_distance(&train));
        let k = g.gram();
        let n = k.nrows();
        for i in 0..n {
            assert_eq!(k[(i, i)], 1.0);
            for j in 0..n {
                assert!((k[(i, j)] - k[(j, i)]).abs() <= 1e-12);
            }
        }
        let eig = k.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
        assert!(eig.iter().all(|&e| e >= -1e-8 * n as f64));
    }

    #[test]
    fn duplicated_column_gives_duplicated_row() {
        let x = Mat::from_fn(2, 3, |i, j| [[0.1, 0.5, 0.1], [0.3, -0.2, 0.3]][i][j]);
        let names: Vec<String> = ["a", "b", "a"].iter().map(|s| s.to_string()).collect();
        let train = ClassPartitionedDataset::from_columns(x, &names).unwrap();
        let g = build_gram(&train, 0.8);
        // grouped order: a, a, b
        for j in 0..3 {
            assert_eq!(g.gram()[(0, j)], g.gram()[(1, j)]);
        }
    }

    #[test]
    fn single_sample_gram() {
        let x = Mat::from_fn(3, 2, |i, j| (i + 2 * j) as f64);
        let train = ClassPartitionedDataset::from_columns(x, &["a".into(), "b".into()]).unwrap();
        let one = train.subset(&[0]);
        let g = build_gram(&one, 1.0);
        assert_eq!((g.gram().nrows(), g.gram()[(0, 0)]), (1, 1.0));
    }

    #[test]
    fn kernel_distance_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let train = random_dataset(&mut rng, 4, &[2, 2]);
        let x = random_vec(&mut rng, 4);
        let rbf = Kernel::Rbf { sigma: 1.3 };
        assert!((kernel_distance(&train, &x, 1, 0.0, rbf) - 1.0).abs() < 1e-15);
        assert!(kernel_distance(&train, train.column(2), 2, 1.0, rbf).abs() < 1e-7);
        for i in 0..4 {
            let a = 0.37 * i as f64 - 0.4;
            let euclid: f64 = train
                .column(i)
                .iter()
                .zip(&x)
                .map(|(v, xv)| (xv - v * a) * (xv - v * a))
                .sum::<f64>()
                .sqrt();
            assert!((kernel_distance(&train, &x, i, a, Kernel::Linear) - euclid).abs() < 1e-10);
        }
    }

    #[test]
    fn ksolve_ridge_reduction() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let train = random_dataset(&mut rng, 5, &[3, 2]);
        let x = random_vec(&mut rng, 5);
        let g = build_gram(&train, 2.0);
        let kv = query_vector(&train, &x, g.kernel()).unwrap();
        let hp = HyperParams {
            lambda: 0.2,
            eta: 0.0,
            gamma: 0.0,
            ..HyperParams::default()
        };
        let sol = ksolve(&g, &kv, &hp).unwrap();
        let kk = linalg::gram(g.gram());
        let a = Mat::from_fn(5, 5, |i, j| kk[(i, j)] + if i == j { 0.2 } else { 0.0 });
        let expect = linalg::SymmetricFactor::new(a.as_ref())
            .unwrap()
            .solve(&linalg::tmatvec(g.gram(), &kv.vec));
        for (u, v) in sol.coeffs.iter().zip(&expect) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn ksolve_is_stationary_by_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let train = random_dataset(&mut rng, 6, &[3, 4, 2]);
        let x = random_vec(&mut rng, 6);
        let g = build_gram(&train, median_sq_distance(&train));
        let kv = query_vector(&train, &x, g.kernel()).unwrap();
        let hp = HyperParams {
            lambda: 0.1,
            eta: 0.5,
            gamma: 0.3,
            ..HyperParams::default()
        };
        let sol = ksolve(&g, &kv, &hp).unwrap();
        let h = 1e-6;
        let scale = 1.0 + sol.objective.abs();
        for i in 0..sol.coeffs.len() {
            let mut p = sol.coeffs.clone();
            let mut m = sol.coeffs.clone();
            p[i] += h;
            m[i] -= h;
            let fd = (kobjective(&g, &kv, &p, &hp).unwrap()
                - kobjective(&g, &kv, &m, &hp).unwrap())
                / (2.0 * h);
            assert!(fd.abs() <= 1e-6 * scale, "fd {fd}");
        }
        let grad = kgradient(&g, &kv, &sol.coeffs, &hp).unwrap();
        assert!(grad.iter().all(|v| v.abs() <= 1e-8 * scale));
    }

    #[test]
    fn separated_blobs_are_classified_perfectly() {
        let spec = GaussianSpec {
            classes: 2,
            dim: 16,
            per_class: 40,
            separation: 10.0,
            noise: 1.0,
        };
        let ds = gaussian_classes(&spec, 7).unwrap();
        let (train, test) = crate::dataset::draw_split(
            &ds,
            &crate::dataset::SplitSpec {
                per_class_train: 20,
                seed: 1,
                trials: 1,
            },
        )
        .unwrap();
        let model = KldsrModel::fit(&train, &HyperParams::default()).unwrap();
        for j in 0..test.len() {
            let d = model.classify(test.column(j)).unwrap();
            assert_eq!(d.predicted, test.labels()[j]);
        }
    }

    #[test]
    fn full_locality_uses_full_gram() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let train = random_dataset(&mut rng, 5, &[3, 3]);
        let x = random_vec(&mut rng, 5);
        let hp = HyperParams {
            locality_fraction: 1.0,
            ..HyperParams::default()
        };
        let model = KldsrModel::fit(&train, &hp).unwrap();
        let out = model.classify_detailed(&x).unwrap();
        assert_eq!(out.selected_indices.len(), 6);
        for (a, b) in out.stage1.coeffs.iter().zip(&out.stage2.coeffs) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn linear_kernel_two_class_between_term_is_inert() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let train = random_dataset(&mut rng, 4, &[3, 2]);
        let x = random_vec(&mut rng, 4);
        let g = build_gram_with(&train, Kernel::Linear);
        let kv = query_vector(&train, &x, Kernel::Linear).unwrap();
        let hp = HyperParams {
            lambda: 0.3,
            eta: 0.2,
            gamma: 0.4,
            ..HyperParams::default()
        };
        let kk = linalg::gram(g.gram());
        let blocks = solver::RegularizerBlocks::from_gram(kk.as_ref(), g.class_ranges());
        let zeroed = blocks.clone().with_h2(
            g.class_ranges()
                .iter()
                .map(|r| Mat::zeros(r.len(), r.len()))
                .collect(),
        );
        let rhs = linalg::tmatvec(g.gram(), &kv.vec);
        let a = DiscriminantSystem::from_blocks(kk.as_ref(), &blocks, &hp).unwrap();
        let b = DiscriminantSystem::from_blocks(kk.as_ref(), &zeroed, &hp).unwrap();
        assert_eq!(
            a.solve(&rhs, 0.0).unwrap().coeffs,
            b.solve(&rhs, 0.0).unwrap().coeffs
        );
    }

    #[test]
    fn median_heuristic() {
        let x = Mat::from_fn(1, 3, |_, j| [0.0, 1.0, 3.0][j]);
        let names: Vec<String> = ["a", "b", "b"].iter().map(|s| s.to_string()).collect();
        let train = ClassPartitionedDataset::from_columns(x, &names).unwrap();
        // pairwise squared distances 1, 9, 4
        assert_eq!(median_sq_distance(&train), 4.0);
    }
}
