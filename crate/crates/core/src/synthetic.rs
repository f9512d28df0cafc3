//! Seeded synthetic datasets for tests, the self-test and benchmarks.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::ClassPartitionedDataset;
use crate::error::{Error, Result};

/// Isotropic Gaussian classes whose means sit on distinct coordinate axes, so
/// every pair of means is `separation · noise` apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaussianSpec {
    pub classes: usize,
    pub dim: usize,
    pub per_class: usize,
    /// Distance between class means in units of `noise`.
    pub separation: f64,
    /// Per-coordinate standard deviation.
    pub noise: f64,
}

impl Default for GaussianSpec {
    fn default() -> Self {
        Self {
            classes: 2,
            dim: 64,
            per_class: 40,
            separation: 10.0,
            noise: 1.0,
        }
    }
}

pub fn gaussian_classes(spec: &GaussianSpec, seed: u64) -> Result<ClassPartitionedDataset> {
    if spec.classes < 2 {
        return Err(Error::SingleClass);
    }
    if spec.dim < spec.classes {
        return Err(Error::invalid("dim", "must be at least the class count"));
    }
    if spec.per_class == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = spec.separation * spec.noise / std::f64::consts::SQRT_2;
    let n = spec.classes * spec.per_class;
    let mut x = Mat::zeros(spec.dim, n);
    let mut names = Vec::with_capacity(n);
    for j in 0..n {
        let c = j / spec.per_class;
        for i in 0..spec.dim {
            let z: f64 = StandardNormal.sample(&mut rng);
            x[(i, j)] = spec.noise * z + if i == c { offset } else { 0.0 };
        }
        names.push(c.to_string());
    }
    ClassPartitionedDataset::from_columns(x, &names)
}

/// Standard-normal vector.
pub fn random_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Standard-normal features with `counts[c]` samples in class `c`.
pub fn random_dataset<R: Rng>(rng: &mut R, q: usize, counts: &[usize]) -> ClassPartitionedDataset {
    let names: Vec<String> = counts
        .iter()
        .enumerate()
        .flat_map(|(c, &n)| std::iter::repeat_n(c.to_string(), n))
        .collect();
    let x = Mat::from_fn(q, names.len(), |_, _| StandardNormal.sample(rng));
    ClassPartitionedDataset::from_columns(x, &names).expect("at least two non-empty classes")
}
