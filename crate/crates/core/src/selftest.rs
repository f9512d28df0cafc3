//! Built-in numerical checks run by `dsr selftest`.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::baselines::CrcModel;
use crate::dataset::ClassPartitionedDataset;
use crate::kernel::{self, KernelGram};
use crate::linalg;
use crate::solver::{self, Design, DiscriminantSystem, HyperParams, RegularizerBlocks};
use crate::synthetic::{random_dataset, random_vec};

/// Outcome of one check: the worst residual seen against its tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: &'static str,
    pub cases: usize,
    pub residual: f64,
    pub tolerance: f64,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.residual <= self.tolerance
    }
}

/// Options for [`run`]. `corrupt_gradient` perturbs every analytic gradient
/// so the gradient checks must fail.
#[derive(Debug, Clone, Copy, Default)]
pub struct SelftestOptions {
    pub corrupt_gradient: bool,
}

struct Instance {
    train: ClassPartitionedDataset,
    x: Vec<f64>,
    hp: HyperParams,
}

fn instance(rng: &mut ChaCha8Rng) -> Instance {
    let q = rng.random_range(5..=20);
    let m = rng.random_range(2..=5);
    let counts: Vec<usize> = (0..m).map(|_| rng.random_range(1..=6)).collect();
    let train = random_dataset(rng, q, &counts);
    let x = random_vec(rng, q);
    let pick = |rng: &mut ChaCha8Rng, v: &[f64]| v[rng.random_range(0..v.len())];
    let hp = HyperParams {
        lambda: pick(rng, &[0.01, 1.0]),
        eta: pick(rng, &[0.0, 0.1, 1.0]),
        gamma: pick(rng, &[0.0, 0.1, 1.0]),
        ..HyperParams::default()
    };
    Instance { train, x, hp }
}

fn gradient(design: Design<'_>, t: &[f64], a: &[f64], hp: &HyperParams, corrupt: bool) -> Vec<f64> {
    let mut g = solver::design_gradient(design, t, a, hp).expect("consistent dimensions");
    if corrupt {
        g[0] += 1e-3 * (1.0 + g[0].abs());
    }
    g
}

/// Worst relative gap between the analytic gradient and central differences.
fn finite_difference_gap(
    design: Design<'_>,
    t: &[f64],
    a: &[f64],
    hp: &HyperParams,
    corrupt: bool,
) -> f64 {
    let g = gradient(design, t, a, hp, corrupt);
    let f = |v: &[f64]| solver::design_objective(design, t, v, hp).expect("consistent dimensions");
    let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0f64;
    for i in 0..a.len() {
        let h = 1e-5 * (1.0 + a[i].abs());
        let mut p = a.to_vec();
        let mut m = a.to_vec();
        p[i] += h;
        m[i] -= h;
        let fd = (f(&p) - f(&m)) / (2.0 * h);
        worst = worst.max((fd - g[i]).abs() / scale);
    }
    worst
}

pub fn run(opts: SelftestOptions) -> Vec<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f_7e57);
    let mut reports = Vec::new();

    let mut worst = 0.0f64;
    let cases = 60;
    for _ in 0..cases {
        let inst = instance(&mut rng);
        let design = Design::of(&inst.train);
        let sol =
            solver::solve(&inst.train, &inst.x, &inst.hp).expect("λ > 0 keeps the system definite");
        let g = gradient(
            design,
            &inst.x,
            &sol.coeffs,
            &inst.hp,
            opts.corrupt_gradient,
        );
        let inf = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        worst = worst.max(inf / (1.0 + sol.objective.abs()));
    }
    reports.push(CheckReport {
        name: "stationarity",
        cases,
        residual: worst,
        tolerance: 1e-8,
    });

    let mut worst = 0.0f64;
    let cases = 25;
    for _ in 0..cases {
        let inst = instance(&mut rng);
        let alpha = random_vec(&mut rng, inst.train.len());
        worst = worst.max(finite_difference_gap(
            Design::of(&inst.train),
            &inst.x,
            &alpha,
            &inst.hp,
            opts.corrupt_gradient,
        ));
    }
    reports.push(CheckReport {
        name: "finite differences (linear)",
        cases,
        residual: worst,
        tolerance: 1e-5,
    });

    let mut worst = 0.0f64;
    for _ in 0..cases {
        let inst = instance(&mut rng);
        let gram: KernelGram =
            kernel::build_gram(&inst.train, kernel::median_sq_distance(&inst.train));
        let kv =
            kernel::query_vector(&inst.train, &inst.x, gram.kernel()).expect("matching dimension");
        let alpha = random_vec(&mut rng, inst.train.len());
        worst = worst.max(finite_difference_gap(
            gram.design(),
            &kv.vec,
            &alpha,
            &inst.hp,
            opts.corrupt_gradient,
        ));
    }
    reports.push(CheckReport {
        name: "finite differences (kernel)",
        cases,
        residual: worst,
        tolerance: 1e-5,
    });

    let mut worst = 0.0f64;
    let sizes = [1, 2, 3, 5, 10];
    for &n in &sizes {
        let x = Mat::from_fn(7, n, |_, _| rng.random_range(-1.0..1.0));
        let mut explicit = Mat::<f64>::zeros(n, n);
        for i in 0..n {
            let mut xbar = x.clone();
            xbar.col_mut(i).fill(0.0);
            explicit += xbar.transpose() * &xbar;
        }
        let closed = solver::within_class_block(linalg::gram(x.as_ref()).as_ref());
        worst = worst.max((&explicit - &closed).norm_max());
    }
    reports.push(CheckReport {
        name: "within-class block identity",
        cases: sizes.len(),
        residual: worst,
        tolerance: 1e-10,
    });

    let mut worst = 0.0f64;
    let cases = 20;
    for _ in 0..cases {
        let inst = instance(&mut rng);
        let hp = HyperParams {
            eta: 0.0,
            gamma: 0.0,
            ..inst.hp
        };
        let a = solver::solve(&inst.train, &inst.x, &hp).expect("definite system");
        let b = CrcModel::fit(&inst.train, hp.lambda)
            .and_then(|m| m.coefficients(&inst.x))
            .expect("definite system");
        for (u, v) in a.coeffs.iter().zip(&b) {
            worst = worst.max((u - v).abs());
        }
    }
    reports.push(CheckReport {
        name: "ridge reduction",
        cases,
        residual: worst,
        tolerance: 1e-10,
    });

    let mut worst = 0.0f64;
    for _ in 0..cases {
        let q = rng.random_range(5..=12);
        let counts = [rng.random_range(1..=5), rng.random_range(1..=5)];
        let train = random_dataset(&mut rng, q, &counts);
        let x = random_vec(&mut rng, q);
        let hp = HyperParams {
            lambda: 0.1,
            eta: 0.3,
            gamma: 1.0,
            ..HyperParams::default()
        };
        let gram = linalg::gram(train.features());
        let blocks = RegularizerBlocks::from_gram(gram.as_ref(), train.class_ranges());
        // arbitrary replacement between-class blocks: with M = 2 they must not matter
        let noise: Vec<Mat<f64>> = train
            .class_ranges()
            .iter()
            .map(|r| Mat::from_fn(r.len(), r.len(), |i, j| if i == j { 5.0 } else { 1.0 }))
            .collect();
        let rhs = linalg::tmatvec(train.features(), &x);
        let a = DiscriminantSystem::from_blocks(gram.as_ref(), &blocks, &hp)
            .and_then(|s| s.solve(&rhs, 0.0));
        let b = DiscriminantSystem::from_blocks(gram.as_ref(), &blocks.with_h2(noise), &hp)
            .and_then(|s| s.solve(&rhs, 0.0));
        let (a, b) = (a.expect("definite system"), b.expect("definite system"));
        for (u, v) in a.coeffs.iter().zip(&b.coeffs) {
            worst = worst.max((u - v).abs());
        }
    }
    reports.push(CheckReport {
        name: "two-class between-term inert",
        cases,
        residual: worst,
        tolerance: 0.0,
    });

    reports
}
