//! Reference implementations written directly from the objective's sums,
//! sharing no code with the library's solver.

#![allow(dead_code)]

use std::ops::Range;

use dsr::solver::HyperParams;
use faer::Mat;

fn column(d: &Mat<f64>, j: usize) -> Vec<f64> {
    (0..d.nrows()).map(|i| d[(i, j)]).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// `D_c α_c` for every class.
fn class_reps(d: &Mat<f64>, ranges: &[Range<usize>], alpha: &[f64]) -> Vec<Vec<f64>> {
    ranges
        .iter()
        .map(|r| {
            let mut u = vec![0.0; d.nrows()];
            for j in r.clone() {
                for (i, v) in u.iter_mut().enumerate() {
                    *v += d[(i, j)] * alpha[j];
                }
            }
            u
        })
        .collect()
}

fn nonempty(ranges: &[Range<usize>]) -> Vec<usize> {
    (0..ranges.len())
        .filter(|&c| !ranges[c].is_empty())
        .collect()
}

/// `‖t − Dα‖² + λ‖α‖² + η Σ_c Σ_i ‖d_i α_i − D_c α_c‖² + γ Σ_{a≠b} ‖D_a α_a + D_b α_b‖²`,
/// pairs ordered, nonempty classes only.
pub fn objective(
    d: &Mat<f64>,
    ranges: &[Range<usize>],
    t: &[f64],
    alpha: &[f64],
    hp: &HyperParams,
) -> f64 {
    let u = class_reps(d, ranges, alpha);
    let fit: Vec<f64> = (0..d.nrows())
        .map(|i| t[i] - u.iter().map(|uc| uc[i]).sum::<f64>())
        .collect();
    let mut g = sq(&fit) + hp.lambda * sq(alpha);
    for (c, r) in ranges.iter().enumerate() {
        for j in r.clone() {
            let dj = column(d, j);
            let diff: Vec<f64> = (0..d.nrows()).map(|i| dj[i] * alpha[j] - u[c][i]).collect();
            g += hp.eta * sq(&diff);
        }
    }
    let active = nonempty(ranges);
    for &a in &active {
        for &b in &active {
            if a != b {
                let s: Vec<f64> = (0..d.nrows()).map(|i| u[a][i] + u[b][i]).collect();
                g += hp.gamma * sq(&s);
            }
        }
    }
    g
}

/// Term-by-term derivative of [`objective`].
pub fn gradient(
    d: &Mat<f64>,
    ranges: &[Range<usize>],
    t: &[f64],
    alpha: &[f64],
    hp: &HyperParams,
) -> Vec<f64> {
    let u = class_reps(d, ranges, alpha);
    let fit: Vec<f64> = (0..d.nrows())
        .map(|i| t[i] - u.iter().map(|uc| uc[i]).sum::<f64>())
        .collect();
    let active = nonempty(ranges);
    let mut grad = vec![0.0; alpha.len()];
    for (c, r) in ranges.iter().enumerate() {
        // Σ_i (d_i α_i − D_c α_c) over the class
        let mut rsum = vec![0.0; d.nrows()];
        for i in r.clone() {
            for (k, v) in rsum.iter_mut().enumerate() {
                *v += d[(k, i)] * alpha[i] - u[c][k];
            }
        }
        for j in r.clone() {
            let dj = column(d, j);
            let rj: Vec<f64> = (0..d.nrows()).map(|k| dj[k] * alpha[j] - u[c][k]).collect();
            let mut gj = -2.0 * dot(&dj, &fit) + 2.0 * hp.lambda * alpha[j];
            gj += hp.eta * (2.0 * dot(&dj, &rj) - 2.0 * dot(&dj, &rsum));
            for &b in &active {
                if b != c {
                    let s: Vec<f64> = (0..d.nrows()).map(|k| u[c][k] + u[b][k]).collect();
                    // the pair appears as (c, b) and (b, c)
                    gj += hp.gamma * 4.0 * dot(&dj, &s);
                }
            }
            grad[j] = gj;
        }
    }
    grad
}

/// `(DᵀD + λI)⁻¹ Dᵀt` by Gaussian elimination with partial pivoting.
pub fn ridge(d: &Mat<f64>, t: &[f64], lambda: f64) -> Vec<f64> {
    let n = d.ncols();
    let cols: Vec<Vec<f64>> = (0..n).map(|j| column(d, j)).collect();
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).map(|j| dot(&cols[i], &cols[j])).collect();
            row[i] += lambda;
            row.push(dot(&cols[i], t));
            row
        })
        .collect();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&x, &y| a[x][k].abs().total_cmp(&a[y][k].abs()))
            .unwrap();
        a.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..=n {
                a[i][j] -= f * a[k][j];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (a[i][n] - s) / a[i][i];
    }
    x
}

/// `Σ_i X̄_iᵀ X̄_i`, where `X̄_i` is `x` with column `i` zeroed.
pub fn within_class_explicit(x: &Mat<f64>) -> Mat<f64> {
    let n = x.ncols();
    let mut out = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        for a in 0..n {
            for b in 0..n {
                if a != i && b != i {
                    out[(a, b)] += dot(&column(x, a), &column(x, b));
                }
            }
        }
    }
    out
}
