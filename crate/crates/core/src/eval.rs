//! Accuracy metrics and repeated random-split protocols.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use faer::MatRef;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{CrcModel, NscModel};
use crate::dataset::{draw_split, ClassPartitionedDataset, SplitSpec};
use crate::dictlearn::{compact_dataset, CompactSpec};
use crate::error::{Error, Result};
use crate::kernel::KldsrModel;
use crate::ldsr::{ClassDecision, LdsrModel};
use crate::solver::HyperParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ldsr,
    Kldsr,
    Crc,
    Nsc,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Ldsr, Method::Kldsr, Method::Crc, Method::Nsc];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ldsr => "ldsr",
            Method::Kldsr => "kldsr",
            Method::Crc => "crc",
            Method::Nsc => "nsc",
        }
    }

    /// Prepares a classifier over `train`.
    pub fn fit<'a>(
        self,
        train: &'a ClassPartitionedDataset,
        hp: &HyperParams,
    ) -> Result<Box<dyn Classifier + 'a>> {
        Ok(match self {
            Method::Ldsr => Box::new(LdsrModel::fit(train, hp)?),
            Method::Kldsr => Box::new(KldsrModel::fit(train, hp)?),
            Method::Crc => Box::new(CrcModel::fit(train, hp.lambda)?),
            Method::Nsc => Box::new(NscModel::fit(train)?),
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown method `{s}`, expected ldsr, kldsr, crc or nsc"))
    }
}

/// A fitted classifier.
pub trait Classifier: Sync {
    fn classify(&self, x: &[f64]) -> Result<ClassDecision>;

    /// Classifies every column of `queries`, in column order.
    fn classify_many(&self, queries: MatRef<'_, f64>) -> Result<Vec<ClassDecision>> {
        (0..queries.ncols())
            .into_par_iter()
            .map(|j| {
                let x: Vec<f64> = queries.col(j).iter().copied().collect();
                self.classify(&x)
            })
            .collect()
    }
}

impl Classifier for LdsrModel<'_> {
    fn classify(&self, x: &[f64]) -> Result<ClassDecision> {
        LdsrModel::classify(self, x)
    }

    fn classify_many(&self, queries: MatRef<'_, f64>) -> Result<Vec<ClassDecision>> {
        LdsrModel::classify_many(self, queries)
    }
}

impl Classifier for KldsrModel<'_> {
    fn classify(&self, x: &[f64]) -> Result<ClassDecision> {
        KldsrModel::classify(self, x)
    }

    fn classify_many(&self, queries: MatRef<'_, f64>) -> Result<Vec<ClassDecision>> {
        KldsrModel::classify_many(self, queries)
    }
}

impl Classifier for CrcModel<'_> {
    fn classify(&self, x: &[f64]) -> Result<ClassDecision> {
        CrcModel::classify(self, x)
    }

    fn classify_many(&self, queries: MatRef<'_, f64>) -> Result<Vec<ClassDecision>> {
        CrcModel::classify_many(self, queries)
    }
}

impl Classifier for NscModel<'_> {
    fn classify(&self, x: &[f64]) -> Result<ClassDecision> {
        NscModel::classify(self, x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub method: Method,
    pub seed: u64,
    pub top1: f64,
    pub top5: f64,
    /// `confusion[true][predicted]` over the combined train/test label space.
    pub confusion: Vec<Vec<usize>>,
    pub wall_time: Duration,
}

/// Classifies every column of `test` with a classifier fitted on `train`.
///
/// Test classes absent from the training label space count as errors.
pub fn evaluate(
    method: Method,
    train: &ClassPartitionedDataset,
    test: &ClassPartitionedDataset,
    hp: &HyperParams,
) -> Result<TrialResult> {
    let start = Instant::now();
    let model = method.fit(train, hp)?;
    let mut result = evaluate_fitted(model.as_ref(), train, test)?;
    result.method = method;
    result.wall_time = start.elapsed();
    Ok(result)
}

fn evaluate_fitted(
    model: &dyn Classifier,
    train: &ClassPartitionedDataset,
    test: &ClassPartitionedDataset,
) -> Result<TrialResult> {
    if test.q() != train.q() {
        return Err(Error::DimensionMismatch {
            expected: train.q(),
            found: test.q(),
        });
    }
    let test = test.relabel(train.class_names());
    let decisions = model.classify_many(test.features())?;
    let m = test.n_classes();
    let mut confusion = vec![vec![0usize; m]; m];
    let (mut hit1, mut hit5) = (0usize, 0usize);
    for (d, &truth) in decisions.iter().zip(test.labels()) {
        confusion[truth][d.predicted] += 1;
        hit1 += usize::from(d.predicted == truth);
        hit5 += usize::from(d.in_top(truth, 5));
    }
    let n = test.len().max(1) as f64;
    Ok(TrialResult {
        method: Method::Ldsr,
        seed: 0,
        top1: hit1 as f64 / n,
        top5: hit5 as f64 / n,
        confusion,
        wall_time: Duration::ZERO,
    })
}

/// Data for a repeated-split protocol: training draws come from `pool`; the
/// test set is `test` when given, otherwise the held-out part of each draw.
#[derive(Debug, Clone, Copy)]
pub struct Protocol<'a> {
    pub pool: &'a ClassPartitionedDataset,
    pub test: Option<&'a ClassPartitionedDataset>,
    /// Evaluate on a seeded random subset of at most this many test samples.
    pub test_limit: Option<usize>,
    /// Replace each drawn training set by learned per-class dictionaries,
    /// seeded by the trial seed.
    pub compact: Option<CompactSpec>,
}

impl<'a> Protocol<'a> {
    pub fn holdout(pool: &'a ClassPartitionedDataset) -> Self {
        Self {
            pool,
            test: None,
            test_limit: None,
            compact: None,
        }
    }

    /// Seed of trial `t`: `master + t`.
    pub fn trial_seed(spec: &SplitSpec, t: usize) -> u64 {
        spec.seed.wrapping_add(t as u64)
    }

    /// The train and test sets of trial `t`.
    pub fn trial(
        &self,
        spec: &SplitSpec,
        t: usize,
    ) -> Result<(ClassPartitionedDataset, ClassPartitionedDataset)> {
        let seed = Self::trial_seed(spec, t);
        let (train, held) = draw_split(self.pool, &SplitSpec { seed, ..*spec })?;
        let test = match self.test {
            Some(t) => t.clone(),
            None => held,
        };
        let test = match self.test_limit {
            Some(limit) if limit < test.len() => {
                // separate stream so the test draw never perturbs the split
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(1);
                let mut idx = rand::seq::index::sample(&mut rng, test.len(), limit).into_vec();
                idx.sort_unstable();
                test.subset(&idx)
            }
            _ => test,
        };
        let train = match &self.compact {
            Some(c) => compact_dataset(&train, c.atoms, c.tau, c.iters, seed)?,
            None => train,
        };
        Ok((train, test))
    }
}

/// One aggregated table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolRow {
    pub method: Method,
    pub n_per_class: usize,
    pub trials: usize,
    pub mean_top1: f64,
    pub std_top1: f64,
    pub mean_top5: f64,
    /// Total wall time over all trials; `None` when timings are suppressed.
    pub seconds: Option<f64>,
}

/// Mean and population standard deviation, summed in order.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Runs every method on `spec.trials` seeded splits and aggregates top-1 and
/// top-5 accuracy per method. Rows follow the order of `methods`.
pub fn run_protocol(
    data: &Protocol<'_>,
    spec: &SplitSpec,
    methods: &[Method],
    hp: &HyperParams,
) -> Result<Vec<ProtocolRow>> {
    spec.validate()?;
    hp.validate()?;
    let mut per_method: Vec<Vec<TrialResult>> = vec![Vec::new(); methods.len()];
    for t in 0..spec.trials {
        let (train, test) = data.trial(spec, t)?;
        for (k, &m) in methods.iter().enumerate() {
            let mut r = evaluate(m, &train, &test, hp)?;
            r.seed = Protocol::trial_seed(spec, t);
            per_method[k].push(r);
        }
    }
    Ok(methods
        .iter()
        .zip(&per_method)
        .map(|(&method, results)| aggregate(method, spec, results))
        .collect())
}

fn aggregate(method: Method, spec: &SplitSpec, results: &[TrialResult]) -> ProtocolRow {
    let top1: Vec<f64> = results.iter().map(|r| r.top1).collect();
    let top5: Vec<f64> = results.iter().map(|r| r.top5).collect();
    let (mean_top1, std_top1) = mean_std(&top1);
    ProtocolRow {
        method,
        n_per_class: spec.per_class_train,
        trials: results.len(),
        mean_top1,
        std_top1,
        mean_top5: mean_std(&top5).0,
        seconds: Some(results.iter().map(|r| r.wall_time.as_secs_f64()).sum()),
    }
}

/// One point of a locality-fraction curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub method: Method,
    pub fraction: f64,
    pub mean_top1: f64,
    pub std_top1: f64,
}

/// Accuracy of each method as a function of the locality fraction. Every
/// fraction is evaluated on the same trial splits.
pub fn sweep_locality(
    data: &Protocol<'_>,
    spec: &SplitSpec,
    fractions: &[f64],
    methods: &[Method],
    hp: &HyperParams,
) -> Result<Vec<SweepPoint>> {
    spec.validate()?;
    for &f in fractions {
        HyperParams {
            locality_fraction: f,
            ..*hp
        }
        .validate()?;
    }
    let trials: Vec<_> = (0..spec.trials)
        .map(|t| data.trial(spec, t))
        .collect::<Result<_>>()?;
    let mut points = Vec::with_capacity(methods.len() * fractions.len());
    for &method in methods {
        for &fraction in fractions {
            let hp_f = HyperParams {
                locality_fraction: fraction,
                ..*hp
            };
            let accs: Vec<f64> = trials
                .iter()
                .map(|(train, test)| evaluate(method, train, test, &hp_f).map(|r| r.top1))
                .collect::<Result<_>>()?;
            let (mean_top1, std_top1) = mean_std(&accs);
            points.push(SweepPoint {
                method,
                fraction,
                mean_top1,
                std_top1,
            });
        }
    }
    Ok(points)
}

/// Fraction with the highest mean accuracy for `method` (first on ties).
pub fn best_fraction(points: &[SweepPoint], method: Method) -> Option<f64> {
    points
        .iter()
        .filter(|p| p.method == method)
        .fold(None::<&SweepPoint>, |best, p| match best {
            Some(b) if b.mean_top1 >= p.mean_top1 => Some(b),
            _ => Some(p),
        })
        .map(|p| p.fraction)
}

pub fn write_sweep_csv(points: &[SweepPoint], out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "method,fraction,mean_top1,std_top1")?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{}",
            p.method, p.fraction, p.mean_top1, p.std_top1
        )?;
    }
    Ok(())
}

pub fn save_sweep_csv(points: &[SweepPoint], path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_sweep_csv(points, &mut buf).map_err(|e| Error::io(path, e))?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Aligned plain-text rendering of protocol rows.
pub fn render_table(rows: &[ProtocolRow]) -> String {
    let header = [
        "method", "n/class", "trials", "top1 %", "std", "top5 %", "seconds",
    ];
    let body: Vec<[String; 7]> = rows
        .iter()
        .map(|r| {
            [
                r.method.to_string(),
                r.n_per_class.to_string(),
                r.trials.to_string(),
                format!("{:.2}", 100.0 * r.mean_top1),
                format!("{:.2}", 100.0 * r.std_top1),
                format!("{:.2}", 100.0 * r.mean_top5),
                r.seconds.map_or("-".into(), |s| format!("{s:.2}")),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let line = |cells: Vec<&str>, out: &mut String| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, &w))| {
                if i == 0 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect();
        out.push_str(parts.join("  ").trim_end());
        out.push('\n');
    };
    line(header.to_vec(), &mut out);
    for row in &body {
        line(row.iter().map(String::as_str).collect(), &mut out);
    }
    out
}
