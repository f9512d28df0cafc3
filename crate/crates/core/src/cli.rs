//! Command-line front end.
//!
//! Every command reads an optional TOML config (`--config`) and then applies
//! command-line flags on top of it. Exit codes: 0 success, 1 runtime or
//! self-test failure, 2 invalid configuration, 3 unreadable or invalid data.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dataset::{self, normalize_columns, ClassPartitionedDataset, SplitSpec};
use crate::dictlearn::{self, CompactSpec};
use crate::error::Error;
use crate::eval::{self, Method, Protocol};
use crate::kernel::{Bandwidth, KernelKind};
use crate::selftest::{self, SelftestOptions};
use crate::solver::HyperParams;
use crate::synthetic::{gaussian_classes, GaussianSpec};

pub const MNIST_DIR_VAR: &str = "DSR_MNIST_DIR";
pub const USPS_DIR_VAR: &str = "DSR_USPS_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "dsr",
    version,
    about = "Discriminant sparse representation classifiers"
)]
pub struct Cli {
    /// Worker threads (default: all available cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify every test sample and write one JSON line per query.
    Classify(RunArgs),
    /// Run the repeated random-split protocol and report accuracy per method.
    Benchmark {
        #[command(flatten)]
        run: RunArgs,
        /// Also sweep the locality fraction, e.g. `0.1..0.8` or `0.2,0.4`.
        #[arg(long, value_name = "FRACTIONS")]
        sweep_locality: Option<String>,
        /// Where the sweep curve CSV goes (default: standard output).
        #[arg(long, value_name = "PATH")]
        sweep_output: Option<PathBuf>,
    },
    /// Accuracy as a function of the locality fraction, written as CSV.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Fractions to evaluate, e.g. `0.1..0.8` or `0.2,0.4`.
        #[arg(long, default_value = "0.1..0.8")]
        fractions: String,
    },
    /// Replace each class of the training data by learned dictionary atoms
    /// and write the result as CSV.
    Compact(RunArgs),
    /// Run the built-in numerical checks.
    Selftest {
        #[arg(long, hide = true)]
        corrupt_gradient: bool,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Data source: mnist, usps, idx, csv, libsvm or synthetic.
    #[arg(long)]
    pub format: Option<DataFormat>,
    /// Directory holding the MNIST or USPS files.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Training data file (images file for idx).
    #[arg(long, visible_alias = "train-images")]
    pub train: Option<PathBuf>,
    /// Training labels file (idx only).
    #[arg(long)]
    pub train_labels: Option<PathBuf>,
    /// Test data file (images file for idx).
    #[arg(long, visible_alias = "test-images")]
    pub test: Option<PathBuf>,
    /// Test labels file (idx only).
    #[arg(long)]
    pub test_labels: Option<PathBuf>,
    /// Name of the label column in CSV input.
    #[arg(long, visible_alias = "label-col")]
    pub label_column: Option<String>,
    /// Keep raw features instead of scaling samples to unit norm.
    #[arg(long)]
    pub no_normalize: bool,

    /// Comma-separated methods: ldsr, kldsr, crc, nsc.
    #[arg(long, alias = "method", value_delimiter = ',')]
    pub methods: Option<Vec<Method>>,
    /// Ridge weight λ (default 1).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Within-class weight η (default 0.001).
    #[arg(long)]
    pub eta: Option<f64>,
    /// Between-class weight γ (default 0.001).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Share of training samples kept for the second stage (default 0.2).
    #[arg(long)]
    pub locality_fraction: Option<f64>,
    /// RBF bandwidth: a positive number or `median`.
    #[arg(long)]
    pub sigma: Option<Bandwidth>,
    /// Kernel of the kernel classifier: rbf or linear.
    #[arg(long)]
    pub kernel: Option<KernelKind>,

    /// Training samples drawn per class; a comma-separated list runs each.
    #[arg(long, value_delimiter = ',')]
    pub per_class: Option<Vec<usize>>,
    /// Random splits per training size.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Master seed; trial t uses seed + t.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Evaluate on a seeded subset of at most this many test samples.
    #[arg(long)]
    pub test_limit: Option<usize>,

    /// Atoms per class for dictionary compaction.
    #[arg(long)]
    pub compact_atoms: Option<usize>,
    /// Code penalty τ of the compaction.
    #[arg(long)]
    pub compact_tau: Option<f64>,
    /// Alternating least-squares iterations.
    #[arg(long)]
    pub compact_iters: Option<usize>,

    /// Synthetic data: class count, dimension, samples per class, mean
    /// separation and noise level.
    #[arg(long)]
    pub synthetic_classes: Option<usize>,
    #[arg(long)]
    pub synthetic_dim: Option<usize>,
    #[arg(long)]
    pub synthetic_samples: Option<usize>,
    #[arg(long)]
    pub synthetic_separation: Option<f64>,
    #[arg(long)]
    pub synthetic_noise: Option<f64>,

    /// Output file (default: standard output).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Include wall-clock seconds in JSON output (breaks byte-identical reruns).
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Mnist,
    Usps,
    Idx,
    Csv,
    Libsvm,
    Synthetic,
}

/// Where the data comes from and how it is preprocessed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub format: Option<DataFormat>,
    pub dir: Option<PathBuf>,
    pub train: Option<PathBuf>,
    pub train_labels: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,
    pub label_column: String,
    pub normalize: bool,
    pub synthetic: GaussianSpec,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            format: None,
            dir: None,
            train: None,
            train_labels: None,
            test: None,
            test_labels: None,
            label_column: "label".into(),
            normalize: true,
            synthetic: GaussianSpec::default(),
        }
    }
}

/// Split protocol settings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    pub per_class: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub test_limit: Option<usize>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            per_class: Vec::new(),
            trials: 1,
            seed: 0,
            test_limit: None,
        }
    }
}

/// Complete run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub methods: Vec<Method>,
    pub output: Option<PathBuf>,
    pub timings: bool,
    pub data: DataConfig,
    pub hyper: HyperParams,
    pub split: SplitConfig,
    pub compact: Option<CompactSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            methods: vec![Method::Ldsr],
            output: None,
            timings: false,
            data: DataConfig::default(),
            hyper: HyperParams::default(),
            split: SplitConfig::default(),
            compact: None,
        }
    }
}

/// A command failure with its exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Run(Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Run(e) => match e {
                Error::InvalidParameter { .. } | Error::InvalidAtomCount { .. } => 2,
                Error::SingularSystem | Error::AllScoresInfinite => 1,
                _ => 3,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Run(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Config file (if any) overlaid with the flags that were given.
    pub fn resolve(args: &RunArgs) -> CliResult<Self> {
        let mut cfg = match &args.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        cfg.apply(args);
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, a: &RunArgs) {
        let d = &mut self.data;
        set(&mut d.format, a.format.map(Some));
        set(&mut d.dir, a.data_dir.clone().map(Some));
        set(&mut d.train, a.train.clone().map(Some));
        set(&mut d.train_labels, a.train_labels.clone().map(Some));
        set(&mut d.test, a.test.clone().map(Some));
        set(&mut d.test_labels, a.test_labels.clone().map(Some));
        set(&mut d.label_column, a.label_column.clone());
        if a.no_normalize {
            d.normalize = false;
        }
        let s = &mut d.synthetic;
        set(&mut s.classes, a.synthetic_classes);
        set(&mut s.dim, a.synthetic_dim);
        set(&mut s.per_class, a.synthetic_samples);
        set(&mut s.separation, a.synthetic_separation);
        set(&mut s.noise, a.synthetic_noise);

        set(&mut self.methods, a.methods.clone());
        let h = &mut self.hyper;
        set(&mut h.lambda, a.lambda);
        set(&mut h.eta, a.eta);
        set(&mut h.gamma, a.gamma);
        set(&mut h.locality_fraction, a.locality_fraction);
        set(&mut h.sigma, a.sigma);
        set(&mut h.kernel, a.kernel);

        set(&mut self.split.per_class, a.per_class.clone());
        set(&mut self.split.trials, a.trials);
        set(&mut self.split.seed, a.seed);
        set(&mut self.split.test_limit, a.test_limit.map(Some));

        if a.compact_atoms.is_some() || a.compact_tau.is_some() || a.compact_iters.is_some() {
            let mut c = self.compact.unwrap_or(CompactSpec {
                atoms: 0,
                tau: 0.0,
                iters: dictlearn::DEFAULT_ITERS,
            });
            set(&mut c.atoms, a.compact_atoms);
            set(&mut c.tau, a.compact_tau);
            set(&mut c.iters, a.compact_iters);
            self.compact = Some(c);
        }
        set(&mut self.output, a.output.clone().map(Some));
        if a.timings {
            self.timings = true;
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        self.hyper.validate()?;
        if self.methods.is_empty() {
            return Err(CliError::Config(
                "`methods` must name at least one method".into(),
            ));
        }
        if self.split.trials == 0 {
            return Err(Error::invalid("trials", "must be at least 1").into());
        }
        if self.split.per_class.contains(&0) {
            return Err(Error::invalid("per_class", "must be at least 1").into());
        }
        if self.split.test_limit == Some(0) {
            return Err(Error::invalid("test_limit", "must be at least 1").into());
        }
        if let Some(c) = &self.compact {
            if c.atoms == 0 {
                return Err(Error::invalid("compact_atoms", "must be at least 1").into());
            }
            if !(c.tau >= 0.0 && c.tau.is_finite()) {
                return Err(Error::invalid("compact_tau", "must be a finite value >= 0").into());
            }
            if c.iters == 0 {
                return Err(Error::invalid("compact_iters", "must be at least 1").into());
            }
        }
        let s = &self.data.synthetic;
        if !(s.noise > 0.0 && s.separation >= 0.0) {
            return Err(
                Error::invalid("synthetic", "noise must be > 0 and separation >= 0").into(),
            );
        }
        if self.data.format.is_none() {
            return Err(CliError::Config(
                "no data source: set --format or `data.format`".into(),
            ));
        }
        Ok(())
    }

    fn split_spec(&self, per_class: usize) -> SplitSpec {
        SplitSpec {
            per_class_train: per_class,
            seed: self.split.seed,
            trials: self.split.trials,
        }
    }

    fn first_per_class(&self) -> CliResult<usize> {
        self.split
            .per_class
            .first()
            .copied()
            .ok_or_else(|| CliError::Config("`per_class` is required for this command".into()))
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Training pool and optional separate test set.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub pool: ClassPartitionedDataset,
    pub test: Option<ClassPartitionedDataset>,
}

fn required<'a>(field: &str, v: &'a Option<PathBuf>) -> CliResult<&'a Path> {
    v.as_deref()
        .ok_or_else(|| CliError::Config(format!("`{field}` is required for this data format")))
}

fn data_dir(cfg: &DataConfig, var: &str, default: &str) -> PathBuf {
    cfg.dir
        .clone()
        .or_else(|| std::env::var_os(var).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(default))
}

pub fn load_data(cfg: &DataConfig, seed: u64) -> CliResult<LoadedData> {
    let format = cfg
        .format
        .ok_or_else(|| CliError::Config("no data source".into()))?;
    let (pool, test) = match format {
        DataFormat::Mnist => {
            let dir = data_dir(cfg, MNIST_DIR_VAR, "data/mnist");
            let pool = dataset::load_idx(
                &dir.join("train-images-idx3-ubyte"),
                &dir.join("train-labels-idx1-ubyte"),
            )?;
            let test = dataset::load_idx(
                &dir.join("t10k-images-idx3-ubyte"),
                &dir.join("t10k-labels-idx1-ubyte"),
            )?;
            (pool, Some(test))
        }
        DataFormat::Usps => {
            let dir = data_dir(cfg, USPS_DIR_VAR, "data/usps");
            let pool = dataset::load_libsvm(&dir.join("usps"), 256)?;
            let test = dataset::load_libsvm(&dir.join("usps.t"), 256)?;
            (pool, Some(test))
        }
        DataFormat::Idx => {
            let pool = dataset::load_idx(
                required("train", &cfg.train)?,
                required("train_labels", &cfg.train_labels)?,
            )?;
            let test = match &cfg.test {
                Some(t) => Some(dataset::load_idx(
                    t,
                    required("test_labels", &cfg.test_labels)?,
                )?),
                None => None,
            };
            (pool, test)
        }
        DataFormat::Csv => {
            let pool = dataset::load_csv(required("train", &cfg.train)?, &cfg.label_column)?;
            let test = match &cfg.test {
                Some(t) => Some(dataset::load_csv(t, &cfg.label_column)?),
                None => None,
            };
            (pool, test)
        }
        DataFormat::Libsvm => {
            let pool = dataset::load_libsvm(required("train", &cfg.train)?, 0)?;
            let test = match &cfg.test {
                Some(t) => Some(dataset::load_libsvm(t, pool.q())?),
                None => None,
            };
            (pool, test)
        }
        DataFormat::Synthetic => (gaussian_classes(&cfg.synthetic, seed)?, None),
    };
    if let Some(t) = &test {
        if t.q() != pool.q() {
            return Err(Error::DimensionMismatch {
                expected: pool.q(),
                found: t.q(),
            }
            .into());
        }
    }
    if cfg.normalize {
        let pool = normalize_columns(&pool)?;
        let test = test.as_ref().map(normalize_columns).transpose()?;
        Ok(LoadedData { pool, test })
    } else {
        Ok(LoadedData { pool, test })
    }
}

/// Parses `a..b` (step 0.1) or a comma-separated list of fractions.
pub fn parse_fractions(text: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Config(format!("invalid fraction list `{text}`"));
    let values: Vec<f64> = if let Some((a, b)) = text.split_once("..") {
        let a: f64 = a.trim().parse().map_err(|_| bad())?;
        let b: f64 = b.trim().parse().map_err(|_| bad())?;
        let (lo, hi) = ((a * 10.0).round() as i64, (b * 10.0).round() as i64);
        if lo > hi {
            return Err(bad());
        }
        (lo..=hi).map(|k| k as f64 / 10.0).collect()
    } else {
        text.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<CliResult<_>>()?
    };
    if values.is_empty() || values.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
        return Err(CliError::Config(format!(
            "fractions must lie in (0, 1], got `{text}`"
        )));
    }
    Ok(values)
}

/// Writes `bytes` to the output path, or standard output when there is none.
fn emit(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| Error::io(p, e).into()),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| Error::io("<stdout>", e).into())
        }
    }
}

fn protocol<'a>(cfg: &RunConfig, data: &'a LoadedData) -> Protocol<'a> {
    Protocol {
        pool: &data.pool,
        test: data.test.as_ref(),
        test_limit: cfg.split.test_limit,
        compact: cfg.compact,
    }
}

pub fn cmd_classify(cfg: &RunConfig) -> CliResult<()> {
    let [method] = cfg.methods[..] else {
        return Err(CliError::Config("classify takes exactly one method".into()));
    };
    let data = load_data(&cfg.data, cfg.split.seed)?;
    let (train, queries) = match cfg.split.per_class.first() {
        Some(&n) => protocol(cfg, &data).trial(&cfg.split_spec(n), 0)?,
        None => {
            let test = data.test.clone().ok_or_else(|| {
                CliError::Config(
                    "classify needs a test set or `per_class` to hold samples out".into(),
                )
            })?;
            let train = match &cfg.compact {
                Some(c) => {
                    dictlearn::compact_dataset(&data.pool, c.atoms, c.tau, c.iters, cfg.split.seed)?
                }
                None => data.pool.clone(),
            };
            (train, test)
        }
    };
    let model = method.fit(&train, &cfg.hyper)?;
    let decisions = model.classify_many(queries.features())?;
    // report in input order
    let mut order: Vec<usize> = (0..queries.len()).collect();
    order.sort_by_key(|&j| queries.source_index()[j]);
    let mut out = String::new();
    for j in order {
        let d = &decisions[j];
        let scores: serde_json::Map<String, serde_json::Value> = train
            .class_names()
            .iter()
            .zip(&d.scores)
            .map(|(name, &s)| (name.clone(), json!(s)))
            .collect();
        let line = json!({
            "query": queries.source_index()[j],
            "label": queries.class_names()[queries.labels()[j]],
            "predicted": train.class_names()[d.predicted],
            "scores": scores,
        });
        out.push_str(&line.to_string());
        out.push('\n');
    }
    emit(cfg.output.as_deref(), out.as_bytes())
}

pub fn cmd_benchmark(
    cfg: &RunConfig,
    sweep: Option<&str>,
    sweep_output: Option<&Path>,
) -> CliResult<()> {
    if cfg.split.per_class.is_empty() {
        return Err(CliError::Config("benchmark needs `per_class`".into()));
    }
    let fractions = sweep.map(parse_fractions).transpose()?;
    let data = load_data(&cfg.data, cfg.split.seed)?;
    let proto = protocol(cfg, &data);
    let mut rows = Vec::new();
    for &n in &cfg.split.per_class {
        rows.extend(eval::run_protocol(
            &proto,
            &cfg.split_spec(n),
            &cfg.methods,
            &cfg.hyper,
        )?);
    }
    let table = eval::render_table(&rows);
    if !cfg.timings {
        rows.iter_mut().for_each(|r| r.seconds = None);
    }
    let mut json = serde_json::to_string_pretty(&rows).expect("rows serialize");
    json.push('\n');
    match &cfg.output {
        Some(p) => {
            emit(Some(p), json.as_bytes())?;
            print!("{table}");
        }
        None => {
            emit(None, json.as_bytes())?;
            eprint!("{table}");
        }
    }
    if let Some(fr) = fractions {
        let methods = sweep_methods(&cfg.methods);
        let points = eval::sweep_locality(
            &proto,
            &cfg.split_spec(cfg.split.per_class[0]),
            &fr,
            &methods,
            &cfg.hyper,
        )?;
        write_sweep(&points, &methods, sweep_output)?;
    }
    Ok(())
}

fn sweep_methods(methods: &[Method]) -> Vec<Method> {
    let local: Vec<Method> = methods
        .iter()
        .copied()
        .filter(|m| matches!(m, Method::Ldsr | Method::Kldsr))
        .collect();
    if local.is_empty() {
        vec![Method::Ldsr, Method::Kldsr]
    } else {
        local
    }
}

fn write_sweep(
    points: &[eval::SweepPoint],
    methods: &[Method],
    path: Option<&Path>,
) -> CliResult<()> {
    let mut csv = Vec::new();
    eval::write_sweep_csv(points, &mut csv).map_err(|e| Error::io("<sweep>", e))?;
    emit(path, &csv)?;
    for &m in methods {
        if let Some(best) = eval::best_fraction(points, m) {
            eprintln!("{m}: best locality fraction {best}");
        }
    }
    Ok(())
}

pub fn cmd_sweep(cfg: &RunConfig, fractions: &str) -> CliResult<()> {
    let fr = parse_fractions(fractions)?;
    let n = cfg.first_per_class()?;
    let data = load_data(&cfg.data, cfg.split.seed)?;
    let methods = sweep_methods(&cfg.methods);
    let points = eval::sweep_locality(
        &protocol(cfg, &data),
        &cfg.split_spec(n),
        &fr,
        &methods,
        &cfg.hyper,
    )?;
    write_sweep(&points, &methods, cfg.output.as_deref())
}

pub fn cmd_compact(cfg: &RunConfig) -> CliResult<()> {
    let c = cfg
        .compact
        .ok_or_else(|| CliError::Config("compact needs `--compact-atoms`".into()))?;
    let out = cfg
        .output
        .as_deref()
        .ok_or_else(|| CliError::Config("compact needs `--output`".into()))?;
    let data = load_data(&cfg.data, cfg.split.seed)?;
    let compacted =
        dictlearn::compact_dataset(&data.pool, c.atoms, c.tau, c.iters, cfg.split.seed)?;
    compacted.write_csv(out, &cfg.data.label_column)?;
    Ok(())
}

/// Runs the self-test and prints one line per check. Returns whether all
/// checks passed.
pub fn cmd_selftest(opts: SelftestOptions) -> bool {
    let reports = selftest::run(opts);
    for r in &reports {
        println!(
            "{:<4} {:<32} cases={:<3} residual={:.3e} tolerance={:.1e}",
            if r.passed() { "ok" } else { "FAIL" },
            r.name,
            r.cases,
            r.residual,
            r.tolerance
        );
    }
    reports.iter().all(|r| r.passed())
}

fn configure_threads(threads: Option<usize>) -> CliResult<()> {
    // Dense kernels run sequentially so results do not depend on the thread
    // count; parallelism comes from classifying queries concurrently.
    faer::set_global_parallelism(faer::Par::Seq);
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::invalid("threads", "must be at least 1").into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<bool> {
    configure_threads(cli.threads)?;
    match cli.command {
        Command::Classify(a) => cmd_classify(&RunConfig::resolve(&a)?)?,
        Command::Benchmark {
            run,
            sweep_locality,
            sweep_output,
        } => cmd_benchmark(
            &RunConfig::resolve(&run)?,
            sweep_locality.as_deref(),
            sweep_output.as_deref(),
        )?,
        Command::Sweep { run, fractions } => cmd_sweep(&RunConfig::resolve(&run)?, &fractions)?,
        Command::Compact(a) => cmd_compact(&RunConfig::resolve(&a)?)?,
        Command::Selftest { corrupt_gradient } => {
            return Ok(cmd_selftest(SelftestOptions { corrupt_gradient }))
        }
    }
    Ok(true)
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("dsr: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
