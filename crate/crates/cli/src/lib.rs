//! Command-line experiment runner.
//!
//! Every run writes a JSON envelope holding the full configuration, a SHA-256
//! hash of the configuration and input file contents, the report, and the
//! wall time. The hash does not cover the wall time or the report.

pub mod acceptance;
pub mod io;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use oppenheim_core::averages::{self, Bump, McOptions};
use oppenheim_core::counterexamples::{self, BetaFamily, Variant};
use oppenheim_core::counting::{self, CountQuery, Interval};
use oppenheim_core::forms;
use oppenheim_core::lattices::{self, AlphaMode, Lattice};
use oppenheim_core::lie::{self, XiParam};
use oppenheim_core::volumetrics::{self, KSampling, KernelSpec, KernelTarget, LimitSpec, VolumeOptions};
use oppenheim_core::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_GUARD: i32 = 2;
pub const EXIT_INVALID: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("invalid input: {0}")]
    Input(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::GuardExceeded(_) | Error::ExplosionGuard { .. } | Error::NonConvergence(_)) => EXIT_GUARD,
            _ => EXIT_INVALID,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Parser, Serialize, Deserialize)]
#[command(name = "oppenheim", version, about = "Joint values of quadratic and linear forms at integer points")]
pub struct Cli {
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    pub shards: u64,
    /// Report path; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

fn parse_interval(s: &str) -> Result<Interval, String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected lo,hi, got {s:?}"))?;
    let lo: f64 = a.trim().parse().map_err(|_| format!("bad bound {a:?}"))?;
    let hi: f64 = b.trim().parse().map_err(|_| format!("bad bound {b:?}"))?;
    Interval::new(lo, hi).map_err(|e| e.to_string())
}

fn parse_target(s: &str) -> Result<KernelTarget, String> {
    let parts: Vec<f64> = s.split(',').map(|x| x.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    match parts[..] {
        [r, zeta, s] => Ok(KernelTarget { r, zeta, s }),
        _ => Err(format!("expected r,zeta,s, got {s:?}")),
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct Window {
    #[arg(long = "T")]
    pub t: f64,
    #[arg(long = "I", value_parser = parse_interval, default_value = "-1,1")]
    pub i: Interval,
    #[arg(long = "J", value_parser = parse_interval, default_value = "-1,1")]
    pub j: Interval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum Method {
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum Sampling {
    Cap,
    Haar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum Mode {
    Exact,
    Certified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum Level {
    Fast,
    Full,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
pub enum Command {
    /// Reduce a pair to its canonical form.
    Reduce {
        #[arg(long)]
        pair: PathBuf,
    },
    /// Classify a pair and scan for rational combinations.
    Classify {
        #[arg(long)]
        pair: PathBuf,
        #[arg(long, default_value_t = 24)]
        den_bound: i64,
    },
    /// Count integer points with ‖v‖ < T, q(v) ∈ I, l(v) ∈ J.
    Count {
        #[arg(long)]
        pair: PathBuf,
        #[command(flatten)]
        window: Window,
        #[arg(long)]
        witnesses: bool,
    },
    /// Counts along a list of T.
    CountScan {
        #[arg(long)]
        pair: PathBuf,
        #[arg(long = "Ts", value_delimiter = ',', required = true)]
        ts: Vec<f64>,
        #[arg(long = "I", value_parser = parse_interval, default_value = "-1,1")]
        i: Interval,
        #[arg(long = "J", value_parser = parse_interval, default_value = "-1,1")]
        j: Interval,
    },
    /// Volume of the region counted by `count`.
    Volume {
        #[arg(long)]
        pair: PathBuf,
        #[command(flatten)]
        window: Window,
        #[arg(long, value_enum, default_value_t = Method::Quadrature)]
        method: Method,
        #[arg(long, default_value_t = 2)]
        level: u32,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
    },
    /// Fit the leading volume constant along a list of T.
    Constant {
        #[arg(long)]
        pair: PathBuf,
        #[arg(long = "Ts", value_delimiter = ',', required = true)]
        ts: Vec<f64>,
        #[arg(long = "I", value_parser = parse_interval, default_value = "-1,1")]
        i: Interval,
        #[arg(long = "J", value_parser = parse_interval, default_value = "-1,1")]
        j: Interval,
        #[arg(long, default_value_t = 2)]
        level: u32,
    },
    /// Compare the fiber integral with scaled K-averages along t.
    JfVerify {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long, value_parser = parse_target)]
        target: KernelTarget,
        #[arg(long = "ts", value_delimiter = ',', required = true)]
        ts: Vec<f64>,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, value_enum, default_value_t = Sampling::Cap)]
        sampling: Sampling,
    },
    /// Compare both sides of the cone limit identity along T.
    LimitVerify {
        #[arg(long)]
        limit: PathBuf,
        #[arg(long = "Ts", value_delimiter = ',', required = true)]
        ts: Vec<f64>,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
    },
    /// Height of the lattice spanned by the columns of a matrix.
    Alpha {
        #[arg(long)]
        basis: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Exact)]
        mode: Mode,
    },
    /// Spherical average of α^δ at one time.
    AvgAlpha {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        q: usize,
        /// Identity when absent.
        #[arg(long)]
        g0: Option<PathBuf>,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
    },
    /// Spherical averages of α^δ along a grid of times, with a verdict.
    BoundedScan {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        q: usize,
        #[arg(long)]
        g0: Option<PathBuf>,
        #[arg(long)]
        delta: f64,
        #[arg(long = "ts", value_delimiter = ',', required = true)]
        ts: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
    },
    /// Spherical averages of a Siegel transform against their limit.
    EquiCheck {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        q: usize,
        #[arg(long)]
        g0: Option<PathBuf>,
        #[arg(long)]
        bump: PathBuf,
        #[arg(long = "ts", value_delimiter = ',', required = true)]
        ts: Vec<f64>,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
    },
    /// Exact bracket relations of the decomposition of sl_n.
    LieCheck {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        q: usize,
        #[arg(long, value_delimiter = ',', default_value = "0,inf,1,-1,1/3,-1/3,5")]
        xi: Vec<String>,
    },
    /// Counts and lifted witnesses for the (2,2) and (2,3) families.
    Counterexample {
        #[arg(long, default_value = "sig22")]
        variant: String,
        #[arg(long, default_value = "liouville:8")]
        beta: String,
        #[arg(long = "Ts", value_delimiter = ',', required = true)]
        ts: Vec<f64>,
        #[arg(long = "I", value_parser = parse_interval, default_value = "-1,2")]
        i: Interval,
        #[arg(long = "J", value_parser = parse_interval, default_value = "-1,1")]
        j: Interval,
    },
    /// Run the acceptance suite and print a pass/fail table.
    Acceptance {
        #[arg(long, value_enum, default_value_t = Level::Fast)]
        level: Level,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Reduce { .. } => "reduce",
            Command::Classify { .. } => "classify",
            Command::Count { .. } => "count",
            Command::CountScan { .. } => "count-scan",
            Command::Volume { .. } => "volume",
            Command::Constant { .. } => "constant",
            Command::JfVerify { .. } => "jf-verify",
            Command::LimitVerify { .. } => "limit-verify",
            Command::Alpha { .. } => "alpha",
            Command::AvgAlpha { .. } => "avg-alpha",
            Command::BoundedScan { .. } => "bounded-scan",
            Command::EquiCheck { .. } => "equi-check",
            Command::LieCheck { .. } => "lie-check",
            Command::Counterexample { .. } => "counterexample",
            Command::Acceptance { .. } => "acceptance",
        }
    }

    /// Input files whose contents enter the hash, in a fixed order.
    pub fn input_paths(&self) -> Vec<&PathBuf> {
        match self {
            Command::Reduce { pair }
            | Command::Classify { pair, .. }
            | Command::Count { pair, .. }
            | Command::CountScan { pair, .. }
            | Command::Volume { pair, .. }
            | Command::Constant { pair, .. } => vec![pair],
            Command::JfVerify { kernel, .. } => vec![kernel],
            Command::LimitVerify { limit, .. } => vec![limit],
            Command::Alpha { basis, .. } => vec![basis],
            Command::AvgAlpha { g0, .. } | Command::BoundedScan { g0, .. } => g0.iter().collect(),
            Command::EquiCheck { g0, bump, .. } => g0.iter().chain(std::iter::once(bump)).collect(),
            Command::LieCheck { .. } | Command::Counterexample { .. } | Command::Acceptance { .. } => Vec::new(),
        }
    }
}

/// The configuration embedded in every report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Config {
    pub seed: u64,
    pub shards: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub command: Command,
}

impl From<&Cli> for Config {
    fn from(c: &Cli) -> Self {
        Self { seed: c.seed, shards: c.shards, out: c.out.clone(), format: c.format, command: c.command.clone() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Envelope {
    pub command: String,
    pub config: Config,
    pub input_hash: String,
    pub report: serde_json::Value,
    /// Seconds; excluded from the hash and from determinism comparisons.
    pub wall_time: f64,
}

/// SHA-256 over the canonical configuration JSON followed by each input
/// file as `blob <len>\0<bytes>`.
pub fn input_hash(config: &Config) -> Result<String, CliError> {
    let mut h = Sha256::new();
    let canonical = serde_json::to_value(config).map_err(|e| CliError::Input(e.to_string()))?;
    h.update(canonical.to_string().as_bytes());
    for path in config.command.input_paths() {
        let bytes = io::read_bytes(path)?;
        h.update(format!("blob {}\0", bytes.len()).as_bytes());
        h.update(&bytes);
    }
    Ok(hex::encode(h.finalize()))
}

/// Re-parses an emitted envelope and checks its hash against the inputs.
pub fn validate_envelope(text: &str) -> Result<Envelope, CliError> {
    let env: Envelope = serde_json::from_str(text).map_err(|e| CliError::Input(format!("report does not parse: {e}")))?;
    let expected = input_hash(&env.config)?;
    if expected != env.input_hash {
        return Err(CliError::Input("input hash does not match the embedded configuration".into()));
    }
    Ok(env)
}

/// A report together with an optional table for CSV output.
pub struct Outcome {
    pub report: serde_json::Value,
    pub table: Option<Table>,
    /// Shown on stderr after the report is written.
    pub summary: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| CliError::Input(e.to_string());
        w.write_record(&self.header).map_err(err)?;
        for r in &self.rows {
            w.write_record(r).map_err(err)?;
        }
        w.into_inner().map_err(|e| CliError::Input(e.to_string()))
    }
}

fn json<T: Serialize>(x: &T) -> Result<serde_json::Value, CliError> {
    serde_json::to_value(x).map_err(|e| CliError::Input(e.to_string()))
}

fn g0_or_identity(path: &Option<PathBuf>, n: usize) -> Result<DMatrix<f64>, CliError> {
    match path {
        Some(p) => {
            let m = io::read_matrix(p)?;
            if m.nrows() != n {
                return Err(CliError::Input(format!("g0 is {}x{}, expected {n}x{n}", m.nrows(), m.ncols())));
            }
            Ok(m)
        }
        None => Ok(DMatrix::identity(n, n)),
    }
}

fn estimate_row(e: &oppenheim_core::stats::AverageEstimate) -> Vec<String> {
    vec![e.t.to_string(), e.mean.to_string(), e.stderr.to_string(), e.samples.to_string(), e.seed.to_string()]
}

/// Executes one subcommand and returns its report.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let seed = cli.seed;
    let shards = cli.shards as usize;
    let plain = |report| Ok(Outcome { report, table: None, summary: None });
    match &cli.command {
        Command::Reduce { pair } => plain(json(&forms::reduce_to_canonical(&io::read_pair(pair)?)?)?),
        Command::Classify { pair, den_bound } => {
            let pair = io::read_pair(pair)?;
            let ty = forms::classify_pair(&pair)?;
            let report = serde_json::json!({
                "type": ty,
                "label": ty.to_string(),
                "signature": forms::signature(&pair.q)?,
                "kernel_signature": pair.cached_signature_on_kernel,
                "rationality": forms::rationality_scan(&pair, *den_bound),
            });
            plain(report)
        }
        Command::Count { pair, window, witnesses } => {
            let q = CountQuery { pair: io::read_pair(pair)?, t: window.t, i: window.i, j: window.j, collect_witnesses: *witnesses };
            let r = counting::count_joint(&q, shards)?;
            let summary = format!("N = {} (boundary hits {})", r.n_count, r.boundary_hits);
            Ok(Outcome { report: json(&r)?, table: None, summary: Some(summary) })
        }
        Command::CountScan { pair, ts, i, j } => {
            let q = CountQuery { pair: io::read_pair(pair)?, t: ts[0], i: *i, j: *j, collect_witnesses: false };
            let rows = counting::count_scan(&q, ts, shards)?;
            let mut table = Table::new(&["T", "N", "boundary_hits"]);
            for r in &rows {
                table.push(vec![r.t.to_string(), r.n_count.to_string(), r.boundary_hits.to_string()]);
            }
            Ok(Outcome { report: json(&rows)?, table: Some(table), summary: None })
        }
        Command::Volume { pair, window, method, level, samples } => {
            let opts = match method {
                Method::Quadrature => VolumeOptions::quadrature(*level as usize),
                Method::MonteCarlo => VolumeOptions::monte_carlo(*samples, seed, shards),
            };
            let r = volumetrics::volume_joint(&io::read_pair(pair)?, window.t, window.i, window.j, &opts)?;
            let summary = format!("V = {} ± {}", r.v, r.error_estimate);
            Ok(Outcome { report: json(&r)?, table: None, summary: Some(summary) })
        }
        Command::Constant { pair, ts, i, j, level } => {
            let fit = volumetrics::estimate_c(&io::read_pair(pair)?, ts, *i, *j, &VolumeOptions::quadrature(*level as usize))?;
            let mut table = Table::new(&["T", "V", "normalized", "residual"]);
            for k in 0..fit.t_list.len() {
                table.push(vec![
                    fit.t_list[k].to_string(),
                    fit.volumes[k].v.to_string(),
                    fit.normalized[k].to_string(),
                    fit.residuals[k].to_string(),
                ]);
            }
            let summary = format!("C = {}", fit.c);
            Ok(Outcome { report: json(&fit)?, table: Some(table), summary: Some(summary) })
        }
        Command::JfVerify { kernel, target, ts, samples, sampling } => {
            let spec: KernelSpec = io::read_json(kernel)?;
            spec.validate()?;
            let sampling = match sampling {
                Sampling::Cap => KSampling::Cap,
                Sampling::Haar => KSampling::Haar,
            };
            let r = volumetrics::verify_kernel_limit(&spec, *target, ts, *samples, seed, shards, sampling)?;
            let mut table = Table::new(&["t", "k_average", "stderr", "j_f", "scaled", "gap"]);
            for row in &r.rows {
                table.push(vec![
                    row.t.to_string(),
                    row.k_average.to_string(),
                    row.stderr.to_string(),
                    row.j_f.to_string(),
                    row.scaled.to_string(),
                    row.gap.to_string(),
                ]);
            }
            let summary = format!("final gap {}", r.final_gap);
            Ok(Outcome { report: json(&r)?, table: Some(table), summary: Some(summary) })
        }
        Command::LimitVerify { limit, ts, samples } => {
            let spec: LimitSpec = io::read_json(limit)?;
            let r = volumetrics::verify_limit_integral(&spec, ts, *samples, seed, shards)?;
            let mut table = Table::new(&["T", "lhs", "rhs", "rhs_stderr", "gap"]);
            for row in &r.rows {
                table.push(vec![row.t.to_string(), row.lhs.to_string(), r.rhs.to_string(), r.rhs_stderr.to_string(), row.gap.to_string()]);
            }
            Ok(Outcome { report: json(&r)?, table: Some(table), summary: None })
        }
        Command::Alpha { basis, mode } => {
            let lat = Lattice::new(io::read_matrix(basis)?)?;
            let mode = match mode {
                Mode::Exact => AlphaMode::Exact,
                Mode::Certified => AlphaMode::Certified,
            };
            let r = lattices::alpha(&lat, mode)?;
            let summary = format!("alpha = {}", r.value);
            Ok(Outcome { report: json(&r)?, table: None, summary: Some(summary) })
        }
        Command::AvgAlpha { p, q, g0, t, delta, samples } => {
            let g0 = g0_or_identity(g0, p + q)?;
            let e = averages::spherical_average_alpha(*p, *q, &g0, *t, *delta, &McOptions::new(*samples, seed, shards))?;
            let mut table = Table::new(&["t", "mean", "stderr", "samples", "seed"]);
            table.push(estimate_row(&e));
            Ok(Outcome { report: json(&e)?, table: Some(table), summary: None })
        }
        Command::BoundedScan { p, q, g0, delta, ts, samples } => {
            let g0 = g0_or_identity(g0, p + q)?;
            let r = averages::boundedness_scan(*p, *q, &g0, *delta, ts, &McOptions::new(*samples, seed, shards))?;
            let mut table = Table::new(&["t", "mean", "stderr", "samples", "seed", "verdict"]);
            for e in &r.rows {
                let mut row = estimate_row(e);
                row.push(r.verdict.as_str().to_string());
                table.push(row);
            }
            let summary = r.verdict.as_str().to_string();
            Ok(Outcome { report: json(&r)?, table: Some(table), summary: Some(summary) })
        }
        Command::EquiCheck { p, q, g0, bump, ts, samples } => {
            let g0 = g0_or_identity(g0, p + q)?;
            let f: Bump = io::read_json(bump)?;
            let r = averages::equidistribution_check(*p, *q, &f, &g0, ts, &McOptions::new(*samples, seed, shards))?;
            let mut table = Table::new(&["t", "mean", "stderr", "samples", "seed", "prediction", "relative_gap"]);
            for row in &r.rows {
                let mut cells = estimate_row(&row.estimate);
                cells.push(r.prediction.to_string());
                cells.push(row.relative_gap.to_string());
                table.push(cells);
            }
            Ok(Outcome { report: json(&r)?, table: Some(table), summary: None })
        }
        Command::LieCheck { p, q, xi } => {
            let xs = xi
                .iter()
                .map(|s| XiParam::parse(s).ok_or_else(|| CliError::Input(format!("bad xi {s:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            let r = lie::check_table1_relations(*p, *q, &xs)?;
            let summary = format!("{} checks, all passed: {}", r.checks.len(), r.all_passed);
            Ok(Outcome { report: json(&r)?, table: None, summary: Some(summary) })
        }
        Command::Counterexample { variant, beta, ts, i, j } => {
            let variant: Variant = variant.parse()?;
            let fam = BetaFamily::parse(beta, variant)?;
            let r = counterexamples::spike_scan(&fam, ts, *i, *j, shards)?;
            let mut table = Table::new(&["T", "N", "ratio", "witness_count"]);
            for row in &r.rows {
                table.push(vec![row.t.to_string(), row.n_count.to_string(), row.ratio.to_string(), row.witnesses.count.to_string()]);
            }
            Ok(Outcome { report: json(&r)?, table: Some(table), summary: None })
        }
        Command::Acceptance { level } => {
            let results = acceptance::run_suite(*level, seed, shards);
            let text = acceptance::render(&results);
            let mut table = Table::new(&["criterion", "passed", "seconds", "detail"]);
            for r in &results {
                table.push(vec![r.id.clone(), r.passed.to_string(), format!("{:.1}", r.seconds), r.detail.clone()]);
            }
            Ok(Outcome { report: json(&results)?, table: Some(table), summary: Some(text) })
        }
    }
}

/// Runs the command, writes its artifacts and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match run_inner(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// A closed pipe on stdout is not an error.
fn write_stdout(bytes: &[u8]) -> Result<(), CliError> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(bytes).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(CliError::Io { path: PathBuf::from("<stdout>"), message: e.to_string() })
        }
        _ => Ok(()),
    }
}

fn run_inner(cli: &Cli) -> Result<i32, CliError> {
    let config = Config::from(cli);
    let hash = input_hash(&config)?;
    let start = Instant::now();
    let outcome = execute(cli)?;
    let env = Envelope {
        command: cli.command.name().to_string(),
        config,
        input_hash: hash,
        report: outcome.report,
        wall_time: start.elapsed().as_secs_f64(),
    };
    let text = serde_json::to_string_pretty(&env).map_err(|e| CliError::Input(e.to_string()))?;
    let csv = match (&outcome.table, cli.format) {
        (Some(t), Format::Csv) => Some(t.to_csv()?),
        _ => None,
    };
    match &cli.out {
        Some(path) => {
            io::write_bytes(path, text.as_bytes())?;
            if let Some(bytes) = &csv {
                io::write_bytes(&path.with_extension("csv"), bytes)?;
            }
        }
        None => {
            let bytes = match csv {
                Some(b) => b,
                None => (text + "\n").into_bytes(),
            };
            write_stdout(&bytes)?;
        }
    }
    if let Some(s) = outcome.summary {
        eprintln!("{s}");
    }
    let failed = matches!(cli.command, Command::Acceptance { .. })
        && env.report.as_array().is_some_and(|rs| rs.iter().any(|r| r["passed"] == false));
    Ok(if failed { 1 } else { EXIT_OK })
}
