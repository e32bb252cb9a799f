//! Command-line frontend: CSV ingestion, model specs, subcommand dispatch.
//!
//! Reports are JSON on stdout. Exit status is 0 on success, 1 on a domain
//! error and 2 on a usage or parse error; stderr starts with the error name.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Result, XiError};
use crate::estimator::{reorder_by_x, xi_sums};
use crate::inference::{moon_bootstrap_ci, normal_ci, MIN_BOOTSTRAP_B};
use crate::model::{Model, ModelSpec, Sample};
use crate::sim::{run_clt_experiment, DEFAULT_MC_INNER, DEFAULT_MC_OUTER};
use crate::theory::{exact_sigma, general_vstat_moments, mc_theory};
use crate::vstat::{decompose_xi, H1Kernel, H2Kernel, PairKernel};

pub const THREADS_ENV: &str = "XI_THREADS";

#[derive(Debug, Parser)]
#[command(name = "chatterjee", version, about = "Chatterjee's rank correlation and its limiting variance")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CiMethodArg {
    Plugin,
    Bootstrap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    H1,
    H2,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// ξₙ of a two-column CSV file.
    Xi {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Direct and kernel forms of the numerator and denominator of ξₙ.
    Decompose {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// μ₁, μ₂, σ components, σ² and ξ for a model.
    Theory {
        #[arg(long)]
        model: PathBuf,
        /// Force Monte Carlo even when the model has a PMF.
        #[arg(long)]
        mc: bool,
        #[arg(long, default_value_t = DEFAULT_MC_OUTER)]
        outer: usize,
        #[arg(long, default_value_t = DEFAULT_MC_INNER)]
        inner: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Confidence interval for ξ.
    Ci {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        method: CiMethodArg,
        /// Bootstrap resample size; defaults to ⌈n^(2/3)⌉.
        #[arg(long)]
        m: Option<usize>,
        /// Number of bootstrap resamples.
        #[arg(long = "B", default_value_t = 1000)]
        b: usize,
        #[arg(long, default_value_t = 0.9)]
        level: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Simulates √n(ξₙ − ξ) and compares it with the normal limit.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Histogram of the draws as CSV.
        #[arg(long)]
        hist: Option<PathBuf>,
    },
    /// Limiting mean and variance of the h₁ or lifted h₂ V-statistic.
    VstatMoments {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum)]
        kernel: KernelArg,
        #[arg(long, default_value_t = DEFAULT_MC_OUTER)]
        outer: usize,
        #[arg(long, default_value_t = DEFAULT_MC_INNER)]
        inner: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_number(field: &str, row: usize, column: usize) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| XiError::ParseError {
        row,
        column,
        message: format!("`{field}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(XiError::NonFiniteValue { row, column });
    }
    Ok(v)
}

fn is_header(record: &csv::StringRecord) -> bool {
    record.len() == 2 && record.iter().all(|f| f.trim().parse::<f64>().is_err())
}

/// Parses two numeric columns. A first line with two non-numeric fields is
/// taken as a header. Rows are numbered by file line, starting at 1.
pub fn parse_csv(text: &str) -> Result<Sample> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut pairs = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| XiError::ParseError { row, column: 0, message: e.to_string() })?;
        if idx == 0 && is_header(&record) {
            continue;
        }
        if record.len() != 2 {
            return Err(XiError::ParseError {
                row,
                column: record.len().min(2) + 1,
                message: format!("expected 2 comma-separated columns, found {}", record.len()),
            });
        }
        let x = parse_number(&record[0], row, 1)?;
        let y = parse_number(&record[1], row, 2)?;
        pairs.push((x, y));
    }
    if pairs.len() < 2 {
        return Err(XiError::TooFewRows(pairs.len()));
    }
    Sample::new(pairs)
}

pub fn ingest_csv(path: &Path) -> Result<Sample> {
    parse_csv(&fs::read_to_string(path)?)
}

pub fn load_model(path: &Path) -> Result<Model> {
    ModelSpec::parse(&fs::read_to_string(path)?)?.build()
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

fn with_seed<T: Serialize>(value: &T, seed: u64) -> Result<Value> {
    let mut v = serde_json::to_value(value)?;
    if let Value::Object(map) = &mut v {
        map.insert("seed".into(), json!(seed));
    }
    Ok(v)
}

/// Executes one subcommand and returns the report text for stdout.
pub fn execute(command: &Command) -> Result<String> {
    match command {
        Command::Xi { input, seed } => {
            let sample = ingest_csv(input)?;
            let sums = xi_sums(&reorder_by_x(&sample, *seed));
            let xi_n = sums.xi()?;
            to_json(&json!({ "xi_n": xi_n, "n": sample.len(), "seed": seed }))
        }
        Command::Decompose { input, seed } => {
            let sample = ingest_csv(input)?;
            let d = decompose_xi(&reorder_by_x(&sample, *seed))?;
            to_json(&with_seed(&d, *seed)?)
        }
        Command::Theory { model, mc, outer, inner, seed } => {
            let model = load_model(model)?;
            let report = match model.pmf() {
                Some(pmf) if !mc => exact_sigma(pmf)?,
                _ => mc_theory(&model, *outer, *inner, *seed)?,
            };
            let mut v = serde_json::to_value(&report)?;
            v["model"] = serde_json::to_value(model.descriptor())?;
            to_json(&v)
        }
        Command::Ci { input, method, m, b, level, seed } => {
            let sample = ingest_csv(input)?;
            let ci = match method {
                CiMethodArg::Plugin => normal_ci(&sample, *level, *seed)?,
                CiMethodArg::Bootstrap => {
                    if *b < MIN_BOOTSTRAP_B {
                        return Err(XiError::InvalidArgument(format!("--B must be at least {MIN_BOOTSTRAP_B}")));
                    }
                    moon_bootstrap_ci(&sample, *m, *b, *level, *seed)?
                }
            };
            to_json(&ci)
        }
        Command::Simulate { model, n, reps, seed, out, hist } => {
            let model = load_model(model)?;
            let result = run_clt_experiment(&model, *n, *reps, *seed)?;
            if let Some(path) = hist {
                result.histogram.write_csv(fs::File::create(path)?)?;
            }
            let report = to_json(&result)?;
            match out {
                Some(path) => {
                    fs::write(path, format!("{report}\n"))?;
                    to_json(&json!({
                        "out": path,
                        "ks_distance": result.ks_distance,
                        "zero_sigma": result.zero_sigma,
                        "seed": seed,
                    }))
                }
                None => Ok(report),
            }
        }
        Command::VstatMoments { model, kernel, outer, inner, seed } => {
            let model = load_model(model)?;
            let k: &dyn PairKernel = match kernel {
                KernelArg::H1 => &H1Kernel,
                KernelArg::H2 => &H2Kernel,
            };
            let moments = general_vstat_moments(k, &model, *outer, *inner, *seed)?;
            let mut v = serde_json::to_value(moments)?;
            v["kernel"] = json!(match kernel {
                KernelArg::H1 => "h1",
                KernelArg::H2 => "h2",
            });
            to_json(&v)
        }
    }
}

pub fn exit_code(err: &XiError) -> i32 {
    if err.is_usage_error() {
        2
    } else {
        1
    }
}

/// Parses `args` (including the program name), runs the command and writes
/// the report or error. Returns the process exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(stdout, "{text}") } else { write!(stderr, "UsageError: {text}") };
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(report) => {
            let _ = writeln!(stdout, "{report}");
            0
        }
        Err(e) => {
            let _ = writeln!(stderr, "{}: {e}", e.name());
            exit_code(&e)
        }
    }
}

/// Number of worker threads requested through [`THREADS_ENV`], if any.
pub fn requested_threads() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}
