//! `sheetlab` command-line driver.
//!
//! Each invocation merges defaults, an optional JSON config file and the
//! flags, runs one command into a fresh run directory and writes a
//! [`manifest::RunManifest`] next to the outputs. `replay` re-executes a
//! manifest and checks that every output is byte-identical.

// `!(x > 1.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod manifest;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use commands::{Job, Outcome};
use manifest::{file_digest, RunDir, RunManifest};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const THREADS_ENV: &str = "SHEETLAB_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] sheetlab_core::Error),

    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("replay differs from the recorded run: {}", .0.join(", "))]
    ReplayMismatch(Vec<String>),
}

impl CliError {
    /// 1 for bad inputs, 2 for numeric, coverage or reproducibility failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_input_error() => 1,
            CliError::Core(_) => 2,
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::ReplayMismatch(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sheetlab", version, about = "Fourier analysis of additive Brownian sheet graphs")]
struct Cli {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Root under which run directories are created [default: runs; for
    /// replay, the root of the replayed run].
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate Brownian paths and export them as CSV.
    Simulate(SimulateArgs),
    /// Evaluate the Fourier transform of the sheet at random frequencies.
    Transform(TransformArgs),
    /// Check the decay envelope of the one-dimensional factors.
    Decay(DecayArgs),
    /// Estimate the Fourier spectrum s*(theta) by truncated energies.
    Spectrum(SpectrumArgs),
    /// Knapp cap scaling of the extension operator.
    Knapp(KnappArgs),
    /// Exact restriction exponent thresholds.
    Exponents(ExponentsArgs),
    /// Render SVG figures from CSV tables.
    Figures(FiguresArgs),
    /// Re-run a manifest and compare its outputs byte for byte.
    Replay(ReplayArgs),
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    level: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicate: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
struct TransformArgs {
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    level: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    sample_seed: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
struct DecayArgs {
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    level: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    sample_seed: Option<u64>,
    /// Comma-separated refinement levels.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<u32>>,
}

#[derive(Debug, Args, Serialize)]
struct SpectrumArgs {
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    level: Option<u32>,
    /// Base seed for sheets and frequency samples.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of independent replicates.
    #[arg(long)]
    seeds: Option<usize>,
    /// Comma-separated theta values in (0, 1].
    #[arg(long, value_delimiter = ',')]
    theta: Option<Vec<f64>>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    radius_lo: Option<i32>,
    #[arg(long)]
    radius_hi: Option<i32>,
    #[arg(long)]
    s_step: Option<f64>,
    #[arg(long)]
    s_half_width: Option<f64>,
    #[arg(long)]
    r_lo: Option<f64>,
    /// Also run the Frostman ball-mass probe.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    frostman: Option<bool>,
    #[arg(long)]
    frostman_level: Option<u32>,
    #[arg(long)]
    frostman_centres: Option<usize>,
    #[arg(long)]
    frostman_radius_lo: Option<i32>,
    #[arg(long)]
    frostman_radius_hi: Option<i32>,
}

#[derive(Debug, Args, Serialize)]
struct KnappArgs {
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    level: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    delta_lo: Option<i32>,
    #[arg(long)]
    delta_hi: Option<i32>,
    /// Comma-separated cap centre in [0, 1]^k.
    #[arg(long, value_delimiter = ',')]
    center: Option<Vec<f64>>,
    #[arg(long)]
    nodes: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
struct ExponentsArgs {
    #[arg(long)]
    k: Option<i64>,
    #[arg(long)]
    k_max: Option<i64>,
}

#[derive(Debug, Args, Serialize)]
struct FiguresArgs {
    /// Directory with the CSV tables to plot.
    #[arg(long)]
    from: Option<PathBuf>,
    /// Comma-separated figure ids.
    #[arg(long, value_delimiter = ',')]
    figures: Option<Vec<String>>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    theta_steps: Option<usize>,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    manifest: PathBuf,
}

fn flags(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("flag structs serialize")
}

/// Caps the global worker pool. Later calls in the same process keep the
/// first pool.
fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Result of one executed job.
#[derive(Debug)]
pub struct RunRecord {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub summary: Vec<String>,
}

/// Executes `job` into a new run directory under `root` and writes its manifest.
pub fn execute(job: &Job, root: &Path, replay_of: Option<String>) -> Result<RunRecord, CliError> {
    let timestamp = chrono::Utc::now().format("%Y-%m-%dT%H:%M:%S%.3fZ").to_string();
    let config = job.config_value();
    let mut dir = RunDir::create(root, job.name(), &timestamp, &config)?;
    let Outcome { seeds, summary } = match job.execute(&mut dir) {
        Ok(o) => o,
        Err(e) => {
            // Partial outputs without a manifest would look like a finished run.
            let _ = std::fs::remove_dir_all(dir.path());
            return Err(e);
        }
    };
    let manifest = RunManifest {
        command: job.name().to_string(),
        config,
        seeds,
        version: VERSION.to_string(),
        timestamp,
        inputs: dir.inputs().clone(),
        outputs: dir.output_digests()?,
        replay_of,
    };
    manifest.write(dir.path())?;
    Ok(RunRecord { dir: dir.path().to_path_buf(), manifest, summary })
}

/// Re-runs a manifest into a fresh run directory under `root` and compares
/// every recorded output digest.
pub fn replay(manifest_path: &Path, root: Option<&Path>) -> Result<RunRecord, CliError> {
    let original = RunManifest::load(manifest_path)?;
    for (path, digest) in &original.inputs {
        let now = file_digest(Path::new(path))
            .map_err(|e| CliError::Config(format!("recorded input {path} is unavailable: {e}")))?;
        if &now != digest {
            return Err(CliError::Config(format!("recorded input {path} has changed since the run")));
        }
    }
    let job = Job::build(&original.command, None, original.config.clone())?;
    if job.config_value() != original.config {
        return Err(CliError::Config("manifest configuration does not round-trip".into()));
    }
    let default_root = manifest_path.canonicalize()?.parent().and_then(Path::parent).map(Path::to_path_buf);
    let root = root.map(Path::to_path_buf).or(default_root).unwrap_or_else(|| PathBuf::from("runs"));
    let record = execute(&job, &root, Some(manifest_path.display().to_string()))?;
    let mut diffs = Vec::new();
    for (name, digest) in &original.outputs {
        match record.manifest.outputs.get(name) {
            Some(d) if d == digest => {}
            Some(_) => diffs.push(format!("{name} differs")),
            None => diffs.push(format!("{name} missing")),
        }
    }
    for name in record.manifest.outputs.keys() {
        if !original.outputs.contains_key(name) {
            diffs.push(format!("{name} unexpected"));
        }
    }
    if !diffs.is_empty() {
        return Err(CliError::ReplayMismatch(diffs));
    }
    Ok(record)
}

fn dispatch(cli: Cli) -> Result<RunRecord, CliError> {
    let (name, flag_values) = match &cli.command {
        Command::Replay(args) => {
            return replay(&args.manifest, cli.out.as_deref());
        }
        Command::Simulate(a) => ("simulate", flags(a)),
        Command::Transform(a) => ("transform", flags(a)),
        Command::Decay(a) => ("decay", flags(a)),
        Command::Spectrum(a) => ("spectrum", flags(a)),
        Command::Knapp(a) => ("knapp", flags(a)),
        Command::Exponents(a) => ("exponents", flags(a)),
        Command::Figures(a) => ("figures", flags(a)),
    };
    let file = cli.config.as_deref().map(|p| config::load_file(p, name)).transpose()?;
    let job = Job::build(name, file, flag_values)?;
    execute(&job, cli.out.as_deref().unwrap_or(Path::new("runs")), None)
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    match dispatch(cli) {
        Ok(record) => {
            for line in &record.summary {
                println!("{line}");
            }
            if let Some(of) = &record.manifest.replay_of {
                println!("replay of {of}: {} outputs identical", record.manifest.outputs.len());
            }
            println!("run directory: {}", record.dir.display());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
