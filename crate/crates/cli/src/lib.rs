//! Command-line experiments for simplex random walks and the urn walk.
//!
//! Every subcommand reads a versioned JSON config, runs on a local thread
//! pool and writes its artifacts into the output directory. Exit codes:
//! `0` success, `1` config error (nothing written), `2` runtime error,
//! `3` a check failed under `--assert`.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub mod assumptions;
pub mod geometry;
pub mod output;
pub mod simulate;
pub mod urn;
pub mod verify;

use output::Artifacts;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "simplex-walk",
    version,
    about = "Simulate and verify random walks in the simplex"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses all cores. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Exit with status 3 when a check fails.
    #[arg(long = "assert", global = true)]
    pub assert: bool,
    /// Output directory; defaults to the config's `output_dir`, then `.`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an ensemble of walks and compare it with a target law.
    Simulate(ConfigArg),
    /// Check the stationary integral equation on a grid.
    Verify(ConfigArg),
    /// Certify the ergodicity hypotheses for a choice function and jump law.
    Assumptions(ConfigArg),
    /// Round trips, Jacobians and minorization inclusions.
    Geometry(geometry::GeometryArgs),
    /// Urn walk trajectories, limit diagnostics and coupling.
    Urn(ConfigArg),
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArg {
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
    /// Artifacts were written but at least one check failed.
    Assert(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Assert(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
            CliError::Assert(m) => write!(f, "check failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

pub fn config_err(e: impl fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

pub fn runtime_err(e: impl fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Pretty (default) or compact JSON reports.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    Pretty,
    Compact,
}

/// Fields shared by every config document.
pub trait Versioned {
    fn version(&self) -> u32;
    fn output_dir(&self) -> Option<&Path>;
    fn report_format(&self) -> ReportFormat;
}

macro_rules! versioned {
    ($t:ty) => {
        impl $crate::Versioned for $t {
            fn version(&self) -> u32 {
                self.version
            }
            fn output_dir(&self) -> Option<&std::path::Path> {
                self.output_dir.as_deref()
            }
            fn report_format(&self) -> $crate::ReportFormat {
                self.report_format
            }
        }
    };
}
pub(crate) use versioned;

/// Reads and parses a config, rejecting unknown versions.
pub fn load_config<T: DeserializeOwned + Versioned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config<T: DeserializeOwned + Versioned>(text: &str) -> Result<T, CliError> {
    let cfg: T = serde_json::from_str(text).map_err(config_err)?;
    if cfg.version() != CONFIG_VERSION {
        return Err(CliError::Config(format!(
            "unsupported config version {}, expected {CONFIG_VERSION}",
            cfg.version()
        )));
    }
    Ok(cfg)
}

/// Header embedded in every artifact.
#[derive(Debug, Serialize)]
pub struct Provenance<'a, C: Serialize> {
    pub command: &'a str,
    pub seed: u64,
    pub config: &'a C,
}

/// Outcome of a command: artifacts to write and the failed checks.
pub struct Outcome {
    pub artifacts: Artifacts,
    pub failures: Vec<String>,
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.threads)
        .build()
        .map_err(runtime_err)?;
    let g = &cli.global;
    let (outcome, dir) = match &cli.command {
        Command::Simulate(a) => {
            let cfg = simulate::prepare(load_config(&a.config)?, g.seed)?;
            let dir = out_dir(g, &cfg);
            (pool.install(|| simulate::run(&cfg))?, dir)
        }
        Command::Verify(a) => {
            let cfg = verify::prepare(load_config(&a.config)?, g.seed)?;
            let dir = out_dir(g, &cfg);
            (pool.install(|| verify::run(&cfg))?, dir)
        }
        Command::Assumptions(a) => {
            let cfg = assumptions::prepare(load_config(&a.config)?, g.seed)?;
            let dir = out_dir(g, &cfg);
            (pool.install(|| assumptions::run(&cfg))?, dir)
        }
        Command::Geometry(a) => {
            let cfg = geometry::prepare(a, g.seed)?;
            let dir = out_dir(g, &cfg);
            (pool.install(|| geometry::run(&cfg))?, dir)
        }
        Command::Urn(a) => {
            let cfg = urn::prepare(load_config(&a.config)?, g.seed)?;
            let dir = out_dir(g, &cfg);
            (pool.install(|| urn::run(&cfg))?, dir)
        }
    };
    let written = outcome.artifacts.write(&dir).map_err(runtime_err)?;
    for path in &written {
        eprintln!("wrote {}", path.display());
    }
    if outcome.failures.is_empty() {
        eprintln!("all checks passed");
        Ok(())
    } else {
        for f in &outcome.failures {
            eprintln!("FAIL {f}");
        }
        if g.assert {
            Err(CliError::Assert(outcome.failures.join("; ")))
        } else {
            Ok(())
        }
    }
}

fn out_dir<C: Versioned>(g: &GlobalArgs, cfg: &C) -> PathBuf {
    g.out
        .clone()
        .or_else(|| cfg.output_dir().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Serializes a report in the config's format.
pub fn report_json<T: Serialize>(value: &T, format: ReportFormat) -> Result<String, CliError> {
    output::to_json(value, format == ReportFormat::Pretty).map_err(runtime_err)
}
