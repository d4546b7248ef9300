//! `geometry`: round trips, Jacobian determinants and the minorization
//! inclusions.

use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use simplex_walks::assumptions::{verify_lemma1, verify_lemma1_shrunk, Lemma1Report};
use simplex_walks::geometry::{
    check_admissible, jacobian_check, round_trip_check, JacobianCheck, RoundTripCheck,
};
use simplex_walks::RngStream;

use crate::output::Artifacts;
use crate::{
    config_err, load_config, report_json, runtime_err, versioned, CliError, Outcome, Provenance,
    ReportFormat,
};

#[derive(Debug, Clone, Args)]
pub struct GeometryArgs {
    /// Optional config; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Restricts every check to this dimension.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    /// Sampled pairs per inclusion.
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub version: u32,
    #[serde(default = "default_rt_dims")]
    pub round_trip_dims: Vec<usize>,
    #[serde(default = "default_count")]
    pub round_trips: usize,
    #[serde(default = "default_count")]
    pub jacobian_points: usize,
    #[serde(default = "default_lemma_dims")]
    pub lemma_dims: Vec<usize>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_s")]
    pub s: f64,
    #[serde(default = "default_t")]
    pub t: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Lowering of the target boxes in the control run, which must fail.
    #[serde(default = "default_shrink")]
    pub shrink: f64,
    #[serde(default = "default_rt_tol")]
    pub round_trip_tolerance: f64,
    #[serde(default = "default_fd_tol")]
    pub jacobian_tolerance: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub report_format: ReportFormat,
}

fn default_rt_dims() -> Vec<usize> {
    vec![1, 2, 3, 5]
}
fn default_count() -> usize {
    10_000
}
fn default_lemma_dims() -> Vec<usize> {
    vec![1, 2, 3]
}
fn default_delta() -> f64 {
    0.005
}
fn default_s() -> f64 {
    0.3
}
fn default_t() -> f64 {
    0.6
}
fn default_samples() -> usize {
    100_000
}
fn default_shrink() -> f64 {
    0.1
}
fn default_rt_tol() -> f64 {
    1e-12
}
fn default_fd_tol() -> f64 {
    1e-6
}

versioned!(GeometryConfig);

impl Default for GeometryConfig {
    fn default() -> Self {
        serde_json::from_str(r#"{"version": 1}"#).expect("defaults parse")
    }
}

pub fn prepare(args: &GeometryArgs, seed: Option<u64>) -> Result<GeometryConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => load_config(path)?,
        None => GeometryConfig::default(),
    };
    if let Some(d) = args.d {
        cfg.round_trip_dims = vec![d];
        cfg.lemma_dims = vec![d];
    }
    if let Some(v) = args.delta {
        cfg.delta = v;
    }
    if let Some(v) = args.s {
        cfg.s = v;
    }
    if let Some(v) = args.t {
        cfg.t = v;
    }
    if let Some(v) = args.samples {
        cfg.samples = v;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if cfg
        .round_trip_dims
        .iter()
        .chain(&cfg.lemma_dims)
        .any(|&d| d == 0)
    {
        return Err(CliError::Config("dimensions must be >= 1".into()));
    }
    for &d in &cfg.lemma_dims {
        check_admissible(d, cfg.delta, cfg.s, cfg.t).map_err(config_err)?;
    }
    if !(cfg.shrink > 0.0 && cfg.shrink < cfg.t) {
        return Err(CliError::Config(format!(
            "shrink = {} outside (0, t)",
            cfg.shrink
        )));
    }
    Ok(cfg)
}

#[derive(Debug, Serialize)]
pub struct GeometryReport<'a> {
    #[serde(flatten)]
    pub provenance: Provenance<'a, GeometryConfig>,
    pub round_trips: Vec<RoundTripCheck>,
    pub jacobians: Vec<JacobianCheck>,
    pub lemma1: Vec<Lemma1Report>,
    /// Runs with shrunken target boxes; each must show violations.
    pub lemma1_controls: Vec<Lemma1Report>,
    pub passed: bool,
}

/// Independent stream per (check, dimension) so that the checks run in
/// parallel without sharing generators.
fn stream(kind: u64, d: usize) -> u64 {
    (kind << 32) | d as u64
}

pub fn run(cfg: &GeometryConfig) -> Result<Outcome, CliError> {
    let seed = cfg.seed;
    let round_trips = cfg
        .round_trip_dims
        .par_iter()
        .map(|&d| round_trip_check(d, cfg.round_trips, &mut RngStream::new(seed, stream(1, d))))
        .collect::<Result<Vec<_>, _>>()
        .map_err(runtime_err)?;
    let jacobians = cfg
        .round_trip_dims
        .par_iter()
        .map(|&d| {
            jacobian_check(
                d,
                cfg.jacobian_points,
                &mut RngStream::new(seed, stream(2, d)),
            )
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(runtime_err)?;
    let lemma1 = cfg
        .lemma_dims
        .par_iter()
        .map(|&d| {
            let mut rng = RngStream::new(seed, stream(3, d));
            verify_lemma1(d, cfg.delta, cfg.s, cfg.t, cfg.samples, &mut rng)
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(runtime_err)?;
    let controls = cfg
        .lemma_dims
        .par_iter()
        .map(|&d| {
            let mut rng = RngStream::new(seed, stream(4, d));
            verify_lemma1_shrunk(
                d,
                cfg.delta,
                cfg.s,
                cfg.t,
                cfg.samples,
                cfg.shrink,
                &mut rng,
            )
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(runtime_err)?;

    let mut failures = Vec::new();
    for c in &round_trips {
        eprintln!(
            "d = {}: round trip max error {:.3e}, {} scaled-bound failures",
            c.d,
            c.max_error(),
            c.t_scaled_failures
        );
        if !c.passed(cfg.round_trip_tolerance) {
            failures.push(format!("d = {}: round trip error {}", c.d, c.max_error()));
        }
    }
    for c in &jacobians {
        eprintln!(
            "d = {}: Jacobian errors G {:.3e}, T {:.3e}",
            c.d, c.g_error, c.t_error
        );
        if !c.passed(cfg.jacobian_tolerance) {
            failures.push(format!(
                "d = {}: Jacobian errors {} / {}",
                c.d, c.g_error, c.t_error
            ));
        }
    }
    for r in &lemma1 {
        eprintln!("d = {}: {} inclusion violations", r.d, r.total_violations());
        if r.total_violations() > 0 {
            failures.push(format!(
                "d = {}: {} inclusion violations",
                r.d,
                r.total_violations()
            ));
        }
    }
    for r in &controls {
        eprintln!(
            "d = {}: {} violations with shrunken boxes",
            r.d,
            r.total_violations()
        );
        if r.total_violations() == 0 {
            failures.push(format!("d = {}: shrunken boxes were not detected", r.d));
        }
    }
    let report = GeometryReport {
        provenance: Provenance {
            command: "geometry",
            seed,
            config: cfg,
        },
        round_trips,
        jacobians,
        lemma1,
        lemma1_controls: controls,
        passed: failures.is_empty(),
    };
    let mut artifacts = Artifacts::default();
    artifacts.add("report.json", report_json(&report, cfg.report_format)?);
    Ok(Outcome {
        artifacts,
        failures,
    })
}
