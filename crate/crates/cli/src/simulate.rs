//! `simulate`: ensembles of the simplex walk.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use simplex_walks::chain::run_ensemble;
use simplex_walks::distributions::arcsine_cdf;
use simplex_walks::stats::{
    chi_square_simplex, ks_one_report, marginal, moment_compare, GofReport,
};
use simplex_walks::{ChainConfig, Dirichlet, SimplexPoint};

use crate::output::{csv, fmt_f64, Artifacts};
use crate::{
    config_err, report_json, runtime_err, versioned, CliError, Outcome, Provenance, ReportFormat,
};

/// Law the terminal ensemble is compared with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Target {
    /// Parameters `(alpha_1, ..., alpha_d, alpha_0)`.
    Dirichlet { alpha: Dirichlet },
    /// `d = 1` only.
    Arcsine,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub version: u32,
    pub chain: ChainConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Target>,
    /// Level of the per-marginal KS tests.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Largest accepted `|mean - target| / sigma` per coordinate.
    #[serde(default = "default_sigmas")]
    pub mean_sigmas: f64,
    /// Bins per axis of the informational chi-square test (`d >= 2`).
    #[serde(default = "default_bins")]
    pub chi_square_bins: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub report_format: ReportFormat,
}

fn default_alpha() -> f64 {
    0.01
}

fn default_sigmas() -> f64 {
    4.0
}

fn default_bins() -> usize {
    8
}

versioned!(SimulateConfig);

impl SimulateConfig {
    fn target_dirichlet(&self) -> Option<Dirichlet> {
        match &self.target {
            Some(Target::Dirichlet { alpha }) => Some(alpha.clone()),
            Some(Target::Arcsine) => {
                Some(Dirichlet::new(vec![0.5, 0.5]).expect("valid parameters"))
            }
            None => None,
        }
    }
}

pub fn prepare(mut cfg: SimulateConfig, seed: Option<u64>) -> Result<SimulateConfig, CliError> {
    if let Some(s) = seed {
        cfg.chain.seed = s;
    }
    cfg.chain.validate().map_err(config_err)?;
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(CliError::Config(format!(
            "alpha = {} outside (0,1)",
            cfg.alpha
        )));
    }
    if cfg.chi_square_bins == 0 {
        return Err(CliError::Config("chi_square_bins must be >= 1".into()));
    }
    match &cfg.target {
        Some(Target::Dirichlet { alpha }) if alpha.dim() != cfg.chain.d => {
            return Err(CliError::Config(format!(
                "target has dimension {}, chain has {}",
                alpha.dim(),
                cfg.chain.d
            )))
        }
        Some(Target::Arcsine) if cfg.chain.d != 1 => {
            return Err(CliError::Config("the arcsine target needs d = 1".into()))
        }
        _ => {}
    }
    Ok(cfg)
}

#[derive(Debug, Serialize)]
pub struct Comparison {
    pub ks: Vec<GofReport>,
    /// `(mean_i - target_i) / (sd_i / sqrt(n))`.
    pub mean_z: Vec<f64>,
    pub mean_threshold: f64,
    /// Largest standardized deviation over means and covariances.
    pub moment_max_z: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chi_square: Option<GofReport>,
}

#[derive(Debug, Serialize)]
pub struct Summary<'a> {
    #[serde(flatten)]
    pub provenance: Provenance<'a, SimulateConfig>,
    pub n: usize,
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
    pub passed: bool,
}

fn sample_moments(samples: &[SimplexPoint], d: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = samples.len() as f64;
    let mean: Vec<f64> = (0..d)
        .map(|i| samples.iter().map(|z| z.coords()[i]).sum::<f64>() / n)
        .collect();
    let mut cov = vec![vec![0.0; d]; d];
    for z in samples {
        let c = z.coords();
        for i in 0..d {
            for j in 0..d {
                cov[i][j] += (c[i] - mean[i]) * (c[j] - mean[j]);
            }
        }
    }
    let denom = (n - 1.0).max(1.0);
    for row in &mut cov {
        for v in row.iter_mut() {
            *v /= denom;
        }
    }
    (mean, cov)
}

/// Compares `samples` with `target`; failures are appended to `failures`.
pub fn compare(
    samples: &[SimplexPoint],
    target: &Dirichlet,
    arcsine: bool,
    cfg: &SimulateConfig,
    failures: &mut Vec<String>,
) -> Result<Comparison, CliError> {
    let d = target.dim();
    let n = samples.len();
    let (mean, cov) = sample_moments(samples, d);
    let exact = target.mean();
    let mut ks = Vec::with_capacity(d);
    let mut mean_z = Vec::with_capacity(d);
    for i in 0..d {
        let x = marginal(samples, i);
        let law = target.marginal(i + 1);
        let mut r = if arcsine {
            ks_one_report(&x, arcsine_cdf, cfg.alpha)
        } else {
            ks_one_report(&x, |v| law.cdf(v), cfg.alpha)
        }
        .map_err(runtime_err)?;
        r.kind = format!("ks z{}", i + 1);
        if !r.passed() {
            failures.push(format!(
                "{}: D = {} >= {}",
                r.kind, r.statistic, r.threshold
            ));
        }
        ks.push(r);
        let se = (cov[i][i] / n as f64).sqrt();
        let z = if se > 0.0 {
            (mean[i] - exact[i]) / se
        } else {
            0.0
        };
        if !(z.abs() < cfg.mean_sigmas) {
            failures.push(format!("mean z{} off by {z} sigma", i + 1));
        }
        mean_z.push(z);
    }
    let moment_max_z = moment_compare(samples, target).map_err(runtime_err)?;
    let chi_square = if d >= 2 {
        Some(
            chi_square_simplex(samples, target, cfg.chi_square_bins, cfg.alpha)
                .map_err(runtime_err)?,
        )
    } else {
        None
    };
    Ok(Comparison {
        ks,
        mean_z,
        mean_threshold: cfg.mean_sigmas,
        moment_max_z,
        chi_square,
    })
}

pub fn run(cfg: &SimulateConfig) -> Result<Outcome, CliError> {
    let samples = run_ensemble(&cfg.chain).map_err(runtime_err)?;
    eprintln!(
        "simulated {} chains of {} steps in dimension {}",
        samples.len(),
        cfg.chain.steps,
        cfg.chain.d
    );
    let d = cfg.chain.d;
    let mut failures = Vec::new();
    let comparison = match cfg.target_dirichlet() {
        Some(target) => {
            let arcsine = matches!(cfg.target, Some(Target::Arcsine));
            Some(compare(&samples, &target, arcsine, cfg, &mut failures)?)
        }
        None => None,
    };
    let (mean, covariance) = sample_moments(&samples, d);
    if let Some(c) = &comparison {
        for r in &c.ks {
            eprintln!(
                "{}: D = {:.6} (threshold {:.6})",
                r.kind, r.statistic, r.threshold
            );
        }
        if let Some(chi) = &c.chi_square {
            eprintln!(
                "chi-square: {:.3} (threshold {:.3})",
                chi.statistic, chi.threshold
            );
        }
    }
    let provenance = Provenance {
        command: "simulate",
        seed: cfg.chain.seed,
        config: cfg,
    };
    let header: Vec<String> = (1..=d).map(|i| format!("z{i}")).collect();
    let rows = samples
        .iter()
        .map(|z| z.coords().iter().map(|&v| fmt_f64(v)).collect());
    let mut artifacts = Artifacts::default();
    artifacts.add("samples.csv", csv(&provenance, &header, rows));
    let summary = Summary {
        provenance,
        n: samples.len(),
        mean,
        covariance,
        comparison,
        passed: failures.is_empty(),
    };
    artifacts.add("summary.json", report_json(&summary, cfg.report_format)?);
    Ok(Outcome {
        artifacts,
        failures,
    })
}
