//! `verify`: residuals of the stationary integral equation.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use simplex_walks::stationarity::{interior_grid, residual_grid, DensityCandidate, ResidualPoint};
use simplex_walks::{ChoiceFunction, Dirichlet, JumpLaw};

use crate::output::Artifacts;
use crate::{config_err, report_json, versioned, CliError, Outcome, Provenance, ReportFormat};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Candidate {
    Dirichlet {
        alpha: Dirichlet,
    },
    Uniform,
    /// `d = 1` only.
    Arcsine,
}

/// `n` points per axis on `[margin, 1 - margin]`, keeping those with
/// `z_0 >= margin`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub version: u32,
    pub d: usize,
    pub choice: ChoiceFunction,
    pub jump: JumpLaw,
    pub candidate: Candidate,
    /// Defaults to 99 points for `d = 1` and 50 per axis otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Unused by the deterministic quadrature; recorded for provenance.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub report_format: ReportFormat,
}

fn default_tolerance() -> f64 {
    1e-6
}

versioned!(VerifyConfig);

impl VerifyConfig {
    pub fn grid(&self) -> GridSpec {
        self.grid.unwrap_or(if self.d == 1 {
            GridSpec {
                n: 99,
                margin: 0.01,
            }
        } else {
            GridSpec {
                n: 50,
                margin: 0.05,
            }
        })
    }

    pub fn density(&self) -> DensityCandidate {
        match &self.candidate {
            Candidate::Dirichlet { alpha } => DensityCandidate::dirichlet(alpha.clone()),
            Candidate::Uniform => DensityCandidate::uniform(self.d),
            Candidate::Arcsine => DensityCandidate::arcsine(),
        }
    }
}

pub fn prepare(mut cfg: VerifyConfig, seed: Option<u64>) -> Result<VerifyConfig, CliError> {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if cfg.d == 0 {
        return Err(CliError::Config("d must be >= 1".into()));
    }
    cfg.choice.validate().map_err(config_err)?;
    if cfg.choice.dim() != cfg.d {
        return Err(CliError::Config(format!(
            "choice has dimension {}, d = {}",
            cfg.choice.dim(),
            cfg.d
        )));
    }
    cfg.jump.validate().map_err(config_err)?;
    if !cfg.jump.has_density() {
        return Err(CliError::Config("the jump law needs a density".into()));
    }
    let dim = match &cfg.candidate {
        Candidate::Dirichlet { alpha } => alpha.dim(),
        Candidate::Uniform => cfg.d,
        Candidate::Arcsine => 1,
    };
    if dim != cfg.d {
        return Err(CliError::Config(format!(
            "candidate has dimension {dim}, d = {}",
            cfg.d
        )));
    }
    let g = cfg.grid();
    if g.n == 0 || !(g.margin > 0.0 && g.margin < 0.5) {
        return Err(CliError::Config(format!("invalid grid {g:?}")));
    }
    Ok(cfg)
}

#[derive(Debug, Serialize)]
pub struct VerifyReport<'a> {
    #[serde(flatten)]
    pub provenance: Provenance<'a, VerifyConfig>,
    pub candidate: String,
    pub points: usize,
    pub flagged: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub residuals: Vec<ResidualPoint>,
}

/// Largest residual over the evaluated points and the number of flagged ones.
pub fn summarize(residuals: &[ResidualPoint]) -> (f64, usize) {
    let max = residuals
        .iter()
        .filter_map(|r| r.residual)
        .fold(0.0, f64::max);
    let flagged = residuals.iter().filter(|r| r.residual.is_none()).count();
    (max, flagged)
}

pub fn run(cfg: &VerifyConfig) -> Result<Outcome, CliError> {
    let g = cfg.grid();
    let grid = interior_grid(cfg.d, g.n, g.margin);
    if grid.is_empty() {
        return Err(CliError::Config(format!(
            "grid {g:?} has no admissible points"
        )));
    }
    let f = cfg.density();
    let residuals = residual_grid(&f, &cfg.choice, &cfg.jump, &grid);
    let (max_residual, flagged) = summarize(&residuals);
    eprintln!(
        "{} grid points, max relative residual {max_residual:.3e}, {flagged} flagged",
        grid.len()
    );
    let mut failures = Vec::new();
    if !(max_residual < cfg.tolerance) {
        failures.push(format!("max residual {max_residual} >= {}", cfg.tolerance));
    }
    if flagged > 0 {
        failures.push(format!("{flagged} grid points could not be evaluated"));
    }
    let report = VerifyReport {
        provenance: Provenance {
            command: "verify",
            seed: cfg.seed,
            config: cfg,
        },
        candidate: f.label().to_string(),
        points: grid.len(),
        flagged,
        max_residual,
        tolerance: cfg.tolerance,
        passed: failures.is_empty(),
        residuals,
    };
    let mut artifacts = Artifacts::default();
    artifacts.add("report.json", report_json(&report, cfg.report_format)?);
    Ok(Outcome {
        artifacts,
        failures,
    })
}
