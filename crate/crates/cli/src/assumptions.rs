//! `assumptions`: certificates for the ergodicity hypotheses.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use simplex_walks::assumptions::{
    assumption_report, search_parameters, AssumptionReport, CheckSettings,
};
use simplex_walks::geometry::check_admissible;
use simplex_walks::{ChoiceFunction, JumpLaw};

use crate::output::Artifacts;
use crate::{
    config_err, report_json, runtime_err, versioned, CliError, Outcome, Provenance, ReportFormat,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub delta: f64,
    pub s: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssumptionsConfig {
    pub version: u32,
    pub choice: ChoiceFunction,
    pub jump: JumpLaw,
    /// Fixed `(delta, s, t)`; searched over a default grid when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<Params>,
    #[serde(default)]
    pub settings: CheckSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub report_format: ReportFormat,
}

versioned!(AssumptionsConfig);

pub fn prepare(
    mut cfg: AssumptionsConfig,
    seed: Option<u64>,
) -> Result<AssumptionsConfig, CliError> {
    if let Some(s) = seed {
        cfg.settings.seed = s;
    }
    cfg.choice.validate().map_err(config_err)?;
    cfg.jump.validate().map_err(config_err)?;
    if cfg.settings.resolution == 0 {
        return Err(CliError::Config("resolution must be >= 1".into()));
    }
    if let Some(p) = cfg.params {
        check_admissible(cfg.choice.dim(), p.delta, p.s, p.t).map_err(config_err)?;
    }
    Ok(cfg)
}

#[derive(Debug, Serialize)]
pub struct Report<'a> {
    #[serde(flatten)]
    pub provenance: Provenance<'a, AssumptionsConfig>,
    pub searched: bool,
    pub report: AssumptionReport,
}

pub fn run(cfg: &AssumptionsConfig) -> Result<Outcome, CliError> {
    let report = match cfg.params {
        Some(p) => assumption_report(&cfg.choice, &cfg.jump, p.delta, p.s, p.t, &cfg.settings),
        None => search_parameters(&cfg.choice, &cfg.jump, &cfg.settings),
    }
    .map_err(runtime_err)?;
    eprintln!(
        "delta = {}, s = {}, t = {}: eta = {:.4e}, epsilon = {:.4e}, c = {:.4e}, certified = {}",
        report.delta, report.s, report.t, report.eta, report.epsilon, report.c, report.certified
    );
    for w in &report.witnesses {
        eprintln!("  {w}");
    }
    let mut failures = Vec::new();
    if !report.certified {
        failures.push(format!(
            "assumptions not certified: {}",
            report.witnesses.join("; ")
        ));
    }
    let out = Report {
        provenance: Provenance {
            command: "assumptions",
            seed: cfg.settings.seed,
            config: cfg,
        },
        searched: cfg.params.is_none(),
        report,
    };
    let mut artifacts = Artifacts::default();
    artifacts.add("report.json", report_json(&out, cfg.report_format)?);
    Ok(Outcome {
        artifacts,
        failures,
    })
}
