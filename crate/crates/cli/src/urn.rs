//! `urn`: the urn walk, its limit diagnostics and the coupled frozen walks.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use simplex_walks::distributions::arcsine_cdf;
use simplex_walks::stats::{ks_critical, ks_one_report, ks_one_sample, GofReport};
use simplex_walks::urn::{
    coupled_run, frozen_walk_ensemble, run_urn_stream, urn_checkpoints, CouplingConfig,
};
use simplex_walks::JumpLaw;

use crate::output::{csv, fmt_f64, Artifacts};
use crate::{report_json, runtime_err, versioned, CliError, Outcome, Provenance, ReportFormat};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSpec {
    pub runs: usize,
    #[serde(rename = "N0")]
    pub n0: u64,
    pub eps_band: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrozenSpec {
    /// The walk moves left iff `U <= threshold`.
    pub threshold: f64,
    pub chains: usize,
    pub steps: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_alpha() -> f64 {
    0.01
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UrnConfig {
    pub version: u32,
    pub runs: usize,
    /// Terminal time `n`.
    pub steps: u64,
    /// Earlier checkpoint for the `zeta` concentration comparison.
    #[serde(default = "default_early")]
    pub early: u64,
    #[serde(default = "default_z1")]
    pub z1: f64,
    /// Row spacing of `trajectory.csv`.
    #[serde(default = "default_record_every")]
    pub record_every: u64,
    /// Accepted KS distance between terminal `Z` and the arcsine law.
    #[serde(default = "default_ks_threshold")]
    pub ks_threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<CouplingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frozen: Option<FrozenSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub report_format: ReportFormat,
}

fn default_early() -> u64 {
    1_000
}
fn default_z1() -> f64 {
    0.5
}
fn default_record_every() -> u64 {
    100
}
fn default_ks_threshold() -> f64 {
    0.05
}

versioned!(UrnConfig);

impl UrnConfig {
    /// The coupled runs use seed `seed + 1`, the frozen ensemble `seed + 2`.
    pub fn coupling_config(&self) -> Option<CouplingConfig> {
        self.coupling.map(|c| CouplingConfig {
            n_total: self.steps,
            n0: c.n0,
            eps_band: c.eps_band,
            seed: self.seed.wrapping_add(1),
        })
    }
}

pub fn prepare(mut cfg: UrnConfig, seed: Option<u64>) -> Result<UrnConfig, CliError> {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let bad = |m: String| Err(CliError::Config(m));
    if cfg.runs == 0 {
        return bad("runs must be >= 1".into());
    }
    if !(1 <= cfg.early && cfg.early < cfg.steps) {
        return bad(format!(
            "need 1 <= early < steps, got {} and {}",
            cfg.early, cfg.steps
        ));
    }
    if !(0.0..=1.0).contains(&cfg.z1) {
        return bad(format!("z1 = {} outside [0,1]", cfg.z1));
    }
    if cfg.record_every == 0 {
        return bad("record_every must be >= 1".into());
    }
    if let Some(c) = cfg.coupling_config() {
        c.validate().map_err(crate::config_err)?;
        if cfg.coupling.is_some_and(|c| c.runs == 0) {
            return bad("coupling runs must be >= 1".into());
        }
    }
    if let Some(f) = cfg.frozen {
        if !(f.threshold > 0.0 && f.threshold < 1.0)
            || f.chains == 0
            || !(f.alpha > 0.0 && f.alpha < 1.0)
        {
            return bad(format!("invalid frozen walk settings {f:?}"));
        }
    }
    Ok(cfg)
}

#[derive(Debug, Serialize)]
pub struct LimitDiagnostics {
    pub zeta_min: f64,
    pub zeta_max: f64,
    /// Terminal `zeta` outside `[1/13, 12/13]`.
    pub zeta_out_of_range: usize,
    pub median_early: f64,
    pub median_late: f64,
    pub ks_arcsine: GofReport,
}

#[derive(Debug, Serialize)]
pub struct CouplingSummary {
    pub runs: usize,
    pub band_runs: usize,
    /// Band runs with at least one step where `Z_hat <= Z <= Z_tilde` failed.
    pub violating_runs: usize,
    pub violations: u64,
}

#[derive(Debug, Serialize)]
pub struct FrozenSummary {
    /// `Beta(1 - threshold, threshold)`.
    pub limit: JumpLaw,
    pub ks: GofReport,
}

#[derive(Debug, Serialize)]
pub struct UrnReport<'a> {
    #[serde(flatten)]
    pub provenance: Provenance<'a, UrnConfig>,
    pub limit: LimitDiagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling: Option<CouplingSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frozen: Option<FrozenSummary>,
    pub passed: bool,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn run(cfg: &UrnConfig) -> Result<Outcome, CliError> {
    let mut failures = Vec::new();
    let cp = urn_checkpoints(cfg.runs, cfg.seed, cfg.z1, &[cfg.early, cfg.steps])
        .map_err(runtime_err)?;
    let zeta: Vec<f64> = cp.iter().map(|c| c[1].zeta()).collect();
    let (lo, hi) = (1.0 / 13.0, 12.0 / 13.0);
    let out_of_range = zeta.iter().filter(|z| !(lo..=hi).contains(*z)).count();
    let median_early = median(cp.iter().map(|c| (c[0].zeta() - 0.5).abs()).collect());
    let median_late = median(cp.iter().map(|c| (c[1].zeta() - 0.5).abs()).collect());
    let z: Vec<f64> = cp.iter().map(|c| c[1].z).collect();
    let d = ks_one_sample(&z, arcsine_cdf).map_err(runtime_err)?;
    let ks = GofReport::new("ks terminal z vs arcsine", d, cfg.ks_threshold, z.len());
    eprintln!(
        "{} runs to n = {}: zeta in [{:.4}, {:.4}], median |zeta - 1/2| {:.4e} -> {:.4e}, KS vs arcsine {:.5}",
        cfg.runs,
        cfg.steps,
        zeta.iter().cloned().fold(f64::INFINITY, f64::min),
        zeta.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        median_early,
        median_late,
        ks.statistic
    );
    if out_of_range > 0 {
        failures.push(format!(
            "{out_of_range} terminal zeta outside [1/13, 12/13]"
        ));
    }
    if !(median_late < median_early) {
        failures.push(format!(
            "median |zeta - 1/2| did not shrink: {median_early} -> {median_late}"
        ));
    }
    if !ks.passed() {
        failures.push(format!(
            "KS vs arcsine {} >= {}",
            ks.statistic, ks.threshold
        ));
    }
    let limit = LimitDiagnostics {
        zeta_min: zeta.iter().cloned().fold(f64::INFINITY, f64::min),
        zeta_max: zeta.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        zeta_out_of_range: out_of_range,
        median_early,
        median_late,
        ks_arcsine: ks,
    };

    let provenance = Provenance {
        command: "urn",
        seed: cfg.seed,
        config: cfg,
    };
    let mut artifacts = Artifacts::default();
    let fmt_row = |n: u64, vals: &[f64]| {
        let mut row = vec![n.to_string()];
        row.extend(vals.iter().map(|&v| fmt_f64(v)));
        row
    };
    let base_header = ["n", "z", "L", "R", "zeta", "W"];

    let coupling = match (cfg.coupling, cfg.coupling_config()) {
        (Some(spec), Some(cc)) => {
            let runs = (0..spec.runs as u64)
                .into_par_iter()
                .map(|i| {
                    let every = if i == 0 { cfg.record_every } else { cfg.steps };
                    coupled_run(&cc, i, every, cfg.z1)
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(runtime_err)?;
            let band: Vec<_> = runs.iter().filter(|r| r.band_event).collect();
            let summary = CouplingSummary {
                runs: runs.len(),
                band_runs: band.len(),
                violating_runs: band.iter().filter(|r| r.sandwich_violations > 0).count(),
                violations: band.iter().map(|r| r.sandwich_violations).sum(),
            };
            eprintln!(
                "coupling: band event on {}/{} runs, {} sandwich violations",
                summary.band_runs, summary.runs, summary.violations
            );
            if summary.violations > 0 {
                failures.push(format!(
                    "{} sandwich violations on band runs",
                    summary.violations
                ));
            }
            let mut header: Vec<String> = base_header.iter().map(|s| s.to_string()).collect();
            header.extend(["z_tilde", "z_hat", "sandwich_ok"].map(String::from));
            let rows = runs[0].records.iter().map(|r| {
                let mut row = fmt_row(r.n, &[r.z, r.l, r.r, r.zeta, r.w, r.z_tilde, r.z_hat]);
                row.push(r.sandwich_ok.to_string());
                row
            });
            artifacts.add("trajectory.csv", csv(&provenance, &header, rows));
            Some(summary)
        }
        _ => {
            let records = run_urn_stream(cfg.steps, cfg.seed, 0, cfg.record_every, cfg.z1)
                .map_err(runtime_err)?;
            let header: Vec<String> = base_header.iter().map(|s| s.to_string()).collect();
            let rows = records
                .iter()
                .map(|r| fmt_row(r.n, &[r.z, r.l, r.r, r.zeta, r.w]));
            artifacts.add("trajectory.csv", csv(&provenance, &header, rows));
            None
        }
    };

    let frozen = match cfg.frozen {
        Some(f) => {
            let z = frozen_walk_ensemble(
                f.threshold,
                f.steps,
                f.chains,
                cfg.seed.wrapping_add(2),
                cfg.z1,
            )
            .map_err(runtime_err)?;
            let limit = JumpLaw::Beta {
                a: 1.0 - f.threshold,
                b: f.threshold,
            };
            let mut r = ks_one_report(&z, |x| limit.cdf(x), f.alpha).map_err(runtime_err)?;
            r.kind = "ks frozen walk vs Beta(1 - threshold, threshold)".into();
            debug_assert_eq!(r.threshold, ks_critical(f.chains, f.alpha));
            eprintln!(
                "frozen walk: KS {:.5} (threshold {:.5})",
                r.statistic, r.threshold
            );
            if !r.passed() {
                failures.push(format!("frozen walk KS {} >= {}", r.statistic, r.threshold));
            }
            Some(FrozenSummary { limit, ks: r })
        }
        None => None,
    };

    let report = UrnReport {
        provenance,
        limit,
        coupling,
        frozen,
        passed: failures.is_empty(),
    };
    artifacts.add("report.json", report_json(&report, cfg.report_format)?);
    Ok(Outcome {
        artifacts,
        failures,
    })
}
