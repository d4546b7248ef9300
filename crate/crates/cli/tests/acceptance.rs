//! End-to-end acceptance run. Prints one `PASS`/`FAIL` line per criterion
//! and fails if any criterion fails.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use simplex_walks::assumptions::{verify_lemma1, verify_lemma1_shrunk};
use simplex_walks::chain::run_ensemble;
use simplex_walks::distributions::arcsine_cdf;
use simplex_walks::geometry::{jacobian_check, round_trip_check};
use simplex_walks::stationarity::{
    beta_integral_identity, interior_grid, residual, residual_grid, sethuraman_onestep,
    DensityCandidate,
};
use simplex_walks::stats::{ks_one_sample, ks_two_critical, ks_two_sample, marginal};
use simplex_walks::urn::*;
use simplex_walks::{ChainConfig, ChoiceFunction, Dirichlet, JumpLaw, RngStream, SimplexPoint};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(limit: Duration, start: Instant, detail: String, ok: bool) -> Outcome {
    let elapsed = start.elapsed();
    let detail = format!(
        "{detail}; {:.1} s (limit {} s)",
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    check(ok && elapsed < limit, detail)
}

fn c1_geometry() -> Outcome {
    let start = Instant::now();
    let (mut rt, mut jac, mut ok) = (0.0f64, 0.0f64, true);
    for d in [1usize, 2, 3, 5] {
        let r = round_trip_check(d, 10_000, &mut RngStream::new(1, d as u64))
            .map_err(|e| e.to_string())?;
        let j = jacobian_check(d, 10_000, &mut RngStream::new(2, d as u64))
            .map_err(|e| e.to_string())?;
        ok &= r.passed(1e-12) && j.passed(1e-6);
        rt = rt.max(r.max_error());
        jac = jac.max(j.g_error).max(j.t_error);
    }
    within(
        Duration::from_secs(10),
        start,
        format!("max round-trip error {rt:.2e} (< 1e-12), max Jacobian error {jac:.2e} (< 1e-6)"),
        ok,
    )
}

fn c2_lemma1() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for d in [1usize, 2, 3] {
        let r = verify_lemma1(
            d,
            0.005,
            0.3,
            0.6,
            100_000,
            &mut RngStream::new(3, d as u64),
        )
        .map_err(|e| e.to_string())?;
        let shrunk = verify_lemma1_shrunk(
            d,
            0.005,
            0.3,
            0.6,
            100_000,
            0.1,
            &mut RngStream::new(4, d as u64),
        )
        .map_err(|e| e.to_string())?;
        ok &= r.part_a.violations == 0
            && r.part_b.len() == d
            && r.part_b.iter().all(|p| p.violations == 0);
        ok &= shrunk.total_violations() >= 1;
        parts.push(format!(
            "d={d}: {} violations, control {}",
            r.total_violations(),
            shrunk.total_violations()
        ));
    }
    within(Duration::from_secs(30), start, parts.join(", "), ok)
}

fn c3_stationary_equation() -> Outcome {
    let start = Instant::now();
    let max_res =
        |f: &DensityCandidate, cf: &ChoiceFunction, g: &JumpLaw, grid: &[SimplexPoint]| {
            let r = residual_grid(f, cf, g, grid);
            if r.iter().any(|p| p.residual.is_none()) {
                f64::INFINITY
            } else {
                r.iter().filter_map(|p| p.residual).fold(0.0, f64::max)
            }
        };
    let d1 = interior_grid(1, 99, 0.01);
    let d2 = interior_grid(2, 50, 0.05);
    let mut worst = 0.0f64;
    for (beta, gamma) in [(vec![0.5, 0.5], 1.0), (vec![0.3, 0.7], 2.0)] {
        let f = DensityCandidate::dirichlet(
            Dirichlet::new(beta.iter().map(|b| b * gamma).collect()).unwrap(),
        );
        let cf = ChoiceFunction::linear(beta).unwrap();
        worst = worst.max(max_res(&f, &cf, &JumpLaw::beta_one(gamma), &d1));
    }
    let f = DensityCandidate::dirichlet(Dirichlet::new(vec![0.6, 0.6, 0.6]).unwrap());
    let cf = ChoiceFunction::linear(vec![0.3, 0.3, 0.3]).unwrap();
    worst = worst.max(max_res(&f, &cf, &JumpLaw::beta_one(2.0), &d2));
    // p(z) = 1 - z with uniform jumps keeps the uniform law; the arcsine density is not stationary
    let reflecting = ChoiceFunction::custom(1, "1 - z", |bary| vec![bary[0]]);
    let control = residual(
        &DensityCandidate::arcsine(),
        &reflecting,
        &JumpLaw::Uniform,
        &SimplexPoint::new(vec![0.5]).unwrap(),
    )
    .map_err(|e| e.to_string())?;
    within(
        Duration::from_secs(120),
        start,
        format!(
            "max residual {worst:.2e} over {} + {} points (< 1e-6), wrong-candidate residual {control:.3} (> 0.05)",
            2 * d1.len(),
            d2.len()
        ),
        worst < 1e-6 && d1.len() == 99 && control > 0.05,
    )
}

fn c4_beta_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = RngStream::new(100, 0);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let a = 0.2 + 2.8 * rng.random::<f64>();
        let b = 3.0 * rng.random::<f64>();
        let z = 0.95 * rng.random::<f64>();
        let (l, r) = beta_integral_identity(a, b, z).map_err(|e| e.to_string())?;
        worst = worst.max((l - r).abs() / r);
    }
    within(
        Duration::from_secs(5),
        start,
        format!("max relative error {worst:.2e} (< 1e-8)"),
        worst < 1e-8,
    )
}

fn c5_sethuraman() -> Outcome {
    let start = Instant::now();
    let n = 100_000;
    let crit = ks_two_critical(n, n, 0.001);
    let mut worst = 0.0f64;
    for p in [vec![0.3], vec![0.3, 0.3]] {
        let gamma = 2.0;
        let mut alpha: Vec<f64> = p.iter().map(|x| x * gamma).collect();
        alpha.push((1.0 - p.iter().sum::<f64>()) * gamma);
        let dir = Dirichlet::new(alpha).unwrap();
        let mut r1 = RngStream::new(5, 0);
        let mut r2 = RngStream::new(5, 1);
        let moved = (0..n)
            .map(|_| sethuraman_onestep(&dir, &p, gamma, &mut r1))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let fresh: Vec<SimplexPoint> = (0..n).map(|_| dir.sample(&mut r2)).collect();
        for i in 0..p.len() {
            let d = ks_two_sample(&marginal(&moved, i), &marginal(&fresh, i))
                .map_err(|e| e.to_string())?;
            worst = worst.max(d);
        }
    }
    within(
        Duration::from_secs(60),
        start,
        format!("max two-sample KS {worst:.5} (critical {crit:.5} at alpha 0.001)"),
        worst < crit,
    )
}

fn c6_chain() -> Outcome {
    let start = Instant::now();
    let mut cfg = ChainConfig::new(
        ChoiceFunction::linear(vec![0.5, 0.5]).unwrap(),
        JumpLaw::beta_one(1.0),
        500,
        61,
    );
    cfg.ensemble = 10_000;
    let s = run_ensemble(&cfg).map_err(|e| e.to_string())?;
    let d1 = ks_one_sample(&marginal(&s, 0), arcsine_cdf).unwrap();

    let mut cfg = ChainConfig::new(
        ChoiceFunction::linear(vec![0.3, 0.3, 0.3]).unwrap(),
        JumpLaw::beta_one(2.0),
        500,
        62,
    );
    cfg.ensemble = 10_000;
    let s = run_ensemble(&cfg).map_err(|e| e.to_string())?;
    let law = JumpLaw::Beta { a: 0.6, b: 1.2 };
    let n = s.len() as f64;
    let sigma = (0.6 * 1.2 / (1.8 * 1.8 * 2.8) / n).sqrt();
    let (mut d2, mut zmax) = (0.0f64, 0.0f64);
    for i in 0..2 {
        let x = marginal(&s, i);
        d2 = d2.max(ks_one_sample(&x, |v| law.cdf(v)).unwrap());
        let m = x.iter().sum::<f64>() / n;
        zmax = zmax.max((m - 1.0 / 3.0).abs() / sigma);
    }
    within(
        Duration::from_secs(120),
        start,
        format!("d=1 KS {d1:.5}, d=2 max marginal KS {d2:.5} (< 0.0163), mean off by {zmax:.2} sigma (< 4)"),
        d1 < 0.0163 && d2 < 0.0163 && zmax < 4.0,
    )
}

fn c7_drift_algebra() -> Outcome {
    let start = Instant::now();
    let n = 1001;
    let (mut r_max, mut comb_max, mut form_gap) = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0f64);
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (i as f64 / (n - 1) as f64, j as f64 / (n - 1) as f64);
            let r = drift_polynomials(x, y);
            for k in [0, 2, 3, 4, 5] {
                r_max = r_max.max(r[k]);
            }
            for e in 0..10 {
                comb_max = comb_max.max(r[0] + 0.05 * e as f64 * r[1]);
            }
            form_gap = form_gap.max((r0_expanded(x, y) - r0_factored(x, y)).abs());
        }
    }
    let mut rng = RngStream::new(7, 0);
    let mut rel = 0.0f64;
    for _ in 0..100 {
        let (x, y, e) = (
            rng.random::<f64>(),
            rng.random::<f64>(),
            0.5 * rng.random::<f64>(),
        );
        let (c, o) = (drift_closed_form(x, y, e), drift_oracle(x, y, e));
        rel = rel.max(if o == 0.0 {
            c.abs()
        } else {
            (c - o).abs() / o.abs()
        });
    }
    within(
        Duration::from_secs(30),
        start,
        format!(
            "max r_i {r_max:.2e}, max r_0 + eps r_1 {comb_max:.2e}, factored gap {form_gap:.2e}, closed form rel error {rel:.2e}"
        ),
        r_max <= 1e-12 && comb_max <= 1e-12 && form_gap <= 1e-12 && rel < 1e-8,
    )
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

fn c8_urn_limit() -> Outcome {
    let start = Instant::now();
    let cp = urn_checkpoints(2000, 8, 0.5, &[1_000, 100_000]).map_err(|e| e.to_string())?;
    let in_range = cp
        .iter()
        .all(|c| (1.0 / 13.0..=12.0 / 13.0).contains(&c[1].zeta()));
    let early = median(cp.iter().map(|c| (c[0].zeta() - 0.5).abs()).collect());
    let late = median(cp.iter().map(|c| (c[1].zeta() - 0.5).abs()).collect());
    let z: Vec<f64> = cp.iter().map(|c| c[1].z).collect();
    let d = ks_one_sample(&z, arcsine_cdf).unwrap();
    within(
        Duration::from_secs(300),
        start,
        format!("zeta in range: {in_range}, median |zeta - 1/2| {early:.3e} -> {late:.3e}, KS vs arcsine {d:.5} (< 0.05)"),
        in_range && late < early && d < 0.05,
    )
}

fn c9_coupling() -> Outcome {
    use rayon::prelude::*;
    let start = Instant::now();
    let cfg = CouplingConfig {
        n_total: 100_000,
        n0: 10_000,
        eps_band: 0.1,
        seed: 9,
    };
    let runs = (0..200u64)
        .into_par_iter()
        .map(|i| coupled_run(&cfg, i, cfg.n_total, 0.5))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let band: Vec<_> = runs.iter().filter(|r| r.band_event).collect();
    let violations: u64 = band.iter().map(|r| r.sandwich_violations).sum();
    let steps = cfg.n_total - cfg.n0;
    let z = frozen_walk_ensemble(0.4, steps, 10_000, 10, 0.5).map_err(|e| e.to_string())?;
    let law = JumpLaw::Beta { a: 0.6, b: 0.4 };
    let d = ks_one_sample(&z, |x| law.cdf(x)).unwrap();
    within(
        Duration::from_secs(300),
        start,
        format!(
            "band event on {}/200 runs with {violations} sandwich violations; frozen walk KS {d:.5} (< 0.0163)",
            band.len()
        ),
        !band.is_empty() && violations == 0 && d < 0.0163,
    )
}

fn c10_reproducibility() -> Outcome {
    let start = Instant::now();
    let bin = env!("CARGO_BIN_EXE_simplex-walk");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let configs = [
        (
            "simulate",
            r#"{"version": 1, "chain": {"d": 2, "choice": {"type": "linear", "beta": [0.3, 0.3, 0.3]},
                "jump": {"type": "beta", "a": 1.0, "b": 2.0}, "steps": 200, "ensemble": 2000, "seed": 4},
                "target": {"type": "dirichlet", "alpha": [0.6, 0.6, 0.6]}}"#,
        ),
        (
            "verify",
            r#"{"version": 1, "d": 2, "choice": {"type": "linear", "beta": [0.3, 0.3, 0.3]},
                "jump": {"type": "beta", "a": 1.0, "b": 2.0}, "candidate": {"type": "dirichlet", "alpha": [0.6, 0.6, 0.6]},
                "grid": {"n": 8, "margin": 0.05}}"#,
        ),
        (
            "assumptions",
            r#"{"version": 1, "choice": {"type": "constant", "p": [0.3, 0.3]}, "jump": {"type": "beta", "a": 1.0, "b": 2.0},
                "settings": {"resolution": 40, "random_samples": 300}}"#,
        ),
        (
            "geometry",
            r#"{"version": 1, "round_trips": 500, "jacobian_points": 200, "samples": 2000}"#,
        ),
        (
            "urn",
            r#"{"version": 1, "runs": 60, "steps": 5000, "early": 100, "record_every": 50,
                "coupling": {"runs": 8, "N0": 500, "eps_band": 0.1},
                "frozen": {"threshold": 0.4, "chains": 300, "steps": 500}}"#,
        ),
    ];
    let mut compared = 0;
    for (cmd, text) in configs {
        let cfg = dir.path().join(format!("{cmd}.json"));
        fs::write(&cfg, text).map_err(|e| e.to_string())?;
        let mut outputs = Vec::new();
        for (k, threads) in ["1", "3", "1"].iter().enumerate() {
            let out = dir.path().join(format!("{cmd}-{k}"));
            let status = Command::new(bin)
                .args([cmd, "--config"])
                .arg(&cfg)
                .args(["--seed", "77", "--threads", threads, "--out"])
                .arg(&out)
                .output()
                .map_err(|e| e.to_string())?;
            if !status.status.success() {
                return Err(format!(
                    "{cmd} exited with {:?}: {}",
                    status.status.code(),
                    String::from_utf8_lossy(&status.stderr)
                ));
            }
            outputs.push(read_dir_sorted(&out));
        }
        if outputs[0].is_empty() || outputs.iter().any(|o| o != &outputs[0]) {
            return Err(format!(
                "{cmd}: artifacts differ between runs or thread counts"
            ));
        }
        compared += outputs[0].len();
    }
    within(
        Duration::from_secs(300),
        start,
        format!("{compared} artifacts byte-identical across reruns and --threads 1/3"),
        true,
    )
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .map(|it| {
            it.filter_map(|e| e.ok())
                .map(|e| {
                    (
                        e.file_name().to_string_lossy().into_owned(),
                        fs::read(e.path()).unwrap(),
                    )
                })
                .collect()
        })
        .unwrap_or_default();
    files.sort();
    files
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("geometry exactness", c1_geometry),
        ("minorization inclusions", c2_lemma1),
        ("stationary integral equation", c3_stationary_equation),
        ("beta integral identity", c4_beta_identity),
        ("one-step fixed point", c5_sethuraman),
        ("chain convergence", c6_chain),
        ("urn drift algebra", c7_drift_algebra),
        ("urn limit behavior", c8_urn_limit),
        ("coupling sandwich", c9_coupling),
        ("reproducibility", c10_reproducibility),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let line = match f() {
            Ok(detail) => format!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed.push(i + 1);
                format!("criterion {:>2} FAIL  {name}: {detail}", i + 1)
            }
        };
        // bypasses the test harness capture so the line always shows
        let _ = writeln!(std::io::stderr(), "{line}");
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
