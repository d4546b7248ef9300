//! Goodness-of-fit statistics: Kolmogorov-Smirnov, chi-square over
//! stick-breaking cells of the simplex, moment comparison and histogram
//! total variation.

use serde::{Deserialize, Serialize};

use crate::distributions::special::{beta_inc_pair, chi_square_critical};
use crate::distributions::Dirichlet;
use crate::error::{Error, Result};
use crate::geometry::SimplexPoint;
use crate::quadrature::TanhSinh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Outcome of one test; `verdict` is `Pass` iff `statistic < threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub kind: String,
    pub statistic: f64,
    pub threshold: f64,
    pub n: usize,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl GofReport {
    pub fn new(kind: impl Into<String>, statistic: f64, threshold: f64, n: usize) -> Self {
        let verdict = if statistic < threshold {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Self {
            kind: kind.into(),
            statistic,
            threshold,
            n,
            verdict,
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

fn sorted(sample: &[f64]) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(x) = sample.iter().find(|x| x.is_nan()) {
        return Err(Error::Domain(format!("sample contains {x}")));
    }
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// `D = max_i max(i/n - F(x_(i)), F(x_(i)) - (i-1)/n)`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<f64> {
    let v = sorted(sample)?;
    let n = v.len() as f64;
    Ok(v.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    }))
}

/// Two-sample statistic `sup_x |F_a(x) - F_b(x)|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    let (a, b) = (sorted(a)?, sorted(b)?);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Asymptotic Kolmogorov coefficient `c(alpha)`; the tabulated 1.63 and 1.95
/// are used at `alpha = 0.01` and `0.001`.
pub fn ks_coefficient(alpha: f64) -> f64 {
    if alpha == 0.01 {
        1.63
    } else if alpha == 0.001 {
        1.95
    } else {
        (-0.5 * (alpha / 2.0).ln()).sqrt()
    }
}

/// One-sample critical value `c(alpha) / sqrt(n)`.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    ks_coefficient(alpha) / (n as f64).sqrt()
}

/// Two-sample critical value with the effective size `n m / (n + m)`.
pub fn ks_two_critical(n: usize, m: usize, alpha: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    ks_coefficient(alpha) / (n * m / (n + m)).sqrt()
}

pub fn ks_one_report<F: Fn(f64) -> f64>(sample: &[f64], cdf: F, alpha: f64) -> Result<GofReport> {
    let d = ks_one_sample(sample, cdf)?;
    let mut r = GofReport::new(
        "ks_one_sample",
        d,
        ks_critical(sample.len(), alpha),
        sample.len(),
    );
    r.notes.push(format!("alpha = {alpha}"));
    Ok(r)
}

pub fn ks_two_report(a: &[f64], b: &[f64], alpha: f64) -> Result<GofReport> {
    let d = ks_two_sample(a, b)?;
    let mut r = GofReport::new(
        "ks_two_sample",
        d,
        ks_two_critical(a.len(), b.len(), alpha),
        a.len().min(b.len()),
    );
    r.notes.push(format!(
        "alpha = {alpha}, sizes = ({}, {})",
        a.len(),
        b.len()
    ));
    Ok(r)
}

/// Coordinate `i` (0-based over `z_1..z_d`) of every sample point.
pub fn marginal(samples: &[SimplexPoint], i: usize) -> Vec<f64> {
    samples.iter().map(|z| z.coords()[i]).collect()
}

/// Pearson statistic of `sample` in `bins` equal-probability bins of `cdf`
/// (probability integral transform), with `bins - 1` degrees of freedom.
pub fn chi_square_pit<F: Fn(f64) -> f64>(
    sample: &[f64],
    cdf: F,
    bins: usize,
    alpha: f64,
) -> Result<GofReport> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if bins < 2 {
        return Err(Error::InvalidParameter("need at least two bins".into()));
    }
    let mut counts = vec![0usize; bins];
    for &x in sample {
        let u = cdf(x).clamp(0.0, 1.0);
        let k = ((u * bins as f64) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let expected = sample.len() as f64 / bins as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let dof = (bins - 1) as f64;
    let mut r = GofReport::new(
        "chi_square_pit",
        stat,
        chi_square_critical(dof, alpha),
        sample.len(),
    );
    r.notes
        .push(format!("bins = {bins}, dof = {dof}, alpha = {alpha}"));
    Ok(r)
}

/// Stick-breaking coordinates `x_j = z_j / (1 - sum_{l>j} z_l)`, clamped
/// into `[0, 1]` so boundary samples still land in a cell.
fn pullback(z: &[f64]) -> Vec<f64> {
    let mut tail = 0.0;
    let mut x = vec![0.0; z.len()];
    for j in (0..z.len()).rev() {
        let den = 1.0 - tail;
        x[j] = if den > 0.0 {
            (z[j] / den).clamp(0.0, 1.0)
        } else {
            1.0
        };
        tail += z[j];
    }
    x
}

/// Parameters of the independent Beta laws of the stick-breaking
/// coordinates under `Dirichlet(alpha)`: `x_j ~ Beta(alpha_j,
/// alpha_{d+1} + sum_{i<j} alpha_i)`.
pub fn stick_breaking_betas(params: &Dirichlet) -> Vec<(f64, f64)> {
    let alpha = params.alpha();
    let d = params.dim();
    let mut rest = alpha[d];
    (0..d)
        .map(|j| {
            let ab = (alpha[j], rest);
            rest += alpha[j];
            ab
        })
        .collect()
}

/// Probabilities of the `bins` equal sub-intervals of `[0,1]` under
/// `Beta(a, b)`.
fn beta_bin_probs(a: f64, b: f64, bins: usize) -> Vec<f64> {
    let cdf = |k: usize| {
        let x = k as f64 / bins as f64;
        beta_inc_pair(a, b, x, (bins - k) as f64 / bins as f64).0
    };
    (0..bins).map(|k| cdf(k + 1) - cdf(k)).collect()
}

/// Cell probabilities of the `bins^d` stick-breaking cells, in row-major
/// order with `x_1` varying fastest.
pub fn simplex_cell_probs(params: &Dirichlet, bins: usize) -> Vec<f64> {
    let factors: Vec<Vec<f64>> = stick_breaking_betas(params)
        .into_iter()
        .map(|(a, b)| beta_bin_probs(a, b, bins))
        .collect();
    let mut probs = vec![1.0];
    for f in &factors {
        let mut next = Vec::with_capacity(probs.len() * bins);
        for &pk in f {
            next.extend(probs.iter().map(|p| p * pk));
        }
        probs = next;
    }
    probs
}

fn cell_index(z: &SimplexPoint, bins: usize) -> usize {
    let x = pullback(z.coords());
    let mut idx = 0;
    for &xj in x.iter().rev() {
        let k = ((xj * bins as f64) as usize).min(bins - 1);
        idx = idx * bins + k;
    }
    idx
}

/// Pearson chi-square of simplex samples against `Dirichlet(params)` over
/// the pullback under `T` of the `bins^d` equal subcubes.
///
/// If a cell expects fewer than five samples the number of bins per axis is
/// reduced until none does; the report notes each coarsening.
pub fn chi_square_simplex(
    samples: &[SimplexPoint],
    params: &Dirichlet,
    bins: usize,
    alpha: f64,
) -> Result<GofReport> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let d = params.dim();
    if let Some(z) = samples.iter().find(|z| z.dim() != d) {
        return Err(Error::Dimension {
            expected: d,
            got: z.dim(),
        });
    }
    let n = samples.len() as f64;
    let mut notes = Vec::new();
    let mut b = bins.max(1);
    let probs = loop {
        let probs = simplex_cell_probs(params, b);
        let min_expected = probs.iter().cloned().fold(f64::INFINITY, f64::min) * n;
        if min_expected >= 5.0 || b == 1 {
            break probs;
        }
        notes.push(format!(
            "coarsened from {b} to {} bins per axis (min expected count {min_expected:.3})",
            b - 1
        ));
        b -= 1;
    };
    if probs.len() < 2 {
        return Err(Error::InvalidParameter(
            "sample too small for any chi-square partition".into(),
        ));
    }
    let mut counts = vec![0usize; probs.len()];
    for z in samples {
        counts[cell_index(z, b)] += 1;
    }
    let stat: f64 = counts
        .iter()
        .zip(&probs)
        .map(|(&c, &p)| {
            let e = p * n;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    let dof = (probs.len() - 1) as f64;
    let mut r = GofReport::new(
        "chi_square_simplex",
        stat,
        chi_square_critical(dof, alpha),
        samples.len(),
    );
    notes.push(format!(
        "bins per axis = {b}, cells = {}, dof = {dof}, alpha = {alpha}",
        probs.len()
    ));
    r.notes = notes;
    Ok(r)
}

/// Largest standardized deviation of sample means and centred cross
/// products from their exact Dirichlet values.
///
/// Each statistic is a sample average of some `h(Z)` with known expectation;
/// its standard error is estimated from the same sample.
pub fn moment_compare(samples: &[SimplexPoint], params: &Dirichlet) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::EmptySample);
    }
    let d = params.dim();
    let mean = params.mean();
    let cov = params.covariance();
    let n = samples.len() as f64;
    let standardized = |h: &dyn Fn(&[f64]) -> f64, target: f64| {
        let vals: Vec<f64> = samples.iter().map(|z| h(z.coords())).collect();
        let m = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
        if var == 0.0 {
            if m == target {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (m - target).abs() / (var / n).sqrt()
        }
    };
    let mut worst = 0.0f64;
    for i in 0..d {
        worst = worst.max(standardized(&|z| z[i], mean[i]));
        for j in i..d {
            let (mi, mj) = (mean[i], mean[j]);
            worst = worst.max(standardized(&|z| (z[i] - mi) * (z[j] - mj), cov[i][j]));
        }
    }
    Ok(worst)
}

/// `1/2 sum_k |p_hat_k - p_k|` over `bins` equal bins of `[0, 1]`, with
/// `p_k` the integral of `pdf` over bin `k`.
pub fn tv_histogram<F: Fn(f64) -> f64>(sample: &[f64], pdf: F, bins: usize) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if bins == 0 {
        return Err(Error::InvalidParameter("need at least one bin".into()));
    }
    let rule = TanhSinh::with_tolerance(1e-10, 1e-10);
    let mut counts = vec![0usize; bins];
    for &x in sample {
        let k = ((x.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let n = sample.len() as f64;
    let mut tv = 0.0;
    for (k, &c) in counts.iter().enumerate() {
        let (a, b) = (k as f64 / bins as f64, (k + 1) as f64 / bins as f64);
        let p = rule.integrate(a, b, |node| pdf(node.x))?.value;
        tv += (c as f64 / n - p).abs();
    }
    Ok(0.5 * tv)
}

/// Total variation between the empirical and exact masses of the
/// stick-breaking cells.
pub fn tv_simplex(samples: &[SimplexPoint], params: &Dirichlet, bins: usize) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let probs = simplex_cell_probs(params, bins.max(1));
    let mut counts = vec![0usize; probs.len()];
    for z in samples {
        counts[cell_index(z, bins.max(1))] += 1;
    }
    let n = samples.len() as f64;
    Ok(0.5
        * counts
            .iter()
            .zip(&probs)
            .map(|(&c, &p)| (c as f64 / n - p).abs())
            .sum::<f64>())
}
