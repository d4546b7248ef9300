//! Numerical certificates for the three ergodicity hypotheses on
//! `(d, delta, s, t)`, the jump law and the choice function:
//!
//! 1. `eta = P(xi >= 1 - delta) > 0`;
//! 2. `sum_{l} p_{j_l}(z) >= eps > 0` on every slab
//!    `{z_{j_1} + ... + z_{j_k} <= delta}`;
//! 3. `P(xi in B) > c lambda(B)` for Borel `B` inside
//!    `[s(1-t)^{d-1} - delta, t] u [(1-t)^d - delta, 1 - s]`;
//!
//! and a sampling check of the box inclusions that make the set `K` small.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chain::ChoiceFunction;
use crate::distributions::JumpLaw;
use crate::error::{Error, Result};
use crate::geometry::{
    box_margin, check_admissible, inner_lower, inverse_t_raw, invert_g_raw, rotate_r_raw,
    rotated_lower, sample_in_k, sample_in_vertex_region, uniform_barycentric,
};
use crate::TOL;

/// Multiplicative slack applied to the density minimum.
pub const DENSITY_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    pub delta: f64,
    pub eta: f64,
    pub passed: bool,
}

/// `eta = P(xi >= 1 - delta)`, exact.
pub fn check_tail(jump: &JumpLaw, delta: f64) -> Result<TailCheck> {
    jump.validate()?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta = {delta} outside (0,1)"
        )));
    }
    let eta = jump.tail_split(1.0 - delta, delta);
    Ok(TailCheck {
        delta,
        eta,
        passed: eta > 0.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceInfCheck {
    pub delta: f64,
    /// Smallest sum found over all index sets and evaluation points.
    pub epsilon: f64,
    /// Index set (barycentric numbering) attaining `epsilon`.
    pub worst_subset: Vec<usize>,
    /// Point (`z_1..z_d`) attaining `epsilon`.
    pub witness: Vec<f64>,
    pub resolution: usize,
    pub random_samples: usize,
    /// Largest change of a slab sum between neighbouring lattice points.
    pub grid_modulus: f64,
    /// `exact` for affine choice functions (minimum over the slab polytope's
    /// vertices), `sampled` otherwise.
    pub method: String,
    pub certified: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Index sets of size `1..=d` drawn from `0..=d`, in lexicographic order.
fn subsets(d: usize) -> Vec<Vec<usize>> {
    let n = d + 1;
    let mut out: Vec<Vec<usize>> = (1u64..(1u64 << n) - 1)
        .map(|mask| (0..n).filter(|&i| mask & (1 << i) != 0).collect())
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Vertices of `{z in S_d : sum_{j in J} z_j <= delta}`: the simplex
/// vertices outside `J` and the points `delta E_j + (1 - delta) E_i` with
/// `j in J`, `i` not in `J`.
fn slab_vertices(d: usize, subset: &[usize], delta: f64) -> Vec<Vec<f64>> {
    let outside: Vec<usize> = (0..=d).filter(|i| !subset.contains(i)).collect();
    let mut out = Vec::new();
    for &i in &outside {
        let mut b = vec![0.0; d + 1];
        b[i] = 1.0;
        out.push(b);
        for &j in subset {
            let mut b = vec![0.0; d + 1];
            b[i] = 1.0 - delta;
            b[j] = delta;
            out.push(b);
        }
    }
    out
}

/// Calls `f` on every barycentric lattice point `i / n` with
/// `sum_{j in J} i_j <= limit`.
fn for_each_lattice<F: FnMut(&[usize])>(
    d: usize,
    n: usize,
    subset: &[usize],
    limit: usize,
    mut f: F,
) {
    let mut idx = vec![0usize; d + 1];
    fn rec<F: FnMut(&[usize])>(
        pos: usize,
        left: usize,
        idx: &mut Vec<usize>,
        subset: &[usize],
        limit: usize,
        used: usize,
        f: &mut F,
    ) {
        if pos + 1 == idx.len() {
            idx[pos] = left;
            let extra = if subset.contains(&pos) { left } else { 0 };
            if used + extra <= limit {
                f(idx);
            }
            return;
        }
        let in_j = subset.contains(&pos);
        for v in 0..=left {
            let u = used + if in_j { v } else { 0 };
            if u > limit {
                break;
            }
            idx[pos] = v;
            rec(pos + 1, left - v, idx, subset, limit, u, f);
        }
    }
    rec(0, n, &mut idx, subset, limit, 0, &mut f);
}

fn slab_sum(cf: &ChoiceFunction, bary: &[f64], subset: &[usize]) -> Result<f64> {
    let p = cf.probs_bary(bary)?;
    Ok(subset.iter().map(|&j| p[j]).sum())
}

/// Approximates `inf sum_{j in J} p_j(z)` over every slab and returns the
/// smallest value.
///
/// Affine choice functions attain the infimum at a vertex of the slab
/// polytope, so the result is exact for them. Otherwise the infimum is
/// estimated on the barycentric lattice of the given resolution plus
/// `random_samples` points per slab; the value is certified only when it
/// exceeds twice the observed lattice modulus.
pub fn check_choice_inf(
    cf: &ChoiceFunction,
    delta: f64,
    resolution: usize,
    random_samples: usize,
    seed: u64,
) -> Result<ChoiceInfCheck> {
    cf.validate()?;
    let d = cf.dim();
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta = {delta} outside (0,1)"
        )));
    }
    if resolution == 0 {
        return Err(Error::InvalidParameter("resolution must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = (f64::INFINITY, Vec::new(), Vec::new());
    let consider =
        |v: f64, subset: &[usize], bary: &[f64], best: &mut (f64, Vec<usize>, Vec<f64>)| {
            if v < best.0 {
                *best = (v, subset.to_vec(), bary[1..].to_vec());
            }
        };
    let mut modulus = 0.0f64;
    let n = resolution;
    let limit = (delta * n as f64 + 1e-9).floor() as usize;
    let scale = 1.0 / n as f64;
    for subset in subsets(d) {
        for b in slab_vertices(d, &subset, delta) {
            let v = slab_sum(cf, &b, &subset)?;
            consider(v, &subset, &b, &mut best);
        }
        let mut err = None;
        let mut bary = vec![0.0; d + 1];
        let mut nb = vec![0.0; d + 1];
        for_each_lattice(d, n, &subset, limit, |idx| {
            if err.is_some() {
                return;
            }
            for (b, &i) in bary.iter_mut().zip(idx) {
                *b = i as f64 * scale;
            }
            let v = match slab_sum(cf, &bary, &subset) {
                Ok(v) => v,
                Err(e) => {
                    err = Some(e);
                    return;
                }
            };
            consider(v, &subset, &bary, &mut best);
            // Neighbours: move one lattice unit of mass from a to c.
            for a in 0..=d {
                if idx[a] == 0 {
                    continue;
                }
                for c in 0..=d {
                    if c == a {
                        continue;
                    }
                    let moved_in = subset.contains(&c) && !subset.contains(&a);
                    let used: usize = subset.iter().map(|&j| idx[j]).sum();
                    if moved_in && used + 1 > limit {
                        continue;
                    }
                    nb.copy_from_slice(&bary);
                    nb[a] -= scale;
                    nb[c] += scale;
                    if let Ok(w) = slab_sum(cf, &nb, &subset) {
                        modulus = modulus.max((w - v).abs());
                    }
                }
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        for _ in 0..random_samples {
            // Uniform shape, rescaled so that the slab mass is delta * U.
            let mut b = uniform_barycentric(d + 1, &mut rng);
            let inside: f64 = subset.iter().map(|&j| b[j]).sum();
            let target = delta * rng.random::<f64>();
            let outside = 1.0 - inside;
            for (i, bi) in b.iter_mut().enumerate() {
                if subset.contains(&i) {
                    *bi = if inside > 0.0 {
                        *bi * target / inside
                    } else {
                        0.0
                    };
                } else {
                    *bi = if outside > 0.0 {
                        *bi * (1.0 - target) / outside
                    } else {
                        0.0
                    };
                }
            }
            let v = slab_sum(cf, &b, &subset)?;
            consider(v, &subset, &b, &mut best);
        }
    }
    let (epsilon, worst_subset, witness) = best;
    let affine = cf.is_affine();
    let mut notes = Vec::new();
    let certified = if affine {
        epsilon > 0.0
    } else {
        notes.push(
            "choice function is not affine: the infimum is estimated from a finite point set \
             and cannot be exhaustive"
                .to_string(),
        );
        epsilon > 2.0 * modulus
    };
    Ok(ChoiceInfCheck {
        delta,
        epsilon,
        worst_subset,
        witness,
        resolution,
        random_samples,
        grid_modulus: modulus,
        method: if affine { "exact" } else { "sampled" }.to_string(),
        certified,
        notes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityInterval {
    pub lower: f64,
    pub upper: f64,
    pub empty: bool,
    /// Minimum of the density over the interval, if nonempty.
    pub min_density: Option<f64>,
    pub argmin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityLowerCheck {
    pub intervals: Vec<DensityInterval>,
    /// `(1 - margin)` times the smallest density over the union.
    pub c: f64,
    pub margin: f64,
    pub resolution: usize,
    /// Both intervals empty: the condition holds vacuously.
    pub vacuous: bool,
    pub certified: bool,
}

/// Minimum of the Beta(a, b) density on `[lo, hi]`, over a grid, the
/// endpoints and the interior critical point.
fn beta_density_min(jump: &JumpLaw, lo: f64, hi: f64, resolution: usize) -> Result<(f64, f64)> {
    let (a, b) = match *jump {
        JumpLaw::Beta { a, b } => (a, b),
        _ => (1.0, 1.0),
    };
    let mut candidates: Vec<f64> = (0..=resolution)
        .map(|i| lo + (hi - lo) * i as f64 / resolution as f64)
        .collect();
    candidates.push(hi);
    if (a + b - 2.0).abs() > 0.0 {
        let x = (a - 1.0) / (a + b - 2.0);
        if x > lo && x < hi {
            candidates.push(x);
        }
    }
    let mut best = (f64::INFINITY, lo);
    for x in candidates {
        let v = jump.pdf(x)?;
        if v < best.0 {
            best = (v, x);
        }
    }
    Ok(best)
}

/// Lower bound `c` for the jump density on the union of
/// `[s(1-t)^{d-1} - delta, t]` and `[(1-t)^d - delta, 1 - s]`, clipped to
/// `[0, 1]`.
pub fn check_density_lower(
    jump: &JumpLaw,
    d: usize,
    delta: f64,
    s: f64,
    t: f64,
    resolution: usize,
) -> Result<DensityLowerCheck> {
    check_admissible(d, delta, s, t)?;
    density_lower_on(
        jump,
        &[
            (inner_lower(d, delta, s, t), t),
            (rotated_lower(d, delta, t), 1.0 - s),
        ],
        resolution,
    )
}

/// Lower bound `c` for the jump density on a union of intervals, each
/// clipped to `[0, 1]`. Degenerate intervals are reported as empty.
pub fn density_lower_on(
    jump: &JumpLaw,
    raw: &[(f64, f64)],
    resolution: usize,
) -> Result<DensityLowerCheck> {
    jump.validate()?;
    if !jump.has_density() {
        return Err(Error::UndefinedDensity(format!(
            "{jump:?} has no density to bound from below"
        )));
    }
    let resolution = resolution.max(1);
    let mut intervals = Vec::new();
    let mut min = f64::INFINITY;
    for &(lo, hi) in raw {
        let (lo, hi) = (lo.max(0.0), hi.min(1.0));
        if lo >= hi {
            intervals.push(DensityInterval {
                lower: lo,
                upper: hi,
                empty: true,
                min_density: None,
                argmin: None,
            });
            continue;
        }
        let (v, x) = beta_density_min(jump, lo, hi, resolution)?;
        min = min.min(v);
        intervals.push(DensityInterval {
            lower: lo,
            upper: hi,
            empty: false,
            min_density: Some(v),
            argmin: Some(x),
        });
    }
    let vacuous = intervals.iter().all(|i| i.empty);
    let c = if vacuous {
        0.0
    } else {
        (1.0 - DENSITY_MARGIN) * min
    };
    Ok(DensityLowerCheck {
        intervals,
        c,
        margin: DENSITY_MARGIN,
        resolution,
        vacuous,
        certified: vacuous || c > 0.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionCheck {
    /// `a` or `b, k = ...`.
    pub part: String,
    pub samples: usize,
    pub violations: usize,
    /// Smallest distance of an image point to the target box boundary
    /// (negative when outside).
    pub worst_margin: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// First violating pair `(u, z)`, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Report {
    pub d: usize,
    pub delta: f64,
    pub s: f64,
    pub t: f64,
    /// Amount by which the upper bound `t` of the target boxes was lowered.
    pub shrink: f64,
    pub part_a: InclusionCheck,
    pub part_b: Vec<InclusionCheck>,
}

impl Lemma1Report {
    pub fn total_violations(&self) -> usize {
        self.part_a.violations + self.part_b.iter().map(|p| p.violations).sum::<usize>()
    }
}

/// Samples `n_samples` pairs `u in K`, `z in V_j` for each part and tests
/// `T^{-1}(G_z^{-1}(u))` (part a, `j = 0`) and
/// `T^{-1}(G_{R_k z}^{-1}(R_k u))` (part b, `j = k`) for membership in the
/// target boxes.
pub fn verify_lemma1<R: Rng + ?Sized>(
    d: usize,
    delta: f64,
    s: f64,
    t: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<Lemma1Report> {
    verify_lemma1_shrunk(d, delta, s, t, n_samples, 0.0, rng)
}

/// [`verify_lemma1`] with `t` replaced by `t - shrink` in the target boxes
/// only.
pub fn verify_lemma1_shrunk<R: Rng + ?Sized>(
    d: usize,
    delta: f64,
    s: f64,
    t: f64,
    n_samples: usize,
    shrink: f64,
    rng: &mut R,
) -> Result<Lemma1Report> {
    check_admissible(d, delta, s, t)?;
    let inner = inner_lower(d, delta, s, t);
    let top = t - shrink;

    let mut run = |k: usize, lower: Vec<f64>, upper: Vec<f64>| -> Result<InclusionCheck> {
        let mut check = InclusionCheck {
            part: if k == 0 {
                "a".into()
            } else {
                format!("b, k = {k}")
            },
            samples: n_samples,
            violations: 0,
            worst_margin: f64::INFINITY,
            lower,
            upper,
            witness: None,
        };
        for _ in 0..n_samples {
            let u = sample_in_k(d, s, t, rng);
            let z = sample_in_vertex_region(k, d, delta, rng)?;
            let image = if k == 0 {
                invert_g_raw(z.coords(), u.coords())
            } else {
                let (rz, ru) = (rotate_r_raw(k, z.coords())?, rotate_r_raw(k, u.coords())?);
                invert_g_raw(&rz, &ru)
            }
            .and_then(|v| inverse_t_raw(&v));
            let margin = match image {
                Ok(x) => box_margin(&x, &check.lower, &check.upper),
                Err(_) => f64::NEG_INFINITY,
            };
            check.worst_margin = check.worst_margin.min(margin);
            if margin < -TOL {
                check.violations += 1;
                if check.witness.is_none() {
                    check.witness = Some((u.coords().to_vec(), z.coords().to_vec()));
                }
            }
        }
        Ok(check)
    };

    let part_a = run(0, vec![inner; d], vec![top; d])?;
    let mut part_b = Vec::with_capacity(d);
    for k in 1..=d {
        let mut lower = vec![inner; d];
        let mut upper = vec![top; d];
        lower[0] = rotated_lower(d, delta, t);
        upper[0] = 1.0 - s;
        part_b.push(run(k, lower, upper)?);
    }
    Ok(Lemma1Report {
        d,
        delta,
        s,
        t,
        shrink,
        part_a,
        part_b,
    })
}

/// Settings shared by the assumption checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSettings {
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default = "default_random")]
    pub random_samples: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_resolution() -> usize {
    200
}

fn default_random() -> usize {
    2000
}

impl Default for CheckSettings {
    fn default() -> Self {
        Self {
            resolution: default_resolution(),
            random_samples: default_random(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub d: usize,
    pub delta: f64,
    pub s: f64,
    pub t: f64,
    pub admissible: bool,
    pub eta: f64,
    pub epsilon: f64,
    pub c: f64,
    pub certified: bool,
    pub witnesses: Vec<String>,
    pub tail: TailCheck,
    pub choice: ChoiceInfCheck,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityLowerCheck>,
}

/// All three checks at one parameter point.
pub fn assumption_report(
    cf: &ChoiceFunction,
    jump: &JumpLaw,
    delta: f64,
    s: f64,
    t: f64,
    settings: &CheckSettings,
) -> Result<AssumptionReport> {
    let d = cf.dim();
    let tail = check_tail(jump, delta)?;
    let choice = check_choice_inf(
        cf,
        delta,
        settings.resolution,
        settings.random_samples,
        settings.seed,
    )?;
    assemble(d, jump, delta, s, t, settings, tail, choice)
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    d: usize,
    jump: &JumpLaw,
    delta: f64,
    s: f64,
    t: f64,
    settings: &CheckSettings,
    tail: TailCheck,
    choice: ChoiceInfCheck,
) -> Result<AssumptionReport> {
    let mut witnesses = Vec::new();
    let admissible = match check_admissible(d, delta, s, t) {
        Ok(()) => true,
        Err(e) => {
            witnesses.push(format!("parameters: {e}"));
            false
        }
    };
    if !tail.passed {
        witnesses.push(format!("tail: P(xi >= 1 - {delta}) = 0"));
    }
    if !choice.certified {
        witnesses.push(format!(
            "choice: sum of p over {:?} is {} at z = {:?}",
            choice.worst_subset, choice.epsilon, choice.witness
        ));
    }
    let density = if admissible {
        match check_density_lower(jump, d, delta, s, t, settings.resolution) {
            Ok(c) => Some(c),
            Err(e) => {
                witnesses.push(format!("density: {e}"));
                None
            }
        }
    } else {
        None
    };
    if let Some(dc) = &density {
        if !dc.certified {
            witnesses.push(format!("density: lower bound {} is not positive", dc.c));
        }
    }
    let c = density.as_ref().map_or(0.0, |dc| dc.c);
    let certified = admissible
        && tail.passed
        && choice.certified
        && density.as_ref().is_some_and(|dc| dc.certified);
    Ok(AssumptionReport {
        d,
        delta,
        s,
        t,
        admissible,
        eta: tail.eta,
        epsilon: choice.epsilon,
        c,
        certified,
        witnesses,
        tail,
        choice,
        density,
    })
}

/// First certified parameter point with `delta in {10^{-1}, ..., 10^{-6}}`
/// (below `2^{-d}`) and `s < t` on the grid `0.05, 0.10, ..., 0.95`.
///
/// Returns the last report examined when none certifies.
pub fn search_parameters(
    cf: &ChoiceFunction,
    jump: &JumpLaw,
    settings: &CheckSettings,
) -> Result<AssumptionReport> {
    let d = cf.dim();
    let grid: Vec<f64> = (1..20).map(|i| i as f64 * 0.05).collect();
    let mut last = None;
    for k in 1..=6 {
        let delta = 10f64.powi(-k);
        if delta >= 0.5f64.powi(d as i32) {
            continue;
        }
        let tail = check_tail(jump, delta)?;
        let choice = check_choice_inf(
            cf,
            delta,
            settings.resolution,
            settings.random_samples,
            settings.seed,
        )?;
        for &s in &grid {
            for &t in &grid {
                if check_admissible(d, delta, s, t).is_err() {
                    continue;
                }
                let report =
                    assemble(d, jump, delta, s, t, settings, tail.clone(), choice.clone())?;
                if report.certified {
                    return Ok(report);
                }
                last = Some(report);
            }
        }
    }
    last.ok_or_else(|| Error::InvalidParameter(format!("no admissible parameters for d = {d}")))
}
