//! Quadrature checks of the stationary integral equation
//! `f(z) = sum_{j=0}^d T_j(z)` for a candidate density `f`, where
//!
//! ```text
//! T_0(z) = int_{z_1+...+z_d}^1 u^{-d} f(z/u) p_0(z/u) g(1-u) du
//! T_j(z) = int_{1-z_j}^1 u^{-d} f(y) p_j(y) g(1-u) du,
//!          y_j = (z_j - 1 + u)/u, y_i = z_i/u otherwise.
//! ```
//!
//! Candidates are evaluated on full barycentric coordinates. Inside the
//! integrals the coordinate that vanishes at the lower limit is formed from
//! the exact distance to that limit, so power singularities of `f` and `g`
//! are resolved without cancellation.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{select_vertex, ChoiceFunction};
use crate::distributions::{Dirichlet, JumpLaw, JumpSampler};
use crate::error::{Error, Result};
use crate::geometry::SimplexPoint;
use crate::quadrature::{gauss_jacobi, integrate_power_weight, Node, TanhSinh};

type DensityFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A candidate stationary density on `S_d`, evaluated at barycentric
/// coordinates `(z_0, ..., z_d)`.
#[derive(Clone)]
pub struct DensityCandidate {
    label: String,
    dim: usize,
    eval: Arc<DensityFn>,
}

impl fmt::Debug for DensityCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityCandidate")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

impl DensityCandidate {
    pub fn new<F>(label: impl Into<String>, dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            dim,
            eval: Arc::new(f),
        }
    }

    pub fn dirichlet(params: Dirichlet) -> Self {
        let label = format!("Dirichlet{:?}", params.alpha());
        let dim = params.dim();
        Self::new(label, dim, move |bary| {
            params.pdf_barycentric(bary).unwrap_or(f64::NAN)
        })
    }

    /// The uniform density `d!` on `S_d`.
    pub fn uniform(d: usize) -> Self {
        let c: f64 = (1..=d).map(|k| k as f64).product();
        Self::new("uniform", d, move |_| c)
    }

    /// The Beta(1/2, 1/2) density on `S_1`.
    pub fn arcsine() -> Self {
        Self::new("arcsine", 1, |bary| {
            1.0 / (std::f64::consts::PI * (bary[0] * bary[1]).sqrt())
        })
    }

    /// `a f_1 + b f_2`.
    pub fn combine(a: f64, f1: &DensityCandidate, b: f64, f2: &DensityCandidate) -> Result<Self> {
        if f1.dim != f2.dim {
            return Err(Error::Dimension {
                expected: f1.dim,
                got: f2.dim,
            });
        }
        let (e1, e2) = (f1.eval.clone(), f2.eval.clone());
        Ok(Self::new(
            format!("{a}*{} + {b}*{}", f1.label, f2.label),
            f1.dim,
            move |bary| a * e1(bary) + b * e2(bary),
        ))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval_barycentric(&self, bary: &[f64]) -> f64 {
        (self.eval)(bary)
    }

    pub fn eval(&self, z: &SimplexPoint) -> f64 {
        (self.eval)(&z.barycentric())
    }
}

/// Quadrature rule used by [`operator_Tj`]: absolute tolerance `1e-9`.
pub fn default_rule() -> TanhSinh {
    TanhSinh::with_tolerance(1e-9, 0.0)
}

fn check_inputs(
    f: &DensityCandidate,
    cf: &ChoiceFunction,
    g: &JumpLaw,
    z: &SimplexPoint,
) -> Result<()> {
    let d = z.dim();
    if f.dim != d {
        return Err(Error::Dimension {
            expected: d,
            got: f.dim,
        });
    }
    if cf.dim() != d {
        return Err(Error::Dimension {
            expected: d,
            got: cf.dim(),
        });
    }
    g.validate()?;
    if !g.has_density() {
        return Err(Error::UndefinedDensity(format!(
            "{g:?} has no density; the integral operators need one"
        )));
    }
    if !z.is_interior() {
        return Err(Error::Domain(format!(
            "z = {:?} is not in the open simplex",
            z.coords()
        )));
    }
    Ok(())
}

/// `T_j(z)` with the default rule.
#[allow(non_snake_case)]
pub fn operator_Tj(
    j: usize,
    f: &DensityCandidate,
    cf: &ChoiceFunction,
    g: &JumpLaw,
    z: &SimplexPoint,
) -> Result<f64> {
    operator_tj_with(&default_rule(), j, f, cf, g, z)
}

/// `T_j(z)` with an explicit quadrature rule.
pub fn operator_tj_with(
    rule: &TanhSinh,
    j: usize,
    f: &DensityCandidate,
    cf: &ChoiceFunction,
    g: &JumpLaw,
    z: &SimplexPoint,
) -> Result<f64> {
    let d = z.dim();
    if j > d {
        return Err(Error::Index { index: j, max: d });
    }
    check_inputs(f, cf, g, z)?;
    let bary = z.barycentric();
    // Lower limit: 1 - z_j, i.e. the sum of the other barycentric coordinates.
    let lower: f64 = bary
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != j)
        .map(|(_, &b)| b)
        .sum();
    if lower >= 1.0 {
        return Ok(0.0);
    }
    let mut y = vec![0.0; d + 1];
    let mut failure = None;
    let res = rule.integrate(lower, 1.0, |node: Node| {
        let u = node.x;
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = if i == j {
                node.from_lower / u
            } else {
                bary[i] / u
            };
        }
        let p = match cf.probs_bary(&y) {
            Ok(p) => p[j],
            Err(e) => {
                failure.get_or_insert(e);
                return 0.0;
            }
        };
        if p == 0.0 {
            return 0.0;
        }
        let gv = match g.pdf_split(node.from_upper, u) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                return 0.0;
            }
        };
        u.powi(-(d as i32)) * f.eval_barycentric(&y) * p * gv
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(res?.value)
}

/// `(T_0(z), ..., T_d(z))`.
pub fn operators(
    f: &DensityCandidate,
    cf: &ChoiceFunction,
    g: &JumpLaw,
    z: &SimplexPoint,
) -> Result<Vec<f64>> {
    (0..=z.dim()).map(|j| operator_Tj(j, f, cf, g, z)).collect()
}

/// `|sum_j T_j(z) - f(z)| / f(z)`.
pub fn residual(
    f: &DensityCandidate,
    cf: &ChoiceFunction,
    g: &JumpLaw,
    z: &SimplexPoint,
) -> Result<f64> {
    check_inputs(f, cf, g, z)?;
    let fz = f.eval(z);
    if !(fz > 0.0 && fz.is_finite()) {
        return Err(Error::Domain(format!(
            "candidate density is {fz} at {:?}",
            z.coords()
        )));
    }
    let total: f64 = operators(f, cf, g, z)?.iter().sum();
    Ok((total - fz).abs() / fz)
}

/// Residual at one grid point. Points where quadrature failed (for instance
/// at a discontinuity of a piecewise choice function) are flagged instead of
/// aborting the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualPoint {
    pub z: Vec<f64>,
    pub residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<String>,
}

/// Cartesian grid with `n` points per axis on `[margin, 1 - margin]`,
/// keeping the points whose implied `z_0` is at least `margin`.
pub fn interior_grid(d: usize, n: usize, margin: f64) -> Vec<SimplexPoint> {
    let axis: Vec<f64> = if n == 1 {
        vec![0.5]
    } else {
        (0..n)
            .map(|i| margin + (1.0 - 2.0 * margin) * i as f64 / (n - 1) as f64)
            .collect()
    };
    let mut out = Vec::new();
    let mut idx = vec![0usize; d];
    loop {
        let coords: Vec<f64> = idx.iter().map(|&i| axis[i]).collect();
        if 1.0 - coords.iter().sum::<f64>() >= margin - 1e-12 {
            out.push(SimplexPoint::from_vec_unchecked(coords));
        }
        let mut k = 0;
        loop {
            if k == d {
                return out;
            }
            idx[k] += 1;
            if idx[k] < n {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Residuals over `points`, computed in parallel and returned in input order.
pub fn residual_grid(
    f: &DensityCandidate,
    cf: &ChoiceFunction,
    g: &JumpLaw,
    points: &[SimplexPoint],
) -> Vec<ResidualPoint> {
    points
        .par_iter()
        .map(|z| match residual(f, cf, g, z) {
            Ok(r) => ResidualPoint {
                z: z.coords().to_vec(),
                residual: Some(r),
                flag: None,
            },
            Err(e) => ResidualPoint {
                z: z.coords().to_vec(),
                residual: None,
                flag: Some(e.to_string()),
            },
        })
        .collect()
}

const GJ_NODES: usize = 24;

/// Both sides of
/// `int_z^1 u^{-b-1} (u - z)^{a-1} [a u - b (u - z)] du = (1 - z)^a`.
///
/// With `u = z + (1 - z) w` the left side is `(1 - z)^a` times
/// `int_0^1 w^{a-1} u^{-b-1} [a u - b (1 - z) w] dw`. The factor
/// `u^{-b-1}` is analytic on `[0, 1]` with a pole at `w = -z/(1-z)`, so the
/// integral is split into a Gauss-Jacobi panel at the origin that absorbs
/// `w^{a-1}`, followed by geometrically growing Gauss-Legendre panels.
///
/// At `z = 0` the left side converges only for `a > b`.
pub fn beta_integral_identity(a: f64, b: f64, z: f64) -> Result<(f64, f64)> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidParameter(format!("a = {a} must be positive")));
    }
    if !(b >= 0.0 && b.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "b = {b} must be nonnegative"
        )));
    }
    if !(0.0..1.0).contains(&z) {
        return Err(Error::Domain(format!("z = {z} outside [0,1)")));
    }
    let y = 1.0 - z;
    let rhs = y.powf(a);
    if z == 0.0 {
        if a <= b {
            return Err(Error::Domain(format!(
                "integral diverges at z = 0 unless a > b (a = {a}, b = {b})"
            )));
        }
        // Integrand reduces to (a - b) w^{a-b-1}.
        let j = integrate_power_weight(a - b - 1.0, GJ_NODES, |_| a - b)?;
        return Ok((j, rhs));
    }
    let phi = |w: f64| {
        let u = z + y * w;
        u.powf(-b - 1.0) * (a * z + (a - b) * y * w)
    };
    let ratio = z / y;
    let h = (0.5 * ratio).min(1.0);

    let first = |n: usize| -> Result<f64> {
        // int_0^h w^{a-1} phi(w) dw = h^a int_0^1 t^{a-1} phi(h t) dt
        Ok(h.powf(a) * integrate_power_weight(a - 1.0, n, |t| phi(h * t))?)
    };
    let (xs, ws) = gauss_jacobi(GJ_NODES, 0.0, 0.0)?;
    let (xs_half, ws_half) = gauss_jacobi(GJ_NODES / 2, 0.0, 0.0)?;
    let panel = |lo: f64, hi: f64, xs: &[f64], ws: &[f64]| -> f64 {
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        xs.iter()
            .zip(ws)
            .map(|(&x, &wt)| {
                let w = mid + half * x;
                wt * w.powf(a - 1.0) * phi(w)
            })
            .sum::<f64>()
            * half
    };
    let mut fine = first(GJ_NODES)?;
    let mut coarse = first(GJ_NODES / 2)?;
    let mut lo = h;
    while lo < 1.0 {
        let hi = (2.0 * lo).min(1.0);
        fine += panel(lo, hi, &xs, &ws);
        coarse += panel(lo, hi, &xs_half, &ws_half);
        lo = hi;
    }
    let error = (fine - coarse).abs();
    let tolerance = 1e-10 * fine.abs().max(1.0);
    if !fine.is_finite() || error > tolerance {
        return Err(Error::Quadrature {
            estimate: fine,
            error,
            tolerance,
        });
    }
    Ok((rhs * fine, rhs))
}

/// One draw of `(1 - xi) Z + xi Theta` with `Z ~ Dirichlet(params)`,
/// `xi ~ Beta(1, gamma)` and `Theta = E_j` with probability `p_j`.
///
/// `params` must equal `(p_1 gamma, ..., p_d gamma, p_0 gamma)`.
pub fn sethuraman_onestep<R: Rng + ?Sized>(
    params: &Dirichlet,
    p: &[f64],
    gamma: f64,
    rng: &mut R,
) -> Result<SimplexPoint> {
    let probs = sethuraman_probs(params.dim(), p)?;
    for (j, &pj) in probs.iter().enumerate() {
        let expected = pj * gamma;
        let got = params.alpha_bary(j);
        if (got - expected).abs() > 1e-9 * expected.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "Dirichlet parameter for vertex {j} is {got}, expected p_{j} gamma = {expected}"
            )));
        }
    }
    let jump = JumpLaw::beta_one(gamma).sampler()?;
    sethuraman_draw(params, &probs, &jump, rng)
}

/// [`sethuraman_onestep`] with an arbitrary jump law and no parameter check.
pub fn sethuraman_onestep_with<R: Rng + ?Sized>(
    params: &Dirichlet,
    p: &[f64],
    jump: &JumpSampler,
    rng: &mut R,
) -> Result<SimplexPoint> {
    let probs = sethuraman_probs(params.dim(), p)?;
    sethuraman_draw(params, &probs, jump, rng)
}

fn sethuraman_probs(d: usize, p: &[f64]) -> Result<Vec<f64>> {
    if p.len() != d {
        return Err(Error::Dimension {
            expected: d,
            got: p.len(),
        });
    }
    let cf = ChoiceFunction::constant(p.to_vec())?;
    cf.probs(&SimplexPoint::origin(d))
}

fn sethuraman_draw<R: Rng + ?Sized>(
    params: &Dirichlet,
    probs: &[f64],
    jump: &JumpSampler,
    rng: &mut R,
) -> Result<SimplexPoint> {
    let z = params.sample(rng);
    let vertex = select_vertex(probs, rng.random::<f64>());
    let xi = jump.sample(rng);
    let mut coords = z.into_coords();
    for (i, c) in coords.iter_mut().enumerate() {
        *c *= 1.0 - xi;
        if i + 1 == vertex {
            *c += xi;
        }
    }
    Ok(SimplexPoint::from_vec_unchecked(coords))
}
