//! One-dimensional quadrature for integrands with algebraic endpoint
//! singularities, and iterated quadrature over the simplex.
//!
//! The workhorse is tanh-sinh (double exponential) quadrature refined level
//! by level until successive estimates agree. Each abscissa is handed to the
//! integrand together with its exact distances to both endpoints, so factors
//! such as `(u - a)^{-0.4}` can be evaluated without cancellation even when
//! the abscissa is within a few ulps of `a`.
//!
//! Gauss-Jacobi rules (Golub-Welsch) cover integrals with a known power
//! weight `w^{p}` on `[0, 1]`.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::distributions::special::ln_beta;
use crate::error::{Error, Result};

/// An abscissa together with its distances to the two endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub x: f64,
    pub from_lower: f64,
    pub from_upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Difference between the last two refinement levels.
    pub error: f64,
    pub evaluations: usize,
    pub level: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TanhSinh {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Finest level; the step is `2^{-max_level}`.
    pub max_level: usize,
    /// Levels always computed before convergence is tested.
    pub min_level: usize,
    /// Half-width of the truncated parameter range.
    pub t_max: f64,
}

impl Default for TanhSinh {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            rel_tol: 0.0,
            max_level: 10,
            min_level: 3,
            t_max: 5.9,
        }
    }
}

impl TanhSinh {
    pub fn with_tolerance(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    /// Integrates `f` over `[a, b]`.
    ///
    /// A non-finite integrand value is tolerated only at abscissae that have
    /// collapsed onto an endpoint in floating point; anything else is a
    /// domain error.
    pub fn integrate<F>(&self, a: f64, b: f64, mut f: F) -> Result<QuadResult>
    where
        F: FnMut(Node) -> f64,
    {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::Domain(format!("integration bounds [{a}, {b}]")));
        }
        if b <= a {
            return Ok(QuadResult {
                value: 0.0,
                error: 0.0,
                evaluations: 0,
                level: 0,
            });
        }
        let width = b - a;
        let half = 0.5 * width;
        let mut evaluations = 0usize;

        let mut eval = |c: f64, lower_side: bool| -> Result<f64> {
            evaluations += 1;
            let dist = half * c;
            let node = if lower_side {
                Node {
                    x: a + dist,
                    from_lower: dist,
                    from_upper: width - dist,
                }
            } else {
                Node {
                    x: b - dist,
                    from_lower: width - dist,
                    from_upper: dist,
                }
            };
            let v = f(node);
            if v.is_finite() {
                Ok(v)
            } else if node.x <= a || node.x >= b {
                Ok(0.0)
            } else {
                Err(Error::Domain(format!(
                    "integrand is {v} at interior abscissa {}",
                    node.x
                )))
            }
        };

        // Weighted sum over the nodes t = k h for the given step and parity.
        let mut level_sum = |h: f64, start: usize, stride: usize| -> Result<f64> {
            let mut sum = 0.0;
            let mut k = start;
            loop {
                let t = k as f64 * h;
                if t > self.t_max {
                    break;
                }
                let v = FRAC_PI_2 * t.sinh();
                let e = (-2.0 * v).exp();
                let c = 2.0 * e / (1.0 + e);
                let w = FRAC_PI_2 * t.cosh() * 4.0 * e / ((1.0 + e) * (1.0 + e));
                if k == 0 {
                    sum += w * eval(1.0, true)?;
                } else {
                    sum += w * (eval(c, true)? + eval(c, false)?);
                }
                k += stride;
            }
            Ok(sum)
        };

        let mut h = 1.0;
        let mut sum = level_sum(h, 0, 1)?;
        let mut estimate = half * h * sum;
        let mut last_error = f64::INFINITY;
        for level in 1..=self.max_level {
            h *= 0.5;
            sum += level_sum(h, 1, 2)?;
            let next = half * h * sum;
            let error = (next - estimate).abs();
            estimate = next;
            last_error = error;
            if level >= self.min_level && error <= self.abs_tol.max(self.rel_tol * next.abs()) {
                return Ok(QuadResult {
                    value: next,
                    error,
                    evaluations,
                    level,
                });
            }
        }
        Err(Error::Quadrature {
            estimate,
            error: last_error,
            tolerance: self.abs_tol.max(self.rel_tol * estimate.abs()),
        })
    }
}

/// Nodes and weights of the `n`-point Gauss-Jacobi rule for the weight
/// `(1 - x)^alpha (1 + x)^beta` on `[-1, 1]`, via Golub-Welsch.
pub fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "rule needs at least one node".into(),
        ));
    }
    if !(alpha > -1.0 && beta > -1.0) {
        return Err(Error::InvalidParameter(format!(
            "Jacobi exponents must exceed -1, got ({alpha}, {beta})"
        )));
    }
    let ab = alpha + beta;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let denom = (2.0 * kf + ab) * (2.0 * kf + ab + 2.0);
        jac[(k, k)] = if k == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / denom
        };
        if k + 1 < n {
            let m = kf + 1.0;
            let s = 2.0 * m + ab;
            let off = if k == 0 {
                (4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))).sqrt()
            } else {
                (4.0 * m * (m + alpha) * (m + beta) * (m + ab) / (s * s * (s + 1.0) * (s - 1.0)))
                    .sqrt()
            };
            jac[(k, k + 1)] = off;
            jac[(k + 1, k)] = off;
        }
    }
    let mu0 = ((ab + 1.0) * std::f64::consts::LN_2 + ln_beta(alpha + 1.0, beta + 1.0)).exp();
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    Ok(pairs.into_iter().unzip())
}

/// `int_0^1 w^p phi(w) dw` with an `n`-point Gauss-Jacobi rule.
pub fn integrate_power_weight<F>(p: f64, n: usize, mut phi: F) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let (nodes, weights) = gauss_jacobi(n, 0.0, p)?;
    let scale = 0.5f64.powf(p + 1.0);
    Ok(scale
        * nodes
            .iter()
            .zip(&weights)
            .map(|(&x, &w)| w * phi(0.5 * (1.0 + x)))
            .sum::<f64>())
}

/// Iterated tanh-sinh integral of `f` over `S_d`.
///
/// `f` receives full barycentric coordinates `(z_0, ..., z_d)`, each exact
/// to the precision of the quadrature nodes (in particular `z_0` is never
/// formed as `1 - sum z_j`).
pub fn integrate_simplex<F>(d: usize, rule: &TanhSinh, f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    let mut bary = vec![0.0; d + 1];
    nested(d, 1.0, rule, &f, &mut bary)
}

fn nested<F>(j: usize, remaining: f64, rule: &TanhSinh, f: &F, bary: &mut Vec<f64>) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    if j == 0 {
        bary[0] = remaining;
        return Ok(f(bary));
    }
    let mut inner_err = None;
    let res = rule.integrate(0.0, remaining, |node| {
        if inner_err.is_some() {
            return 0.0;
        }
        bary[j] = node.from_lower;
        match nested(j - 1, node.from_upper, rule, f, bary) {
            Ok(v) => v,
            Err(e) => {
                inner_err = Some(e);
                0.0
            }
        }
    });
    if let Some(e) = inner_err {
        return Err(e);
    }
    Ok(res?.value)
}
