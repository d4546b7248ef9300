//! Jump laws on `[0,1]`, the Dirichlet family on the simplex, and the
//! arcsine law.
//!
//! Densities are evaluated in log space. Beta variates are drawn as a ratio
//! of Gamma variates for every shape; Dirichlet variates as normalized
//! independent Gamma variates.

pub mod special;

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SimplexPoint;
use crate::TOL;

pub use special::{beta_inc, gamma_inc_lower, gamma_inc_upper, ln_beta, ln_gamma};

/// Law of the jump fraction `xi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpLaw {
    Beta {
        a: f64,
        b: f64,
    },
    /// Identical to `Beta { a: 1, b: 1 }` in every evaluation.
    Uniform,
    PointMass {
        value: f64,
    },
}

impl JumpLaw {
    /// `Beta(1, gamma)`, the law under which Dirichlet limits appear.
    pub fn beta_one(gamma: f64) -> Self {
        JumpLaw::Beta { a: 1.0, b: gamma }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            JumpLaw::Beta { a, b } => {
                if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "Beta shapes must be positive, got ({a}, {b})"
                    )));
                }
            }
            JumpLaw::Uniform => {}
            JumpLaw::PointMass { value } => {
                if !(0.0..=1.0).contains(&value) {
                    return Err(Error::InvalidParameter(format!(
                        "point mass at {value} outside [0,1]"
                    )));
                }
            }
        }
        Ok(())
    }

    fn shapes(&self) -> Option<(f64, f64)> {
        match *self {
            JumpLaw::Beta { a, b } => Some((a, b)),
            JumpLaw::Uniform => Some((1.0, 1.0)),
            JumpLaw::PointMass { .. } => None,
        }
    }

    pub fn has_density(&self) -> bool {
        self.shapes().is_some()
    }

    /// Prepared sampler; validates the parameters once.
    pub fn sampler(&self) -> Result<JumpSampler> {
        self.validate()?;
        Ok(match *self {
            JumpLaw::Beta { a, b } => JumpSampler::Beta {
                x: gamma(a)?,
                y: gamma(b)?,
            },
            JumpLaw::Uniform => JumpSampler::Uniform,
            JumpLaw::PointMass { value } => JumpSampler::PointMass(value),
        })
    }

    /// Density at `x`; `+inf` at an endpoint where a shape is below one.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("x = {x} outside [0,1]")));
        }
        self.pdf_split(x, 1.0 - x)
    }

    /// Density at `x` with the complement `1 - x` supplied separately, so
    /// that singular endpoint factors keep full relative precision.
    pub fn pdf_split(&self, x: f64, one_minus_x: f64) -> Result<f64> {
        let (a, b) = self
            .shapes()
            .ok_or_else(|| Error::UndefinedDensity(format!("{self:?} has no Lebesgue density")))?;
        Ok(beta_ln_pdf(a, b, x, one_minus_x).exp())
    }

    /// `P(xi <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self.shapes() {
            Some((a, b)) => special::beta_inc_pair(a, b, x, 1.0 - x).0,
            None => {
                let JumpLaw::PointMass { value } = *self else {
                    unreachable!()
                };
                if value <= x {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `P(xi >= x)`.
    pub fn tail(&self, x: f64) -> f64 {
        self.tail_split(x, 1.0 - x)
    }

    /// `P(xi >= x)` with `1 - x` supplied separately.
    pub fn tail_split(&self, x: f64, one_minus_x: f64) -> f64 {
        match *self {
            JumpLaw::PointMass { value } => {
                if value >= x {
                    1.0
                } else {
                    0.0
                }
            }
            _ => {
                let (a, b) = self.shapes().expect("continuous law");
                special::beta_inc_pair(a, b, x, one_minus_x).1
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            JumpLaw::Beta { a, b } => a / (a + b),
            JumpLaw::Uniform => 0.5,
            JumpLaw::PointMass { value } => value,
        }
    }
}

fn gamma(shape: f64) -> Result<Gamma<f64>> {
    Gamma::new(shape, 1.0).map_err(|e| Error::InvalidParameter(format!("Gamma({shape}): {e}")))
}

/// Log density of `Beta(a, b)` at `x`, with `y = 1 - x`.
pub(crate) fn beta_ln_pdf(a: f64, b: f64, x: f64, y: f64) -> f64 {
    let term = |shape: f64, v: f64| {
        if shape == 1.0 {
            0.0
        } else if v <= 0.0 {
            if shape < 1.0 {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            }
        } else {
            (shape - 1.0) * v.ln()
        }
    };
    term(a, x) + term(b, y) - ln_beta(a, b)
}

/// A [`JumpLaw`] with its Gamma samplers built.
#[derive(Debug, Clone)]
pub enum JumpSampler {
    Beta { x: Gamma<f64>, y: Gamma<f64> },
    Uniform,
    PointMass(f64),
}

impl JumpSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            JumpSampler::Beta { x, y } => loop {
                let gx = x.sample(rng);
                let gy = y.sample(rng);
                let s = gx + gy;
                if s > 0.0 {
                    break gx / s;
                }
            },
            JumpSampler::Uniform => rng.random::<f64>(),
            JumpSampler::PointMass(v) => *v,
        }
    }
}

/// Draws one jump fraction.
pub fn sample_jump<R: Rng + ?Sized>(law: &JumpLaw, rng: &mut R) -> Result<f64> {
    Ok(law.sampler()?.sample(rng))
}

pub fn jump_pdf(law: &JumpLaw, x: f64) -> Result<f64> {
    law.pdf(x)
}

pub fn jump_tail(law: &JumpLaw, x: f64) -> f64 {
    law.tail(x)
}

/// `Dirichlet(alpha_1, ..., alpha_{d+1})` on `S_d`.
///
/// `alpha_i` belongs to `z_i` for `i <= d` and the last parameter belongs to
/// the implied coordinate `z_0 = 1 - sum z_j`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Dirichlet {
    alpha: Vec<f64>,
    ln_norm: f64,
    gammas: Vec<Gamma<f64>>,
}

impl PartialEq for Dirichlet {
    fn eq(&self, other: &Self) -> bool {
        self.alpha == other.alpha
    }
}

impl TryFrom<Vec<f64>> for Dirichlet {
    type Error = Error;

    fn try_from(alpha: Vec<f64>) -> Result<Self> {
        Dirichlet::new(alpha)
    }
}

impl From<Dirichlet> for Vec<f64> {
    fn from(d: Dirichlet) -> Self {
        d.alpha
    }
}

impl Dirichlet {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.len() < 2 {
            return Err(Error::InvalidParameter(
                "Dirichlet needs at least two parameters".into(),
            ));
        }
        if let Some(a) = alpha.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "Dirichlet parameter {a} is not positive"
            )));
        }
        let total: f64 = alpha.iter().sum();
        let ln_norm = ln_gamma(total) - alpha.iter().map(|&a| ln_gamma(a)).sum::<f64>();
        let gammas = alpha.iter().map(|&a| gamma(a)).collect::<Result<_>>()?;
        Ok(Self {
            alpha,
            ln_norm,
            gammas,
        })
    }

    /// Symmetric `Dirichlet(a, ..., a)` on `S_d`.
    pub fn symmetric(d: usize, a: f64) -> Result<Self> {
        Self::new(vec![a; d + 1])
    }

    /// Dimension `d` of the simplex carrying the law.
    pub fn dim(&self) -> usize {
        self.alpha.len() - 1
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn total(&self) -> f64 {
        self.alpha.iter().sum()
    }

    /// Parameter attached to barycentric coordinate `j`.
    pub fn alpha_bary(&self, j: usize) -> f64 {
        if j == 0 {
            self.alpha[self.dim()]
        } else {
            self.alpha[j - 1]
        }
    }

    /// Log density at full barycentric coordinates `(z_0, ..., z_d)`.
    pub fn ln_pdf_barycentric(&self, bary: &[f64]) -> Result<f64> {
        if bary.len() != self.alpha.len() {
            return Err(Error::Dimension {
                expected: self.alpha.len(),
                got: bary.len(),
            });
        }
        let mut acc = self.ln_norm;
        for (j, &v) in bary.iter().enumerate() {
            let a = self.alpha_bary(j);
            if v < -TOL {
                return Err(Error::Domain(format!("barycentric coordinate {j} = {v}")));
            }
            if a == 1.0 {
                continue;
            }
            if v <= 0.0 {
                if a < 1.0 {
                    return Err(Error::Domain(format!(
                        "density unbounded on the face z_{j} = 0"
                    )));
                }
                return Ok(f64::NEG_INFINITY);
            }
            acc += (a - 1.0) * v.ln();
        }
        Ok(acc)
    }

    pub fn pdf_barycentric(&self, bary: &[f64]) -> Result<f64> {
        self.ln_pdf_barycentric(bary).map(f64::exp)
    }

    pub fn ln_pdf(&self, z: &SimplexPoint) -> Result<f64> {
        self.ln_pdf_barycentric(&z.barycentric())
    }

    pub fn pdf(&self, z: &SimplexPoint) -> Result<f64> {
        self.ln_pdf(z).map(f64::exp)
    }

    /// One variate, as normalized independent `Gamma(alpha_i, 1)` draws.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SimplexPoint {
        let d = self.dim();
        loop {
            let g: Vec<f64> = self.gammas.iter().map(|gm| gm.sample(rng)).collect();
            let total: f64 = g.iter().sum();
            if total > 0.0 {
                return SimplexPoint::from_vec_unchecked(
                    g[..d].iter().map(|x| x / total).collect(),
                );
            }
        }
    }

    /// Mean of `(z_1, ..., z_d)`.
    pub fn mean(&self) -> Vec<f64> {
        // 1 / sum_k (alpha_k / alpha_i) is exact when the parameters coincide.
        self.alpha[..self.dim()]
            .iter()
            .map(|&a| 1.0 / self.alpha.iter().map(|&b| b / a).sum::<f64>())
            .collect()
    }

    /// Covariance matrix of `(z_1, ..., z_d)`, row-major.
    pub fn covariance(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        let total = self.total();
        let scale = total * total * (total + 1.0);
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        let (ai, aj) = (self.alpha[i], self.alpha[j]);
                        if i == j {
                            ai * (total - ai) / scale
                        } else {
                            -ai * aj / scale
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Beta law of the coordinate `z_i`, `i` in barycentric numbering.
    pub fn marginal(&self, i: usize) -> JumpLaw {
        let a = self.alpha_bary(i);
        JumpLaw::Beta {
            a,
            b: self.total() - a,
        }
    }
}

pub fn dirichlet_pdf(params: &Dirichlet, z: &SimplexPoint) -> Result<f64> {
    params.pdf(z)
}

pub fn sample_dirichlet<R: Rng + ?Sized>(params: &Dirichlet, rng: &mut R) -> SimplexPoint {
    params.sample(rng)
}

/// Mean vector and covariance matrix of `(z_1, ..., z_d)`.
pub fn dirichlet_moments(params: &Dirichlet) -> (Vec<f64>, Vec<Vec<f64>>) {
    (params.mean(), params.covariance())
}

/// CDF of the arcsine law `Beta(1/2, 1/2)`, `(2/pi) asin(sqrt(x))`.
pub fn arcsine_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        2.0 / PI * x.sqrt().asin()
    }
}

/// Density of the arcsine law.
pub fn arcsine_pdf(x: f64) -> f64 {
    1.0 / (PI * (x * (1.0 - x)).sqrt())
}
