//! The walk `Z_{n+1} = (1 - xi_n) Z_n + xi_n Theta_n` on `S_d`.
//!
//! `Theta_n` is the vertex `E_j` with probability `p_j(Z_n)`; the vertex is
//! chosen by inverting the cumulative sums of `(p_0, ..., p_d)` with a single
//! uniform variate, and the jump fraction is drawn afterwards.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{JumpLaw, JumpSampler};
use crate::error::{Error, Result};
use crate::geometry::SimplexPoint;
use crate::rng::RngStream;
use crate::TOL;

type CustomFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// User-supplied choice function.
///
/// The closure receives barycentric coordinates `(z_0, ..., z_d)` and
/// returns `(p_1, ..., p_d)`.
#[derive(Clone)]
pub struct CustomChoice {
    pub label: String,
    pub dim: usize,
    pub eval: Arc<CustomFn>,
}

impl fmt::Debug for CustomChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomChoice")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

/// Vertex selection probabilities as a function of the current position.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChoiceFunction {
    /// `p_j(z) = p[j-1]` for `j = 1..=d`.
    Constant { p: Vec<f64> },
    /// `p_k(z) = beta_k (1 - z_k) + (1 - B + beta_k) z_k` with `B = sum beta`;
    /// `beta[d]` is attached to the origin vertex.
    Linear { beta: Vec<f64> },
    /// `d = 1` only: `p_1(z) = values[i]` where `i` counts the breakpoints
    /// `<= z`.
    #[serde(rename = "piecewise_1d")]
    Piecewise1D {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    #[serde(skip)]
    Custom(CustomChoice),
}

impl ChoiceFunction {
    pub fn constant(p: Vec<f64>) -> Result<Self> {
        let cf = ChoiceFunction::Constant { p };
        cf.validate()?;
        Ok(cf)
    }

    pub fn linear(beta: Vec<f64>) -> Result<Self> {
        let cf = ChoiceFunction::Linear { beta };
        cf.validate()?;
        Ok(cf)
    }

    pub fn custom<F>(dim: usize, label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        ChoiceFunction::Custom(CustomChoice {
            label: label.into(),
            dim,
            eval: Arc::new(f),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            ChoiceFunction::Constant { p } => p.len(),
            ChoiceFunction::Linear { beta } => beta.len().saturating_sub(1),
            ChoiceFunction::Piecewise1D { .. } => 1,
            ChoiceFunction::Custom(c) => c.dim,
        }
    }

    /// True when every `p_j` is an affine function of `z`.
    pub fn is_affine(&self) -> bool {
        matches!(
            self,
            ChoiceFunction::Constant { .. } | ChoiceFunction::Linear { .. }
        )
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match self {
            ChoiceFunction::Constant { p } => {
                if p.is_empty() {
                    return bad("constant choice needs d >= 1 probabilities".into());
                }
                if p.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                    return bad(format!("probabilities {p:?} outside [0,1]"));
                }
                if p.iter().sum::<f64>() > 1.0 + TOL {
                    return bad(format!("probabilities {p:?} sum above 1"));
                }
            }
            ChoiceFunction::Linear { beta } => {
                if beta.len() < 2 {
                    return bad("linear choice needs d + 1 >= 2 coefficients".into());
                }
                if beta.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
                    return bad(format!("coefficients {beta:?} must be positive"));
                }
                let total: f64 = beta.iter().sum();
                if let Some(k) = beta.iter().position(|&b| total - b >= 1.0) {
                    return bad(format!(
                        "sum of coefficients other than beta_{} is {} >= 1",
                        k + 1,
                        total - beta[k]
                    ));
                }
            }
            ChoiceFunction::Piecewise1D {
                breakpoints,
                values,
            } => {
                if values.len() != breakpoints.len() + 1 {
                    return bad(format!(
                        "{} breakpoints need {} values, got {}",
                        breakpoints.len(),
                        breakpoints.len() + 1,
                        values.len()
                    ));
                }
                if breakpoints.windows(2).any(|w| !(w[0] < w[1]))
                    || breakpoints.iter().any(|&b| !(0.0..=1.0).contains(&b))
                {
                    return bad("breakpoints must be increasing inside [0,1]".into());
                }
                if values.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                    return bad(format!("values {values:?} outside [0,1]"));
                }
            }
            ChoiceFunction::Custom(c) => {
                if c.dim == 0 {
                    return bad("custom choice needs d >= 1".into());
                }
            }
        }
        Ok(())
    }

    /// `(p_0, ..., p_d)` at barycentric coordinates `(z_0, ..., z_d)`.
    pub fn probs_bary(&self, bary: &[f64]) -> Result<Vec<f64>> {
        let d = self.dim();
        if bary.len() != d + 1 {
            return Err(Error::Dimension {
                expected: d + 1,
                got: bary.len(),
            });
        }
        let mut p = vec![0.0; d + 1];
        match self {
            ChoiceFunction::Constant { p: c } => {
                p[1..].copy_from_slice(c);
                p[0] = 1.0 - c.iter().sum::<f64>();
            }
            ChoiceFunction::Linear { beta } => {
                let total: f64 = beta.iter().sum();
                for (k, pk) in p.iter_mut().enumerate() {
                    // p_0 uses the last coefficient.
                    let b = if k == 0 { beta[d] } else { beta[k - 1] };
                    let z = bary[k];
                    *pk = b * (1.0 - z) + (1.0 - total + b) * z;
                }
            }
            ChoiceFunction::Piecewise1D {
                breakpoints,
                values,
            } => {
                let i = breakpoints.partition_point(|&b| b <= bary[1]);
                p[1] = values[i];
                p[0] = 1.0 - values[i];
            }
            ChoiceFunction::Custom(c) => {
                let out = (c.eval)(bary);
                if out.len() != d {
                    return Err(Error::Dimension {
                        expected: d,
                        got: out.len(),
                    });
                }
                p[1..].copy_from_slice(&out);
                p[0] = 1.0 - out.iter().sum::<f64>();
            }
        }
        let sum: f64 = p.iter().sum();
        if p.iter().any(|&x| !(-TOL..=1.0 + TOL).contains(&x)) || (sum - 1.0).abs() > TOL {
            return Err(Error::InvalidParameter(format!(
                "choice probabilities {p:?} leave the simplex"
            )));
        }
        for x in &mut p {
            *x = x.clamp(0.0, 1.0);
        }
        Ok(p)
    }

    /// `(p_0, ..., p_d)` at `z`.
    pub fn probs(&self, z: &SimplexPoint) -> Result<Vec<f64>> {
        self.probs_bary(&z.barycentric())
    }
}

/// `(p_0, ..., p_d)` at `z`.
pub fn choice_probs(cf: &ChoiceFunction, z: &SimplexPoint) -> Result<Vec<f64>> {
    cf.probs(z)
}

/// Index `j` of the first cumulative sum of `p` that exceeds `u`.
pub(crate) fn select_vertex(p: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (j, &pj) in p.iter().enumerate() {
        acc += pj;
        if u < acc {
            return j;
        }
    }
    // Round-off left `u` above the total: take the last vertex with mass.
    p.iter().rposition(|&pj| pj > 0.0).unwrap_or(0)
}

/// Full description of a walk or an ensemble of independent walks.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub d: usize,
    pub choice: ChoiceFunction,
    pub jump: JumpLaw,
    /// Defaults to the barycenter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<SimplexPoint>,
    pub steps: u64,
    /// Defaults to `steps / 2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<u64>,
    #[serde(default = "one")]
    pub thinning: u64,
    #[serde(default = "one_usize")]
    pub ensemble: usize,
    pub seed: u64,
}

fn one() -> u64 {
    1
}

fn one_usize() -> usize {
    1
}

impl ChainConfig {
    pub fn new(choice: ChoiceFunction, jump: JumpLaw, steps: u64, seed: u64) -> Self {
        Self {
            d: choice.dim(),
            choice,
            jump,
            initial: None,
            steps,
            burn_in: None,
            thinning: 1,
            ensemble: 1,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        self.choice.validate()?;
        if self.choice.dim() != self.d {
            return Err(Error::Dimension {
                expected: self.d,
                got: self.choice.dim(),
            });
        }
        self.jump.validate()?;
        if let Some(z) = &self.initial {
            if z.dim() != self.d {
                return Err(Error::Dimension {
                    expected: self.d,
                    got: z.dim(),
                });
            }
            SimplexPoint::new(z.coords().to_vec())?;
        }
        if self.thinning == 0 {
            return Err(Error::InvalidParameter("thinning must be >= 1".into()));
        }
        if self.ensemble == 0 {
            return Err(Error::InvalidParameter("ensemble must be >= 1".into()));
        }
        if self.burn_in() > self.steps {
            return Err(Error::InvalidParameter(format!(
                "burn_in {} exceeds steps {}",
                self.burn_in(),
                self.steps
            )));
        }
        Ok(())
    }

    pub fn initial_point(&self) -> SimplexPoint {
        self.initial
            .clone()
            .unwrap_or_else(|| SimplexPoint::barycenter(self.d))
    }

    pub fn burn_in(&self) -> u64 {
        self.burn_in.unwrap_or(self.steps / 2)
    }
}

/// Position of one walk after `n` steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub z: SimplexPoint,
    pub n: u64,
    /// Vertex chosen on the most recent step; `None` before the first step.
    pub last_vertex: Option<usize>,
}

impl ChainState {
    pub fn initial(z: SimplexPoint) -> Self {
        Self {
            z,
            n: 0,
            last_vertex: None,
        }
    }
}

/// Moves `z` in place; returns the chosen vertex.
///
/// Consumes one uniform for the vertex, then the variates of one jump.
pub(crate) fn advance<R: Rng + ?Sized>(
    z: &mut [f64],
    bary: &mut Vec<f64>,
    cf: &ChoiceFunction,
    jump: &JumpSampler,
    rng: &mut R,
) -> Result<usize> {
    bary.clear();
    bary.push(1.0 - z.iter().sum::<f64>());
    bary.extend_from_slice(z);
    let p = cf.probs_bary(bary)?;
    let vertex = select_vertex(&p, rng.random::<f64>());
    let xi = jump.sample(rng);
    let keep = 1.0 - xi;
    for (i, zi) in z.iter_mut().enumerate() {
        *zi *= keep;
        if i + 1 == vertex {
            *zi += xi;
        }
    }
    Ok(vertex)
}

/// One step of the walk.
pub fn step<R: Rng + ?Sized>(
    state: &ChainState,
    cf: &ChoiceFunction,
    jump: &JumpLaw,
    rng: &mut R,
) -> Result<ChainState> {
    step_with(state, cf, &jump.sampler()?, rng)
}

/// [`step`] with a prepared jump sampler.
pub fn step_with<R: Rng + ?Sized>(
    state: &ChainState,
    cf: &ChoiceFunction,
    jump: &JumpSampler,
    rng: &mut R,
) -> Result<ChainState> {
    let mut z = state.z.coords().to_vec();
    let mut bary = Vec::with_capacity(z.len() + 1);
    let vertex = advance(&mut z, &mut bary, cf, jump, rng)?;
    Ok(ChainState {
        z: SimplexPoint::from_vec_unchecked(z),
        n: state.n + 1,
        last_vertex: Some(vertex),
    })
}

/// A single trajectory on stream 0.
///
/// Records the states with `n >= burn_in` and `(n - burn_in)` divisible by
/// `thinning`.
pub fn run_chain(config: &ChainConfig) -> Result<Vec<ChainState>> {
    config.validate()?;
    let jump = config.jump.sampler()?;
    let mut rng = RngStream::new(config.seed, 0);
    let burn_in = config.burn_in();
    let mut state = ChainState::initial(config.initial_point());
    let mut out = Vec::new();
    let keep = |n: u64| n >= burn_in && (n - burn_in).is_multiple_of(config.thinning);
    if keep(0) {
        out.push(state.clone());
    }
    for _ in 0..config.steps {
        state = step_with(&state, &config.choice, &jump, &mut rng)?;
        if keep(state.n) {
            out.push(state.clone());
        }
    }
    Ok(out)
}

/// Terminal state of chain `index` (stream `index`).
pub fn run_terminal(config: &ChainConfig, jump: &JumpSampler, index: u64) -> Result<SimplexPoint> {
    let mut rng = RngStream::new(config.seed, index);
    let mut z = config.initial_point().into_coords();
    let mut bary = Vec::with_capacity(z.len() + 1);
    for _ in 0..config.steps {
        advance(&mut z, &mut bary, &config.choice, jump, &mut rng)?;
    }
    Ok(SimplexPoint::from_vec_unchecked(z))
}

/// Terminal states of `config.ensemble` independent chains, chain `i` on
/// stream `i`, ordered by chain index.
///
/// Runs on the current rayon pool; the output does not depend on its size.
pub fn run_ensemble(config: &ChainConfig) -> Result<Vec<SimplexPoint>> {
    config.validate()?;
    let jump = config.jump.sampler()?;
    (0..config.ensemble as u64)
        .into_par_iter()
        .map(|i| run_terminal(config, &jump, i))
        .collect()
}
