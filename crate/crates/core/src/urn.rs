//! The urn-driven walk on `[0, 1]` with identity weights and uniform jumps.
//!
//! From state `(Z, L, R)` the walk moves left with probability
//! `zeta = L / (L + R)`: `L += Z`, `Z <- xi Z`. Otherwise it moves right:
//! `R += 1 - Z`, `Z <- (1 - xi) Z + xi`. Each step consumes two uniforms,
//! the direction variate first.
//!
//! Also provided: the Lyapunov function
//! `W = (1/2 - (L + Z)/(L + R))^2 + 1/(L + R)`, its one-step drift in closed
//! form and from first principles, and the frozen-threshold walks that
//! sandwich `Z` once `zeta` has settled near `1/2`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UrnState {
    pub z: f64,
    pub l: f64,
    pub r: f64,
    pub n: u64,
}

impl UrnState {
    /// `L_1 = R_1 = 1` at step `n = 1`.
    pub fn initial(z: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&z) {
            return Err(Error::Domain(format!("initial position {z} outside [0,1]")));
        }
        Ok(Self {
            z,
            l: 1.0,
            r: 1.0,
            n: 1,
        })
    }

    /// The state with the given `zeta`, `eps = 1/(L+R)` and position.
    pub fn from_zeta_eps(zeta: f64, eps: f64, z: f64) -> Self {
        Self {
            z,
            l: zeta / eps,
            r: (1.0 - zeta) / eps,
            n: 1,
        }
    }

    pub fn total(&self) -> f64 {
        self.l + self.r
    }

    pub fn zeta(&self) -> f64 {
        self.l / (self.l + self.r)
    }

    pub fn eps(&self) -> f64 {
        1.0 / (self.l + self.r)
    }
}

/// Left move: shrink toward 0.
#[inline]
fn move_left(z: f64, xi: f64) -> f64 {
    xi * z
}

/// Right move: `z + xi (1 - z)` written as `(1 - xi) z + xi`, which is
/// nondecreasing in `z` under rounding as well.
#[inline]
fn move_right(z: f64, xi: f64) -> f64 {
    (1.0 - xi) * z + xi
}

pub fn urn_step<R: Rng + ?Sized>(state: &UrnState, rng: &mut R) -> UrnState {
    let u = rng.random::<f64>();
    let xi = rng.random::<f64>();
    step_with(state, u, xi)
}

fn step_with(state: &UrnState, u: f64, xi: f64) -> UrnState {
    let mut next = *state;
    next.n += 1;
    if u < state.zeta() {
        next.l += state.z;
        next.z = move_left(state.z, xi);
    } else {
        next.r += 1.0 - state.z;
        next.z = move_right(state.z, xi);
    }
    next
}

#[allow(non_snake_case)]
pub fn lyapunov_W(state: &UrnState) -> f64 {
    let s = state.total();
    let a = 0.5 - (state.l + state.z) / s;
    a * a + 1.0 / s
}

/// `r_0` in expanded form.
pub fn r0_expanded(zeta: f64, z: f64) -> f64 {
    let (x, y) = (zeta, z);
    -24.0 * y * x.powi(3) + 36.0 * y * x * x + 12.0 * x.powi(3) - 18.0 * y * x - 24.0 * x * x
        + 3.0 * y
        + 15.0 * x
        - 3.0
}

/// `r_0 = -3 (2 zeta - 1)^2 (zeta z + (1 - z)(1 - zeta))`.
pub fn r0_factored(zeta: f64, z: f64) -> f64 {
    let t = 2.0 * zeta - 1.0;
    -3.0 * t * t * (zeta * z + (1.0 - z) * (1.0 - zeta))
}

/// `(r_0, ..., r_5)` at `(zeta, z)`.
///
/// `r_5 = -6 z^4 (1 - z)^2` is the `eps^5` coefficient of the exact drift;
/// [`drift_eps_coefficients`] recovers it from [`drift_oracle`].
pub fn drift_polynomials(zeta: f64, z: f64) -> [f64; 6] {
    let (x, y) = (zeta, z);
    let r0 = r0_expanded(x, y);
    debug_assert!((r0 - r0_factored(x, y)).abs() <= 1e-12);
    let (x2, x3) = (x * x, x * x * x);
    let (y2, y3, y4) = (y * y, y * y * y, y * y * y * y);
    let r1 = -30.0 * y2 * x2 - 12.0 * y * x3 + 30.0 * y2 * x + 24.0 * y * x2 + 6.0 * x3
        - 7.0 * y2
        - 38.0 * y * x
        - 12.0 * x2
        + 14.0 * y
        + 13.0 * x
        - 7.0;
    let r2 = 10.0 * y3 * x - 12.0 * y2 * x2 - 5.0 * y3 - 9.0 * y2 * x + 7.0 * y2 - 19.0 * y * x
        + 4.0 * y
        + 6.0 * x
        - 6.0;
    let r3 = -y
        * (6.0 * y3 * x2 - 6.0 * y3 * x - 12.0 * y2 * x2 - 17.0 * y3 - 12.0 * y2 * x
            + 6.0 * y * x2
            + 28.0 * y2
            + 30.0 * y * x
            - 23.0 * y
            - 6.0 * x
            + 12.0);
    let r4 = -6.0 * y2 * (1.0 - y) * (y2 + 2.0 * y * x * (1.0 - y) + 1.0);
    let r5 = -6.0 * y4 * (1.0 - y) * (1.0 - y);
    [r0, r1, r2, r3, r4, r5]
}

/// `E(W_{n+1} - W_n | zeta, z, eps)` from the drift polynomials.
pub fn drift_closed_form(zeta: f64, z: f64, eps: f64) -> f64 {
    let r = drift_polynomials(zeta, z);
    let poly = r.iter().rev().fold(0.0, |acc, &c| acc * eps + c);
    let a = eps * z + 1.0;
    let b = 1.0 + eps * (1.0 - z);
    eps * poly / (6.0 * a * a * b * b)
}

/// Mean of `phi^2` over an interval on which `phi` is affine with end values
/// `pa`, `pb`.
fn mean_square(pa: f64, pb: f64) -> f64 {
    (pa * pa + pa * pb + pb * pb) / 3.0
}

/// `E(W_{n+1} - W_n | zeta, z, eps)` computed directly from the transition.
///
/// With `L = zeta/eps` and `R = (1 - zeta)/eps`, a left move gives
/// `W' = (1/2 - (L + z + u)/(S + z))^2 + 1/(S + z)` with `u` uniform on
/// `(0, z)`, a right move `W' = (1/2 - (L + u)/(S + 1 - z))^2 + 1/(S + 1 - z)`
/// with `u` uniform on `(z, 1)`. Both averages are exact.
pub fn drift_oracle(zeta: f64, z: f64, eps: f64) -> f64 {
    // All ratios are rescaled by eps so nothing grows like 1/eps.
    let sl = 1.0 + eps * z;
    let left = mean_square(
        0.5 - (zeta + eps * z) / sl,
        0.5 - (zeta + 2.0 * eps * z) / sl,
    ) + eps / sl;
    let sr = 1.0 + eps * (1.0 - z);
    let right = mean_square(0.5 - (zeta + eps * z) / sr, 0.5 - (zeta + eps) / sr) + eps / sr;
    let a = 0.5 - (zeta + eps * z);
    let w = a * a + eps;
    zeta * left + (1.0 - zeta) * right - w
}

/// Coefficients `(c_0, ..., c_5)` of the numerator polynomial
/// `6 (eps z + 1)^2 (1 + eps (1 - z))^2 drift_oracle / eps` in `eps`,
/// recovered by interpolation at `eps = 1, ..., 6`.
///
/// The oracle is a rational function of `eps` for every positive `eps`, so
/// the nodes need not be physical values.
pub fn drift_eps_coefficients(zeta: f64, z: f64) -> [f64; 6] {
    let xs: [f64; 6] = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let mut c = xs.map(|e| {
        let a = e * z + 1.0;
        let b = 1.0 + e * (1.0 - z);
        6.0 * a * a * b * b * drift_oracle(zeta, z, e) / e
    });
    // Newton divided differences.
    for k in 1..6 {
        for i in (k..6).rev() {
            c[i] = (c[i] - c[i - 1]) / (xs[i] - xs[i - k]);
        }
    }
    // Newton form to monomial coefficients.
    let mut mono = [0.0; 6];
    for k in (0..6).rev() {
        // mono <- mono * (x - xs[k]) + c[k]
        let mut next = [0.0; 6];
        for i in 0..6 {
            if i + 1 < 6 {
                next[i + 1] += mono[i];
            }
            next[i] -= xs[k] * mono[i];
        }
        next[0] += c[k];
        mono = next;
    }
    mono
}

/// One recorded row of an urn trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UrnRecord {
    pub n: u64,
    pub z: f64,
    pub l: f64,
    pub r: f64,
    pub zeta: f64,
    pub w: f64,
}

impl From<&UrnState> for UrnRecord {
    fn from(s: &UrnState) -> Self {
        Self {
            n: s.n,
            z: s.z,
            l: s.l,
            r: s.r,
            zeta: s.zeta(),
            w: lyapunov_W(s),
        }
    }
}

fn check_record_every(record_every: u64) -> Result<()> {
    if record_every == 0 {
        return Err(Error::InvalidParameter("record_every must be >= 1".into()));
    }
    Ok(())
}

/// Trajectory from `n = 1` to `n = steps` on `(seed, stream)`, recording
/// the states with `(n - 1) % record_every == 0` and always the last one.
pub fn run_urn_stream(
    steps: u64,
    seed: u64,
    stream: u64,
    record_every: u64,
    z1: f64,
) -> Result<Vec<UrnRecord>> {
    if steps == 0 {
        return Err(Error::InvalidParameter("urn runs need n >= 1".into()));
    }
    check_record_every(record_every)?;
    let mut rng = RngStream::new(seed, stream);
    let mut s = UrnState::initial(z1)?;
    let mut out = vec![UrnRecord::from(&s)];
    while s.n < steps {
        s = urn_step(&s, &mut rng);
        if (s.n - 1) % record_every == 0 || s.n == steps {
            out.push(UrnRecord::from(&s));
        }
    }
    Ok(out)
}

/// [`run_urn_stream`] on stream 0 with `Z_1 = 1/2`.
pub fn run_urn(steps: u64, seed: u64, record_every: u64) -> Result<Vec<UrnRecord>> {
    run_urn_stream(steps, seed, 0, record_every, 0.5)
}

/// States of `runs` independent walks (run `i` on stream `i`) at each of the
/// given checkpoints, which must be increasing and `>= 1`.
pub fn urn_checkpoints(
    runs: usize,
    seed: u64,
    z1: f64,
    checkpoints: &[u64],
) -> Result<Vec<Vec<UrnState>>> {
    if checkpoints.is_empty() || checkpoints[0] == 0 || checkpoints.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(Error::InvalidParameter(
            "checkpoints must be increasing and >= 1".into(),
        ));
    }
    let start = UrnState::initial(z1)?;
    Ok((0..runs as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(seed, i);
            let mut s = start;
            let mut out = Vec::with_capacity(checkpoints.len());
            for &c in checkpoints {
                while s.n < c {
                    s = urn_step(&s, &mut rng);
                }
                out.push(s);
            }
            out
        })
        .collect())
}

/// Parameters of the coupled triple `(Z_hat, Z, Z_tilde)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    pub n_total: u64,
    #[serde(rename = "N0")]
    pub n0: u64,
    pub eps_band: f64,
    pub seed: u64,
}

impl CouplingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_band >= 0.0 && self.eps_band < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "eps_band = {} outside [0, 1/2)",
                self.eps_band
            )));
        }
        if self.n0 == 0 || self.n0 >= self.n_total {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= N0 < n_total, got N0 = {}, n_total = {}",
                self.n0, self.n_total
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledRecord {
    pub n: u64,
    pub z: f64,
    pub l: f64,
    pub r: f64,
    pub zeta: f64,
    pub w: f64,
    pub z_tilde: f64,
    pub z_hat: f64,
    pub sandwich_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledRun {
    pub records: Vec<CoupledRecord>,
    /// `zeta_n` stayed in `[1/2 - eps_band, 1/2 + eps_band]` for every
    /// `n >= N0`.
    pub band_event: bool,
    /// Steps `n >= N0` at which `Z_hat <= Z <= Z_tilde` failed.
    pub sandwich_violations: u64,
    pub terminal: UrnState,
    pub z_tilde: f64,
    pub z_hat: f64,
}

/// Runs the urn walk and the two frozen-threshold walks on shared
/// `(U_n, xi_n)`. The three coincide up to `N0`; afterwards `Z_tilde` moves
/// left iff `U_n <= 1/2 - eps_band` and `Z_hat` iff `U_n <= 1/2 + eps_band`.
///
/// Every step is checked; `records` holds every `record_every`-th one.
pub fn coupled_run(
    config: &CouplingConfig,
    stream: u64,
    record_every: u64,
    z1: f64,
) -> Result<CoupledRun> {
    config.validate()?;
    check_record_every(record_every)?;
    let mut rng = RngStream::new(config.seed, stream);
    let mut s = UrnState::initial(z1)?;
    let (lo, hi) = (0.5 - config.eps_band, 0.5 + config.eps_band);
    let (mut zt, mut zh) = (s.z, s.z);
    let mut band = true;
    let mut violations = 0u64;
    let mut records = Vec::new();
    let push = |s: &UrnState, zt: f64, zh: f64, records: &mut Vec<CoupledRecord>| {
        let ok = zh <= s.z && s.z <= zt;
        records.push(CoupledRecord {
            n: s.n,
            z: s.z,
            l: s.l,
            r: s.r,
            zeta: s.zeta(),
            w: lyapunov_W(s),
            z_tilde: zt,
            z_hat: zh,
            sandwich_ok: ok,
        });
    };
    push(&s, zt, zh, &mut records);
    while s.n < config.n_total {
        let u = rng.random::<f64>();
        let xi = rng.random::<f64>();
        let frozen = s.n >= config.n0;
        if frozen {
            let zeta = s.zeta();
            if !(lo..=hi).contains(&zeta) {
                band = false;
            }
        }
        let next = step_with(&s, u, xi);
        if frozen {
            zt = if u <= lo {
                move_left(zt, xi)
            } else {
                move_right(zt, xi)
            };
            zh = if u <= hi {
                move_left(zh, xi)
            } else {
                move_right(zh, xi)
            };
        } else {
            zt = next.z;
            zh = next.z;
        }
        s = next;
        if s.n >= config.n0 && !(zh <= s.z && s.z <= zt) {
            violations += 1;
        }
        if (s.n - 1) % record_every == 0 || s.n == config.n_total {
            push(&s, zt, zh, &mut records);
        }
    }
    if band {
        let zeta = s.zeta();
        band = (lo..=hi).contains(&zeta);
    }
    Ok(CoupledRun {
        records,
        band_event: band,
        sandwich_violations: violations,
        terminal: s,
        z_tilde: zt,
        z_hat: zh,
    })
}

/// Terminal positions of `chains` copies of the walk that moves left iff
/// `U <= threshold`, from `z1`, each for `steps` steps on stream `i`.
pub fn frozen_walk_ensemble(
    threshold: f64,
    steps: u64,
    chains: usize,
    seed: u64,
    z1: f64,
) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidParameter(format!(
            "threshold {threshold} outside [0,1]"
        )));
    }
    if !(0.0..=1.0).contains(&z1) {
        return Err(Error::Domain(format!(
            "initial position {z1} outside [0,1]"
        )));
    }
    Ok((0..chains as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(seed, i);
            let mut z = z1;
            for _ in 0..steps {
                let u = rng.random::<f64>();
                let xi = rng.random::<f64>();
                z = if u <= threshold {
                    move_left(z, xi)
                } else {
                    move_right(z, xi)
                };
            }
            z
        })
        .collect())
}
