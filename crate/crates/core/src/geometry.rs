//! Points of the standard simplex `S_d = {z in R^d : z_j >= 0, sum z_j <= 1}`
//! and the coordinate changes used to build minorization sets.
//!
//! A point stores its `d` Cartesian coordinates; the barycentric coordinate
//! of the origin vertex is always derived as `z_0 = 1 - sum z_j`.
//!
//! Maps provided here:
//!
//! * the stick-breaking homeomorphism `T : (0,1)^d -> S_d` and its inverse;
//! * `G_z(u) = u_0 z + u`, which sends the simplex into the sub-simplex with
//!   apex `z`, and its inverse;
//! * the relabelling `R_j`, which swaps the role of vertex `j` and the origin.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::TOL;

/// A point of the closed standard simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimplexPoint {
    coords: Vec<f64>,
}

impl SimplexPoint {
    /// Validates that every coordinate is `>= -TOL` and that the coordinates
    /// sum to at most `1 + TOL`.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Domain(
                "simplex point needs d >= 1 coordinates".into(),
            ));
        }
        if let Some(c) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::Domain(format!("non-finite coordinate {c}")));
        }
        if let Some((j, c)) = coords.iter().enumerate().find(|(_, &c)| c < -TOL) {
            return Err(Error::Domain(format!(
                "coordinate z_{} = {c} is negative",
                j + 1
            )));
        }
        let sum: f64 = coords.iter().sum();
        if sum > 1.0 + TOL {
            return Err(Error::Domain(format!("coordinates sum to {sum} > 1")));
        }
        Ok(Self { coords })
    }

    /// Wraps coordinates that are known to lie in the simplex up to round-off.
    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        debug_assert!(!coords.is_empty());
        Self { coords }
    }

    /// Builds a point from full barycentric coordinates `(z_0, z_1, ..., z_d)`.
    pub fn from_barycentric(bary: &[f64]) -> Result<Self> {
        if bary.len() < 2 {
            return Err(Error::Domain(
                "barycentric vector needs d + 1 >= 2 entries".into(),
            ));
        }
        let sum: f64 = bary.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "barycentric coordinates sum to {sum}"
            )));
        }
        Self::new(bary[1..].to_vec())
    }

    pub fn origin(d: usize) -> Self {
        Self {
            coords: vec![0.0; d],
        }
    }

    /// The vertex `E_j`; `E_0` is the origin.
    pub fn vertex(d: usize, j: usize) -> Result<Self> {
        if j > d {
            return Err(Error::Index { index: j, max: d });
        }
        let mut coords = vec![0.0; d];
        if j > 0 {
            coords[j - 1] = 1.0;
        }
        Ok(Self { coords })
    }

    /// The point with all `d + 1` barycentric coordinates equal to `1/(d+1)`.
    pub fn barycenter(d: usize) -> Self {
        Self {
            coords: vec![1.0 / (d as f64 + 1.0); d],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    /// `z_0 = 1 - sum_j z_j`, recomputed from the stored coordinates.
    pub fn z0(&self) -> f64 {
        1.0 - self.coords.iter().sum::<f64>()
    }

    /// Barycentric coordinate `j` in `0..=d`.
    pub fn bary(&self, j: usize) -> f64 {
        if j == 0 {
            self.z0()
        } else {
            self.coords[j - 1]
        }
    }

    /// `(z_0, z_1, ..., z_d)`.
    pub fn barycentric(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.coords.len() + 1);
        out.push(self.z0());
        out.extend_from_slice(&self.coords);
        out
    }

    /// True when every barycentric coordinate exceeds `TOL`.
    pub fn is_interior(&self) -> bool {
        self.z0() > TOL && self.coords.iter().all(|&c| c > TOL)
    }
}

/// A point of the unit cube, the parameter space of the stick-breaking map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CubePoint {
    coords: Vec<f64>,
}

impl CubePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Domain("cube point needs d >= 1 coordinates".into()));
        }
        if let Some(c) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::Domain(format!("non-finite coordinate {c}")));
        }
        Ok(Self { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    /// Whether every coordinate lies in the closed box `[lower_j, upper_j]`,
    /// allowing `TOL` of slack.
    pub fn in_box(&self, lower: &[f64], upper: &[f64]) -> bool {
        self.box_margin(lower, upper) >= -TOL
    }

    /// Smallest signed distance from a coordinate to the nearer bound of the
    /// box. Negative values measure the worst violation.
    pub fn box_margin(&self, lower: &[f64], upper: &[f64]) -> f64 {
        box_margin(&self.coords, lower, upper)
    }
}

pub(crate) fn box_margin(x: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
    x.iter()
        .zip(lower.iter().zip(upper))
        .map(|(&x, (&lo, &hi))| (x - lo).min(hi - x))
        .fold(f64::INFINITY, f64::min)
}

/// The stick-breaking map: coordinate `j` of the image is
/// `x_j * prod_{l > j} (1 - x_l)`.
#[allow(non_snake_case)]
pub fn forward_T(x: &CubePoint) -> Result<SimplexPoint> {
    if let Some((j, &c)) = x
        .coords
        .iter()
        .enumerate()
        .find(|(_, &c)| !(-TOL..=1.0 + TOL).contains(&c))
    {
        return Err(Error::Domain(format!("x_{} = {c} outside (0,1)", j + 1)));
    }
    let clamped: Vec<f64> = x.coords.iter().map(|c| c.clamp(0.0, 1.0)).collect();
    Ok(SimplexPoint::from_vec_unchecked(forward_t_raw(&clamped)))
}

pub(crate) fn forward_t_raw(x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    let mut tail = 1.0;
    for j in (0..x.len()).rev() {
        out[j] = x[j] * tail;
        tail *= 1.0 - x[j];
    }
    out
}

/// Inverse of [`forward_T`]: coordinate `j` is `z_j / (1 - sum_{l > j} z_l)`.
///
/// Points on the face `z_0 = 0` are rejected: they map onto the boundary of
/// the cube.
#[allow(non_snake_case)]
pub fn inverse_T(z: &SimplexPoint) -> Result<CubePoint> {
    let z0 = z.z0();
    if z0 <= TOL {
        return Err(Error::Singularity(format!(
            "inverse stick-breaking map needs z_0 > {TOL}, got {z0}"
        )));
    }
    let x = inverse_t_raw(&z.coords)?;
    Ok(CubePoint { coords: x })
}

pub(crate) fn inverse_t_raw(z: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; z.len()];
    let mut tail = 0.0;
    for j in (0..z.len()).rev() {
        let denom = 1.0 - tail;
        if denom <= TOL {
            return Err(Error::Singularity(format!(
                "1 - sum_(l > {}) z_l = {denom}",
                j + 1
            )));
        }
        out[j] = z[j] / denom;
        tail += z[j];
    }
    Ok(out)
}

/// `G_z(u)`, coordinate `j` equal to `u_0 z_j + u_j`.
#[allow(non_snake_case)]
pub fn apply_G(z: &SimplexPoint, u: &SimplexPoint) -> Result<SimplexPoint> {
    check_same_dim(z, u)?;
    let u0 = u.z0();
    let coords = z
        .coords
        .iter()
        .zip(&u.coords)
        .map(|(&zj, &uj)| u0 * zj + uj)
        .collect();
    Ok(SimplexPoint::from_vec_unchecked(coords))
}

/// `G_z^{-1}(u)`, coordinate `j` equal to `u_j - z_j u_0 / z_0`.
///
/// The result is returned only if it lies in the simplex, i.e. when `u` is in
/// the image `G_z(S_d)`.
#[allow(non_snake_case)]
pub fn invert_G(z: &SimplexPoint, u: &SimplexPoint) -> Result<SimplexPoint> {
    check_same_dim(z, u)?;
    let v = invert_g_raw(&z.coords, &u.coords)?;
    SimplexPoint::new(v)
}

pub(crate) fn invert_g_raw(z: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    let z0 = 1.0 - z.iter().sum::<f64>();
    if z0 <= TOL {
        return Err(Error::Singularity(format!(
            "G_z needs z_0 > {TOL}, got {z0}"
        )));
    }
    let u0 = 1.0 - u.iter().sum::<f64>();
    let ratio = u0 / z0;
    Ok(z.iter().zip(u).map(|(&zj, &uj)| uj - zj * ratio).collect())
}

/// The relabelling `R_j(u) = (u_0, u_1, ..., u_{j-1}, u_{j+1}, ..., u_d)`.
///
/// For `j = 0` the output is `(u_0, u_1, ..., u_{d-1})`: the origin's
/// coordinate is listed first and `u_d` becomes the implied coordinate.
#[allow(non_snake_case)]
pub fn rotate_R(j: usize, u: &SimplexPoint) -> Result<SimplexPoint> {
    Ok(SimplexPoint::from_vec_unchecked(rotate_r_raw(
        j, &u.coords,
    )?))
}

pub(crate) fn rotate_r_raw(j: usize, u: &[f64]) -> Result<Vec<f64>> {
    let d = u.len();
    if j > d {
        return Err(Error::Index { index: j, max: d });
    }
    let u0 = 1.0 - u.iter().sum::<f64>();
    let mut out = Vec::with_capacity(d);
    out.push(u0);
    let dropped = if j == 0 { d } else { j };
    out.extend(
        u.iter()
            .enumerate()
            .filter(|&(i, _)| i + 1 != dropped)
            .map(|(_, &c)| c),
    );
    Ok(out)
}

/// Inverse of [`rotate_R`]: the omitted coordinate is recovered as one minus
/// the sum of the listed ones.
#[allow(non_snake_case)]
pub fn rotate_R_inverse(j: usize, y: &SimplexPoint) -> Result<SimplexPoint> {
    Ok(SimplexPoint::from_vec_unchecked(rotate_r_inverse_raw(
        j, &y.coords,
    )?))
}

pub(crate) fn rotate_r_inverse_raw(j: usize, y: &[f64]) -> Result<Vec<f64>> {
    let d = y.len();
    if j > d {
        return Err(Error::Index { index: j, max: d });
    }
    let missing = 1.0 - y.iter().sum::<f64>();
    let dropped = if j == 0 { d } else { j };
    let mut out = Vec::with_capacity(d);
    let mut rest = y[1..].iter();
    for i in 1..=d {
        if i == dropped {
            out.push(missing);
        } else {
            out.push(*rest.next().expect("length checked"));
        }
    }
    Ok(out)
}

/// Determinant of the Jacobian of `u -> G_z^{-1}(u)`, equal to `1 / z_0`.
#[allow(non_snake_case)]
pub fn jacobian_det_Ginv(z: &SimplexPoint) -> Result<f64> {
    let z0 = z.z0();
    if z0 <= TOL {
        return Err(Error::Singularity(format!(
            "G_z needs z_0 > {TOL}, got {z0}"
        )));
    }
    Ok(1.0 / z0)
}

/// Determinant of the Jacobian of `T^{-1}` at `v`, equal to
/// `1 / prod_j (1 - sum_{l > j} v_l)`.
#[allow(non_snake_case)]
pub fn jacobian_det_Tinv(v: &SimplexPoint) -> Result<f64> {
    let mut prod = 1.0;
    let mut tail = 0.0;
    for j in (0..v.dim()).rev() {
        let factor = 1.0 - tail;
        if factor <= TOL {
            return Err(Error::Singularity(format!(
                "1 - sum_(l > {}) v_l = {factor}",
                j + 1
            )));
        }
        prod *= factor;
        tail += v.coords[j];
    }
    Ok(1.0 / prod)
}

fn check_same_dim(a: &SimplexPoint, b: &SimplexPoint) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(())
}

/// Regions of the simplex that appear in the minorization argument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionSpec {
    /// `V_j = {z : z_j >= 1 - delta}`; for `j = 0` this is `{sum z <= delta}`.
    Vertex { j: usize, delta: f64 },
    /// `U_{j_1...j_k} = {z : z_{j_1} + ... + z_{j_k} <= delta}` with indices
    /// taken in barycentric numbering `0..=d`.
    Slab { indices: Vec<usize>, delta: f64 },
    /// `K = T([s,t]^d)`.
    K { s: f64, t: f64 },
    /// `K_0 = T([s(1-t)^{d-1} - delta, t]^d)`.
    K0 { delta: f64, s: f64, t: f64 },
    /// `T([lower_1, upper_1] x ... x [lower_d, upper_d])`.
    StickBox { lower: Vec<f64>, upper: Vec<f64> },
}

impl RegionSpec {
    /// `K` after checking the admissibility constraints on `(delta, s, t)`.
    pub fn k_set(d: usize, delta: f64, s: f64, t: f64) -> Result<Self> {
        check_admissible(d, delta, s, t)?;
        Ok(RegionSpec::K { s, t })
    }

    pub fn k0_set(d: usize, delta: f64, s: f64, t: f64) -> Result<Self> {
        check_admissible(d, delta, s, t)?;
        Ok(RegionSpec::K0 { delta, s, t })
    }

    /// Closed-inequality membership test with `TOL` slack.
    pub fn contains(&self, z: &SimplexPoint) -> bool {
        let d = z.dim();
        match self {
            RegionSpec::Vertex { j, delta } => {
                if *j > d {
                    return false;
                }
                if *j == 0 {
                    z.coords.iter().sum::<f64>() <= delta + TOL
                } else {
                    z.coords[j - 1] >= 1.0 - delta - TOL
                }
            }
            RegionSpec::Slab { indices, delta } => {
                if indices.iter().any(|&j| j > d) {
                    return false;
                }
                indices.iter().map(|&j| z.bary(j)).sum::<f64>() <= delta + TOL
            }
            RegionSpec::K { s, t } => stick_box_contains(&z.coords, |_| (*s, *t)),
            RegionSpec::K0 { delta, s, t } => {
                let lo = s * (1.0 - t).powi(d as i32 - 1) - delta;
                stick_box_contains(&z.coords, |_| (lo, *t))
            }
            RegionSpec::StickBox { lower, upper } => {
                if lower.len() != d || upper.len() != d {
                    return false;
                }
                stick_box_contains(&z.coords, |j| (lower[j], upper[j]))
            }
        }
    }
}

/// Membership of `z` in `T(box)`, tested on the ratios
/// `z_j / (1 - sum_{l > j} z_l)`.
fn stick_box_contains(z: &[f64], bounds: impl Fn(usize) -> (f64, f64)) -> bool {
    let mut tail = 0.0;
    for j in (0..z.len()).rev() {
        let denom = 1.0 - tail;
        if denom <= TOL {
            return false;
        }
        let ratio = z[j] / denom;
        let (lo, hi) = bounds(j);
        if ratio < lo - TOL || ratio > hi + TOL {
            return false;
        }
        tail += z[j];
    }
    true
}

/// Free-function form of [`RegionSpec::contains`].
pub fn in_region(r: &RegionSpec, z: &SimplexPoint) -> bool {
    r.contains(z)
}

/// Checks `0 < delta < 2^{-d}` and `delta^{1/d} < s < t < 1 - delta^{1/d}`.
pub fn check_admissible(d: usize, delta: f64, s: f64, t: f64) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    let cap = 0.5f64.powi(d as i32);
    if !(delta > 0.0 && delta < cap) {
        return Err(Error::InvalidParameter(format!(
            "delta = {delta} outside (0, {cap})"
        )));
    }
    let root = delta.powf(1.0 / d as f64);
    if !(root < s && s < t && t < 1.0 - root) {
        return Err(Error::InvalidParameter(format!(
            "need {root} < s < t < {} but s = {s}, t = {t}",
            1.0 - root
        )));
    }
    Ok(())
}

/// Lower end of the box in part (a) of the inclusion lemma,
/// `s(1-t)^{d-1} - delta`.
pub fn inner_lower(d: usize, delta: f64, s: f64, t: f64) -> f64 {
    s * (1.0 - t).powi(d as i32 - 1) - delta
}

/// Lower end of the first factor in part (b), `(1-t)^d - delta`.
pub fn rotated_lower(d: usize, delta: f64, t: f64) -> f64 {
    (1.0 - t).powi(d as i32) - delta
}

/// Uniform point of the standard simplex as full barycentric coordinates.
pub(crate) fn uniform_barycentric<R: Rng + ?Sized>(parts: usize, rng: &mut R) -> Vec<f64> {
    let mut e: Vec<f64> = (0..parts)
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    let sum: f64 = e.iter().sum();
    e.iter_mut().for_each(|x| *x /= sum);
    e
}

/// Uniform sample from `K = T([s,t]^d)` obtained by pushing a uniform point
/// of the preimage box through `T`.
pub fn sample_in_k<R: Rng + ?Sized>(d: usize, s: f64, t: f64, rng: &mut R) -> SimplexPoint {
    let x: Vec<f64> = (0..d).map(|_| s + (t - s) * rng.random::<f64>()).collect();
    SimplexPoint::from_vec_unchecked(forward_t_raw(&x))
}

/// Sample from the slab `V_j`.
///
/// `V_0` is covered by a uniform point of `delta * S_d`. For `j >= 1` the
/// vertex coordinate is `1 - delta w` with `w` uniform on `(0,1)` and the
/// remaining mass `delta w` is split uniformly among the other `d`
/// barycentric coordinates.
pub fn sample_in_vertex_region<R: Rng + ?Sized>(
    j: usize,
    d: usize,
    delta: f64,
    rng: &mut R,
) -> Result<SimplexPoint> {
    if j > d {
        return Err(Error::Index { index: j, max: d });
    }
    if j == 0 {
        let w = uniform_barycentric(d + 1, rng);
        return Ok(SimplexPoint::from_vec_unchecked(
            w[1..].iter().map(|&c| delta * c).collect(),
        ));
    }
    let w = rng.random::<f64>();
    let mass = delta * w;
    let split = uniform_barycentric(d, rng);
    // split[0] goes to z_0, the rest to the coordinates other than j.
    let mut coords = Vec::with_capacity(d);
    let mut rest = split[1..].iter();
    for i in 1..=d {
        if i == j {
            coords.push(1.0 - mass);
        } else {
            coords.push(mass * rest.next().expect("d - 1 entries"));
        }
    }
    Ok(SimplexPoint::from_vec_unchecked(coords))
}

/// Uniform point of the open simplex, by normalized exponentials.
pub fn sample_interior<R: Rng + ?Sized>(d: usize, rng: &mut R) -> SimplexPoint {
    let e: Vec<f64> = (0..=d).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    SimplexPoint::from_vec_unchecked(e[1..].iter().map(|x| x / s).collect())
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Largest round-trip errors over random inputs in one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTripCheck {
    pub d: usize,
    pub samples: usize,
    /// `T^{-1}(T(x)) - x` over cube points whose partial products
    /// `prod_{l > j} (1 - x_l)` are all at least `tail_floor`.
    pub t_forward: f64,
    /// Cube points where the condition-scaled bound `4e-16 d / tail` failed.
    pub t_scaled_failures: usize,
    pub t_inverse: f64,
    /// `G_z^{-1}(G_z(u)) - u` with base points satisfying `z_0 >= z0_floor`.
    pub g: f64,
    pub r: f64,
    pub tail_floor: f64,
    pub z0_floor: f64,
}

impl RoundTripCheck {
    pub fn max_error(&self) -> f64 {
        self.t_forward.max(self.t_inverse).max(self.g).max(self.r)
    }

    pub fn passed(&self, tol: f64) -> bool {
        self.max_error() < tol && self.t_scaled_failures == 0
    }
}

/// Round trips `T`/`T^{-1}`, `G_z`/`G_z^{-1}` and `R_j`/`R_j^{-1}` on
/// `samples` random inputs each.
///
/// Recovering `x_j` from `T(x)` divides by a partial product formed by
/// subtraction, and `G_z^{-1}` divides by `z_0`; points below the floors are
/// still checked against the condition-scaled bound but excluded from the
/// absolute maxima.
pub fn round_trip_check<R: Rng + ?Sized>(
    d: usize,
    samples: usize,
    rng: &mut R,
) -> Result<RoundTripCheck> {
    let (tail_floor, z0_floor) = (1e-3, 1e-2);
    let mut c = RoundTripCheck {
        d,
        samples,
        t_forward: 0.0,
        t_scaled_failures: 0,
        t_inverse: 0.0,
        g: 0.0,
        r: 0.0,
        tail_floor,
        z0_floor,
    };
    for _ in 0..samples {
        let x = CubePoint::new((0..d).map(|_| rng.random::<f64>()).collect())?;
        let back = inverse_T(&forward_T(&x)?)?;
        let err = max_abs_diff(back.coords(), x.coords());
        let mut tail = 1.0f64;
        let mut min_tail = 1.0f64;
        for &v in x.coords().iter().rev() {
            min_tail = min_tail.min(tail);
            tail *= 1.0 - v;
        }
        if err > 4e-16 * d as f64 / min_tail {
            c.t_scaled_failures += 1;
        }
        if min_tail >= tail_floor {
            c.t_forward = c.t_forward.max(err);
        }

        let z = sample_interior(d, rng);
        let back = forward_T(&inverse_T(&z)?)?;
        c.t_inverse = c.t_inverse.max(max_abs_diff(back.coords(), z.coords()));

        let mut base = sample_interior(d, rng);
        while base.z0() < z0_floor {
            base = sample_interior(d, rng);
        }
        let u = sample_interior(d, rng);
        let back = invert_G(&base, &apply_G(&base, &u)?)?;
        c.g = c.g.max(max_abs_diff(back.coords(), u.coords()));

        for j in 0..=d {
            let back = rotate_R_inverse(j, &rotate_R(j, &u)?)?;
            c.r = c.r.max(max_abs_diff(back.coords(), u.coords()));
        }
    }
    Ok(c)
}

/// Closed-form Jacobian determinants against central differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobianCheck {
    pub d: usize,
    pub points: usize,
    /// Largest `|fd - exact| / max(exact, 1)` for `G_z^{-1}`.
    pub g_error: f64,
    pub t_error: f64,
    pub g_points: usize,
    pub t_points: usize,
    /// Smallest determinant seen; both maps expand volume.
    pub min_det: f64,
}

impl JacobianCheck {
    pub fn passed(&self, tol: f64) -> bool {
        self.g_error < tol && self.t_error < tol && self.min_det >= 1.0
    }
}

fn fd_det<F: Fn(&[f64]) -> Result<Vec<f64>>>(f: F, x: &[f64]) -> Result<f64> {
    let h = 1e-6;
    let n = x.len();
    let mut jac = nalgebra::DMatrix::zeros(n, n);
    for j in 0..n {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        let (fp, fm) = (f(&xp)?, f(&xm)?);
        for i in 0..n {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(jac.determinant())
}

/// Compares [`jacobian_det_Ginv`] and [`jacobian_det_Tinv`] with
/// finite-difference determinants at `points` random interior points.
///
/// `G_z^{-1}` is differentiated at base points with `z_0 >= 0.01` and
/// `T^{-1}` at points whose partial sums keep `1 - sum_{l > j} v_l > 0.05`,
/// so that the step `h = 1e-6` stays inside the domain.
pub fn jacobian_check<R: Rng + ?Sized>(
    d: usize,
    points: usize,
    rng: &mut R,
) -> Result<JacobianCheck> {
    let mut c = JacobianCheck {
        d,
        points,
        g_error: 0.0,
        t_error: 0.0,
        g_points: 0,
        t_points: 0,
        min_det: f64::INFINITY,
    };
    while c.g_points < points {
        let z = sample_interior(d, rng);
        if z.z0() < 0.01 {
            continue;
        }
        let exact = jacobian_det_Ginv(&z)?;
        let u = sample_interior(d, rng);
        let fd = fd_det(|v| invert_g_raw(z.coords(), v), u.coords())?;
        c.g_error = c.g_error.max((fd - exact).abs() / exact.max(1.0));
        c.min_det = c.min_det.min(exact);
        c.g_points += 1;
    }
    while c.t_points < points {
        let v = sample_interior(d, rng);
        if (0..d).any(|j| 1.0 - v.coords()[j + 1..].iter().sum::<f64>() <= 0.05) {
            continue;
        }
        let exact = jacobian_det_Tinv(&v)?;
        let fd = fd_det(inverse_t_raw, v.coords())?;
        c.t_error = c.t_error.max((fd - exact).abs() / exact.max(1.0));
        c.min_det = c.min_det.min(exact);
        c.t_points += 1;
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pt(c: &[f64]) -> SimplexPoint {
        SimplexPoint::new(c.to_vec()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn simplex_point_validation() {
        assert!(SimplexPoint::new(vec![0.5, 0.6]).is_err());
        assert!(SimplexPoint::new(vec![-0.1, 0.2]).is_err());
        assert!(SimplexPoint::new(vec![-1e-13, 0.2]).is_ok());
        assert!(SimplexPoint::new(vec![]).is_err());
        let z = pt(&[0.2, 0.3]);
        assert_eq!(z.z0(), 1.0 - (0.2 + 0.3));
        assert_eq!(z.barycentric(), vec![0.5, 0.2, 0.3]);
    }

    #[test]
    fn forward_t_examples() {
        let x = CubePoint::new(vec![0.37]).unwrap();
        assert_eq!(forward_T(&x).unwrap().coords(), &[0.37]);
        let x = CubePoint::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(forward_T(&x).unwrap().coords(), &[0.25, 0.5]);
        assert!(forward_T(&CubePoint::new(vec![0.5, 1.5]).unwrap()).is_err());
        assert!(forward_T(&CubePoint::new(vec![-0.1]).unwrap()).is_err());
    }

    #[test]
    fn inverse_t_examples() {
        let x = inverse_T(&pt(&[0.25, 0.5])).unwrap();
        assert!(close(x.coords(), &[0.5, 0.5], 1e-15));
        let x = inverse_T(&pt(&[1.0 / 3.0, 1.0 / 3.0])).unwrap();
        assert!(close(x.coords(), &[0.5, 1.0 / 3.0], 1e-15));
        assert!(matches!(
            inverse_T(&pt(&[0.5, 0.5])),
            Err(Error::Singularity(_))
        ));
        assert!(matches!(inverse_T(&pt(&[1.0])), Err(Error::Singularity(_))));
    }

    #[test]
    fn g_examples() {
        let z = pt(&[0.2, 0.3]);
        assert_eq!(apply_G(&z, &SimplexPoint::origin(2)).unwrap(), z);
        let g = apply_G(&z, &pt(&[0.1, 0.2])).unwrap();
        assert!(close(g.coords(), &[0.24, 0.41], 1e-15));
        let back = invert_G(&z, &pt(&[0.24, 0.41])).unwrap();
        assert!(close(back.coords(), &[0.1, 0.2], 1e-15));
        let o = invert_G(&z, &z).unwrap();
        assert!(close(o.coords(), &[0.0, 0.0], 1e-15));
        assert!(matches!(
            invert_G(&pt(&[0.4, 0.6]), &z),
            Err(Error::Singularity(_))
        ));
    }

    #[test]
    fn rotation_examples() {
        let u = pt(&[0.1, 0.2]);
        let r0 = rotate_R(0, &u).unwrap();
        assert!(close(r0.coords(), &[0.7, 0.1], 1e-15));
        let r1 = rotate_R(1, &u).unwrap();
        assert!(close(r1.coords(), &[0.7, 0.2], 1e-15));
        let r2 = rotate_R(2, &u).unwrap();
        assert!(close(r2.coords(), &[0.7, 0.1], 1e-15));
        assert!(matches!(
            rotate_R(3, &u),
            Err(Error::Index { index: 3, max: 2 })
        ));
        for j in 0..=2 {
            let back = rotate_R_inverse(j, &rotate_R(j, &u).unwrap()).unwrap();
            assert!(close(back.coords(), u.coords(), 1e-15), "j = {j}");
        }
    }

    #[test]
    fn jacobian_examples() {
        assert!((jacobian_det_Ginv(&pt(&[0.2, 0.3])).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(jacobian_det_Ginv(&SimplexPoint::origin(3)).unwrap(), 1.0);
        assert!(jacobian_det_Ginv(&pt(&[0.5, 0.5])).is_err());
        assert_eq!(jacobian_det_Tinv(&pt(&[0.7])).unwrap(), 1.0);
        assert!((jacobian_det_Tinv(&pt(&[0.25, 0.5])).unwrap() - 2.0).abs() < 1e-15);
        assert!(jacobian_det_Tinv(&pt(&[0.0, 1.0])).is_err());
    }

    #[test]
    fn region_examples() {
        let v0 = RegionSpec::Vertex { j: 0, delta: 0.1 };
        assert!(v0.contains(&pt(&[0.05, 0.03])));
        assert!(!v0.contains(&pt(&[0.05, 0.06])));
        let v1 = RegionSpec::Vertex { j: 1, delta: 0.1 };
        assert!(v1.contains(&pt(&[0.95, 0.01])));
        assert!(!v1.contains(&pt(&[0.85, 0.01])));
        let k = RegionSpec::K { s: 0.3, t: 0.6 };
        assert!(k.contains(&pt(&[0.45])));
        assert!(!k.contains(&pt(&[0.7])));
        assert!(k.contains(&pt(&[0.6])));
        let slab = RegionSpec::Slab {
            indices: vec![0, 2],
            delta: 0.1,
        };
        assert!(slab.contains(&pt(&[0.92, 0.05])));
        assert!(!slab.contains(&pt(&[0.8, 0.05])));
    }

    #[test]
    fn admissibility() {
        assert!(check_admissible(2, 0.005, 0.3, 0.6).is_ok());
        assert!(check_admissible(2, 0.3, 0.3, 0.6).is_err());
        assert!(check_admissible(1, 0.1, 0.05, 0.6).is_err());
        assert!(check_admissible(1, 0.1, 0.5, 0.4).is_err());
        assert!(RegionSpec::k0_set(3, 0.005, 0.3, 0.6).is_ok());
    }

    #[test]
    fn vertex_region_samples_are_members() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in 1..=4 {
            for j in 0..=d {
                let region = RegionSpec::Vertex { j, delta: 0.01 };
                for _ in 0..1000 {
                    let z = sample_in_vertex_region(j, d, 0.01, &mut rng).unwrap();
                    assert!(SimplexPoint::new(z.coords().to_vec()).is_ok());
                    assert!(region.contains(&z), "d={d} j={j} z={z:?}");
                }
            }
        }
    }

    #[test]
    fn k_samples_are_members() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let k = RegionSpec::K { s: 0.3, t: 0.6 };
        for _ in 0..1000 {
            assert!(k.contains(&sample_in_k(3, 0.3, 0.6, &mut rng)));
        }
    }
}
