//! Special functions, delegating to `statrs`.

use statrs::distribution::{ChiSquared, ContinuousCDF};
pub use statrs::function::beta::ln_beta;
pub use statrs::function::gamma::ln_gamma;

/// Returns `(I_x(a,b), 1 - I_x(a,b))`, with `y = 1 - x` supplied by the
/// caller so that neither tail loses precision near the endpoints.
pub(crate) fn beta_inc_pair(a: f64, b: f64, x: f64, y: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    if y <= 0.0 {
        return (1.0, 0.0);
    }
    if x < (a + 1.0) / (a + b + 2.0) {
        let lower = statrs::function::beta::beta_reg(a, b, x).clamp(0.0, 1.0);
        (lower, 1.0 - lower)
    } else {
        let upper = statrs::function::beta::beta_reg(b, a, y.min(1.0)).clamp(0.0, 1.0);
        (1.0 - upper, upper)
    }
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn beta_inc(a: f64, b: f64, x: f64) -> f64 {
    beta_inc_pair(a, b, x, 1.0 - x).0
}

/// Regularized lower incomplete gamma function `P(a, x)`.
pub fn gamma_inc_lower(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    statrs::function::gamma::gamma_lr(a, x)
}

/// Regularized upper incomplete gamma function `Q(a, x) = 1 - P(a, x)`.
pub fn gamma_inc_upper(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    statrs::function::gamma::gamma_ur(a, x)
}

/// Upper `alpha` quantile of the chi-square distribution with `dof` degrees
/// of freedom.
pub fn chi_square_critical(dof: f64, alpha: f64) -> f64 {
    let chi = ChiSquared::new(dof).expect("positive degrees of freedom");
    // Bisection on the upper tail keeps precision for small alpha.
    let tail = |x: f64| chi.sf(x);
    let mut lo = 0.0;
    let mut hi = chi.inverse_cdf(0.5).max(1.0);
    while tail(hi) > alpha {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}
