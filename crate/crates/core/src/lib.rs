//! Random walks in the `d`-dimensional standard simplex driven by
//! place-dependent vertex choices, and a history-dependent urn walk on `[0,1]`.
//!
//! The crate is split into:
//!
//! * [`geometry`]: simplex points, the stick-breaking map and the affine
//!   coordinate changes used to certify minorization sets.
//! * [`distributions`]: Beta, Dirichlet, uniform and point-mass laws together
//!   with the special functions behind them.
//! * [`chain`]: the walk `Z' = (1 - xi) Z + xi Theta` for single trajectories
//!   and reproducible parallel ensembles.
//! * [`stationarity`]: quadrature checks of the stationary integral equation.
//! * [`assumptions`]: numerical certificates for the ergodicity hypotheses.
//! * [`urn`]: the urn-driven walk, its Lyapunov function and coupling walks.
//! * [`stats`]: goodness-of-fit machinery.
//! * [`quadrature`]: tanh-sinh and Gauss-Jacobi rules.

pub mod assumptions;
pub mod chain;
pub mod distributions;
pub mod error;
pub mod geometry;
pub mod quadrature;
pub mod rng;
pub mod stationarity;
pub mod stats;
pub mod urn;

pub use chain::{ChainConfig, ChainState, ChoiceFunction};
pub use distributions::{Dirichlet, JumpLaw};
pub use error::{Error, Result};
pub use geometry::{CubePoint, RegionSpec, SimplexPoint};
pub use rng::RngStream;
pub use urn::UrnState;

/// Boundary tolerance shared by membership tests and singularity guards.
pub const TOL: f64 = 1e-12;
