//! Numerical toolkit for the Hughes crowd model
//!
//! ```text
//! rho_t - div(rho (1-rho)^2 Du) = eps Laplacian(rho),    |Du|^2 = 1/(1-rho)^2
//! ```
//!
//! * [`eikonal`] and [`transport`]: a monotone upwind scheme for the eikonal
//!   equation and the transport of `rho` by the transpose of the linearised
//!   Hamilton-Jacobi operator, so both equations share one discretisation of `Du`.
//! * [`coupled`]: the time-dependent 1D simulation driving both.
//! * [`radial`]: inviscid radial solutions by characteristics, with shock detection.
//! * [`stationary`]: the stationary flow problem and critical currents.
//! * [`diagnostics`]: numerical monitoring of the a priori estimates.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coupled;
pub mod diagnostics;
pub mod eikonal;
pub mod error;
pub mod grid;
pub mod ode;
pub mod radial;
pub mod stationary;
pub mod transport;
pub mod tridiag;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use grid::{
    Boundaries, BoundaryValue, DensityBc, DensityField, EndCondition, Grid1D, ValueBc, ValueField,
};
