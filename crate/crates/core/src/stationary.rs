//! Stationary flow problem on `[0, 1]`: agents enter at `x = 0` with net
//! current `j` and leave at `x = 1`, where `rho(1) = 0`.
//!
//! With `j` the rightward current, the stationary flux balance
//! `rho (1 - rho) - eps rho_x = j` gives the Riccati equation
//!
//! ```text
//! eps rho' = rho - rho^2 - j,    rho(1) = 0
//! ```
//!
//! integrated backward from `x = 1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DensityField, Grid1D};
use crate::ode::{integrate, Outcome, Tolerance};

/// Integration stops once `rho` leaves this interval.
pub const ESCAPE_BOUNDS: (f64, f64) = (-1.0, 10.0);
pub const DEFAULT_CRITICAL_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryProblem {
    pub epsilon: f64,
    pub j: f64,
}

impl StationaryProblem {
    pub fn new(epsilon: f64, j: f64) -> Result<Self> {
        let p = Self { epsilon, j };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        if !(self.j >= 0.0 && self.j.is_finite()) {
            return Err(Error::Config(format!(
                "current j must be >= 0, got {}",
                self.j
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarySolution {
    pub epsilon: f64,
    pub j: f64,
    pub grid: Grid1D,
    /// Nodal density; `NaN` left of the escape point.
    pub rho: Vec<f64>,
    /// First node holding a value (0 unless the solution escaped).
    pub valid_from: usize,
    /// Where the backward integration left [`ESCAPE_BOUNDS`].
    pub escape: Option<f64>,
    /// `None` when the solution escaped before reaching `x = 0`.
    pub rho_at_0: Option<f64>,
    /// `max rho > 1`, or escaped upward.
    pub supercritical: bool,
}

impl StationarySolution {
    /// The solution as a field, when it reached every node.
    pub fn field(&self) -> Option<DensityField> {
        if self.valid_from == 0 {
            DensityField::new(self.grid, self.rho.clone()).ok()
        } else {
            None
        }
    }

    /// `(x, rho)` pairs over the nodes that hold a value.
    pub fn valid_nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (self.valid_from..self.grid.len()).map(|k| (self.grid.node(k), self.rho[k]))
    }

    pub fn max(&self) -> f64 {
        self.rho[self.valid_from..]
            .iter()
            .fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }
}

fn riccati(epsilon: f64, j: f64) -> impl Fn(f64, &[f64; 1]) -> [f64; 1] {
    move |_, y| [(y[0] - y[0] * y[0] - j) / epsilon]
}

fn inside(y: &[f64; 1]) -> bool {
    y[0] >= ESCAPE_BOUNDS.0 && y[0] <= ESCAPE_BOUNDS.1
}

/// Backward integration for any real `j` (negative `j` is a leftward current).
fn integrate_nodes(epsilon: f64, j: f64, grid: Grid1D) -> Result<StationarySolution> {
    let n = grid.len();
    let mut rho = vec![f64::NAN; n];
    rho[n - 1] = 0.0;
    let mut escape = None;
    let mut escaped_up = false;
    let mut valid_from = 0;

    if epsilon == 0.0 {
        // algebraic limit: the lower root of rho (1 - rho) = j, with a jump at x = 1
        let disc = 0.25 - j;
        if disc >= 0.0 {
            let lower = 0.5 - disc.sqrt();
            rho[..n - 1].fill(lower);
        } else {
            escape = Some(grid.x_max());
            escaped_up = true;
            valid_from = n - 1;
        }
    } else {
        let f = riccati(epsilon, j);
        for k in (0..n - 1).rev() {
            let out = integrate(
                &f,
                grid.node(k + 1),
                [rho[k + 1]],
                grid.node(k),
                Tolerance::TIGHT,
                |_, y| inside(y),
            )?;
            match out {
                Outcome::Reached(y) => rho[k] = y[0],
                Outcome::Stopped { t, y } => {
                    escape = Some(t);
                    escaped_up = y[0] > 0.0;
                    valid_from = k + 1;
                    break;
                }
            }
        }
    }

    let rho_at_0 = if valid_from == 0 { Some(rho[0]) } else { None };
    let mut sol = StationarySolution {
        epsilon,
        j,
        grid,
        rho,
        valid_from,
        escape,
        rho_at_0,
        supercritical: false,
    };
    sol.supercritical = escaped_up || sol.max() > 1.0;
    Ok(sol)
}

/// Solves the stationary problem on `n` nodes of `[0, 1]`.
pub fn solve_stationary(p: StationaryProblem, n: usize) -> Result<StationarySolution> {
    p.validate()?;
    integrate_nodes(p.epsilon, p.j, Grid1D::unit(n)?)
}

/// `rho(0)` for real `j`; `+inf` / `-inf` when the solution escapes upward / downward.
fn rho_at_zero(epsilon: f64, j: f64) -> Result<f64> {
    let out = integrate(
        riccati(epsilon, j),
        1.0,
        [0.0],
        0.0,
        Tolerance::TIGHT,
        |_, y| inside(y),
    )?;
    Ok(match out {
        Outcome::Reached(y) => y[0],
        Outcome::Stopped { y, .. } if y[0] > 0.0 => f64::INFINITY,
        Outcome::Stopped { .. } => f64::NEG_INFINITY,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalCurrent {
    pub epsilon: f64,
    pub j_c: f64,
    /// Final bracket `[lo, hi]` with `rho(0; lo) <= 1 < rho(0; hi)`.
    pub bracket: (f64, f64),
}

impl CriticalCurrent {
    pub fn bracket_width(&self) -> f64 {
        self.bracket.1 - self.bracket.0
    }
}

/// Largest current with `rho(0; j) <= 1`, by bisection on `rho(0; j) - 1`.
pub fn critical_current(epsilon: f64, tol: f64) -> Result<CriticalCurrent> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Config(format!("epsilon must be > 0, got {epsilon}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tol must be > 0, got {tol}")));
    }
    let (mut lo, mut f_lo) = (0.0, rho_at_zero(epsilon, 0.0)?);
    let mut hi = 1.0;
    let mut f_hi = rho_at_zero(epsilon, hi)?;
    while f_hi <= 1.0 {
        if f_hi < f_lo {
            return Err(Error::NonMonotone(format!(
                "rho(0) fell from {f_lo} to {f_hi} while growing j to {hi}"
            )));
        }
        (lo, f_lo) = (hi, f_hi);
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::NoBracket(format!(
                "rho(0) stays <= 1 up to j = {lo}"
            )));
        }
        f_hi = rho_at_zero(epsilon, hi)?;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = rho_at_zero(epsilon, mid)?;
        if f_mid < f_lo || f_mid > f_hi {
            return Err(Error::NonMonotone(format!(
                "rho(0; {mid}) = {f_mid} outside [{f_lo}, {f_hi}]"
            )));
        }
        if f_mid <= 1.0 {
            (lo, f_lo) = (mid, f_mid);
        } else {
            (hi, f_hi) = (mid, f_mid);
        }
    }
    Ok(CriticalCurrent {
        epsilon,
        j_c: 0.5 * (lo + hi),
        bracket: (lo, hi),
    })
}

/// `solve_stationary` for every current, in input order.
pub fn sweep_currents(epsilon: f64, j_values: &[f64], n: usize) -> Result<Vec<StationarySolution>> {
    j_values
        .par_iter()
        .map(|&j| solve_stationary(StationaryProblem::new(epsilon, j)?, n))
        .collect()
}

/// `solve_stationary` for every viscosity at a fixed current, in input order.
pub fn sweep_viscosities(epsilons: &[f64], j: f64, n: usize) -> Result<Vec<StationarySolution>> {
    epsilons
        .par_iter()
        .map(|&e| solve_stationary(StationaryProblem::new(e, j)?, n))
        .collect()
}

/// Stationary state whose left value is `rho_left` (with `rho(1) = 0`), found
/// by bisection on the current, which may be negative.
pub fn stationary_with_left_value(
    epsilon: f64,
    rho_left: f64,
    n: usize,
) -> Result<StationarySolution> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Config(format!("epsilon must be > 0, got {epsilon}")));
    }
    let (lo_rho, hi_rho) = ESCAPE_BOUNDS;
    if !(rho_left > lo_rho && rho_left < hi_rho) {
        return Err(Error::Config(format!(
            "left value must lie in ({lo_rho}, {hi_rho}), got {rho_left}"
        )));
    }
    // rho(0; j) increases with j; rho(0; 0) = 0
    let (mut lo, mut hi) = if rho_left >= 0.0 {
        (0.0, 1.0)
    } else {
        (-1.0, 0.0)
    };
    if rho_left >= 0.0 {
        while rho_at_zero(epsilon, hi)? < rho_left {
            lo = hi;
            hi *= 2.0;
            if hi > 1e6 {
                return Err(Error::NoBracket(format!(
                    "no current reaches rho(0) = {rho_left}"
                )));
            }
        }
    } else {
        while rho_at_zero(epsilon, lo)? > rho_left {
            hi = lo;
            lo *= 2.0;
            if lo < -1e6 {
                return Err(Error::NoBracket(format!(
                    "no current reaches rho(0) = {rho_left}"
                )));
            }
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if rho_at_zero(epsilon, mid)? < rho_left {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    integrate_nodes(epsilon, 0.5 * (lo + hi), Grid1D::unit(n)?)
}
