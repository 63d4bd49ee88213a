//! Transport of the density by the adjoint of the linearised Hamilton-Jacobi
//! operator `(1-rho)^2 |Du|^2/2 - eps u_xx`.
//!
//! The operator `N~` is discretised with the same upwind branches as the
//! eikonal scheme and mirror ghosts at both ends. Its Jacobian `J = D_u N~`
//! has zero row sums, so `J^T` has zero column sums. The density is advanced
//! on trapezoid-weighted masses,
//!
//! ```text
//! W rho_t = -J^T W rho + b,
//! ```
//!
//! which conserves `sum_k w_k rho_k` exactly for closed ends; `b` carries the
//! prescribed influx. Dirichlet density nodes are pinned to their data and the
//! mass they would have received is the outflow.

use serde::{Deserialize, Serialize};

use crate::eikonal::{residual_norm, upwind_differences, EikonalConfig, DEFAULT_RHO_CAP};
use crate::error::{Error, Result};
use crate::grid::{Boundaries, DensityBc, DensityField, Grid1D, ValueBc, ValueField};
use crate::tridiag::Tridiagonal;

/// Density closures at the two ends as seen by the transport step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxSpec {
    pub left: DensityBc,
    pub right: DensityBc,
}

impl FluxSpec {
    pub fn closed() -> Self {
        Self {
            left: DensityBc::NoFlux,
            right: DensityBc::NoFlux,
        }
    }

    pub fn ends(&self) -> [DensityBc; 2] {
        [self.left, self.right]
    }
}

impl From<&Boundaries> for FluxSpec {
    fn from(b: &Boundaries) -> Self {
        Self {
            left: b.left.rho,
            right: b.right.rho,
        }
    }
}

/// `N~_k(u) = (1-rho_k)^2 [max{u_k-u_{k-1},0}^2 + max{u_k-u_{k+1},0}^2]/(2h^2)
///            - eps (u_{k+1} - 2u_k + u_{k-1})/h^2`, with mirror ghosts at the ends.
pub fn hj_tilde_residual(u: &ValueField, rho: &DensityField, k: usize, epsilon: f64) -> f64 {
    let h = u.grid().spacing();
    let vals = u.values();
    let (p, q) = upwind_differences(vals, k);
    let (left, right) = crate::eikonal::neighbours(vals, k);
    let a = (1.0 - rho[k]) * (1.0 - rho[k]);
    a * (p * p + q * q) / (2.0 * h * h) - epsilon * (right - 2.0 * vals[k] + left) / (h * h)
}

/// The residual vector `N~(u)` over all nodes.
pub fn hj_tilde_vector(u: &ValueField, rho: &DensityField, epsilon: f64) -> Vec<f64> {
    (0..u.len())
        .map(|k| hj_tilde_residual(u, rho, k, epsilon))
        .collect()
}

/// Analytic Jacobian `D_u N~` (derivative of `max{s,0}^2` taken as `2 max{s,0}`).
pub fn jacobian(u: &ValueField, rho: &DensityField, epsilon: f64) -> Tridiagonal {
    let n = u.len();
    let h2 = u.grid().spacing().powi(2);
    let vals = u.values();
    let mut jac = Tridiagonal::zeros(n);
    for k in 0..n {
        let (p, q) = upwind_differences(vals, k);
        let a = (1.0 - rho[k]) * (1.0 - rho[k]) / h2;
        let e = epsilon / h2;
        if k == 0 {
            // ghost u_{-1} = u_1: both branches and the Laplacian couple to u_1
            jac.diag[0] = a * (p + q) + 2.0 * e;
            jac.upper[0] = -a * (p + q) - 2.0 * e;
        } else if k + 1 == n {
            jac.diag[k] = a * (p + q) + 2.0 * e;
            jac.lower[k] = -a * (p + q) - 2.0 * e;
        } else {
            jac.diag[k] = a * (p + q) + 2.0 * e;
            jac.lower[k] = -a * p - e;
            jac.upper[k] = -a * q - e;
        }
    }
    jac
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportOperator {
    pub grid: Grid1D,
    /// `(D_u N~)^T`.
    pub matrix: Tridiagonal,
    pub epsilon: f64,
    pub flux: FluxSpec,
    pub congestion: Vec<bool>,
}

impl TransportOperator {
    /// Assembles without checking that `u` solves the eikonal equation for `rho`.
    pub fn assemble_unchecked(
        u: &ValueField,
        rho: &DensityField,
        epsilon: f64,
        flux: FluxSpec,
        rho_cap: f64,
    ) -> Result<Self> {
        if u.grid() != rho.grid() {
            return Err(Error::GridMismatch);
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::Config(format!(
                "viscosity must be >= 0, got {epsilon}"
            )));
        }
        for end in flux.ends() {
            if let DensityBc::Influx(j) = end {
                if !(j >= 0.0 && j.is_finite()) {
                    return Err(Error::Config(format!("influx must be >= 0, got {j}")));
                }
            }
        }
        Ok(Self {
            grid: *u.grid(),
            matrix: jacobian(u, rho, epsilon).transpose(),
            epsilon,
            flux,
            congestion: rho.values().iter().map(|&r| r >= rho_cap).collect(),
        })
    }

    /// Rate `-(J^T W rho)_k / w_k` of the free dynamics, without sources or pinning.
    pub fn apply(&self, rho: &[f64]) -> Vec<f64> {
        let w = self.grid.trapezoid_weights();
        let m: Vec<f64> = rho.iter().zip(&w).map(|(r, w)| r * w).collect();
        self.matrix
            .matvec(&m)
            .iter()
            .zip(&w)
            .map(|(v, w)| -v / w)
            .collect()
    }

    fn pinned(&self) -> [bool; 2] {
        self.flux
            .ends()
            .map(|e| matches!(e, DensityBc::Dirichlet(_)))
    }

    /// Rate at which mass enters the free (non-Dirichlet) nodes through each end.
    /// Influx ends contribute `j`; closed ends contribute zero.
    pub fn boundary_flux(&self, rho: &[f64]) -> [f64; 2] {
        let n = self.grid.len();
        let w = self.grid.trapezoid_weights();
        let row = |d: usize| {
            let mut s = self.matrix.diag[d] * w[d] * rho[d];
            if d > 0 {
                s += self.matrix.lower[d] * w[d - 1] * rho[d - 1];
            }
            if d + 1 < n {
                s += self.matrix.upper[d] * w[d + 1] * rho[d + 1];
            }
            s
        };
        let mut out = [0.0; 2];
        for (side, end) in self.flux.ends().iter().enumerate() {
            let node = if side == 0 { 0 } else { n - 1 };
            out[side] = match *end {
                DensityBc::NoFlux => 0.0,
                DensityBc::Influx(j) => j,
                DensityBc::Dirichlet(_) => row(node),
            };
        }
        out
    }

    /// Trapezoid mass carried by the free nodes.
    pub fn free_mass(&self, rho: &[f64]) -> f64 {
        let pinned = self.pinned();
        let n = rho.len();
        self.grid
            .trapezoid_weights()
            .iter()
            .zip(rho)
            .enumerate()
            .filter(|(k, _)| !((*k == 0 && pinned[0]) || (*k == n - 1 && pinned[1])))
            .map(|(_, (w, r))| w * r)
            .sum()
    }

    /// Solves `(alpha W + J^T W) x = alpha W hist + b` with Dirichlet rows pinned at `t`.
    fn implicit_solve(&self, alpha: f64, hist: &[f64], t: f64) -> Result<Vec<f64>> {
        let n = self.grid.len();
        let w = self.grid.trapezoid_weights();
        let mut sys = Tridiagonal::zeros(n);
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            sys.diag[i] = alpha * w[i] + self.matrix.diag[i] * w[i];
            if i > 0 {
                sys.lower[i] = self.matrix.lower[i] * w[i - 1];
            }
            if i + 1 < n {
                sys.upper[i] = self.matrix.upper[i] * w[i + 1];
            }
            rhs[i] = alpha * w[i] * hist[i];
        }
        for (side, end) in self.flux.ends().iter().enumerate() {
            let node = if side == 0 { 0 } else { n - 1 };
            match *end {
                DensityBc::NoFlux => {}
                DensityBc::Influx(j) => rhs[node] += j,
                DensityBc::Dirichlet(value) => {
                    sys.diag[node] = 1.0;
                    sys.lower[node] = 0.0;
                    sys.upper[node] = 0.0;
                    rhs[node] = value.at(t);
                }
            }
        }
        sys.solve(&rhs)
    }
}

/// Assembles `(D_u N~)^T`, refusing a `u` that does not solve the eikonal
/// equation for `rho` to the configured tolerance.
pub fn assemble_adjoint(
    u: &ValueField,
    rho: &DensityField,
    epsilon: f64,
    boundaries: &Boundaries,
    cfg: &EikonalConfig,
) -> Result<TransportOperator> {
    if u.grid() != rho.grid() {
        return Err(Error::GridMismatch);
    }
    let (node, residual) = residual_norm(u, rho, boundaries.value_bcs(), cfg.rho_cap);
    if residual > cfg.residual_tolerance {
        return Err(Error::StaleValueField {
            node,
            residual,
            tolerance: cfg.residual_tolerance,
        });
    }
    for (side, bc) in boundaries.value_bcs().iter().enumerate() {
        if let ValueBc::Dirichlet(v) = bc {
            let k = if side == 0 { 0 } else { u.len() - 1 };
            if u[k] != *v {
                return Err(Error::StaleValueField {
                    node: k,
                    residual: (u[k] - v).abs(),
                    tolerance: 0.0,
                });
            }
        }
    }
    TransportOperator::assemble_unchecked(u, rho, epsilon, boundaries.into(), cfg.rho_cap)
}

/// One implicit Euler step of the transport, Dirichlet data taken at `t_next`.
pub fn step_transport(
    rho: &DensityField,
    op: &TransportOperator,
    dt: f64,
    t_next: f64,
) -> Result<DensityField> {
    if !(dt > 0.0) {
        return Err(Error::Config(format!("time step must be > 0, got {dt}")));
    }
    if rho.grid() != &op.grid {
        return Err(Error::GridMismatch);
    }
    let x = op.implicit_solve(1.0 / dt, rho.values(), t_next)?;
    DensityField::new(op.grid, x)
}

/// Fixed-step BDF2 with an implicit Euler start.
#[derive(Debug, Clone, Default)]
pub struct TransportStepper {
    previous: Option<Vec<f64>>,
}

impl TransportStepper {
    pub fn new() -> Self {
        Self::default()
    }

    /// Advances `rho` (the current state) by `dt` with operator `op`.
    pub fn step(
        &mut self,
        rho: &DensityField,
        op: &TransportOperator,
        dt: f64,
        t_next: f64,
    ) -> Result<DensityField> {
        let next = match &self.previous {
            None => step_transport(rho, op, dt, t_next)?,
            Some(prev) => {
                if !(dt > 0.0) {
                    return Err(Error::Config(format!("time step must be > 0, got {dt}")));
                }
                let hist: Vec<f64> = rho
                    .values()
                    .iter()
                    .zip(prev)
                    .map(|(c, p)| (4.0 * c - p) / 3.0)
                    .collect();
                let x = op.implicit_solve(1.5 / dt, &hist, t_next)?;
                DensityField::new(op.grid, x)?
            }
        };
        self.previous = Some(rho.values().to_vec());
        Ok(next)
    }

    pub fn is_started(&self) -> bool {
        self.previous.is_some()
    }
}

/// Plain unchecked assembly with default cap; convenient in tests and tools.
pub fn assemble_plain(
    u: &ValueField,
    rho: &DensityField,
    epsilon: f64,
    flux: FluxSpec,
) -> Result<TransportOperator> {
    TransportOperator::assemble_unchecked(u, rho, epsilon, flux, DEFAULT_RHO_CAP)
}
