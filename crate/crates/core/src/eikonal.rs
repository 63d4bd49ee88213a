//! Monotone upwind discretisation of `|Du|^2 = 1/(1 - rho)^2` and its
//! fast-sweeping solver.
//!
//! Endpoint stencils always use a mirror ghost (`u_{-1} := u_1`), which is the
//! reflecting closure; exit nodes are simply held at their Dirichlet value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DensityField, ValueBc, ValueField};

pub const DEFAULT_RHO_CAP: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EikonalConfig {
    pub max_iterations: usize,
    /// Sup-norm bound on the scaled residual, see [`SolveReport::residual`].
    pub residual_tolerance: f64,
    /// Densities above this are capped inside `1/(1 - rho)^2`.
    pub rho_cap: f64,
}

impl Default for EikonalConfig {
    fn default() -> Self {
        Self {
            max_iterations: 10_000,
            residual_tolerance: 1e-10,
            rho_cap: DEFAULT_RHO_CAP,
        }
    }
}

impl EikonalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tolerance > 0.0) {
            return Err(Error::Config("residual_tolerance must be > 0".into()));
        }
        if !(self.rho_cap > 0.0 && self.rho_cap < 1.0) {
            return Err(Error::Config("rho_cap must lie in (0, 1)".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

/// Residual at one node together with whether the density had to be capped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeResidual {
    pub value: f64,
    pub capped: bool,
}

/// Left and right neighbour values of node `k`, mirrored at the ends.
pub(crate) fn neighbours(u: &[f64], k: usize) -> (f64, f64) {
    let n = u.len();
    let left = if k == 0 { u[1] } else { u[k - 1] };
    let right = if k + 1 == n { u[n - 2] } else { u[k + 1] };
    (left, right)
}

/// Upwind differences `max{u_k - u_{k-1}, 0}` and `max{u_k - u_{k+1}, 0}`.
pub(crate) fn upwind_differences(u: &[f64], k: usize) -> (f64, f64) {
    let (left, right) = neighbours(u, k);
    ((u[k] - left).max(0.0), (u[k] - right).max(0.0))
}

fn capped(rho: f64, cap: f64) -> (f64, bool) {
    if rho >= cap {
        (cap, true)
    } else {
        (rho, false)
    }
}

/// The monotone scheme residual
/// `N_k(u) = max{u_k-u_{k-1},0}^2/(2h^2) + max{u_k-u_{k+1},0}^2/(2h^2) - 1/(1-rho_k)^2`.
pub fn hj_residual(u: &ValueField, rho: &DensityField, k: usize, rho_cap: f64) -> NodeResidual {
    let h = u.grid().spacing();
    let (p, q) = upwind_differences(u.values(), k);
    let (r, capped) = capped(rho[k], rho_cap);
    let value = (p * p + q * q) / (2.0 * h * h) - 1.0 / ((1.0 - r) * (1.0 - r));
    NodeResidual { value, capped }
}

/// Residual of the consistently scaled equation solved by [`solve_eikonal`]:
/// `(p^2 + q^2)/(2h^2) - 1/(2(1-rho_k)^2)`, i.e. `hj_residual + 1/(2(1-rho_k)^2)`.
pub fn eikonal_residual(
    u: &ValueField,
    rho: &DensityField,
    k: usize,
    rho_cap: f64,
) -> NodeResidual {
    let h = u.grid().spacing();
    let (p, q) = upwind_differences(u.values(), k);
    let (r, capped) = capped(rho[k], rho_cap);
    let value = (p * p + q * q) / (2.0 * h * h) - 0.5 / ((1.0 - r) * (1.0 - r));
    NodeResidual { value, capped }
}

/// Residual divided by `max(1, sigma^2, sigma |u_k| / h)`, `sigma = 1/(1-rho_k)`.
///
/// `sigma |u_k| / h` is the size of the rounding error that the differences
/// `u_k - u_{k±1}` feed into the residual, so the scaled value can always be
/// driven down to a few units of machine precision.
fn scaled_residual(u: &ValueField, rho: &DensityField, k: usize, rho_cap: f64) -> f64 {
    let r = rho[k].min(rho_cap);
    let sigma = 1.0 / (1.0 - r);
    let h = u.grid().spacing();
    let scale = (sigma * sigma).max(sigma * u[k].abs() / h).max(1.0);
    eikonal_residual(u, rho, k, rho_cap).value.abs() / scale
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub u: ValueField,
    /// Sup over free nodes of the scaled residual (see [`residual_norm`]).
    pub residual: f64,
    pub sweeps: usize,
    /// Nodes where `rho >= rho_cap` and the slowness was capped.
    pub congested: Vec<usize>,
}

fn exit_values(n: usize, bcs: [ValueBc; 2]) -> Vec<Option<f64>> {
    let mut fixed = vec![None; n];
    if let ValueBc::Dirichlet(v) = bcs[0] {
        fixed[0] = Some(v);
    }
    if let ValueBc::Dirichlet(v) = bcs[1] {
        fixed[n - 1] = Some(v);
    }
    fixed
}

/// Largest `t` solving `max{t-a,0}^2 + max{t-b,0}^2 = s^2`.
fn local_update(a: f64, b: f64, s: f64) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    if !lo.is_finite() {
        return f64::INFINITY;
    }
    if hi - lo >= s {
        lo + s
    } else {
        let d = a - b;
        0.5 * ((a + b) + (2.0 * s * s - d * d).sqrt())
    }
}

/// Sup over non-exit nodes of `|eikonal_residual|` divided by
/// `max(1, sigma^2, sigma |u_k| / h)` with `sigma = 1/(1-rho_k)`; returns the
/// worst node and its value.
pub fn residual_norm(
    u: &ValueField,
    rho: &DensityField,
    bcs: [ValueBc; 2],
    rho_cap: f64,
) -> (usize, f64) {
    let fixed = exit_values(u.len(), bcs);
    (0..u.len())
        .filter(|&k| fixed[k].is_none())
        .map(|k| (k, scaled_residual(u, rho, k, rho_cap)))
        .fold((0, 0.0), |acc, (k, r)| if r > acc.1 { (k, r) } else { acc })
}

/// Solves the discrete eikonal equation by alternating Gauss-Seidel sweeps.
pub fn solve_eikonal(
    rho: &DensityField,
    bcs: [ValueBc; 2],
    cfg: &EikonalConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    if !bcs.iter().any(ValueBc::is_exit) {
        return Err(Error::Config(
            "eikonal needs at least one exit (Dirichlet u) endpoint".into(),
        ));
    }
    let grid = *rho.grid();
    let n = grid.len();
    let h = grid.spacing();
    let fixed = exit_values(n, bcs);

    let mut congested = Vec::new();
    let step: Vec<f64> = rho
        .values()
        .iter()
        .enumerate()
        .map(|(k, &r)| {
            let (r, c) = capped(r, cfg.rho_cap);
            if c {
                congested.push(k);
            }
            h / (1.0 - r)
        })
        .collect();

    let mut u: Vec<f64> = fixed.iter().map(|f| f.unwrap_or(f64::INFINITY)).collect();

    let mut sweeps = 0;
    loop {
        let mut changed = false;
        let forward = sweeps % 2 == 0;
        for i in 0..n {
            let k = if forward { i } else { n - 1 - i };
            if fixed[k].is_some() {
                continue;
            }
            let (a, b) = neighbours(&u, k);
            let t = local_update(a, b, step[k]);
            if t < u[k] {
                u[k] = t;
                changed = true;
            }
        }
        sweeps += 1;
        if !changed && sweeps >= 2 {
            break;
        }
        if sweeps >= cfg.max_iterations {
            let residual = if u.iter().all(|v| v.is_finite()) {
                let field = ValueField::new(grid, u)?;
                residual_norm(&field, rho, bcs, cfg.rho_cap).1
            } else {
                f64::INFINITY
            };
            return Err(Error::EikonalNotConverged {
                iterations: sweeps,
                residual,
            });
        }
    }

    let u = ValueField::new(grid, u)?;
    let (_, residual) = residual_norm(&u, rho, bcs, cfg.rho_cap);
    if residual > cfg.residual_tolerance {
        return Err(Error::EikonalNotConverged {
            iterations: sweeps,
            residual,
        });
    }
    Ok(SolveReport {
        u,
        residual,
        sweeps,
        congested,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;
    use proptest::prelude::*;

    const EXITS: [ValueBc; 2] = [ValueBc::Dirichlet(0.0), ValueBc::Dirichlet(0.0)];

    fn field(grid: Grid1D, f: impl Fn(f64) -> f64) -> ValueField {
        ValueField::sample(grid, f).unwrap()
    }

    #[test]
    fn residual_linear_slope_one() {
        let g = Grid1D::unit(11).unwrap();
        let u = field(g, |x| x);
        let rho = DensityField::zeros(g);
        let r = hj_residual(&u, &rho, 5, DEFAULT_RHO_CAP);
        assert!((r.value + 0.5).abs() < 1e-12);
        assert!(!r.capped);
    }

    #[test]
    fn residual_distance_kink() {
        let g = Grid1D::unit(11).unwrap();
        let u = field(g, |x| x.min(1.0 - x));
        let rho = DensityField::zeros(g);
        let r = hj_residual(&u, &rho, 5, DEFAULT_RHO_CAP);
        assert!(r.value.abs() < 1e-12);
    }

    #[test]
    fn residual_half_density_slope_two() {
        let g = Grid1D::new(0.0, 4.0, 5).unwrap();
        let u = field(g, |x| 2.0 * x);
        let rho = DensityField::constant(g, 0.5).unwrap();
        let r = hj_residual(&u, &rho, 2, DEFAULT_RHO_CAP);
        assert!((r.value + 2.0).abs() < 1e-12);
    }

    #[test]
    fn residual_flags_congestion() {
        let g = Grid1D::unit(5).unwrap();
        let u = field(g, |x| x);
        let rho = DensityField::constant(g, 1.0).unwrap();
        let r = hj_residual(&u, &rho, 2, DEFAULT_RHO_CAP);
        assert!(r.capped);
        assert!(r.value.is_finite());
    }

    #[test]
    fn solve_vacuum_distance_function() {
        let g = Grid1D::unit(101).unwrap();
        let rho = DensityField::zeros(g);
        let sol = solve_eikonal(&rho, EXITS, &EikonalConfig::default()).unwrap();
        for (k, x) in g.nodes().enumerate() {
            assert!((sol.u[k] - x.min(1.0 - x)).abs() <= g.spacing());
        }
        assert!(sol.residual <= 1e-10);
        assert_eq!(sol.u[0], 0.0);
        assert_eq!(sol.u[100], 0.0);
    }

    #[test]
    fn solve_half_density() {
        let g = Grid1D::unit(101).unwrap();
        let rho = DensityField::constant(g, 0.5).unwrap();
        let sol = solve_eikonal(&rho, EXITS, &EikonalConfig::default()).unwrap();
        for (k, x) in g.nodes().enumerate() {
            assert!((sol.u[k] - 2.0 * x.min(1.0 - x)).abs() <= 2.0 * g.spacing());
        }
    }

    #[test]
    fn solve_one_exit_with_wall() {
        let g = Grid1D::unit(101).unwrap();
        let rho = DensityField::zeros(g);
        let bcs = [ValueBc::Reflecting, ValueBc::Dirichlet(0.0)];
        let sol = solve_eikonal(&rho, bcs, &EikonalConfig::default()).unwrap();
        for (k, x) in g.nodes().enumerate() {
            assert!((sol.u[k] - (1.0 - x)).abs() <= g.spacing());
        }
    }

    #[test]
    fn solve_without_exit_is_config_error() {
        let g = Grid1D::unit(11).unwrap();
        let rho = DensityField::zeros(g);
        let err = solve_eikonal(
            &rho,
            [ValueBc::Reflecting, ValueBc::Reflecting],
            &EikonalConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn solve_reports_non_convergence() {
        let g = Grid1D::unit(51).unwrap();
        let rho = DensityField::zeros(g);
        let cfg = EikonalConfig {
            max_iterations: 1,
            ..Default::default()
        };
        let err =
            solve_eikonal(&rho, [ValueBc::Reflecting, ValueBc::Dirichlet(0.0)], &cfg).unwrap_err();
        assert!(matches!(
            err,
            Error::EikonalNotConverged { iterations: 1, .. }
        ));
    }

    #[test]
    fn capped_density_is_recorded() {
        let g = Grid1D::unit(21).unwrap();
        let rho =
            DensityField::sample(g, |x| if (x - 0.5).abs() < 0.06 { 1.0 } else { 0.2 }).unwrap();
        let sol = solve_eikonal(&rho, EXITS, &EikonalConfig::default()).unwrap();
        assert_eq!(sol.congested, vec![9, 10, 11]);
        assert!(sol.u.values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn nonzero_exit_value_is_held() {
        let g = Grid1D::unit(41).unwrap();
        let rho = DensityField::zeros(g);
        let sol = solve_eikonal(
            &rho,
            [ValueBc::Dirichlet(0.3), ValueBc::Dirichlet(0.0)],
            &EikonalConfig::default(),
        )
        .unwrap();
        assert_eq!(sol.u[0], 0.3);
        assert!((sol.u[20] - 0.5).abs() <= g.spacing());
    }

    proptest! {
        #[test]
        fn residual_nonincreasing_in_neighbours(
            vals in proptest::collection::vec(-1.0f64..1.0, 5),
            rho_k in 0.0f64..0.9,
            bump in 0.0f64..0.5,
            side in 0usize..2,
        ) {
            let g = Grid1D::unit(5).unwrap();
            let rho = DensityField::constant(g, rho_k).unwrap();
            let u = ValueField::new(g, vals.clone()).unwrap();
            let base = hj_residual(&u, &rho, 2, DEFAULT_RHO_CAP).value;
            let mut bumped = vals;
            bumped[if side == 0 { 1 } else { 3 }] += bump;
            let u2 = ValueField::new(g, bumped).unwrap();
            let after = hj_residual(&u2, &rho, 2, DEFAULT_RHO_CAP).value;
            prop_assert!(after <= base + 1e-12);
        }

        #[test]
        fn symmetric_data_gives_symmetric_solution(
            amps in proptest::collection::vec(0.0f64..0.9, 3),
        ) {
            let g = Grid1D::unit(61).unwrap();
            let pi = std::f64::consts::PI;
            let f = |x: f64| {
                let s = (pi * x).sin();
                (amps[0] * s * s + amps[1] * (2.0 * pi * x).cos().powi(2) * 0.5
                    + amps[2] * (x * (1.0 - x)))
                    .min(0.95)
            };
            // evaluate on mirrored nodes so the samples are bit-symmetric
            let mut vals = vec![0.0; 61];
            for k in 0..=30 {
                let v = f(g.node(k));
                vals[k] = v;
                vals[60 - k] = v;
            }
            let rho = DensityField::new(g, vals).unwrap();
            let sol = solve_eikonal(&rho, EXITS, &EikonalConfig::default()).unwrap();
            for k in 0..61 {
                prop_assert!((sol.u[k] - sol.u[60 - k]).abs() <= 1e-10);
            }
        }

        #[test]
        fn larger_density_gives_larger_exit_time(
            base in proptest::collection::vec(0.0f64..0.6, 41),
            extra in proptest::collection::vec(0.0f64..0.3, 41),
            wall in proptest::bool::ANY,
        ) {
            let g = Grid1D::unit(41).unwrap();
            let lo = DensityField::new(g, base.clone()).unwrap();
            let hi = DensityField::new(
                g,
                base.iter().zip(&extra).map(|(a, b)| a + b).collect(),
            ).unwrap();
            let bcs = if wall { [ValueBc::Reflecting, ValueBc::Dirichlet(0.0)] } else { EXITS };
            let cfg = EikonalConfig::default();
            let u_lo = solve_eikonal(&lo, bcs, &cfg).unwrap().u;
            let u_hi = solve_eikonal(&hi, bcs, &cfg).unwrap().u;
            for k in 0..41 {
                prop_assert!(u_hi[k] >= u_lo[k] - 1e-12);
            }
        }
    }
}
