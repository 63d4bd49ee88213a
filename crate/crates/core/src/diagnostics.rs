//! Read-only checks of the a priori estimates on a simulation record: density
//! bounds, the Lyapunov integrals `int (1-rho)^(alpha+1)` and the integrability
//! of `|Du|^(2p)`.

use serde::{Deserialize, Serialize};

use crate::coupled::SimulationRecord;
use crate::error::{Error, Result};
use crate::grid::{DensityField, Grid1D};

pub const BOUND_TOL: f64 = 1e-9;
pub const DEFAULT_ALPHA: f64 = -2.0;
pub const DEFAULT_P: [f64; 2] = [2.0, 4.0];

/// True iff every snapshot lies in `[-1e-9, 1 + 1e-9]`.
pub fn check_bounds(rec: &SimulationRecord) -> bool {
    rec.rho_snapshots.iter().all(|r| {
        r.values()
            .iter()
            .all(|&v| (-BOUND_TOL..=1.0 + BOUND_TOL).contains(&v))
    })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha < -1.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("alpha must be < -1, got {alpha}")))
    }
}

fn check_p(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("p must lie in (1, inf), got {p}")))
    }
}

fn first_congested(rho: &DensityField) -> Option<usize> {
    rho.values().iter().position(|&v| v >= 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSeries {
    pub alpha: f64,
    pub times: Vec<f64>,
    /// `int (1-rho)^(alpha+1)` per snapshot, up to the first singular one.
    pub values: Vec<f64>,
    /// Largest logarithmic slope over the first 10% of the run, floored at 0.
    pub c_hat: f64,
    /// Whether `I(t) <= I(0) exp(c_hat t)` at every computed snapshot.
    pub gronwall_ok: bool,
    /// First snapshot with `rho >= 1`, where the integrand is singular.
    pub first_singular: Option<usize>,
}

pub fn lyapunov_series(rec: &SimulationRecord, alpha: f64) -> Result<LyapunovSeries> {
    check_alpha(alpha)?;
    let mut out = LyapunovSeries {
        alpha,
        times: Vec::new(),
        values: Vec::new(),
        c_hat: 0.0,
        gronwall_ok: true,
        first_singular: None,
    };
    for (i, (t, rho)) in rec.times.iter().zip(&rec.rho_snapshots).enumerate() {
        if first_congested(rho).is_some() {
            out.first_singular = Some(i);
            break;
        }
        let g: Vec<f64> = rho
            .values()
            .iter()
            .map(|&r| (1.0 - r).powf(alpha + 1.0))
            .collect();
        out.times.push(*t);
        out.values.push(rho.grid().integrate(&g));
    }
    let (Some(&t0), Some(&t_last)) = (out.times.first(), out.times.last()) else {
        return Ok(out);
    };
    let window = t0 + 0.1 * (t_last - t0);
    out.c_hat = out
        .times
        .windows(2)
        .zip(out.values.windows(2))
        .take_while(|(t, _)| t[1] <= window || t[0] == t0)
        .map(|(t, v)| (v[1] / v[0]).ln() / (t[1] - t[0]))
        .fold(0.0, f64::max);
    let i0 = out.values[0];
    out.gronwall_ok = out
        .times
        .iter()
        .zip(&out.values)
        .all(|(&t, &v)| v <= i0 * (out.c_hat * (t - t0)).exp() * (1.0 + 1e-12));
    Ok(out)
}

fn gradient_energy(grid: &Grid1D, g: &[f64]) -> f64 {
    let h = grid.spacing();
    g.windows(2).map(|w| (w[1] - w[0]).powi(2) / h).sum()
}

/// `int_0^T int |D (1-rho)^((alpha+1)/2)|^2`, trapezoid in time over the
/// snapshots before the first singular one.
pub fn dissipation_integral(rec: &SimulationRecord, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let mut samples = Vec::new();
    for (t, rho) in rec.times.iter().zip(&rec.rho_snapshots) {
        if first_congested(rho).is_some() {
            break;
        }
        let g: Vec<f64> = rho
            .values()
            .iter()
            .map(|&r| (1.0 - r).powf(0.5 * (alpha + 1.0)))
            .collect();
        samples.push((*t, gradient_energy(rho.grid(), &g)));
    }
    Ok(samples
        .windows(2)
        .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSeries {
    pub p: f64,
    /// `int |Du|^(2p)` per snapshot.
    pub values: Vec<f64>,
    pub sup: f64,
    /// `(snapshot, node)` of the first `rho >= 1` when the supremum is infinite.
    pub singular_at: Option<(usize, usize)>,
}

fn lp_series(p: f64, values: Vec<f64>, singular_at: Option<(usize, usize)>) -> LpSeries {
    let sup = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    LpSeries {
        p,
        values,
        sup,
        singular_at,
    }
}

/// `int |Du|^(2p)` through the eikonal identity `|Du|^2 = (1-rho)^(-2)`.
pub fn du_lp_norms(rec: &SimulationRecord, p_values: &[f64]) -> Result<Vec<LpSeries>> {
    p_values
        .iter()
        .map(|&p| {
            check_p(p)?;
            let mut singular_at = None;
            let values = rec
                .rho_snapshots
                .iter()
                .enumerate()
                .map(|(i, rho)| match first_congested(rho) {
                    Some(k) => {
                        singular_at.get_or_insert((i, k));
                        f64::INFINITY
                    }
                    None => {
                        let g: Vec<f64> = rho
                            .values()
                            .iter()
                            .map(|&r| (1.0 - r).powf(-2.0 * p))
                            .collect();
                        rho.grid().integrate(&g)
                    }
                })
                .collect();
            Ok(lp_series(p, values, singular_at))
        })
        .collect()
}

/// `int |Du|^(2p)` from one-sided differences of the stored `u` snapshots.
pub fn du_lp_norms_from_u(rec: &SimulationRecord, p_values: &[f64]) -> Result<Vec<LpSeries>> {
    p_values
        .iter()
        .map(|&p| {
            check_p(p)?;
            let values = rec
                .u_snapshots
                .iter()
                .map(|u| {
                    let h = u.grid().spacing();
                    u.values()
                        .windows(2)
                        .map(|w| h * ((w[1] - w[0]).abs() / h).powf(2.0 * p))
                        .sum()
                })
                .collect();
            Ok(lp_series(p, values, None))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub alpha: f64,
    pub lyapunov: LyapunovSeries,
    pub dissipation_integral: f64,
    pub lp_norms: Vec<LpSeries>,
    pub bounds_ok: bool,
}

pub fn estimate_report(
    rec: &SimulationRecord,
    alpha: f64,
    p_values: &[f64],
) -> Result<EstimateReport> {
    Ok(EstimateReport {
        alpha,
        lyapunov: lyapunov_series(rec, alpha)?,
        dissipation_integral: dissipation_integral(rec, alpha)?,
        lp_norms: du_lp_norms(rec, p_values)?,
        bounds_ok: check_bounds(rec),
    })
}
