//! Time-dependent 1D simulation: at every step the eikonal equation is solved
//! for the current density, the adjoint transport is assembled from that `u`,
//! and the density is advanced by one BDF step.

use serde::{Deserialize, Serialize};

use crate::eikonal::{residual_norm, solve_eikonal, EikonalConfig};
use crate::error::{Error, Result};
use crate::grid::{Boundaries, DensityField, Grid1D, ValueField};
use crate::transport::{assemble_adjoint, TransportStepper};

pub const DEFAULT_BREAKDOWN_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub grid: Grid1D,
    pub rho_initial: DensityField,
    pub boundaries: Boundaries,
    pub epsilon: f64,
    pub t_end: f64,
    /// Requested step; shortened so that a whole number of steps ends at `t_end`.
    pub dt: f64,
    pub record_every: usize,
    pub eikonal: EikonalConfig,
    /// The run halts once `max rho > 1 + breakdown_tol`.
    pub breakdown_tol: f64,
}

impl Scenario {
    /// Scenario with default solver settings and `dt = h/2`.
    pub fn new(
        rho_initial: DensityField,
        boundaries: Boundaries,
        epsilon: f64,
        t_end: f64,
    ) -> Self {
        let grid = *rho_initial.grid();
        Self {
            grid,
            dt: grid.spacing() / 2.0,
            rho_initial,
            boundaries,
            epsilon,
            t_end,
            record_every: 1,
            eikonal: EikonalConfig::default(),
            breakdown_tol: DEFAULT_BREAKDOWN_TOL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rho_initial.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!(
                "t_end must be >= 0, got {}",
                self.t_end
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be positive".into()));
        }
        if !(self.breakdown_tol >= 0.0) {
            return Err(Error::Config("breakdown_tol must be >= 0".into()));
        }
        self.eikonal.validate()?;
        self.boundaries.validate()
    }

    /// Number of steps and the step actually taken.
    pub fn schedule(&self) -> (usize, f64) {
        if self.t_end == 0.0 {
            return (0, self.dt);
        }
        let steps = (self.t_end / self.dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        (steps, self.t_end / steps as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// `max rho` exceeded `1 + breakdown_tol` at `time`.
    Breakdown {
        time: f64,
        node: usize,
        value: f64,
    },
}

/// Bookkeeping for one transport step ending at `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSample {
    pub t: f64,
    /// Trapezoid mass at `t`.
    pub mass: f64,
    /// Rate at which mass enters the free nodes through each end.
    pub boundary_flux: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRecord {
    pub times: Vec<f64>,
    pub rho_snapshots: Vec<DensityField>,
    pub u_snapshots: Vec<ValueField>,
    pub mass_series: Vec<f64>,
    pub min_rho: Vec<f64>,
    pub max_rho: Vec<f64>,
    /// Steps at which the eikonal slowness was capped, as `(time, node)`.
    pub congestion_events: Vec<(f64, usize)>,
    pub steps: Vec<StepSample>,
    pub dt: f64,
    pub status: RunStatus,
}

impl SimulationRecord {
    fn new(dt: f64) -> Self {
        Self {
            times: Vec::new(),
            rho_snapshots: Vec::new(),
            u_snapshots: Vec::new(),
            mass_series: Vec::new(),
            min_rho: Vec::new(),
            max_rho: Vec::new(),
            congestion_events: Vec::new(),
            steps: Vec::new(),
            dt,
            status: RunStatus::Completed,
        }
    }

    fn push(&mut self, t: f64, rho: &DensityField, u: &ValueField) {
        self.times.push(t);
        self.mass_series.push(rho.mass());
        self.min_rho.push(rho.min());
        self.max_rho.push(rho.max());
        self.rho_snapshots.push(rho.clone());
        self.u_snapshots.push(u.clone());
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn grid(&self) -> Option<&Grid1D> {
        self.rho_snapshots.first().map(DensityField::grid)
    }

    pub fn final_rho(&self) -> Option<&DensityField> {
        self.rho_snapshots.last()
    }

    /// Largest scaled eikonal residual over all stored `(rho, u)` pairs.
    pub fn ordering_residual(&self, boundaries: &Boundaries, rho_cap: f64) -> f64 {
        self.rho_snapshots
            .iter()
            .zip(&self.u_snapshots)
            .map(|(r, u)| residual_norm(u, r, boundaries.value_bcs(), rho_cap).1)
            .fold(0.0, f64::max)
    }
}

/// A run that stopped on a numerical error; the record holds everything up to it.
#[derive(Debug, thiserror::Error)]
#[error("simulation aborted at t = {time}: {source}")]
pub struct RunFailure {
    pub time: f64,
    #[source]
    pub source: Error,
    pub record: Box<SimulationRecord>,
}

pub fn run_scenario(s: &Scenario) -> std::result::Result<SimulationRecord, RunFailure> {
    let (steps, dt) = s.schedule();
    let mut record = SimulationRecord::new(dt);
    let fail = |time: f64, source: Error, record: SimulationRecord| RunFailure {
        time,
        source,
        record: Box::new(record),
    };
    if let Err(e) = s.validate() {
        return Err(fail(0.0, e, record));
    }

    let bcs = s.boundaries.value_bcs();
    let mut rho = s.rho_initial.clone();
    let mut stepper = TransportStepper::new();
    for m in 0..=steps {
        let t = m as f64 * dt;
        let report = match solve_eikonal(&rho, bcs, &s.eikonal) {
            Ok(r) => r,
            Err(e) => return Err(fail(t, e, record)),
        };
        record
            .congestion_events
            .extend(report.congested.iter().map(|&k| (t, k)));

        let (node, peak) =
            rho.values()
                .iter()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |a, (k, &v)| if v > a.1 { (k, v) } else { a },
                );
        let broke = peak > 1.0 + s.breakdown_tol;
        if m % s.record_every == 0 || m == steps || broke {
            record.push(t, &rho, &report.u);
        }
        if broke {
            record.status = RunStatus::Breakdown {
                time: t,
                node,
                value: peak,
            };
            return Ok(record);
        }
        if m == steps {
            break;
        }

        let t_next = (m + 1) as f64 * dt;
        let op = match assemble_adjoint(&report.u, &rho, s.epsilon, &s.boundaries, &s.eikonal) {
            Ok(op) => op,
            Err(e) => return Err(fail(t, e, record)),
        };
        rho = match stepper.step(&rho, &op, dt, t_next) {
            Ok(next) => next,
            Err(e) => return Err(fail(t, e, record)),
        };
        record.steps.push(StepSample {
            t: t_next,
            mass: rho.mass(),
            boundary_flux: op.boundary_flux(rho.values()),
        });
    }
    Ok(record)
}

/// `||rho(., t_i) - stat||_inf` for every recorded snapshot.
pub fn distance_to_stationary(rec: &SimulationRecord, stat: &DensityField) -> Result<Vec<f64>> {
    rec.rho_snapshots
        .iter()
        .map(|r| r.sup_distance(stat))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::EndCondition;

    fn exit_problem(n: usize, amp: f64, eps: f64, t_end: f64) -> Scenario {
        let g = Grid1D::unit(n).unwrap();
        let rho = DensityField::sample(g, |x| amp * (3.0 * std::f64::consts::PI * x).sin().powi(2))
            .unwrap();
        Scenario::new(
            rho,
            Boundaries::new(EndCondition::exit(), EndCondition::exit()),
            eps,
            t_end,
        )
    }

    #[test]
    fn zero_density_is_a_fixed_point() {
        let s = exit_problem(51, 0.0, 0.01, 0.2);
        let rec = run_scenario(&s).unwrap();
        assert_eq!(rec.status, RunStatus::Completed);
        for (r, u) in rec.rho_snapshots.iter().zip(&rec.u_snapshots) {
            assert!(r.values().iter().all(|&v| v == 0.0));
            for (k, x) in s.grid.nodes().enumerate() {
                assert!((u[k] - x.min(1.0 - x)).abs() <= s.grid.spacing());
            }
        }
    }

    #[test]
    fn schedule_hits_t_end() {
        let mut s = exit_problem(11, 0.5, 0.1, 0.35);
        s.dt = 0.1;
        let (steps, dt) = s.schedule();
        assert_eq!(steps, 4);
        assert!((dt * steps as f64 - 0.35).abs() < 1e-15);
        s.t_end = 0.3;
        assert_eq!(s.schedule().0, 3);
    }

    #[test]
    fn zero_length_run_keeps_initial_data() {
        let s = exit_problem(21, 0.5, 0.1, 0.0);
        let rec = run_scenario(&s).unwrap();
        assert_eq!(rec.len(), 1);
        assert_eq!(rec.rho_snapshots[0], s.rho_initial);
        assert!(rec.steps.is_empty());
    }

    #[test]
    fn snapshots_follow_record_every() {
        let mut s = exit_problem(21, 0.5, 0.1, 1.0);
        s.dt = 0.1;
        s.record_every = 3;
        let rec = run_scenario(&s).unwrap();
        let expected = [0.0, 0.3, 0.6, 0.9, 1.0];
        assert_eq!(rec.len(), expected.len());
        for (t, e) in rec.times.iter().zip(expected) {
            assert!((t - e).abs() < 1e-12);
        }
        assert_eq!(rec.steps.len(), 10);
        assert_eq!(rec.mass_series.len(), rec.u_snapshots.len());
    }

    #[test]
    fn stored_pairs_satisfy_the_eikonal_equation() {
        let s = exit_problem(41, 0.7, 0.05, 0.3);
        let rec = run_scenario(&s).unwrap();
        assert!(rec.ordering_residual(&s.boundaries, s.eikonal.rho_cap) <= 1e-10);
    }

    #[test]
    fn distance_to_itself_is_zero() {
        let s = exit_problem(21, 0.0, 0.1, 0.1);
        let rec = run_scenario(&s).unwrap();
        let d = distance_to_stationary(&rec, &DensityField::zeros(s.grid)).unwrap();
        assert!(d.iter().all(|&v| v == 0.0));
        let other = DensityField::zeros(Grid1D::unit(11).unwrap());
        assert!(distance_to_stationary(&rec, &other).is_err());
    }

    #[test]
    fn invalid_scenario_is_rejected_with_empty_record() {
        let mut s = exit_problem(21, 0.5, 0.1, 1.0);
        s.dt = 0.0;
        let err = run_scenario(&s).unwrap_err();
        assert!(matches!(err.source, Error::Config(_)));
        assert!(err.record.is_empty());
    }
}
