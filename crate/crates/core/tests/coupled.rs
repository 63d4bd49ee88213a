use crowdsim_core::coupled::{
    distance_to_stationary, run_scenario, RunStatus, Scenario, SimulationRecord,
};
use crowdsim_core::grid::{BoundaryValue, DensityBc, EndCondition, ValueBc};
use crowdsim_core::stationary::stationary_with_left_value;
use crowdsim_core::{Boundaries, DensityField, Grid1D};
use std::f64::consts::PI;

fn exit_problem(n: usize, t_end: f64) -> Scenario {
    let g = Grid1D::unit(n).unwrap();
    let rho = DensityField::sample(g, |x| 0.9 * (3.0 * PI * x).sin().powi(2)).unwrap();
    Scenario::new(
        rho,
        Boundaries::new(EndCondition::exit(), EndCondition::exit()),
        0.01,
        t_end,
    )
}

fn influx_problem(n: usize, t_end: f64) -> Scenario {
    let g = Grid1D::unit(n).unwrap();
    let left = EndCondition {
        rho: DensityBc::Influx(1.0),
        u: ValueBc::Reflecting,
    };
    Scenario::new(
        DensityField::zeros(g),
        Boundaries::new(left, EndCondition::exit()),
        0.1,
        t_end,
    )
}

fn ramp_problem(n: usize, t_end: f64) -> Scenario {
    let g = Grid1D::unit(n).unwrap();
    let left = EndCondition {
        rho: DensityBc::Dirichlet(BoundaryValue::Ramp {
            amplitude: -0.2,
            rate: 10.0,
        }),
        u: ValueBc::Reflecting,
    };
    let rho = DensityField::sample(g, |x| (x * (1.0 - x)).powi(2)).unwrap();
    let mut s = Scenario::new(
        rho,
        Boundaries::new(left, EndCondition::exit()),
        0.05,
        t_end,
    );
    s.record_every = ((0.05 / s.dt).round() as usize).max(1);
    s
}

fn tail(rec: &SimulationRecord) -> std::ops::Range<usize> {
    rec.len() / 2..rec.len()
}

#[test]
fn exit_problem_empties_the_corridor() {
    let rec = run_scenario(&exit_problem(201, 2.0)).unwrap();
    assert_eq!(rec.status, RunStatus::Completed);
    assert!(rec.mass_series.windows(2).all(|w| w[1] <= w[0]));
    let (m0, m1) = (rec.mass_series[0], *rec.mass_series.last().unwrap());
    assert!(m1 < 0.01 * m0, "{m1} vs {m0}");
    assert!(rec.min_rho.iter().all(|&v| v >= -1e-9));
    assert!(rec.max_rho.iter().all(|&v| v <= 1.0 + 1e-9));
    assert!(rec.ordering_residual(&exit_problem(201, 0.0).boundaries, 1.0 - 1e-6) < 1e-6);
}

#[test]
fn vacuum_stays_empty_and_u_is_the_distance() {
    let mut s = exit_problem(101, 0.5);
    s.rho_initial = DensityField::zeros(s.grid);
    let rec = run_scenario(&s).unwrap();
    for (rho, u) in rec.rho_snapshots.iter().zip(&rec.u_snapshots) {
        assert!(rho.values().iter().all(|&v| v == 0.0));
        for (x, &v) in s.grid.nodes().zip(u.values()) {
            assert!((v - x.min(1.0 - x)).abs() <= s.grid.spacing());
        }
    }
}

#[test]
fn supercritical_influx_breaks_down_with_exact_balance() {
    let s = influx_problem(101, 2.0);
    let rec = run_scenario(&s).unwrap();
    let RunStatus::Breakdown { time, value, .. } = rec.status else {
        panic!("expected breakdown, got {:?}", rec.status);
    };
    assert!(time > 0.0 && time < 0.5 && value > 1.0 + s.breakdown_tol);

    // mass rises while the inflow exceeds the outflow
    assert!(rec.mass_series.windows(2).take(10).all(|w| w[1] > w[0]));

    // implicit Euler first, BDF2 afterwards; mass here is the free mass since rho(1) = 0
    let dt = rec.dt;
    let mut mass = vec![rec.mass_series[0]];
    mass.extend(rec.steps.iter().map(|s| s.mass));
    for (m, step) in rec.steps.iter().enumerate() {
        let rate = if m == 0 {
            (mass[1] - mass[0]) / dt
        } else {
            (3.0 * mass[m + 1] - 4.0 * mass[m] + mass[m - 1]) / (2.0 * dt)
        };
        let net = step.boundary_flux[0] + step.boundary_flux[1];
        assert_eq!(step.boundary_flux[0], 1.0);
        assert!((rate - net).abs() <= 1e-9, "step {m}: {rate} vs {net}");
    }
}

#[test]
fn trend_tail_approaches_the_stationary_profile() {
    let s = ramp_problem(201, 4.0);
    let rec = run_scenario(&s).unwrap();
    assert_eq!(rec.status, RunStatus::Completed);
    let stat = stationary_with_left_value(0.05, -0.2, 201).unwrap();
    let d = distance_to_stationary(&rec, &stat.field().unwrap()).unwrap();
    let t = tail(&rec);
    assert!(d[t.clone()].windows(2).all(|w| w[1] <= w[0]), "{:?}", &d[t]);
}

#[test]
fn long_time_limit_matches_the_stationary_solver() {
    let n = 2401;
    let rec = run_scenario(&ramp_problem(n, 4.0)).unwrap();
    let stat = stationary_with_left_value(0.05, -0.2, n).unwrap();
    let gap = rec
        .final_rho()
        .unwrap()
        .sup_distance(&stat.field().unwrap())
        .unwrap();
    assert!(gap <= 1e-3, "{gap}");
}

#[test]
fn halving_the_step_is_first_order() {
    let run = |dt: f64| {
        let mut s = exit_problem(101, 0.5);
        s.dt = dt;
        run_scenario(&s).unwrap().final_rho().unwrap().clone()
    };
    let (a, b, c) = (run(0.01), run(0.005), run(0.0025));
    let ratio = a.sup_distance(&b).unwrap() / b.sup_distance(&c).unwrap();
    assert!((1.5..=4.0).contains(&ratio), "{ratio}");
}

#[test]
fn closed_corridor_keeps_its_mass() {
    let g = Grid1D::unit(101).unwrap();
    let rho = DensityField::sample(g, |x| 0.8 * (-60.0 * (x - 0.4).powi(2)).exp()).unwrap();
    let right = EndCondition {
        rho: DensityBc::NoFlux,
        u: ValueBc::Dirichlet(0.0),
    };
    let s = Scenario::new(rho, Boundaries::new(EndCondition::wall(), right), 0.05, 1.0);
    let rec = run_scenario(&s).unwrap();
    let m0 = rec.mass_series[0];
    assert!(rec.mass_series.iter().all(|m| (m - m0).abs() <= 1e-9 * m0));
    assert!(rec.min_rho.iter().all(|&v| v >= -1e-12));
}

#[test]
fn zero_length_run_records_the_initial_data() {
    let s = exit_problem(51, 0.0);
    let rec = run_scenario(&s).unwrap();
    assert_eq!(rec.len(), 1);
    assert_eq!(rec.rho_snapshots[0], s.rho_initial);
}
