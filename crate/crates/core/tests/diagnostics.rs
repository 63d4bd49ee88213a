use crowdsim_core::coupled::{run_scenario, Scenario, SimulationRecord};
use crowdsim_core::diagnostics::{
    check_bounds, du_lp_norms, du_lp_norms_from_u, estimate_report, lyapunov_series,
};
use crowdsim_core::{Boundaries, DensityField, EndCondition, Grid1D};
use std::sync::OnceLock;

fn exit_record() -> &'static SimulationRecord {
    static REC: OnceLock<SimulationRecord> = OnceLock::new();
    REC.get_or_init(|| {
        let g = Grid1D::unit(201).unwrap();
        let rho = DensityField::sample(g, |x| 0.9 * (3.0 * std::f64::consts::PI * x).sin().powi(2))
            .unwrap();
        let ends = Boundaries::new(EndCondition::exit(), EndCondition::exit());
        run_scenario(&Scenario::new(rho, ends, 0.01, 2.0)).unwrap()
    })
}

#[test]
fn exit_run_respects_the_bounds() {
    assert!(check_bounds(exit_record()));
}

#[test]
fn lyapunov_series_is_finite_and_positive() {
    let s = lyapunov_series(exit_record(), -2.0).unwrap();
    assert_eq!(s.values.len(), exit_record().len());
    assert!(s.first_singular.is_none());
    assert!(s.values.iter().all(|v| v.is_finite() && *v > 0.0));
    assert!(s.gronwall_ok);
}

#[test]
fn gradient_routes_agree() {
    let rec = exit_record();
    let identity = du_lp_norms(rec, &[2.0]).unwrap();
    let differenced = du_lp_norms_from_u(rec, &[2.0]).unwrap();
    assert!(identity[0].sup.is_finite());
    let rel = (identity[0].sup - differenced[0].sup).abs() / identity[0].sup;
    assert!(rel <= 0.05, "{rel}");
}

#[test]
fn lyapunov_series_is_continuous_in_alpha() {
    let rec = exit_record();
    let a = lyapunov_series(rec, -2.0).unwrap();
    let b = lyapunov_series(rec, -1.9).unwrap();
    for (i, rho) in rec.rho_snapshots.iter().enumerate() {
        let gaps = rho.values().iter().map(|r| 1.0 - r);
        let lo = gaps.clone().fold(f64::INFINITY, f64::min).powf(0.1);
        let hi = gaps.fold(0.0, f64::max).powf(0.1);
        let ratio = b.values[i] / a.values[i];
        assert!(
            ratio >= lo * (1.0 - 1e-12) && ratio <= hi * (1.0 + 1e-12),
            "snapshot {i}"
        );
    }
}

#[test]
fn report_bundles_every_check() {
    let rep = estimate_report(exit_record(), -2.0, &[2.0, 4.0]).unwrap();
    assert!(rep.bounds_ok && rep.dissipation_integral.is_finite());
    assert_eq!(rep.lp_norms.len(), 2);
    assert!(rep.lp_norms.iter().all(|s| s.singular_at.is_none()));
}
