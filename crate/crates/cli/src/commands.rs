//! One function per command, each turning a resolved config into a [`Bundle`].

use serde_json::{json, Value};

use crowdsim_core::coupled::{run_scenario, RunStatus, Scenario, SimulationRecord};
use crowdsim_core::diagnostics::{du_lp_norms_from_u, estimate_report};
use crowdsim_core::eikonal::EikonalConfig;
use crowdsim_core::radial::{detect_shock, launch};
use crowdsim_core::stationary::{
    critical_current, solve_stationary, stationary_with_left_value, sweep_currents,
    StationaryProblem, StationarySolution,
};
use crowdsim_core::{Boundaries, BoundaryValue, DensityBc, DensityField, EndCondition, Grid1D};

use crate::config::{Command, RunConfig};
use crate::grammar::{self, Profile};
use crate::output::{Bundle, Cell, Status, Table};
use crate::{keyed, CliError};

fn to_json<T: serde::Serialize>(v: &T) -> Result<Value, CliError> {
    Ok(serde_json::to_value(v)?)
}

pub fn scenario(cfg: &RunConfig) -> Result<Scenario, CliError> {
    let grid = Grid1D::unit(cfg.usize("grid.n")?)?;
    let profile = Profile::parse(cfg.text("initial")?).map_err(keyed("initial"))?;
    let rho = DensityField::sample(grid, |x| profile.eval(x))?;
    let end = |side: &str| -> Result<EndCondition, CliError> {
        let rk = format!("bc.{side}.rho");
        let uk = format!("bc.{side}.u");
        Ok(EndCondition {
            rho: grammar::density_bc(cfg.text(&rk)?).map_err(keyed(&rk))?,
            u: grammar::value_bc(cfg.text(&uk)?).map_err(keyed(&uk))?,
        })
    };
    let mut s = Scenario::new(
        rho,
        Boundaries::new(end("left")?, end("right")?),
        cfg.scalar_epsilon()?,
        cfg.float("t_end")?,
    );
    s.dt = cfg.float("dt")?;
    s.record_every = cfg.usize("record_every")?;
    s.breakdown_tol = cfg.float("breakdown_tol")?;
    s.eikonal = EikonalConfig {
        max_iterations: cfg.usize("eikonal.max_iterations")?,
        residual_tolerance: cfg.float("eikonal.tolerance")?,
        rho_cap: cfg.float("eikonal.rho_cap")?,
    };
    s.validate()?;
    Ok(s)
}

fn record_tables(rec: &SimulationRecord, distance: Option<&[f64]>) -> Vec<Table> {
    let mut snaps = Table::new("snapshots", &["t", "x", "rho", "u"]);
    for ((t, rho), u) in rec
        .times
        .iter()
        .zip(&rec.rho_snapshots)
        .zip(&rec.u_snapshots)
    {
        for (k, x) in rho.grid().nodes().enumerate() {
            snaps.push(vec![(*t).into(), x.into(), rho[k].into(), u[k].into()]);
        }
    }
    let mut header = vec!["t", "mass", "min_rho", "max_rho"];
    if distance.is_some() {
        header.push("distance_to_stationary");
    }
    let mut series = Table::new("series", &header);
    for i in 0..rec.len() {
        let mut row: Vec<Cell> = vec![
            rec.times[i].into(),
            rec.mass_series[i].into(),
            rec.min_rho[i].into(),
            rec.max_rho[i].into(),
        ];
        if let Some(d) = distance {
            row.push(d[i].into());
        }
        series.push(row);
    }
    let mut steps = Table::new("steps", &["t", "mass", "flux_left", "flux_right"]);
    for s in &rec.steps {
        steps.push(vec![
            s.t.into(),
            s.mass.into(),
            s.boundary_flux[0].into(),
            s.boundary_flux[1].into(),
        ]);
    }
    let mut congestion = Table::new("congestion", &["t", "node"]);
    for &(t, k) in &rec.congestion_events {
        congestion.push(vec![t.into(), k.into()]);
    }
    vec![snaps, series, steps, congestion]
}

fn record_summary(s: &Scenario, rec: &SimulationRecord) -> Value {
    let fold = |v: &[f64], f: fn(f64, f64) -> f64, init: f64| v.iter().copied().fold(init, f);
    let mut out = json!({
        "epsilon": s.epsilon,
        "grid_n": s.grid.len(),
        "dt": rec.dt,
        "steps_taken": rec.steps.len(),
        "t_final": rec.times.last(),
        "initial_mass": rec.mass_series.first(),
        "final_mass": rec.mass_series.last(),
        "min_rho": fold(&rec.min_rho, f64::min, f64::INFINITY),
        "max_rho": fold(&rec.max_rho, f64::max, f64::NEG_INFINITY),
        "congestion_events": rec.congestion_events.len(),
        "ordering_residual": rec.ordering_residual(&s.boundaries, s.eikonal.rho_cap),
    });
    if let RunStatus::Breakdown { time, node, value } = rec.status {
        out["breakdown"] =
            json!({ "time": time, "node": node, "x": s.grid.node(node), "value": value });
    }
    out
}

/// Runs the scenario; an aborted run still yields its partial record.
fn simulate(s: &Scenario) -> (SimulationRecord, Status, Option<String>) {
    match run_scenario(s) {
        Ok(rec) => {
            let status = match rec.status {
                RunStatus::Completed => Status::Completed,
                RunStatus::Breakdown { .. } => Status::Breakdown,
            };
            (rec, status, None)
        }
        Err(f) => (*f.record.clone(), Status::Aborted, Some(f.to_string())),
    }
}

fn run_simulation(cfg: &RunConfig) -> Result<Bundle, CliError> {
    let s = scenario(cfg)?;
    let (rec, status, error) = simulate(&s);
    let mut b = Bundle::new(status);
    b.tables = record_tables(&rec, None);
    b.summary = record_summary(&s, &rec);
    b.documents.push(("record".into(), to_json(&rec)?));
    b.error = error;
    Ok(b)
}

/// Stationary state matching the long-time boundary data of `s`.
fn reference_state(s: &Scenario) -> Result<StationarySolution, CliError> {
    let n = s.grid.len();
    let right_exit = matches!(
        s.boundaries.right.rho,
        DensityBc::Dirichlet(BoundaryValue::Constant(v)) if v == 0.0
    );
    if !right_exit {
        return Err(CliError::Usage(
            "equilibrium needs bc.right.rho = dirichlet:0".into(),
        ));
    }
    Ok(match s.boundaries.left.rho {
        DensityBc::Dirichlet(BoundaryValue::Constant(v)) => {
            stationary_with_left_value(s.epsilon, v, n)?
        }
        DensityBc::Dirichlet(BoundaryValue::Ramp { amplitude, .. }) => {
            stationary_with_left_value(s.epsilon, amplitude, n)?
        }
        DensityBc::Influx(j) => solve_stationary(StationaryProblem::new(s.epsilon, j)?, n)?,
        DensityBc::NoFlux => {
            return Err(CliError::Usage(
                "equilibrium needs a Dirichlet or influx condition at x = 0".into(),
            ))
        }
    })
}

fn run_equilibrium(cfg: &RunConfig) -> Result<Bundle, CliError> {
    let s = scenario(cfg)?;
    let stat = reference_state(&s)?;
    let stat_field = stat.field().ok_or_else(|| {
        CliError::Numerical(format!(
            "stationary reference escapes at x = {:?}",
            stat.escape
        ))
    })?;
    let (rec, status, error) = simulate(&s);
    let distance = crowdsim_core::coupled::distance_to_stationary(&rec, &stat_field)?;

    let tail = rec.len() / 2..rec.len();
    let monotone = distance[tail.clone()].windows(2).all(|w| w[1] <= w[0]);
    let dominance = rec.rho_snapshots[tail]
        .iter()
        .flat_map(|r| {
            r.values()
                .iter()
                .zip(stat_field.values())
                .map(|(a, b)| b - a)
        })
        .fold(f64::INFINITY, f64::min);

    let mut b = Bundle::new(status);
    b.tables = record_tables(&rec, Some(&distance));
    let mut st = Table::new("stationary", &["x", "rho"]);
    for (x, r) in s.grid.nodes().zip(&stat.rho) {
        st.push(vec![x.into(), (*r).into()]);
    }
    b.tables.push(st);
    b.summary = record_summary(&s, &rec);
    b.summary["stationary_j"] = json!(stat.j);
    b.summary["final_distance"] = json!(distance.last());
    b.summary["tail_monotone"] = json!(monotone);
    b.summary["tail_min_stationary_minus_rho"] = json!(dominance);
    b.documents.push(("record".into(), to_json(&rec)?));
    b.error = error;
    Ok(b)
}

fn run_diagnose(cfg: &RunConfig) -> Result<Bundle, CliError> {
    let s = scenario(cfg)?;
    let alpha = cfg.float("alpha")?;
    let ps = cfg.list("p")?;
    let (rec, status, error) = simulate(&s);
    let report = estimate_report(&rec, alpha, &ps)?;
    let differenced = du_lp_norms_from_u(&rec, &ps)?;

    let mut b = Bundle::new(status);
    b.tables = record_tables(&rec, None);
    let mut ly = Table::new("lyapunov", &["t", "integral"]);
    for (t, v) in report.lyapunov.times.iter().zip(&report.lyapunov.values) {
        ly.push(vec![(*t).into(), (*v).into()]);
    }
    let mut lp = Table::new("lp_norms", &["t", "p", "identity", "differenced"]);
    for (ident, diff) in report.lp_norms.iter().zip(&differenced) {
        for (i, t) in rec.times.iter().enumerate() {
            lp.push(vec![
                (*t).into(),
                ident.p.into(),
                ident.values[i].into(),
                diff.values[i].into(),
            ]);
        }
    }
    b.tables.extend([ly, lp]);
    b.summary = record_summary(&s, &rec);
    b.summary["estimates"] = json!({
        "alpha": alpha,
        "bounds_ok": report.bounds_ok,
        "c_hat": report.lyapunov.c_hat,
        "gronwall_ok": report.lyapunov.gronwall_ok,
        "first_singular": report.lyapunov.first_singular,
        "dissipation_integral": report.dissipation_integral,
        "lp_sup": report.lp_norms.iter().zip(&differenced).map(|(a, d)| json!({
            "p": a.p,
            "identity": a.sup,
            "differenced": d.sup,
            "singular_at": a.singular_at,
        })).collect::<Vec<_>>(),
    });
    b.documents.push(("report".into(), to_json(&report)?));
    b.error = error;
    Ok(b)
}

fn run_stationary(cfg: &RunConfig) -> Result<Bundle, CliError> {
    let n = cfg.usize("grid.n")?;
    let (eps, js) = (cfg.list("epsilon")?, cfg.list("j")?);
    for &e in &eps {
        for &j in &js {
            StationaryProblem::new(e, j)?;
        }
    }
    let mut family = Table::new("stationary", &["epsilon", "j", "x", "rho"]);
    let mut solutions = Table::new(
        "solutions",
        &[
            "epsilon",
            "j",
            "supercritical",
            "escape",
            "rho_at_0",
            "max_rho",
        ],
    );
    let mut docs = Vec::new();
    for &e in &eps {
        for sol in sweep_currents(e, &js, n)? {
            for (x, r) in sol.grid.nodes().zip(&sol.rho) {
                family.push(vec![e.into(), sol.j.into(), x.into(), (*r).into()]);
            }
            solutions.push(vec![
                e.into(),
                sol.j.into(),
                sol.supercritical.into(),
                sol.escape.unwrap_or(f64::NAN).into(),
                sol.rho_at_0.unwrap_or(f64::NAN).into(),
                sol.max().into(),
            ]);
            docs.push(json!({
                "epsilon": e,
                "j": sol.j,
                "supercritical": sol.supercritical,
                "escape": sol.escape,
                "rho_at_0": sol.rho_at_0,
                "max_rho": sol.max(),
            }));
        }
    }
    let mut b = Bundle::new(Status::Completed);
    b.tables = vec![family, solutions];
    b.summary = json!({ "solutions": docs });
    Ok(b)
}

fn run_critical_current(cfg: &RunConfig) -> Result<Bundle, CliError> {
    let tol = cfg.float("tol")?;
    let eps = cfg.list("epsilon")?;
    let results = eps
        .iter()
        .map(|&e| critical_current(e, tol))
        .collect::<Result<Vec<_>, _>>()?;
    let mut t = Table::new(
        "critical_current",
        &[
            "epsilon",
            "j_c",
            "bracket_lo",
            "bracket_hi",
            "bracket_width",
        ],
    );
    for c in &results {
        t.push(vec![
            c.epsilon.into(),
            c.j_c.into(),
            c.bracket.0.into(),
            c.bracket.1.into(),
            c.bracket_width().into(),
        ]);
    }
    let pick = |f: fn(&crowdsim_core::stationary::CriticalCurrent) -> f64| -> Value {
        match results.as_slice() {
            [one] => json!(f(one)),
            many => json!(many.iter().map(f).collect::<Vec<_>>()),
        }
    };
    let mut b = Bundle::new(Status::Completed);
    b.summary = json!({
        "epsilon": pick(|c| c.epsilon),
        "j_c": pick(|c| c.j_c),
        "bracket_width": pick(|c| c.bracket_width()),
    });
    b.tables.push(t);
    Ok(b)
}

fn run_radial(cfg: &RunConfig) -> Result<Bundle, CliError> {
    let d = cfg.usize("radial.d")?;
    if !(d == 2 || d == 3) {
        return Err(CliError::Usage(format!(
            "--radial.d: must be 2 or 3, got {d}"
        )));
    }
    let samples = cfg.usize("radial.samples")?;
    let profile = grammar::radial_profile(cfg.text("radial.profile")?, d as u32, samples)
        .map_err(|e| CliError::Usage(format!("--radial.profile: {e}")))?;
    let (t_end, dt, every) = (
        cfg.float("t_end")?,
        cfg.float("dt")?,
        cfg.usize("record_every")?,
    );
    if every == 0 {
        return Err(CliError::Usage("--record_every: must be positive".into()));
    }
    let paths = launch(&profile, t_end, dt)?;
    let shock = detect_shock(&profile, t_end, dt)?;

    let mut init = Table::new("profile", &["r0", "rho0", "drho0"]);
    for ((r, rho), dr) in profile
        .r0
        .iter()
        .zip(&profile.rho0)
        .zip(profile.derivative())
    {
        init.push(vec![(*r).into(), (*rho).into(), dr.into()]);
    }
    let mut chars = Table::new("characteristics", &["r0", "t", "r", "rho"]);
    for c in &paths {
        for k in (0..c.times.len()).step_by(every) {
            chars.push(vec![
                c.r0.into(),
                c.times[k].into(),
                c.r[k].into(),
                c.rho[k].into(),
            ]);
        }
    }
    let mut b = Bundle::new(Status::Completed);
    b.tables = vec![init, chars];
    b.summary = json!({
        "d": d,
        "samples": samples,
        "shock": to_json(&shock)?,
        "estimate_discrepancy": shock.estimate_discrepancy(),
        "max_invariant_error": paths.iter().map(|c| c.invariant_error()).fold(0.0, f64::max),
    });
    b.documents.push(("shock".into(), to_json(&shock)?));
    Ok(b)
}

pub fn execute(cfg: &RunConfig) -> Result<Bundle, CliError> {
    match cfg.command {
        Command::Exit | Command::Flow => run_simulation(cfg),
        Command::Equilibrium => run_equilibrium(cfg),
        Command::Diagnose => run_diagnose(cfg),
        Command::Stationary => run_stationary(cfg),
        Command::CriticalCurrent => run_critical_current(cfg),
        Command::Radial => run_radial(cfg),
    }
}
