//! Inviscid radial solutions in dimension `d` by characteristics.
//!
//! Along a characteristic launched from `(r0, rho0)`:
//!
//! ```text
//! r' = 1 - 2 rho,    rho' = -(d-1) rho (1-rho) / r
//! ```
//!
//! and `V(rho) = rho (1-rho)` satisfies `V(rho(t)) = (r0/r(t))^(d-1) V(rho0)`.
//! The system is integrated directly, so paths starting with `rho0 > 1/2`
//! pass smoothly through their turning point (`rho = 1/2`, `r' = 0`).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{integrate, Outcome, Tolerance};

/// Smallest launch radius; the `(d-1)/r` term is singular at the origin.
pub const R_MIN: f64 = 1e-3;

pub fn v_of_rho(rho: f64) -> f64 {
    rho * (1.0 - rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `rho0 <= 1/2`: the path moves outward.
    One,
    /// `rho0 > 1/2`: the path moves inward until `rho` drops to 1/2.
    Two,
}

impl Regime {
    pub fn of(rho0: f64) -> Self {
        if rho0 <= 0.5 {
            Regime::One
        } else {
            Regime::Two
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Regime::One => 1,
            Regime::Two => 2,
        }
    }
}

/// Root of `V(rho) = v` on the regime's branch.
pub fn rho_from_v(v: f64, regime: Regime) -> f64 {
    let s = (1.0 - 4.0 * v).max(0.0).sqrt();
    match regime {
        Regime::One => 0.5 * (1.0 - s),
        Regime::Two => 0.5 * (1.0 + s),
    }
}

fn check_dimension(d: u32) -> Result<()> {
    if d == 2 || d == 3 {
        Ok(())
    } else {
        Err(Error::Config(format!("dimension must be 2 or 3, got {d}")))
    }
}

fn check_launch(r0: f64, rho0: f64) -> Result<()> {
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(Error::Config(format!("r0 must be > 0, got {r0}")));
    }
    if !(0.0..1.0).contains(&rho0) {
        return Err(Error::Config(format!(
            "rho0 must lie in [0, 1), got {rho0}"
        )));
    }
    Ok(())
}

fn field(d: u32) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] {
    let k = (d - 1) as f64;
    move |_, y| [1.0 - 2.0 * y[1], -k * y[1] * (1.0 - y[1]) / y[0]]
}

/// Advances `[r, rho]` from `t0` to `t1`; `Stopped` means `r` reached zero.
fn advance(d: u32, y: [f64; 2], t0: f64, t1: f64) -> Result<Outcome<2>> {
    integrate(field(d), t0, y, t1, Tolerance::TIGHT, |_, y| y[0] > 0.0)
}

fn sqrt_argument(d: u32, r0: f64, v0: f64, r: f64) -> f64 {
    1.0 - 4.0 * v0 * (r0 / r).powi(d as i32 - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Characteristic {
    pub r0: f64,
    pub rho0: f64,
    pub d: u32,
    pub regime: Regime,
    pub times: Vec<f64>,
    pub r: Vec<f64>,
    pub rho: Vec<f64>,
    /// Time at which `rho` crossed 1/2 (regime 2 only).
    pub turning_time: Option<f64>,
    /// Time at which the path reached the origin, ending the integration.
    pub reached_origin: Option<f64>,
}

impl Characteristic {
    /// `max_t |V(rho(t)) - (r0/r(t))^(d-1) V(rho0)|`.
    pub fn invariant_error(&self) -> f64 {
        let v0 = v_of_rho(self.rho0);
        self.r
            .iter()
            .zip(&self.rho)
            .map(|(&r, &rho)| (v_of_rho(rho) - (self.r0 / r).powi(self.d as i32 - 1) * v0).abs())
            .fold(0.0, f64::max)
    }
}

fn output_times(t_end: f64, dt: f64) -> Result<Vec<f64>> {
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::Config(format!("t_end must be >= 0, got {t_end}")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("dt must be > 0, got {dt}")));
    }
    let steps = (t_end / dt * (1.0 - 1e-12)).ceil() as usize;
    let mut times: Vec<f64> = (0..steps).map(|k| k as f64 * dt).collect();
    times.push(t_end);
    Ok(times)
}

/// Integrates one characteristic, reporting `(r, rho)` at `0, dt, 2dt, ..., t_end`.
pub fn integrate_characteristic(
    r0: f64,
    rho0: f64,
    d: u32,
    t_end: f64,
    dt: f64,
) -> Result<Characteristic> {
    check_dimension(d)?;
    check_launch(r0, rho0)?;
    let grid = output_times(t_end, dt)?;
    let v0 = v_of_rho(rho0);
    let regime = Regime::of(rho0);

    let mut c = Characteristic {
        r0,
        rho0,
        d,
        regime,
        times: vec![0.0],
        r: vec![r0],
        rho: vec![rho0],
        turning_time: None,
        reached_origin: None,
    };
    let mut y = [r0, rho0];
    for w in grid.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        match advance(d, y, t0, t1)? {
            Outcome::Reached(next) => {
                let arg = sqrt_argument(d, r0, v0, next[0]);
                if arg < -1e-12 {
                    return Err(Error::CharacteristicInconsistent { r0, value: arg });
                }
                if regime == Regime::Two && c.turning_time.is_none() && next[1] <= 0.5 {
                    c.turning_time = Some(turning_time(d, y, t0, t1)?);
                }
                y = next;
                c.times.push(t1);
                c.r.push(y[0]);
                c.rho.push(y[1]);
            }
            Outcome::Stopped { t, .. } => {
                c.reached_origin = Some(t);
                break;
            }
        }
    }
    Ok(c)
}

/// Bisection for the time in `(t0, t1]` at which `rho` falls to 1/2.
fn turning_time(d: u32, y0: [f64; 2], t0: f64, t1: f64) -> Result<f64> {
    let (mut lo, mut hi) = (t0, t1);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match advance(d, y0, t0, mid)? {
            Outcome::Reached(y) if y[1] > 0.5 => lo = mid,
            _ => hi = mid,
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Closed-form three-dimensional characteristic at time `t`.
pub fn closed_form_3d(r0: f64, rho0: f64, t: f64) -> Result<(f64, f64)> {
    let b = r0 * (1.0 - 2.0 * rho0);
    let r = (t * t + 2.0 * b * t + r0 * r0).sqrt();
    if r == 0.0 {
        return Err(Error::ClosedFormPole { t });
    }
    Ok((r, 0.5 * (1.0 - (t + b) / r)))
}

/// Left-hand side of the two-dimensional implicit relations, as a function of `r`.
fn implicit_lhs(r0: f64, v0: f64, r: f64) -> f64 {
    let a = 4.0 * r0 * v0;
    let s = (1.0 - a / r).max(0.0).sqrt();
    let log_term = if v0 == 0.0 {
        0.0
    } else {
        2.0 * r0 * v0 * (2.0 * r * (1.0 + s) - a).ln()
    };
    log_term + r * s
}

/// Right-hand side of the two-dimensional implicit relation at time `t`.
fn implicit_rhs(r0: f64, rho0: f64, t: f64, regime: Regime) -> f64 {
    let v0 = v_of_rho(rho0);
    match regime {
        Regime::One => {
            let log_term = if v0 == 0.0 {
                0.0
            } else {
                2.0 * v0 * (4.0 * r0 * (1.0 - rho0).powi(2)).ln()
            };
            t + r0 * (log_term - 2.0 * rho0 + 1.0)
        }
        Regime::Two => {
            let log_term = 2.0 * v0 * (4.0 * r0 * rho0 * rho0).ln();
            -t + r0 * (log_term + 2.0 * rho0 - 1.0)
        }
    }
}

/// Residual of the two-dimensional implicit relation at `(r, t)`.
pub fn implicit_residual_2d(r0: f64, rho0: f64, t: f64, regime: Regime, r: f64) -> f64 {
    implicit_lhs(r0, v_of_rho(rho0), r) - implicit_rhs(r0, rho0, t, regime)
}

/// Solves the two-dimensional implicit relation for `r(t)` by bisection.
///
/// Regime 1 brackets `r` in `[r0, r0 + t]`; regime 2 in `[4 r0 V0, r0]`, which
/// is valid up to the turning point.
pub fn solve_2d_implicit(r0: f64, rho0: f64, t: f64, regime: Regime) -> Result<f64> {
    check_launch(r0, rho0)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Config(format!("t must be >= 0, got {t}")));
    }
    if regime == Regime::Two && rho0 <= 0.5 {
        return Err(Error::Config(format!(
            "regime 2 needs rho0 > 1/2, got {rho0}"
        )));
    }
    if regime == Regime::One && rho0 > 0.5 {
        return Err(Error::Config(format!(
            "regime 1 needs rho0 <= 1/2, got {rho0}"
        )));
    }
    if t == 0.0 {
        return Ok(r0);
    }
    let a = 4.0 * r0 * v_of_rho(rho0);
    let (mut lo, mut hi) = match regime {
        Regime::One => (r0, r0 + t),
        Regime::Two => (a, r0),
    };
    let g = |r: f64| implicit_residual_2d(r0, rho0, t, regime, r);
    let (g_lo, g_hi) = (g(lo), g(hi));
    if g_lo == 0.0 {
        return Ok(lo);
    }
    if g_hi == 0.0 {
        return Ok(hi);
    }
    if g_lo.signum() == g_hi.signum() {
        return Err(Error::NoBracket(format!(
            "t = {t} lies outside the regime {} window for r0 = {r0}, rho0 = {rho0}",
            regime.number()
        )));
    }
    let rising = g_hi > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (g(mid) > 0.0) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let r = if g(lo).abs() <= g(hi).abs() { lo } else { hi };
    let residual = g(r);
    if residual.abs() > 1e-10 {
        return Err(Error::NoBracket(format!(
            "implicit relation residual {residual} at r = {r}"
        )));
    }
    Ok(r)
}

/// Sampled initial density on radii `r0 >= R_MIN`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub d: u32,
    pub r0: Vec<f64>,
    pub rho0: Vec<f64>,
    /// Exact `rho0'`; centred differences of the samples when absent.
    pub drho0: Option<Vec<f64>>,
}

impl RadialProfile {
    pub fn new(d: u32, r0: Vec<f64>, rho0: Vec<f64>, drho0: Option<Vec<f64>>) -> Result<Self> {
        check_dimension(d)?;
        if r0.len() != rho0.len() || drho0.as_ref().is_some_and(|v| v.len() != r0.len()) {
            return Err(Error::LengthMismatch {
                expected: r0.len(),
                found: rho0.len(),
            });
        }
        if r0.len() < 2 {
            return Err(Error::Config("a profile needs at least two samples".into()));
        }
        if !r0.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::Config("radii must be strictly increasing".into()));
        }
        if r0[0] < R_MIN {
            return Err(Error::Config(format!(
                "radii must be >= {R_MIN}, got {}",
                r0[0]
            )));
        }
        for (&r, &rho) in r0.iter().zip(&rho0) {
            check_launch(r, rho)?;
        }
        Ok(Self { d, r0, rho0, drho0 })
    }

    /// Samples `f` at `n` equally spaced radii of `[r_lo, r_hi]`.
    pub fn from_fn<F: Fn(f64) -> f64>(
        d: u32,
        r_lo: f64,
        r_hi: f64,
        n: usize,
        f: F,
    ) -> Result<Self> {
        if n < 2 || !(r_hi > r_lo) {
            return Err(Error::Config("need n >= 2 and r_hi > r_lo".into()));
        }
        let r0: Vec<f64> = (0..n)
            .map(|k| r_lo + (r_hi - r_lo) * k as f64 / (n - 1) as f64)
            .collect();
        let rho0 = r0.iter().map(|&r| f(r)).collect();
        Self::new(d, r0, rho0, None)
    }

    /// Reconstruction of the Case 1-3 profiles: a `sin^2` rise from the
    /// support's left end to the peak and a `cos^2` fall to its right end.
    pub fn case(case: u8, d: u32, n: usize) -> Result<Self> {
        let (lo, peak, hi, max) = match case {
            1 => (0.0, 0.2, 0.6, 0.35),
            2 => (0.5, 0.75, 1.0, 0.8),
            3 => (0.0, 0.5, 1.0, 0.4),
            _ => return Err(Error::Config(format!("unknown radial case {case}"))),
        };
        Self::from_fn(d, R_MIN, 1.2, n, |r| bump(r, lo, peak, hi, max))
    }

    pub fn len(&self) -> usize {
        self.r0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r0.is_empty()
    }

    pub fn derivative(&self) -> Vec<f64> {
        if let Some(d) = &self.drho0 {
            return d.clone();
        }
        let (r, f) = (&self.r0, &self.rho0);
        let n = r.len();
        (0..n)
            .map(|k| {
                let (a, b) = (k.saturating_sub(1), (k + 1).min(n - 1));
                (f[b] - f[a]) / (r[b] - r[a])
            })
            .collect()
    }
}

/// Piecewise `sin^2` / `cos^2` bump with the given support, peak and maximum.
pub fn bump(r: f64, lo: f64, peak: f64, hi: f64, max: f64) -> f64 {
    use std::f64::consts::FRAC_PI_2;
    if r <= lo || r >= hi {
        0.0
    } else if r <= peak {
        max * (FRAC_PI_2 * (r - lo) / (peak - lo)).sin().powi(2)
    } else {
        max * (FRAC_PI_2 * (r - peak) / (hi - peak)).cos().powi(2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShockReport {
    pub shock_detected: bool,
    pub shock_time: Option<f64>,
    pub shock_radius: Option<f64>,
    /// Launch radii of the first adjacent pair to cross.
    pub crossing_pair: Option<(f64, f64)>,
    /// Three dimensions: `min -r0 / (1 - 2 rho0 - 2 r0 rho0')` over samples with
    /// a negative denominator.
    pub analytic_time: Option<f64>,
    pub analytic_r0: Option<f64>,
}

impl ShockReport {
    /// `|t_crossing - t_analytic| / t_analytic` when both exist.
    pub fn estimate_discrepancy(&self) -> Option<f64> {
        match (self.shock_time, self.analytic_time) {
            (Some(a), Some(b)) => Some((a - b).abs() / b),
            _ => None,
        }
    }
}

/// All characteristics of a profile on a common time grid.
pub fn launch(profile: &RadialProfile, t_end: f64, dt: f64) -> Result<Vec<Characteristic>> {
    profile
        .r0
        .par_iter()
        .zip(profile.rho0.par_iter())
        .map(|(&r0, &rho0)| integrate_characteristic(r0, rho0, profile.d, t_end, dt))
        .collect()
}

fn analytic_3d(profile: &RadialProfile) -> Option<(f64, f64)> {
    let deriv = profile.derivative();
    profile
        .r0
        .iter()
        .zip(&profile.rho0)
        .zip(&deriv)
        .filter_map(|((&r0, &rho0), &dr)| {
            let den = 1.0 - 2.0 * rho0 - 2.0 * r0 * dr;
            (den < 0.0).then(|| (-r0 / den, r0))
        })
        .fold(None, |best: Option<(f64, f64)>, c| match best {
            Some(b) if b.0 <= c.0 => Some(b),
            _ => Some(c),
        })
}

/// First time in `(t0, t1]` at which `lower` overtakes `upper`.
fn refine_crossing(
    d: u32,
    lower: [f64; 2],
    upper: [f64; 2],
    t0: f64,
    t1: f64,
) -> Result<(f64, f64)> {
    let state = |y: [f64; 2], t: f64| -> Result<Option<[f64; 2]>> {
        Ok(match advance(d, y, t0, t)? {
            Outcome::Reached(y) => Some(y),
            Outcome::Stopped { .. } => None,
        })
    };
    let (mut lo, mut hi) = (t0, t1);
    let mut radius = 0.5 * (lower[0] + upper[0]);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match (state(lower, mid)?, state(upper, mid)?) {
            (Some(a), Some(b)) if b[0] > a[0] => lo = mid,
            (Some(a), Some(b)) => {
                hi = mid;
                radius = 0.5 * (a[0] + b[0]);
            }
            _ => hi = mid,
        }
    }
    Ok((0.5 * (lo + hi), radius))
}

/// Earliest crossing of adjacent characteristics before `t_end`, located on a
/// time grid of spacing `dt` and refined by bisection.
pub fn detect_shock(profile: &RadialProfile, t_end: f64, dt: f64) -> Result<ShockReport> {
    let paths = launch(profile, t_end, dt)?;
    let analytic = if profile.d == 3 {
        analytic_3d(profile)
    } else {
        None
    };
    let mut report = ShockReport {
        shock_detected: false,
        shock_time: None,
        shock_radius: None,
        crossing_pair: None,
        analytic_time: analytic.map(|a| a.0),
        analytic_r0: analytic.map(|a| a.1),
    };

    // first grid index at which each adjacent pair is out of order
    let first_inversion = |i: usize| -> Option<usize> {
        let (a, b) = (&paths[i], &paths[i + 1]);
        let len = a.r.len().min(b.r.len());
        (1..len).find(|&k| b.r[k] <= a.r[k])
    };
    let hits: Vec<(usize, usize)> = (0..paths.len().saturating_sub(1))
        .filter_map(|i| first_inversion(i).map(|k| (k, i)))
        .collect();
    let Some(k_min) = hits.iter().map(|h| h.0).min() else {
        return Ok(report);
    };

    let mut best: Option<(f64, f64, usize)> = None;
    for &(k, i) in hits.iter().filter(|h| h.0 == k_min) {
        let (a, b) = (&paths[i], &paths[i + 1]);
        let (t, radius) = refine_crossing(
            profile.d,
            [a.r[k - 1], a.rho[k - 1]],
            [b.r[k - 1], b.rho[k - 1]],
            a.times[k - 1],
            a.times[k],
        )?;
        if best.is_none_or(|(bt, _, _)| t < bt) {
            best = Some((t, radius, i));
        }
    }
    if let Some((t, radius, i)) = best {
        report.shock_detected = true;
        report.shock_time = Some(t);
        report.shock_radius = Some(radius);
        report.crossing_pair = Some((profile.r0[i], profile.r0[i + 1]));
    }
    Ok(report)
}
