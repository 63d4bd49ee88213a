//! Dormand-Prince 5(4) with step-size control, for small fixed-size systems.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Tolerance {
    pub const TIGHT: Tolerance = Tolerance {
        rtol: 1e-12,
        atol: 1e-14,
    };
}

/// How an integration ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome<const N: usize> {
    Reached([f64; N]),
    /// The guard rejected the state at `t` (the first accepted state it failed on).
    Stopped {
        t: f64,
        y: [f64; N],
    },
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// error coefficients: b - b_hat
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const MAX_STEPS: usize = 2_000_000;

fn axpy<const N: usize>(y: &[f64; N], terms: &[(f64, &[f64; N])], h: f64) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction).
///
/// `guard` is checked on every accepted state; returning `false` stops the run.
pub fn integrate<const N: usize, F, G>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    tol: Tolerance,
    guard: G,
) -> Result<Outcome<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    G: Fn(f64, &[f64; N]) -> bool,
{
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(Outcome::Reached(y0));
    }
    let dir = span.signum();
    let mut t = t0;
    let mut y = y0;
    let mut h = dir * (span.abs() * 1e-3).max(1e-12);
    let mut k1 = f(t, &y);

    for _ in 0..MAX_STEPS {
        if (t1 - t) * dir <= 0.0 {
            return Ok(Outcome::Reached(y));
        }
        let last = (t + h - t1) * dir >= 0.0;
        if last {
            h = t1 - t;
        }
        let k2 = f(t + C2 * h, &axpy(&y, &[(A21, &k1)], h));
        let k3 = f(t + C3 * h, &axpy(&y, &[(A31, &k1), (A32, &k2)], h));
        let k4 = f(
            t + C4 * h,
            &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h),
        );
        let k5 = f(
            t + C5 * h,
            &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h),
        );
        let k6 = f(
            t + h,
            &axpy(
                &y,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                h,
            ),
        );
        let y_new = axpy(
            &y,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
            h,
        );
        let k7 = f(t + h, &y_new);

        let mut err = 0.0;
        for i in 0..N {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
            err += (e / sc) * (e / sc);
        }
        let err = (err / N as f64).sqrt();

        if !err.is_finite() {
            h *= 0.2;
            if h.abs() < 1e-300 {
                return Err(Error::Ode(format!("step size underflow at t = {t}")));
            }
            continue;
        }

        if err <= 1.0 {
            t = if last { t1 } else { t + h };
            y = y_new;
            k1 = k7;
            if !guard(t, &y) {
                return Ok(Outcome::Stopped { t, y });
            }
            if last {
                return Ok(Outcome::Reached(y));
            }
            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= fac;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            if h.abs() < 1e-14 * t.abs().max(1.0) {
                return Err(Error::Ode(format!("step size collapsed at t = {t}")));
            }
        }
    }
    Err(Error::Ode(format!("exceeded {MAX_STEPS} steps")))
}
