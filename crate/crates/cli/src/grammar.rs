//! Small textual grammars for profiles and boundary conditions, e.g.
//! `sin2:0.9:3`, `ramp:-0.2:10`, `influx:1`, `exit`.

use crowdsim_core::radial::{bump, RadialProfile, R_MIN};
use crowdsim_core::{BoundaryValue, DensityBc, ValueBc};

fn numbers(spec: &str, args: &[&str], expected: usize) -> Result<Vec<f64>, String> {
    if args.len() != expected {
        return Err(format!("`{spec}` takes {expected} numeric argument(s)"));
    }
    args.iter()
        .map(|a| {
            a.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("`{a}` in `{spec}` is not a finite number"))
        })
        .collect()
}

fn split(spec: &str) -> (&str, Vec<&str>) {
    let mut parts = spec.trim().split(':');
    let head = parts.next().unwrap_or_default();
    (head, parts.collect())
}

/// `dirichlet:V`, `ramp:A:RATE` (`A (1 - e^(-RATE t))`), `noflux`, `influx:J`.
pub fn density_bc(spec: &str) -> Result<DensityBc, String> {
    let (head, args) = split(spec);
    Ok(match head {
        "dirichlet" => DensityBc::Dirichlet(BoundaryValue::Constant(numbers(spec, &args, 1)?[0])),
        "ramp" => {
            let v = numbers(spec, &args, 2)?;
            DensityBc::Dirichlet(BoundaryValue::Ramp {
                amplitude: v[0],
                rate: v[1],
            })
        }
        "noflux" => {
            numbers(spec, &args, 0)?;
            DensityBc::NoFlux
        }
        "influx" => {
            let j = numbers(spec, &args, 1)?[0];
            if j < 0.0 {
                return Err(format!("influx must be >= 0 in `{spec}`"));
            }
            DensityBc::Influx(j)
        }
        _ => return Err(format!("unknown density condition `{spec}`")),
    })
}

/// `exit` (value 0), `exit:V`, `reflecting`.
pub fn value_bc(spec: &str) -> Result<ValueBc, String> {
    let (head, args) = split(spec);
    match head {
        "exit" if args.is_empty() => Ok(ValueBc::Dirichlet(0.0)),
        "exit" => Ok(ValueBc::Dirichlet(numbers(spec, &args, 1)?[0])),
        "reflecting" => numbers(spec, &args, 0).map(|_| ValueBc::Reflecting),
        _ => Err(format!("unknown value condition `{spec}`")),
    }
}

/// Initial density on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    Zero,
    Constant(f64),
    /// `amp sin^2(k pi x)`.
    Sin2 {
        amp: f64,
        k: f64,
    },
    /// `amp x^2 (1-x)^2`.
    Quartic {
        amp: f64,
    },
    Bump {
        lo: f64,
        peak: f64,
        hi: f64,
        max: f64,
    },
}

impl Profile {
    pub fn parse(spec: &str) -> Result<Self, String> {
        let (head, args) = split(spec);
        Ok(match head {
            "zero" => {
                numbers(spec, &args, 0)?;
                Profile::Zero
            }
            "const" => Profile::Constant(numbers(spec, &args, 1)?[0]),
            "sin2" => {
                let v = numbers(spec, &args, 2)?;
                Profile::Sin2 { amp: v[0], k: v[1] }
            }
            "quartic" => Profile::Quartic {
                amp: numbers(spec, &args, 1)?[0],
            },
            "bump" => {
                let v = numbers(spec, &args, 4)?;
                if !(v[0] < v[1] && v[1] < v[2]) {
                    return Err(format!("`{spec}` needs lo < peak < hi"));
                }
                Profile::Bump {
                    lo: v[0],
                    peak: v[1],
                    hi: v[2],
                    max: v[3],
                }
            }
            _ => return Err(format!("unknown profile `{spec}`")),
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Profile::Zero => 0.0,
            Profile::Constant(c) => c,
            Profile::Sin2 { amp, k } => amp * (k * std::f64::consts::PI * x).sin().powi(2),
            Profile::Quartic { amp } => amp * (x * (1.0 - x)).powi(2),
            Profile::Bump { lo, peak, hi, max } => bump(x, lo, peak, hi, max),
        }
    }
}

/// `case:N` for the reconstructed radial cases, otherwise any [`Profile`]
/// sampled on `[R_MIN, 1.2]`.
pub fn radial_profile(spec: &str, d: u32, samples: usize) -> Result<RadialProfile, String> {
    let (head, args) = split(spec);
    if head == "case" {
        let n = numbers(spec, &args, 1)?[0];
        if !(n == 1.0 || n == 2.0 || n == 3.0) {
            return Err(format!("unknown radial case in `{spec}`"));
        }
        return RadialProfile::case(n as u8, d, samples).map_err(|e| e.to_string());
    }
    let p = Profile::parse(spec)?;
    RadialProfile::from_fn(d, R_MIN, 1.2, samples, |r| p.eval(r)).map_err(|e| e.to_string())
}

/// Comma-separated finite numbers.
pub fn float_list(spec: &str) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = spec
        .split(',')
        .map(|a| {
            a.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("`{a}` is not a finite number"))
        })
        .collect::<Result<_, _>>()?;
    Ok(v)
}
