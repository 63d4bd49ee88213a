//! Closed-form oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

/// Exact solution of `eps rho' = rho - rho^2 - j`, `rho(1) = 0`, for `j >= 0`.
///
/// With `rho = 1/2 + w` the equation reads `eps w' = (1/4 - j) - w^2` and
/// `w(1) = -1/2`, which lies outside the tanh branch, so:
/// * `j < 1/4`: `w = c coth(c (x - x0) / eps)`, `c^2 = 1/4 - j`,
/// * `j = 1/4`: `w = eps / (x - x0)`,
/// * `j > 1/4`: `w = -k tan(k (x - x0) / eps)`, `k^2 = j - 1/4`.
///
/// Returns `None` left of a pole.
pub fn riccati_exact(eps: f64, j: f64, x: f64) -> Option<f64> {
    if j == 0.0 {
        return Some(0.0);
    }
    let w = if j < 0.25 {
        let c = (0.25 - j).sqrt();
        let x0 = 1.0 + eps * (2.0 * c).atanh() / c;
        let z = c * (x - x0) / eps;
        c / z.tanh()
    } else if j == 0.25 {
        let x0 = 1.0 + 2.0 * eps;
        eps / (x - x0)
    } else {
        let k = (j - 0.25).sqrt();
        let x0 = 1.0 - eps * (1.0 / (2.0 * k)).atan() / k;
        let z = k * (x - x0) / eps;
        if z <= -std::f64::consts::FRAC_PI_2 {
            return None;
        }
        -k * z.tan()
    };
    Some(0.5 + w)
}

/// Derivative of [`riccati_exact`], from the same closed forms.
pub fn riccati_exact_derivative(eps: f64, j: f64, x: f64) -> Option<f64> {
    if j == 0.0 {
        return Some(0.0);
    }
    if j < 0.25 {
        let c = (0.25 - j).sqrt();
        let x0 = 1.0 + eps * (2.0 * c).atanh() / c;
        let s = (c * (x - x0) / eps).sinh();
        Some(-(c * c / eps) / (s * s))
    } else if j == 0.25 {
        let x0 = 1.0 + 2.0 * eps;
        Some(-eps / (x - x0).powi(2))
    } else {
        let k = (j - 0.25).sqrt();
        let x0 = 1.0 - eps * (1.0 / (2.0 * k)).atan() / k;
        let z = k * (x - x0) / eps;
        if z <= -std::f64::consts::FRAC_PI_2 {
            return None;
        }
        Some(-(k * k / eps) / z.cos().powi(2))
    }
}

/// Critical current from the closed form: `rho(0) = 1` on the tan branch gives
/// `k = 2 eps atan(1/(2k))` and `j_c = 1/4 + k^2`.
pub fn critical_current_exact(eps: f64) -> f64 {
    let f = |k: f64| k - 2.0 * eps * (1.0 / (2.0 * k)).atan();
    let (mut lo, mut hi) = (1e-300, 10.0);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let k = 0.5 * (lo + hi);
    0.25 + k * k
}

/// Three-dimensional characteristic `(r(t), rho(t))` in closed form.
pub fn characteristic_3d(r0: f64, rho0: f64, t: f64) -> (f64, f64) {
    let b = r0 * (1.0 - 2.0 * rho0);
    let r = (t * t + 2.0 * b * t + r0 * r0).sqrt();
    (r, 0.5 * (1.0 - (t + b) / r))
}

/// Exit-time function for exits at both ends: the smaller of the two
/// travel times `int 1/(1-rho)` to either end, by fine trapezoid quadrature.
pub fn travel_time(rho: impl Fn(f64) -> f64, x: f64) -> f64 {
    let integral = |a: f64, b: f64| {
        let m = 20_000;
        let h = (b - a) / m as f64;
        let f = |s: f64| 1.0 / (1.0 - rho(s));
        h * (0.5 * (f(a) + f(b)) + (1..m).map(|i| f(a + i as f64 * h)).sum::<f64>())
    };
    integral(0.0, x).min(integral(x, 1.0))
}

/// Random `(u, rho, eps)` whose upwind differences stay clear of ties, so the
/// residual is differentiable at the sample.
pub fn random_transport_instance(
    rng: &mut impl rand::Rng,
    n: usize,
) -> (crowdsim_core::ValueField, crowdsim_core::DensityField, f64) {
    let g = crowdsim_core::Grid1D::unit(n).unwrap();
    let mut u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    for k in 1..n {
        while (u[k] - u[k - 1]).abs() < 1e-3 {
            u[k] += 3e-3;
        }
    }
    let rho: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.1..1.0)).collect();
    let eps = rng.gen_range(0.0..1.0);
    (
        crowdsim_core::ValueField::new(g, u).unwrap(),
        crowdsim_core::DensityField::new(g, rho).unwrap(),
        eps,
    )
}
