//! Node-centred 1D mesh, nodal fields, and the boundary-condition vocabulary
//! shared by the eikonal and transport solvers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform node-centred grid on `[x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n: usize,
    h: f64,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 nodes, got {n}"
            )));
        }
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(Error::InvalidGrid(format!(
                "degenerate interval [{x_min}, {x_max}]"
            )));
        }
        let h = (x_max - x_min) / (n - 1) as f64;
        Ok(Self { x_min, x_max, n, h })
    }

    /// The unit interval with `n` nodes.
    pub fn unit(n: usize) -> Result<Self> {
        Self::new(0.0, 1.0, n)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Coordinate of node `k`, `x_min + k h`.
    pub fn node(&self, k: usize) -> f64 {
        self.x_min + k as f64 * self.h
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |k| self.node(k))
    }

    /// Trapezoid quadrature weights (`h/2` at the ends, `h` inside).
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let mut w = vec![self.h; self.n];
        w[0] = 0.5 * self.h;
        w[self.n - 1] = 0.5 * self.h;
        w
    }

    /// Trapezoid integral of nodal samples.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n);
        let inner: f64 = values[1..self.n - 1].iter().sum();
        self.h * (inner + 0.5 * (values[0] + values[self.n - 1]))
    }

    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Result<Vec<f64>> {
        self.nodes()
            .enumerate()
            .map(|(node, x)| {
                let value = f(x);
                if value.is_finite() {
                    Ok(value)
                } else {
                    Err(Error::NonFiniteSample { node, x, value })
                }
            })
            .collect()
    }
}

macro_rules! nodal_field {
    ($name:ident) => {
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        pub struct $name {
            grid: Grid1D,
            values: Vec<f64>,
        }

        impl $name {
            pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
                if values.len() != grid.len() {
                    return Err(Error::LengthMismatch {
                        expected: grid.len(),
                        found: values.len(),
                    });
                }
                if let Some((node, &value)) =
                    values.iter().enumerate().find(|(_, v)| !v.is_finite())
                {
                    return Err(Error::NonFiniteSample {
                        node,
                        x: grid.node(node),
                        value,
                    });
                }
                Ok(Self { grid, values })
            }

            pub fn zeros(grid: Grid1D) -> Self {
                Self {
                    grid,
                    values: vec![0.0; grid.len()],
                }
            }

            pub fn constant(grid: Grid1D, c: f64) -> Result<Self> {
                Self::new(grid, vec![c; grid.len()])
            }

            /// Samples `f` at every node; a non-finite sample is an error naming the node.
            pub fn sample<F: Fn(f64) -> f64>(grid: Grid1D, f: F) -> Result<Self> {
                Ok(Self {
                    grid,
                    values: grid.sample(f)?,
                })
            }

            pub fn grid(&self) -> &Grid1D {
                &self.grid
            }

            pub fn values(&self) -> &[f64] {
                &self.values
            }

            pub fn into_values(self) -> Vec<f64> {
                self.values
            }

            pub fn len(&self) -> usize {
                self.values.len()
            }

            pub fn is_empty(&self) -> bool {
                self.values.is_empty()
            }

            pub fn max(&self) -> f64 {
                self.values
                    .iter()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max)
            }

            pub fn min(&self) -> f64 {
                self.values.iter().copied().fold(f64::INFINITY, f64::min)
            }

            /// Sup-norm distance to another field on the same grid.
            pub fn sup_distance(&self, other: &Self) -> Result<f64> {
                if self.grid != other.grid {
                    return Err(Error::GridMismatch);
                }
                Ok(self
                    .values
                    .iter()
                    .zip(&other.values)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max))
            }
        }

        impl std::ops::Index<usize> for $name {
            type Output = f64;
            fn index(&self, k: usize) -> &f64 {
                &self.values[k]
            }
        }
    };
}

nodal_field!(DensityField);
nodal_field!(ValueField);

impl DensityField {
    /// Trapezoid mass `sum_k w_k rho_k`.
    pub fn mass(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    /// True iff `0 <= rho <= 1` everywhere (the physical range).
    pub fn is_physical(&self) -> bool {
        self.values.iter().all(|&r| (0.0..=1.0).contains(&r))
    }
}

/// A prescribed boundary value, possibly time dependent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BoundaryValue {
    Constant(f64),
    /// `amplitude * (1 - exp(-rate t))`.
    Ramp {
        amplitude: f64,
        rate: f64,
    },
}

impl BoundaryValue {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            BoundaryValue::Constant(v) => v,
            BoundaryValue::Ramp { amplitude, rate } => amplitude * (1.0 - (-rate * t).exp()),
        }
    }
}

/// Condition on the density at one endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DensityBc {
    Dirichlet(BoundaryValue),
    NoFlux,
    /// Net entering current `j >= 0` (agents per unit time).
    Influx(f64),
}

/// Condition on the exit-time function at one endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ValueBc {
    /// Exit: `u` is held at the given value.
    Dirichlet(f64),
    /// Wall: mirror ghost node.
    Reflecting,
}

impl ValueBc {
    pub fn is_exit(&self) -> bool {
        matches!(self, ValueBc::Dirichlet(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndCondition {
    pub rho: DensityBc,
    pub u: ValueBc,
}

impl EndCondition {
    /// Absorbing exit: `rho = 0`, `u = 0`.
    pub fn exit() -> Self {
        Self {
            rho: DensityBc::Dirichlet(BoundaryValue::Constant(0.0)),
            u: ValueBc::Dirichlet(0.0),
        }
    }

    /// Closed wall: no flux for `rho`, reflecting `u`.
    pub fn wall() -> Self {
        Self {
            rho: DensityBc::NoFlux,
            u: ValueBc::Reflecting,
        }
    }
}

/// Conditions at both endpoints of the interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Boundaries {
    pub left: EndCondition,
    pub right: EndCondition,
}

impl Boundaries {
    pub fn new(left: EndCondition, right: EndCondition) -> Self {
        Self { left, right }
    }

    pub fn ends(&self) -> [EndCondition; 2] {
        [self.left, self.right]
    }

    pub fn value_bcs(&self) -> [ValueBc; 2] {
        [self.left.u, self.right.u]
    }

    pub fn density_bcs(&self) -> [DensityBc; 2] {
        [self.left.rho, self.right.rho]
    }

    pub fn validate(&self) -> Result<()> {
        if !self.left.u.is_exit() && !self.right.u.is_exit() {
            return Err(Error::Config(
                "at least one endpoint must be an exit (Dirichlet u)".into(),
            ));
        }
        for (side, end) in [("left", self.left), ("right", self.right)] {
            if let DensityBc::Influx(j) = end.rho {
                if !(j >= 0.0 && j.is_finite()) {
                    return Err(Error::Config(format!(
                        "{side} influx must be >= 0, got {j}"
                    )));
                }
            }
        }
        Ok(())
    }
}
