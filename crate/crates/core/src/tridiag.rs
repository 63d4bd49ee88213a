use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tridiagonal matrix stored by diagonals. `lower[0]` and `upper[n-1]` are unused.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if j + 1 == i {
            self.lower[i]
        } else if i + 1 == j {
            self.upper[i]
        } else {
            0.0
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.upper[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let n = self.len();
        let mut t = Self::zeros(n);
        t.diag.clone_from(&self.diag);
        for i in 1..n {
            t.lower[i] = self.upper[i - 1];
            t.upper[i - 1] = self.lower[i];
        }
        t
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|j| {
                let mut s = self.diag[j];
                if j > 0 {
                    s += self.upper[j - 1];
                }
                if j + 1 < n {
                    s += self.lower[j + 1];
                }
                s
            })
            .collect()
    }

    fn max_abs(&self) -> f64 {
        self.lower
            .iter()
            .chain(&self.diag)
            .chain(&self.upper)
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Thomas algorithm. Fails when a pivot collapses relative to the matrix scale.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        assert_eq!(rhs.len(), n);
        let scale = self.max_abs();
        let tiny = scale * 1e3 * f64::EPSILON;
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut min_pivot = f64::INFINITY;

        let mut pivot = self.diag[0];
        for i in 0..n {
            if i > 0 {
                pivot = self.diag[i] - self.lower[i] * c[i - 1];
            }
            min_pivot = min_pivot.min(pivot.abs());
            if !(pivot.abs() > tiny) || !pivot.is_finite() {
                return Err(Error::SingularSystem {
                    row: i,
                    condition: if pivot == 0.0 {
                        f64::INFINITY
                    } else {
                        scale / pivot.abs()
                    },
                });
            }
            c[i] = if i + 1 < n {
                self.upper[i] / pivot
            } else {
                0.0
            };
            let prev = if i > 0 { self.lower[i] * d[i - 1] } else { 0.0 };
            d[i] = (rhs[i] - prev) / pivot;
        }
        let mut x = d;
        for i in (0..n - 1).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        debug_assert!(min_pivot > 0.0);
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_poisson_system() {
        let n = 6;
        let mut m = Tridiagonal::zeros(n);
        for i in 0..n {
            m.diag[i] = 2.0;
            if i > 0 {
                m.lower[i] = -1.0;
            }
            if i + 1 < n {
                m.upper[i] = -1.0;
            }
        }
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 0.3).collect();
        let b = m.matvec(&x_true);
        let x = m.solve(&b).unwrap();
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn singular_system_is_reported() {
        let mut m = Tridiagonal::zeros(3);
        m.diag = vec![1.0, 1.0, 1.0];
        m.upper[0] = 1.0;
        m.lower[1] = 1.0;
        let err = m.solve(&[1.0, 1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::SingularSystem { row: 1, .. }));
    }

    #[test]
    fn transpose_and_column_sums() {
        let m = Tridiagonal {
            lower: vec![0.0, 1.0, 2.0],
            diag: vec![3.0, 4.0, 5.0],
            upper: vec![6.0, 7.0, 0.0],
        };
        let t = m.transpose();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.get(i, j), t.get(j, i));
            }
        }
        assert_eq!(m.column_sums(), vec![4.0, 12.0, 12.0]);
    }
}
