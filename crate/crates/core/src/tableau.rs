//! Butcher tableaus for explicit Runge-Kutta methods.

use crate::error::{Error, Result};

/// Coefficients `(A, b, c)` of an `s`-stage explicit Runge-Kutta method.
///
/// `A` must be strictly lower triangular and `c[0]` must be zero; both
/// are enforced on construction, as is first-order consistency
/// (`sum(b) == 1` up to roundoff).
#[derive(Debug, Clone, PartialEq)]
pub struct ButcherTableau {
    stages: usize,
    a: Vec<f64>, // row-major s x s
    b: Vec<f64>,
    c: Vec<f64>,
}

impl ButcherTableau {
    pub fn explicit(a: Vec<Vec<f64>>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let s = b.len();
        if s == 0 {
            return Err(Error::Config("tableau needs at least one stage".into()));
        }
        if a.len() != s || c.len() != s || a.iter().any(|row| row.len() != s) {
            return Err(Error::Config(format!(
                "tableau dimensions inconsistent: |b| = {s}, |c| = {}, A = {} rows",
                c.len(),
                a.len()
            )));
        }
        for (q, row) in a.iter().enumerate() {
            for (r, &v) in row.iter().enumerate() {
                if r >= q && v != 0.0 {
                    return Err(Error::Config(format!(
                        "A[{q}][{r}] = {v} is not strictly lower triangular"
                    )));
                }
            }
        }
        if c[0] != 0.0 {
            return Err(Error::Config(format!(
                "explicit tableau requires c[0] = 0, got {}",
                c[0]
            )));
        }
        let b_sum: f64 = b.iter().sum();
        if (b_sum - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "tableau weights sum to {b_sum}, expected 1"
            )));
        }
        let mut flat = vec![0.0; s * s];
        for (q, row) in a.iter().enumerate() {
            flat[q * s..(q + 1) * s].copy_from_slice(row);
        }
        Ok(Self {
            stages: s,
            a: flat,
            b,
            c,
        })
    }

    /// Forward Euler as a one-stage tableau.
    pub fn explicit_euler() -> Self {
        Self::explicit(vec![vec![0.0]], vec![1.0], vec![0.0]).unwrap()
    }

    /// Heun's two-stage second-order method.
    pub fn heun2() -> Self {
        Self::explicit(
            vec![vec![0.0, 0.0], vec![1.0, 0.0]],
            vec![0.5, 0.5],
            vec![0.0, 1.0],
        )
        .unwrap()
    }

    /// The classical fourth-order Runge-Kutta method.
    pub fn classic_rk4() -> Self {
        Self::explicit(
            vec![
                vec![0.0, 0.0, 0.0, 0.0],
                vec![0.5, 0.0, 0.0, 0.0],
                vec![0.0, 0.5, 0.0, 0.0],
                vec![0.0, 0.0, 1.0, 0.0],
            ],
            vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
            vec![0.0, 0.5, 0.5, 1.0],
        )
        .unwrap()
    }

    pub fn stages(&self) -> usize {
        self.stages
    }

    #[inline]
    pub fn a(&self, q: usize, r: usize) -> f64 {
        self.a[q * self.stages + r]
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }
}
