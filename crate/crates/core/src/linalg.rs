//! Dense LU factorization with partial pivoting.
//!
//! The Newton systems of the trapezoidal rule are dense and small (the
//! active block of the benchmark never exceeds a few hundred rows), so
//! a plain in-place Doolittle factorization is all that is needed.

use crate::error::{Error, Result};

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix rows must be square");
            m.data[i * n..(i + 1) * n].copy_from_slice(row);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn fill(&mut self, v: f64) {
        self.data.fill(v);
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// LU factors of a square matrix, `P*A = L*U`, stored packed in place.
#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

/// Factorizes `a` in place. Fails on an exactly zero pivot.
pub fn lu_factorize(mut a: DenseMatrix) -> Result<LuFactors> {
    let n = a.dim();
    let mut perm: Vec<usize> = (0..n).collect();
    let data = a.as_mut_slice();
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_mag = data[col * n + col].abs();
        for row in col + 1..n {
            let mag = data[row * n + col].abs();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = row;
            }
        }
        if pivot_mag == 0.0 {
            return Err(Error::SingularMatrix { dim: n, col });
        }
        if pivot_row != col {
            for j in 0..n {
                data.swap(col * n + j, pivot_row * n + j);
            }
            perm.swap(col, pivot_row);
        }
        let pivot = data[col * n + col];
        for row in col + 1..n {
            let factor = data[row * n + col] / pivot;
            data[row * n + col] = factor;
            if factor != 0.0 {
                for j in col + 1..n {
                    data[row * n + j] -= factor * data[col * n + j];
                }
            }
        }
    }
    Ok(LuFactors {
        n,
        lu: std::mem::take(&mut a.data),
        perm,
    })
}

impl LuFactors {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = rhs`, overwriting `rhs` with `x`.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.n;
        assert_eq!(rhs.len(), n);
        // apply permutation
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[i] = rhs[self.perm[i]];
        }
        // forward substitution, unit lower triangle
        for i in 0..n {
            let mut sum = x[i];
            for j in 0..i {
                sum -= self.lu[i * n + j] * x[j];
            }
            x[i] = sum;
        }
        // back substitution
        for i in (0..n).rev() {
            let mut sum = x[i];
            for j in i + 1..n {
                sum -= self.lu[i * n + j] * x[j];
            }
            x[i] = sum / self.lu[i * n + i];
        }
        rhs.copy_from_slice(&x);
    }
}
