//! Time-driven ODE representation.
//!
//! The state vector concatenates `n_external` external variables, which
//! are explicit functions of time, and `n_internal` internal variables
//! governed by `x_I' = f_I(x_E, x_I)`. Variable indices run from `0`
//! with the externals first, so internal component `i` is variable
//! `n_external + i`.
//!
//! Internal evaluation is masked: callers pass the set of internal
//! components they need and the model must only write (and ideally only
//! compute) those. Models that cannot restrict their work may evaluate
//! everything and copy out the requested components; that is correct
//! but forfeits the savings.

use crate::error::{Error, Result};

pub type ExternalFn = dyn Fn(f64, &mut [f64]) + Send + Sync;
pub type InternalFn = dyn Fn(&[f64], &[f64], &mut [f64], &[usize]) + Send + Sync;
/// Fills the `mask.len() x mask.len()` row-major block of
/// `d f_I / d x_I` restricted to `mask` rows and columns.
pub type JacobianFn = dyn Fn(&[f64], &[f64], &[usize], &mut [f64]) + Send + Sync;

/// A time-driven ODE: evaluators for `f_E` and `f_I` plus the
/// structural sparsity of `f_I`.
///
/// `sparsity[i]` lists the global variable indices component `i` of
/// `f_I` reads; it must be an over-approximation of the true input set.
pub struct TdOde {
    n_external: usize,
    n_internal: usize,
    eval_external: Box<ExternalFn>,
    eval_internal: Box<InternalFn>,
    eval_jacobian: Option<Box<JacobianFn>>,
    sparsity: Vec<Vec<usize>>,
    sub_evals_per_component: u64,
}

impl TdOde {
    pub fn new(
        n_external: usize,
        n_internal: usize,
        eval_external: impl Fn(f64, &mut [f64]) + Send + Sync + 'static,
        eval_internal: impl Fn(&[f64], &[f64], &mut [f64], &[usize]) + Send + Sync + 'static,
        sparsity: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if sparsity.len() != n_internal {
            return Err(Error::Structure(format!(
                "sparsity has {} entries for {} internal components",
                sparsity.len(),
                n_internal
            )));
        }
        let mut sparsity = sparsity;
        for set in &mut sparsity {
            set.sort_unstable();
            set.dedup();
        }
        Ok(Self {
            n_external,
            n_internal,
            eval_external: Box::new(eval_external),
            eval_internal: Box::new(eval_internal),
            eval_jacobian: None,
            sparsity,
            sub_evals_per_component: 1,
        })
    }

    pub fn with_jacobian(
        mut self,
        eval_jacobian: impl Fn(&[f64], &[f64], &[usize], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        self.eval_jacobian = Some(Box::new(eval_jacobian));
        self
    }

    /// Declares how many model sub-evaluations (the benchmark's cost
    /// unit, e.g. transistor evaluations) one component evaluation
    /// performs. Defaults to 1.
    pub fn with_sub_eval_weight(mut self, weight: u64) -> Self {
        self.sub_evals_per_component = weight;
        self
    }

    pub fn n_external(&self) -> usize {
        self.n_external
    }

    pub fn n_internal(&self) -> usize {
        self.n_internal
    }

    pub fn n(&self) -> usize {
        self.n_external + self.n_internal
    }

    pub fn sub_eval_weight(&self) -> u64 {
        self.sub_evals_per_component
    }

    pub fn sparsity(&self) -> &[Vec<usize>] {
        &self.sparsity
    }

    pub fn has_jacobian(&self) -> bool {
        self.eval_jacobian.is_some()
    }

    /// Evaluates `x_E = f_E(t)` into `out` (length `n_external`).
    pub fn eval_external(&self, t: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.n_external);
        (self.eval_external)(t, out);
    }

    /// Evaluates the `mask` components of `f_I` into the matching
    /// entries of `out` (length `n_internal`); other entries are left
    /// untouched.
    pub fn eval_internal(&self, x_e: &[f64], x_i: &[f64], out: &mut [f64], mask: &[usize]) {
        debug_assert_eq!(x_e.len(), self.n_external);
        debug_assert_eq!(x_i.len(), self.n_internal);
        debug_assert_eq!(out.len(), self.n_internal);
        (self.eval_internal)(x_e, x_i, out, mask);
    }

    /// Evaluates the Jacobian block of `d f_I / d x_I` restricted to
    /// `mask` rows and columns into the row-major `out` buffer.
    pub fn eval_jacobian(&self, x_e: &[f64], x_i: &[f64], mask: &[usize], out: &mut [f64]) {
        debug_assert_eq!(out.len(), mask.len() * mask.len());
        let jac = self
            .eval_jacobian
            .as_ref()
            .expect("eval_jacobian called on a model without an analytic Jacobian");
        jac(x_e, x_i, mask, out);
    }
}

impl std::fmt::Debug for TdOde {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TdOde")
            .field("n_external", &self.n_external)
            .field("n_internal", &self.n_internal)
            .field("has_jacobian", &self.eval_jacobian.is_some())
            .finish()
    }
}

/// Infers the sparsity pattern of a vector function by central
/// differencing at a single point.
///
/// This is a test oracle for model-declared sparsity, nothing more: a
/// single evaluation point can miss dependencies whose derivative
/// happens to vanish there.
pub fn sparsity_from_finite_differences(
    f: impl Fn(&[f64]) -> Vec<f64>,
    point: &[f64],
    threshold: f64,
) -> Result<Vec<Vec<usize>>> {
    let n = point.len();
    let n_out = f(point).len();
    let mut sets: Vec<Vec<usize>> = vec![Vec::new(); n_out];
    let mut x = point.to_vec();
    for j in 0..n {
        let step = 1e-6 * point[j].abs().max(1.0);
        x[j] = point[j] + step;
        let hi = f(&x);
        x[j] = point[j] - step;
        let lo = f(&x);
        x[j] = point[j];
        for i in 0..n_out {
            let deriv = (hi[i] - lo[i]) / (2.0 * step);
            if !deriv.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite difference quotient for component {i} wrt variable {j}"
                )));
            }
            if deriv.abs() > threshold {
                sets[i].push(j);
            }
        }
    }
    Ok(sets)
}
