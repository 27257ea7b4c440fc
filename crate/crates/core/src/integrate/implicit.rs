//! Trapezoidal rule with Newton-Raphson, full-system or restricted to
//! the active block.

use crate::activity::Activity;
use crate::error::{Error, Result};
use crate::linalg::{lu_factorize, DenseMatrix};
use crate::report::EvalCounters;
use crate::tdode::TdOde;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    /// Convergence threshold, applied to both the residual and the
    /// increment infinity norm.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 25,
        }
    }
}

pub(crate) struct ImplicitWorkspace {
    x_e_next: Vec<f64>,
    f_old: Vec<f64>,
    f_new: Vec<f64>,
    z: Vec<f64>,
    residual: Vec<f64>,
    jacobian: Vec<f64>,
    mask: Vec<usize>,
}

impl ImplicitWorkspace {
    pub(crate) fn new(ode: &TdOde) -> Self {
        let n_i = ode.n_internal();
        Self {
            x_e_next: vec![0.0; ode.n_external()],
            f_old: vec![0.0; n_i],
            f_new: vec![0.0; n_i],
            z: vec![0.0; n_i],
            residual: vec![0.0; n_i],
            jacobian: vec![0.0; n_i * n_i],
            mask: Vec::with_capacity(n_i),
        }
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// One trapezoidal step solving
/// `z - x_I - h/2 (f_I(x_E, x_I) + f_I(x_E', z)) = 0`
/// by Newton-Raphson from `z = x_I`, restricted to the non-skipped
/// rows when a skip set is given. Skipped variables stay frozen and
/// feed the residual of their neighbours through the coupling terms.
///
/// Convergence accepts either a residual or an increment below the
/// tolerance; a residual check precedes the first factorization, so a
/// quiescent system costs one evaluation and no linear algebra.
#[allow(clippy::too_many_arguments)]
pub(crate) fn trapezoidal_step(
    ode: &TdOde,
    t: f64,
    h: f64,
    state: &mut [f64],
    skip: Option<(&[Activity], u32)>,
    newton: &NewtonConfig,
    step_index: u64,
    ws: &mut ImplicitWorkspace,
    counters: &mut EvalCounters,
) -> Result<()> {
    let n_e = ode.n_external();
    let n_i = ode.n_internal();
    let weight = ode.sub_eval_weight();

    ws.mask.clear();
    match skip {
        None => ws.mask.extend(0..n_i),
        Some((states, threshold)) => {
            for j in 0..n_i {
                if states[n_e + j].order() < threshold {
                    ws.mask.push(j);
                }
            }
        }
    }

    ode.eval_external(t + h, &mut ws.x_e_next);
    let (x_e, x_i) = state.split_at_mut(n_e);

    if ws.mask.is_empty() {
        // everything frozen: nothing to solve
        x_e.copy_from_slice(&ws.x_e_next);
        return Ok(());
    }

    let d = ws.mask.len();
    let half_h = 0.5 * h;

    ode.eval_internal(x_e, x_i, &mut ws.f_old, &ws.mask);
    counters.add_component_evals(d as u64, weight);

    ws.z.copy_from_slice(x_i);
    ode.eval_internal(&ws.x_e_next, &ws.z, &mut ws.f_new, &ws.mask);
    counters.add_component_evals(d as u64, weight);
    for (a, &j) in ws.mask.iter().enumerate() {
        ws.residual[a] = x_i[j] - ws.z[j] + half_h * (ws.f_old[j] + ws.f_new[j]);
    }
    let mut res_norm = inf_norm(&ws.residual[..d]);

    let mut converged = res_norm <= newton.tolerance;
    let mut iterations = 0usize;
    while !converged && iterations < newton.max_iterations {
        ode.eval_jacobian(&ws.x_e_next, &ws.z, &ws.mask, &mut ws.jacobian[..d * d]);
        let mut m = DenseMatrix::zeros(d);
        {
            let data = m.as_mut_slice();
            for idx in 0..d * d {
                data[idx] = -half_h * ws.jacobian[idx];
            }
            for a in 0..d {
                data[a * d + a] += 1.0;
            }
        }
        let lu = lu_factorize(m)?;
        counters.record_lu(d);
        lu.solve_in_place(&mut ws.residual[..d]);
        counters.newton_iterations += 1;
        iterations += 1;
        for (a, &j) in ws.mask.iter().enumerate() {
            ws.z[j] += ws.residual[a];
        }
        if inf_norm(&ws.residual[..d]) <= newton.tolerance {
            converged = true;
            break;
        }
        ode.eval_internal(&ws.x_e_next, &ws.z, &mut ws.f_new, &ws.mask);
        counters.add_component_evals(d as u64, weight);
        for (a, &j) in ws.mask.iter().enumerate() {
            ws.residual[a] = x_i[j] - ws.z[j] + half_h * (ws.f_old[j] + ws.f_new[j]);
        }
        let next_norm = inf_norm(&ws.residual[..d]);
        if next_norm >= res_norm {
            counters.newton_residual_increases += 1;
        }
        res_norm = next_norm;
        if res_norm <= newton.tolerance {
            converged = true;
        }
    }

    if !converged {
        return Err(Error::NewtonNoConvergence {
            step: step_index,
            time: t,
            residual: res_norm,
            iterations,
        });
    }

    for &j in &ws.mask {
        x_i[j] = ws.z[j];
    }
    x_e.copy_from_slice(&ws.x_e_next);
    Ok(())
}
