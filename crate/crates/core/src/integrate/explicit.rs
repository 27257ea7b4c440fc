//! Explicit Runge-Kutta stepping, with and without activity skipping.

use crate::activity::Activity;
use crate::report::EvalCounters;
use crate::tableau::ButcherTableau;
use crate::tdode::TdOde;

/// How skipped internal variables are treated during one step.
pub(crate) enum SkipPolicy<'a> {
    /// Update everything.
    None,
    /// Freeze variables that are latent of at least `threshold`.
    ///
    /// With `exact_stage_reuse` the stage arguments of skipped
    /// variables are rebuilt from their retained stage values, which
    /// reproduces the unskipped method bit for bit whenever the skip
    /// conditions hold exactly; otherwise skipped variables contribute
    /// their frozen state.
    Latency {
        states: &'a [Activity],
        threshold: u32,
        exact_stage_reuse: bool,
    },
    /// Replay variables that are periodic of at least `threshold` from
    /// the circular buffer (`replay` is the state one period back plus
    /// one step, `x^{m-p+1}`).
    Periodic {
        states: &'a [Activity],
        threshold: u32,
        replay: Option<&'a [f64]>,
    },
}

/// Scratch buffers reused across steps. `stages_internal` persists so
/// that skipped components keep their last computed stage values.
pub(crate) struct ExplicitWorkspace {
    stage_external: Vec<f64>,
    stages_internal: Vec<f64>, // s x n_i, row per stage
    y: Vec<f64>,
    mask: Vec<usize>,
    skipped: Vec<usize>,
}

impl ExplicitWorkspace {
    pub(crate) fn new(ode: &TdOde, stages: usize) -> Self {
        Self {
            stage_external: vec![0.0; ode.n_external()],
            stages_internal: vec![0.0; stages * ode.n_internal()],
            y: vec![0.0; ode.n_internal()],
            mask: Vec::with_capacity(ode.n_internal()),
            skipped: Vec::with_capacity(ode.n_internal()),
        }
    }
}

/// Advances `state` (externals followed by internals) from `t` to
/// `t + h` with the given tableau and skip policy.
#[allow(clippy::too_many_arguments)]
pub(crate) fn explicit_step(
    ode: &TdOde,
    tableau: &ButcherTableau,
    t: f64,
    h: f64,
    state: &mut [f64],
    skip: &SkipPolicy<'_>,
    ws: &mut ExplicitWorkspace,
    counters: &mut EvalCounters,
) {
    let n_e = ode.n_external();
    let n_i = ode.n_internal();
    let s = tableau.stages();
    let weight = ode.sub_eval_weight();

    ws.mask.clear();
    ws.skipped.clear();
    match skip {
        SkipPolicy::None => ws.mask.extend(0..n_i),
        SkipPolicy::Latency {
            states, threshold, ..
        } => {
            for j in 0..n_i {
                if states[n_e + j].order() >= *threshold {
                    ws.skipped.push(j);
                } else {
                    ws.mask.push(j);
                }
            }
        }
        SkipPolicy::Periodic {
            states,
            threshold,
            replay,
        } => {
            if replay.is_some() {
                for j in 0..n_i {
                    if states[n_e + j].order() >= *threshold {
                        ws.skipped.push(j);
                    } else {
                        ws.mask.push(j);
                    }
                }
            } else {
                // no full period buffered yet: integrate everything
                ws.mask.extend(0..n_i);
            }
        }
    }

    let full_stage_args = matches!(
        skip,
        SkipPolicy::None
            | SkipPolicy::Latency {
                exact_stage_reuse: true,
                ..
            }
    );

    let (x_e, x_i) = state.split_at_mut(n_e);
    for q in 0..s {
        ode.eval_external(t + tableau.c()[q] * h, &mut ws.stage_external);
        if full_stage_args {
            // stage argument for every component; skipped components
            // contribute their retained stage values
            for j in 0..n_i {
                let mut acc = 0.0;
                for r in 0..q {
                    let a = tableau.a(q, r);
                    if a != 0.0 {
                        acc += a * ws.stages_internal[r * n_i + j];
                    }
                }
                ws.y[j] = x_i[j] + h * acc;
            }
        } else {
            // skipped components enter the coupling terms frozen
            for &j in &ws.skipped {
                ws.y[j] = x_i[j];
            }
            for &j in &ws.mask {
                let mut acc = 0.0;
                for r in 0..q {
                    let a = tableau.a(q, r);
                    if a != 0.0 {
                        acc += a * ws.stages_internal[r * n_i + j];
                    }
                }
                ws.y[j] = x_i[j] + h * acc;
            }
        }
        let k_q = &mut ws.stages_internal[q * n_i..(q + 1) * n_i];
        ode.eval_internal(&ws.stage_external, &ws.y, k_q, &ws.mask);
        counters.add_component_evals(ws.mask.len() as u64, weight);
    }

    let b = tableau.b();
    for &j in &ws.mask {
        let mut acc = 0.0;
        for q in 0..s {
            acc += b[q] * ws.stages_internal[q * n_i + j];
        }
        x_i[j] += h * acc;
    }

    if let SkipPolicy::Periodic {
        replay: Some(replay),
        ..
    } = skip
    {
        for &j in &ws.skipped {
            x_i[j] = replay[n_e + j];
        }
    }

    // x_E^{m+1} = f_E(t^{m+1}); the incremental form telescopes to this
    ode.eval_external(t + h, x_e);
}
