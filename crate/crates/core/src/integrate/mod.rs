//! One-step methods and the fixed-step driver.

mod explicit;
mod implicit;

pub use implicit::NewtonConfig;

use std::time::Instant;

use crate::activity::{ActivityTracker, TrackerMode};
use crate::error::{Error, Result};
use crate::graph::build_dependency_graph;
use crate::report::{ActivityOccupancy, EvalCounters, SimulationReport};
use crate::tableau::ButcherTableau;
use crate::tdode::TdOde;
use explicit::{explicit_step, ExplicitWorkspace, SkipPolicy};
use implicit::{trapezoidal_step, ImplicitWorkspace};

/// Skip threshold selection.
///
/// `Practical` freezes variables that are latent (or periodic) of order
/// at least one, neglecting influences over longer paths. `Exact`
/// requires the full stage count as order, which makes the skipping
/// methods reproduce their unskipped counterparts bit for bit whenever
/// the comparisons hold exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipMode {
    Practical,
    Exact,
}

#[derive(Debug, Clone)]
pub enum Method {
    /// Explicit Runge-Kutta.
    Rk { tableau: ButcherTableau },
    /// Explicit Runge-Kutta skipping latent variables.
    SfRk { tableau: ButcherTableau },
    /// Trapezoidal rule with Newton-Raphson over all internals.
    Tr { newton: NewtonConfig },
    /// Trapezoidal rule solving only the non-latent block.
    SfTr { newton: NewtonConfig },
    /// Explicit Runge-Kutta replaying variables that repeat with the
    /// given period (in steps).
    SfpRk {
        tableau: ButcherTableau,
        period_steps: usize,
    },
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Rk { .. } => "rk",
            Method::SfRk { .. } => "sfrk",
            Method::Tr { .. } => "tr",
            Method::SfTr { .. } => "sftr",
            Method::SfpRk { .. } => "sfprk",
        }
    }

    fn uses_tracker(&self) -> bool {
        matches!(
            self,
            Method::SfRk { .. } | Method::SfTr { .. } | Method::SfpRk { .. }
        )
    }

    /// Stage count used as the exact-mode skip order.
    fn stage_count(&self) -> u32 {
        match self {
            Method::Rk { tableau } | Method::SfRk { tableau } | Method::SfpRk { tableau, .. } => {
                tableau.stages() as u32
            }
            // the trapezoidal rule evaluates at the two interval ends
            Method::Tr { .. } | Method::SfTr { .. } => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub t0: f64,
    pub t_end: f64,
    pub h: f64,
    /// Activity tolerance; zero demands bitwise-equal comparisons.
    pub epsilon: f64,
    pub skip_mode: SkipMode,
    /// Keep every k-th state in the returned trajectory (0 = endpoints
    /// only). The initial and final states are always kept.
    pub record_every: usize,
    /// Record per-step activity codes and orders.
    pub record_activity: bool,
}

impl SimulationConfig {
    pub fn new(t0: f64, t_end: f64, h: f64) -> Self {
        Self {
            t0,
            t_end,
            h,
            epsilon: 1e-6,
            skip_mode: SkipMode::Practical,
            record_every: 1,
            record_activity: false,
        }
    }
}

/// Per-step activity codes (and orders) as classified before each step.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityTrace {
    pub mode: TrackerMode,
    pub times: Vec<f64>,
    pub codes: Vec<Vec<u8>>,
    pub orders: Vec<Vec<u32>>,
}

#[derive(Debug, Clone)]
pub struct SimulationRun {
    /// Times of the recorded states.
    pub times: Vec<f64>,
    /// Recorded states (externals first), decimated per `record_every`.
    pub states: Vec<Vec<f64>>,
    pub final_time: f64,
    pub final_state: Vec<f64>,
    pub activity: Option<ActivityTrace>,
    pub report: SimulationReport,
}

/// One trapezoidal step with an explicit set of frozen internal
/// variables (indices into the internal block).
///
/// Frozen variables keep their values and enter the active rows'
/// residuals as constants; the Newton system is built, factorized, and
/// solved on the active block only. [`integrate`] drives the same path
/// through the activity tracker; this entry point pins the skip set
/// directly, which tests and embedders use to cross-check the
/// restricted solve against a full-system solve with pinned rows.
pub fn trapezoidal_step_frozen(
    ode: &TdOde,
    t: f64,
    h: f64,
    state: &mut [f64],
    frozen: &[usize],
    newton: &NewtonConfig,
) -> Result<EvalCounters> {
    let mut counters = EvalCounters::default();
    let mut states = vec![crate::activity::Activity::Active; ode.n()];
    for &j in frozen {
        if j >= ode.n_internal() {
            return Err(Error::Structure(format!(
                "frozen index {j} out of range for {} internal variables",
                ode.n_internal()
            )));
        }
        states[ode.n_external() + j] = crate::activity::Activity::Quiescent(1);
    }
    let mut ws = ImplicitWorkspace::new(ode);
    trapezoidal_step(
        ode,
        t,
        h,
        state,
        Some((&states, 1)),
        newton,
        0,
        &mut ws,
        &mut counters,
    )?;
    Ok(counters)
}

fn step_count(cfg: &SimulationConfig) -> Result<u64> {
    if cfg.h <= 0.0 || cfg.h.is_nan() {
        return Err(Error::Config(format!(
            "step size must be positive, got {}",
            cfg.h
        )));
    }
    if cfg.t_end < cfg.t0 {
        return Err(Error::Config(format!(
            "t_end {} lies before t0 {}",
            cfg.t_end, cfg.t0
        )));
    }
    let raw = (cfg.t_end - cfg.t0) / cfg.h;
    let rounded = raw.round();
    if (raw - rounded).abs() > 1e-6 * raw.abs().max(1.0) {
        return Err(Error::Config(format!(
            "step size {} does not divide the interval [{}, {}]",
            cfg.h, cfg.t0, cfg.t_end
        )));
    }
    if rounded >= u64::MAX as f64 {
        return Err(Error::Config("step count out of range".into()));
    }
    Ok(rounded as u64)
}

/// Fixed-step march of `method` over the configured interval.
///
/// `x_internal0` provides the internal initial values; the external
/// variables are initialized from their defining functions. After each
/// accepted step the tracker reclassifies, so skip decisions always
/// rest on the previous step. Identical inputs produce bitwise
/// identical trajectories and counters.
pub fn integrate(
    ode: &TdOde,
    method: &Method,
    x_internal0: &[f64],
    cfg: &SimulationConfig,
) -> Result<SimulationRun> {
    let n_e = ode.n_external();
    let n_i = ode.n_internal();
    let n = n_e + n_i;
    if x_internal0.len() != n_i {
        return Err(Error::Config(format!(
            "initial state has {} entries for {} internal variables",
            x_internal0.len(),
            n_i
        )));
    }
    if matches!(method, Method::Tr { .. } | Method::SfTr { .. }) && !ode.has_jacobian() {
        return Err(Error::Config(
            "trapezoidal methods need a model with an analytic Jacobian".into(),
        ));
    }
    let n_steps = step_count(cfg)?;

    let threshold = match cfg.skip_mode {
        SkipMode::Practical => 1,
        SkipMode::Exact => method.stage_count(),
    };
    let needs_tracker = method.uses_tracker() || cfg.record_activity;
    let mut tracker = if needs_tracker {
        Some(match method {
            Method::SfpRk { period_steps, .. } => {
                ActivityTracker::periodicity(n, cfg.epsilon, threshold, *period_steps)?
            }
            _ => ActivityTracker::latency(n, cfg.epsilon, threshold)?,
        })
    } else {
        None
    };
    let graph = if needs_tracker {
        Some(build_dependency_graph(ode)?)
    } else {
        None
    };

    let mut state = vec![0.0; n];
    ode.eval_external(cfg.t0, &mut state[..n_e]);
    state[n_e..].copy_from_slice(x_internal0);
    let mut prev = state.clone();

    let mut counters = EvalCounters::default();
    let mut explicit_ws = match method {
        Method::Rk { tableau } | Method::SfRk { tableau } | Method::SfpRk { tableau, .. } => {
            Some(ExplicitWorkspace::new(ode, tableau.stages()))
        }
        _ => None,
    };
    let mut implicit_ws = match method {
        Method::Tr { .. } | Method::SfTr { .. } => Some(ImplicitWorkspace::new(ode)),
        _ => None,
    };

    let mut times = Vec::new();
    let mut states = Vec::new();
    times.push(cfg.t0);
    states.push(state.clone());
    let mut activity = tracker
        .as_ref()
        .filter(|_| cfg.record_activity)
        .map(|tr| ActivityTrace {
            mode: tr.mode(),
            times: Vec::new(),
            codes: Vec::new(),
            orders: Vec::new(),
        });
    let mut occupancy = [0u64; 3];

    let started = Instant::now();
    for m in 0..n_steps {
        let t = cfg.t0 + m as f64 * cfg.h;
        if let (Some(tr), Some(g)) = (tracker.as_mut(), graph.as_ref()) {
            tr.classify(g);
        }
        if let Some(tr) = tracker.as_ref() {
            for s in tr.states() {
                occupancy[s.code() as usize] += 1;
            }
            if let Some(trace) = activity.as_mut() {
                trace.times.push(t);
                trace
                    .codes
                    .push(tr.states().iter().map(|s| s.code()).collect());
                trace
                    .orders
                    .push(tr.states().iter().map(|s| s.order()).collect());
            }
        }

        prev.copy_from_slice(&state);
        match method {
            Method::Rk { tableau } => explicit_step(
                ode,
                tableau,
                t,
                cfg.h,
                &mut state,
                &SkipPolicy::None,
                explicit_ws.as_mut().unwrap(),
                &mut counters,
            ),
            Method::SfRk { tableau } => {
                let tr = tracker.as_ref().unwrap();
                explicit_step(
                    ode,
                    tableau,
                    t,
                    cfg.h,
                    &mut state,
                    &SkipPolicy::Latency {
                        states: tr.states(),
                        threshold,
                        exact_stage_reuse: cfg.skip_mode == SkipMode::Exact,
                    },
                    explicit_ws.as_mut().unwrap(),
                    &mut counters,
                );
            }
            Method::SfpRk { tableau, .. } => {
                let tr = tracker.as_ref().unwrap();
                explicit_step(
                    ode,
                    tableau,
                    t,
                    cfg.h,
                    &mut state,
                    &SkipPolicy::Periodic {
                        states: tr.states(),
                        threshold,
                        replay: tr.replay_state(),
                    },
                    explicit_ws.as_mut().unwrap(),
                    &mut counters,
                );
            }
            Method::Tr { newton } => {
                trapezoidal_step(
                    ode,
                    t,
                    cfg.h,
                    &mut state,
                    None,
                    newton,
                    m,
                    implicit_ws.as_mut().unwrap(),
                    &mut counters,
                )?;
            }
            Method::SfTr { newton } => {
                let tr = tracker.as_ref().unwrap();
                trapezoidal_step(
                    ode,
                    t,
                    cfg.h,
                    &mut state,
                    Some((tr.states(), threshold)),
                    newton,
                    m,
                    implicit_ws.as_mut().unwrap(),
                    &mut counters,
                )?;
            }
        }

        if state.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: m, time: t });
        }
        if let Some(tr) = tracker.as_mut() {
            tr.observe(&prev, &state);
        }
        let is_last = m + 1 == n_steps;
        if (cfg.record_every > 0 && (m + 1) % cfg.record_every as u64 == 0 && !is_last) || is_last {
            times.push(cfg.t0 + (m + 1) as f64 * cfg.h);
            states.push(state.clone());
        }
    }
    let wall_seconds = started.elapsed().as_secs_f64();

    let occupancy = tracker.as_ref().map(|_| {
        let total = (occupancy[0] + occupancy[1] + occupancy[2]).max(1) as f64;
        ActivityOccupancy {
            active: occupancy[0] as f64 / total,
            semi: occupancy[1] as f64 / total,
            quiescent: occupancy[2] as f64 / total,
        }
    });

    let final_time = cfg.t0 + n_steps as f64 * cfg.h;
    Ok(SimulationRun {
        times,
        states,
        final_time,
        final_state: state,
        activity,
        report: SimulationReport {
            steps: n_steps,
            counters,
            wall_seconds,
            occupancy,
            deviation: None,
            speedup: None,
        },
    })
}
