//! Per-run instrumentation: evaluation counters, activity occupancy,
//! deviation statistics.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Work counters of one simulation run.
///
/// `transistor_evals` scales `f_internal_component_evals` by the
/// model-declared sub-evaluation weight (two devices per inverter
/// component on the benchmark); it is the cost unit the sweep summaries
/// report.
#[derive(Debug, Default, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounters {
    pub f_internal_component_evals: u64,
    pub transistor_evals: u64,
    pub newton_iterations: u64,
    pub lu_factorizations: u64,
    /// Factorized dimension -> count.
    pub lu_dim_histogram: BTreeMap<usize, u64>,
    /// Newton iterations whose residual norm failed to shrink. Worth a
    /// look when nonzero; Newton is only locally monotone, so this is
    /// diagnostic rather than an error.
    #[serde(default)]
    pub newton_residual_increases: u64,
}

impl EvalCounters {
    pub(crate) fn add_component_evals(&mut self, count: u64, weight: u64) {
        self.f_internal_component_evals += count;
        self.transistor_evals += count * weight;
    }

    pub(crate) fn record_lu(&mut self, dim: usize) {
        self.lu_factorizations += 1;
        *self.lu_dim_histogram.entry(dim).or_insert(0) += 1;
    }
}

/// Fractions of variable-steps spent in each activity state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivityOccupancy {
    pub active: f64,
    pub semi: f64,
    pub quiescent: f64,
}

/// Per-step infinity-norm distance against a reference trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationStats {
    pub avg_per_step: f64,
    pub max_per_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub steps: u64,
    pub counters: EvalCounters,
    pub wall_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub occupancy: Option<ActivityOccupancy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deviation: Option<DeviationStats>,
    /// Reference wall time / this run's wall time; only set when both
    /// ran in the same process.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub speedup: Option<f64>,
}
