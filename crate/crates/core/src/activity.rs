//! Per-variable activity classification.
//!
//! After every accepted step each variable is classified from the data
//! of the previous step(s):
//!
//! - *semi-latent* -- its last increment was below the tolerance;
//! - *latent of order 1* -- it and its whole input set are semi-latent;
//! - *latent of order `v`* -- additionally, every input is latent of
//!   order at least `v - 1`.
//!
//! In periodicity mode the increment criterion is replaced by the
//! difference against the state one period (`p` steps) ago, held in a
//! circular buffer; the order propagation is identical. Latency is the
//! `p = 1` special case of periodicity.
//!
//! Conventions:
//! - the first accepted step classifies everything as active, as do all
//!   steps in periodicity mode until the buffer holds a full period;
//! - ties at exactly the tolerance count as active (strict `<`);
//! - a zero tolerance demands bitwise-equal values;
//! - a semi-latent vertex with an empty input set is latent of the
//!   maximum tracked order (the recursive definition is vacuous), so
//!   constant external sources classify as deeply latent.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::graph::DependencyGraph;

/// Classification of one variable at one accepted step.
///
/// `Semi`/`Quiescent` read as semi-latent/latent in latency mode and as
/// semi-periodic/periodic in periodicity mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activity {
    Active,
    Semi,
    Quiescent(u32),
}

impl Activity {
    /// Trace encoding: 0 active, 1 semi-latent/-periodic, 2 latent/periodic.
    pub fn code(self) -> u8 {
        match self {
            Activity::Active => 0,
            Activity::Semi => 1,
            Activity::Quiescent(_) => 2,
        }
    }

    /// Latency/periodicity order; 0 for active and semi states.
    pub fn order(self) -> u32 {
        match self {
            Activity::Quiescent(v) => v,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackerMode {
    Latency,
    Periodicity,
}

/// Tracks per-variable activity over the course of one simulation.
///
/// The integrator calls [`ActivityTracker::observe`] after every
/// accepted step and [`ActivityTracker::classify`] before the next one.
#[derive(Debug)]
pub struct ActivityTracker {
    mode: TrackerMode,
    epsilon: f64,
    max_order: u32,
    period_steps: usize,
    semi: Vec<bool>,
    basis_ready: bool,
    prev_increments: Vec<f64>,
    history: VecDeque<Vec<f64>>,
    orders: Vec<u32>,
    next_orders: Vec<u32>,
    states: Vec<Activity>,
    edge_visits: u64,
}

impl ActivityTracker {
    /// Latency mode: compares each variable against its previous value.
    pub fn latency(n: usize, epsilon: f64, max_order: u32) -> Result<Self> {
        Self::build(TrackerMode::Latency, n, epsilon, max_order, 1)
    }

    /// Periodicity mode: compares each variable against its value
    /// `period_steps` steps ago.
    pub fn periodicity(
        n: usize,
        epsilon: f64,
        max_order: u32,
        period_steps: usize,
    ) -> Result<Self> {
        if period_steps == 0 {
            return Err(Error::Config("period_steps must be at least 1".into()));
        }
        Self::build(
            TrackerMode::Periodicity,
            n,
            epsilon,
            max_order,
            period_steps,
        )
    }

    fn build(
        mode: TrackerMode,
        n: usize,
        epsilon: f64,
        max_order: u32,
        period_steps: usize,
    ) -> Result<Self> {
        if epsilon < 0.0 || epsilon.is_nan() {
            return Err(Error::Config(format!(
                "epsilon must be >= 0, got {epsilon}"
            )));
        }
        if max_order == 0 {
            return Err(Error::Config("max_order must be at least 1".into()));
        }
        Ok(Self {
            mode,
            epsilon,
            max_order,
            period_steps,
            semi: vec![false; n],
            basis_ready: false,
            prev_increments: vec![0.0; n],
            history: VecDeque::with_capacity(period_steps + 1),
            orders: vec![0; n],
            next_orders: vec![0; n],
            states: vec![Activity::Active; n],
            edge_visits: 0,
        })
    }

    pub fn mode(&self) -> TrackerMode {
        self.mode
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn max_order(&self) -> u32 {
        self.max_order
    }

    pub fn period_steps(&self) -> usize {
        self.period_steps
    }

    /// Total in-edge inspections across all `classify` calls.
    pub fn edge_visits(&self) -> u64 {
        self.edge_visits
    }

    /// `|x^{m-1}| -> |x^m|` increments recorded by the last `observe`.
    pub fn prev_increments(&self) -> &[f64] {
        &self.prev_increments
    }

    /// Forgets all history; the next classification is all-active.
    pub fn reset(&mut self) {
        self.semi.fill(false);
        self.basis_ready = false;
        self.prev_increments.fill(0.0);
        self.history.clear();
        self.states.fill(Activity::Active);
    }

    #[inline]
    fn is_semi(&self, diff: f64) -> bool {
        if self.epsilon == 0.0 {
            diff == 0.0
        } else {
            diff < self.epsilon
        }
    }

    /// Records an accepted step that moved the state from `prev` to
    /// `next`. Both vectors cover all variables, externals first.
    pub fn observe(&mut self, prev: &[f64], next: &[f64]) {
        debug_assert_eq!(prev.len(), self.semi.len());
        debug_assert_eq!(next.len(), self.semi.len());
        for (inc, (p, n)) in self.prev_increments.iter_mut().zip(prev.iter().zip(next)) {
            *inc = (n - p).abs();
        }
        match self.mode {
            TrackerMode::Latency => {
                for i in 0..self.semi.len() {
                    self.semi[i] = self.is_semi(self.prev_increments[i]);
                }
                self.basis_ready = true;
            }
            TrackerMode::Periodicity => {
                if self.history.len() == self.period_steps {
                    let base = self.history.front().expect("non-empty history");
                    for i in 0..self.semi.len() {
                        self.semi[i] = self.is_semi((next[i] - base[i]).abs());
                    }
                    self.basis_ready = true;
                } else {
                    self.basis_ready = false;
                }
                self.history.push_back(next.to_vec());
                if self.history.len() > self.period_steps {
                    self.history.pop_front();
                }
            }
        }
    }

    /// Oldest buffered state; in periodicity mode this is the
    /// replacement value `x^{m-p+1}` for periodic variables.
    pub fn replay_state(&self) -> Option<&[f64]> {
        if self.history.len() == self.period_steps {
            self.history.front().map(Vec::as_slice)
        } else {
            None
        }
    }

    /// Classifies every variable from the recorded flags and the
    /// dependency graph. Orders are propagated to at most
    /// `max_order`, touching each edge at most `max_order` times.
    pub fn classify(&mut self, graph: &DependencyGraph) -> &[Activity] {
        let n = self.semi.len();
        debug_assert_eq!(graph.n_vertices(), n);
        if !self.basis_ready {
            self.states.fill(Activity::Active);
            return &self.states;
        }
        let cap = self.max_order;
        // eligibility: order >= 1 requires the vertex and its whole
        // input set to be semi-quiescent; empty input sets are vacuous
        for i in 0..n {
            self.orders[i] = if !self.semi[i] {
                0
            } else {
                let pre = graph.in_edges(i);
                self.edge_visits += pre.len() as u64;
                if pre.iter().all(|&j| self.semi[j]) {
                    cap
                } else {
                    0
                }
            };
        }
        // synchronous min-propagation: order(i) = min(cap, 1 + min over inputs)
        for _round in 1..cap {
            let mut changed = false;
            for i in 0..n {
                let cur = self.orders[i];
                if cur <= 1 {
                    self.next_orders[i] = cur;
                    continue;
                }
                let pre = graph.in_edges(i);
                self.edge_visits += pre.len() as u64;
                let mut val = cap;
                if !pre.is_empty() {
                    let min_in = pre.iter().map(|&j| self.orders[j]).min().unwrap();
                    val = cap.min(min_in.saturating_add(1));
                }
                self.next_orders[i] = val;
                if val != cur {
                    changed = true;
                }
            }
            std::mem::swap(&mut self.orders, &mut self.next_orders);
            if !changed {
                break;
            }
        }
        for i in 0..n {
            self.states[i] = if !self.semi[i] {
                Activity::Active
            } else if self.orders[i] == 0 {
                Activity::Semi
            } else {
                Activity::Quiescent(self.orders[i])
            };
        }
        &self.states
    }

    pub fn states(&self) -> &[Activity] {
        &self.states
    }
}
