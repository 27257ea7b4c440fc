//! Experiment grids.
//!
//! One experiment sweeps the cross product of methods, pulse delays,
//! model complexities, and activity tolerances over a fixed model and
//! interval. Each grid cell is an independent simulation; when a
//! reference method is declared it runs first within the cell and the
//! per-step deviation and wall-clock speedup are recorded. Cells run
//! on a rayon pool when the `parallel` feature is enabled and `jobs`
//! is not 1; results are keyed by grid coordinates, so the summary is
//! identical either way.
//!
//! Configs are human-editable TOML documents; the committed `repro/`
//! directory pins one per benchmark table or figure.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::circuits::{
    build_inverter_chain, linear_cascade, InverterChainParams, Polarity, ShichmanHodgesParams,
};
use crate::error::{Error, Result};
use crate::integrate::{
    integrate, Method, NewtonConfig, SimulationConfig, SimulationRun, SkipMode,
};
use crate::pwl::make_pulse_train;
use crate::report::{DeviationStats, SimulationReport};
use crate::tableau::ButcherTableau;
use crate::tdode::TdOde;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Rk4,
    SfRk4,
    Tr,
    SfTr,
    SfpRk4,
}

impl MethodName {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodName::Rk4 => "rk4",
            MethodName::SfRk4 => "sfrk4",
            MethodName::Tr => "tr",
            MethodName::SfTr => "sftr",
            MethodName::SfpRk4 => "sfprk4",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SkipModeName {
    #[default]
    Practical,
    Exact,
}

impl From<SkipModeName> for SkipMode {
    fn from(v: SkipModeName) -> Self {
        match v {
            SkipModeName::Practical => SkipMode::Practical,
            SkipModeName::Exact => SkipMode::Exact,
        }
    }
}

fn one_or_many<'de, D, T>(deserializer: D) -> std::result::Result<Vec<T>, D::Error>
where
    D: serde::Deserializer<'de>,
    T: Deserialize<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany<T> {
        One(T),
        Many(Vec<T>),
    }
    Ok(match OneOrMany::deserialize(deserializer)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    #[serde(default = "default_threshold")]
    pub threshold_voltage: f64,
    #[serde(default = "default_nmos_beta")]
    pub nmos_transconductance: f64,
    #[serde(default = "default_pmos_beta")]
    pub pmos_transconductance: f64,
    #[serde(default)]
    pub channel_length_modulation: f64,
}

fn default_threshold() -> f64 {
    crate::circuits::reference_device_nmos().threshold_voltage
}

fn default_nmos_beta() -> f64 {
    crate::circuits::reference_device_nmos().transconductance
}

fn default_pmos_beta() -> f64 {
    crate::circuits::reference_device_pmos().transconductance
}

impl Default for DeviceConfig {
    fn default() -> Self {
        Self {
            threshold_voltage: default_threshold(),
            nmos_transconductance: default_nmos_beta(),
            pmos_transconductance: default_pmos_beta(),
            channel_length_modulation: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    #[serde(default = "default_edge")]
    pub rise: f64,
    #[serde(default = "default_edge")]
    pub fall: f64,
    /// Low hold before the first pulse.
    #[serde(default = "default_edge")]
    pub lead_in: f64,
    #[serde(default)]
    pub v_low: f64,
    /// Defaults to the supply voltage.
    #[serde(default)]
    pub v_high: Option<f64>,
}

fn default_edge() -> f64 {
    1.0
}

impl Default for InputConfig {
    fn default() -> Self {
        Self {
            rise: 1.0,
            fall: 1.0,
            lead_in: 1.0,
            v_low: 0.0,
            v_high: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    InverterChain {
        inverters: usize,
        #[serde(default = "default_capacitance")]
        capacitance: f64,
        #[serde(default = "default_supply")]
        supply_voltage: f64,
        #[serde(default)]
        device: DeviceConfig,
        #[serde(default)]
        input: InputConfig,
    },
    /// Small linear cascade for smoke runs.
    Linear4 {
        #[serde(default = "default_linear4_initial")]
        initial: Vec<f64>,
    },
}

fn default_capacitance() -> f64 {
    1.0
}

fn default_supply() -> f64 {
    5.0
}

fn default_linear4_initial() -> Vec<f64> {
    vec![1.0, 0.0, 0.0, 0.0]
}

/// A built model: the system, its initial internal state, and the
/// fundamental input period when one exists.
pub struct BuiltModel {
    pub ode: TdOde,
    pub initial: Vec<f64>,
    pub input_period: Option<f64>,
}

impl ModelConfig {
    pub fn build(&self, delta_t: f64, complexity: u32) -> Result<BuiltModel> {
        match self {
            ModelConfig::InverterChain {
                inverters,
                capacitance,
                supply_voltage,
                device,
                input,
            } => {
                let v_high = input.v_high.unwrap_or(*supply_voltage);
                let pulse = make_pulse_train(delta_t, input.v_low, v_high, input.rise, input.fall)?
                    .delayed(input.lead_in);
                let period = pulse.period();
                let params = InverterChainParams {
                    inverters: *inverters,
                    capacitance: *capacitance,
                    supply_voltage: *supply_voltage,
                    nmos: ShichmanHodgesParams {
                        polarity: Polarity::Nmos,
                        threshold_voltage: device.threshold_voltage,
                        transconductance: device.nmos_transconductance,
                        channel_length_modulation: device.channel_length_modulation,
                    },
                    pmos: ShichmanHodgesParams {
                        polarity: Polarity::Pmos,
                        threshold_voltage: device.threshold_voltage,
                        transconductance: device.pmos_transconductance,
                        channel_length_modulation: device.channel_length_modulation,
                    },
                    complexity,
                    input: pulse,
                };
                let initial = params.quiescent_state(false);
                let ode = build_inverter_chain(&params)?;
                Ok(BuiltModel {
                    ode,
                    initial,
                    input_period: period,
                })
            }
            ModelConfig::Linear4 { initial } => {
                if initial.len() != 4 {
                    return Err(Error::Config(format!(
                        "linear4 initial state needs 4 entries, got {}",
                        initial.len()
                    )));
                }
                Ok(BuiltModel {
                    ode: linear_cascade(),
                    initial: initial.clone(),
                    input_period: None,
                })
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub t0: f64,
    pub t_end: f64,
    pub h: f64,
    #[serde(deserialize_with = "one_or_many")]
    pub methods: Vec<MethodName>,
    #[serde(default = "default_epsilons", deserialize_with = "one_or_many")]
    pub epsilon: Vec<f64>,
    #[serde(default = "default_delta_t", deserialize_with = "one_or_many")]
    pub delta_t: Vec<f64>,
    #[serde(default = "default_complexity", deserialize_with = "one_or_many")]
    pub complexity: Vec<u32>,
    #[serde(default)]
    pub skip_mode: SkipModeName,
    /// Runs this method first in every cell and reports deviation and
    /// speedup against it.
    #[serde(default)]
    pub reference: Option<MethodName>,
    #[serde(default = "default_newton_tolerance")]
    pub newton_tolerance: f64,
    #[serde(default = "default_newton_max_iterations")]
    pub newton_max_iterations: usize,
    /// Period in steps for `sfprk4`; derived from the input period
    /// when absent.
    #[serde(default)]
    pub period_steps: Option<usize>,
}

fn default_epsilons() -> Vec<f64> {
    vec![1e-6]
}

fn default_delta_t() -> Vec<f64> {
    vec![0.0]
}

fn default_complexity() -> Vec<u32> {
    vec![0]
}

fn default_newton_tolerance() -> f64 {
    NewtonConfig::default().tolerance
}

fn default_newton_max_iterations() -> usize {
    NewtonConfig::default().max_iterations
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_true")]
    pub trajectory: bool,
    /// Keep every k-th trajectory row.
    #[serde(default = "default_one")]
    pub trajectory_every: usize,
    #[serde(default)]
    pub activity: bool,
    /// Keep every k-th activity row.
    #[serde(default = "default_one")]
    pub activity_every: usize,
    /// Append per-variable order columns to the activity trace.
    #[serde(default)]
    pub orders: bool,
}

fn default_true() -> bool {
    true
}

fn default_one() -> usize {
    1
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            trajectory: true,
            trajectory_every: 1,
            activity: false,
            activity_every: 1,
            orders: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub model: ModelConfig,
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(s).map_err(|e| Error::Config(format!("config parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(Error::Config(format!(
                "experiment name {:?} must be non-empty and filesystem-safe",
                self.name
            )));
        }
        if self.run.methods.is_empty() {
            return Err(Error::Config("no methods configured".into()));
        }
        if self.run.epsilon.is_empty()
            || self.run.delta_t.is_empty()
            || self.run.complexity.is_empty()
        {
            return Err(Error::Config("sweep lists must be non-empty".into()));
        }
        Ok(())
    }

    /// Cross product of the sweep lists in declared order: methods,
    /// then delay, then complexity, then tolerance.
    pub fn cells(&self) -> Vec<CellSpec> {
        let mut cells = Vec::new();
        let mut index = 0;
        for &method in &self.run.methods {
            for &delta_t in &self.run.delta_t {
                for &complexity in &self.run.complexity {
                    for &epsilon in &self.run.epsilon {
                        cells.push(CellSpec {
                            index,
                            method,
                            delta_t,
                            complexity,
                            epsilon,
                        });
                        index += 1;
                    }
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellSpec {
    pub index: usize,
    pub method: MethodName,
    pub delta_t: f64,
    pub complexity: u32,
    pub epsilon: f64,
}

impl CellSpec {
    pub fn id(&self) -> String {
        format!(
            "{}_dt{}_k{}_eps{:e}",
            self.method.as_str(),
            self.delta_t,
            self.complexity,
            self.epsilon
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CellReport {
    pub method: String,
    pub delta_t: f64,
    pub complexity: u32,
    pub epsilon: f64,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<SimulationReport>,
}

fn build_method(name: MethodName, run: &RunConfig, input_period: Option<f64>) -> Result<Method> {
    let newton = NewtonConfig {
        tolerance: run.newton_tolerance,
        max_iterations: run.newton_max_iterations,
    };
    Ok(match name {
        MethodName::Rk4 => Method::Rk {
            tableau: ButcherTableau::classic_rk4(),
        },
        MethodName::SfRk4 => Method::SfRk {
            tableau: ButcherTableau::classic_rk4(),
        },
        MethodName::Tr => Method::Tr { newton },
        MethodName::SfTr => Method::SfTr { newton },
        MethodName::SfpRk4 => {
            let period_steps = match run.period_steps {
                Some(p) => p,
                None => {
                    let period = input_period.ok_or_else(|| {
                        Error::Config(
                            "sfprk4 needs period_steps or a model with a periodic input".into(),
                        )
                    })?;
                    let raw = period / run.h;
                    let rounded = raw.round();
                    if (raw - rounded).abs() > 1e-6 * raw.abs().max(1.0) || rounded < 1.0 {
                        return Err(Error::Config(format!(
                            "input period {period} is not an integer multiple of h = {}",
                            run.h
                        )));
                    }
                    rounded as usize
                }
            };
            Method::SfpRk {
                tableau: ButcherTableau::classic_rk4(),
                period_steps,
            }
        }
    })
}

fn deviation_between(reference: &SimulationRun, run: &SimulationRun) -> DeviationStats {
    let steps = reference.states.len().min(run.states.len());
    let mut max_dev = 0.0f64;
    let mut sum = 0.0f64;
    let mut count = 0u64;
    for i in 1..steps {
        let dev = reference.states[i]
            .iter()
            .zip(&run.states[i])
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        max_dev = max_dev.max(dev);
        sum += dev;
        count += 1;
    }
    DeviationStats {
        avg_per_step: if count > 0 { sum / count as f64 } else { 0.0 },
        max_per_step: max_dev,
    }
}

/// Runs one grid cell, optionally writing its artifact files.
fn run_cell(cfg: &ExperimentConfig, spec: &CellSpec, out_dir: Option<&Path>) -> CellReport {
    let mut cell = CellReport {
        method: spec.method.as_str().to_string(),
        delta_t: spec.delta_t,
        complexity: spec.complexity,
        epsilon: spec.epsilon,
        ok: false,
        error: None,
        report: None,
    };
    match execute_cell(cfg, spec, out_dir) {
        Ok(report) => {
            cell.ok = true;
            cell.report = Some(report);
        }
        Err(e) => cell.error = Some(e.to_string()),
    }
    cell
}

fn execute_cell(
    cfg: &ExperimentConfig,
    spec: &CellSpec,
    out_dir: Option<&Path>,
) -> Result<SimulationReport> {
    let model = cfg.model.build(spec.delta_t, spec.complexity)?;
    let method = build_method(spec.method, &cfg.run, model.input_period)?;
    let mut sim = SimulationConfig::new(cfg.run.t0, cfg.run.t_end, cfg.run.h);
    sim.epsilon = spec.epsilon;
    sim.skip_mode = cfg.run.skip_mode.into();
    sim.record_every = 1;
    sim.record_activity = cfg.output.activity;

    let reference = match cfg.run.reference {
        Some(r) if r != spec.method => {
            let ref_method = build_method(r, &cfg.run, model.input_period)?;
            let mut ref_sim = sim.clone();
            ref_sim.record_activity = false;
            Some(integrate(
                &model.ode,
                &ref_method,
                &model.initial,
                &ref_sim,
            )?)
        }
        _ => None,
    };

    let mut run = integrate(&model.ode, &method, &model.initial, &sim)?;
    if let Some(reference) = &reference {
        run.report.deviation = Some(deviation_between(reference, &run));
        if run.report.wall_seconds > 0.0 {
            run.report.speedup = Some(reference.report.wall_seconds / run.report.wall_seconds);
        }
    }

    if let Some(dir) = out_dir {
        let cell_dir = dir.join(&cfg.name).join(spec.id());
        std::fs::create_dir_all(&cell_dir)?;
        if cfg.output.trajectory {
            let csv = trajectory_csv(&run, cfg.output.trajectory_every);
            std::fs::write(cell_dir.join("trajectory.csv"), csv)?;
        }
        if cfg.output.activity {
            if let Some(csv) = activity_csv(&run, cfg.output.orders, cfg.output.activity_every) {
                std::fs::write(cell_dir.join("activity.csv"), csv)?;
            }
        }
        let json = serde_json::to_string_pretty(&run.report)
            .map_err(|e| Error::Config(format!("report serialization: {e}")))?;
        std::fs::write(cell_dir.join("report.json"), json)?;
    }
    Ok(run.report)
}

/// Full-precision trajectory table: `t,x_1,...,x_n`.
pub fn trajectory_csv(run: &SimulationRun, every: usize) -> String {
    let every = every.max(1);
    let n = run.states.first().map_or(0, Vec::len);
    let mut out = String::new();
    out.push('t');
    for i in 1..=n {
        let _ = write!(out, ",x_{i}");
    }
    out.push('\n');
    let last = run.states.len().saturating_sub(1);
    for (i, (t, state)) in run.times.iter().zip(&run.states).enumerate() {
        if i % every != 0 && i != last {
            continue;
        }
        let _ = write!(out, "{t:.16e}");
        for v in state {
            let _ = write!(out, ",{v:.16e}");
        }
        out.push('\n');
    }
    out
}

/// Activity trace: per step `t` plus one code per variable (0 active,
/// 1 semi-latent/-periodic, 2 latent/periodic), optionally followed by
/// the orders. `every` decimates the rows.
pub fn activity_csv(run: &SimulationRun, orders: bool, every: usize) -> Option<String> {
    let trace = run.activity.as_ref()?;
    let every = every.max(1);
    let n = trace.codes.first().map_or(0, Vec::len);
    let mut out = String::new();
    let mode = match trace.mode {
        crate::activity::TrackerMode::Latency => "latency",
        crate::activity::TrackerMode::Periodicity => "periodicity",
    };
    let _ = writeln!(out, "# mode={mode}");
    out.push('t');
    for i in 1..=n {
        let _ = write!(out, ",s_{i}");
    }
    if orders {
        for i in 1..=n {
            let _ = write!(out, ",o_{i}");
        }
    }
    out.push('\n');
    for (i, t) in trace.times.iter().enumerate() {
        if i % every != 0 {
            continue;
        }
        let _ = write!(out, "{t:.6}");
        for c in &trace.codes[i] {
            let _ = write!(out, ",{c}");
        }
        if orders {
            for o in &trace.orders[i] {
                let _ = write!(out, ",{o}");
            }
        }
        out.push('\n');
    }
    Some(out)
}

/// Timing-free per-cell summary table (deterministic across reruns).
pub fn summary_csv(reports: &[CellReport]) -> String {
    let mut out = String::from(
        "method,delta_t,complexity,epsilon,status,steps,f_internal_component_evals,\
         transistor_evals,newton_iterations,lu_factorizations,avg_deviation,max_deviation,\
         active_fraction,semi_fraction,quiescent_fraction\n",
    );
    for r in reports {
        let status = if r.ok { "ok" } else { "failed" };
        let _ = write!(
            out,
            "{},{},{},{:e},{}",
            r.method, r.delta_t, r.complexity, r.epsilon, status
        );
        match &r.report {
            Some(rep) => {
                let _ = write!(
                    out,
                    ",{},{},{},{},{}",
                    rep.steps,
                    rep.counters.f_internal_component_evals,
                    rep.counters.transistor_evals,
                    rep.counters.newton_iterations,
                    rep.counters.lu_factorizations
                );
                match rep.deviation {
                    Some(d) => {
                        let _ = write!(out, ",{:.16e},{:.16e}", d.avg_per_step, d.max_per_step);
                    }
                    None => out.push_str(",,"),
                }
                match rep.occupancy {
                    Some(o) => {
                        let _ = write!(out, ",{:.6},{:.6},{:.6}", o.active, o.semi, o.quiescent);
                    }
                    None => out.push_str(",,,"),
                }
            }
            None => out.push_str(&",".repeat(10)),
        }
        out.push('\n');
    }
    out
}

/// Text pivot of transistor evaluations, one method per row and one
/// delay per column, per (complexity, epsilon) pair.
pub fn summary_pivot(cfg: &ExperimentConfig, reports: &[CellReport]) -> String {
    let mut out = String::new();
    for &complexity in &cfg.run.complexity {
        for &epsilon in &cfg.run.epsilon {
            if cfg.run.complexity.len() > 1 || cfg.run.epsilon.len() > 1 {
                let _ = writeln!(out, "complexity = {complexity}, epsilon = {epsilon:e}");
            }
            let _ = write!(out, "{:>10}", "delta_t");
            for &dt in &cfg.run.delta_t {
                let _ = write!(out, " {dt:>12}");
            }
            out.push('\n');
            for &method in &cfg.run.methods {
                let _ = write!(out, "{:>10}", method.as_str());
                for &dt in &cfg.run.delta_t {
                    let found = reports.iter().find(|r| {
                        r.method == method.as_str()
                            && r.delta_t == dt
                            && r.complexity == complexity
                            && r.epsilon == epsilon
                    });
                    match found.and_then(|r| r.report.as_ref()) {
                        Some(rep) => {
                            let _ = write!(out, " {:>12}", rep.counters.transistor_evals);
                        }
                        None => {
                            let _ = write!(out, " {:>12}", "failed");
                        }
                    }
                }
                out.push('\n');
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(feature = "parallel")]
fn run_cells(
    cfg: &ExperimentConfig,
    cells: &[CellSpec],
    out_dir: Option<&Path>,
    jobs: usize,
) -> Result<Vec<CellReport>> {
    if jobs == 1 {
        return Ok(cells.iter().map(|c| run_cell(cfg, c, out_dir)).collect());
    }
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        cells
            .par_iter()
            .map(|c| run_cell(cfg, c, out_dir))
            .collect()
    }))
}

#[cfg(not(feature = "parallel"))]
fn run_cells(
    cfg: &ExperimentConfig,
    cells: &[CellSpec],
    out_dir: Option<&Path>,
    _jobs: usize,
) -> Result<Vec<CellReport>> {
    Ok(cells.iter().map(|c| run_cell(cfg, c, out_dir)).collect())
}

/// Executes the whole grid. `jobs` selects the worker count (0 uses
/// the rayon default, 1 forces the sequential path). With an output
/// directory, every cell writes `trajectory.csv` / `activity.csv` /
/// `report.json` under `<out>/<name>/<cell-id>/` and the grid writes
/// `summary.csv` plus `summary.json`.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out_dir: Option<&Path>,
    jobs: usize,
) -> Result<Vec<CellReport>> {
    cfg.validate()?;
    let cells = cfg.cells();
    let reports = run_cells(cfg, &cells, out_dir, jobs)?;
    if let Some(dir) = out_dir {
        let exp_dir = dir.join(&cfg.name);
        std::fs::create_dir_all(&exp_dir)?;
        std::fs::write(exp_dir.join("summary.csv"), summary_csv(&reports))?;
        std::fs::write(
            exp_dir.join("summary_pivot.txt"),
            summary_pivot(cfg, &reports),
        )?;
        let json = serde_json::to_string_pretty(&reports)
            .map_err(|e| Error::Config(format!("summary serialization: {e}")))?;
        std::fs::write(exp_dir.join("summary.json"), json)?;
    }
    Ok(reports)
}
