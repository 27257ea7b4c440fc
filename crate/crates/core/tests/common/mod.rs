//! Shared fixtures for the integration suites: the benchmark repro
//! configs and the synthetic systems used by the equivalence oracles.

#![allow(dead_code)]

use std::path::PathBuf;

use sfode::experiment::{CellReport, ExperimentConfig};
use sfode::pwl::PwlSource;
use sfode::tdode::TdOde;
use sfode::{integrate, Method, SimulationConfig, SimulationRun};

pub fn repro_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../repro/{name}.toml"))
}

pub fn repro_config(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&repro_path(name)).expect("repro config loads")
}

pub fn transistor_count(reports: &[CellReport], method: &str, delta_t: f64) -> u64 {
    reports
        .iter()
        .find(|r| r.method == method && r.delta_t == delta_t)
        .and_then(|r| r.report.as_ref())
        .unwrap_or_else(|| panic!("no successful cell for {method} at delta_t = {delta_t}"))
        .counters
        .transistor_evals
}

pub fn assert_within_band(actual: u64, expected: u64, band: f64, label: &str) {
    let rel = (actual as f64 - expected as f64) / expected as f64;
    assert!(
        rel.abs() <= band,
        "{label}: {actual} deviates {:.1}% from {expected} (band {:.0}%)",
        rel * 100.0,
        band * 100.0
    );
}

/// Max over steps of the infinity-norm distance between two
/// trajectories recorded at every step.
pub fn max_deviation(a: &SimulationRun, b: &SimulationRun) -> f64 {
    assert_eq!(a.states.len(), b.states.len());
    let mut max = 0.0f64;
    for (sa, sb) in a.states.iter().zip(&b.states) {
        for (va, vb) in sa.iter().zip(sb) {
            max = max.max((va - vb).abs());
        }
    }
    max
}

pub fn assert_bitwise_equal_trajectories(a: &SimulationRun, b: &SimulationRun) {
    assert_eq!(a.states.len(), b.states.len(), "trajectory lengths differ");
    for (i, (sa, sb)) in a.states.iter().zip(&b.states).enumerate() {
        for (j, (va, vb)) in sa.iter().zip(sb).enumerate() {
            assert_eq!(
                va.to_bits(),
                vb.to_bits(),
                "state {i}, variable {j}: {va} vs {vb}"
            );
        }
    }
}

fn dead_zone(v: f64) -> f64 {
    if v.abs() <= 100.0 {
        0.0
    } else {
        v - 100.0
    }
}

/// Chain of dead-zone components behind one driven head: the head
/// integrates a slowly moving external, the dead-zone tail has exactly
/// zero increments, and a trailing reader stays active while consuming
/// a frozen variable.
///
/// Internal layout: c0 driven, c1..c5 dead zone, c6 reader of c5.
pub fn dead_zone_system() -> (TdOde, Vec<f64>) {
    let ode = TdOde::new(
        1,
        7,
        |t, out| out[0] = 0.05 * t,
        |x_e, x_i, out, mask| {
            for &i in mask {
                out[i] = match i {
                    0 => x_e[0],
                    1..=5 => dead_zone(x_i[i - 1]),
                    6 => x_i[5] - 1.0,
                    _ => unreachable!(),
                };
            }
        },
        vec![
            vec![0],
            vec![1],
            vec![2],
            vec![3],
            vec![4],
            vec![5],
            vec![6],
        ],
    )
    .unwrap();
    let x0 = vec![0.0, 1.0, 1.0, 1.0, 1.0, 3.0, 0.0];
    (ode, x0)
}

/// System whose states repeat bitwise with period two: a dyadic square
/// wave drives the head, `h` must be the returned dyadic step. A
/// second, non-periodic external keeps one reader component active.
///
/// Internal layout: c0 driven by the square wave, c1 dead zone behind
/// it, c2 active reader of c1.
pub fn two_periodic_system() -> (TdOde, Vec<f64>, f64) {
    let h = 1.0 / 32.0;
    let square = PwlSource::periodic(
        vec![
            (0.0, 1.0),
            (h / 2.0, 1.0),
            (0.75 * h, -1.0),
            (1.5 * h, -1.0),
            (1.75 * h, 1.0),
        ],
        2.0 * h,
    )
    .unwrap();
    let ode = TdOde::new(
        2,
        3,
        move |t, out| {
            out[0] = square.eval(t);
            out[1] = 0.25 * t;
        },
        |x_e, x_i, out, mask| {
            for &i in mask {
                out[i] = match i {
                    0 => x_e[0],
                    1 => dead_zone(x_i[0]),
                    2 => x_e[1] + dead_zone(x_i[1]),
                    _ => unreachable!(),
                };
            }
        },
        vec![vec![0], vec![2], vec![1, 3]],
    )
    .unwrap();
    let x0 = vec![0.0, 1.0, 0.0];
    (ode, x0, h)
}

pub fn run(ode: &TdOde, method: &Method, x0: &[f64], cfg: &SimulationConfig) -> SimulationRun {
    integrate(ode, method, x0, cfg).expect("integration succeeds")
}
