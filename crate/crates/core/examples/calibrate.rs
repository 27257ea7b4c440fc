//! Calibration scratchpad: prints front-traversal time and sweep
//! counts for the benchmark chain so device constants can be pinned.
//!
//! Usage: cargo run --release -p sfode --example calibrate [beta_n] [beta_p] [newton_tol] [vt]

use sfode::circuits::{build_inverter_chain, InverterChainParams};
use sfode::{integrate, ButcherTableau, Method, NewtonConfig, SimulationConfig};

struct Knobs {
    beta_n: f64,
    beta_p: f64,
    vt: f64,
}

fn chain(n: usize, delta_t: f64, k: &Knobs) -> (InverterChainParams, sfode::TdOde) {
    let mut params = InverterChainParams::reference(n, delta_t, 0);
    params.nmos.transconductance = k.beta_n;
    params.pmos.transconductance = k.beta_p;
    params.nmos.threshold_voltage = k.vt;
    params.pmos.threshold_voltage = k.vt;
    let ode = build_inverter_chain(&params).unwrap();
    (params, ode)
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let beta_n: f64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(5.0);
    let beta_p: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(beta_n);
    let newton_tol: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(1e-3);
    let vt: f64 = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(1.0);
    let knobs = Knobs { beta_n, beta_p, vt };
    let n = 100;
    println!("beta_n = {beta_n}, beta_p = {beta_p}, vt = {vt}, newton_tol = {newton_tol:e}");

    // traversal: time of last node crossing vdd/2 for a single pulse
    let (params, ode) = chain(n, 30.0, &knobs);
    let x0 = params.quiescent_state(false);
    let cfg = SimulationConfig::new(0.0, 40.0, 0.01);
    let run = integrate(
        &ode,
        &Method::Rk {
            tableau: ButcherTableau::classic_rk4(),
        },
        &x0,
        &cfg,
    )
    .unwrap();
    let half = params.supply_voltage / 2.0;
    let mut t_first_cross = vec![f64::NAN; n];
    for (i, state) in run.states.iter().enumerate() {
        for j in 0..n {
            let v = state[3 + j];
            let v0 = x0[j];
            if t_first_cross[j].is_nan() && ((v0 > half && v < half) || (v0 < half && v > half)) {
                t_first_cross[j] = run.times[i];
            }
        }
    }
    println!(
        "first-edge crossings: node0 {:.2} node25 {:.2} node50 {:.2} node99 {:.2} (traversal {:.2})",
        t_first_cross[0],
        t_first_cross[25],
        t_first_cross[50],
        t_first_cross[99],
        t_first_cross[99] - t_first_cross[0]
    );
    // settle: last time any node moved by > 1e-6 per step
    let mut t_quiet = 0.0;
    for i in 1..run.states.len() {
        let max_inc = run.states[i]
            .iter()
            .zip(&run.states[i - 1])
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if max_inc >= 1e-6 {
            t_quiet = run.times[i];
        }
    }
    println!("all-quiet (eps 1e-6) after t = {t_quiet:.2}");

    let sweep = [0.0, 5.0, 10.0, 15.0, 20.0];

    print!("rk4   :");
    for &dt in &sweep {
        let (params, ode) = chain(n, dt, &knobs);
        let run = integrate(
            &ode,
            &Method::Rk {
                tableau: ButcherTableau::classic_rk4(),
            },
            &params.quiescent_state(false),
            &SimulationConfig::new(0.0, 40.0, 0.01),
        )
        .unwrap();
        print!(" {:>9}", run.report.counters.transistor_evals);
    }
    println!("   (reference:   3200000 x5)");

    print!("sfrk4 :");
    for &dt in &sweep {
        let (params, ode) = chain(n, dt, &knobs);
        let run = integrate(
            &ode,
            &Method::SfRk {
                tableau: ButcherTableau::classic_rk4(),
            },
            &params.quiescent_state(false),
            &SimulationConfig::new(0.0, 40.0, 0.01),
        )
        .unwrap();
        print!(" {:>9}", run.report.counters.transistor_evals);
    }
    println!("   (reference:   2317152 1046664 649976 479360 413024)");

    let newton = NewtonConfig {
        tolerance: newton_tol,
        max_iterations: 25,
    };
    print!("tr    :");
    for &dt in &sweep {
        let (params, ode) = chain(n, dt, &knobs);
        let run = integrate(
            &ode,
            &Method::Tr { newton },
            &params.quiescent_state(false),
            &SimulationConfig::new(0.0, 40.0, 0.01),
        )
        .unwrap();
        print!(" {:>9}", run.report.counters.transistor_evals);
    }
    println!("   (reference:   2353600 2353600 2353600 2075200 1881600)");

    print!("sftr  :");
    for &dt in &sweep {
        let (params, ode) = chain(n, dt, &knobs);
        let run = integrate(
            &ode,
            &Method::SfTr { newton },
            &params.quiescent_state(false),
            &SimulationConfig::new(0.0, 40.0, 0.01),
        )
        .unwrap();
        print!(" {:>9}", run.report.counters.transistor_evals);
    }
    println!("   (reference:   1736618  784214 486788 357118 307582)");

    print!("sfprk4:");
    for &dt in &sweep {
        let (params, ode) = chain(n, dt, &knobs);
        let p = ((2.0 + dt) / 0.01).round() as usize;
        let run = integrate(
            &ode,
            &Method::SfpRk {
                tableau: ButcherTableau::classic_rk4(),
                period_steps: p,
            },
            &params.quiescent_state(false),
            &SimulationConfig::new(0.0, 40.0, 0.01),
        )
        .unwrap();
        print!(" {:>9}", run.report.counters.transistor_evals);
    }
    println!("   (reference:    422328  700936  999672 1360800 1760800)");
}
