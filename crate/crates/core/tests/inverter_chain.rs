//! Behavioral tests of the inverter-chain benchmark model under the
//! integration engine.

mod common;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use sfode::circuits::{
    build_inverter_chain, dc_operating_point, reference_newton, InverterChainParams,
};
use sfode::experiment::activity_csv;
use sfode::pwl::PwlSource;
use sfode::tdode::TdOde;
use sfode::{integrate, ButcherTableau, Method, NewtonConfig, SimulationConfig};

fn rk4() -> Method {
    Method::Rk {
        tableau: ButcherTableau::classic_rk4(),
    }
}

fn sfrk4() -> Method {
    Method::SfRk {
        tableau: ButcherTableau::classic_rk4(),
    }
}

/// Chain with a constant logic-level input instead of a pulse train.
fn constant_input_chain(n: usize, level: f64) -> (InverterChainParams, TdOde) {
    let mut params = InverterChainParams::reference(n, 0.0, 0);
    params.input = PwlSource::new(vec![(0.0, level)]).unwrap();
    let ode = build_inverter_chain(&params).unwrap();
    (params, ode)
}

#[test]
fn dc_point_holds_under_rk4() {
    let (params, ode) = constant_input_chain(12, 0.0);
    let guess: Vec<f64> = params
        .quiescent_state(false)
        .iter()
        .map(|v| (v - 0.3).clamp(0.2, 4.8))
        .collect();
    let newton = NewtonConfig {
        tolerance: 1e-12,
        max_iterations: 60,
    };
    let dc = dc_operating_point(&ode, 0.0, &guess, &newton).unwrap();
    let mask: Vec<usize> = (0..12).collect();
    let mut f = vec![0.0; 12];
    ode.eval_internal(&[0.0, 5.0, 0.0], &dc, &mut f, &mask);
    assert!(f.iter().all(|v| v.abs() <= 1e-10));

    let cfg = SimulationConfig::new(0.0, 1.0, 0.01);
    let run = integrate(&ode, &rk4(), &dc, &cfg).unwrap();
    for (j, (a, b)) in dc.iter().zip(&run.final_state[3..]).enumerate() {
        assert!(
            (a - b).abs() <= 1e-9,
            "node {j} drifted from its operating point: {a} -> {b}"
        );
    }
}

#[test]
fn steady_high_input_settles_alternating_levels() {
    let (params, ode) = constant_input_chain(10, 5.0);
    // start everything mid-rail and let the chain resolve
    let x0 = vec![2.5; 10];
    let cfg = SimulationConfig::new(0.0, 20.0, 0.01);
    let run = integrate(&ode, &rk4(), &x0, &cfg).unwrap();
    let band = 0.1 * params.supply_voltage;
    for (j, v) in run.final_state[3..].iter().enumerate() {
        let expect_low = j % 2 == 0; // input high: first output low
        if expect_low {
            assert!(*v <= band, "node {j} should sit near logic low, got {v}");
        } else {
            assert!(
                *v >= params.supply_voltage - band,
                "node {j} should sit near logic high, got {v}"
            );
        }
    }
}

#[test]
fn pulse_front_crosses_nodes_in_order() {
    let params = InverterChainParams::reference(40, 30.0, 0);
    let ode = build_inverter_chain(&params).unwrap();
    let x0 = params.quiescent_state(false);
    let cfg = SimulationConfig::new(0.0, 12.0, 0.01);
    let run = integrate(&ode, &rk4(), &x0, &cfg).unwrap();
    let half = params.supply_voltage / 2.0;
    let mut crossings = vec![f64::NAN; 40];
    for (i, state) in run.states.iter().enumerate() {
        for j in 0..40 {
            let v = state[3 + j];
            let away = (v - x0[j]).abs() > half;
            if crossings[j].is_nan() && away {
                crossings[j] = run.times[i];
            }
        }
    }
    let reached: Vec<usize> = (0..40).filter(|&j| !crossings[j].is_nan()).collect();
    assert!(
        reached.len() > 20,
        "front travelled too little: {reached:?}"
    );
    for w in reached.windows(2) {
        assert!(
            crossings[w[1]] > crossings[w[0]],
            "node {} crossed before node {}",
            w[1],
            w[0]
        );
    }
}

#[test]
fn active_front_is_a_contiguous_window() {
    // the travelling front keeps the active set inside one index
    // window; width frozen from the reference run
    const MAX_WIDTH: usize = 30;
    let params = InverterChainParams::reference(100, 10.0, 0);
    let ode = build_inverter_chain(&params).unwrap();
    let x0 = params.quiescent_state(false);
    let mut cfg = SimulationConfig::new(0.0, 5.0, 0.01);
    cfg.record_activity = true;
    let run = integrate(&ode, &sfrk4(), &x0, &cfg).unwrap();
    let trace = run.activity.as_ref().unwrap();
    for snapshot_t in [1.0, 2.0, 3.0, 4.0] {
        let row = trace
            .times
            .iter()
            .position(|t| (t - snapshot_t).abs() < 1e-9)
            .unwrap();
        let active: Vec<usize> = (0..100).filter(|j| trace.codes[row][3 + j] == 0).collect();
        if active.is_empty() {
            continue;
        }
        // momentary single-node gaps occur inside the front (a node
        // can pause at a rail while its successor still slews), so the
        // regression pins the enclosing window, not gap-freeness
        let width = active.last().unwrap() - active.first().unwrap() + 1;
        assert!(
            width <= MAX_WIDTH,
            "active window at t = {snapshot_t} is {width} wide: {active:?}"
        );
    }
    // the front moved between the snapshots
    let first_active = |t: f64| -> Option<usize> {
        let row = trace.times.iter().position(|x| (x - t).abs() < 1e-9)?;
        (0..100).find(|j| trace.codes[row][3 + j] == 0)
    };
    let (a2, a4) = (first_active(2.0), first_active(4.0));
    if let (Some(a2), Some(a4)) = (a2, a4) {
        assert!(a4 > a2, "front did not advance: {a2} vs {a4}");
    }
}

#[test]
fn quiescent_run_reports_all_latent_after_first_step() {
    let (params, ode) = constant_input_chain(6, 0.0);
    let x0 = params.quiescent_state(false);
    let mut cfg = SimulationConfig::new(0.0, 0.5, 0.01);
    cfg.record_activity = true;
    let run = integrate(&ode, &sfrk4(), &x0, &cfg).unwrap();
    let trace = run.activity.as_ref().unwrap();
    // first step classifies everything active, all later steps latent
    assert!(trace.codes[0].iter().all(|&c| c == 0));
    for (i, row) in trace.codes.iter().enumerate().skip(1) {
        assert!(row.iter().all(|&c| c == 2), "step {i}: {row:?}");
    }
    let csv = activity_csv(&run, false, 1).unwrap();
    assert!(csv.starts_with("# mode=latency\n"));
    let second_row = csv.lines().nth(3).unwrap();
    assert!(second_row.ends_with(",2,2,2,2,2,2,2,2,2"));
    // decimation keeps every k-th row
    let thinned = activity_csv(&run, false, 10).unwrap();
    assert_eq!(thinned.lines().count(), 2 + 5);
}

#[test]
fn periodic_mode_trace_notes_its_mode() {
    let (params, ode) = constant_input_chain(4, 0.0);
    let x0 = params.quiescent_state(false);
    let mut cfg = SimulationConfig::new(0.0, 0.2, 0.01);
    cfg.record_activity = true;
    let run = integrate(
        &ode,
        &Method::SfpRk {
            tableau: ButcherTableau::classic_rk4(),
            period_steps: 5,
        },
        &x0,
        &cfg,
    )
    .unwrap();
    let csv = activity_csv(&run, true, 1).unwrap();
    assert!(csv.starts_with("# mode=periodicity\n"));
    assert!(csv.lines().nth(1).unwrap().contains(",o_1"));
    // constant chain: periodic everywhere once the buffer basis exists
    let last = csv.lines().last().unwrap();
    let fields: Vec<&str> = last.split(',').collect();
    assert!(fields[1..8].iter().all(|c| *c == "2"), "{last}");
}

#[test]
fn fully_latent_chain_never_builds_a_newton_system() {
    let (params, ode) = constant_input_chain(8, 0.0);
    let x0 = params.quiescent_state(false);
    let cfg = SimulationConfig::new(0.0, 1.0, 0.01);
    let run = integrate(
        &ode,
        &Method::SfTr {
            newton: reference_newton(),
        },
        &x0,
        &cfg,
    )
    .unwrap();
    // the first step solves (trivially, residual zero) on the full
    // mask; every later step has an empty active block
    assert_eq!(run.report.counters.lu_factorizations, 0);
    assert_eq!(run.report.counters.newton_iterations, 0);
    assert_eq!(run.report.counters.f_internal_component_evals, 16);
    for (a, b) in x0.iter().zip(&run.final_state[3..]) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn tr_newton_residuals_mostly_decrease() {
    // warn-level: Newton is only locally monotone, so occasional
    // non-shrinking iterations are reported, not forbidden
    let params = InverterChainParams::reference(20, 5.0, 0);
    let ode = build_inverter_chain(&params).unwrap();
    let x0 = params.quiescent_state(false);
    let cfg = SimulationConfig::new(0.0, 8.0, 0.01);
    let run = integrate(
        &ode,
        &Method::Tr {
            newton: reference_newton(),
        },
        &x0,
        &cfg,
    )
    .unwrap();
    let increases = run.report.counters.newton_residual_increases;
    if increases > 0 {
        println!(
            "warning: {increases} of {} Newton iterations did not shrink the residual",
            run.report.counters.newton_iterations
        );
    }
    assert!(
        increases * 10 <= run.report.counters.newton_iterations.max(10),
        "residuals grew in {increases} of {} iterations",
        run.report.counters.newton_iterations
    );
}

#[test]
fn complexity_knob_never_changes_trajectories() {
    for method in [
        rk4(),
        sfrk4(),
        Method::Tr {
            newton: reference_newton(),
        },
        Method::SfTr {
            newton: reference_newton(),
        },
    ] {
        let base = InverterChainParams::reference(6, 2.0, 0);
        let padded = InverterChainParams {
            complexity: 10,
            ..base.clone()
        };
        let ode_a = build_inverter_chain(&base).unwrap();
        let ode_b = build_inverter_chain(&padded).unwrap();
        let x0 = base.quiescent_state(false);
        let cfg = SimulationConfig::new(0.0, 3.0, 0.01);
        let a = integrate(&ode_a, &method, &x0, &cfg).unwrap();
        let b = integrate(&ode_b, &method, &x0, &cfg).unwrap();
        assert_eq!(
            a.report.counters.transistor_evals,
            b.report.counters.transistor_evals
        );
        for (sa, sb) in a.states.iter().zip(&b.states) {
            for (va, vb) in sa.iter().zip(sb) {
                assert_eq!(va.to_bits(), vb.to_bits(), "method {}", method.name());
            }
        }
    }
}

#[test]
fn skipped_components_receive_no_model_evaluations() {
    // per-component instrumentation: a chain whose tail goes latent
    // must stop paying for tail evaluations entirely
    let params = InverterChainParams::reference(10, 20.0, 0);
    let inner = build_inverter_chain(&params).unwrap();
    let per_component: Arc<Vec<AtomicU64>> = Arc::new((0..10).map(|_| AtomicU64::new(0)).collect());
    let counts = per_component.clone();
    let inner = Arc::new(inner);
    let inner2 = inner.clone();
    let inner3 = inner.clone();
    let instrumented = TdOde::new(
        3,
        10,
        move |t, out| inner.eval_external(t, out),
        move |x_e, x_i, out, mask| {
            for &j in mask {
                counts[j].fetch_add(1, Ordering::Relaxed);
            }
            inner2.eval_internal(x_e, x_i, out, mask);
        },
        inner3.sparsity().to_vec(),
    )
    .unwrap();

    let x0 = params.quiescent_state(false);
    // the pulse starts at t = 1 and needs ~0.12 per stage; stop while
    // the front sits mid-chain
    let cfg = SimulationConfig::new(0.0, 1.5, 0.01);
    let run = integrate(&instrumented, &sfrk4(), &x0, &cfg).unwrap();
    let per: Vec<u64> = per_component
        .iter()
        .map(|c| c.load(Ordering::Relaxed))
        .collect();
    // step 0 evaluates everything once per stage
    let head = per[0];
    let tail = per[9];
    assert!(
        head > 10 * tail,
        "head {head} vs tail {tail}: no skipping visible"
    );
    assert_eq!(tail, 4, "tail should only pay the first all-active step");
    assert_eq!(
        per.iter().sum::<u64>(),
        run.report.counters.f_internal_component_evals
    );
}

#[test]
fn masked_evaluation_matches_singleton_masks() {
    let params = InverterChainParams::reference(7, 5.0, 0);
    let ode = build_inverter_chain(&params).unwrap();
    let x_e = vec![0.0, 5.0, 1.9];
    let x_i = vec![0.3, 4.4, 1.1, 2.9, 3.6, 0.2, 4.9];
    let mask: Vec<usize> = (0..7).collect();
    let mut full = vec![0.0; 7];
    ode.eval_internal(&x_e, &x_i, &mut full, &mask);
    for j in 0..7 {
        let mut single = vec![f64::NAN; 7];
        ode.eval_internal(&x_e, &x_i, &mut single, &[j]);
        assert_eq!(single[j].to_bits(), full[j].to_bits(), "component {j}");
    }
}

#[test]
fn untracked_variables_do_not_affect_components() {
    // perturbing a variable outside a component's input set must leave
    // that component's value untouched
    use rand::{Rng, SeedableRng};
    let params = InverterChainParams::reference(9, 5.0, 0);
    let ode = build_inverter_chain(&params).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let mask: Vec<usize> = (0..9).collect();
    for _ in 0..50 {
        let x_e = vec![0.0, 5.0, rng.gen_range(0.0..5.0)];
        let x_i: Vec<f64> = (0..9).map(|_| rng.gen_range(0.0..5.0)).collect();
        let mut base = vec![0.0; 9];
        ode.eval_internal(&x_e, &x_i, &mut base, &mask);
        let comp = rng.gen_range(0..9);
        let inputs = &ode.sparsity()[comp];
        // pick an internal variable the component does not read
        let candidates: Vec<usize> = (0..9).filter(|j| !inputs.contains(&(3 + j))).collect();
        if candidates.is_empty() {
            continue;
        }
        let j = candidates[rng.gen_range(0..candidates.len())];
        let mut bumped = x_i.clone();
        bumped[j] += rng.gen_range(0.1..1.0);
        let mut out = vec![f64::NAN; 9];
        ode.eval_internal(&x_e, &bumped, &mut out, &[comp]);
        assert_eq!(
            out[comp].to_bits(),
            base[comp].to_bits(),
            "component {comp} reacted to untracked variable {j}"
        );
    }
}
