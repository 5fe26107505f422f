mod common;

use accelnet_core::engine::{
    check_lyapunov_step, eval_dual, omega, rate_constant, run_alg1, run_alg2, run_unaccelerated,
    RunOptions, ThetaSequence,
};
use accelnet_core::oracle::{solve_active_set, solve_kkt, OracleMethod};
use accelnet_core::stepsize::build_stepsizes;
use accelnet_core::NetworkModel;
use common::{instance_a, small};

#[test]
fn instance_a_converges_fast() {
    let p = instance_a();
    let steps = build_stepsizes(&p, 1.0).unwrap();
    let trace = run_alg1(&p, &steps, &RunOptions::new(50, 1e-8)).unwrap();
    assert!(trace.converged);
    assert!(trace.iterations() <= 50);
    assert!((trace.multipliers[0] + 1.0).abs() <= 1e-8);
    assert!(1.0 - trace.rows.last().unwrap().dual_value.unwrap() <= 1e-12);
}

#[test]
fn engine_agrees_with_oracle() {
    for seed in 0..20 {
        let p = small(seed);
        let oracle = solve_kkt(&p).unwrap();
        let cost = p.primal_cost(&oracle.primal).unwrap();
        assert!((cost - oracle.value).abs() <= 1e-8);
        let at_star = eval_dual(&p, &oracle.multipliers).unwrap();
        assert!((at_star.value - oracle.value).abs() <= 1e-8 * (1.0 + oracle.value.abs()));
        if oracle.method == OracleMethod::Kkt {
            assert!(at_star.gradient.amax() <= 1e-8, "seed {seed}");
        }
        let steps = build_stepsizes(&p, 1.0).unwrap();
        let trace = run_alg1(&p, &steps, &RunOptions::new(20_000, 1e-9)).unwrap();
        assert!(trace.converged, "seed {seed}");
        let q = trace.rows.last().unwrap().dual_value.unwrap();
        assert!((q - oracle.value).abs() <= 1e-6, "seed {seed}: {q} vs {}", oracle.value);
    }
}

#[test]
fn kkt_matches_active_set_when_boxes_are_loose() {
    for seed in 0..20 {
        let p = small(seed);
        if let Ok(kkt) = solve_kkt(&p) {
            let act = solve_active_set(&p).unwrap();
            assert!((kkt.primal - act.primal).amax() < 1e-8);
            assert!((kkt.value - act.value).abs() < 1e-8);
        }
    }
}

#[test]
fn lyapunov_inequality_along_alg1() {
    for seed in 0..10 {
        let p = small(seed);
        let reference = solve_active_set(&p).unwrap().reference();
        let steps = build_stepsizes(&p, 1.0).unwrap();
        let opts = RunOptions::new(200, 0.0).keep_multipliers();
        let trace = run_alg1(&p, &steps, &opts).unwrap();
        for k in 1..trace.iterations() {
            assert!(check_lyapunov_step(&p, &trace, k, &reference).unwrap(), "seed {seed}, k {k}");
        }
    }
}

#[test]
fn oversized_step_breaks_lyapunov_inequality() {
    let mut violated = false;
    for seed in 0..10 {
        let p = small(seed);
        let reference = solve_active_set(&p).unwrap().reference();
        let steps = build_stepsizes(&p, 1.0).unwrap().scaled(10.0);
        let opts = RunOptions::new(50, 0.0).keep_multipliers();
        let trace = run_alg1(&p, &steps, &opts).unwrap();
        violated |= (1..trace.iterations())
            .any(|k| !check_lyapunov_step(&p, &trace, k, &reference).unwrap());
    }
    assert!(violated);
}

#[test]
fn deterministic_rate_bound() {
    for seed in 0..10 {
        let p = small(seed);
        let reference = solve_active_set(&p).unwrap().reference();
        let steps = build_stepsizes(&p, 1.0).unwrap();
        let opts = RunOptions::new(1000, 0.0)
            .keep_multipliers()
            .with_reference(reference.clone());
        let trace = run_alg1(&p, &steps, &opts).unwrap();
        let c = rate_constant(&p, &trace, &reference).unwrap();
        for row in &trace.rows {
            let bound = c / ((row.k + 1) as f64).powi(2);
            let gap = row.gap.unwrap();
            assert!(gap <= bound + 1e-9 * (1.0 + reference.value.abs()), "seed {seed}, k {}", row.k);
        }
    }
}

#[test]
fn reliable_network_reduces_to_alg1() {
    for seed in 0..5 {
        let p = small(seed);
        let steps = build_stepsizes(&p, 1.0).unwrap();
        let net = NetworkModel::build(&p, 0.0, 99).unwrap();
        let opts = RunOptions::new(500, 0.0).keep_multipliers().without_dual();
        let a = run_alg1(&p, &steps, &opts).unwrap();
        let b = run_alg2(&p, &steps, &net, &opts).unwrap();
        assert_eq!(a.iterations(), b.iterations());
        for k in 1..=a.iterations() {
            let d = (a.multipliers_at(k).unwrap() - b.multipliers_at(k).unwrap()).amax();
            assert!(d <= 1e-12, "seed {seed}, k {k}: {d:e}");
        }
    }
}

#[test]
fn held_agents_keep_omega() {
    for seed in 0..5 {
        let p = small(seed);
        let reference = solve_active_set(&p).unwrap().reference();
        let steps = build_stepsizes(&p, 1.0).unwrap();
        let net = NetworkModel::build(&p, 0.5, seed).unwrap();
        let opts = RunOptions::new(100, 0.0).keep_multipliers().without_dual();
        let trace = run_alg2(&p, &steps, &net, &opts).unwrap();
        let mut held = 0;
        for k in 1..trace.iterations() {
            let before = omega(&p, &trace, k, &reference).unwrap();
            let after = omega(&p, &trace, k + 1, &reference).unwrap();
            for (i, &up) in trace.row(k + 1).unwrap().updated.iter().enumerate() {
                if !up && !before[i].is_empty() {
                    held += 1;
                    let d = (&after[i] - &before[i]).amax();
                    assert!(d <= 1e-9 * (1.0 + before[i].amax()), "seed {seed}, k {k}, agent {i}");
                }
            }
        }
        assert!(held > 0);
    }
}

#[test]
fn stopping_implies_small_true_residual() {
    for seed in 0..10 {
        let p = small(seed);
        let steps = build_stepsizes(&p, 1.0).unwrap();
        let trace = run_alg1(&p, &steps, &RunOptions::new(20_000, 1e-6).without_dual()).unwrap();
        assert!(trace.converged);
        let r = p.constraint_residual(&trace.primal).unwrap();
        for i in 0..p.len() {
            assert!(r.rows_range(p.dual_range(i)).norm() < 1e-6);
        }
    }
}

#[test]
fn acceleration_beats_baseline() {
    for seed in 0..5 {
        let p = small(seed);
        let steps = build_stepsizes(&p, 1.0).unwrap();
        let net = NetworkModel::build(&p, 0.1, seed).unwrap();
        let opts = RunOptions::new(200_000, 1e-6).without_dual();
        let fast = run_alg2(&p, &steps, &net, &opts).unwrap();
        let slow = run_unaccelerated(&p, &steps, &net, &opts).unwrap();
        assert!(fast.converged && slow.converged);
        assert!(fast.iterations() < slow.iterations(), "seed {seed}");
    }
}

#[test]
fn baseline_trackers_equal_multipliers() {
    let p = small(4);
    let steps = build_stepsizes(&p, 1.0).unwrap();
    let net = NetworkModel::build(&p, 0.0, 1).unwrap();
    let trace = run_unaccelerated(&p, &steps, &net, &RunOptions::new(30, 0.0)).unwrap();
    assert!(trace.rows.iter().all(|r| r.theta == 1.0));
}

#[test]
fn theta_lower_bound_to_a_million() {
    let mut prev = 1.0;
    for (idx, theta) in ThetaSequence::default().take(1_000_000).enumerate() {
        let k = idx + 1;
        assert!(theta >= (k as f64 + 1.0) / 2.0);
        if k > 1 {
            let rel = (theta * theta - theta - prev * prev).abs() / (theta * theta);
            assert!(rel <= 1e-9);
        }
        prev = theta;
    }
}
