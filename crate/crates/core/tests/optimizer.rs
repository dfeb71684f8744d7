mod support;

use soskit_core::optimizer::{l2_rot6d, optimize, sos_accuracy, Mode, OptimizationProblem, OptimizerSettings};
use soskit_core::script::SosScript;
use soskit_core::synth::{self, perturbation_task};
use soskit_core::{extract, Error, Selection};

#[test]
fn direct_gradients_match_finite_differences() {
    for seed in 0..25 {
        let c = support::gradient_check(seed, false);
        assert!(c.rel <= 1e-4, "seed {seed}: {c:?}");
    }
}

#[test]
fn periodic_gradients_match_finite_differences() {
    for seed in 0..25 {
        let c = support::gradient_check(1000 + seed, true);
        assert!(c.rel <= 1e-4, "seed {seed}: {c:?}");
    }
}

fn problem(initial: soskit_core::Motion, script: SosScript, settings: OptimizerSettings) -> OptimizationProblem {
    OptimizationProblem { initial, script, settings }
}

#[test]
fn zero_iterations_is_identity() {
    let task = perturbation_task(1);
    for mode in [Mode::Direct, Mode::Periodic] {
        let settings = OptimizerSettings { mode, max_iters: 0, ..Default::default() };
        let r = optimize(&problem(task.perturbed.clone(), task.script.clone(), settings)).unwrap();
        assert_eq!(r.motion, task.perturbed);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.loss_trace.len(), 1);
        assert_eq!(r.l2_rot6d, 0.0);
    }
}

#[test]
fn frame_range_mismatch_is_rejected() {
    let task = perturbation_task(2);
    let short = SosScript::new(synth::FPS, 10, None, vec![]).unwrap();
    let err = optimize(&problem(task.perturbed, short, OptimizerSettings::default())).unwrap_err();
    assert!(matches!(err, Error::Shape(_)), "{err}");
}

#[test]
fn empty_script_scores_one() {
    let m = synth::dance_motion(20, 1);
    let empty = SosScript::new(synth::FPS, 20, None, vec![]).unwrap();
    assert_eq!(sos_accuracy(&m, &empty).unwrap(), 1.0);
}

#[test]
fn optimization_is_deterministic() {
    let task = perturbation_task(3);
    let p = problem(task.perturbed, task.script, OptimizerSettings { max_iters: 20, ..Default::default() });
    let a = optimize(&p).unwrap();
    let b = optimize(&p).unwrap();
    assert_eq!(a.motion, b.motion);
    assert_eq!(a.loss_trace, b.loss_trace);
}

#[test]
fn loss_trace_never_increases_under_backtracking() {
    let task = perturbation_task(4);
    let r = optimize(&problem(task.perturbed, task.script, OptimizerSettings::default())).unwrap();
    assert!(r.loss_trace.windows(2).all(|w| w[1] <= w[0]));
    assert!(r.loss_trace_csv().starts_with("iteration,loss\n0,"));
}

#[test]
fn perturbed_scripts_are_recovered() {
    for seed in [0, 5, 9] {
        let task = perturbation_task(seed);
        for mode in [Mode::Direct, Mode::Periodic] {
            let settings = OptimizerSettings { mode, ..Default::default() };
            let r = optimize(&problem(task.perturbed.clone(), task.script.clone(), settings)).unwrap();
            assert!(r.sos_acc >= 0.95, "seed {seed} {mode:?}: {}", r.sos_acc);
            let before = l2_rot6d(&task.perturbed, &task.clean).unwrap();
            let after = l2_rot6d(&r.motion, &task.clean).unwrap();
            assert!(after < before, "seed {seed} {mode:?}: {before} -> {after}");
        }
    }
}

/// Largest second difference of any joint's 6D rotation over time.
fn max_acceleration(m: &soskit_core::Motion) -> f64 {
    let r = soskit_core::motion::to_rot6d(m);
    let mut worst: f64 = 0.0;
    for t in 1..r.len() - 1 {
        for j in 0..r[t].len() {
            let acc: f64 = (0..6).map(|k| (r[t + 1][j][k] - 2.0 * r[t][j][k] + r[t - 1][j][k]).powi(2)).sum::<f64>().sqrt();
            worst = worst.max(acc);
        }
    }
    worst
}

#[test]
fn periodic_edits_stay_smooth() {
    for seed in 0..5 {
        let task = perturbation_task(seed);
        let settings = OptimizerSettings { mode: Mode::Periodic, ..Default::default() };
        let r = optimize(&problem(task.perturbed.clone(), task.script.clone(), settings)).unwrap();
        let (before, after) = (max_acceleration(&task.perturbed), max_acceleration(&r.motion));
        assert!(after <= 3.0 * before, "seed {seed}: {before} -> {after}");
    }
}

#[test]
fn clean_motion_already_satisfies_its_script() {
    let m = synth::dance_motion(60, 8);
    let script = extract(&m, Selection::Threshold(0.5), true).unwrap().script;
    assert_eq!(sos_accuracy(&m, &script).unwrap(), 1.0);
    assert_eq!(l2_rot6d(&m, &m).unwrap(), 0.0);
}
