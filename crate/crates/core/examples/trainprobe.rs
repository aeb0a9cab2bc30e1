use safectl::design::*;
use safectl::geometry::*;
use safectl::harness::*;
use safectl::cartpole::CartPoleState;
use nalgebra::DVector;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let steps: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(50_000);
    let gamma: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0.99);
    let actor_lr: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(1e-4);
    let noise: f64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let friction: f64 = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(4.4);
    let seed: u64 = args.get(6).and_then(|s| s.parse().ok()).unwrap_or(11);

    let mut config = LabConfig::default();
    config.training.trainer.steps = steps;
    config.training.trainer.gamma = gamma;
    config.training.trainer.actor_lr = actor_lr;
    config.training.trainer.exploration_noise_std = noise;
    config.training.trainer.seed = seed;
    config.cartpole.cart_friction = friction;

    let nset = normalize_safety_set(&SafetySet::cartpole()).unwrap();
    let plant = PlantModel::cartpole_reference();
    let bound = ControlSupportBound { row: DVector::from_element(1, 1.0), limit: 16.0 };
    let out = solve_design_bounded(&plant, &nset, &config.design.to_design_config(), &[bound]).unwrap();
    let lab = Lab::new(config.clone(), out.solution.clone()).unwrap();

    let t0 = Instant::now();
    let arts = run_training(&lab, None).unwrap();
    let dt = t0.elapsed();
    let eps: Vec<f64> = arts.episodes.iter().map(|e| e.reward_sum).collect();
    let n = eps.len();
    let late = &arts.episodes[n - (n / 10).max(1)..];
    println!("[steps {steps} gamma {gamma} alr {actor_lr} noise {noise} fric {friction} seed {seed}] {dt:?}");
    println!("  episodes {n}; final-decile smoothed {:.1}; late mean len {:.0}; late violations {}/{}",
        final_decile_smoothed_mean(&eps, 20),
        late.iter().map(|e| e.steps as f64).sum::<f64>() / late.len() as f64,
        late.iter().filter(|e| e.ended_by_violation).count(), late.len());

    let policy = Policy {
        actor: arts.actor.clone(),
        action_scale: config.training.trainer.action_scale,
        f_gain: lab.design.f.clone(),
        limits: safectl::residual::ActionLimits::symmetric(16.0, 1),
        residual_enabled: true,
    };
    let summary = evaluate_policy(&lab, &policy, 50, 1500, DisturbanceMode::Off, 4242, None).unwrap();
    println!("  eval: violation-steps {} violation-episodes {} env-exit-steps {} cert-inv {:.4} mean-p {:.3}",
        summary.safety_violation_steps, summary.episodes_with_violation, summary.envelope_exit_steps,
        summary.cert_invariant_frac, summary.mean_p);

    // learned damping response on the v-axis
    let mut cache = safectl::net::MlpCache::default();
    print!("  a_drl at (0,v,0,0):");
    for v in [-2.0f64, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0] {
        let s = CartPoleState { x: 0.0, v, theta: 0.0, omega: 0.0 };
        let pa = policy.act(&s, &mut cache);
        print!(" {:.2}", pa.a_drl[0]);
    }
    println!();
    print!("  a_drl at (x,0,th,0) corners:");
    for (x, th) in [(0.5f64, 0.3f64), (-0.5, -0.3), (0.7, 0.0), (0.0, 0.5)] {
        let s = CartPoleState { x, v: 0.0, theta: th, omega: 0.0 };
        let pa = policy.act(&s, &mut cache);
        print!(" {:.2}", pa.a_drl[0]);
    }
    println!();

    let mut sweep_cfg = config.clone();
    sweep_cfg.sweep.nx = 21; sweep_cfg.sweep.ntheta = 21;
    let lab_s = Lab::new(sweep_cfg, out.solution).unwrap();
    let sweep = sweep_safe_area(&lab_s, &policy).unwrap();
    println!("  sweep 21x21: IE {} EE {} unsafe {} envelope-violations {}",
        sweep.ie_count, sweep.ee_count, sweep.unsafe_count, sweep.envelope_violations);
}
