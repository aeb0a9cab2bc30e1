//! Acceptance gate: one test per criterion, each printing a PASS/FAIL line.
//!
//! The heavy artifacts (three seed-matched desk-scale training runs) are
//! produced once and shared; they train in parallel threads on first use.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use safectl::cartpole::{self, InitRegion};
use safectl::design::{
    compute_closed_loop, solve_design, solve_design_bounded, verify_lmi, ControlSupportBound,
    DesignConfig, DesignSolution, PlantModel,
};
use safectl::disturbance::{self, BetaUuConfig};
use safectl::geometry::{
    check_envelope_containment, normalize_safety_set, SafetyEnvelope, SafetySet,
};
use safectl::harness::{
    classify_sample, evaluate_policy, final_decile_smoothed_mean, run_training, sweep_safe_area,
    DisturbanceMode, Lab, LabConfig, Policy, RewardMode, SampleVerdict, TrainingArtifacts,
};
use safectl::net::{Activation, Mlp, MlpCache, Network};
use safectl::phyn::{
    augment, build_edit, even_monomial_basis, full_basis_len, kn_value_network, KnowledgeEntry,
    KnowledgeSet, PhynCache,
};
use safectl::residual::ActionLimits;
use safectl::rngutil::sub_rng;

fn pass_line(name: &str, ok: bool, detail: &str) {
    println!("{}: {name} — {detail}", if ok { "PASS" } else { "FAIL" });
}

// ---------------------------------------------------------------------------
// paper-anchored reference matrices
// ---------------------------------------------------------------------------

fn reference_q() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        4,
        4,
        &[
            0.66951866, -0.69181711, -0.27609583, 0.55776279, //
            -0.69181711, 9.86247186, 0.1240829, -12.4011146, //
            -0.27609583, 0.1240829, 0.66034399, -2.76789607, //
            0.55776279, -12.4011146, -2.76789607, 32.32280039,
        ],
    )
}

fn reference_r() -> DMatrix<f64> {
    DMatrix::from_row_slice(1, 4, &[-6.40770185, -18.97723676, 6.10235911, 31.03838284])
}

fn reference_a_bar() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        4,
        4,
        &[
            1.0, 0.03333333, 0.0, 0.0, //
            0.27592037, 1.22590363, 1.2843559, 0.2288196, //
            0.0, 0.0, 1.0, 0.03333333, //
            -0.64668827, -0.52946156, -2.24458365, 0.46370415,
        ],
    )
}

// ---------------------------------------------------------------------------
// shared desk-scale artifacts
// ---------------------------------------------------------------------------

struct TrainedWorld {
    lab: Lab,
    phy: TrainingArtifacts,
    ablation: TrainingArtifacts,
    clf: TrainingArtifacts,
    train_wall: Duration,
}

fn desk_scale_steps() -> usize {
    200_000
}

fn base_config() -> LabConfig {
    let mut config = LabConfig::default();
    config.training.trainer.steps = desk_scale_steps();
    config.training.trainer.seed = 11;
    config
}

fn solve_reference_design(config: &LabConfig) -> DesignSolution {
    let plant = PlantModel::cartpole_reference();
    let nset = normalize_safety_set(&SafetySet::cartpole()).unwrap();
    let bound = ControlSupportBound {
        row: DVector::from_element(1, 1.0),
        limit: config.design.control_support_limit.unwrap_or(16.0),
    };
    solve_design_bounded(&plant, &nset, &config.design.to_design_config(), &[bound])
        .expect("reference design solves")
        .solution
}

fn world() -> &'static TrainedWorld {
    static WORLD: OnceLock<TrainedWorld> = OnceLock::new();
    WORLD.get_or_init(|| {
        let config = base_config();
        let design = solve_reference_design(&config);

        let mut phy_cfg = config.clone();
        phy_cfg.training.reward_mode = RewardMode::Safety;
        phy_cfg.training.residual_enabled = true;

        let mut ablation_cfg = config.clone();
        ablation_cfg.training.reward_mode = RewardMode::Safety;
        ablation_cfg.training.residual_enabled = false;

        let mut clf_cfg = config.clone();
        clf_cfg.training.reward_mode = RewardMode::Clf;
        clf_cfg.training.residual_enabled = true;

        let t0 = Instant::now();
        let mut handles = Vec::new();
        for cfg in [phy_cfg.clone(), ablation_cfg.clone(), clf_cfg.clone()] {
            let design = design.clone();
            handles.push(std::thread::spawn(move || {
                let lab = Lab::new(cfg, design).unwrap();
                run_training(&lab, None).unwrap()
            }));
        }
        let mut results: Vec<TrainingArtifacts> =
            handles.into_iter().map(|h| h.join().unwrap()).collect();
        let clf = results.pop().unwrap();
        let ablation = results.pop().unwrap();
        let phy = results.pop().unwrap();
        let train_wall = t0.elapsed();

        let lab = Lab::new(phy_cfg, design).unwrap();
        TrainedWorld {
            lab,
            phy,
            ablation,
            clf,
            train_wall,
        }
    })
}

fn policy_from(lab: &Lab, arts: &TrainingArtifacts, residual: bool) -> Policy {
    Policy {
        actor: arts.actor.clone(),
        action_scale: lab.config.training.trainer.action_scale,
        f_gain: lab.design.f.clone(),
        limits: ActionLimits::symmetric(lab.config.cartpole.force_limit, 1),
        residual_enabled: residual,
    }
}

// ---------------------------------------------------------------------------
// criteria
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_envelope_geometry() {
    let set = SafetySet::cartpole();
    let t0 = Instant::now();
    let nset = normalize_safety_set(&set).unwrap();
    let elapsed = t0.elapsed();

    assert_eq!(nset.d, DVector::from_row_slice(&[-1.0, -1.0]));
    let expected = DMatrix::from_row_slice(
        2,
        4,
        &[10.0 / 9.0, 0.0, 0.0, 0.0, 0.0, 0.0, 5.0 / 4.0, 0.0],
    );
    assert_eq!(nset.d_hi, expected, "upper rows must match exactly");
    assert_eq!(nset.d_lo, expected, "lower rows must match exactly");
    assert!(
        elapsed < Duration::from_millis(1),
        "normalization took {elapsed:?}"
    );
    pass_line(
        "envelope geometry",
        true,
        &format!("exact rational rows, d = [-1,-1], {elapsed:?}"),
    );
}

#[test]
fn criterion_02_paper_solution_verification() {
    let t0 = Instant::now();
    let plant = PlantModel::cartpole_reference();
    let sol = DesignSolution::from_qr(&plant, reference_q(), reference_r()).unwrap();

    let report = verify_lmi(&sol, &plant, 0.98, 0.0);
    assert!(
        report.reduced_min_eig > 0.0,
        "published solution must satisfy the contraction condition: {report:?}"
    );
    assert!(report.block_min_eig > 0.0);

    let a_bar = compute_closed_loop(&plant, &sol.f).unwrap();
    let reference = reference_a_bar();
    let worst = (&a_bar - &reference).amax();
    assert!(
        worst < 1e-2,
        "closed loop differs from the published matrix by {worst}"
    );

    let nset = normalize_safety_set(&SafetySet::cartpole()).unwrap();
    let envelope = SafetyEnvelope::new(sol.p.clone()).unwrap();
    let containment = check_envelope_containment(&nset, &envelope).unwrap();
    let row2 = &containment.rows[1];
    assert!(
        (row2.value_hi - 1.0318).abs() < 2e-3,
        "row-2 value {} should sit near the documented 1.0318",
        row2.value_hi
    );
    assert!(!row2.pass, "the marginal violation must be flagged");
    assert!(containment.rows[0].pass);
    assert!(containment.rows[0].value_hi < 0.83);
    let elapsed = t0.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    pass_line(
        "paper-solution verification",
        true,
        &format!(
            "reduced min eig {:.3e}, closed-loop max dev {:.2e}, row-2 flagged at {:.4}, {elapsed:?}",
            report.reduced_min_eig, worst, row2.value_hi
        ),
    );
}

#[test]
fn criterion_03_own_design_solve() {
    let t0 = Instant::now();
    let plant = PlantModel::cartpole_reference();
    let nset = normalize_safety_set(&SafetySet::cartpole()).unwrap();
    let cfg = DesignConfig::default();
    let out = solve_design(&plant, &nset, &cfg).unwrap();
    let sol = &out.solution;
    let elapsed = t0.elapsed();

    let report = verify_lmi(sol, &plant, cfg.alpha, 1e-7);
    assert!(report.pass, "verification must pass with margin > 1e-7: {report:?}");

    let envelope = SafetyEnvelope::new(sol.p.clone()).unwrap();
    let containment = check_envelope_containment(&nset, &envelope).unwrap();
    for (i, row) in containment.rows.iter().enumerate() {
        assert!(
            row.value_hi <= 1.0 + 1e-9 && row.value_lo <= 1.0 + 1e-9,
            "row {i} containment violated: {row:?}"
        );
    }
    assert!(containment.contained);

    // The published (Q, R) is a feasibility witness: after the containment
    // fix it certifies that log det Q >= ln det(Q_paper) - 4 ln(1.033) is
    // attainable, so the solve may not fall more than 5% below the published
    // value. (The witness bounds the optimum from below only; the actual
    // optimum of this problem lies well above it.)
    let paper_log_det = reference_q()
        .cholesky()
        .map(|c| 2.0 * (0..4).map(|i| c.l()[(i, i)].ln()).sum::<f64>())
        .unwrap();
    let ours = sol.log_det_q();
    assert!(
        ours >= paper_log_det * 0.95,
        "log det {ours} fell below 95% of the published {paper_log_det}"
    );
    assert!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    pass_line(
        "own design solve",
        true,
        &format!(
            "log det {ours:.4} vs published {paper_log_det:.4} (ratio {:.2}), all rows <= 1+1e-9, margin {:.2e}, {elapsed:?}",
            ours / paper_log_det,
            report.block_min_eig
        ),
    );
}

#[test]
fn criterion_04_monomial_augmentation() {
    let t0 = Instant::now();
    for n in 1..=5usize {
        for r in 1..=4usize {
            let y: Vec<f64> = (0..n).map(|i| 0.3 + 0.2 * i as f64).collect();
            let m = augment(&y, r).unwrap();
            assert_eq!(m.len(), full_basis_len(n, r), "length mismatch at n={n} r={r}");

            // exhaustive exponent enumeration oracle
            let mut values: Vec<f64> = Vec::new();
            let mut expo = vec![0usize; n];
            fn enumerate(
                expo: &mut Vec<usize>,
                pos: usize,
                left: usize,
                y: &[f64],
                out: &mut Vec<f64>,
            ) {
                if pos == expo.len() {
                    let v: f64 = expo
                        .iter()
                        .enumerate()
                        .map(|(i, &e)| y[i].powi(e as i32))
                        .product();
                    out.push(v);
                    return;
                }
                for e in 0..=left {
                    expo[pos] = e;
                    enumerate(expo, pos + 1, left - e, y, out);
                    expo[pos] = 0;
                }
            }
            enumerate(&mut expo, 0, r, &y, &mut values);
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut ours = m.clone();
            ours.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (a, b) in ours.iter().zip(values.iter()) {
                assert!((a - b).abs() < 1e-12 * b.abs().max(1.0));
            }
        }
    }

    // worked three-input order-2 example, exact order
    let m = augment(&[2.0, 3.0, 5.0], 2).unwrap();
    assert_eq!(
        m,
        vec![1.0, 2.0, 3.0, 5.0, 4.0, 6.0, 10.0, 9.0, 15.0, 25.0]
    );
    let elapsed = t0.elapsed();
    assert!(elapsed < Duration::from_secs(1));
    pass_line(
        "monomial augmentation",
        true,
        &format!("all n<=5, r<=4 complete and ordered, {elapsed:?}"),
    );
}

#[test]
fn criterion_05_knowledge_compliance() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5151);
    let mut worst: f64 = 0.0;
    for trial in 0..20 {
        let input_dim = rng.gen_range(2..5usize);
        let order = rng.gen_range(1..3usize);
        let width1 = rng.gen_range(2..5usize);
        let output_dim = rng.gen_range(1..=width1.min(2));
        let blen = full_basis_len(input_dim, order);
        let mut entries = Vec::new();
        let n_known = rng.gen_range(1..=blen.min(4));
        let mut used = std::collections::HashSet::new();
        for _ in 0..n_known {
            let row = rng.gen_range(0..output_dim);
            let col = rng.gen_range(0..blen);
            if used.insert((row, col)) {
                entries.push(KnowledgeEntry {
                    row,
                    col,
                    value: rng.gen_range(-2.0..2.0),
                });
            }
        }
        let knowledge = KnowledgeSet::new(entries).unwrap();
        let acts = vec![Activation::Tanh, Activation::Tanh];
        let net = build_edit(
            &knowledge,
            input_dim,
            &[width1, output_dim],
            &[order, 2],
            output_dim,
            &acts,
        )
        .unwrap();
        let report = net.compliance_check(&knowledge, 1000 + trial);
        worst = worst.max(report.max_deviation);
        assert!(
            report.pass,
            "trial {trial}: deviation {} exceeds 1e-7",
            report.max_deviation
        );

        // mutation test: un-mask one known entry and expect detection
        let mut corrupted = net.clone();
        let e = knowledge.entries[0];
        corrupted.layers[0].mask[(e.row, e.col)] = 1.0;
        let bad = corrupted.compliance_check(&knowledge, 2000 + trial);
        assert!(
            !bad.pass,
            "trial {trial}: corrupted mask passed the compliance check"
        );
    }
    let elapsed = t0.elapsed();
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    pass_line(
        "knowledge compliance",
        true,
        &format!("20 knowledge sets, worst deviation {worst:.2e}, mutation detected, {elapsed:?}"),
    );
}

#[test]
fn criterion_06_parameter_counts() {
    // table reproduction: totals 359 / 550 / 971
    let t0 = Instant::now();
    let mut details = String::new();
    for (n, expected) in [(2usize, 359usize), (3, 550), (5, 971)] {
        let net = kn_value_network(n).unwrap();
        let count = net.count_parameters();
        assert_eq!(count.total, expected, "width-{n} network");
        details.push_str(&format!("KN-{n}={} ", count.total));
    }
    assert_eq!(even_monomial_basis(18, 2).unwrap().len(), 171);
    let elapsed = t0.elapsed();
    assert!(elapsed < Duration::from_millis(1), "took {elapsed:?}");
    pass_line(
        "parameter counts",
        true,
        &format!("{details}exact, {elapsed:?}"),
    );
}

#[test]
fn criterion_07_gradient_suite() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(777);
    let mut checked = 0usize;
    let tol = 1e-5;

    let rel_ok = |fd: f64, got: f64| -> bool {
        (fd - got).abs() <= tol * fd.abs().max(got.abs()).max(1e-4)
    };

    // dense networks with mixed activations
    for _ in 0..40 {
        let din = rng.gen_range(1..5usize);
        let dh = rng.gen_range(1..8usize);
        let dout = rng.gen_range(1..3usize);
        let acts = [Activation::Relu, Activation::Tanh, Activation::Linear];
        let a1 = acts[rng.gen_range(0..3)];
        let a2 = acts[rng.gen_range(0..3)];
        let net = Mlp::new(vec![din, dh, dout], vec![a1, a2], &mut rng, 0.5);
        let batch = rng.gen_range(1..4usize);
        let x: Vec<f64> = (0..batch * din).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut cache = MlpCache::default();
        net.forward_batch(&x, batch, &mut cache);
        let dy: Vec<f64> = (0..batch * dout).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut grads = vec![0.0; net.param_count()];
        net.backward_batch(&cache, &dy, Some(&mut grads), None);
        let loss = |n: &Mlp| -> f64 {
            let mut c = MlpCache::default();
            n.forward_batch(&x, batch, &mut c);
            n.output(&c).iter().zip(dy.iter()).map(|(o, w)| o * w).sum()
        };
        let mut p0 = Vec::new();
        net.collect_params(&mut p0);
        for _ in 0..6 {
            let k = rng.gen_range(0..net.param_count());
            let h = 1e-6 * (1.0 + p0[k].abs());
            let mut np = net.clone();
            let mut pp = p0.clone();
            pp[k] += h;
            np.set_params(&pp);
            let fp = loss(&np);
            pp[k] -= 2.0 * h;
            np.set_params(&pp);
            let fm = loss(&np);
            let fd = (fp - fm) / (2.0 * h);
            assert!(rel_ok(fd, grads[k]), "dense param {k}: fd {fd} vs {}", grads[k]);
        }
        checked += 1;
    }

    // edited monomial layers
    for trial in 0..30 {
        let input_dim = rng.gen_range(2..4usize);
        let width = rng.gen_range(1..4usize);
        let knowledge = if trial % 2 == 0 {
            KnowledgeSet::new(vec![KnowledgeEntry {
                row: 0,
                col: rng.gen_range(0..full_basis_len(input_dim, 2)),
                value: rng.gen_range(-1.0..1.0),
            }])
            .unwrap()
        } else {
            KnowledgeSet::empty()
        };
        let mut net = build_edit(
            &knowledge,
            input_dim,
            &[width.max(1), 1],
            &[2, 2],
            1,
            &[Activation::Tanh, Activation::Tanh],
        )
        .unwrap();
        net.randomize_weights(&mut rng, 0.6);
        let x: Vec<f64> = (0..input_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut cache = PhynCache::default();
        net.forward_batch(&x, 1, &mut cache);
        let mut grads = vec![0.0; net.param_count()];
        let mut dx = vec![0.0; input_dim];
        net.backward_batch(&cache, &[1.0], Some(&mut grads), Some(&mut dx));
        let mut p0 = Vec::new();
        net.collect_params(&mut p0);
        for _ in 0..6 {
            let k = rng.gen_range(0..net.param_count());
            let h = 1e-6 * (1.0 + p0[k].abs());
            let mut np = net.clone();
            np.params_apply(&mut |i, w| if i == k { *w += h });
            let fp = np.forward(&x).unwrap()[0];
            let mut nm = net.clone();
            nm.params_apply(&mut |i, w| if i == k { *w -= h });
            let fm = nm.forward(&x).unwrap()[0];
            let fd = (fp - fm) / (2.0 * h);
            assert!(rel_ok(fd, grads[k]), "edited param {k}: fd {fd} vs {}", grads[k]);
        }
        for c in 0..input_dim {
            let h = 1e-6;
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[c] += h;
            xm[c] -= h;
            let fd =
                (net.forward(&xp).unwrap()[0] - net.forward(&xm).unwrap()[0]) / (2.0 * h);
            assert!(rel_ok(fd, dx[c]), "edited input {c}: fd {fd} vs {}", dx[c]);
        }
        checked += 1;
    }

    // composed actor-critic chain
    for _ in 0..30 {
        let obs_dim = rng.gen_range(1..4usize);
        let critic = Mlp::new(
            vec![obs_dim + 1, 8, 1],
            vec![Activation::Tanh, Activation::Linear],
            &mut rng,
            0.4,
        );
        let actor = Mlp::new(
            vec![obs_dim, 6, 1],
            vec![Activation::Relu, Activation::Tanh],
            &mut rng,
            0.4,
        );
        let scale = 3.0;
        let obs: Vec<f64> = (0..obs_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();

        // analytic gradient of Q(s, scale * pi(s)) through both networks
        let mut a_cache = MlpCache::default();
        actor.forward_batch(&obs, 1, &mut a_cache);
        let raw = actor.output(&a_cache)[0];
        let mut x = obs.clone();
        x.push(scale * raw);
        let mut c_cache = MlpCache::default();
        critic.forward_batch(&x, 1, &mut c_cache);
        let mut dxq = vec![0.0; obs_dim + 1];
        critic.backward_batch(&c_cache, &[1.0], None, Some(&mut dxq));
        let da = scale * dxq[obs_dim];
        let mut grads = vec![0.0; actor.param_count()];
        actor.backward_batch(&a_cache, &[da], Some(&mut grads), None);

        let objective = |a_net: &Mlp| -> f64 {
            let mut ac = MlpCache::default();
            a_net.forward_batch(&obs, 1, &mut ac);
            let mut xx = obs.clone();
            xx.push(scale * a_net.output(&ac)[0]);
            let mut cc = MlpCache::default();
            critic.forward_batch(&xx, 1, &mut cc);
            critic.output(&cc)[0]
        };
        let mut p0 = Vec::new();
        actor.collect_params(&mut p0);
        for _ in 0..6 {
            let k = rng.gen_range(0..actor.param_count());
            let h = 1e-6 * (1.0 + p0[k].abs());
            let mut ap = actor.clone();
            let mut pp = p0.clone();
            pp[k] += h;
            ap.set_params(&pp);
            let fp = objective(&ap);
            pp[k] -= 2.0 * h;
            ap.set_params(&pp);
            let fm = objective(&ap);
            let fd = (fp - fm) / (2.0 * h);
            assert!(rel_ok(fd, grads[k]), "composed param {k}: fd {fd} vs {}", grads[k]);
        }
        checked += 1;
    }

    let elapsed = t0.elapsed();
    assert!(checked >= 100, "only {checked} instances");
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    pass_line(
        "gradient suite",
        true,
        &format!("{checked} random instances within 1e-5, {elapsed:?}"),
    );
}

#[test]
fn criterion_08_simulator_anchoring() {
    let t0 = Instant::now();
    let params = cartpole::CartPoleParams::default();
    let model = cartpole::linearized_model(&params);
    let reference = PlantModel::cartpole_reference();
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let want = reference.a[(i, j)];
            if want != 0.0 {
                worst = worst.max(((model.a[(i, j)] - want) / want).abs());
            }
        }
        let want = reference.b[(i, 0)];
        if want != 0.0 {
            worst = worst.max(((model.b[(i, 0)] - want) / want).abs());
        }
    }
    assert!(worst < 0.02, "linearization off by {worst}");

    // gain-only control with friction must exit the safety set within 30 s
    // from at least one envelope start
    let config = base_config();
    let design = solve_reference_design(&config);
    let lab = Lab::new(config, design).unwrap();
    let policy = Policy::model_based_only(&lab);
    let mut rng = sub_rng(88, 0);
    let (lo, hi) = lab.envelope_box();
    let region = InitRegion::Envelope {
        lo,
        hi,
        envelope: lab.envelope.clone(),
    };
    let mut failures = 0;
    let trials = 10;
    for _ in 0..trials {
        let s0 = cartpole::reset(&mut rng, &region).unwrap();
        let class = classify_sample(&lab, &policy, s0, 900).unwrap();
        if class.verdict == SampleVerdict::Unsafe {
            failures += 1;
        }
    }
    assert!(
        failures >= 1,
        "gain-only control survived all {trials} starts despite friction"
    );
    let elapsed = t0.elapsed();
    assert!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    pass_line(
        "simulator anchoring",
        true,
        &format!(
            "linearization within {:.2}% and gain-only failure on {failures}/{trials} starts, {elapsed:?}",
            100.0 * worst
        ),
    );
}

#[test]
fn criterion_09_desk_scale_training() {
    let w = world();
    let t0 = Instant::now();

    // (a) seed-matched final-decile smoothed episode-reward dominance
    let phy_rewards: Vec<f64> = w.phy.episodes.iter().map(|e| e.reward_sum).collect();
    let ablation_rewards: Vec<f64> = w.ablation.episodes.iter().map(|e| e.reward_sum).collect();
    let phy_score = final_decile_smoothed_mean(&phy_rewards, 20);
    let ablation_score = final_decile_smoothed_mean(&ablation_rewards, 20);
    assert!(
        phy_score > ablation_score,
        "residual agent {phy_score} did not dominate the ablation {ablation_score}"
    );

    // (b) 50 evaluation episodes from inside the envelope, 1500 steps each,
    // zero safety-set violations
    let policy = policy_from(&w.lab, &w.phy, true);
    let summary = evaluate_policy(
        &w.lab,
        &policy,
        50,
        1500,
        DisturbanceMode::Off,
        4242,
        None,
    )
    .unwrap();
    assert_eq!(
        summary.safety_violation_steps, 0,
        "safety-set violations during evaluation: {summary:?}"
    );
    assert_eq!(summary.episodes_with_violation, 0);

    // (c) certificate coverage at or above 99%
    assert!(
        summary.cert_invariant_frac >= 0.99,
        "certificate coverage {:.4} below 0.99",
        summary.cert_invariant_frac
    );

    let eval_wall = t0.elapsed();
    let total = w.train_wall + eval_wall;
    assert!(
        total < Duration::from_secs(2 * 3600),
        "training + evaluation took {total:?}"
    );
    pass_line(
        "desk-scale training",
        true,
        &format!(
            "final-decile {phy_score:.1} vs ablation {ablation_score:.1}; 50x1500 eval: 0 violations, cert coverage {:.4}; wall {total:?}",
            summary.cert_invariant_frac
        ),
    );
}

#[test]
fn criterion_10_safe_area_sweep() {
    let w = world();
    let t0 = Instant::now();
    let policy = policy_from(&w.lab, &w.phy, true);
    let phy_sweep = sweep_safe_area(&w.lab, &policy).unwrap();
    assert_eq!(
        phy_sweep.envelope_violations, 0,
        "cells inside the envelope must classify IE: {} violations",
        phy_sweep.envelope_violations
    );

    let clf_policy = policy_from(&w.lab, &w.clf, true);
    let clf_sweep = sweep_safe_area(&w.lab, &clf_policy).unwrap();
    let phy_area = phy_sweep.ie_count + phy_sweep.ee_count;
    let clf_area = clf_sweep.ie_count + clf_sweep.ee_count;
    assert!(
        phy_area >= clf_area,
        "safe area {phy_area} below the baseline's {clf_area}"
    );
    let elapsed = t0.elapsed();
    assert!(elapsed < Duration::from_secs(30 * 60), "sweep took {elapsed:?}");
    pass_line(
        "safe-area sweep",
        true,
        &format!(
            "grid {}x{}: envelope cells all IE; safe area {phy_area} vs baseline {clf_area}, {elapsed:?}",
            w.lab.config.sweep.nx, w.lab.config.sweep.ntheta
        ),
    );
}

#[test]
fn criterion_11_disturbance_sampler() {
    let t0 = Instant::now();

    // Beta(1,1) reduces to the uniform law
    let cfg = BetaUuConfig {
        a: -2.0,
        c: 6.0,
        alpha_range: (1.0, 1.0),
        beta_range: (1.0, 1.0),
        seed: 0,
    };
    let mut rng = sub_rng(20_240, 1);
    let n = 100_000;
    let mut sum = 0.0;
    for _ in 0..n {
        sum += disturbance::sample(&cfg, &mut rng);
    }
    let mean = sum / n as f64;
    let expected = (cfg.a + cfg.c) / 2.0;
    assert!(
        ((mean - expected) / (cfg.c - cfg.a)).abs() < 0.01,
        "uniform mean {mean} vs {expected}"
    );

    // fixed-shape moments against the analytic formulas
    let cfg = BetaUuConfig {
        a: -1.0,
        c: 3.0,
        ..BetaUuConfig::default()
    };
    let (alpha, beta) = (2.0, 5.0);
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..n {
        let d = disturbance::sample_fixed_shapes(&cfg, alpha, beta, &mut rng);
        assert!((cfg.a..=cfg.c).contains(&d));
        sum += d;
        sumsq += d * d;
    }
    let mean = sum / n as f64;
    let var = sumsq / n as f64 - mean * mean;
    let m_true = cfg.a + (cfg.c - cfg.a) * alpha / (alpha + beta);
    let v_true =
        (cfg.c - cfg.a).powi(2) * alpha * beta / ((alpha + beta).powi(2) * (alpha + beta + 1.0));
    assert!(((mean - m_true) / m_true).abs() < 0.02, "mean {mean} vs {m_true}");
    assert!(((var - v_true) / v_true).abs() < 0.02, "var {var} vs {v_true}");

    // density normalization by composite Simpson
    for (alpha, beta) in [(2.3, 4.1), (3.0, 2.0), (4.5, 4.5)] {
        let (a, c) = (-1.0, 3.0);
        let panels = 10_000usize;
        let h = (c - a) / panels as f64;
        let mut integral = 0.0;
        for i in 0..panels {
            let x0 = a + i as f64 * h;
            let x1 = x0 + h;
            let f0 = if i == 0 {
                0.0
            } else {
                disturbance::pdf(x0, alpha, beta, a, c).unwrap()
            };
            let f1 = if i + 1 == panels {
                0.0
            } else {
                disturbance::pdf(x1, alpha, beta, a, c).unwrap()
            };
            let fm = disturbance::pdf(0.5 * (x0 + x1), alpha, beta, a, c).unwrap();
            integral += h / 6.0 * (f0 + 4.0 * fm + f1);
        }
        assert!(
            (integral - 1.0).abs() < 1e-6,
            "pdf integral {integral} at shapes ({alpha},{beta})"
        );
    }
    let elapsed = t0.elapsed();
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    pass_line(
        "disturbance sampler",
        true,
        &format!("uniform mean {:.4}, moments within 2%, pdf normalized, {elapsed:?}", mean),
    );
}
