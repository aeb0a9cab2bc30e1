//! Command-line front end: design → verify → train → eval → sweep workflows
//! plus the disturbance sampler and the plant-parameter fit.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;

use safectl::cartpole::{self, CartPoleParams};
use safectl::design::{
    solve_design_bounded, verify_lmi, ControlSupportBound, DesignSolution, PlantModel,
};
use safectl::disturbance;
use safectl::geometry::{
    check_envelope_containment, normalize_safety_set, SafetyEnvelope, SafetySet,
};
use safectl::harness::{
    self, classify_sample, evaluate_policy, run_training, sweep_safe_area, write_sweep_csv,
    DisturbanceMode, Lab, LabConfig, Policy, RunManifest,
};
use safectl::io::{format_f64, load_checkpoint, read_matrix, read_vector, write_matrix};
use safectl::residual::ActionLimits;
use safectl::rngutil::sub_rng;

#[derive(Parser)]
#[command(name = "safectl", about = "safe-control laboratory", version)]
struct Cli {
    /// Configuration file (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the analytic-centering design and write Q, R, P, F, A_bar.
    Design(DesignArgs),
    /// Verify a design directory against the contraction and containment conditions.
    Verify(VerifyArgs),
    /// Train the residual agent.
    Train(TrainArgs),
    /// Evaluate a checkpoint.
    Eval(EvalArgs),
    /// Classify the (x, theta) grid into IE/EE/unsafe cells.
    Sweep(EvalArgs),
    /// Emit disturbance samples as CSV.
    SampleUu(SampleArgs),
    /// Fit physical cart-pole parameters to the committed discrete model.
    FitPlant,
}

#[derive(Args)]
struct DesignArgs {
    /// Plant A matrix file; committed cart-pole model when omitted.
    #[arg(long)]
    a: Option<PathBuf>,
    /// Plant B matrix file.
    #[arg(long)]
    b: Option<PathBuf>,
    /// Safety-set D matrix file; cart-pole set when omitted.
    #[arg(long)]
    d: Option<PathBuf>,
    /// Safety-set offset vector file.
    #[arg(long)]
    v: Option<PathBuf>,
    /// Upper slack vector file.
    #[arg(long)]
    v_hi: Option<PathBuf>,
    /// Lower slack vector file.
    #[arg(long)]
    v_lo: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Directory holding Q.txt and R.txt (design output).
    #[arg(long, default_value = "out/design")]
    design: PathBuf,
    #[command(flatten)]
    plant: DesignArgs,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value = "out/design")]
    design: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, default_value = "out/design")]
    design: PathBuf,
    /// Checkpoint file from training.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Disturbance mode for eval: off | uu.
    #[arg(long, default_value = "off")]
    disturbance: String,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, default_value_t = 1000)]
    count: usize,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let mut config = match &cli.config {
        Some(path) => LabConfig::load(path).map_err(|e| anyhow::anyhow!(e))?,
        None => LabConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.training.trainer.seed = seed;
        config.disturbance.seed = seed;
    }
    std::fs::create_dir_all(&cli.out)?;

    match &cli.command {
        Command::Design(args) => cmd_design(&cli, &config, args),
        Command::Verify(args) => cmd_verify(&cli, &config, args),
        Command::Train(args) => cmd_train(&cli, &config, args),
        Command::Eval(args) => cmd_eval(&cli, &config, args, false),
        Command::Sweep(args) => cmd_eval(&cli, &config, args, true),
        Command::SampleUu(args) => cmd_sample(&cli, &config, args),
        Command::FitPlant => cmd_fit(),
    }
}

fn load_plant(args: &DesignArgs) -> Result<PlantModel> {
    match (&args.a, &args.b) {
        (Some(a), Some(b)) => {
            let a = read_matrix(a)?;
            let b = read_matrix(b)?;
            Ok(PlantModel::new(a, b)?)
        }
        (None, None) => Ok(PlantModel::cartpole_reference()),
        _ => bail!("provide both --a and --b or neither"),
    }
}

fn load_safety_set(args: &DesignArgs) -> Result<SafetySet> {
    match (&args.d, &args.v, &args.v_hi, &args.v_lo) {
        (Some(d), Some(v), Some(hi), Some(lo)) => {
            let d = read_matrix(d)?;
            let v = read_vector(v)?;
            let hi = read_vector(hi)?;
            let lo = read_vector(lo)?;
            Ok(SafetySet::new(d, v, hi, lo)?)
        }
        (None, None, None, None) => Ok(SafetySet::cartpole()),
        _ => bail!("provide all of --d --v --v-hi --v-lo or none"),
    }
}

fn design_dir(cli: &Cli) -> PathBuf {
    cli.out.join("design")
}

fn cmd_design(cli: &Cli, config: &LabConfig, args: &DesignArgs) -> Result<()> {
    let plant = load_plant(args)?;
    let set = load_safety_set(args)?;
    let nset = normalize_safety_set(&set)?;
    let dcfg = config.design.to_design_config();
    let bounds: Vec<ControlSupportBound> = config
        .design
        .control_support_limit
        .map(|limit| {
            vec![ControlSupportBound {
                row: DVector::from_element(plant.action_dim(), 1.0),
                limit,
            }]
        })
        .unwrap_or_default();
    let out = solve_design_bounded(&plant, &nset, &dcfg, &bounds)?;
    let sol = &out.solution;

    let dir = design_dir(cli);
    std::fs::create_dir_all(&dir)?;
    let mut manifest = RunManifest::new("design", config.training.trainer.seed, config.to_toml_string());
    for (name, m) in [
        ("Q", &sol.q),
        ("R", &sol.r),
        ("P", &sol.p),
        ("F", &sol.f),
        ("A_bar", &sol.a_bar),
    ] {
        let path = dir.join(format!("{name}.txt"));
        write_matrix(&path, m)?;
        manifest.record_output(&path);
    }

    let report = verify_lmi(sol, &plant, dcfg.alpha, dcfg.feasibility_tol);
    let envelope = SafetyEnvelope::new(sol.p.clone())?;
    let containment = check_envelope_containment(&nset, &envelope)?;
    let report_path = dir.join("report.txt");
    let mut text = String::new();
    text.push_str(&format!(
        "log det Q = {}\nblock LMI min eigenvalue = {}\nreduced condition min eigenvalue = {}\nQ min eigenvalue = {}\nverification pass = {}\n",
        format_f64(sol.log_det_q()),
        format_f64(report.block_min_eig),
        format_f64(report.reduced_min_eig),
        format_f64(report.q_min_eig),
        report.pass
    ));
    for (i, row) in containment.rows.iter().enumerate() {
        text.push_str(&format!(
            "containment row {i}: value_hi = {} value_lo = {} d = {} pass = {}\n",
            format_f64(row.value_hi),
            format_f64(row.value_lo),
            row.d,
            row.pass
        ));
    }
    text.push_str(&format!("contained = {}\n", containment.contained));
    text.push_str(&format!(
        "barrier stages = {} newton steps = {} gap proxy = {}\n",
        out.diagnostics.log_det_history.len(),
        out.diagnostics.newton_steps,
        format_f64(out.diagnostics.gap_proxy)
    ));
    std::fs::write(&report_path, &text)?;
    manifest.record_output(&report_path);
    manifest.save(&dir.join("manifest.toml"))?;
    print!("{text}");
    Ok(())
}

fn load_design(dir: &Path, plant: &PlantModel) -> Result<DesignSolution> {
    let q = read_matrix(&dir.join("Q.txt")).context("reading Q")?;
    let r = read_matrix(&dir.join("R.txt")).context("reading R")?;
    Ok(DesignSolution::from_qr(plant, q, r)?)
}

fn cmd_verify(cli: &Cli, config: &LabConfig, args: &VerifyArgs) -> Result<()> {
    let _ = cli;
    let plant = load_plant(&args.plant)?;
    let set = load_safety_set(&args.plant)?;
    let nset = normalize_safety_set(&set)?;
    let sol = load_design(&args.design, &plant)?;
    let report = verify_lmi(&sol, &plant, config.design.alpha, config.design.tol);
    println!(
        "block LMI min eigenvalue   {}",
        format_f64(report.block_min_eig)
    );
    println!(
        "reduced cond min eigenvalue {}",
        format_f64(report.reduced_min_eig)
    );
    println!("Q min eigenvalue            {}", format_f64(report.q_min_eig));
    println!("verification pass           {}", report.pass);
    let envelope = SafetyEnvelope::new(sol.p.clone())?;
    let containment = check_envelope_containment(&nset, &envelope)?;
    for (i, row) in containment.rows.iter().enumerate() {
        println!(
            "containment row {i}: value_hi {} value_lo {} d {} pass {}",
            format_f64(row.value_hi),
            format_f64(row.value_lo),
            row.d,
            row.pass
        );
    }
    println!("contained                   {}", containment.contained);
    Ok(())
}

fn cmd_train(cli: &Cli, config: &LabConfig, args: &TrainArgs) -> Result<()> {
    let plant = PlantModel::cartpole_reference();
    let sol = load_design(&args.design, &plant)?;
    let lab = Lab::new(config.clone(), sol)?;
    let dir = cli.out.join("train");
    let arts = run_training(&lab, Some(&dir))?;
    let mut manifest = RunManifest::new("train", config.training.trainer.seed, config.to_toml_string());
    for name in ["training.csv", "episodes.csv", "checkpoint.txt"] {
        manifest.record_output(&dir.join(name));
    }
    manifest.record_input(&args.design.join("Q.txt"))?;
    manifest.record_input(&args.design.join("R.txt"))?;
    manifest.save(&dir.join("manifest.toml"))?;
    println!(
        "trained {} steps over {} episodes; final-decile smoothed episode reward {}",
        arts.total_steps,
        arts.episodes.len(),
        format_f64(harness::final_decile_smoothed_mean(
            &arts.episodes.iter().map(|e| e.reward_sum).collect::<Vec<_>>(),
            20
        ))
    );
    Ok(())
}

fn load_policy(config: &LabConfig, sol: &DesignSolution, checkpoint: &Path) -> Result<Policy> {
    let nets = load_checkpoint(checkpoint)?;
    let actor = nets
        .into_iter()
        .find(|(name, _)| name == "actor")
        .map(|(_, net)| net)
        .context("checkpoint has no actor network")?;
    Ok(Policy {
        actor,
        action_scale: config.training.trainer.action_scale,
        f_gain: sol.f.clone(),
        limits: ActionLimits::symmetric(config.cartpole.force_limit, 1),
        residual_enabled: config.training.residual_enabled,
    })
}

fn cmd_eval(cli: &Cli, config: &LabConfig, args: &EvalArgs, sweep: bool) -> Result<()> {
    let plant = PlantModel::cartpole_reference();
    let sol = load_design(&args.design, &plant)?;
    let policy = load_policy(config, &sol, &args.checkpoint)?;
    let lab = Lab::new(config.clone(), sol)?;
    if sweep {
        let result = sweep_safe_area(&lab, &policy)?;
        let dir = cli.out.join("sweep");
        std::fs::create_dir_all(&dir)?;
        write_sweep_csv(&dir.join("grid.csv"), &result)?;
        println!(
            "IE {} EE {} unsafe {} envelope-violations {}",
            result.ie_count, result.ee_count, result.unsafe_count, result.envelope_violations
        );
        let mut manifest =
            RunManifest::new("sweep", config.training.trainer.seed, config.to_toml_string());
        manifest.record_input(&args.checkpoint)?;
        manifest.record_output(&dir.join("grid.csv"));
        manifest.save(&dir.join("manifest.toml"))?;
        // a quick origin sanity probe mirrors the report
        let origin = classify_sample(&lab, &policy, cartpole::CartPoleState::EQUILIBRIUM, 100)?;
        println!("origin cell verdict {}", origin.verdict.code());
    } else {
        let mode = match args.disturbance.as_str() {
            "off" => DisturbanceMode::Off,
            "uu" => DisturbanceMode::Uu,
            other => bail!("unknown disturbance mode {other:?}"),
        };
        let dir = cli.out.join("eval");
        let summary = evaluate_policy(
            &lab,
            &policy,
            config.eval.episodes,
            config.eval.horizon,
            mode,
            config.training.trainer.seed,
            Some(&dir),
        )?;
        println!(
            "episodes {} steps {} mean-episode-reward {} mean-p {} cert-invariant {} cert-stability {} violations {} episodes-with-violation {}",
            summary.episodes,
            summary.total_steps,
            format_f64(summary.mean_episode_reward),
            format_f64(summary.mean_p),
            format_f64(summary.cert_invariant_frac),
            format_f64(summary.cert_stability_frac),
            summary.safety_violation_steps,
            summary.episodes_with_violation
        );
        let mut manifest =
            RunManifest::new("eval", config.training.trainer.seed, config.to_toml_string());
        manifest.record_input(&args.checkpoint)?;
        manifest.save(&dir.join("manifest.toml"))?;
    }
    Ok(())
}

fn cmd_sample(cli: &Cli, config: &LabConfig, args: &SampleArgs) -> Result<()> {
    let mut rng = sub_rng(config.disturbance.seed, 20);
    let path = cli.out.join("uu_samples.csv");
    let mut text = String::from("k,d\n");
    for k in 0..args.count {
        let d = disturbance::sample(&config.disturbance, &mut rng);
        text.push_str(&format!("{k},{}\n", format_f64(d)));
    }
    std::fs::write(&path, text)?;
    println!("wrote {} samples to {}", args.count, path.display());
    Ok(())
}

fn cmd_fit() -> Result<()> {
    let reference = PlantModel::cartpole_reference();
    let fitted = cartpole::fit_params(&reference.a, &reference.b, 1.0 / 30.0, 9.8);
    println!("fitted parameters:");
    println!("  cart_mass        {}", format_f64(fitted.cart_mass));
    println!("  pole_mass        {}", format_f64(fitted.pole_mass));
    println!("  pole_half_length {}", format_f64(fitted.pole_half_length));
    println!("  gravity          {}", format_f64(fitted.gravity));
    println!("  dt               {}", format_f64(fitted.dt));
    let model = cartpole::linearized_model(&fitted);
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
    println!("worst relative error vs committed model: {}", format_f64(worst));
    let committed = CartPoleParams::default();
    println!(
        "committed defaults: cart_mass {} pole_mass {} pole_half_length {}",
        format_f64(committed.cart_mass),
        format_f64(committed.pole_mass),
        format_f64(committed.pole_half_length)
    );
    Ok(())
}
