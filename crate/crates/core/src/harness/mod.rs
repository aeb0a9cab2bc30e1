//! Orchestration: training runs with the residual controller and reward
//! monitor wired into the cart-pole simulator, policy evaluation with
//! certificate statistics, envelope/set sample classification, and the
//! safe-area grid sweep.

pub mod config;
pub mod manifest;

pub use config::{InitMode, LabConfig, RewardMode};
pub use manifest::RunManifest;

use std::io::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::cartpole::{
    self, observe, terminated, CartPoleParams, CartPoleState, EnvError, InitRegion,
    OBSERVATION_DIM,
};
use crate::ddpg::{Batch, ReplayBuffer, Trainer, Transition};
use crate::design::DesignSolution;
use crate::disturbance;
use crate::geometry::{self, SafetyEnvelope, SafetySet};
use crate::io::{format_f64, save_checkpoint};
use crate::net::{Activation, Mlp, MlpCache, Network};
use crate::residual::{combine, model_based_action, ActionLimits, CombinedAction};
use crate::reward::{clf_reward, theorem1_monitor, total_reward, Certificate, RewardContext};
use crate::rngutil::sub_rng;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("environment: {0}")]
    Env(#[from] EnvError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Invalid(String),
    #[error("simulation diverged at step {step}; diagnostic dump at {dump:?}")]
    NonFiniteAbort { step: usize, dump: Option<PathBuf> },
}

/// Assembled world: config plus the controller design and derived objects.
pub struct Lab {
    pub config: LabConfig,
    pub design: DesignSolution,
    pub envelope: SafetyEnvelope,
    pub set: SafetySet,
    pub reward_ctx: RewardContext,
    pub limits: ActionLimits,
}

impl Lab {
    pub fn new(config: LabConfig, design: DesignSolution) -> Result<Self, HarnessError> {
        let envelope = SafetyEnvelope::new(design.p.clone())
            .map_err(|e| HarnessError::Invalid(format!("design P: {e}")))?;
        let reward_ctx = RewardContext::new(design.p.clone(), design.a_bar.clone(), config.design.alpha)
            .map_err(|e| HarnessError::Invalid(format!("reward context: {e}")))?;
        let limits = ActionLimits::symmetric(config.cartpole.force_limit, 1);
        Ok(Self {
            config,
            design,
            envelope,
            set: SafetySet::cartpole(),
            reward_ctx,
            limits,
        })
    }

    fn init_region(&self) -> InitRegion {
        let init = &self.config.training.init;
        match init.mode {
            InitMode::Box => InitRegion::Box {
                lo: init.lo,
                hi: init.hi,
            },
            InitMode::Envelope => InitRegion::Envelope {
                lo: init.lo,
                hi: init.hi,
                envelope: self.envelope.clone(),
            },
        }
    }

    /// Axis-aligned bounding box of the envelope (support along each axis).
    pub fn envelope_box(&self) -> ([f64; 4], [f64; 4]) {
        let mut lo = [0.0; 4];
        let mut hi = [0.0; 4];
        for i in 0..4 {
            let half = self.design.q[(i, i)].max(0.0).sqrt();
            lo[i] = -half;
            hi[i] = half;
        }
        (lo, hi)
    }
}

/// Deterministic controller: scaled policy head plus the model-based gain
/// under the shared actuator limits.
#[derive(Clone)]
pub struct Policy {
    pub actor: Mlp,
    pub action_scale: f64,
    pub f_gain: nalgebra::DMatrix<f64>,
    pub limits: ActionLimits,
    pub residual_enabled: bool,
}

pub struct PolicyAction {
    pub a_drl: DVector<f64>,
    pub a_phy: DVector<f64>,
    pub combined: CombinedAction,
}

impl Policy {
    pub fn act(&self, state: &CartPoleState, cache: &mut MlpCache) -> PolicyAction {
        let obs = observe(state);
        let raw = self.actor.forward_single(&obs, cache);
        let a_drl = DVector::from_iterator(raw.len(), raw.iter().map(|r| r * self.action_scale));
        let a_phy = if self.residual_enabled {
            model_based_action(&self.f_gain, &state.to_vector()).expect("gain shape")
        } else {
            DVector::zeros(a_drl.len())
        };
        let combined = combine(&a_drl, &a_phy, &self.limits).expect("action shapes");
        PolicyAction {
            a_drl,
            a_phy,
            combined,
        }
    }

    /// The gain-only controller (empty policy head).
    pub fn model_based_only(lab: &Lab) -> Self {
        let mut rng = sub_rng(0, 0xF0);
        let mut actor = actor_network(&mut rng);
        actor.params_apply(&mut |_, w| *w = 0.0);
        Self {
            actor,
            action_scale: 0.0,
            f_gain: lab.design.f.clone(),
            limits: ActionLimits::symmetric(lab.config.cartpole.force_limit, 1),
            residual_enabled: true,
        }
    }
}

pub fn actor_network(rng: &mut impl Rng) -> Mlp {
    Mlp::new(
        vec![OBSERVATION_DIM, 256, 128, 64, 1],
        vec![
            Activation::Relu,
            Activation::Relu,
            Activation::Relu,
            Activation::Tanh,
        ],
        rng,
        3e-3,
    )
}

pub fn critic_network(rng: &mut impl Rng) -> Mlp {
    Mlp::new(
        vec![OBSERVATION_DIM + 1, 256, 128, 64, 1],
        vec![
            Activation::Relu,
            Activation::Relu,
            Activation::Relu,
            Activation::Linear,
        ],
        rng,
        3e-3,
    )
}

/// e^{−d} with d the distance of the pole tip from its upright position.
pub fn performance_metric(state: &CartPoleState, params: &CartPoleParams) -> f64 {
    let l = params.pole_full_length();
    let tip_x = state.x + l * state.theta.sin();
    let tip_y = l * state.theta.cos();
    let d = (tip_x * tip_x + (tip_y - l) * (tip_y - l)).sqrt();
    (-d).exp()
}

#[derive(Debug, Clone)]
pub struct EpisodeStats {
    pub index: usize,
    pub steps: usize,
    pub reward_sum: f64,
    pub p_mean: f64,
    pub cert_invariant_frac: f64,
    pub cert_stability_frac: f64,
    pub ended_by_violation: bool,
}

pub struct TrainingArtifacts {
    pub actor: Mlp,
    pub critic: Mlp,
    pub episodes: Vec<EpisodeStats>,
    pub total_steps: usize,
}

/// Moving-average smoothing followed by the mean over the final tenth.
pub fn final_decile_smoothed_mean(values: &[f64], window: usize) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let window = window.max(1);
    let smoothed: Vec<f64> = (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(window - 1);
            let slice = &values[lo..=i];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect();
    let start = values.len() - (values.len() / 10).max(1);
    let tail = &smoothed[start..];
    tail.iter().sum::<f64>() / tail.len() as f64
}

/// Trains the residual agent in the friction-true simulator.
///
/// The reward-mode flag switches between the safety-embedded reward and the
/// baseline Lyapunov-difference reward; `residual_enabled = false` removes
/// the model-based command for ablation runs. All randomness derives from
/// the one seed in the trainer config.
pub fn run_training(
    lab: &Lab,
    out_dir: Option<&Path>,
) -> Result<TrainingArtifacts, HarnessError> {
    let tcfg = &lab.config.training;
    let trainer_cfg = tcfg.trainer.clone();
    let seed = trainer_cfg.seed;
    let params = &lab.config.cartpole;
    params.validate()?;

    let mut net_rng = sub_rng(seed, 0);
    let critic = critic_network(&mut net_rng);
    let actor = actor_network(&mut net_rng);
    let mut trainer = Trainer::new(critic, actor, trainer_cfg.clone());

    let mut init_rng = sub_rng(seed, 1);
    let mut explore_rng = sub_rng(seed, 2);
    let mut uu_rng = sub_rng(seed, 3);
    let mut buffer_rng = sub_rng(seed, 4);

    let mut buffer = ReplayBuffer::new(trainer_cfg.buffer_capacity);
    let mut batch = Batch::default();
    let region = lab.init_region();

    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut step_log = match out_dir {
        Some(dir) => {
            let f = std::fs::File::create(dir.join("training.csv"))?;
            let mut w = std::io::BufWriter::new(f);
            writeln!(w, "step,episode,reward,p,cert,critic_loss,actor_objective")?;
            Some(w)
        }
        None => None,
    };

    let mut episodes: Vec<EpisodeStats> = Vec::new();
    let mut state = cartpole::reset(&mut init_rng, &region)?;
    let mut ep = EpisodeAccumulator::new(0);

    let total_steps = trainer_cfg.steps;
    for step_idx in 0..total_steps {
        let progress = step_idx as f64 / total_steps.max(1) as f64;
        let noise_std = trainer_cfg.exploration_noise_std
            * (1.0 + (tcfg.noise_decay_to - 1.0) * progress);

        let obs = observe(&state);
        // Warmup gates updates only; actions stay policy+noise throughout so
        // the buffer never fills with actuator-railed transitions whose
        // quadratic rewards destabilize the critic regression.
        let a_drl = trainer.act(&obs, noise_std, &mut explore_rng);
        let a_drl_v = DVector::from_row_slice(&a_drl);
        let a_phy = if tcfg.residual_enabled {
            model_based_action(&lab.design.f, &state.to_vector()).expect("gain shape")
        } else {
            DVector::zeros(1)
        };
        let act = combine(&a_drl_v, &a_phy, &lab.limits).expect("action shapes");
        let d = if tcfg.uu_during_training {
            disturbance::sample(&lab.config.disturbance, &mut uu_rng)
        } else {
            0.0
        };
        let next = match cartpole::step(&state, act.action[0], d, params) {
            Ok(n) => n,
            Err(EnvError::NonFinite) => {
                let dump = out_dir.map(|dir| {
                    let path = dir.join("nonfinite_dump.txt");
                    let _ = std::fs::write(
                        &path,
                        format!(
                            "step {step_idx}\nstate {state:?}\naction {}\ndisturbance {d}\n",
                            act.action[0]
                        ),
                    );
                    path
                });
                return Err(HarnessError::NonFiniteAbort {
                    step: step_idx,
                    dump,
                });
            }
            Err(e) => return Err(e.into()),
        };

        let s_vec = state.to_vector();
        let next_vec = next.to_vector();
        let reward = match tcfg.reward_mode {
            RewardMode::Safety => total_reward(&s_vec, &next_vec, &a_drl_v, &lab.reward_ctx),
            RewardMode::Clf => clf_reward(&s_vec, &next_vec, &a_drl_v, &lab.design.p),
        }
        .expect("reward dims");
        let cert = theorem1_monitor(&s_vec, &next_vec, &lab.reward_ctx).expect("monitor dims");
        let violation = terminated(&next);

        buffer.push(Transition {
            obs: obs.to_vec(),
            action: a_drl.clone(),
            reward,
            next_obs: observe(&next).to_vec(),
            terminal: violation,
        });

        let mut critic_loss = f64::NAN;
        let mut actor_obj = f64::NAN;
        if step_idx >= trainer_cfg.warmup_steps && buffer.len() >= trainer_cfg.batch_size {
            buffer.sample_into(&mut buffer_rng, trainer_cfg.batch_size, &mut batch);
            critic_loss = trainer.critic_update(&batch);
            actor_obj = trainer.actor_update(&batch);
            trainer.soft_update_targets();
            if !critic_loss.is_finite() || !actor_obj.is_finite() {
                let dump = out_dir.map(|dir| {
                    let path = dir.join("nonfinite_dump.txt");
                    let _ = std::fs::write(
                        &path,
                        format!("step {step_idx}\ncritic_loss {critic_loss}\nactor_objective {actor_obj}\n"),
                    );
                    path
                });
                return Err(HarnessError::NonFiniteAbort {
                    step: step_idx,
                    dump,
                });
            }
        }

        let p = performance_metric(&next, params);
        ep.record(reward, p, cert);
        if let Some(w) = step_log.as_mut() {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                step_idx,
                episodes.len(),
                format_f64(reward),
                format_f64(p),
                cert.short_code(),
                if critic_loss.is_nan() { String::new() } else { format_f64(critic_loss) },
                if actor_obj.is_nan() { String::new() } else { format_f64(actor_obj) },
            )?;
        }

        let horizon_reached = ep.steps >= tcfg.episode_max_steps;
        if violation || horizon_reached {
            episodes.push(ep.finish(violation));
            ep = EpisodeAccumulator::new(episodes.len());
            state = cartpole::reset(&mut init_rng, &region)?;
        } else {
            state = next;
        }
    }
    if ep.steps > 0 {
        episodes.push(ep.finish(false));
    }

    if let Some(w) = step_log.as_mut() {
        w.flush()?;
    }
    if let Some(dir) = out_dir {
        save_checkpoint(
            &dir.join("checkpoint.txt"),
            &[
                ("actor", &trainer.actor.online),
                ("critic", &trainer.critic.online),
            ],
        )
        .map_err(|e| HarnessError::Invalid(format!("checkpoint: {e}")))?;
        let mut epi = std::io::BufWriter::new(std::fs::File::create(dir.join("episodes.csv"))?);
        writeln!(
            epi,
            "episode,steps,reward_sum,p_mean,cert_invariant_frac,cert_stability_frac,ended_by_violation"
        )?;
        for e in &episodes {
            writeln!(
                epi,
                "{},{},{},{},{},{},{}",
                e.index,
                e.steps,
                format_f64(e.reward_sum),
                format_f64(e.p_mean),
                format_f64(e.cert_invariant_frac),
                format_f64(e.cert_stability_frac),
                e.ended_by_violation
            )?;
        }
        epi.flush()?;
    }

    Ok(TrainingArtifacts {
        actor: trainer.actor.online.clone(),
        critic: trainer.critic.online.clone(),
        episodes,
        total_steps,
    })
}

struct EpisodeAccumulator {
    index: usize,
    steps: usize,
    reward_sum: f64,
    p_sum: f64,
    invariant_steps: usize,
    stability_steps: usize,
}

impl EpisodeAccumulator {
    fn new(index: usize) -> Self {
        Self {
            index,
            steps: 0,
            reward_sum: 0.0,
            p_sum: 0.0,
            invariant_steps: 0,
            stability_steps: 0,
        }
    }

    fn record(&mut self, reward: f64, p: f64, cert: Certificate) {
        self.steps += 1;
        self.reward_sum += reward;
        self.p_sum += p;
        if cert.at_least_invariant() {
            self.invariant_steps += 1;
        }
        if cert == Certificate::SafetyAndStability {
            self.stability_steps += 1;
        }
    }

    fn finish(self, ended_by_violation: bool) -> EpisodeStats {
        let n = self.steps.max(1) as f64;
        EpisodeStats {
            index: self.index,
            steps: self.steps,
            reward_sum: self.reward_sum,
            p_mean: self.p_sum / n,
            cert_invariant_frac: self.invariant_steps as f64 / n,
            cert_stability_frac: self.stability_steps as f64 / n,
            ended_by_violation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisturbanceMode {
    Off,
    Uu,
}

#[derive(Debug, Clone, Default)]
pub struct EvalSummary {
    pub episodes: usize,
    pub total_steps: usize,
    pub mean_episode_reward: f64,
    pub mean_p: f64,
    pub cert_invariant_frac: f64,
    pub cert_stability_frac: f64,
    pub safety_violation_steps: usize,
    pub episodes_with_violation: usize,
    pub envelope_exit_steps: usize,
}

/// Rolls the deterministic policy from envelope-sampled starts and reports
/// reward, performance, certificate fractions and violation counts.
pub fn evaluate_policy(
    lab: &Lab,
    policy: &Policy,
    episodes: usize,
    horizon: usize,
    mode: DisturbanceMode,
    seed: u64,
    out_dir: Option<&Path>,
) -> Result<EvalSummary, HarnessError> {
    let params = &lab.config.cartpole;
    let (lo, hi) = lab.envelope_box();
    let region = InitRegion::Envelope {
        lo,
        hi,
        envelope: lab.envelope.clone(),
    };
    let mut init_rng = sub_rng(seed, 10);
    let mut uu_rng = sub_rng(seed, 11);
    let mut cache = MlpCache::default();

    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
    }

    let mut summary = EvalSummary {
        episodes,
        ..EvalSummary::default()
    };
    let mut reward_total = 0.0;
    let mut p_total = 0.0;
    let mut invariant_steps = 0usize;
    let mut stability_steps = 0usize;

    for e in 0..episodes {
        let mut state = cartpole::reset(&mut init_rng, &region)?;
        let mut traj = match out_dir {
            Some(dir) => {
                let f = std::fs::File::create(dir.join(format!("trajectory_{e:03}.csv")))?;
                let mut w = std::io::BufWriter::new(f);
                writeln!(
                    w,
                    "k,x,v,theta,omega,a_phy,a_drl,a,reward,cert,in_envelope,in_safety_set"
                )?;
                Some(w)
            }
            None => None,
        };
        let mut violated = false;
        for k in 0..horizon {
            let action = policy.act(&state, &mut cache);
            let d = match mode {
                DisturbanceMode::Off => 0.0,
                DisturbanceMode::Uu => disturbance::sample(&lab.config.disturbance, &mut uu_rng),
            };
            let next = cartpole::step(&state, action.combined.action[0], d, params)?;
            let s_vec = state.to_vector();
            let next_vec = next.to_vector();
            let reward = total_reward(&s_vec, &next_vec, &action.a_drl, &lab.reward_ctx)
                .expect("reward dims");
            let cert = theorem1_monitor(&s_vec, &next_vec, &lab.reward_ctx).expect("monitor dims");
            let in_set = geometry::set_membership(&next_vec, &lab.set).expect("set dims");
            let (_, in_env) =
                geometry::envelope_membership(&next_vec, &lab.envelope).expect("envelope dims");

            reward_total += reward;
            p_total += performance_metric(&next, params);
            summary.total_steps += 1;
            if cert.at_least_invariant() {
                invariant_steps += 1;
            }
            if cert == Certificate::SafetyAndStability {
                stability_steps += 1;
            }
            if !in_set {
                summary.safety_violation_steps += 1;
                violated = true;
            }
            if !in_env {
                summary.envelope_exit_steps += 1;
            }
            if let Some(w) = traj.as_mut() {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{},{},{},{}",
                    k,
                    format_f64(state.x),
                    format_f64(state.v),
                    format_f64(state.theta),
                    format_f64(state.omega),
                    format_f64(action.a_phy[0]),
                    format_f64(action.a_drl[0]),
                    format_f64(action.combined.action[0]),
                    format_f64(reward),
                    cert.short_code(),
                    in_env,
                    in_set
                )?;
            }
            state = next;
        }
        if violated {
            summary.episodes_with_violation += 1;
        }
        if let Some(w) = traj.as_mut() {
            w.flush()?;
        }
    }
    let n = summary.total_steps.max(1) as f64;
    summary.mean_episode_reward = reward_total / episodes.max(1) as f64;
    summary.mean_p = p_total / n;
    summary.cert_invariant_frac = invariant_steps as f64 / n;
    summary.cert_stability_frac = stability_steps as f64 / n;
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleVerdict {
    /// Started inside the envelope and never left it.
    Ie,
    /// Started outside the envelope but never left the safety set.
    Ee,
    Unsafe,
}

impl SampleVerdict {
    pub fn code(self) -> &'static str {
        match self {
            SampleVerdict::Ie => "IE",
            SampleVerdict::Ee => "EE",
            SampleVerdict::Unsafe => "UNSAFE",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SampleClassification {
    pub initial_state: CartPoleState,
    pub verdict: SampleVerdict,
    pub horizon: usize,
    /// Norm trend over the rollout: final-decile mean no larger than the
    /// first-decile mean.
    pub converged: bool,
}

/// Classifies one start state by rolling the deterministic policy.
pub fn classify_sample(
    lab: &Lab,
    policy: &Policy,
    s0: CartPoleState,
    horizon: usize,
) -> Result<SampleClassification, HarnessError> {
    assert!(horizon >= 1);
    let params = &lab.config.cartpole;
    let mut cache = MlpCache::default();
    let (_, start_in_env) =
        geometry::envelope_membership(&s0.to_vector(), &lab.envelope).expect("envelope dims");
    let mut always_in_env = start_in_env;
    let mut always_in_set = geometry::set_membership(&s0.to_vector(), &lab.set).expect("set dims");
    let mut norms = Vec::with_capacity(horizon + 1);
    norms.push(s0.norm());
    let mut state = s0;
    for _ in 0..horizon {
        let action = policy.act(&state, &mut cache);
        let next = match cartpole::step(&state, action.combined.action[0], 0.0, params) {
            Ok(n) => n,
            Err(EnvError::NonFinite) => {
                always_in_env = false;
                always_in_set = false;
                break;
            }
            Err(e) => return Err(e.into()),
        };
        let v = next.to_vector();
        if always_in_env {
            let (_, in_env) = geometry::envelope_membership(&v, &lab.envelope).expect("dims");
            always_in_env = in_env;
        }
        if always_in_set {
            always_in_set = geometry::set_membership(&v, &lab.set).expect("dims");
        }
        norms.push(next.norm());
        if !always_in_set && !always_in_env {
            break;
        }
        state = next;
    }
    let verdict = if start_in_env && always_in_env {
        SampleVerdict::Ie
    } else if !start_in_env && always_in_set {
        SampleVerdict::Ee
    } else {
        SampleVerdict::Unsafe
    };
    let decile = (norms.len() / 10).max(1);
    let first: f64 = norms[..decile].iter().sum::<f64>() / decile as f64;
    let last: f64 = norms[norms.len() - decile..].iter().sum::<f64>() / decile as f64;
    Ok(SampleClassification {
        initial_state: s0,
        verdict,
        horizon,
        converged: last <= first + 1e-9,
    })
}

#[derive(Debug, Clone)]
pub struct SweepCell {
    pub x: f64,
    pub theta: f64,
    pub in_envelope: bool,
    pub verdict: SampleVerdict,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
    pub ie_count: usize,
    pub ee_count: usize,
    pub unsafe_count: usize,
    /// Cells inside the envelope whose verdict is not IE.
    pub envelope_violations: usize,
}

/// Classifies a (x, θ) grid with v = ω = 0; cells run in parallel and merge
/// in grid order.
pub fn sweep_safe_area(lab: &Lab, policy: &Policy) -> Result<SweepResult, HarnessError> {
    let sweep = &lab.config.sweep;
    let horizon = sweep.horizon;
    let linspace = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
        if n == 1 {
            return vec![0.5 * (lo + hi)];
        }
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    };
    let xs = linspace(sweep.x_min, sweep.x_max, sweep.nx);
    let thetas = linspace(sweep.theta_min, sweep.theta_max, sweep.ntheta);
    let mut starts = Vec::with_capacity(xs.len() * thetas.len());
    for &x in &xs {
        for &theta in &thetas {
            starts.push(CartPoleState {
                x,
                v: 0.0,
                theta,
                omega: 0.0,
            });
        }
    }
    let cells: Result<Vec<SweepCell>, HarnessError> = starts
        .par_iter()
        .map(|s0| {
            let class = classify_sample(lab, policy, *s0, horizon)?;
            let (_, in_env) =
                geometry::envelope_membership(&s0.to_vector(), &lab.envelope).expect("dims");
            Ok(SweepCell {
                x: s0.x,
                theta: s0.theta,
                in_envelope: in_env,
                verdict: class.verdict,
            })
        })
        .collect();
    let cells = cells?;
    let mut result = SweepResult {
        ie_count: 0,
        ee_count: 0,
        unsafe_count: 0,
        envelope_violations: 0,
        cells,
    };
    for c in &result.cells {
        match c.verdict {
            SampleVerdict::Ie => result.ie_count += 1,
            SampleVerdict::Ee => result.ee_count += 1,
            SampleVerdict::Unsafe => result.unsafe_count += 1,
        }
        if c.in_envelope && c.verdict != SampleVerdict::Ie {
            result.envelope_violations += 1;
        }
    }
    Ok(result)
}

pub fn write_sweep_csv(path: &Path, result: &SweepResult) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "x,theta,in_envelope,verdict")?;
    for c in &result.cells {
        writeln!(
            w,
            "{},{},{},{}",
            format_f64(c.x),
            format_f64(c.theta),
            c.in_envelope,
            c.verdict.code()
        )?;
    }
    w.flush()
}
