//! Desk-scale deterministic-policy-gradient trainer: critic regression on
//! one-step bootstrapped targets, actor ascent through the critic, Polyak
//! target tracking, and seeded Gaussian exploration.

pub mod buffer;

pub use buffer::{Batch, ReplayBuffer, Transition};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::net::{Network, SgdMomentum};
use crate::rngutil::standard_normal;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrainerConfig {
    pub gamma: f64,
    pub critic_lr: f64,
    pub actor_lr: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub target_tau: f64,
    pub exploration_noise_std: f64,
    pub steps: usize,
    pub seed: u64,
    pub warmup_steps: usize,
    pub action_scale: f64,
    pub sgd_momentum: f64,
    /// Global L2 gradient-norm cap applied before each optimizer step.
    pub max_grad_norm: f64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            critic_lr: 1e-3,
            actor_lr: 1e-4,
            batch_size: 64,
            buffer_capacity: 100_000,
            target_tau: 0.005,
            exploration_noise_std: 1.0,
            steps: 200_000,
            seed: 0,
            warmup_steps: 1_000,
            action_scale: 10.0,
            sgd_momentum: 0.9,
            max_grad_norm: 10.0,
        }
    }
}

fn clip_grad_norm(grads: &mut [f64], max_norm: f64) {
    if max_norm <= 0.0 {
        return;
    }
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        for g in grads.iter_mut() {
            *g *= scale;
        }
    }
}

/// Online network plus its Polyak-tracked target copy.
#[derive(Debug, Clone)]
pub struct NetworkPair<N: Network> {
    pub online: N,
    pub target: N,
}

impl<N: Network> NetworkPair<N> {
    pub fn new(online: N) -> Self {
        let target = online.clone();
        Self { online, target }
    }
}

/// target ← tau·online + (1−tau)·target, parameterwise.
pub fn soft_update<N: Network>(pair: &mut NetworkPair<N>, tau: f64, scratch: &mut Vec<f64>) {
    pair.online.collect_params(scratch);
    let src = &*scratch;
    pair.target
        .params_apply(&mut |i, w| *w = tau * src[i] + (1.0 - tau) * *w);
}

/// One-step bootstrapped critic targets: y = r + γ·Q_t(s′, π_t(s′)), with the
/// bootstrap dropped on terminal transitions.
pub fn critic_target<C: Network, A: Network>(
    batch: &Batch,
    critic_target_net: &C,
    actor_target_net: &A,
    gamma: f64,
    action_scale: f64,
    ct_cache: &mut C::Cache,
    at_cache: &mut A::Cache,
) -> Vec<f64> {
    assert!(batch.len > 0, "batch must be nonempty");
    let b = batch.len;
    actor_target_net.forward_batch(&batch.next_obs, b, at_cache);
    let raw = actor_target_net.output(at_cache);
    let act_dim = batch.act_dim;
    let mut xq = Vec::with_capacity(b * (batch.obs_dim + act_dim));
    for i in 0..b {
        xq.extend_from_slice(&batch.next_obs[i * batch.obs_dim..(i + 1) * batch.obs_dim]);
        for a in 0..act_dim {
            xq.push(action_scale * raw[i * act_dim + a]);
        }
    }
    critic_target_net.forward_batch(&xq, b, ct_cache);
    let q_next = critic_target_net.output(ct_cache);
    (0..b)
        .map(|i| {
            if batch.terminals[i] {
                batch.rewards[i]
            } else {
                batch.rewards[i] + gamma * q_next[i]
            }
        })
        .collect()
}

/// Trainer state: both network pairs, their optimizers, and scratch buffers.
pub struct Trainer<C: Network, A: Network> {
    pub critic: NetworkPair<C>,
    pub actor: NetworkPair<A>,
    pub cfg: TrainerConfig,
    critic_opt: SgdMomentum,
    actor_opt: SgdMomentum,
    c_cache: C::Cache,
    ct_cache: C::Cache,
    a_cache: A::Cache,
    at_cache: A::Cache,
    grads_c: Vec<f64>,
    grads_a: Vec<f64>,
    params_scratch: Vec<f64>,
    xq: Vec<f64>,
    dxq: Vec<f64>,
}

impl<C: Network, A: Network> Trainer<C, A> {
    pub fn new(critic: C, actor: A, cfg: TrainerConfig) -> Self {
        let critic_opt = SgdMomentum::new(cfg.critic_lr, cfg.sgd_momentum, critic.param_count());
        let actor_opt = SgdMomentum::new(cfg.actor_lr, cfg.sgd_momentum, actor.param_count());
        let grads_c = vec![0.0; critic.param_count()];
        let grads_a = vec![0.0; actor.param_count()];
        Self {
            critic: NetworkPair::new(critic),
            actor: NetworkPair::new(actor),
            cfg,
            critic_opt,
            actor_opt,
            c_cache: C::Cache::default(),
            ct_cache: C::Cache::default(),
            a_cache: A::Cache::default(),
            at_cache: A::Cache::default(),
            grads_c,
            grads_a,
            params_scratch: Vec::new(),
            xq: Vec::new(),
            dxq: Vec::new(),
        }
    }

    /// One gradient step on the mean squared Bellman error; returns the
    /// pre-step loss.
    pub fn critic_update(&mut self, batch: &Batch) -> f64 {
        let b = batch.len;
        let y = critic_target(
            batch,
            &self.critic.target,
            &self.actor.target,
            self.cfg.gamma,
            self.cfg.action_scale,
            &mut self.ct_cache,
            &mut self.at_cache,
        );
        self.xq.clear();
        for i in 0..b {
            self.xq
                .extend_from_slice(&batch.obs[i * batch.obs_dim..(i + 1) * batch.obs_dim]);
            self.xq
                .extend_from_slice(&batch.actions[i * batch.act_dim..(i + 1) * batch.act_dim]);
        }
        self.critic.online.forward_batch(&self.xq, b, &mut self.c_cache);
        let q = self.critic.online.output(&self.c_cache);
        let mut loss = 0.0;
        let mut dq = Vec::with_capacity(b);
        for i in 0..b {
            let e = q[i] - y[i];
            loss += e * e;
            dq.push(2.0 * e / b as f64);
        }
        loss /= b as f64;
        self.grads_c.iter_mut().for_each(|g| *g = 0.0);
        self.critic
            .online
            .backward_batch(&self.c_cache, &dq, Some(&mut self.grads_c), None);
        clip_grad_norm(&mut self.grads_c, self.cfg.max_grad_norm);
        self.critic_opt.lr = self.cfg.critic_lr;
        self.critic_opt.step(&mut self.critic.online, &self.grads_c);
        loss
    }

    /// One ascent step on E[Q(s, π(s))]; returns the pre-step objective.
    pub fn actor_update(&mut self, batch: &Batch) -> f64 {
        let b = batch.len;
        let scale = self.cfg.action_scale;
        self.actor.online.forward_batch(&batch.obs, b, &mut self.a_cache);
        let raw = self.actor.online.output(&self.a_cache);
        let act_dim = self.actor.online.output_dim();
        self.xq.clear();
        for i in 0..b {
            self.xq
                .extend_from_slice(&batch.obs[i * batch.obs_dim..(i + 1) * batch.obs_dim]);
            for a in 0..act_dim {
                self.xq.push(scale * raw[i * act_dim + a]);
            }
        }
        self.critic.online.forward_batch(&self.xq, b, &mut self.c_cache);
        let q = self.critic.online.output(&self.c_cache);
        let objective = q.iter().sum::<f64>() / b as f64;

        // dQ/d[s;a] through the critic, action block only
        let dy = vec![1.0 / b as f64; b];
        let in_dim = batch.obs_dim + act_dim;
        self.dxq.clear();
        self.dxq.resize(b * in_dim, 0.0);
        self.critic
            .online
            .backward_batch(&self.c_cache, &dy, None, Some(&mut self.dxq));
        // chain through the action scaling, ascending: negate for the
        // descent-form optimizer
        let mut da = Vec::with_capacity(b * act_dim);
        for i in 0..b {
            for a in 0..act_dim {
                da.push(-scale * self.dxq[i * in_dim + batch.obs_dim + a]);
            }
        }
        self.grads_a.iter_mut().for_each(|g| *g = 0.0);
        self.actor
            .online
            .backward_batch(&self.a_cache, &da, Some(&mut self.grads_a), None);
        clip_grad_norm(&mut self.grads_a, self.cfg.max_grad_norm);
        self.actor_opt.lr = self.cfg.actor_lr;
        self.actor_opt.step(&mut self.actor.online, &self.grads_a);
        objective
    }

    pub fn soft_update_targets(&mut self) {
        soft_update(&mut self.critic, self.cfg.target_tau, &mut self.params_scratch);
        soft_update(&mut self.actor, self.cfg.target_tau, &mut self.params_scratch);
    }

    /// Exploration action: scaled policy output plus Gaussian noise, clamped
    /// to the action scale.
    pub fn act(&mut self, obs: &[f64], noise_std: f64, rng: &mut impl Rng) -> Vec<f64> {
        let scale = self.cfg.action_scale;
        let raw = self.actor.online.forward_single(obs, &mut self.a_cache);
        raw.iter()
            .map(|r| {
                let noisy = scale * r + noise_std * standard_normal(rng);
                noisy.clamp(-scale, scale)
            })
            .collect()
    }

    pub fn act_deterministic(&mut self, obs: &[f64]) -> Vec<f64> {
        let scale = self.cfg.action_scale;
        let raw = self.actor.online.forward_single(obs, &mut self.a_cache);
        raw.iter().map(|r| scale * r).collect()
    }

    pub fn q_value(&mut self, obs: &[f64], action: &[f64]) -> f64 {
        let mut x = obs.to_vec();
        x.extend_from_slice(action);
        self.critic.online.forward_single(&x, &mut self.c_cache)[0]
    }
}
