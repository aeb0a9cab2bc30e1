//! Fixed-capacity FIFO replay buffer with uniform sampling.

use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub terminal: bool,
}

impl Transition {
    pub fn is_finite(&self) -> bool {
        self.reward.is_finite()
            && self.obs.iter().all(|v| v.is_finite())
            && self.action.iter().all(|v| v.is_finite())
            && self.next_obs.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    storage: Vec<Transition>,
    capacity: usize,
    cursor: usize,
}

/// Column-batched sample, row-major per field.
#[derive(Debug, Default, Clone)]
pub struct Batch {
    pub obs: Vec<f64>,
    pub actions: Vec<f64>,
    pub rewards: Vec<f64>,
    pub next_obs: Vec<f64>,
    pub terminals: Vec<bool>,
    pub len: usize,
    pub obs_dim: usize,
    pub act_dim: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        Self {
            storage: Vec::with_capacity(capacity.min(1 << 20)),
            capacity,
            cursor: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// FIFO write: once full, the oldest slot is overwritten.
    pub fn push(&mut self, t: Transition) {
        assert!(t.is_finite(), "transitions must be finite");
        if self.storage.len() < self.capacity {
            self.storage.push(t);
        } else {
            self.storage[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    pub fn get(&self, i: usize) -> &Transition {
        &self.storage[i]
    }

    /// Uniform sample with replacement into a reusable batch.
    pub fn sample_into(&self, rng: &mut impl Rng, batch_size: usize, out: &mut Batch) {
        assert!(!self.is_empty(), "cannot sample from an empty buffer");
        let first = &self.storage[0];
        out.obs_dim = first.obs.len();
        out.act_dim = first.action.len();
        out.len = batch_size;
        out.obs.clear();
        out.actions.clear();
        out.rewards.clear();
        out.next_obs.clear();
        out.terminals.clear();
        for _ in 0..batch_size {
            let idx = rng.gen_range(0..self.storage.len());
            let t = &self.storage[idx];
            out.obs.extend_from_slice(&t.obs);
            out.actions.extend_from_slice(&t.action);
            out.rewards.push(t.reward);
            out.next_obs.extend_from_slice(&t.next_obs);
            out.terminals.push(t.terminal);
        }
    }
}
