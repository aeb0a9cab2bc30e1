//! Laboratory configuration: one TOML file with sections for the design
//! solve, the plant, the disturbance law, training, evaluation, and the
//! safe-area sweep. Every field has a committed default; partial files
//! override only what they name.

use serde::{Deserialize, Serialize};

use crate::cartpole::CartPoleParams;
use crate::ddpg::TrainerConfig;
use crate::design::{BarrierSchedule, DesignConfig};
use crate::disturbance::BetaUuConfig;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct DesignSection {
    pub alpha: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Cap on max |a_phy| over the envelope; `None` drops the constraint.
    pub control_support_limit: Option<f64>,
    pub barrier: BarrierSchedule,
}

impl Default for DesignSection {
    fn default() -> Self {
        Self {
            alpha: 0.98,
            tol: 1e-7,
            max_iter: 500,
            control_support_limit: Some(16.0),
            barrier: BarrierSchedule::default(),
        }
    }
}

impl DesignSection {
    pub fn to_design_config(&self) -> DesignConfig {
        DesignConfig {
            alpha: self.alpha,
            feasibility_tol: self.tol,
            max_iterations: self.max_iter,
            barrier: self.barrier.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    #[default]
    Safety,
    Clf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    Box,
    #[default]
    Envelope,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct InitSection {
    pub mode: InitMode,
    pub lo: [f64; 4],
    pub hi: [f64; 4],
}

impl Default for InitSection {
    fn default() -> Self {
        Self {
            mode: InitMode::Envelope,
            lo: [-0.8, -1.5, -0.7, -1.5],
            hi: [0.8, 1.5, 0.7, 1.5],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct TrainingSection {
    pub trainer: TrainerConfig,
    pub episode_max_steps: usize,
    pub reward_mode: RewardMode,
    pub residual_enabled: bool,
    pub uu_during_training: bool,
    pub init: InitSection,
    /// Exploration noise is scaled down linearly to this fraction over the run.
    pub noise_decay_to: f64,
}

impl Default for TrainingSection {
    fn default() -> Self {
        Self {
            trainer: TrainerConfig::default(),
            episode_max_steps: 500,
            reward_mode: RewardMode::Safety,
            residual_enabled: true,
            uu_during_training: false,
            init: InitSection::default(),
            noise_decay_to: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct EvalSection {
    pub episodes: usize,
    pub horizon: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            episodes: 50,
            horizon: 1500,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct SweepSection {
    pub nx: usize,
    pub ntheta: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub horizon: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            nx: 41,
            ntheta: 41,
            x_min: -1.0,
            x_max: 1.0,
            theta_min: -1.0,
            theta_max: 1.0,
            horizon: 1500,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(default)]
pub struct LabConfig {
    pub design: DesignSection,
    pub cartpole: CartPoleParams,
    pub disturbance: BetaUuConfig,
    pub training: TrainingSection,
    pub eval: EvalSection,
    pub sweep: SweepSection,
}

impl LabConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &std::path::Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_toml_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip_through_toml() {
        let cfg = LabConfig::default();
        let text = cfg.to_toml_string();
        let back = LabConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn partial_override_keeps_other_defaults() {
        let text = r#"
[design]
alpha = 0.9

[training]
episode_max_steps = 123
"#;
        let cfg = LabConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.design.alpha, 0.9);
        assert_eq!(cfg.design.max_iter, 500);
        assert_eq!(cfg.training.episode_max_steps, 123);
        assert_eq!(cfg.training.trainer.batch_size, 64);
    }
}
