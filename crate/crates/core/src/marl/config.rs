use alloc::vec;
use alloc::vec::Vec;

use crate::error::{config_err, Result};

/// Hyperparameters of MAPPO and of the centralized PPO baseline.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrainConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_epsilon: f64,
    pub ppo_epochs: usize,
    pub entropy_coef: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Environment control steps (summed over parallel envs) before stopping.
    pub max_env_steps: u64,
    /// Episodes collected per iteration.
    pub rollout_envs: usize,
    pub minibatch_size: usize,
    /// Iterations between hard copies of the critics into their targets.
    pub target_sync_period: usize,
    /// Hidden layer widths of actors and critics.
    pub hidden: Vec<usize>,
    pub initial_log_std: f64,
    /// Gradient norm clip per network; non-positive disables clipping.
    pub max_grad_norm: f64,
    /// Critics regress `return / value_scale`.
    pub value_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::trajectory()
    }
}

impl TrainConfig {
    pub fn trajectory() -> Self {
        Self {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_epsilon: 0.2,
            ppo_epochs: 5,
            entropy_coef: 0.05,
            actor_lr: 8e-4,
            critic_lr: 8e-4,
            max_env_steps: 20_000_000,
            rollout_envs: 8,
            minibatch_size: 50,
            target_sync_period: 1,
            hidden: vec![64, 64],
            initial_log_std: -0.5,
            max_grad_norm: 0.5,
            value_scale: 100.0,
        }
    }

    pub fn reorientation() -> Self {
        Self { actor_lr: 7e-4, critic_lr: 7e-4, ..Self::trajectory() }
    }

    /// Actor and critic widths of the full-scale setup.
    pub fn full_scale(mut self) -> Self {
        self.hidden = vec![512, 512];
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(config_err!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err(config_err!("gae_lambda must lie in [0, 1], got {}", self.gae_lambda));
        }
        if !(self.clip_epsilon > 0.0) {
            return Err(config_err!("clip_epsilon must be positive"));
        }
        if self.ppo_epochs == 0 {
            return Err(config_err!("ppo_epochs must be at least 1"));
        }
        if self.rollout_envs == 0 || self.minibatch_size == 0 || self.target_sync_period == 0 {
            return Err(config_err!("rollout_envs, minibatch_size and target_sync_period must be positive"));
        }
        if !(self.actor_lr > 0.0) || !(self.critic_lr > 0.0) || !(self.value_scale > 0.0) {
            return Err(config_err!("learning rates and value_scale must be positive"));
        }
        if !(self.entropy_coef >= 0.0) {
            return Err(config_err!("entropy_coef must be non-negative"));
        }
        if self.hidden.iter().any(|&h| h == 0) {
            return Err(config_err!("hidden layer widths must be positive"));
        }
        Ok(())
    }
}
