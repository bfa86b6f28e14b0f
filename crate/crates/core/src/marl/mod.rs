//! Multi-agent PPO with centralized critics, and the single-agent
//! centralized PPO baseline.

mod central;
mod config;
mod gae;
mod ppo;
mod trainer;

pub use central::Centralized;
pub use config::TrainConfig;
pub use gae::{compute_gae, normalize};
pub use ppo::{
    actor_optimizer, clip_ratio, clipped_surrogate, critic_update, ppo_actor_update, surrogate_ratio_gradient,
    ActorSample, ActorStats, ValueFunction,
};
pub use trainer::{
    derive_seed, summarize_errors, AgentLearner, Episode, EpisodeMetrics, ErrorSummary, IterationMetrics,
    MultiAgentEnv, StepOutcome, Trainer,
};
