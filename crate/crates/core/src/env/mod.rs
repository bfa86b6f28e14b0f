//! Multi-agent environment: tasks, observations, the PD driver layer,
//! rewards, goal sampling, disturbances and arm failure.

mod disturbance;
mod driver;
mod reward;
mod sim;
mod task;

pub use disturbance::{DisturbanceMode, DisturbanceSpec, WrenchPulse, DEFAULT_ONSET};
pub use driver::pd_driver;
pub use reward::{euler_error, reward_base, reward_trajectory, RewardConfig};
pub use sim::{EnvConfig, GoalSet, Reset, SpaceRobotEnv, StepInfo, Transition, ACTION_DIM, OBS_DIM};
pub use task::{ArmTask, TaskKind, TaskSpec, DEFAULT_EPISODE_LENGTH};
