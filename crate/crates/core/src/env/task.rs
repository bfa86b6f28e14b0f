use alloc::vec;
use alloc::vec::Vec;

use crate::error::{config_err, Result};

/// Task of a single arm inside a mixed assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ArmTask {
    Trajectory,
    Reorientation,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TaskKind {
    TrajectoryPlanning,
    BaseReorientation,
    /// One entry per arm.
    Mixed(Vec<ArmTask>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TaskSpec {
    pub kind: TaskKind,
    /// Control steps per episode.
    pub episode_length: usize,
}

pub const DEFAULT_EPISODE_LENGTH: usize = 50;

impl TaskSpec {
    pub fn trajectory() -> Self {
        Self { kind: TaskKind::TrajectoryPlanning, episode_length: DEFAULT_EPISODE_LENGTH }
    }
    pub fn reorientation() -> Self {
        Self { kind: TaskKind::BaseReorientation, episode_length: DEFAULT_EPISODE_LENGTH }
    }
    pub fn mixed(arms: Vec<ArmTask>) -> Self {
        Self { kind: TaskKind::Mixed(arms), episode_length: DEFAULT_EPISODE_LENGTH }
    }
    pub fn with_episode_length(mut self, steps: usize) -> Self {
        self.episode_length = steps;
        self
    }

    /// Per-arm task list; mixed assignments must name every arm.
    pub fn arm_tasks(&self, arm_count: usize) -> Result<Vec<ArmTask>> {
        if self.episode_length == 0 {
            return Err(config_err!("episode_length must be positive"));
        }
        match &self.kind {
            TaskKind::TrajectoryPlanning => Ok(vec![ArmTask::Trajectory; arm_count]),
            TaskKind::BaseReorientation => Ok(vec![ArmTask::Reorientation; arm_count]),
            TaskKind::Mixed(arms) if arms.len() == arm_count => Ok(arms.clone()),
            TaskKind::Mixed(arms) => {
                Err(config_err!("mixed task assigns {} arms, robot has {arm_count}", arms.len()))
            }
        }
    }

    /// Whether agents on this arm share one reward (base reorientation).
    pub fn share_reward(&self, arm: usize) -> bool {
        match &self.kind {
            TaskKind::TrajectoryPlanning => false,
            TaskKind::BaseReorientation => true,
            TaskKind::Mixed(arms) => arms.get(arm) == Some(&ArmTask::Reorientation),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            TaskKind::TrajectoryPlanning => "trajectory",
            TaskKind::BaseReorientation => "reorientation",
            TaskKind::Mixed(_) => "mixed",
        }
    }
}
