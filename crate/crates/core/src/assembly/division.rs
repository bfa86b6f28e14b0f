use alloc::vec::Vec;

use crate::dynamics::KinematicTree;
use crate::env::{ArmTask, TaskSpec};
use crate::error::{config_err, Result};

/// What an agent controls and is rewarded for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AgentRole {
    /// First three joints of an arm; observes `(p_e, p_d)`.
    PositionReacher,
    /// Wrist joints of a 6-DoF arm; observes `(phi_e, phi_d)`.
    OrientationReacher,
    /// Any joint triple in base reorientation; observes `(phi_b, phi_d^b)`.
    BaseAdjuster,
}

impl AgentRole {
    pub fn tag(self) -> u8 {
        match self {
            AgentRole::PositionReacher => 0,
            AgentRole::OrientationReacher => 1,
            AgentRole::BaseAdjuster => 2,
        }
    }
    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(AgentRole::PositionReacher),
            1 => Some(AgentRole::OrientationReacher),
            2 => Some(AgentRole::BaseAdjuster),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AgentSpec {
    /// 1-based; arm `a` (0-based) of a 6-DoF robot owns ids `2a + 1` and `2a + 2`.
    pub id: usize,
    pub arm: usize,
    /// Global joint indices, contiguous.
    pub joints: [usize; 3],
    pub role: AgentRole,
}

/// Splits every arm into joint triples and assigns roles from the task.
///
/// A 6-DoF arm yields a position agent (joints 1-3) and a wrist agent
/// (joints 4-6); a 3-DoF arm yields a single position agent. Under base
/// reorientation every agent becomes a base adjuster with the same split.
pub fn divide_agents(tree: &KinematicTree, task: &TaskSpec) -> Result<Vec<AgentSpec>> {
    let arm_tasks = task.arm_tasks(tree.arm_count())?;
    let mut agents = Vec::new();
    let mut next_id = 1;
    for arm in 0..tree.arm_count() {
        let joints = tree.arm_joints(arm);
        if joints.is_empty() || joints.len() % 3 != 0 {
            return Err(config_err!("arm {arm} has {} joints, not a multiple of 3", joints.len()));
        }
        if joints.len() > 6 {
            return Err(config_err!("arm {arm} has {} joints; at most 6 are supported", joints.len()));
        }
        if joints.windows(2).any(|w| w[1] != w[0] + 1) {
            return Err(config_err!("arm {arm} joints are not contiguous"));
        }
        for (k, triple) in joints.chunks(3).enumerate() {
            let role = match (arm_tasks[arm], k) {
                (ArmTask::Reorientation, _) => AgentRole::BaseAdjuster,
                (ArmTask::Trajectory, 0) => AgentRole::PositionReacher,
                (ArmTask::Trajectory, _) => AgentRole::OrientationReacher,
            };
            agents.push(AgentSpec { id: next_id, arm, joints: [triple[0], triple[1], triple[2]], role });
            next_id += 1;
        }
    }
    check_partition(&agents, tree.joint_count())?;
    Ok(agents)
}

/// Agent joint sets must be pairwise disjoint and cover every joint.
pub fn check_partition(agents: &[AgentSpec], joint_count: usize) -> Result<()> {
    let mut owner = alloc::vec![None; joint_count];
    for a in agents {
        for &j in &a.joints {
            if j >= joint_count {
                return Err(config_err!("agent {} controls joint {j}, robot has {joint_count}", a.id));
            }
            if let Some(other) = owner[j].replace(a.id) {
                return Err(config_err!("joint {j} claimed by agents {other} and {}", a.id));
            }
        }
    }
    if let Some(j) = owner.iter().position(|o| o.is_none()) {
        return Err(config_err!("joint {j} is not controlled by any agent"));
    }
    Ok(())
}
