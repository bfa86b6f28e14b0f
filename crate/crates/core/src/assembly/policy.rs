use alloc::string::String;
use alloc::vec::Vec;

use super::division::{divide_agents, AgentSpec};
use crate::dynamics::KinematicTree;
use crate::env::{ArmTask, TaskKind, TaskSpec};
use crate::error::{Error, Result};
use crate::marl::{MultiAgentEnv, Trainer, ValueFunction};
use crate::nn::GaussianPolicy;

/// Where a policy set came from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Provenance {
    /// Task name the actors were trained on (`trajectory`, `reorientation`, `mixed`).
    pub task: String,
    /// `mappo`, or `ppo-central` for a single actor over every joint.
    pub algorithm: String,
    /// Robot preset or model name.
    pub robot: String,
    /// Robot model version the policies were trained against.
    pub model_version: u32,
    /// Hex digest of the robot description.
    pub robot_hash: String,
    /// Hex digest of the training configuration.
    pub config_hash: String,
    pub seed: u64,
    pub env_steps: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentPolicy {
    pub spec: AgentSpec,
    pub actor: GaussianPolicy,
    pub critic: Option<ValueFunction>,
}

/// Per-agent policies, ordered by agent id.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySet {
    pub provenance: Provenance,
    pub task: TaskKind,
    pub agents: Vec<AgentPolicy>,
}

fn composition(msg: String) -> Error {
    Error::Composition(msg)
}

impl PolicySet {
    /// Snapshot of a trainer's actors and critics. `specs` labels the
    /// trainer's agents in order.
    pub fn from_trainer<E: MultiAgentEnv>(
        trainer: &Trainer<E>,
        specs: &[AgentSpec],
        task: TaskKind,
        provenance: Provenance,
    ) -> Result<Self> {
        let learners = trainer.learners();
        if specs.len() != learners.len() {
            return Err(composition(alloc::format!("{} agent specs for {} learners", specs.len(), learners.len())));
        }
        let agents = specs
            .iter()
            .zip(learners)
            .map(|(s, l)| AgentPolicy { spec: s.clone(), actor: l.actor.clone(), critic: Some(l.critic.clone()) })
            .collect();
        Ok(Self { provenance, task, agents })
    }

    pub fn actors(&self) -> Vec<GaussianPolicy> {
        self.agents.iter().map(|a| a.actor.clone()).collect()
    }

    pub fn agent(&self, id: usize) -> Option<&AgentPolicy> {
        self.agents.iter().find(|a| a.spec.id == id)
    }

    /// Checks that every agent of `expected` is served by an actor with
    /// matching joints, role and dimensions.
    pub fn check_against(&self, expected: &[AgentSpec], obs_dim: usize, action_dim: usize) -> Result<()> {
        if expected.len() != self.agents.len() {
            return Err(composition(alloc::format!(
                "policy set has {} agents, the environment expects {}",
                self.agents.len(),
                expected.len()
            )));
        }
        for (want, have) in expected.iter().zip(&self.agents) {
            if want != &have.spec {
                return Err(composition(alloc::format!(
                    "agent {}: policy is for {:?} on joints {:?}, environment expects {:?} on joints {:?}",
                    want.id,
                    have.spec.role,
                    have.spec.joints,
                    want.role,
                    want.joints
                )));
            }
            if have.actor.obs_dim() != obs_dim || have.actor.action_dim() != action_dim {
                return Err(composition(alloc::format!(
                    "agent {}: actor maps {} -> {}, environment needs {obs_dim} -> {action_dim}",
                    want.id,
                    have.actor.obs_dim(),
                    have.actor.action_dim()
                )));
            }
        }
        Ok(())
    }
}

/// Donor of one arm's agents in a reassembly.
#[derive(Debug, Clone, Copy)]
pub struct ArmSource<'a> {
    pub set: &'a PolicySet,
    pub task: ArmTask,
}

/// Composes frozen donor actors into a policy set for a mixed task.
///
/// Arm `a` of the target robot takes the actors that controlled arm `a` in
/// its donor set. Donor actors are copied unchanged; critics are dropped.
pub fn reassemble(tree: &KinematicTree, sources: &[ArmSource<'_>], episode_length: usize) -> Result<(PolicySet, TaskSpec)> {
    if sources.len() != tree.arm_count() {
        return Err(composition(alloc::format!("{} arm sources for a robot with {} arms", sources.len(), tree.arm_count())));
    }
    let task = TaskSpec::mixed(sources.iter().map(|s| s.task).collect()).with_episode_length(episode_length);
    let specs = divide_agents(tree, &task)?;
    let mut agents = Vec::with_capacity(specs.len());
    for spec in specs {
        let src = &sources[spec.arm];
        let donor = src
            .set
            .agents
            .iter()
            .find(|d| d.spec.arm == spec.arm && d.spec.joints == spec.joints)
            .ok_or_else(|| {
                composition(alloc::format!(
                    "agent {}: donor set has no agent on arm {} joints {:?}",
                    spec.id,
                    spec.arm,
                    spec.joints
                ))
            })?;
        if donor.spec.role != spec.role {
            return Err(composition(alloc::format!(
                "agent {}: donor agent {} was trained as {:?}, the {:?} arm task needs {:?}",
                spec.id,
                donor.spec.id,
                donor.spec.role,
                src.task,
                spec.role
            )));
        }
        if donor.actor.obs_dim() != crate::env::OBS_DIM || donor.actor.action_dim() != crate::env::ACTION_DIM {
            return Err(composition(alloc::format!("agent {}: donor actor has the wrong dimensions", spec.id)));
        }
        agents.push(AgentPolicy { spec, actor: donor.actor.clone(), critic: None });
    }
    // Donors of one task kind must come from the same robot.
    let robots: Vec<&str> = sources.iter().map(|s| s.set.provenance.robot_hash.as_str()).collect();
    if robots.windows(2).any(|w| w[0] != w[1]) {
        return Err(composition("donor sets were trained on different robots".into()));
    }
    let provenance = Provenance {
        task: "mixed".into(),
        algorithm: "mappo".into(),
        robot: sources[0].set.provenance.robot.clone(),
        model_version: sources[0].set.provenance.model_version,
        robot_hash: sources[0].set.provenance.robot_hash.clone(),
        config_hash: String::new(),
        seed: 0,
        env_steps: 0,
    };
    Ok((PolicySet { provenance, task: task.kind.clone(), agents }, task))
}
