//! Hierarchical agent division, policy sets and cross-task reassembly.

mod checkpoint;
mod division;
mod policy;

pub use division::{check_partition, divide_agents, AgentRole, AgentSpec};
pub use policy::{reassemble, AgentPolicy, ArmSource, PolicySet, Provenance};
pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, Checkpoint, LearnerState, TrainingState, FORMAT_VERSION, MAGIC,
};
