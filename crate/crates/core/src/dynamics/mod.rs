//! Zero-gravity dynamics of a floating base carrying revolute chains.
//!
//! Forward dynamics assemble the generalized mass matrix from per-body
//! Jacobians and solve it with a Cholesky factorization; the integrator keeps
//! the total momentum exactly consistent with the applied external impulses.

mod collision;
mod forward;
mod integrate;
mod kinematics;
mod model;
mod momentum;
mod state;

pub use collision::{
    capsule_box_intersect, capsules_intersect, check_collision, segment_box_distance, segment_distance,
    CollisionPair, OrientedBox, WorldCapsule,
};
pub(crate) use collision::first_collision;
pub use forward::{
    clamp_torques, forward_dynamics, inverse_dynamics, mass_matrix, probe_mass_matrix, Accelerations, BodyId,
    EquationsOfMotion, Wrench,
};
pub use integrate::{rollout, step, step_constrained, step_with_wrenches, DEFAULT_DT};
pub use kinematics::{forward_kinematics, BodyPoses, BodyVelocities, Kinematics, Pose};
pub use model::{Capsule, EndEffector, JointLimits, KinematicTree, Link, SpatialInertia};
pub use momentum::{system_com, total_momentum, Momentum};
pub use state::SystemState;
