use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{UnitQuaternion, Vector3};

use super::KinematicTree;
use crate::error::{config_err, Result};

/// Full mechanical state of the robot.
///
/// Base velocities are world-frame: `base_linear_velocity` is the velocity of
/// the base frame origin, `base_angular_velocity` the base angular velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub base_position: Vector3<f64>,
    pub base_orientation: UnitQuaternion<f64>,
    pub base_linear_velocity: Vector3<f64>,
    pub base_angular_velocity: Vector3<f64>,
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
    pub time: f64,
}

impl SystemState {
    /// Identity base pose, all joints at zero, everything at rest.
    pub fn at_rest(joints: usize) -> Self {
        Self {
            base_position: Vector3::zeros(),
            base_orientation: UnitQuaternion::identity(),
            base_linear_velocity: Vector3::zeros(),
            base_angular_velocity: Vector3::zeros(),
            q: vec![0.0; joints],
            qdot: vec![0.0; joints],
            time: 0.0,
        }
    }

    pub fn check_dims(&self, tree: &KinematicTree) -> Result<()> {
        let n = tree.joint_count();
        if self.q.len() != n || self.qdot.len() != n {
            return Err(config_err!(
                "state has {} joint angles and {} joint rates, tree has {n} joints",
                self.q.len(),
                self.qdot.len()
            ));
        }
        Ok(())
    }

    /// Generalized velocity `[v_base, w_base, qdot]`.
    pub fn generalized_velocity(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(6 + self.qdot.len());
        v.extend_from_slice(self.base_linear_velocity.as_slice());
        v.extend_from_slice(self.base_angular_velocity.as_slice());
        v.extend_from_slice(&self.qdot);
        v
    }
}
