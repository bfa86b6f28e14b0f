use alloc::vec::Vec;

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};

use super::{KinematicTree, SystemState};
use crate::error::Result;
use crate::math::axis_rotation;

/// Pose of a body frame in the world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

/// Output of [`forward_kinematics`].
#[derive(Debug, Clone, PartialEq)]
pub struct BodyPoses {
    pub base: Pose,
    pub links: Vec<Pose>,
    pub end_effectors: Vec<Pose>,
}

/// World poses of every body and every arm's tool point.
pub fn forward_kinematics(tree: &KinematicTree, state: &SystemState) -> Result<BodyPoses> {
    state.check_dims(tree)?;
    let kin = Kinematics::new(tree, state);
    let to_pose = |p: &Vector3<f64>, r: &Matrix3<f64>| Pose {
        position: *p,
        orientation: UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(*r)),
    };
    Ok(BodyPoses {
        base: Pose { position: state.base_position, orientation: state.base_orientation },
        links: (0..tree.joint_count()).map(|i| to_pose(&kin.link_position[i], &kin.link_rotation[i])).collect(),
        end_effectors: (0..tree.arm_count())
            .map(|a| {
                let (p, r) = kin.end_effector(tree, a);
                to_pose(&p, &r)
            })
            .collect(),
    })
}

/// Positional quantities of one configuration, in world coordinates.
///
/// Body index 0 is the base, body `i + 1` is link `i`.
#[derive(Debug, Clone)]
pub struct Kinematics {
    pub base_rotation: Matrix3<f64>,
    pub base_position: Vector3<f64>,
    pub link_rotation: Vec<Matrix3<f64>>,
    /// Link frame origins, which coincide with the joint origins.
    pub link_position: Vec<Vector3<f64>>,
    pub joint_axis: Vec<Vector3<f64>>,
    pub com: Vec<Vector3<f64>>,
    /// World-frame rotational inertia about each body COM.
    pub inertia: Vec<Matrix3<f64>>,
}

impl Kinematics {
    pub fn new(tree: &KinematicTree, state: &SystemState) -> Self {
        let n = tree.joint_count();
        let base_rotation = *state.base_orientation.to_rotation_matrix().matrix();
        let base_position = state.base_position;
        let mut link_rotation = Vec::with_capacity(n);
        let mut link_position = Vec::with_capacity(n);
        let mut joint_axis = Vec::with_capacity(n);
        let mut com = Vec::with_capacity(n + 1);
        let mut inertia = Vec::with_capacity(n + 1);
        let base = tree.base();
        com.push(base_position + base_rotation * base.com());
        inertia.push(base_rotation * base.inertia() * base_rotation.transpose());
        for (i, link) in tree.links().iter().enumerate() {
            let (pr, pp) = match link.parent {
                None => (base_rotation, base_position),
                Some(p) => (link_rotation[p], link_position[p]),
            };
            let joint_frame: Matrix3<f64> = pr * link.mount_rotation;
            let origin = pp + pr * link.mount_translation;
            let rot = joint_frame * axis_rotation(&link.axis, state.q[i]);
            joint_axis.push(joint_frame * link.axis);
            com.push(origin + rot * link.inertia.com());
            inertia.push(rot * link.inertia.inertia() * rot.transpose());
            link_rotation.push(rot);
            link_position.push(origin);
        }
        Self { base_rotation, base_position, link_rotation, link_position, joint_axis, com, inertia }
    }

    pub fn end_effector(&self, tree: &KinematicTree, arm: usize) -> (Vector3<f64>, Matrix3<f64>) {
        let ee = &tree.end_effectors()[arm];
        let r = self.link_rotation[ee.link];
        (self.link_position[ee.link] + r * ee.offset, r)
    }

    /// Frame origin of body `b` (base origin for 0, joint origin otherwise).
    pub fn body_origin(&self, b: usize) -> Vector3<f64> {
        if b == 0 {
            self.base_position
        } else {
            self.link_position[b - 1]
        }
    }

    pub fn body_rotation(&self, b: usize) -> Matrix3<f64> {
        if b == 0 {
            self.base_rotation
        } else {
            self.link_rotation[b - 1]
        }
    }

    /// Indices of the generalized coordinates moving body `b`; the base's
    /// six coordinates come first.
    pub fn body_columns(tree: &KinematicTree, b: usize, out: &mut Vec<usize>) {
        out.clear();
        out.extend(0..6);
        if b > 0 {
            out.extend(tree.ancestors(b - 1).iter().map(|j| 6 + j));
        }
    }

    /// Linear and angular Jacobian columns for a point fixed to body `b`.
    pub fn point_jacobian(
        &self,
        tree: &KinematicTree,
        b: usize,
        point: &Vector3<f64>,
        cols: &mut Vec<usize>,
        lin: &mut Vec<Vector3<f64>>,
        ang: &mut Vec<Vector3<f64>>,
    ) {
        Self::body_columns(tree, b, cols);
        lin.clear();
        ang.clear();
        let r = point - self.base_position;
        let e = [Vector3::x(), Vector3::y(), Vector3::z()];
        for axis in &e {
            lin.push(*axis);
            ang.push(Vector3::zeros());
        }
        for axis in &e {
            lin.push(axis.cross(&r));
            ang.push(*axis);
        }
        for &c in &cols[6..] {
            let j = c - 6;
            let a = self.joint_axis[j];
            lin.push(a.cross(&(point - self.link_position[j])));
            ang.push(a);
        }
    }
}

/// World-frame velocities of every body.
#[derive(Debug, Clone)]
pub struct BodyVelocities {
    pub angular: Vec<Vector3<f64>>,
    pub com_linear: Vec<Vector3<f64>>,
    /// Velocity of each body frame origin.
    pub origin_linear: Vec<Vector3<f64>>,
}

impl BodyVelocities {
    pub fn new(tree: &KinematicTree, kin: &Kinematics, state: &SystemState) -> Self {
        let nb = tree.joint_count() + 1;
        let mut angular = Vec::with_capacity(nb);
        let mut origin_linear = Vec::with_capacity(nb);
        let mut com_linear = Vec::with_capacity(nb);
        angular.push(state.base_angular_velocity);
        origin_linear.push(state.base_linear_velocity);
        com_linear.push(state.base_linear_velocity + state.base_angular_velocity.cross(&(kin.com[0] - kin.base_position)));
        for (i, link) in tree.links().iter().enumerate() {
            let p = link.parent.map_or(0, |p| p + 1);
            let w = angular[p] + kin.joint_axis[i] * state.qdot[i];
            let vo = origin_linear[p] + angular[p].cross(&(kin.link_position[i] - kin.body_origin(p)));
            com_linear.push(vo + w.cross(&(kin.com[i + 1] - kin.link_position[i])));
            angular.push(w);
            origin_linear.push(vo);
        }
        Self { angular, com_linear, origin_linear }
    }

    /// Velocity of the tool point of `arm`.
    pub fn end_effector(&self, tree: &KinematicTree, kin: &Kinematics, arm: usize) -> (Vector3<f64>, Vector3<f64>) {
        let ee = &tree.end_effectors()[arm];
        let b = ee.link + 1;
        let (p, _) = kin.end_effector(tree, arm);
        let w = self.angular[b];
        (self.origin_linear[b] + w.cross(&(p - kin.link_position[ee.link])), w)
    }
}
