use nalgebra::{Matrix6, Vector3, Vector6};

use super::kinematics::{BodyVelocities, Kinematics};
use super::{KinematicTree, SystemState};
use crate::error::Result;

/// Total momentum of the free-floating system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Momentum {
    /// kg m/s, world frame.
    pub linear: Vector3<f64>,
    /// kg m^2/s about the system centre of mass, world frame.
    pub angular: Vector3<f64>,
}

pub fn total_momentum(tree: &KinematicTree, state: &SystemState) -> Result<Momentum> {
    state.check_dims(tree)?;
    let kin = Kinematics::new(tree, state);
    let vel = BodyVelocities::new(tree, &kin, state);
    let h = momentum_about_origin(tree, &kin, &vel);
    let linear = Vector3::new(h[0], h[1], h[2]);
    let com = system_com_from(tree, &kin);
    let angular = Vector3::new(h[3], h[4], h[5]) - com.cross(&linear);
    Ok(Momentum { linear, angular })
}

pub fn system_com(tree: &KinematicTree, state: &SystemState) -> Result<Vector3<f64>> {
    state.check_dims(tree)?;
    Ok(system_com_from(tree, &Kinematics::new(tree, state)))
}

pub(crate) fn system_com_from(tree: &KinematicTree, kin: &Kinematics) -> Vector3<f64> {
    let mut acc = kin.com[0] * tree.base().mass();
    for (i, link) in tree.links().iter().enumerate() {
        acc += kin.com[i + 1] * link.inertia.mass();
    }
    acc / tree.total_mass()
}

/// `[linear; angular about the world origin]`.
pub(crate) fn momentum_about_origin(tree: &KinematicTree, kin: &Kinematics, vel: &BodyVelocities) -> Vector6<f64> {
    let mut lin = Vector3::zeros();
    let mut ang = Vector3::zeros();
    for b in 0..=tree.joint_count() {
        let m = body_mass(tree, b);
        let p = vel.com_linear[b] * m;
        lin += p;
        ang += kin.com[b].cross(&p) + kin.inertia[b] * vel.angular[b];
    }
    Vector6::new(lin.x, lin.y, lin.z, ang.x, ang.y, ang.z)
}

pub(crate) fn body_mass(tree: &KinematicTree, b: usize) -> f64 {
    if b == 0 {
        tree.base().mass()
    } else {
        tree.links()[b - 1].inertia.mass()
    }
}

/// Momentum about the origin split into the part driven by the base twist
/// (`6x6` block) and the part driven by the joint rates.
pub(crate) fn base_momentum_split(
    tree: &KinematicTree,
    kin: &Kinematics,
    qdot: &[f64],
) -> (Matrix6<f64>, Vector6<f64>) {
    let mut a_base = Matrix6::zeros();
    let mut from_joints = Vector6::zeros();
    let mut cols = alloc::vec::Vec::new();
    let mut lin = alloc::vec::Vec::new();
    let mut ang = alloc::vec::Vec::new();
    for b in 0..=tree.joint_count() {
        let m = body_mass(tree, b);
        let c = kin.com[b];
        kin.point_jacobian(tree, b, &c, &mut cols, &mut lin, &mut ang);
        for x in 0..cols.len() {
            let p = lin[x] * m;
            let h = c.cross(&p) + kin.inertia[b] * ang[x];
            let col = Vector6::new(p.x, p.y, p.z, h.x, h.y, h.z);
            if cols[x] < 6 {
                let mut target = a_base.column_mut(cols[x]);
                target += col;
            } else {
                from_joints += col * qdot[cols[x] - 6];
            }
        }
    }
    (a_base, from_joints)
}
