use alloc::vec::Vec;

use nalgebra::{Vector3, Vector6};

use super::forward::{accelerations_from, clamp_torques, EquationsOfMotion, Wrench};
use super::kinematics::{BodyVelocities, Kinematics};
use super::momentum::{base_momentum_split, momentum_about_origin, system_com_from};
use super::{KinematicTree, SystemState};
use crate::error::{input_err, Error, Result};
use crate::math::quaternion_exp;

/// Internal dynamics step used by the environment.
pub const DEFAULT_DT: f64 = 1e-3;

/// Advances the state by `dt` with no external wrenches.
pub fn step(tree: &KinematicTree, state: &SystemState, joint_torques: &[f64], dt: f64) -> Result<SystemState> {
    step_with_wrenches(tree, state, joint_torques, &[], dt)
}

/// Semi-implicit Euler step.
///
/// Velocities are updated first and positions integrated with the new
/// velocities. Joint rates and angles are then clamped to their limits (rate
/// zeroed when an angle limit is hit) and the base twist is re-solved at the
/// new configuration so that the total momentum equals the momentum before the
/// step plus the impulse of the external wrenches. The base is also shifted so
/// that the system centre of mass advances by exactly `P dt / M`. A
/// free-floating robot thus conserves momentum to round-off regardless of the
/// step size.
pub fn step_with_wrenches(
    tree: &KinematicTree,
    state: &SystemState,
    joint_torques: &[f64],
    external_wrenches: &[Wrench],
    dt: f64,
) -> Result<SystemState> {
    step_constrained(tree, state, joint_torques, external_wrenches, &[], dt)
}

/// Like [`step_with_wrenches`], with the joints flagged in `locked` held at
/// their current angle with zero rate (an empty slice locks nothing).
pub fn step_constrained(
    tree: &KinematicTree,
    state: &SystemState,
    joint_torques: &[f64],
    external_wrenches: &[Wrench],
    locked: &[bool],
    dt: f64,
) -> Result<SystemState> {
    state.check_dims(tree)?;
    if !locked.is_empty() && locked.len() != tree.joint_count() {
        return Err(crate::error::config_err!("lock mask has {} entries for {} joints", locked.len(), tree.joint_count()));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(input_err!("time step must be positive, got {dt}"));
    }
    let tau = clamp_torques(tree, joint_torques)?;
    let eom = EquationsOfMotion::new(tree, state);
    let acc = accelerations_from(&eom, tree, &tau, external_wrenches, locked)?;

    let vel = BodyVelocities::new(tree, &eom.kin, state);
    let mut momentum = momentum_about_origin(tree, &eom.kin, &vel);
    for w in external_wrenches {
        let c = eom.kin.com[w.body.index()];
        let t = c.cross(&w.force) + w.torque;
        momentum += Vector6::new(w.force.x, w.force.y, w.force.z, t.x, t.y, t.z) * dt;
    }

    let limits = tree.limits();
    let mut next = state.clone();
    next.base_linear_velocity += acc.base_linear * dt;
    next.base_angular_velocity += acc.base_angular * dt;
    for j in 0..tree.joint_count() {
        let vmax = limits.qdot_max[j];
        next.qdot[j] = if locked.get(j) == Some(&true) {
            0.0
        } else {
            (state.qdot[j] + acc.qddot[j] * dt).clamp(-vmax, vmax)
        };
    }

    next.base_position += next.base_linear_velocity * dt;
    next.base_orientation = quaternion_exp(&(next.base_angular_velocity * dt)) * state.base_orientation;
    next.base_orientation.renormalize();
    for j in 0..tree.joint_count() {
        let qmax = limits.q_max[j];
        let q = state.q[j] + next.qdot[j] * dt;
        if q > qmax {
            next.q[j] = qmax;
            next.qdot[j] = next.qdot[j].min(0.0);
        } else if q < -qmax {
            next.q[j] = -qmax;
            next.qdot[j] = next.qdot[j].max(0.0);
        } else {
            next.q[j] = q;
        }
    }

    // Move the system centre of mass exactly along the momentum so that the
    // angular momentum about it is preserved along with that about the origin.
    let com_before = system_com_from(tree, &eom.kin);
    let lin = Vector3::new(momentum[0], momentum[1], momentum[2]);
    let com_target = com_before + lin * (dt / tree.total_mass());
    let com_now = system_com_from(tree, &Kinematics::new(tree, &next));
    next.base_position += com_target - com_now;

    let kin = Kinematics::new(tree, &next);
    let (a_base, from_joints) = base_momentum_split(tree, &kin, &next.qdot);
    let twist = a_base
        .lu()
        .solve(&(momentum - from_joints))
        .ok_or_else(|| Error::Internal("base momentum block is singular".into()))?;
    next.base_linear_velocity = Vector3::new(twist[0], twist[1], twist[2]);
    next.base_angular_velocity = Vector3::new(twist[3], twist[4], twist[5]);
    next.time = state.time + dt;

    if !next.q.iter().chain(next.qdot.iter()).all(|x| x.is_finite()) || !twist.iter().all(|x| x.is_finite()) {
        return Err(Error::Internal(alloc::format!("non-finite state at t = {}", next.time)));
    }
    Ok(next)
}

/// Runs `steps` consecutive steps with constant torques, returning every state.
pub fn rollout(
    tree: &KinematicTree,
    state: &SystemState,
    joint_torques: &[f64],
    dt: f64,
    steps: usize,
) -> Result<Vec<SystemState>> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(state.clone());
    for _ in 0..steps {
        let next = step(tree, out.last().unwrap(), joint_torques, dt)?;
        out.push(next);
    }
    Ok(out)
}
