use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, Vector3};

use super::kinematics::{BodyVelocities, Kinematics};
use super::{KinematicTree, SystemState};
use crate::error::{input_err, Error, Result};

/// Body a wrench or query refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum BodyId {
    Base,
    Link(usize),
}

impl BodyId {
    pub(crate) fn index(self) -> usize {
        match self {
            BodyId::Base => 0,
            BodyId::Link(i) => i + 1,
        }
    }
}

/// Force through the body COM plus a free torque, world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrench {
    pub body: BodyId,
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
}

/// Time derivative of the generalized velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct Accelerations {
    pub base_linear: Vector3<f64>,
    pub base_angular: Vector3<f64>,
    pub qddot: Vec<f64>,
}

/// Equations of motion `M(q) a + h(q, v) = Q` assembled at one state.
///
/// Coordinates are `[v_base (3), w_base (3), qdot (n)]` with world-frame base
/// velocities, so `M` is the joint-space inertia of the whole floating system.
#[derive(Debug, Clone)]
pub struct EquationsOfMotion {
    pub mass: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub kin: Kinematics,
}

impl EquationsOfMotion {
    pub fn new(tree: &KinematicTree, state: &SystemState) -> Self {
        let kin = Kinematics::new(tree, state);
        let vel = BodyVelocities::new(tree, &kin, state);
        let n = tree.dof();
        let nb = tree.joint_count() + 1;
        let mut mass = DMatrix::zeros(n, n);
        let mut bias = DVector::zeros(n);

        // Velocity-product accelerations (generalized accelerations set to zero).
        let mut alpha: Vec<Vector3<f64>> = Vec::with_capacity(nb);
        let mut acc_origin: Vec<Vector3<f64>> = Vec::with_capacity(nb);
        alpha.push(Vector3::zeros());
        acc_origin.push(Vector3::zeros());
        for (i, link) in tree.links().iter().enumerate() {
            let p = link.parent.map_or(0, |p| p + 1);
            let wp = vel.angular[p];
            let r = kin.link_position[i] - kin.body_origin(p);
            acc_origin.push(acc_origin[p] + alpha[p].cross(&r) + wp.cross(&wp.cross(&r)));
            alpha.push(alpha[p] + wp.cross(&kin.joint_axis[i]) * state.qdot[i]);
        }

        let mut cols = Vec::new();
        let mut lin = Vec::new();
        let mut ang = Vec::new();
        for b in 0..nb {
            let (m, inertia) = if b == 0 {
                (tree.base().mass(), kin.inertia[0])
            } else {
                (tree.links()[b - 1].inertia.mass(), kin.inertia[b])
            };
            let c = kin.com[b];
            kin.point_jacobian(tree, b, &c, &mut cols, &mut lin, &mut ang);
            let k = cols.len();
            let mut iw: Vec<Vector3<f64>> = Vec::with_capacity(k);
            iw.extend(ang.iter().map(|a| inertia * a));
            for x in 0..k {
                for y in x..k {
                    let v = m * lin[x].dot(&lin[y]) + ang[x].dot(&iw[y]);
                    mass[(cols[x], cols[y])] += v;
                    if x != y {
                        mass[(cols[y], cols[x])] += v;
                    }
                }
            }
            let w = vel.angular[b];
            let rc = c - kin.body_origin(b);
            let acc_com = acc_origin[b] + alpha[b].cross(&rc) + w.cross(&w.cross(&rc));
            let force = acc_com * m;
            let torque = inertia * alpha[b] + w.cross(&(inertia * w));
            for x in 0..k {
                bias[cols[x]] += lin[x].dot(&force) + ang[x].dot(&torque);
            }
        }
        Self { mass, bias, kin }
    }

    /// Generalized force produced by world-frame wrenches.
    pub fn wrench_force(&self, tree: &KinematicTree, wrenches: &[Wrench], out: &mut DVector<f64>) -> Result<()> {
        let mut cols = Vec::new();
        let mut lin = Vec::new();
        let mut ang = Vec::new();
        for w in wrenches {
            let b = w.body.index();
            if b > tree.joint_count() {
                return Err(input_err!("wrench applied to missing body {:?}", w.body));
            }
            let c = self.kin.com[b];
            self.kin.point_jacobian(tree, b, &c, &mut cols, &mut lin, &mut ang);
            for x in 0..cols.len() {
                out[cols[x]] += lin[x].dot(&w.force) + ang[x].dot(&w.torque);
            }
        }
        Ok(())
    }

    pub fn solve(&self, rhs: DVector<f64>) -> Result<DVector<f64>> {
        let chol = self
            .mass
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Internal("generalized mass matrix is not positive definite".into()))?;
        Ok(chol.solve(&rhs))
    }
}

/// Clamps joint torques to the actuator limits.
pub fn clamp_torques(tree: &KinematicTree, torques: &[f64]) -> Result<Vec<f64>> {
    if torques.len() != tree.joint_count() {
        return Err(crate::error::config_err!(
            "{} joint torques given for {} joints",
            torques.len(),
            tree.joint_count()
        ));
    }
    if let Some(t) = torques.iter().find(|t| !t.is_finite()) {
        return Err(input_err!("non-finite joint torque {t}"));
    }
    Ok(torques
        .iter()
        .zip(&tree.limits().tau_max)
        .map(|(t, m)| t.clamp(-m, *m))
        .collect())
}

/// Floating-base forward dynamics in zero gravity.
///
/// Torques beyond the actuator limits are clamped. External wrenches act
/// through the COM of their body.
pub fn forward_dynamics(
    tree: &KinematicTree,
    state: &SystemState,
    joint_torques: &[f64],
    external_wrenches: &[Wrench],
) -> Result<Accelerations> {
    state.check_dims(tree)?;
    let tau = clamp_torques(tree, joint_torques)?;
    let eom = EquationsOfMotion::new(tree, state);
    accelerations_from(&eom, tree, &tau, external_wrenches, &[])
}

/// Solves the equations of motion. Joints flagged in `locked` (empty slice:
/// none) are held rigid: their accelerations are zero and the remaining
/// coordinates obey the reduced system.
pub(crate) fn accelerations_from(
    eom: &EquationsOfMotion,
    tree: &KinematicTree,
    tau: &[f64],
    wrenches: &[Wrench],
    locked: &[bool],
) -> Result<Accelerations> {
    let n = tree.dof();
    let mut rhs = DVector::from_element(n, 0.0);
    for (j, t) in tau.iter().enumerate() {
        rhs[6 + j] = *t;
    }
    eom.wrench_force(tree, wrenches, &mut rhs)?;
    rhs -= &eom.bias;
    let a = if locked.iter().any(|&l| l) {
        let free: Vec<usize> = (0..n).filter(|&i| i < 6 || !locked[i - 6]).collect();
        let m = DMatrix::from_fn(free.len(), free.len(), |r, c| eom.mass[(free[r], free[c])]);
        let r = DVector::from_fn(free.len(), |r, _| rhs[free[r]]);
        let chol = m
            .cholesky()
            .ok_or_else(|| Error::Internal("reduced mass matrix is not positive definite".into()))?;
        let sol = chol.solve(&r);
        let mut a = DVector::from_element(n, 0.0);
        for (k, &i) in free.iter().enumerate() {
            a[i] = sol[k];
        }
        a
    } else {
        eom.solve(rhs)?
    };
    Ok(Accelerations {
        base_linear: Vector3::new(a[0], a[1], a[2]),
        base_angular: Vector3::new(a[3], a[4], a[5]),
        qddot: a.as_slice()[6..].to_vec(),
    })
}

/// Joint-space inertia of the floating system at `state`.
pub fn mass_matrix(tree: &KinematicTree, state: &SystemState) -> Result<DMatrix<f64>> {
    state.check_dims(tree)?;
    Ok(EquationsOfMotion::new(tree, state).mass)
}

/// Generalized forces needed to produce `accel` (`[dv_base, dw_base, qddot]`)
/// at `state`, by Newton-Euler recursion over body accelerations.
pub fn inverse_dynamics(tree: &KinematicTree, state: &SystemState, accel: &[f64]) -> Result<Vec<f64>> {
    state.check_dims(tree)?;
    let n = tree.dof();
    if accel.len() != n {
        return Err(crate::error::config_err!("acceleration has {} entries, expected {n}", accel.len()));
    }
    let kin = Kinematics::new(tree, state);
    let vel = BodyVelocities::new(tree, &kin, state);
    let nb = tree.joint_count() + 1;
    let mut alpha: Vec<Vector3<f64>> = Vec::with_capacity(nb);
    let mut acc_origin: Vec<Vector3<f64>> = Vec::with_capacity(nb);
    alpha.push(Vector3::new(accel[3], accel[4], accel[5]));
    acc_origin.push(Vector3::new(accel[0], accel[1], accel[2]));
    for (i, link) in tree.links().iter().enumerate() {
        let p = link.parent.map_or(0, |p| p + 1);
        let wp = vel.angular[p];
        let r = kin.link_position[i] - kin.body_origin(p);
        acc_origin.push(acc_origin[p] + alpha[p].cross(&r) + wp.cross(&wp.cross(&r)));
        let a = kin.joint_axis[i];
        alpha.push(alpha[p] + wp.cross(&a) * state.qdot[i] + a * accel[6 + i]);
    }
    let mut out = vec![0.0; n];
    let mut cols = Vec::new();
    let mut lin = Vec::new();
    let mut ang = Vec::new();
    for b in 0..nb {
        let m = if b == 0 { tree.base().mass() } else { tree.links()[b - 1].inertia.mass() };
        let inertia = kin.inertia[b];
        let w = vel.angular[b];
        let c = kin.com[b];
        let rc = c - kin.body_origin(b);
        let acc_com = acc_origin[b] + alpha[b].cross(&rc) + w.cross(&w.cross(&rc));
        let force = acc_com * m;
        let torque = inertia * alpha[b] + w.cross(&(inertia * w));
        kin.point_jacobian(tree, b, &c, &mut cols, &mut lin, &mut ang);
        for x in 0..cols.len() {
            out[cols[x]] += lin[x].dot(&force) + ang[x].dot(&torque);
        }
    }
    Ok(out)
}

/// Generalized mass matrix probed through [`inverse_dynamics`] with unit
/// accelerations: column `k` is `ID(e_k) - ID(0)`.
pub fn probe_mass_matrix(tree: &KinematicTree, state: &SystemState) -> Result<DMatrix<f64>> {
    let n = tree.dof();
    let zero = vec![0.0; n];
    let bias = inverse_dynamics(tree, state, &zero)?;
    let mut m = DMatrix::zeros(n, n);
    let mut unit = zero;
    for k in 0..n {
        unit[k] = 1.0;
        let q = inverse_dynamics(tree, state, &unit)?;
        unit[k] = 0.0;
        for r in 0..n {
            m[(r, k)] = q[r] - bias[r];
        }
    }
    Ok(m)
}
