use alloc::vec::Vec;

use nalgebra::Vector3;

use crate::dynamics::{BodyId, KinematicTree, Kinematics, Wrench};
use crate::error::{config_err, Result};

/// How a disturbance wrench is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DisturbanceMode {
    /// Applied to the target body and reacted, at the same point, by its
    /// parent (the base for a first link): a torque disturbance at the joint
    /// that leaves the total momentum unchanged.
    #[default]
    Joint,
    /// Applied to the target body only; the system gains momentum.
    External,
}

/// A wrench pulse starting at `onset` (s) and lasting `duration` (s).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WrenchPulse {
    pub onset: f64,
    pub duration: f64,
    pub body: BodyId,
    /// N, world frame, through the body COM.
    pub force: Vector3<f64>,
    /// N m, world frame.
    pub torque: Vector3<f64>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub mode: DisturbanceMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DisturbanceSpec {
    pub pulse: Option<WrenchPulse>,
    /// Arm whose joints are locked at zero rate for the whole episode.
    pub failed_arm: Option<usize>,
}

pub const DEFAULT_ONSET: f64 = 7.5;

impl WrenchPulse {
    /// Pulse on the last link of `arm` at the default onset.
    pub fn on_arm_tip(tree: &KinematicTree, arm: usize, force: Vector3<f64>, torque: Vector3<f64>, duration: f64) -> Result<Self> {
        let ee = tree
            .end_effectors()
            .get(arm)
            .ok_or_else(|| config_err!("arm index {arm} out of range"))?;
        Ok(Self { onset: DEFAULT_ONSET, duration, body: BodyId::Link(ee.link), force, torque, mode: DisturbanceMode::Joint })
    }

    /// Half-open substep window `[start, end)` at step size `dt`.
    pub fn substep_window(&self, dt: f64) -> (u64, u64) {
        let start = libm::round(self.onset / dt) as u64;
        let len = libm::round(self.duration / dt).max(1.0) as u64;
        (start, start + len)
    }

    /// Wrenches to apply at the current configuration.
    pub fn wrenches(&self, tree: &KinematicTree, kin: &Kinematics) -> Vec<Wrench> {
        let mut out = alloc::vec![Wrench { body: self.body, force: self.force, torque: self.torque }];
        if self.mode == DisturbanceMode::Joint {
            let parent = match self.body {
                BodyId::Link(i) => match tree.links()[i].parent {
                    Some(p) => BodyId::Link(p),
                    None => BodyId::Base,
                },
                // A base disturbance has nothing to react against.
                BodyId::Base => return out,
            };
            let lever = kin.com[self.body.index()] - kin.com[parent.index()];
            out.push(Wrench { body: parent, force: -self.force, torque: -self.torque - lever.cross(&self.force) });
        }
        out
    }
}

impl DisturbanceSpec {
    pub fn validate(&self, tree: &KinematicTree, horizon: f64) -> Result<()> {
        if let Some(p) = &self.pulse {
            if !(p.duration > 0.0) {
                return Err(config_err!("disturbance duration must be positive"));
            }
            if !(p.onset >= 0.0) || p.onset >= horizon {
                return Err(config_err!("disturbance onset {} s is outside the {horizon} s episode", p.onset));
            }
            if p.body.index() > tree.joint_count() {
                return Err(config_err!("disturbance targets missing body {:?}", p.body));
            }
            if !(p.force.iter().chain(p.torque.iter()).all(|x| x.is_finite())) {
                return Err(config_err!("non-finite disturbance wrench"));
            }
        }
        if let Some(a) = self.failed_arm {
            if a >= tree.arm_count() {
                return Err(config_err!("failed arm {a} out of range"));
            }
        }
        Ok(())
    }
}
