//! Robot presets: the four-arm 6-DoF space robot and a two-arm 3-DoF
//! desk-scale variant, plus the per-arm target sampling volumes.
//!
//! Link parameters are representative UR5-like values (masses and lengths),
//! not datasheet ground truth; every experiment reads them from the config.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use crate::dynamics::{
    Capsule, EndEffector, JointLimits, KinematicTree, Kinematics, Link, SpatialInertia, SystemState,
};
use crate::error::{config_err, Result};
use crate::math::rotation_from_euler_xyz;

/// Current version of the robot model schema.
pub const MODEL_VERSION: u32 = 1;

/// Base face an arm is mounted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Face {
    #[cfg_attr(feature = "serde", serde(rename = "+x"))]
    PosX,
    #[cfg_attr(feature = "serde", serde(rename = "-x"))]
    NegX,
    #[cfg_attr(feature = "serde", serde(rename = "+y"))]
    PosY,
    #[cfg_attr(feature = "serde", serde(rename = "-y"))]
    NegY,
    #[cfg_attr(feature = "serde", serde(rename = "+z"))]
    PosZ,
    #[cfg_attr(feature = "serde", serde(rename = "-z"))]
    NegZ,
}

impl Face {
    pub fn normal(self) -> Vector3<f64> {
        match self {
            Face::PosX => Vector3::x(),
            Face::NegX => -Vector3::x(),
            Face::PosY => Vector3::y(),
            Face::NegY => -Vector3::y(),
            Face::PosZ => Vector3::z(),
            Face::NegZ => -Vector3::z(),
        }
    }

    /// Mount frame in base coordinates: `z` along the outward normal, `x`
    /// along base `+z` for lateral faces (base `+x` for the top and bottom).
    pub fn mount_rotation(self) -> Matrix3<f64> {
        let z = self.normal();
        let x = match self {
            Face::PosZ | Face::NegZ => Vector3::x(),
            _ => Vector3::z(),
        };
        let y = z.cross(&x);
        Matrix3::from_columns(&[x, y, z])
    }
}

/// One row of the per-arm link table. Vectors are in the joint frame.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinkParams {
    pub name: String,
    pub mass: f64,
    pub com: [f64; 3],
    /// `[ixx, iyy, izz, ixy, ixz, iyz]` about the COM, kg m^2.
    pub inertia: [f64; 6],
    pub axis: [f64; 3],
    /// Joint position in the parent frame.
    pub mount_xyz: [f64; 3],
    /// Fixed joint-frame rotation relative to the parent, intrinsic X-Y-Z.
    pub mount_rpy: [f64; 3],
    pub capsule_start: [f64; 3],
    pub capsule_end: [f64; 3],
    pub capsule_radius: f64,
    pub q_max: f64,
    pub qdot_max: f64,
    pub tau_max: f64,
    /// Velocity-tracking gains of the fixed PD driver.
    pub kp: f64,
    pub kd: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RobotConfig {
    pub name: String,
    pub model_version: u32,
    pub base_mass: f64,
    pub base_half_extent: f64,
    pub arm_count: usize,
    pub joints_per_arm: usize,
    /// One face per arm.
    pub mounts: Vec<Face>,
    /// `joints_per_arm` rows, shared by every arm.
    pub links: Vec<LinkParams>,
    /// Tool point in the last link frame.
    pub end_effector_offset: [f64; 3],
    /// Edge of the cubic target sampling volume in front of each arm.
    pub target_box_edge: f64,
}

/// Fixed PD gains, one entry per joint of the whole robot.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveGains {
    pub kp: Vec<f64>,
    pub kd: Vec<f64>,
}

fn cylinder_inertia(mass: f64, length: f64, radius: f64, axis: Vector3<f64>) -> [f64; 6] {
    let u = axis.normalize();
    let axial = 0.5 * mass * radius * radius;
    let transverse = mass * (3.0 * radius * radius + length * length) / 12.0;
    let m = Matrix3::identity() * transverse + u * u.transpose() * (axial - transverse);
    [m[(0, 0)], m[(1, 1)], m[(2, 2)], m[(0, 1)], m[(0, 2)], m[(1, 2)]]
}

#[allow(clippy::too_many_arguments)]
fn rod_link(
    name: &str,
    mass: f64,
    axis: [f64; 3],
    mount_xyz: [f64; 3],
    mount_rpy: [f64; 3],
    end: [f64; 3],
    radius: f64,
    limits: (f64, f64, f64),
    gains: (f64, f64),
) -> LinkParams {
    let e = Vector3::from(end);
    let length = e.norm();
    LinkParams {
        name: name.to_string(),
        mass,
        com: [0.5 * end[0], 0.5 * end[1], 0.5 * end[2]],
        inertia: cylinder_inertia(mass, length, radius, e),
        axis,
        mount_xyz,
        mount_rpy,
        capsule_start: [0.0; 3],
        capsule_end: end,
        capsule_radius: radius,
        q_max: limits.0,
        qdot_max: limits.1,
        tau_max: limits.2,
        kp: gains.0,
        kd: gains.1,
    }
}

impl RobotConfig {
    /// Four UR5-like 6-DoF arms on the lateral faces of a 400 kg cube.
    pub fn full4() -> Self {
        let big = (2.0 * PI, PI, 150.0);
        let small = (2.0 * PI, PI, 28.0);
        let links = vec![
            rod_link("shoulder", 3.7, [0., 0., 1.], [0.; 3], [0.; 3], [0., 0., 0.089], 0.06, big, (60.0, 0.0)),
            rod_link("upper_arm", 8.393, [0., 1., 0.], [0., 0., 0.089], [0.; 3], [0., 0., 0.425], 0.055, big, (90.0, 0.0)),
            rod_link("forearm", 2.275, [0., 1., 0.], [0., 0., 0.425], [0., PI / 2.0, 0.], [0., 0., 0.392], 0.045, big, (20.0, 0.0)),
            rod_link("wrist_1", 1.219, [0., 1., 0.], [0., 0., 0.392], [0.; 3], [0., 0., 0.095], 0.04, small, (1.0, 0.0)),
            rod_link("wrist_2", 1.219, [1., 0., 0.], [0., 0., 0.095], [0.; 3], [0., 0., 0.095], 0.04, small, (0.6, 0.0)),
            rod_link("wrist_3", 0.1879, [0., 0., 1.], [0., 0., 0.095], [0.; 3], [0., 0., 0.0823], 0.035, small, (0.02, 0.0)),
        ];
        Self {
            name: "full4".to_string(),
            model_version: MODEL_VERSION,
            base_mass: 400.0,
            base_half_extent: 0.8726 / 2.0,
            arm_count: 4,
            joints_per_arm: 6,
            mounts: vec![Face::PosX, Face::PosY, Face::NegX, Face::NegY],
            links,
            end_effector_offset: [0.0, 0.0, 0.0823],
            target_box_edge: 0.3,
        }
    }

    /// Two 3-DoF arms on opposite faces of a light base; the CI training target.
    ///
    /// Each arm is a yaw-pitch-pitch chain (shoulder about base `z`, then two
    /// pitch joints with a bent elbow), which keeps the reaching Jacobian well
    /// conditioned at home while giving the pair of arms authority over all
    /// three base rotation directions.
    pub fn desk2() -> Self {
        let lim = (PI, 2.0, 20.0);
        let links = vec![
            rod_link("shoulder", 1.0, [1., 0., 0.], [0.; 3], [0.; 3], [0., 0., 0.1], 0.04, lim, (8.0, 0.0)),
            rod_link("upper_arm", 2.0, [0., 1., 0.], [0., 0., 0.1], [0.; 3], [0., 0., 0.4], 0.04, lim, (6.0, 0.0)),
            rod_link("forearm", 1.5, [0., 1., 0.], [0., 0., 0.4], [0., -1.2, 0.], [0., 0., 0.35], 0.035, lim, (2.0, 0.0)),
        ];
        Self {
            name: "desk2".to_string(),
            model_version: MODEL_VERSION,
            base_mass: 12.0,
            base_half_extent: 0.2,
            arm_count: 2,
            joints_per_arm: 3,
            mounts: vec![Face::PosX, Face::NegX],
            links,
            end_effector_offset: [0.0, 0.0, 0.35],
            target_box_edge: 0.3,
        }
    }

    /// The desk2 arm on all four lateral faces of a heavier base; the desk
    /// scale counterpart of `full4` for mixed-task reassembly.
    pub fn desk4() -> Self {
        Self {
            name: "desk4".to_string(),
            base_mass: 16.0,
            arm_count: 4,
            mounts: vec![Face::PosX, Face::PosY, Face::NegX, Face::NegY],
            ..Self::desk2()
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "full4" => Some(Self::full4()),
            "desk2" => Some(Self::desk2()),
            "desk4" => Some(Self::desk4()),
            _ => None,
        }
    }

    pub fn joint_count(&self) -> usize {
        self.arm_count * self.joints_per_arm
    }

    pub fn validate(&self) -> Result<()> {
        if self.model_version != MODEL_VERSION {
            return Err(crate::Error::Version(alloc::format!(
                "model_version {} is not supported (expected {MODEL_VERSION})",
                self.model_version
            )));
        }
        if self.arm_count < 1 {
            return Err(config_err!("arm_count must be at least 1"));
        }
        if self.joints_per_arm != 3 && self.joints_per_arm != 6 {
            return Err(config_err!("joints_per_arm must be 3 or 6, got {}", self.joints_per_arm));
        }
        if self.links.len() != self.joints_per_arm {
            return Err(config_err!(
                "link table has {} rows but joints_per_arm is {}",
                self.links.len(),
                self.joints_per_arm
            ));
        }
        if self.mounts.len() != self.arm_count {
            return Err(config_err!("{} mounts given for {} arms", self.mounts.len(), self.arm_count));
        }
        for (i, f) in self.mounts.iter().enumerate() {
            if self.mounts[..i].contains(f) {
                return Err(config_err!("two arms mounted on face {f:?}"));
            }
        }
        if !(self.base_mass > 0.0) || !(self.base_half_extent > 0.0) || !(self.target_box_edge > 0.0) {
            return Err(config_err!("base mass, base size and target box edge must be positive"));
        }
        Ok(())
    }

    pub fn drive_gains(&self) -> DriveGains {
        let per_arm = |f: fn(&LinkParams) -> f64| -> Vec<f64> {
            (0..self.arm_count).flat_map(|_| self.links.iter().map(f)).collect()
        };
        DriveGains { kp: per_arm(|l| l.kp), kd: per_arm(|l| l.kd) }
    }
}

/// Builds the kinematic tree: arm `a` owns joints `a * joints_per_arm ..`.
pub fn build_space_robot(config: &RobotConfig) -> Result<KinematicTree> {
    config.validate()?;
    let h = config.base_half_extent;
    let base = SpatialInertia::solid_box(config.base_mass, Vector3::new(h, h, h))?;
    let mut links = Vec::with_capacity(config.joint_count());
    let mut q_max = Vec::new();
    let mut qdot_max = Vec::new();
    let mut tau_max = Vec::new();
    let mut end_effectors = Vec::new();
    for (arm, face) in config.mounts.iter().enumerate() {
        for (k, p) in config.links.iter().enumerate() {
            let i = links.len();
            let [ixx, iyy, izz, ixy, ixz, iyz] = p.inertia;
            let inertia = Matrix3::new(ixx, ixy, ixz, ixy, iyy, iyz, ixz, iyz, izz);
            let inertia = SpatialInertia::new(p.mass, Vector3::from(p.com), inertia)
                .map_err(|e| config_err!("arm {arm} link '{}': {e}", p.name))?;
            let axis = Vector3::from(p.axis);
            let norm = axis.norm();
            if !(norm > 0.0) {
                return Err(config_err!("link '{}' has a zero joint axis", p.name));
            }
            let (parent, mount_rotation, mount_translation) = if k == 0 {
                let r = face.mount_rotation();
                (None, r * rotation_from_euler_xyz(p.mount_rpy), face.normal() * h + r * Vector3::from(p.mount_xyz))
            } else {
                (Some(i - 1), rotation_from_euler_xyz(p.mount_rpy), Vector3::from(p.mount_xyz))
            };
            links.push(Link {
                parent,
                arm,
                axis: axis / norm,
                mount_translation,
                mount_rotation,
                inertia,
                capsule: Capsule {
                    start: Vector3::from(p.capsule_start),
                    end: Vector3::from(p.capsule_end),
                    radius: p.capsule_radius,
                },
            });
            q_max.push(p.q_max);
            qdot_max.push(p.qdot_max);
            tau_max.push(p.tau_max);
        }
        end_effectors.push(EndEffector { link: links.len() - 1, offset: Vector3::from(config.end_effector_offset) });
    }
    KinematicTree::new(base, Vector3::new(h, h, h), links, JointLimits { q_max, qdot_max, tau_max }, end_effectors)
}

/// Axis-aligned cube, world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetVolume {
    pub center: Vector3<f64>,
    pub edge: f64,
}

impl TargetVolume {
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        let h = 0.5 * self.edge;
        (p - self.center).iter().all(|d| d.abs() <= h)
    }
}

/// Target sampling cube in front of `arm`, centred on its home tool point
/// with the base at the identity pose.
pub fn default_targets_volume(tree: &KinematicTree, arm: usize, edge: f64) -> Result<TargetVolume> {
    if arm >= tree.arm_count() {
        return Err(config_err!("arm index {arm} out of range (robot has {} arms)", tree.arm_count()));
    }
    let home = SystemState::at_rest(tree.joint_count());
    let kin = Kinematics::new(tree, &home);
    let (center, _) = kin.end_effector(tree, arm);
    Ok(TargetVolume { center, edge })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{check_collision, system_com};

    #[test]
    fn default_robot_matches_published_geometry() {
        let cfg = RobotConfig::full4();
        let tree = build_space_robot(&cfg).unwrap();
        assert_eq!(tree.base().mass(), 400.0);
        assert_eq!(2.0 * tree.base_half_extents().x, 0.8726);
        assert_eq!(tree.joint_count(), 24);
        assert_eq!(tree.arm_count(), 4);
    }

    #[test]
    fn desk_unit_robot_counts_joints() {
        let mut cfg = RobotConfig::desk2();
        cfg.arm_count = 1;
        cfg.mounts.truncate(1);
        assert_eq!(build_space_robot(&cfg).unwrap().joint_count(), 3);
        assert_eq!(build_space_robot(&RobotConfig::desk2()).unwrap().joint_count(), 6);
    }

    #[test]
    fn inconsistent_tables_are_rejected() {
        let mut cfg = RobotConfig::full4();
        cfg.links.pop();
        assert!(matches!(build_space_robot(&cfg), Err(crate::Error::Config(_))));
        let mut cfg = RobotConfig::full4();
        cfg.mounts[1] = Face::PosX;
        assert!(build_space_robot(&cfg).is_err());
        let mut cfg = RobotConfig::desk2();
        cfg.joints_per_arm = 4;
        assert!(build_space_robot(&cfg).is_err());
    }

    #[test]
    fn symmetric_home_com_lies_on_vertical_axis() {
        for cfg in [RobotConfig::full4(), RobotConfig::desk2()] {
            let tree = build_space_robot(&cfg).unwrap();
            let home = SystemState::at_rest(tree.joint_count());
            // Independent summation over the body COMs.
            let kin = Kinematics::new(&tree, &home);
            let mut weighted = kin.com[0] * tree.base().mass();
            for (i, l) in tree.links().iter().enumerate() {
                weighted += kin.com[i + 1] * l.inertia.mass();
            }
            let com = weighted / tree.total_mass();
            assert!(com.x.abs() < 1e-12 && com.y.abs() < 1e-12, "{}: {com:?}", cfg.name);
            assert!((system_com(&tree, &home).unwrap() - com).norm() < 1e-14);
        }
    }

    #[test]
    fn total_mass_is_exact_sum() {
        let cfg = RobotConfig::full4();
        let tree = build_space_robot(&cfg).unwrap();
        let expected = cfg.base_mass + 4.0 * cfg.links.iter().map(|l| l.mass).sum::<f64>();
        assert!((tree.total_mass() - expected).abs() < 1e-12);
    }

    #[test]
    fn build_is_deterministic() {
        let a = build_space_robot(&RobotConfig::full4()).unwrap();
        let b = build_space_robot(&RobotConfig::full4()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn home_is_collision_free() {
        for cfg in [RobotConfig::full4(), RobotConfig::desk2()] {
            let tree = build_space_robot(&cfg).unwrap();
            let home = SystemState::at_rest(tree.joint_count());
            assert_eq!(check_collision(&tree, &home).unwrap(), None, "{}", cfg.name);
        }
    }

    #[test]
    fn target_volumes() {
        let tree = build_space_robot(&RobotConfig::full4()).unwrap();
        let boxes: Vec<_> = (0..4).map(|a| default_targets_volume(&tree, a, 0.3).unwrap()).collect();
        assert_eq!(boxes[0].edge, 0.3);
        // Opposite arms: 180 degree rotation about the base z axis.
        for (a, b) in [(0, 2), (1, 3)] {
            let c = boxes[a].center;
            let d = boxes[b].center;
            assert!((Vector3::new(-c.x, -c.y, c.z) - d).norm() < 1e-12);
        }
        // Box centre reachable: within the summed link lengths from the mount.
        let cfg = RobotConfig::full4();
        let reach: f64 = cfg.links.iter().map(|l| Vector3::from(l.mount_xyz).norm()).sum::<f64>()
            + Vector3::from(cfg.end_effector_offset).norm();
        for (arm, face) in cfg.mounts.iter().enumerate() {
            let mount = face.normal() * cfg.base_half_extent;
            assert!((boxes[arm].center - mount).norm() <= reach);
            // In front of the mount face.
            assert!((boxes[arm].center - mount).dot(&face.normal()) > 0.0);
        }
        assert!(default_targets_volume(&tree, 4, 0.3).is_err());
    }
}
