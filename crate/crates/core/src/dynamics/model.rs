use alloc::vec::Vec;

use nalgebra::{Matrix3, Vector3};

use crate::error::{config_err, Result};

/// Mass properties of one rigid body, expressed in the body frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialInertia {
    mass: f64,
    com: Vector3<f64>,
    inertia: Matrix3<f64>,
}

impl SpatialInertia {
    /// `inertia` is the rotational inertia about the COM in body axes.
    pub fn new(mass: f64, com: Vector3<f64>, inertia: Matrix3<f64>) -> Result<Self> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(config_err!("body mass must be positive, got {mass}"));
        }
        if !com.iter().all(|c| c.is_finite()) || !inertia.iter().all(|c| c.is_finite()) {
            return Err(config_err!("non-finite mass properties"));
        }
        let scale = inertia.abs().max().max(f64::MIN_POSITIVE);
        if (inertia - inertia.transpose()).abs().max() > 1e-12 * scale {
            return Err(config_err!("rotational inertia is not symmetric"));
        }
        let eig = nalgebra::SymmetricEigen::new(inertia);
        let mut p = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]];
        if p.iter().any(|&v| v <= 0.0) {
            return Err(config_err!("rotational inertia is not positive definite"));
        }
        p.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if p[0] + p[1] < p[2] * (1.0 - 1e-9) {
            return Err(config_err!(
                "principal moments {:?} violate the triangle inequality",
                p
            ));
        }
        Ok(Self { mass, com, inertia })
    }

    /// Inertia from principal moments aligned with the body axes.
    pub fn from_principal(mass: f64, com: Vector3<f64>, moments: [f64; 3]) -> Result<Self> {
        Self::new(mass, com, Matrix3::from_diagonal(&Vector3::from(moments)))
    }

    /// Uniform solid box centred on the body origin.
    pub fn solid_box(mass: f64, half_extents: Vector3<f64>) -> Result<Self> {
        let (x, y, z) = (2.0 * half_extents.x, 2.0 * half_extents.y, 2.0 * half_extents.z);
        let k = mass / 12.0;
        Self::from_principal(mass, Vector3::zeros(), [k * (y * y + z * z), k * (x * x + z * z), k * (x * x + y * y)])
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }
    pub fn com(&self) -> &Vector3<f64> {
        &self.com
    }
    pub fn inertia(&self) -> &Matrix3<f64> {
        &self.inertia
    }
}

/// Swept sphere around the segment `start..end` (link frame).
#[derive(Debug, Clone, PartialEq)]
pub struct Capsule {
    pub start: Vector3<f64>,
    pub end: Vector3<f64>,
    pub radius: f64,
}

impl Capsule {
    pub fn length(&self) -> f64 {
        (self.end - self.start).norm()
    }
}

/// Box constraints on joint motion. Every entry is a symmetric bound.
#[derive(Debug, Clone, PartialEq)]
pub struct JointLimits {
    pub q_max: Vec<f64>,
    pub qdot_max: Vec<f64>,
    pub tau_max: Vec<f64>,
}

impl JointLimits {
    pub fn validate(&self, joints: usize) -> Result<()> {
        for (name, v) in [("q_max", &self.q_max), ("qdot_max", &self.qdot_max), ("tau_max", &self.tau_max)] {
            if v.len() != joints {
                return Err(config_err!("{name} has {} entries, expected {joints}", v.len()));
            }
            if let Some(bad) = v.iter().find(|x| !(**x > 0.0)) {
                return Err(config_err!("{name} must be strictly positive, got {bad}"));
            }
        }
        Ok(())
    }
}

/// One revolute joint together with the body it moves.
///
/// The link frame is `parent_frame * (mount_rotation, mount_translation) * Rot(axis, q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    /// `None` attaches the link to the base.
    pub parent: Option<usize>,
    pub arm: usize,
    pub axis: Vector3<f64>,
    pub mount_translation: Vector3<f64>,
    pub mount_rotation: Matrix3<f64>,
    pub inertia: SpatialInertia,
    pub capsule: Capsule,
}

/// Tool point of an arm, rigidly attached to `link`.
#[derive(Debug, Clone, PartialEq)]
pub struct EndEffector {
    pub link: usize,
    pub offset: Vector3<f64>,
}

/// Floating base plus revolute chains, immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicTree {
    base: SpatialInertia,
    base_half_extents: Vector3<f64>,
    links: Vec<Link>,
    limits: JointLimits,
    end_effectors: Vec<EndEffector>,
    /// Joints on the path from each link to the base, ascending, self included.
    ancestors: Vec<Vec<usize>>,
}

impl KinematicTree {
    pub fn new(
        base: SpatialInertia,
        base_half_extents: Vector3<f64>,
        links: Vec<Link>,
        limits: JointLimits,
        end_effectors: Vec<EndEffector>,
    ) -> Result<Self> {
        if !base_half_extents.iter().all(|h| *h > 0.0) {
            return Err(config_err!("base half extents must be positive"));
        }
        limits.validate(links.len())?;
        let mut ancestors: Vec<Vec<usize>> = Vec::with_capacity(links.len());
        for (i, link) in links.iter().enumerate() {
            let norm = link.axis.norm();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(config_err!("joint {i} axis is not unit-norm (|a| = {norm})"));
            }
            let rot_err = (link.mount_rotation.transpose() * link.mount_rotation - Matrix3::identity()).abs().max();
            if rot_err > 1e-9 || link.mount_rotation.determinant() < 0.0 {
                return Err(config_err!("joint {i} mount rotation is not a proper rotation"));
            }
            if !(link.capsule.radius > 0.0) {
                return Err(config_err!("link {i} capsule radius must be positive"));
            }
            let mut chain = match link.parent {
                None => Vec::new(),
                Some(p) if p < i => {
                    if links[p].arm != link.arm {
                        return Err(config_err!("link {i} and its parent {p} belong to different arms"));
                    }
                    ancestors[p].clone()
                }
                Some(p) => {
                    return Err(config_err!("link {i} has parent {p}; links must be topologically ordered"));
                }
            };
            chain.push(i);
            ancestors.push(chain);
        }
        for (k, ee) in end_effectors.iter().enumerate() {
            if ee.link >= links.len() {
                return Err(config_err!("end effector {k} refers to missing link {}", ee.link));
            }
        }
        Ok(Self { base, base_half_extents, links, limits, end_effectors, ancestors })
    }

    pub fn base(&self) -> &SpatialInertia {
        &self.base
    }
    pub fn base_half_extents(&self) -> &Vector3<f64> {
        &self.base_half_extents
    }
    pub fn links(&self) -> &[Link] {
        &self.links
    }
    pub fn limits(&self) -> &JointLimits {
        &self.limits
    }
    pub fn end_effectors(&self) -> &[EndEffector] {
        &self.end_effectors
    }
    pub fn joint_count(&self) -> usize {
        self.links.len()
    }
    /// Size of the generalized velocity: six base coordinates plus the joints.
    pub fn dof(&self) -> usize {
        6 + self.links.len()
    }
    pub fn arm_count(&self) -> usize {
        self.end_effectors.len()
    }
    pub fn ancestors(&self, link: usize) -> &[usize] {
        &self.ancestors[link]
    }
    /// Joint indices belonging to `arm`, in tree order.
    pub fn arm_joints(&self, arm: usize) -> Vec<usize> {
        (0..self.links.len()).filter(|&i| self.links[i].arm == arm).collect()
    }
    pub fn total_mass(&self) -> f64 {
        self.base.mass + self.links.iter().map(|l| l.inertia.mass).sum::<f64>()
    }
    /// Copy of the tree with a different base mass; the base inertia scales with it.
    pub fn with_base_mass(&self, mass: f64) -> Result<Self> {
        let factor = mass / self.base.mass;
        let base = SpatialInertia::new(mass, self.base.com, self.base.inertia * factor)?;
        Ok(Self { base, ..self.clone() })
    }
}
