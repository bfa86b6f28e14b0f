//! Capsule-per-link and box-base collision queries.

use alloc::vec::Vec;

use nalgebra::{Matrix3, Vector3};

use super::forward::BodyId;
use super::kinematics::Kinematics;
use super::{KinematicTree, SystemState};
use crate::error::Result;

/// A world-space segment with a radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldCapsule {
    pub a: Vector3<f64>,
    pub b: Vector3<f64>,
    pub radius: f64,
}

/// Oriented box given by centre, rotation (box axes as columns) and half extents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox {
    pub center: Vector3<f64>,
    pub rotation: Matrix3<f64>,
    pub half_extents: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionPair {
    pub first: BodyId,
    pub second: BodyId,
    pub distance: f64,
}

/// Squared distance between segments `p0..p1` and `q0..q1`.
fn segment_segment_sq(p0: &Vector3<f64>, p1: &Vector3<f64>, q0: &Vector3<f64>, q1: &Vector3<f64>) -> f64 {
    let d1 = p1 - p0;
    let d2 = q1 - q0;
    let r = p0 - q0;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);
    let eps = 1e-15;
    let (s, t);
    if a <= eps && e <= eps {
        return r.dot(&r);
    }
    if a <= eps {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= eps {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > eps * a * e { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    let diff = (p0 + d1 * s) - (q0 + d2 * t);
    diff.dot(&diff)
}

/// Distance between the axes of two capsules; symmetric in argument order.
pub fn segment_distance(a: &WorldCapsule, b: &WorldCapsule) -> f64 {
    let d1 = segment_segment_sq(&a.a, &a.b, &b.a, &b.b);
    let d2 = segment_segment_sq(&b.a, &b.b, &a.a, &a.b);
    libm::sqrt(d1.min(d2))
}

/// Exact distance from a segment to a solid box (zero when they overlap).
///
/// The squared distance along the segment is a convex piecewise quadratic
/// whose pieces change only where a coordinate crosses a box face plane; each
/// piece is minimized in closed form.
pub fn segment_box_distance(a: &Vector3<f64>, b: &Vector3<f64>, bx: &OrientedBox) -> f64 {
    let rt = bx.rotation.transpose();
    let p0 = rt * (a - bx.center);
    let d = rt * (b - a);
    let h = bx.half_extents;
    let mut breaks: Vec<f64> = Vec::with_capacity(8);
    breaks.push(0.0);
    for k in 0..3 {
        if d[k] != 0.0 {
            for bound in [-h[k], h[k]] {
                let t = (bound - p0[k]) / d[k];
                if t > 0.0 && t < 1.0 {
                    breaks.push(t);
                }
            }
        }
    }
    breaks.push(1.0);
    breaks.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let eval = |t: f64| -> f64 {
        let mut s = 0.0;
        for k in 0..3 {
            let x = p0[k] + t * d[k];
            let g = if x > h[k] { x - h[k] } else if x < -h[k] { -h[k] - x } else { 0.0 };
            s += g * g;
        }
        s
    };
    let mut best = eval(0.0).min(eval(1.0));
    for w in breaks.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        if t1 <= t0 {
            continue;
        }
        let mid = 0.5 * (t0 + t1);
        // g_k(t) = alpha + beta t on this piece.
        let (mut num, mut den) = (0.0, 0.0);
        for k in 0..3 {
            let x = p0[k] + mid * d[k];
            let (alpha, beta) = if x > h[k] {
                (p0[k] - h[k], d[k])
            } else if x < -h[k] {
                (-h[k] - p0[k], -d[k])
            } else {
                (0.0, 0.0)
            };
            num += alpha * beta;
            den += beta * beta;
        }
        let t = if den > 0.0 { (-num / den).clamp(t0, t1) } else { t0 };
        best = best.min(eval(t));
    }
    libm::sqrt(best)
}

/// Strict-inequality overlap test; touching shapes do not collide.
pub fn capsule_box_intersect(c: &WorldCapsule, bx: &OrientedBox) -> bool {
    segment_box_distance(&c.a, &c.b, bx) < c.radius
}

pub fn capsules_intersect(a: &WorldCapsule, b: &WorldCapsule) -> bool {
    segment_distance(a, b) < a.radius + b.radius
}

pub(crate) fn world_capsules(tree: &KinematicTree, kin: &Kinematics) -> Vec<WorldCapsule> {
    tree.links()
        .iter()
        .enumerate()
        .map(|(i, link)| {
            let r = kin.link_rotation[i];
            let o = kin.link_position[i];
            WorldCapsule { a: o + r * link.capsule.start, b: o + r * link.capsule.end, radius: link.capsule.radius }
        })
        .collect()
}

pub(crate) fn base_box(tree: &KinematicTree, kin: &Kinematics) -> OrientedBox {
    OrientedBox { center: kin.base_position, rotation: kin.base_rotation, half_extents: *tree.base_half_extents() }
}

/// First colliding pair, or `None`.
///
/// Checked pairs: every link not mounted directly on the base against the base
/// box, then every pair of links on different arms, in ascending index order.
pub fn check_collision(tree: &KinematicTree, state: &SystemState) -> Result<Option<CollisionPair>> {
    state.check_dims(tree)?;
    let kin = Kinematics::new(tree, state);
    Ok(first_collision(tree, &kin))
}

pub(crate) fn first_collision(tree: &KinematicTree, kin: &Kinematics) -> Option<CollisionPair> {
    let caps = world_capsules(tree, kin);
    let bx = base_box(tree, kin);
    let links = tree.links();
    for (i, cap) in caps.iter().enumerate() {
        if links[i].parent.is_none() {
            continue;
        }
        let d = segment_box_distance(&cap.a, &cap.b, &bx);
        if d < cap.radius {
            return Some(CollisionPair { first: BodyId::Base, second: BodyId::Link(i), distance: d - cap.radius });
        }
    }
    for i in 0..caps.len() {
        for j in i + 1..caps.len() {
            if links[i].arm == links[j].arm {
                continue;
            }
            let d = segment_distance(&caps[i], &caps[j]);
            if d < caps[i].radius + caps[j].radius {
                return Some(CollisionPair {
                    first: BodyId::Link(i),
                    second: BodyId::Link(j),
                    distance: d - caps[i].radius - caps[j].radius,
                });
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box() -> OrientedBox {
        OrientedBox { center: Vector3::zeros(), rotation: Matrix3::identity(), half_extents: Vector3::new(1.0, 1.0, 1.0) }
    }

    /// Dense sampling of the point-to-box distance along the segment.
    fn brute_segment_box(a: &Vector3<f64>, b: &Vector3<f64>, bx: &OrientedBox) -> f64 {
        let mut best = f64::INFINITY;
        for k in 0..=20000 {
            let t = k as f64 / 20000.0;
            let p = bx.rotation.transpose() * (a + (b - a) * t - bx.center);
            let mut s = 0.0;
            for i in 0..3 {
                let g = (p[i].abs() - bx.half_extents[i]).max(0.0);
                s += g * g;
            }
            best = best.min(libm::sqrt(s));
        }
        best
    }

    #[test]
    fn tangent_capsule_does_not_collide() {
        // Axis parallel to the +z face at exactly one radius above it.
        let c = WorldCapsule { a: Vector3::new(-0.5, 0.0, 1.25), b: Vector3::new(0.5, 0.0, 1.25), radius: 0.25 };
        assert_eq!(segment_box_distance(&c.a, &c.b, &unit_box()), 0.25);
        assert!(!capsule_box_intersect(&c, &unit_box()));
        let closer = WorldCapsule { radius: 0.25 + 1e-9, ..c };
        assert!(capsule_box_intersect(&closer, &unit_box()));
    }

    #[test]
    fn contained_segment_collides() {
        let c = WorldCapsule { a: Vector3::new(0.1, 0.2, 0.0), b: Vector3::new(0.3, 0.2, 0.1), radius: 0.01 };
        assert_eq!(segment_box_distance(&c.a, &c.b, &unit_box()), 0.0);
        assert!(capsule_box_intersect(&c, &unit_box()));
    }

    #[test]
    fn segment_box_distance_matches_sampling() {
        let rot = crate::math::rotation_from_euler_xyz([0.3, -0.7, 1.1]);
        let bx = OrientedBox { center: Vector3::new(0.2, -0.1, 0.4), rotation: rot, half_extents: Vector3::new(0.4, 0.7, 0.3) };
        let pts = [
            (Vector3::new(2.0, 1.0, -1.0), Vector3::new(-1.5, 2.0, 1.5)),
            (Vector3::new(1.2, 1.3, 1.4), Vector3::new(1.9, -0.4, 0.8)),
            (Vector3::new(-2.0, -2.0, -2.0), Vector3::new(-1.0, -2.5, -1.7)),
            (Vector3::new(0.0, 3.0, 0.0), Vector3::new(0.0, -3.0, 0.1)),
        ];
        for (a, b) in pts {
            let exact = segment_box_distance(&a, &b, &bx);
            let brute = brute_segment_box(&a, &b, &bx);
            assert!(exact <= brute + 1e-12, "{exact} > {brute}");
            assert!(brute - exact < 1e-6, "{exact} vs {brute}");
        }
    }

    #[test]
    fn segment_distance_cases() {
        let a = WorldCapsule { a: Vector3::new(0.0, 0.0, 0.0), b: Vector3::new(1.0, 0.0, 0.0), radius: 0.1 };
        let b = WorldCapsule { a: Vector3::new(0.5, 1.0, -1.0), b: Vector3::new(0.5, 1.0, 1.0), radius: 0.1 };
        assert!((segment_distance(&a, &b) - 1.0).abs() < 1e-15);
        let parallel = WorldCapsule { a: Vector3::new(2.0, 0.3, 0.0), b: Vector3::new(3.0, 0.3, 0.0), radius: 0.1 };
        assert!((segment_distance(&a, &parallel) - libm::sqrt(1.0 + 0.09)).abs() < 1e-12);
        assert_eq!(segment_distance(&a, &b), segment_distance(&b, &a));
    }
}
