//! Scalar and rotation helpers shared by the simulator and the environment.
//!
//! All transcendental functions go through `libm` so results do not depend on
//! the platform's libc.

use core::f64::consts::PI;

use nalgebra::{Matrix3, Rotation3, Unit, UnitQuaternion, Vector3};

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}
#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}
#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}
#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}
#[inline]
pub fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}
#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

/// Numerically stable `ln(1 + e^x)`.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        exp(x)
    } else {
        libm::log1p(exp(x))
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut r = a - two_pi * libm::floor(a / two_pi);
    // r in [0, 2pi)
    if r > PI {
        r -= two_pi;
    }
    r
}

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Intrinsic X-Y-Z Euler angles `(roll, pitch, yaw)` with `R = Rx(a) Ry(b) Rz(c)`.
pub fn euler_xyz_from_matrix(r: &Matrix3<f64>) -> [f64; 3] {
    let sb = r[(0, 2)].clamp(-1.0, 1.0);
    let b = libm::asin(sb);
    let a = atan2(-r[(1, 2)], r[(2, 2)]);
    let c = atan2(-r[(0, 1)], r[(0, 0)]);
    [wrap_angle(a), b, wrap_angle(c)]
}

pub fn euler_xyz(q: &UnitQuaternion<f64>) -> [f64; 3] {
    euler_xyz_from_matrix(q.to_rotation_matrix().matrix())
}

pub fn rotation_from_euler_xyz(e: [f64; 3]) -> Matrix3<f64> {
    axis_rotation(&Vector3::x(), e[0]) * axis_rotation(&Vector3::y(), e[1]) * axis_rotation(&Vector3::z(), e[2])
}

pub fn quaternion_from_euler_xyz(e: [f64; 3]) -> UnitQuaternion<f64> {
    UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(rotation_from_euler_xyz(e)))
}

/// Rodrigues rotation about a unit axis.
pub fn axis_rotation(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    let (s, c) = (sin(angle), cos(angle));
    let k = skew(axis);
    Matrix3::identity() + k * s + k * k * (1.0 - c)
}

/// Quaternion for a rotation vector (axis times angle).
pub fn quaternion_exp(rv: &Vector3<f64>) -> UnitQuaternion<f64> {
    let angle = rv.norm();
    if angle < 1e-12 {
        let q = nalgebra::Quaternion::new(1.0, 0.5 * rv.x, 0.5 * rv.y, 0.5 * rv.z);
        return UnitQuaternion::new_normalize(q);
    }
    let half = 0.5 * angle;
    let s = sin(half) / angle;
    UnitQuaternion::new_unchecked(nalgebra::Quaternion::new(cos(half), s * rv.x, s * rv.y, s * rv.z))
}

pub fn unit_axis(v: [f64; 3]) -> Unit<Vector3<f64>> {
    Unit::new_normalize(Vector3::from(v))
}

pub fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}
