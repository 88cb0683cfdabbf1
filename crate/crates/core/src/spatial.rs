//! Frame and rotation algebra.
//!
//! Conventions: active rotations acting on column vectors, NED inertial frame
//! with `e3 = [0, 0, 1]` pointing down. The quadcopter attitude is a Z-Y-X
//! (yaw-pitch-roll) sequence, which is the sequence the Euler-rate matrix `Q`
//! and the thrust/attitude extraction are written for. The end-effector
//! attitude uses the X-Y-Z sequence `Rx(alpha) Ry(beta) Rz(gamma)`.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
/// Direction-cosine matrix. Always orthonormal with determinant +1.
pub type Rotation = Matrix3<f64>;

/// `|cos(theta)|` below this is treated as gimbal lock.
pub const GIMBAL_EPS: f64 = 1e-6;

pub fn e3() -> Vec3 {
    Vec3::new(0.0, 0.0, 1.0)
}

/// Three angles of a rotation sequence (rad).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EulerAngles {
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
}

impl EulerAngles {
    pub fn new(phi: f64, theta: f64, psi: f64) -> Self {
        Self { phi, theta, psi }
    }

    pub fn from_vector(v: &Vec3) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn to_vector(self) -> Vec3 {
        Vec3::new(self.phi, self.theta, self.psi)
    }

    pub fn is_finite(&self) -> bool {
        self.phi.is_finite() && self.theta.is_finite() && self.psi.is_finite()
    }
}

pub fn rot_x(a: f64) -> Rotation {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(a: f64) -> Rotation {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(a: f64) -> Rotation {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// `Rx(phi) Ry(theta) Rz(psi)`; used for end-effector attitudes `(alpha, beta, gamma)`.
pub fn rot_from_euler(a: EulerAngles) -> Rotation {
    rot_x(a.phi) * rot_y(a.theta) * rot_z(a.psi)
}

/// Inverse of [`rot_from_euler`]. Returns `(alpha, beta, gamma)` with `beta` in `[-pi/2, pi/2]`.
pub fn euler_from_rot(r: &Rotation) -> EulerAngles {
    let beta = r[(0, 2)].clamp(-1.0, 1.0).asin();
    let alpha = (-r[(1, 2)]).atan2(r[(2, 2)]);
    let gamma = (-r[(0, 1)]).atan2(r[(0, 0)]);
    EulerAngles::new(alpha, beta, gamma)
}

/// Quadcopter attitude `Rz(psi) Ry(theta) Rx(phi)` from roll/pitch/yaw.
pub fn base_rotation(a: EulerAngles) -> Rotation {
    rot_z(a.psi) * rot_y(a.theta) * rot_x(a.phi)
}

/// Inverse of [`base_rotation`].
pub fn base_euler_from_rot(r: &Rotation) -> EulerAngles {
    let theta = (-r[(2, 0)]).clamp(-1.0, 1.0).asin();
    let phi = r[(2, 1)].atan2(r[(2, 2)]);
    let psi = r[(1, 0)].atan2(r[(0, 0)]);
    EulerAngles::new(phi, theta, psi)
}

/// Map from roll/pitch/yaw rates to body angular velocity.
pub fn euler_rate_matrix(a: EulerAngles) -> Mat3 {
    let (sp, cp) = a.phi.sin_cos();
    let (st, ct) = a.theta.sin_cos();
    Matrix3::new(1.0, 0.0, -st, 0.0, cp, ct * sp, 0.0, -sp, ct * cp)
}

/// Closed-form inverse of [`euler_rate_matrix`].
pub fn euler_rate_matrix_inverse(a: EulerAngles) -> Result<Mat3> {
    let (sp, cp) = a.phi.sin_cos();
    let (st, ct) = a.theta.sin_cos();
    if ct.abs() < GIMBAL_EPS {
        return Err(Error::GimbalProximity { theta: a.theta });
    }
    let tt = st / ct;
    Ok(Matrix3::new(1.0, sp * tt, cp * tt, 0.0, cp, -sp, 0.0, sp / ct, cp / ct))
}

pub fn skew(v: &Vec3) -> Mat3 {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Rodrigues formula: rotation by `|v|` about `v / |v|`.
pub fn rot_from_axis_angle(v: &Vec3) -> Rotation {
    let angle = v.norm();
    if angle < 1e-14 {
        return Mat3::identity() + skew(v);
    }
    let k = skew(&(v / angle));
    Mat3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos())
}

/// Matrix logarithm of a rotation as an axis-angle vector with norm in `[0, pi]`.
pub fn rotation_error_vector(e: &Rotation) -> Vec3 {
    let cos_angle = ((e.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let w = Vec3::new(e[(2, 1)] - e[(1, 2)], e[(0, 2)] - e[(2, 0)], e[(1, 0)] - e[(0, 1)]);
    // |w| = 2 sin(angle); atan2 keeps full precision for small angles
    let sin2 = w.norm();
    let angle = sin2.atan2(e.trace() - 1.0);
    if angle < 1e-12 {
        return w * 0.5;
    }
    if cos_angle > -0.99 {
        return w * (angle / sin2);
    }
    // near pi the skew part vanishes; take the axis from the symmetric part
    let s = (e + e.transpose()) * 0.5 - Mat3::identity() * cos_angle;
    let diag = Vec3::new(s[(0, 0)], s[(1, 1)], s[(2, 2)]);
    let i = diag.imax();
    let mut axis = s.column(i).into_owned();
    axis /= axis.norm();
    if axis.dot(&w) < 0.0 {
        axis = -axis;
    }
    axis * angle
}

/// Rotation-angle distance `|log(a^T b)|`.
pub fn rotation_distance(a: &Rotation, b: &Rotation) -> f64 {
    rotation_error_vector(&(a.transpose() * b)).norm()
}

/// Projects a nearly orthonormal matrix back onto SO(3).
pub fn orthonormalize(r: &Mat3) -> Rotation {
    let svd = r.svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let mut d = Mat3::identity();
    if (u * vt).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    u * d * vt
}
