use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};
use crate::model::{ArmModel, Mdh, Vec5, N_JOINTS};
use crate::spatial::{rot_x, rot_y, rot_z, skew, Mat3, Rotation, Vec3, GIMBAL_EPS};

/// Number of frames in a [`ChainPose`]: mount, links 1..5, end-effector.
pub const N_FRAMES: usize = N_JOINTS + 2;
pub const EE_FRAME: usize = N_JOINTS + 1;

/// Every frame of the arm expressed in the body frame.
///
/// Index 0 is the mount, 1..=5 the link frames, 6 the end-effector.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainPose {
    pub origins: [Vec3; N_FRAMES],
    pub rotations: [Rotation; N_FRAMES],
}

impl ChainPose {
    pub fn origin(&self, frame: usize) -> Vec3 {
        self.origins[frame]
    }

    /// `z` axis of a frame; for frames 1..=5 this is the joint axis.
    pub fn axis(&self, frame: usize) -> Vec3 {
        self.rotations[frame].column(2).into_owned()
    }

    pub fn ee_position(&self) -> Vec3 {
        self.origins[EE_FRAME]
    }

    pub fn ee_rotation(&self) -> Rotation {
        self.rotations[EE_FRAME]
    }

    /// CoM of link `i` (1-based) in the body frame.
    pub fn com(&self, arm: &ArmModel, i: usize) -> Vec3 {
        self.origins[i] + self.rotations[i] * arm.links[i - 1].com_vec()
    }
}

/// Rotation and origin of frame `i` in frame `i-1`.
pub fn mdh_transform(p: &Mdh, q: f64) -> (Rotation, Vec3) {
    let rx = rot_x(p.alpha);
    let r = rx * rot_z(q + p.theta_offset);
    let t = Vec3::new(p.a, 0.0, 0.0) + rx * Vec3::new(0.0, 0.0, p.d);
    (r, t)
}

/// Tool frame relative to frame 5: `tool_length` along `x5`, `z` along the tool.
pub fn tool_transform(arm: &ArmModel) -> (Rotation, Vec3) {
    (rot_y(std::f64::consts::FRAC_PI_2), Vec3::new(arm.tool_length, 0.0, 0.0))
}

pub fn forward_kinematics(arm: &ArmModel, q: &Vec5) -> ChainPose {
    let mut origins = [Vec3::zeros(); N_FRAMES];
    let mut rotations = [Mat3::identity(); N_FRAMES];
    origins[0] = arm.mount_pos();
    rotations[0] = arm.mount_rot();
    for i in 0..N_JOINTS {
        let (r, t) = mdh_transform(&arm.links[i].mdh, q[i]);
        origins[i + 1] = origins[i] + rotations[i] * t;
        rotations[i + 1] = rotations[i] * r;
    }
    let (r, t) = tool_transform(arm);
    origins[EE_FRAME] = origins[N_JOINTS] + rotations[N_JOINTS] * t;
    rotations[EE_FRAME] = rotations[N_JOINTS] * r;
    ChainPose { origins, rotations }
}

/// `p_E = p_B + R_B p_E^B`, `R_E = R_B R_E^B`.
pub fn end_effector_world(p_b: &Vec3, r_b: &Rotation, p_eb: &Vec3, r_eb: &Rotation) -> (Vec3, Rotation) {
    (p_b + r_b * p_eb, r_b * r_eb)
}

pub type Mat3x5 = SMatrix<f64, 3, 5>;
pub type Mat5x6 = SMatrix<f64, 5, 6>;
pub type Mat2x3 = SMatrix<f64, 2, 3>;
pub type Vec6 = SVector<f64, 6>;

/// Velocity maps of the end-effector, all in the inertial frame.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianStack {
    pub jv: Mat3x5,
    pub jo: Mat3x5,
    /// Maps `[v_B; omega_B]` (inertial) to `[v_E; alpha_dot; beta_dot]`.
    pub jb: Mat5x6,
    /// Maps joint rates to `[v_E; alpha_dot; beta_dot]`.
    pub jq: SMatrix<f64, 5, 5>,
    pub t: Mat2x3,
}

/// Map from world angular velocity to `(alpha_dot, beta_dot)` of an X-Y-Z attitude.
pub fn attitude_rate_map(alpha: f64, beta: f64) -> Result<Mat2x3> {
    let cb = beta.cos();
    if cb.abs() < GIMBAL_EPS {
        return Err(Error::AttitudeSingularity { beta });
    }
    let (sa, ca) = alpha.sin_cos();
    let tb = beta.sin() / cb;
    Ok(Mat2x3::new(1.0, sa * tb, -ca * tb, 0.0, ca, sa))
}

pub fn jacobians(arm: &ArmModel, q: &Vec5, r_b: &Rotation, alpha: f64, beta: f64) -> Result<JacobianStack> {
    let pose = forward_kinematics(arm, q);
    jacobians_from_pose(&pose, r_b, alpha, beta)
}

pub fn jacobians_from_pose(pose: &ChainPose, r_b: &Rotation, alpha: f64, beta: f64) -> Result<JacobianStack> {
    let t = attitude_rate_map(alpha, beta)?;
    let p_e = pose.ee_position();
    let mut jv = Mat3x5::zeros();
    let mut jo = Mat3x5::zeros();
    for i in 0..N_JOINTS {
        let z = r_b * pose.axis(i + 1);
        let lever = r_b * (p_e - pose.origin(i + 1));
        jv.set_column(i, &z.cross(&lever));
        jo.set_column(i, &z);
    }
    let mut jb = Mat5x6::zeros();
    jb.fixed_view_mut::<3, 3>(0, 0).copy_from(&Mat3::identity());
    jb.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-skew(&(r_b * p_e))));
    jb.fixed_view_mut::<2, 3>(3, 3).copy_from(&t);
    let mut jq = SMatrix::<f64, 5, 5>::zeros();
    jq.fixed_view_mut::<3, 5>(0, 0).copy_from(&jv);
    jq.fixed_view_mut::<2, 5>(3, 0).copy_from(&(t * jo));
    Ok(JacobianStack { jv, jo, jb, jq, t })
}

/// Default smallest admissible singular value of `J_q`.
pub const SINGULAR_TOL: f64 = 1e-6;

/// Joint rates realizing the desired end-effector rates given the base motion.
pub fn desired_joint_velocity(stack: &JacobianStack, eta_e_d: &Vec5, eta_b: &Vec6, tol: f64) -> Result<Vec5> {
    let rhs = eta_e_d - stack.jb * eta_b;
    let svd = stack.jq.svd(true, true);
    let sigma_min = svd.singular_values.min();
    if sigma_min < tol {
        return Err(Error::KinematicSingularity {
            sigma_min,
            tolerance: tol,
        });
    }
    // square and full rank: J^T (J J^T)^-1 coincides with the inverse
    svd.solve(&rhs, 0.0).map_err(|_| Error::KinematicSingularity {
        sigma_min,
        tolerance: tol,
    })
}
