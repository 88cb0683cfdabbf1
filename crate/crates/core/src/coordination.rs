//! Coordination of base and arm setpoints from end-effector goals.
//!
//! Hover mode keeps the base where it is and maps the goal into the body frame,
//! `p_E,d^B = R_B^T (p_E,d - p_B)`, so base pose errors are absorbed by the arm.
//! Cooperation mode additionally asks the base to carry the workspace centre
//! along the goal, `p_B,d = p_E,d - R_psi p_C^B`, where `R_psi` is the heading
//! part of the base rotation. Using the full attitude there would close a loop
//! in which tilting to accelerate shifts the setpoint further the same way.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::kinematics::fk::{desired_joint_velocity, jacobians, Vec6, SINGULAR_TOL};
use crate::kinematics::ik::{inverse_kinematics_axis, tool_axis, BranchSelect};
use crate::kinematics::workspace::{sample_workspace, Bandwidth, Kde};
use crate::model::{ArmModel, Vec5};
use crate::spatial::{rot_z, Rotation, Vec3};

/// Desired end-effector position and tool direction, all in the inertial frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndEffectorGoal {
    pub p: Vec3,
    pub p_dot: Option<Vec3>,
    pub alpha: f64,
    pub beta: f64,
    pub alpha_dot: Option<f64>,
    pub beta_dot: Option<f64>,
}

impl EndEffectorGoal {
    /// Level tool attitude, no rates.
    pub fn at(p: Vec3) -> Self {
        Self {
            p,
            p_dot: None,
            alpha: 0.0,
            beta: 0.0,
            alpha_dot: None,
            beta_dot: None,
        }
    }

    /// `[p_dot; alpha_dot; beta_dot]` with absent rates as zero.
    pub fn eta(&self) -> Vec5 {
        let v = self.p_dot.unwrap_or_else(Vec3::zeros);
        Vec5::new(
            v.x,
            v.y,
            v.z,
            self.alpha_dot.unwrap_or(0.0),
            self.beta_dot.unwrap_or(0.0),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Hover,
    Cooperation,
}

/// Base pose and rates as known to the controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseEstimate {
    pub p: Vec3,
    pub r_b: Rotation,
    /// Inertial velocity (m/s).
    pub v: Vec3,
    /// Body angular velocity (rad/s).
    pub omega: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinationOutput {
    pub mode: Mode,
    pub p_b_d: Option<Vec3>,
    pub q_d: Vec5,
    pub qd_d: Vec5,
}

/// Arm setpoints that keep the end-effector on the goal with the base where it is.
pub fn coordinate_hover(
    goal: &EndEffectorGoal,
    base: &BaseEstimate,
    arm: &ArmModel,
    previous: &Vec5,
) -> Result<CoordinationOutput> {
    let (q_d, qd_d) = arm_setpoints(goal, base, arm, previous)?;
    Ok(CoordinationOutput {
        mode: Mode::Hover,
        p_b_d: None,
        q_d,
        qd_d,
    })
}

/// Base setpoint that carries the workspace centre `p_c_b` onto the goal, plus arm setpoints.
pub fn coordinate_cooperation(
    goal: &EndEffectorGoal,
    base: &BaseEstimate,
    arm: &ArmModel,
    p_c_b: &Vec3,
    previous: &Vec5,
) -> Result<CoordinationOutput> {
    let p_b_d = base_setpoint(goal, &heading(&base.r_b), p_c_b);
    let (q_d, qd_d) = arm_setpoints(goal, base, arm, previous)?;
    Ok(CoordinationOutput {
        mode: Mode::Cooperation,
        p_b_d: Some(p_b_d),
        q_d,
        qd_d,
    })
}

/// Yaw-only rotation sharing the heading of `r_b`.
pub fn heading(r_b: &Rotation) -> Rotation {
    rot_z(r_b[(1, 0)].atan2(r_b[(0, 0)]))
}

/// `p_B,d = p_E,d - R p_C^B`.
pub fn base_setpoint(goal: &EndEffectorGoal, r_b: &Rotation, p_c_b: &Vec3) -> Vec3 {
    goal.p - r_b * p_c_b
}

/// Body-frame goal position for the current base pose.
pub fn goal_in_body(goal: &EndEffectorGoal, base: &BaseEstimate) -> Vec3 {
    base.r_b.transpose() * (goal.p - base.p)
}

fn arm_setpoints(goal: &EndEffectorGoal, base: &BaseEstimate, arm: &ArmModel, previous: &Vec5) -> Result<(Vec5, Vec5)> {
    let p_eb = goal_in_body(goal, base);
    // world-frame tool direction, expressed in the body
    let axis_b = base.r_b.transpose() * tool_axis(goal.alpha, goal.beta);
    let q_d = inverse_kinematics_axis(arm, &p_eb, &axis_b, BranchSelect::Auto { previous: *previous })?;
    let stack = jacobians(arm, &q_d, &base.r_b, goal.alpha, goal.beta)?;
    let w = base.r_b * base.omega;
    let eta_b = Vec6::new(base.v.x, base.v.y, base.v.z, w.x, w.y, w.z);
    let qd_d = desired_joint_velocity(&stack, &goal.eta(), &eta_b, SINGULAR_TOL)?;
    Ok((q_d, qd_d))
}

pub const CENTER_SAMPLES: usize = 10_000;

/// Highest-density point of the reachable workspace (body frame).
pub fn workspace_center(arm: &ArmModel, seed: u64) -> Vec3 {
    let cloud = sample_workspace(arm, CENTER_SAMPLES, seed);
    Kde::new(&cloud, Bandwidth::Scott).mode(400)
}
