//! Arm kinematics: forward and differential kinematics, closed-form inverse
//! kinematics, workspace analysis and the error-amplification study.

pub mod amplification;
pub mod fk;
pub mod ik;
pub mod workspace;

pub use amplification::{error_amplification_mc, AmplificationMode, AmplificationParams, ErrorStats};
pub use fk::{
    desired_joint_velocity, end_effector_world, forward_kinematics, jacobians, ChainPose, JacobianStack, Vec6,
    EE_FRAME, SINGULAR_TOL,
};
pub use ik::{inverse_kinematics, inverse_kinematics_axis, tool_angles, tool_axis, Branch, BranchSelect};
pub use workspace::{hemisphere_coverage, kde_density, sample_workspace, Bandwidth, Kde};
