//! Modeling, kinematics and control of a quadrotor carrying a five-joint arm.
// validation uses `!(x > 0.0)` on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod coordination;
pub mod error;
pub mod experiments;
pub mod kinematics;
pub mod model;
pub mod plant;
pub mod rne;
pub mod spatial;

pub use error::{Error, Result};
