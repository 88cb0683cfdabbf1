//! Monte Carlo study of how base pose errors reach the end-effector.
//!
//! Per sample: `e_E,p = e_B,p + (R_B - R_B,d) p_E^B` and
//! `E_E,a = (R_E^B)^T R_B,d^T R_B R_E^B`, with `e_E,a = log(E_E,a)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::ArmModel;
use crate::spatial::{base_rotation, rotation_error_vector, EulerAngles, Rotation, Vec3};

use super::fk::forward_kinematics;
use super::workspace::sample_joints;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmplificationMode {
    Both,
    AttitudeOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplificationParams {
    /// Half-width of the uniform base position error per axis (m).
    pub pos_range: f64,
    /// Half-width of the uniform base attitude error per Euler angle (rad).
    pub att_range: f64,
    /// Half-width of the nominal roll/pitch sampling range (rad); yaw spans a full turn.
    pub tilt_range: f64,
    pub n: usize,
    pub mode: AmplificationMode,
    pub seed: u64,
}

impl Default for AmplificationParams {
    fn default() -> Self {
        Self {
            pos_range: 0.02,
            att_range: 5f64.to_radians(),
            tilt_range: 30f64.to_radians(),
            n: 1000,
            mode: AmplificationMode::Both,
            seed: 0,
        }
    }
}

/// Error norms per sample plus summary statistics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorStats {
    pub base_pos: Vec<f64>,
    pub ee_pos: Vec<f64>,
    pub base_att: Vec<f64>,
    pub ee_att: Vec<f64>,
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation.
pub fn std_dev(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)).sqrt()
}

impl ErrorStats {
    pub fn len(&self) -> usize {
        self.base_pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base_pos.is_empty()
    }

    /// Mean end-effector position error over mean base position error.
    pub fn position_ratio(&self) -> f64 {
        mean(&self.ee_pos) / mean(&self.base_pos)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("sample,base_pos_err_m,ee_pos_err_m,base_att_err_rad,ee_att_err_rad\n");
        for i in 0..self.len() {
            out.push_str(&format!(
                "{},{:e},{:e},{:e},{:e}\n",
                i, self.base_pos[i], self.ee_pos[i], self.base_att[i], self.ee_att[i]
            ));
        }
        out
    }
}

/// End-effector position and rotation errors for one base pose error.
pub fn propagate_errors(e_bp: &Vec3, r_b: &Rotation, r_bd: &Rotation, p_eb: &Vec3, r_eb: &Rotation) -> (Vec3, Vec3) {
    if r_b == r_bd {
        return (*e_bp, Vec3::zeros());
    }
    let e_ep = e_bp + (r_b - r_bd) * p_eb;
    let e_ea = rotation_error_vector(&(r_eb.transpose() * r_bd.transpose() * r_b * r_eb));
    (e_ep, e_ea)
}

pub fn error_amplification_mc(arm: &ArmModel, params: &AmplificationParams) -> ErrorStats {
    assert!(params.n >= 2, "Monte Carlo needs at least two samples");
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut stats = ErrorStats::default();
    let uni = |rng: &mut ChaCha8Rng, r: f64| if r > 0.0 { rng.random_range(-r..=r) } else { 0.0 };
    for _ in 0..params.n {
        let q = sample_joints(arm, &mut rng);
        let nominal = EulerAngles::new(
            uni(&mut rng, params.tilt_range),
            uni(&mut rng, params.tilt_range),
            uni(&mut rng, std::f64::consts::PI),
        );
        let e_bp = match params.mode {
            AmplificationMode::Both => Vec3::new(
                uni(&mut rng, params.pos_range),
                uni(&mut rng, params.pos_range),
                uni(&mut rng, params.pos_range),
            ),
            AmplificationMode::AttitudeOnly => Vec3::zeros(),
        };
        let delta = Vec3::new(
            uni(&mut rng, params.att_range),
            uni(&mut rng, params.att_range),
            uni(&mut rng, params.att_range),
        );
        let r_bd = base_rotation(nominal);
        let r_b = base_rotation(EulerAngles::from_vector(&(nominal.to_vector() + delta)));
        let pose = forward_kinematics(arm, &q);
        let (e_ep, e_ea) = propagate_errors(&e_bp, &r_b, &r_bd, &pose.ee_position(), &pose.ee_rotation());
        stats.base_pos.push(e_bp.norm());
        stats.ee_pos.push(e_ep.norm());
        stats
            .base_att
            .push(rotation_error_vector(&(r_bd.transpose() * r_b)).norm());
        stats.ee_att.push(e_ea.norm());
    }
    stats
}

/// Spread amplification: std of the end-effector error with attitude error only,
/// over the std of the base position error with both error sources.
pub fn attitude_spread_amplification(arm: &ArmModel, params: &AmplificationParams) -> f64 {
    let both = error_amplification_mc(
        arm,
        &AmplificationParams {
            mode: AmplificationMode::Both,
            ..*params
        },
    );
    let att = error_amplification_mc(
        arm,
        &AmplificationParams {
            mode: AmplificationMode::AttitudeOnly,
            ..*params
        },
    );
    std_dev(&att.ee_pos) / std_dev(&both.base_pos)
}
