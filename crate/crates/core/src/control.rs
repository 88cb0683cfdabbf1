//! Flight and arm controllers.
//!
//! Position: `f = m_S (g e3 - v_r_dot + K_v v_err + p_err) + f_D_hat`, applied as
//! thrust `-f R_B e3`. Attitude: `tau_B = omega x I_B omega + I_B (omega_r_dot -
//! K_omega omega_err - Q^-1 Phi_err) - tau_D_hat`. Arm: computed torque
//! `tau_M = M (q_dd_d - K_v qd_err - K_p q_err) + C`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ArmModel, Mat5, Vec5};
use crate::rne::{arm_bias, arm_inertia_matrix, rne_coupling, BaseMotion, Wrench};
use crate::spatial::{e3, euler_rate_matrix_inverse, EulerAngles, Mat3, Vec3};

/// Thrust below which the attitude cannot be extracted (N).
pub const MIN_THRUST: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Gains {
    pub kp: [f64; 3],
    pub kv: [f64; 3],
    pub k_phi: [f64; 3],
    pub k_omega: [f64; 3],
    pub arm_kp: [f64; 5],
    pub arm_kv: [f64; 5],
}

impl Default for Gains {
    fn default() -> Self {
        Self {
            kp: [2.2; 3],
            kv: [2.0; 3],
            k_phi: [24.0; 3],
            k_omega: [16.0; 3],
            arm_kp: [100.0; 5],
            arm_kv: [100.0; 5],
        }
    }
}

impl Gains {
    pub fn validate(&self) -> Result<()> {
        let groups: [(&str, &[f64]); 6] = [
            ("kp", &self.kp),
            ("kv", &self.kv),
            ("k_phi", &self.k_phi),
            ("k_omega", &self.k_omega),
            ("arm_kp", &self.arm_kp),
            ("arm_kv", &self.arm_kv),
        ];
        let bad: Vec<String> = groups
            .iter()
            .filter(|(_, v)| v.iter().any(|&x| !(x > 0.0 && x.is_finite())))
            .map(|(name, v)| format!("gain {name} must be positive, got {v:?}"))
            .collect();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidScenario(bad.join("; ")))
        }
    }

    fn diag3(v: &[f64; 3]) -> Mat3 {
        Mat3::from_diagonal(&Vec3::from(*v))
    }

    fn diag5(v: &[f64; 5]) -> Mat5 {
        Mat5::from_diagonal(&Vec5::from(*v))
    }
}

/// Coupling wrench from measured signals; zero when `ablate` is set.
pub fn estimate_coupling(
    arm: &ArmModel,
    base: &BaseMotion,
    q: &Vec5,
    qd: &Vec5,
    qdd: &Vec5,
    gravity: f64,
    ablate: bool,
) -> Wrench {
    if ablate {
        Wrench::zero()
    } else {
        rne_coupling(arm, base, q, qd, qdd, gravity)
    }
}

/// Desired force vector (N). `p_err = p_B - p_B,d`, `v_err = v_B - v_r`.
pub fn position_control(
    p_err: &Vec3,
    v_err: &Vec3,
    v_r_dot: &Vec3,
    f_d_hat: &Vec3,
    gains: &Gains,
    m_s: f64,
    gravity: f64,
) -> Vec3 {
    m_s * (gravity * e3() - v_r_dot + Gains::diag3(&gains.kv) * v_err + p_err) + f_d_hat
}

/// Reference velocity `v_r = p_dot_d - K_p p_err`.
pub fn reference_velocity(p_dot_d: &Vec3, p_err: &Vec3, gains: &Gains) -> Vec3 {
    p_dot_d - Gains::diag3(&gains.kp) * p_err
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsinPolicy {
    Strict,
    Clamp,
}

/// Thrust magnitude and commanded roll/pitch from the desired force vector.
pub fn thrust_attitude_extract(f: &Vec3, psi_d: f64, policy: AsinPolicy) -> Result<(f64, f64, f64)> {
    let thrust = f.norm();
    if !(thrust > MIN_THRUST) {
        return Err(Error::DegenerateThrust { thrust });
    }
    let (s, c) = psi_d.sin_cos();
    let mut arg = (f.x * s - f.y * c) / thrust;
    if arg.abs() > 1.0 {
        match policy {
            AsinPolicy::Strict => return Err(Error::AsinDomain { arg }),
            AsinPolicy::Clamp => {
                log::warn!("asin argument {arg} clamped");
                arg = arg.clamp(-1.0, 1.0);
            }
        }
    }
    let phi = arg.asin();
    let theta = ((f.x * c + f.y * s) / f.z).atan();
    Ok((thrust, phi, theta))
}

/// Reference body rate `omega_r = Q (Phi_dot_d - K_Phi Phi_err)`.
pub fn reference_rate(q: &Mat3, euler_dot_d: &Vec3, euler_err: &Vec3, gains: &Gains) -> Vec3 {
    q * (euler_dot_d - Gains::diag3(&gains.k_phi) * euler_err)
}

/// Body torque (N·m). `euler_err = Phi_B - Phi_B,d`, `omega_err = omega - omega_r`.
#[allow(clippy::too_many_arguments)]
pub fn attitude_control(
    euler: EulerAngles,
    euler_err: &Vec3,
    omega_err: &Vec3,
    omega_r_dot: &Vec3,
    omega: &Vec3,
    tau_d_hat: &Vec3,
    gains: &Gains,
    i_b: &Mat3,
) -> Result<Vec3> {
    let q_inv = euler_rate_matrix_inverse(euler)?;
    Ok(
        omega.cross(&(i_b * omega))
            + i_b * (omega_r_dot - Gains::diag3(&gains.k_omega) * omega_err - q_inv * euler_err)
            - tau_d_hat,
    )
}

/// Joint torques. `q_err = q - q_d`, `qd_err = qd - qd_d`.
#[allow(clippy::too_many_arguments)]
pub fn computed_torque(
    arm: &ArmModel,
    base: &BaseMotion,
    q_err: &Vec5,
    qd_err: &Vec5,
    qdd_d: &Vec5,
    q: &Vec5,
    qd: &Vec5,
    gains: &Gains,
    gravity: f64,
) -> Vec5 {
    let m = arm_inertia_matrix(arm, q);
    let c = arm_bias(arm, base, q, qd, gravity);
    m * (qdd_d - Gains::diag5(&gains.arm_kv) * qd_err - Gains::diag5(&gains.arm_kp) * q_err) + c
}

/// Backward difference followed by a first-order low-pass.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredDifferentiator<const N: usize> {
    tau: f64,
    last: Option<(f64, nalgebra::SVector<f64, N>)>,
    output: nalgebra::SVector<f64, N>,
}

impl<const N: usize> FilteredDifferentiator<N> {
    pub fn new(tau: f64) -> Self {
        Self {
            tau,
            last: None,
            output: nalgebra::SVector::zeros(),
        }
    }

    pub fn value(&self) -> nalgebra::SVector<f64, N> {
        self.output
    }

    /// Feeds the signal at time `t` and returns the filtered derivative.
    pub fn update(&mut self, t: f64, x: &nalgebra::SVector<f64, N>) -> nalgebra::SVector<f64, N> {
        if let Some((t0, x0)) = self.last {
            let dt = t - t0;
            if dt > 0.0 {
                let raw = (x - x0) / dt;
                let a = dt / (self.tau + dt);
                self.output += (raw - self.output) * a;
            }
        }
        self.last = Some((t, *x));
        self.output
    }
}

/// First-order low-pass; a zero time constant passes the input through.
#[derive(Debug, Clone, PartialEq)]
pub struct LowPass<const N: usize> {
    tau: f64,
    state: Option<nalgebra::SVector<f64, N>>,
}

impl<const N: usize> LowPass<N> {
    pub fn new(tau: f64) -> Self {
        Self { tau, state: None }
    }

    pub fn update(&mut self, dt: f64, x: &nalgebra::SVector<f64, N>) -> nalgebra::SVector<f64, N> {
        let y = match self.state {
            Some(y) if self.tau > 0.0 => y + (x - y) * (dt / (self.tau + dt)),
            _ => *x,
        };
        self.state = Some(y);
        y
    }
}

/// Complementary filter for the base pose.
///
/// Integrates the velocity and body-rate channels between fixes and pulls toward
/// each pose fix with a first-order gain `1 - exp(-bandwidth * dt)`. A bandwidth
/// of `None` passes fixes straight through. Without a prior from
/// [`PoseFilter::start_at`] the first fix is taken as is.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseFilter {
    position_bandwidth: Option<f64>,
    attitude_bandwidth: Option<f64>,
    position: Option<(f64, Vec3)>,
    attitude: Option<(f64, Vec3)>,
}

impl PoseFilter {
    pub fn new(position_bandwidth: Option<f64>, attitude_bandwidth: Option<f64>) -> Self {
        Self {
            position_bandwidth,
            attitude_bandwidth,
            position: None,
            attitude: None,
        }
    }

    /// Prior for both estimates, e.g. the pose the vehicle took off from.
    pub fn start_at(&mut self, t: f64, p: &Vec3, euler: EulerAngles) {
        self.position = Some((t, *p));
        self.attitude = Some((t, euler.to_vector()));
    }

    /// Dead-reckons both estimates over `dt`.
    pub fn propagate(&mut self, dt: f64, v: &Vec3, omega: &Vec3) -> Result<()> {
        if let Some((_, p)) = self.position.as_mut() {
            *p += v * dt;
        }
        if let Some((_, e)) = self.attitude.as_mut() {
            let rates = euler_rate_matrix_inverse(EulerAngles::from_vector(e))? * omega;
            *e += rates * dt;
        }
        Ok(())
    }

    pub fn correct_position(&mut self, t: f64, p: &Vec3) {
        self.position = Some(match self.position {
            Some((t0, est)) => (t, blend(&est, p, gain(self.position_bandwidth, t - t0))),
            None => (t, *p),
        });
    }

    pub fn correct_attitude(&mut self, t: f64, euler: EulerAngles) {
        let meas = euler.to_vector();
        self.attitude = Some(match self.attitude {
            Some((t0, est)) => {
                let mut innovation = meas - est;
                innovation.z = wrap_angle(innovation.z);
                (t, est + innovation * gain(self.attitude_bandwidth, t - t0))
            }
            None => (t, meas),
        });
    }

    pub fn position(&self) -> Option<Vec3> {
        self.position.map(|(_, p)| p)
    }

    pub fn euler(&self) -> Option<EulerAngles> {
        self.attitude.map(|(_, e)| EulerAngles::from_vector(&e))
    }
}

fn gain(bandwidth: Option<f64>, dt: f64) -> f64 {
    match bandwidth {
        Some(b) => 1.0 - (-b * dt.max(0.0)).exp(),
        None => 1.0,
    }
}

fn blend(est: &Vec3, meas: &Vec3, k: f64) -> Vec3 {
    est + (meas - est) * k
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SystemModel;
    use crate::spatial::Rotation;

    #[test]
    fn hover_force_is_weight() {
        let g = Gains::default();
        let z = Vec3::zeros();
        let f = position_control(&z, &z, &z, &z, &g, 5.42, 9.81);
        assert!((f - Vec3::new(0.0, 0.0, 5.42 * 9.81)).norm() < 1e-12);
        assert!((f.norm() - 53.17).abs() < 0.01);
        let p = Vec3::new(0.1, 0.0, 0.0);
        let f = position_control(&p, &z, &z, &z, &g, 5.42, 9.81);
        assert!((f - 5.42 * (9.81 * e3() + p)).norm() < 1e-12);
        let fd = Vec3::new(1.0, 0.0, 0.0);
        let shifted = position_control(&z, &z, &z, &fd, &g, 5.42, 9.81);
        assert!((shifted - Vec3::new(1.0, 0.0, 5.42 * 9.81)).norm() < 1e-12);
    }

    #[test]
    fn extraction_examples() {
        let (f, phi, theta) = thrust_attitude_extract(&Vec3::new(0.0, 0.0, 53.17), 0.0, AsinPolicy::Strict).unwrap();
        assert!((f - 53.17).abs() < 1e-12 && phi == 0.0 && theta == 0.0);
        let (_, phi, theta) = thrust_attitude_extract(&Vec3::new(5.0, 0.0, 50.0), 0.0, AsinPolicy::Strict).unwrap();
        assert!(phi.abs() < 1e-15 && (theta - 0.1f64.atan()).abs() < 1e-15);
        let (_, phi, theta) = thrust_attitude_extract(
            &Vec3::new(0.0, 5.0, 50.0),
            std::f64::consts::FRAC_PI_2,
            AsinPolicy::Strict,
        )
        .unwrap();
        assert!(phi.abs() < 1e-15 && (theta - 0.1f64.atan()).abs() < 1e-15);
        assert!(matches!(
            thrust_attitude_extract(&Vec3::zeros(), 0.0, AsinPolicy::Strict),
            Err(Error::DegenerateThrust { .. })
        ));
    }

    #[test]
    fn attitude_law_examples() {
        let g = Gains::default();
        let i_b = SystemModel::reference().quad.inertia_mat();
        let z = Vec3::zeros();
        let e = EulerAngles::default();
        assert_eq!(attitude_control(e, &z, &z, &z, &z, &z, &g, &i_b).unwrap(), z);
        let w = Vec3::new(0.0, 0.0, 1.0);
        assert_eq!(
            attitude_control(e, &z, &z, &z, &w, &z, &g, &i_b).unwrap(),
            w.cross(&(i_b * w))
        );
        let near = EulerAngles::new(0.0, std::f64::consts::FRAC_PI_2, 0.0);
        assert!(attitude_control(near, &z, &z, &z, &z, &z, &g, &i_b).is_err());
    }

    #[test]
    fn computed_torque_is_bias_at_zero_error() {
        let model = SystemModel::reference();
        let base = BaseMotion::at_rest(Rotation::identity());
        let q = Vec5::new(0.2, 0.9, -0.3, 0.7, 0.1);
        let qd = Vec5::new(0.1, -0.2, 0.3, 0.0, 0.5);
        let z = Vec5::zeros();
        let tau = computed_torque(&model.arm, &base, &z, &z, &z, &q, &qd, &Gains::default(), 9.81);
        assert!((tau - arm_bias(&model.arm, &base, &q, &qd, 9.81)).norm() < 1e-12);
        let tau0 = computed_torque(&model.arm, &base, &z, &z, &z, &q, &z, &Gains::default(), 0.0);
        assert!(tau0.norm() < 1e-15);
    }

    #[test]
    fn ablation_zeroes_estimate() {
        let model = SystemModel::reference();
        let base = BaseMotion::at_rest(Rotation::identity());
        let q = Vec5::new(0.2, 0.9, -0.3, 0.7, 0.1);
        let w = estimate_coupling(&model.arm, &base, &q, &q, &q, 9.81, true);
        assert_eq!(w, Wrench::zero());
    }

    #[test]
    fn differentiator_converges_on_ramp() {
        let mut d = FilteredDifferentiator::<1>::new(0.02);
        let mut out = 0.0;
        for k in 0..1000 {
            let t = k as f64 * 1e-3;
            out = d.update(t, &nalgebra::SVector::<f64, 1>::new(3.0 * t))[0];
        }
        assert!((out - 3.0).abs() < 1e-9);
    }

    #[test]
    fn gains_reject_nonpositive() {
        let g = Gains {
            kp: [1.0, 0.0, 1.0],
            ..Gains::default()
        };
        assert!(g.validate().is_err());
        Gains::default().validate().unwrap();
    }

    #[test]
    fn pose_filter_passthrough_and_smoothing() {
        let mut raw = PoseFilter::new(None, None);
        raw.correct_position(0.0, &Vec3::new(1.0, 2.0, 3.0));
        raw.correct_position(0.01, &Vec3::new(4.0, 5.0, 6.0));
        assert_eq!(raw.position().unwrap(), Vec3::new(4.0, 5.0, 6.0));

        // alternating +-1 fixes around a still pose average out
        let mut f = PoseFilter::new(Some(1.0), Some(1.0));
        let mut worst: f64 = 0.0;
        for k in 0..1000 {
            let t = k as f64 * 0.01;
            let s = if k % 2 == 0 { 1.0 } else { -1.0 };
            f.propagate(0.01, &Vec3::zeros(), &Vec3::zeros()).unwrap();
            f.correct_position(t, &Vec3::new(s, 0.0, 0.0));
            f.correct_attitude(
                t,
                EulerAngles::new(0.0, 0.0, std::f64::consts::PI - 0.01 + 0.02 * (k % 2) as f64),
            );
            if k > 500 {
                worst = worst.max(f.position().unwrap().norm());
            }
        }
        assert!(worst < 0.02, "{worst}");
        // yaw fixes straddle +-pi without the estimate swinging through zero
        let psi = f.euler().unwrap().psi;
        assert!(wrap_angle(psi - std::f64::consts::PI).abs() < 0.05, "{psi}");
    }

    #[test]
    fn pose_filter_tracks_constant_velocity() {
        let mut f = PoseFilter::new(Some(1.0), None);
        let v = Vec3::new(0.3, 0.0, -0.1);
        for k in 0..500 {
            let t = k as f64 * 0.01;
            if k > 0 {
                f.propagate(0.01, &v, &Vec3::zeros()).unwrap();
            }
            f.correct_position(t, &(v * t));
        }
        assert!((f.position().unwrap() - v * 4.99).norm() < 1e-12);
    }

    #[test]
    fn pose_filter_prior_damps_first_fix() {
        let mut f = PoseFilter::new(Some(1.0), Some(1.0));
        f.start_at(0.0, &Vec3::zeros(), EulerAngles::default());
        f.correct_position(0.0, &Vec3::new(0.02, 0.0, 0.0));
        f.correct_attitude(0.0, EulerAngles::new(0.0, 0.0, 0.08));
        assert_eq!(f.position().unwrap(), Vec3::zeros());
        f.correct_position(0.01, &Vec3::new(0.02, 0.0, 0.0));
        assert!((f.position().unwrap().x - 0.02 * (1.0 - (-0.01f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn wrap_angle_range() {
        use std::f64::consts::PI;
        assert_eq!(wrap_angle(0.5), 0.5);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((wrap_angle(-3.0 * PI / 2.0) - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn low_pass_step_response() {
        let mut lp = LowPass::<1>::new(0.02);
        let one = nalgebra::SVector::<f64, 1>::new(1.0);
        lp.update(1e-3, &nalgebra::SVector::<f64, 1>::zeros());
        let mut y = 0.0;
        for _ in 0..20 {
            y = lp.update(1e-3, &one)[0];
        }
        // about one time constant
        assert!((y - (1.0 - (-1.0f64).exp())).abs() < 0.02, "{y}");
        let mut pass = LowPass::<1>::new(0.0);
        pass.update(1e-3, &nalgebra::SVector::<f64, 1>::zeros());
        assert_eq!(pass.update(1e-3, &one)[0], 1.0);
    }
}
