//! Ground-truth plant: coupled quadcopter and arm dynamics, RK4 integration and sensors.
//!
//! The base obeys `m_B v_dot = -f R_B e3 + m_S g e3 + f_D + f_ext`, where `f_D`
//! is the arm reaction with its weight removed, so `f_D` equals minus the rate of
//! change of the arm momentum. Attitude follows
//! `I_B omega_dot = tau_B + tau_D + tau_ext - omega x I_B omega` and the joints
//! satisfy the full inverse-dynamics identity `rne(q_ddot) = tau_M`. The coupling
//! wrench depends on the accelerations being solved for; all eleven unknowns are
//! affine in each other, so they are found with one linear solve.

use nalgebra::{SMatrix, SVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::{SystemModel, Vec5};
use crate::rne::{rne, BaseMotion, Wrench};
use crate::spatial::{base_rotation, e3, euler_rate_matrix_inverse, EulerAngles, Rotation, Vec3};

/// Attitude pitch margin from +-pi/2 at which the simulation stops.
pub const GIMBAL_MARGIN: f64 = 1e-3;
/// Largest accepted residual of the coupled acceleration solve.
pub const SOLVE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseState {
    /// Position, inertial NED (m).
    pub p: Vec3,
    /// Velocity, inertial (m/s).
    pub v: Vec3,
    pub euler: EulerAngles,
    /// Angular velocity, body frame (rad/s).
    pub omega: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointState {
    pub q: Vec5,
    pub qd: Vec5,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullState {
    pub base: BaseState,
    pub joints: JointState,
    pub t: f64,
}

impl FullState {
    pub fn at_rest(p: Vec3, euler: EulerAngles, q: Vec5) -> Self {
        Self {
            base: BaseState {
                p,
                v: Vec3::zeros(),
                euler,
                omega: Vec3::zeros(),
            },
            joints: JointState { q, qd: Vec5::zeros() },
            t: 0.0,
        }
    }

    pub fn rotation(&self) -> Rotation {
        base_rotation(self.base.euler)
    }

    fn pack(&self) -> StateVec {
        let b = &self.base;
        let mut x = StateVec::zeros();
        x.fixed_rows_mut::<3>(0).copy_from(&b.p);
        x.fixed_rows_mut::<3>(3).copy_from(&b.v);
        x.fixed_rows_mut::<3>(6).copy_from(&b.euler.to_vector());
        x.fixed_rows_mut::<3>(9).copy_from(&b.omega);
        x.fixed_rows_mut::<5>(12).copy_from(&self.joints.q);
        x.fixed_rows_mut::<5>(17).copy_from(&self.joints.qd);
        x
    }

    fn unpack(x: &StateVec, t: f64) -> Self {
        Self {
            base: BaseState {
                p: x.fixed_rows::<3>(0).into_owned(),
                v: x.fixed_rows::<3>(3).into_owned(),
                euler: EulerAngles::from_vector(&x.fixed_rows::<3>(6).into_owned()),
                omega: x.fixed_rows::<3>(9).into_owned(),
            },
            joints: JointState {
                q: x.fixed_rows::<5>(12).into_owned(),
                qd: x.fixed_rows::<5>(17).into_owned(),
            },
            t,
        }
    }
}

type StateVec = SVector<f64, 22>;
type Unknowns = SVector<f64, 11>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuatorCommand {
    /// Collective thrust (N), along `-z` of the body.
    pub thrust: f64,
    /// Body torque (N·m).
    pub torque: Vec3,
    pub joint_torque: Vec5,
}

impl ActuatorCommand {
    pub fn idle() -> Self {
        Self {
            thrust: 0.0,
            torque: Vec3::zeros(),
            joint_torque: Vec5::zeros(),
        }
    }
}

/// Accelerations consistent with the coupled dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accelerations {
    /// Inertial (m/s²).
    pub v_dot: Vec3,
    /// Body frame (rad/s²).
    pub omega_dot: Vec3,
    pub qdd: Vec5,
}

impl Accelerations {
    pub fn zero() -> Self {
        Self {
            v_dot: Vec3::zeros(),
            omega_dot: Vec3::zeros(),
            qdd: Vec5::zeros(),
        }
    }

    fn from_unknowns(x: &Unknowns) -> Self {
        Self {
            v_dot: x.fixed_rows::<3>(0).into_owned(),
            omega_dot: x.fixed_rows::<3>(3).into_owned(),
            qdd: x.fixed_rows::<5>(6).into_owned(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivative {
    pub p_dot: Vec3,
    pub euler_dot: Vec3,
    pub accel: Accelerations,
    /// True coupling wrench at this state.
    pub coupling: Wrench,
}

impl Derivative {
    fn as_state_rate(&self, state: &FullState) -> StateVec {
        let mut d = StateVec::zeros();
        d.fixed_rows_mut::<3>(0).copy_from(&self.p_dot);
        d.fixed_rows_mut::<3>(3).copy_from(&self.accel.v_dot);
        d.fixed_rows_mut::<3>(6).copy_from(&self.euler_dot);
        d.fixed_rows_mut::<3>(9).copy_from(&self.accel.omega_dot);
        d.fixed_rows_mut::<5>(12).copy_from(&state.joints.qd);
        d.fixed_rows_mut::<5>(17).copy_from(&self.accel.qdd);
        d
    }
}

fn check_gimbal(state: &FullState) -> Result<()> {
    let theta = state.base.euler.theta;
    if !(theta.abs() < std::f64::consts::FRAC_PI_2 - GIMBAL_MARGIN) {
        return Err(Error::GimbalProximity { theta });
    }
    Ok(())
}

/// Residual of the coupled equations of motion at trial accelerations `x`.
fn residual(
    state: &FullState,
    r_b: &Rotation,
    cmd: &ActuatorCommand,
    dist: &Wrench,
    model: &SystemModel,
    x: &Unknowns,
) -> (Unknowns, Wrench) {
    let g = model.gravity();
    let quad = &model.quad;
    let acc = Accelerations::from_unknowns(x);
    let base = BaseMotion {
        r_b: *r_b,
        v_dot: acc.v_dot,
        omega: state.base.omega,
        omega_dot: acc.omega_dot,
    };
    let out = rne(&model.arm, &base, &state.joints.q, &state.joints.qd, &acc.qdd, g);
    let w = out.coupling;
    let i_b = quad.inertia_mat();
    let omega = state.base.omega;
    let lin =
        quad.mass * acc.v_dot - (-cmd.thrust * (r_b * e3()) + model.total_mass() * g * e3() + w.force + dist.force);
    let ang = i_b * acc.omega_dot - (cmd.torque + w.torque + dist.torque - omega.cross(&(i_b * omega)));
    let joint = out.joint_torque - cmd.joint_torque;
    let mut r = Unknowns::zeros();
    r.fixed_rows_mut::<3>(0).copy_from(&lin);
    r.fixed_rows_mut::<3>(3).copy_from(&ang);
    r.fixed_rows_mut::<5>(6).copy_from(&joint);
    (r, w)
}

/// State derivative with the coupling wrench resolved against the current accelerations.
pub fn derivative(state: &FullState, cmd: &ActuatorCommand, dist: &Wrench, model: &SystemModel) -> Result<Derivative> {
    check_gimbal(state)?;
    let r_b = state.rotation();
    let (r0, _) = residual(state, &r_b, cmd, dist, model, &Unknowns::zeros());
    let mut a = SMatrix::<f64, 11, 11>::zeros();
    for k in 0..11 {
        let mut e = Unknowns::zeros();
        e[k] = 1.0;
        let (rk, _) = residual(state, &r_b, cmd, dist, model, &e);
        a.set_column(k, &(rk - r0));
    }
    if model.arm_mass() == 0.0 {
        // a massless arm has no joint dynamics; hold the joints
        for k in 6..11 {
            a[(k, k)] = 1.0;
        }
    }
    let x = a
        .lu()
        .solve(&(-r0))
        .ok_or(Error::FixedPointDivergence { residual: r0.norm() })?;
    let (r, coupling) = residual(state, &r_b, cmd, dist, model, &x);
    let scale = 1.0 + r0.amax();
    if !(r.amax() <= SOLVE_TOLERANCE * scale) {
        return Err(Error::FixedPointDivergence { residual: r.amax() });
    }
    let q_inv = euler_rate_matrix_inverse(state.base.euler)?;
    Ok(Derivative {
        p_dot: state.base.v,
        euler_dot: q_inv * state.base.omega,
        accel: Accelerations::from_unknowns(&x),
        coupling,
    })
}

/// One RK4 step with inputs re-evaluated at every stage by `inputs(state)`.
pub fn step_with<F>(state: &FullState, model: &SystemModel, dt: f64, mut inputs: F) -> Result<FullState>
where
    F: FnMut(&FullState) -> (ActuatorCommand, Wrench),
{
    assert!(dt > 0.0, "time step must be positive");
    let eval = |s: &FullState, inputs: &mut F| -> Result<StateVec> {
        let (cmd, dist) = inputs(s);
        Ok(derivative(s, &cmd, &dist, model)?.as_state_rate(s))
    };
    let x0 = state.pack();
    let t0 = state.t;
    let k1 = eval(state, &mut inputs)?;
    let s2 = FullState::unpack(&(x0 + k1 * (0.5 * dt)), t0 + 0.5 * dt);
    let k2 = eval(&s2, &mut inputs)?;
    let s3 = FullState::unpack(&(x0 + k2 * (0.5 * dt)), t0 + 0.5 * dt);
    let k3 = eval(&s3, &mut inputs)?;
    let s4 = FullState::unpack(&(x0 + k3 * dt), t0 + dt);
    let k4 = eval(&s4, &mut inputs)?;
    let x = x0 + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    let next = FullState::unpack(&x, t0 + dt);
    check_gimbal(&next)?;
    Ok(next)
}

/// One RK4 step with command and disturbance held over the step.
pub fn step(
    state: &FullState,
    cmd: &ActuatorCommand,
    dist: &Wrench,
    model: &SystemModel,
    dt: f64,
) -> Result<FullState> {
    step_with(state, model, dt, |_| (*cmd, *dist))
}

/// Kinetic plus potential energy of the whole system (potential zero at `z = 0`).
pub fn total_energy(state: &FullState, model: &SystemModel) -> f64 {
    use crate::kinematics::fk::forward_kinematics;
    let g = model.gravity();
    let r_b = state.rotation();
    let b = &state.base;
    let i_b = model.quad.inertia_mat();
    let mut e =
        0.5 * model.quad.mass * b.v.norm_squared() + 0.5 * b.omega.dot(&(i_b * b.omega)) - model.quad.mass * g * b.p.z;
    let pose = forward_kinematics(&model.arm, &state.joints.q);
    let (_, vel_rel, omega_rel) = crate::rne::com_kinematics(&model.arm, &state.joints.q, &state.joints.qd);
    for i in 0..crate::model::N_JOINTS {
        let link = &model.arm.links[i];
        let c = pose.com(&model.arm, i + 1);
        let v = b.v + r_b * (b.omega.cross(&c) + vel_rel[i]);
        let w_link = pose.rotations[i + 1].transpose() * (b.omega + omega_rel[i]);
        e += 0.5 * link.mass * v.norm_squared() + 0.5 * w_link.dot(&(link.inertia_mat() * w_link));
        e -= link.mass * g * (b.p + r_b * c).z;
    }
    e
}

/// Measurement noise on one channel.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Noise {
    #[default]
    None,
    Gaussian {
        std: f64,
    },
    Uniform {
        half_width: f64,
    },
}

impl Noise {
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            Noise::None => 0.0,
            Noise::Gaussian { std } if std > 0.0 => Normal::new(0.0, std).expect("finite std").sample(rng),
            Noise::Gaussian { .. } => 0.0,
            Noise::Uniform { half_width } if half_width > 0.0 => rng.random_range(-half_width..=half_width),
            Noise::Uniform { .. } => 0.0,
        }
    }

    fn vec3(&self, rng: &mut impl Rng) -> Vec3 {
        Vec3::new(self.sample(rng), self.sample(rng), self.sample(rng))
    }

    fn vec5(&self, rng: &mut impl Rng) -> Vec5 {
        Vec5::from_fn(|_, _| self.sample(rng))
    }
}

/// Noise per channel; angles in rad, accelerations in m/s² or rad/s².
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub position: Noise,
    pub attitude: Noise,
    pub joint_angle: Noise,
    pub linear_acceleration: Noise,
    pub angular_acceleration: Noise,
    pub joint_acceleration: Noise,
}

impl NoiseConfig {
    /// Gaussian acceleration noise only.
    pub fn accelerations() -> Self {
        Self {
            linear_acceleration: Noise::Gaussian { std: 2e-2 },
            angular_acceleration: Noise::Gaussian { std: 1e-2 },
            joint_acceleration: Noise::Gaussian { std: 1e-2 },
            ..Self::default()
        }
    }

    /// Acceleration noise plus uniform position and attitude noise.
    pub fn uniform_pose(position: f64, attitude: f64) -> Self {
        Self {
            position: Noise::Uniform { half_width: position },
            attitude: Noise::Uniform { half_width: attitude },
            ..Self::accelerations()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionReading {
    pub t: f64,
    pub p: Vec3,
    pub v: Vec3,
    pub v_dot: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeReading {
    pub t: f64,
    pub euler: EulerAngles,
    pub omega: Vec3,
    pub omega_dot: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointReading {
    pub t: f64,
    pub q: Vec5,
    pub qd: Vec5,
    pub qdd: Vec5,
}

/// Channels that fired at one instant; velocities are noise-free.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SensorSample {
    pub position: Option<PositionReading>,
    pub attitude: Option<AttitudeReading>,
    pub joints: Option<JointReading>,
}

/// Rate-gated sensor suite.
#[derive(Debug, Clone)]
pub struct Sensors {
    pub noise: NoiseConfig,
    position_period: f64,
    fast_period: f64,
    next_position: u64,
    next_fast: u64,
}

impl Sensors {
    pub fn new(noise: NoiseConfig, position_hz: f64, fast_hz: f64) -> Self {
        Self {
            noise,
            position_period: 1.0 / position_hz,
            fast_period: 1.0 / fast_hz,
            next_position: 0,
            next_fast: 0,
        }
    }

    /// 100 Hz position, 200 Hz attitude and joints.
    pub fn standard(noise: NoiseConfig) -> Self {
        Self::new(noise, 100.0, 200.0)
    }

    /// Emits the channels due at `t`; `None` between ticks.
    pub fn measure(&mut self, state: &FullState, accel: &Accelerations, rng: &mut impl Rng) -> Option<SensorSample> {
        let t = state.t;
        let due = |k: u64, period: f64| t + 1e-9 >= k as f64 * period;
        let mut sample = SensorSample::default();
        let n = self.noise;
        if due(self.next_position, self.position_period) {
            while due(self.next_position, self.position_period) {
                self.next_position += 1;
            }
            sample.position = Some(PositionReading {
                t,
                p: state.base.p + n.position.vec3(rng),
                v: state.base.v,
                v_dot: accel.v_dot + n.linear_acceleration.vec3(rng),
            });
        }
        if due(self.next_fast, self.fast_period) {
            while due(self.next_fast, self.fast_period) {
                self.next_fast += 1;
            }
            sample.attitude = Some(AttitudeReading {
                t,
                euler: EulerAngles::from_vector(&(state.base.euler.to_vector() + n.attitude.vec3(rng))),
                omega: state.base.omega,
                omega_dot: accel.omega_dot + n.angular_acceleration.vec3(rng),
            });
            sample.joints = Some(JointReading {
                t,
                q: state.joints.q + n.joint_angle.vec5(rng),
                qd: state.joints.qd,
                qdd: accel.qdd + n.joint_acceleration.vec5(rng),
            });
        }
        if sample.position.is_none() && sample.attitude.is_none() {
            None
        } else {
            Some(sample)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn hover(model: &SystemModel) -> ActuatorCommand {
        ActuatorCommand {
            thrust: model.total_mass() * model.gravity(),
            ..ActuatorCommand::idle()
        }
    }

    #[test]
    fn massless_arm_falls_freely() {
        let mut model = SystemModel::reference();
        for l in model.arm.links.iter_mut() {
            l.mass = 0.0;
            l.inertia = [[0.0; 3]; 3];
        }
        let s = FullState::at_rest(
            Vec3::zeros(),
            EulerAngles::default(),
            Vec5::new(0.1, 0.5, 0.0, 0.3, 0.0),
        );
        let d = derivative(&s, &ActuatorCommand::idle(), &Wrench::zero(), &model).unwrap();
        assert!((d.accel.v_dot - 9.81 * e3()).norm() < 1e-10);
        assert_eq!(d.accel.qdd, Vec5::zeros());
    }

    #[test]
    fn hover_balances() {
        let model = SystemModel::reference();
        let s = FullState::at_rest(Vec3::zeros(), EulerAngles::default(), Vec5::zeros());
        let mut cmd = hover(&model);
        let base = BaseMotion::at_rest(Rotation::identity());
        cmd.joint_torque = crate::rne::arm_bias(&model.arm, &base, &s.joints.q, &s.joints.qd, model.gravity());
        let d = derivative(&s, &cmd, &Wrench::zero(), &model).unwrap();
        assert!(d.accel.v_dot.norm() < 1e-10);
        assert!(d.accel.omega_dot.norm() < 1e-10);
        assert!(d.accel.qdd.norm() < 1e-10);
    }

    #[test]
    fn free_fall_is_exact() {
        let model = SystemModel::reference();
        let mut s = FullState::at_rest(Vec3::zeros(), EulerAngles::default(), Vec5::zeros());
        for _ in 0..1000 {
            s = step(&s, &ActuatorCommand::idle(), &Wrench::zero(), &model, 1e-3).unwrap();
        }
        assert!((s.base.v.z - 9.81).abs() < 1e-9, "{}", s.base.v.z);
    }

    #[test]
    fn zero_noise_is_truth_and_rates_are_gated() {
        let mut sensors = Sensors::standard(NoiseConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut s = FullState::at_rest(
            Vec3::new(1.0, 2.0, 3.0),
            EulerAngles::new(0.1, 0.2, 0.3),
            Vec5::repeat(0.2),
        );
        let acc = Accelerations::zero();
        let (mut np, mut nf) = (0, 0);
        for k in 0..1000 {
            s.t = k as f64 * 1e-3;
            if let Some(sample) = sensors.measure(&s, &acc, &mut rng) {
                if let Some(p) = sample.position {
                    assert_eq!(p.p, s.base.p);
                    np += 1;
                }
                if let Some(a) = sample.attitude {
                    assert_eq!(a.euler, s.base.euler);
                    nf += 1;
                }
            } else {
                assert!(k % 5 != 0);
            }
        }
        assert_eq!((np, nf), (100, 200));
    }
}
