//! Closed-loop simulation of one scenario.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::control::{
    attitude_control, computed_torque, estimate_coupling, position_control, reference_rate, reference_velocity,
    thrust_attitude_extract, wrap_angle, AsinPolicy, FilteredDifferentiator, LowPass, PoseFilter,
};
use crate::coordination::{coordinate_cooperation, coordinate_hover, workspace_center, BaseEstimate, Mode};
use crate::error::{Error, Result};
use crate::kinematics::fk::{desired_joint_velocity, forward_kinematics, jacobians, Vec6, SINGULAR_TOL};
use crate::kinematics::ik::{inverse_kinematics_axis, tool_axis, BranchSelect};
use crate::model::{SystemModel, Vec5};
use crate::plant::{
    derivative, step_with, Accelerations, ActuatorCommand, AttitudeReading, FullState, JointReading, PositionReading,
    Sensors,
};
use crate::rne::BaseMotion;
use crate::spatial::{base_rotation, euler_from_rot, euler_rate_matrix, EulerAngles, Rotation, Vec3};

use super::metrics::Metrics;
use super::record::{write_records, Record};
use super::scenario::{ReferenceDerivative, Scenario};
use super::trajectory::Trajectory;

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<Record>,
    pub metrics: Metrics,
    /// Body-frame workspace centre the run used.
    pub center: Vec3,
}

/// Paths of the files written by [`run_scenario`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunFiles {
    pub timeseries: PathBuf,
    pub metrics: PathBuf,
}

impl RunFiles {
    pub fn new(out_dir: &Path, name: &str) -> Self {
        Self {
            timeseries: out_dir.join(format!("{name}_timeseries.csv")),
            metrics: out_dir.join(format!("{name}_metrics.csv")),
        }
    }
}

/// Runs the scenario and writes `<name>_timeseries.csv` and `<name>_metrics.csv`.
pub fn run_scenario(scenario: &Scenario, out_dir: &Path) -> Result<(RunOutput, RunFiles)> {
    let out = simulate(scenario)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let files = RunFiles::new(out_dir, &scenario.name);
    write_records(&files.timeseries, &out.records)?;
    out.metrics.write_csv(&files.metrics)?;
    Ok((out, files))
}

/// Latest reading of every sensor channel.
struct Readings {
    position: PositionReading,
    attitude: AttitudeReading,
    joints: JointReading,
}

/// Controller-side state carried between ticks.
struct Controller {
    filter: PoseFilter,
    readings: Option<Readings>,
    previous_q_d: Vec5,
    d_v_r: FilteredDifferentiator<3>,
    d_p_dot: FilteredDifferentiator<3>,
    d_p_b_d: FilteredDifferentiator<3>,
    d_euler_d: FilteredDifferentiator<3>,
    d_omega_r: FilteredDifferentiator<3>,
    d_qd_d: FilteredDifferentiator<5>,
    lp_v_dot: LowPass<3>,
    lp_omega_dot: LowPass<3>,
    lp_qdd: LowPass<5>,
}

/// Everything the controller decided at one tick, kept for logging.
struct Decision {
    cmd: ActuatorCommand,
    p_b_d: Vec3,
    euler_d: Vec3,
    q_d: Vec5,
    coupling_hat: crate::rne::Wrench,
}

pub fn simulate(s: &Scenario) -> Result<RunOutput> {
    s.validate()?;
    let model = s.load_model()?;
    let arm = &model.arm;
    let center = match s.workspace_center {
        Some(c) => Vec3::from(c),
        None => workspace_center(arm, s.seed),
    };
    let p0 = Vec3::from(s.initial_position);
    let mut traj = Trajectory::new(
        &s.trajectory.spec,
        p0 + center,
        s.trajectory.alpha,
        s.trajectory.beta,
        &s.base_dir,
    )?;
    if !s.velocity_feedforward {
        traj = traj.without_feedforward();
    }

    // start on the path with the arm already following it
    let goal0 = traj.goal(0.0);
    let axis = tool_axis(goal0.alpha, goal0.beta);
    let q0 = inverse_kinematics_axis(arm, &(goal0.p - p0), &axis, BranchSelect::nearest_to_zero())?;
    let stack = jacobians(arm, &q0, &Rotation::identity(), goal0.alpha, goal0.beta)?;
    let qd0 = desired_joint_velocity(&stack, &goal0.eta(), &Vec6::zeros(), SINGULAR_TOL)?;
    let mut state = FullState::at_rest(p0, EulerAngles::default(), q0);
    state.joints.qd = qd0;

    let tau = s.controller.derivative_filter;
    let mut ctl = Controller {
        filter: PoseFilter::new(s.estimator.position_bandwidth, s.estimator.attitude_bandwidth),
        readings: None,
        previous_q_d: q0,
        d_v_r: FilteredDifferentiator::new(tau),
        d_p_dot: FilteredDifferentiator::new(tau),
        d_p_b_d: FilteredDifferentiator::new(tau),
        d_euler_d: FilteredDifferentiator::new(tau),
        d_omega_r: FilteredDifferentiator::new(tau),
        d_qd_d: FilteredDifferentiator::new(tau),
        lp_v_dot: LowPass::new(s.controller.acceleration_filter),
        lp_omega_dot: LowPass::new(s.controller.acceleration_filter),
        lp_qdd: LowPass::new(s.controller.acceleration_filter),
    };
    // the take-off pose is known, so the filter does not start from a noisy fix
    ctl.filter.start_at(0.0, &p0, EulerAngles::default());
    let mut sensors = Sensors::standard(s.noise);
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let ticks = (s.duration / s.dt).round() as u64;
    let log_every = ((s.log_interval / s.dt).round() as u64).max(1);
    let mut records = Vec::with_capacity((ticks / log_every + 1) as usize);
    let mut last_accel = Accelerations::zero();

    for tick in 0..ticks {
        let t = tick as f64 * s.dt;
        state.t = t;
        let at_tick = |source: Error| Error::Tick {
            t,
            tick,
            source: Box::new(source),
        };
        let decision = ctl
            .tick(
                s,
                &model,
                &traj,
                p0,
                center,
                &state,
                &last_accel,
                &mut sensors,
                &mut rng,
            )
            .map_err(at_tick)?;
        let dist = s.disturbance.at(t);
        let now = derivative(&state, &decision.cmd, &dist, &model).map_err(at_tick)?;
        if tick % log_every == 0 {
            records.push(record(&model, &state, &traj, &decision, &now.coupling));
        }
        let cmd = decision.cmd;
        state = step_with(&state, &model, s.dt, |x| (cmd, s.disturbance.at(x.t))).map_err(at_tick)?;
        last_accel = now.accel;
    }
    let metrics = Metrics::compute(&records, s.settle_time)?;
    Ok(RunOutput {
        records,
        metrics,
        center,
    })
}

impl Controller {
    #[allow(clippy::too_many_arguments)]
    fn tick(
        &mut self,
        s: &Scenario,
        model: &SystemModel,
        traj: &Trajectory,
        p0: Vec3,
        center: Vec3,
        state: &FullState,
        last_accel: &Accelerations,
        sensors: &mut Sensors,
        rng: &mut ChaCha8Rng,
    ) -> Result<Decision> {
        let t = state.t;
        let arm = &model.arm;
        let g = model.gravity();
        let gains = &s.gains;

        if let Some(r) = &self.readings {
            self.filter.propagate(s.dt, &r.position.v, &r.attitude.omega)?;
        }
        if let Some(sample) = sensors.measure(state, last_accel, rng) {
            if let Some(p) = sample.position {
                self.filter.correct_position(p.t, &p.p);
            }
            if let Some(a) = sample.attitude {
                self.filter.correct_attitude(a.t, a.euler);
            }
            match (&mut self.readings, sample.position, sample.attitude, sample.joints) {
                (None, Some(position), Some(attitude), Some(joints)) => {
                    self.readings = Some(Readings {
                        position,
                        attitude,
                        joints,
                    })
                }
                (Some(r), p, a, j) => {
                    if let Some(p) = p {
                        r.position = p;
                    }
                    if let Some(a) = a {
                        r.attitude = a;
                    }
                    if let Some(j) = j {
                        r.joints = j;
                    }
                }
                _ => {}
            }
        }
        let r = self
            .readings
            .as_ref()
            .ok_or_else(|| Error::InvalidScenario("sensors produced no first sample".into()))?;
        let (p_hat, euler_hat) = match (self.filter.position(), self.filter.euler()) {
            (Some(p), Some(e)) => (p, e),
            _ => return Err(Error::InvalidScenario("pose estimate not initialised".into())),
        };
        let r_hat = base_rotation(euler_hat);
        let v_hat = r.position.v;
        let omega_hat = r.attitude.omega;
        let (q, qd) = (r.joints.q, r.joints.qd);

        let goal = traj.goal(t);
        let est = BaseEstimate {
            p: p_hat,
            r_b: r_hat,
            v: v_hat,
            omega: omega_hat,
        };
        let coord = match s.mode {
            Mode::Hover => coordinate_hover(&goal, &est, arm, &self.previous_q_d)?,
            Mode::Cooperation => coordinate_cooperation(&goal, &est, arm, &center, &self.previous_q_d)?,
        };
        self.previous_q_d = coord.q_d;

        // base translation
        let p_b_d = coord.p_b_d.unwrap_or(p0);
        let p_b_d_rate = self.d_p_b_d.update(t, &p_b_d);
        let p_dot_d = if s.velocity_feedforward && s.mode == Mode::Cooperation {
            p_b_d_rate
        } else {
            Vec3::zeros()
        };
        let p_err = p_hat - p_b_d;
        let v_r = reference_velocity(&p_dot_d, &p_err, gains);
        let v_r_dot = match s.controller.reference_derivative {
            ReferenceDerivative::Filtered => self.d_v_r.update(t, &v_r),
            ReferenceDerivative::Analytic => {
                let p_dd_d = self.d_p_dot.update(t, &p_dot_d);
                p_dd_d - crate::spatial::Mat3::from_diagonal(&Vec3::from(gains.kp)) * (v_hat - p_dot_d)
            }
        };
        let v_err = v_hat - v_r;
        let motion = BaseMotion {
            r_b: r_hat,
            v_dot: self.lp_v_dot.update(s.dt, &r.position.v_dot),
            omega: omega_hat,
            omega_dot: self.lp_omega_dot.update(s.dt, &r.attitude.omega_dot),
        };
        let qdd = self.lp_qdd.update(s.dt, &r.joints.qdd);
        let coupling_hat = estimate_coupling(arm, &motion, &q, &qd, &qdd, g, s.ablate_coupling);
        let m_s = model.total_mass();
        let f = position_control(&p_err, &v_err, &v_r_dot, &coupling_hat.force, gains, m_s, g);
        let policy = if s.controller.clamp_asin {
            AsinPolicy::Clamp
        } else {
            AsinPolicy::Strict
        };
        let (thrust, phi_d, theta_d) = thrust_attitude_extract(&f, 0.0, policy)?;

        // base attitude
        let euler_d = Vec3::new(phi_d, theta_d, 0.0);
        let euler_d_rate = self.d_euler_d.update(t, &euler_d);
        let mut euler_err = euler_hat.to_vector() - euler_d;
        euler_err.z = wrap_angle(euler_err.z);
        let omega_r = reference_rate(&euler_rate_matrix(euler_hat), &euler_d_rate, &euler_err, gains);
        let omega_r_dot = self.d_omega_r.update(t, &omega_r);
        let torque = attitude_control(
            euler_hat,
            &euler_err,
            &(omega_hat - omega_r),
            &omega_r_dot,
            &omega_hat,
            &coupling_hat.torque,
            gains,
            &model.quad.inertia_mat(),
        )?;

        // arm
        let qdd_d = self.d_qd_d.update(t, &coord.qd_d);
        let joint_torque = computed_torque(
            arm,
            &motion,
            &(q - coord.q_d),
            &(qd - coord.qd_d),
            &qdd_d,
            &q,
            &qd,
            gains,
            g,
        );

        Ok(Decision {
            cmd: ActuatorCommand {
                thrust,
                torque,
                joint_torque,
            },
            p_b_d,
            euler_d,
            q_d: coord.q_d,
            coupling_hat,
        })
    }
}

fn record(
    model: &SystemModel,
    state: &FullState,
    traj: &Trajectory,
    d: &Decision,
    truth: &crate::rne::Wrench,
) -> Record {
    let b = &state.base;
    let r_b = state.rotation();
    let pose = forward_kinematics(&model.arm, &state.joints.q);
    let p_e = b.p + r_b * pose.ee_position();
    let ee = euler_from_rot(&(r_b * pose.ee_rotation())).to_vector();
    let goal = traj.goal(state.t);
    let e_alpha = wrap_angle(ee.x - goal.alpha);
    let e_beta = wrap_angle(ee.y - goal.beta);
    Record {
        t: state.t,
        p_b: b.p,
        v_b: b.v,
        euler_b: b.euler.to_vector(),
        omega_b: b.omega,
        q: state.joints.q,
        qd: state.joints.qd,
        p_e,
        euler_e: ee,
        p_b_d: d.p_b_d,
        euler_b_d: d.euler_d,
        q_d: d.q_d,
        p_e_d: goal.p,
        alpha_d: goal.alpha,
        beta_d: goal.beta,
        f_hat: d.coupling_hat.force,
        tau_hat: d.coupling_hat.torque,
        f_true: truth.force,
        tau_true: truth.torque,
        e_ep: (p_e - goal.p).norm(),
        e_ea: e_alpha.hypot(e_beta),
    }
}
