//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::path::PathBuf;

use aeromanip::experiments::Scenario;
use aeromanip::kinematics::fk::{forward_kinematics, jacobians};
use aeromanip::kinematics::ik::{inverse_kinematics_axis, tool_angles, BranchSelect};
use aeromanip::kinematics::workspace::sample_joints;
use aeromanip::model::{ArmModel, SystemModel, Vec5};
use aeromanip::rne::{arm_inertia_matrix, arm_kinetic_energy, com_kinematics, rne, BaseMotion};
use aeromanip::spatial::{base_rotation, e3, rot_from_axis_angle, rotation_error_vector, EulerAngles, Rotation, Vec3};
use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

pub fn scenario(name: &str) -> Scenario {
    Scenario::load(scenario_path(name)).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_rotation(rng: &mut impl Rng) -> Rotation {
    base_rotation(EulerAngles::new(
        rng.random_range(-0.6..0.6),
        rng.random_range(-0.6..0.6),
        rng.random_range(-3.1..3.1),
    ))
}

pub fn random_vec3(rng: &mut impl Rng, r: f64) -> Vec3 {
    Vec3::from_fn(|_, _| rng.random_range(-r..r))
}

pub fn random_vec5(rng: &mut impl Rng, r: f64) -> Vec5 {
    Vec5::from_fn(|_, _| rng.random_range(-r..r))
}

#[derive(Debug, Default)]
pub struct RoundTrip {
    pub max_position: f64,
    pub max_axis: f64,
    pub failures: usize,
}

/// FK then IK then FK over `n` random in-limit configurations.
pub fn fk_ik_roundtrip(arm: &ArmModel, n: usize, seed: u64) -> RoundTrip {
    let mut rng = rng(seed);
    let mut out = RoundTrip::default();
    for _ in 0..n {
        let q = sample_joints(arm, &mut rng);
        let pose = forward_kinematics(arm, &q);
        let axis = pose.axis(6);
        match inverse_kinematics_axis(arm, &pose.ee_position(), &axis, BranchSelect::Auto { previous: q }) {
            Ok(q_ik) => {
                let back = forward_kinematics(arm, &q_ik);
                out.max_position = out.max_position.max((back.ee_position() - pose.ee_position()).norm());
                out.max_axis = out.max_axis.max((back.axis(6) - axis).norm());
            }
            Err(_) => out.failures += 1,
        }
    }
    out
}

/// Largest gap between the analytic Jacobians and central differences of FK,
/// over `n` random configurations and base attitudes.
pub fn jacobian_fd_error(arm: &ArmModel, n: usize, seed: u64) -> f64 {
    let mut rng = rng(seed);
    let h = 1e-6;
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < n {
        let q = sample_joints(arm, &mut rng);
        let r_b = random_rotation(&mut rng);
        let (alpha, beta) = tool_angles(&(r_b * forward_kinematics(arm, &q).axis(6)));
        // the attitude rate map is singular at beta = +-pi/2
        if beta.abs() > 1.4 {
            continue;
        }
        let stack = jacobians(arm, &q, &r_b, alpha, beta).unwrap();
        for k in 0..5 {
            let mut qp = q;
            let mut qm = q;
            qp[k] += h;
            qm[k] -= h;
            let (fp, fm) = (forward_kinematics(arm, &qp), forward_kinematics(arm, &qm));
            let dv = r_b * (fp.ee_position() - fm.ee_position()) / (2.0 * h);
            worst = worst.max((dv - stack.jv.column(k)).amax());
            let dr =
                rotation_error_vector(&(r_b * fp.ee_rotation() * (r_b * fm.ee_rotation()).transpose())) / (2.0 * h);
            worst = worst.max((dr - stack.jo.column(k)).amax());
            let (ap, bp) = tool_angles(&(r_b * fp.axis(6)));
            let (am, bm) = tool_angles(&(r_b * fm.axis(6)));
            let d_ab = nalgebra::Vector2::new((ap - am) / (2.0 * h), (bp - bm) / (2.0 * h));
            let col = stack.jq.column(k);
            worst = worst.max((d_ab - nalgebra::Vector2::new(col[3], col[4])).amax());
        }
        done += 1;
    }
    worst
}

/// Static base torque against the moment of the link weights about the base origin.
pub fn static_torque_error(model: &SystemModel, n: usize, seed: u64) -> f64 {
    let arm = &model.arm;
    let g = model.gravity();
    let mut rng = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let q = sample_joints(arm, &mut rng);
        let r_b = random_rotation(&mut rng);
        let pose = forward_kinematics(arm, &q);
        let weight_b = r_b.transpose() * (g * e3());
        let oracle: Vec3 = (0..5)
            .map(|i| pose.com(arm, i + 1).cross(&(arm.links[i].mass * weight_b)))
            .sum();
        let w = rne(arm, &BaseMotion::at_rest(r_b), &q, &Vec5::zeros(), &Vec5::zeros(), g).coupling;
        worst = worst.max((w.torque - oracle).amax()).max(w.force.amax());
    }
    worst
}

/// Linear momentum of the arm in the inertial frame.
fn arm_momentum(arm: &ArmModel, v_b: &Vec3, r_b: &Rotation, omega: &Vec3, q: &Vec5, qd: &Vec5) -> Vec3 {
    let (coms, vels, _) = com_kinematics(arm, q, qd);
    (0..5)
        .map(|i| arm.links[i].mass * (v_b + r_b * (omega.cross(&coms[i]) + vels[i])))
        .sum()
}

/// Dynamic coupling force against minus the momentum rate of the arm, both
/// with gravity removed. The momentum rate is a central difference along the
/// motion with constant accelerations.
pub fn momentum_force_error(model: &SystemModel, n: usize, seed: u64) -> f64 {
    let arm = &model.arm;
    let mut rng = rng(seed);
    let h = 1e-4;
    let mut worst = 0.0f64;
    for _ in 0..n {
        let q = sample_joints(arm, &mut rng);
        let qd = random_vec5(&mut rng, 2.0);
        let qdd = random_vec5(&mut rng, 5.0);
        let r0 = random_rotation(&mut rng);
        let v0 = random_vec3(&mut rng, 1.0);
        let v_dot = random_vec3(&mut rng, 3.0);
        let omega = random_vec3(&mut rng, 1.5);
        let omega_dot = random_vec3(&mut rng, 3.0);
        let at = |t: f64| {
            let r = r0 * rot_from_axis_angle(&(omega * t + omega_dot * (0.5 * t * t)));
            arm_momentum(
                arm,
                &(v0 + v_dot * t),
                &r,
                &(omega + omega_dot * t),
                &(q + qd * t + qdd * (0.5 * t * t)),
                &(qd + qdd * t),
            )
        };
        let p_dot = (at(h) - at(-h)) / (2.0 * h);
        let base = BaseMotion {
            r_b: r0,
            v_dot,
            omega,
            omega_dot,
        };
        let w = rne(arm, &base, &q, &qd, &qdd, model.gravity()).coupling;
        worst = worst.max((w.force + p_dot).amax());
    }
    worst
}

#[derive(Debug, Default)]
pub struct InertiaCheck {
    pub max_asymmetry: f64,
    pub min_eigenvalue: f64,
    pub max_energy_gap: f64,
}

pub fn inertia_checks(arm: &ArmModel, n: usize, seed: u64) -> InertiaCheck {
    let mut rng = rng(seed);
    let mut out = InertiaCheck {
        min_eigenvalue: f64::INFINITY,
        ..Default::default()
    };
    for _ in 0..n {
        let q = sample_joints(arm, &mut rng);
        let qd = random_vec5(&mut rng, 3.0);
        let m = arm_inertia_matrix(arm, &q);
        out.max_asymmetry = out.max_asymmetry.max((m - m.transpose()).amax());
        let eig = SymmetricEigen::new(0.5 * (m + m.transpose())).eigenvalues.min();
        out.min_eigenvalue = out.min_eigenvalue.min(eig);
        let gap = (0.5 * qd.dot(&(m * qd)) - arm_kinetic_energy(arm, &q, &qd)).abs();
        out.max_energy_gap = out.max_energy_gap.max(gap);
    }
    out
}
