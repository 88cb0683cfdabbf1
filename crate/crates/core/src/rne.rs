//! Recursive Newton-Euler dynamics of the arm on a moving base.
//!
//! Frame 0 is the mount frame. Its linear acceleration carries gravity as a
//! fictitious upward acceleration, so the inward recursion includes the weight of
//! every link. All recursion quantities stay in link frames; only the final
//! coupling wrench is moved to the inertial (force) and body (torque) frames.

use crate::kinematics::fk::{forward_kinematics, mdh_transform};
use crate::model::{ArmModel, Mat5, Vec5, N_JOINTS};
use crate::spatial::{e3, Rotation, Vec3};

/// Motion of the quadcopter base as seen by the arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseMotion {
    pub r_b: Rotation,
    /// Linear acceleration of the base origin, inertial frame (m/s²).
    pub v_dot: Vec3,
    /// Angular velocity, body frame (rad/s).
    pub omega: Vec3,
    /// Angular acceleration, body frame (rad/s²).
    pub omega_dot: Vec3,
}

impl BaseMotion {
    pub fn at_rest(r_b: Rotation) -> Self {
        Self {
            r_b,
            v_dot: Vec3::zeros(),
            omega: Vec3::zeros(),
            omega_dot: Vec3::zeros(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.r_b.iter().all(|x| x.is_finite())
            && self
                .v_dot
                .iter()
                .chain(self.omega.iter())
                .chain(self.omega_dot.iter())
                .all(|x| x.is_finite())
    }
}

/// Force in the inertial frame (N) and torque in the body frame (N·m).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wrench {
    pub force: Vec3,
    pub torque: Vec3,
}

impl Wrench {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn new(force: Vec3, torque: Vec3) -> Self {
        Self { force, torque }
    }
}

/// Per-link quantities of one recursion, each in its own link frame.
#[derive(Debug, Clone, PartialEq)]
pub struct RneResult {
    pub omega: [Vec3; N_JOINTS],
    pub omega_dot: [Vec3; N_JOINTS],
    pub v_dot: [Vec3; N_JOINTS],
    pub v_dot_com: [Vec3; N_JOINTS],
    /// Force exerted on link i by link i-1.
    pub force: [Vec3; N_JOINTS],
    /// Torque exerted on link i by link i-1, about the origin of frame i.
    pub torque: [Vec3; N_JOINTS],
    pub joint_torque: Vec5,
    /// Reaction of the arm on the base, gravity of the arm removed from the force.
    pub coupling: Wrench,
}

impl RneResult {
    /// Per-link forces as CSV with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "link,omega_x,omega_y,omega_z,omega_dot_x,omega_dot_y,omega_dot_z,\
             vc_dot_x,vc_dot_y,vc_dot_z,f_x,f_y,f_z,n_x,n_y,n_z,tau\n",
        );
        for i in 0..N_JOINTS {
            let cols: Vec<String> = [
                self.omega[i],
                self.omega_dot[i],
                self.v_dot_com[i],
                self.force[i],
                self.torque[i],
            ]
            .iter()
            .flat_map(|v| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>())
            .collect();
            out.push_str(&format!("{},{},{:e}\n", i + 1, cols.join(","), self.joint_torque[i]));
        }
        out
    }
}

/// Full recursion with explicit gravity magnitude.
pub fn rne(arm: &ArmModel, base: &BaseMotion, q: &Vec5, qd: &Vec5, qdd: &Vec5, gravity: f64) -> RneResult {
    let z = Vec3::z();
    let r_m = arm.mount_rot();
    let p_m = arm.mount_pos();

    // link 0: the base, expressed in the mount frame
    let a_origin = base.r_b.transpose() * (base.v_dot - gravity * e3())
        + base.omega_dot.cross(&p_m)
        + base.omega.cross(&base.omega.cross(&p_m));
    let mut w = r_m.transpose() * base.omega;
    let mut wd = r_m.transpose() * base.omega_dot;
    let mut vd = r_m.transpose() * a_origin;

    let mut omega = [Vec3::zeros(); N_JOINTS];
    let mut omega_dot = [Vec3::zeros(); N_JOINTS];
    let mut v_dot = [Vec3::zeros(); N_JOINTS];
    let mut v_dot_com = [Vec3::zeros(); N_JOINTS];
    let mut rot = [Rotation::identity(); N_JOINTS];
    let mut pos = [Vec3::zeros(); N_JOINTS];

    for i in 0..N_JOINTS {
        let link = &arm.links[i];
        let (r, p) = mdh_transform(&link.mdh, q[i]);
        let rt = r.transpose();
        let vd_next = rt * (vd + wd.cross(&p) + w.cross(&w.cross(&p)));
        let w_in = rt * w;
        let w_next = w_in + z * qd[i];
        let wd_next = rt * wd + z * qdd[i] + w_in.cross(&z) * qd[i];
        let c = link.com_vec();
        v_dot_com[i] = vd_next + wd_next.cross(&c) + w_next.cross(&w_next.cross(&c));
        omega[i] = w_next;
        omega_dot[i] = wd_next;
        v_dot[i] = vd_next;
        rot[i] = r;
        pos[i] = p;
        w = w_next;
        wd = wd_next;
        vd = vd_next;
    }

    let mut force = [Vec3::zeros(); N_JOINTS];
    let mut torque = [Vec3::zeros(); N_JOINTS];
    let mut joint_torque = Vec5::zeros();
    // free tip: nothing beyond the last link
    let (mut f_out, mut n_out) = (Vec3::zeros(), Vec3::zeros());
    for i in (0..N_JOINTS).rev() {
        let link = &arm.links[i];
        let inertia = link.inertia_mat();
        let c = link.com_vec();
        let zeta = v_dot_com[i] * link.mass;
        let chi = inertia * omega_dot[i] + omega[i].cross(&(inertia * omega[i]));
        // rotation and offset of frame i+1 in frame i
        let (r_next, p_next) = if i + 1 < N_JOINTS {
            (rot[i + 1], pos[i + 1])
        } else {
            (Rotation::identity(), Vec3::zeros())
        };
        let f_child = r_next * f_out;
        let f = zeta + f_child;
        let n = chi + r_next * n_out + c.cross(&zeta) + p_next.cross(&f_child);
        force[i] = f;
        torque[i] = n;
        joint_torque[i] = n.dot(&z);
        f_out = f;
        n_out = n;
    }

    let r_1b = r_m * rot[0];
    let p_1b = p_m + r_m * pos[0];
    let f1_b = r_1b * force[0];
    let coupling = Wrench {
        force: -(base.r_b * f1_b) - arm.mass() * gravity * e3(),
        torque: -p_1b.cross(&f1_b) - r_1b * torque[0],
    };

    RneResult {
        omega,
        omega_dot,
        v_dot,
        v_dot_com,
        force,
        torque,
        joint_torque,
        coupling,
    }
}

/// Coupling wrench `(f_D, tau_D^B)` of the arm on the base.
pub fn rne_coupling(arm: &ArmModel, base: &BaseMotion, q: &Vec5, qd: &Vec5, qdd: &Vec5, gravity: f64) -> Wrench {
    rne(arm, base, q, qd, qdd, gravity).coupling
}

pub fn joint_torques(arm: &ArmModel, base: &BaseMotion, q: &Vec5, qd: &Vec5, qdd: &Vec5, gravity: f64) -> Vec5 {
    rne(arm, base, q, qd, qdd, gravity).joint_torque
}

/// Joint-space inertia matrix, one unit joint acceleration per column.
pub fn arm_inertia_matrix(arm: &ArmModel, q: &Vec5) -> Mat5 {
    let base = BaseMotion::at_rest(Rotation::identity());
    let zero = Vec5::zeros();
    let mut m = Mat5::zeros();
    for j in 0..N_JOINTS {
        let mut e = Vec5::zeros();
        e[j] = 1.0;
        m.set_column(j, &joint_torques(arm, &base, q, &zero, &e, 0.0));
    }
    // symmetric up to rounding; average the two triangles
    (m + m.transpose()) * 0.5
}

/// Joint torques at zero joint acceleration: Coriolis, centrifugal, gravity and base-motion terms.
pub fn arm_bias(arm: &ArmModel, base: &BaseMotion, q: &Vec5, qd: &Vec5, gravity: f64) -> Vec5 {
    joint_torques(arm, base, q, qd, &Vec5::zeros(), gravity)
}

/// Body-frame CoM positions and body-frame CoM velocities (base at rest).
pub fn com_kinematics(arm: &ArmModel, q: &Vec5, qd: &Vec5) -> ([Vec3; N_JOINTS], [Vec3; N_JOINTS], [Vec3; N_JOINTS]) {
    let pose = forward_kinematics(arm, q);
    let mut coms = [Vec3::zeros(); N_JOINTS];
    let mut vels = [Vec3::zeros(); N_JOINTS];
    let mut omegas = [Vec3::zeros(); N_JOINTS];
    let mut w = Vec3::zeros();
    for i in 0..N_JOINTS {
        w += pose.axis(i + 1) * qd[i];
        let c = pose.com(arm, i + 1);
        let mut v = Vec3::zeros();
        for j in 0..=i {
            v += pose.axis(j + 1).cross(&(c - pose.origin(j + 1))) * qd[j];
        }
        coms[i] = c;
        vels[i] = v;
        omegas[i] = w;
    }
    (coms, vels, omegas)
}

/// Kinetic energy of the arm with the base at rest.
pub fn arm_kinetic_energy(arm: &ArmModel, q: &Vec5, qd: &Vec5) -> f64 {
    let pose = forward_kinematics(arm, q);
    let (_, vels, omegas) = com_kinematics(arm, q, qd);
    (0..N_JOINTS)
        .map(|i| {
            let link = &arm.links[i];
            let w_link = pose.rotations[i + 1].transpose() * omegas[i];
            0.5 * link.mass * vels[i].norm_squared() + 0.5 * w_link.dot(&(link.inertia_mat() * w_link))
        })
        .sum()
}

/// Gravitational potential of the arm relative to the base origin (NED: height is `-z`).
pub fn arm_potential_energy(arm: &ArmModel, r_b: &Rotation, q: &Vec5, gravity: f64) -> f64 {
    let pose = forward_kinematics(arm, q);
    (0..N_JOINTS)
        .map(|i| -arm.links[i].mass * gravity * e3().dot(&(r_b * pose.com(arm, i + 1))))
        .sum()
}
