//! Closed-form inverse kinematics for the spherical-shoulder, planar-wrist arm.
//!
//! The tool axis (end-effector `z`) is fixed by `(alpha, beta)`; the roll about
//! the tool axis is not controllable with five joints. The tool point, the wrist
//! point `W = P - L5 u` and the shoulder centre all lie in the plane normal to the
//! parallel axes 4-5, which fixes that plane. The elbow then follows from the
//! triangle shoulder-elbow-wrist and the joint angles from the frame axes.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{ArmModel, Vec5};
use crate::spatial::{rot_x, Mat3, Vec3};

use super::fk::{forward_kinematics, mdh_transform};

/// One of the eight closed-form solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Branch {
    /// Shoulder: take `q2 < 0` with `q1` turned by pi.
    pub shoulder_flip: bool,
    /// Elbow on the other side of the shoulder-wrist line.
    pub elbow_flip: bool,
    /// Axis 4 anti-parallel to the reference plane normal (upper-arm roll by pi).
    pub wrist_flip: bool,
}

impl Branch {
    pub fn all() -> impl Iterator<Item = Branch> {
        (0..8u8).map(|k| Branch {
            shoulder_flip: k & 1 != 0,
            elbow_flip: k & 2 != 0,
            wrist_flip: k & 4 != 0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BranchSelect {
    /// Feasible branch nearest to `previous`; also used to resolve degenerate poses.
    Auto {
        previous: Vec5,
    },
    Fixed(Branch),
}

impl BranchSelect {
    pub fn nearest_to_zero() -> Self {
        BranchSelect::Auto {
            previous: Vec5::zeros(),
        }
    }
}

/// Tool axis for an X-Y-Z attitude `(alpha, beta, *)`.
pub fn tool_axis(alpha: f64, beta: f64) -> Vec3 {
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    Vec3::new(sb, -sa * cb, ca * cb)
}

/// `(alpha, beta)` whose tool axis is `u`.
pub fn tool_angles(u: &Vec3) -> (f64, f64) {
    let u = u.normalize();
    ((-u.y).atan2(u.z), u.x.clamp(-1.0, 1.0).asin())
}

fn wrap(a: f64) -> f64 {
    let mut x = a % (2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    } else if x <= -PI {
        x += 2.0 * PI;
    }
    x
}

/// Numerically stable triangle area (Kahan) from the three side lengths.
fn triangle_area(a: f64, b: f64, c: f64) -> f64 {
    let mut s = [a, b, c];
    s.sort_by(|x, y| y.total_cmp(x));
    let [a, b, c] = s;
    let prod = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    0.25 * prod.max(0.0).sqrt()
}

fn any_perpendicular(v: &Vec3) -> Vec3 {
    let pick = if v.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    v.cross(&pick).normalize()
}

/// Inverse kinematics for a body-frame tool point and body-relative `(alpha, beta)`.
pub fn inverse_kinematics(arm: &ArmModel, p_eb: &Vec3, alpha: f64, beta: f64, select: BranchSelect) -> Result<Vec5> {
    inverse_kinematics_axis(arm, p_eb, &tool_axis(alpha, beta), select)
}

/// Inverse kinematics for a body-frame tool point and tool axis.
pub fn inverse_kinematics_axis(arm: &ArmModel, p_eb: &Vec3, axis_b: &Vec3, select: BranchSelect) -> Result<Vec5> {
    let previous = match select {
        BranchSelect::Auto { previous } => previous,
        BranchSelect::Fixed(_) => Vec5::zeros(),
    };
    let solutions = solve_all(arm, p_eb, axis_b, &previous)?;
    let feasible = solutions.into_iter().filter(|(_, q)| arm.within_limits(q, 1e-9));
    let pick = match select {
        BranchSelect::Auto { previous } => {
            feasible.min_by(|a, b| (a.1 - previous).norm().total_cmp(&(b.1 - previous).norm()))
        }
        BranchSelect::Fixed(branch) => feasible.into_iter().find(|(b, _)| *b == branch),
    };
    pick.map(|(_, q)| q).ok_or(Error::NoFeasibleBranch)
}

/// Every closed-form solution, without the joint-limit filter.
pub fn solve_all(arm: &ArmModel, p_eb: &Vec3, axis_b: &Vec3, previous: &Vec5) -> Result<Vec<(Branch, Vec5)>> {
    let r_m = arm.mount_rot();
    let p = r_m.transpose() * (p_eb - arm.mount_pos());
    let u = (r_m.transpose() * axis_b).normalize();
    let reach = arm.reach();
    let dist = p.norm();
    if dist > reach + 1e-12 {
        return Err(Error::Unreachable { distance: dist, reach });
    }
    let links = &arm.links;
    let shoulder = Vec3::new(0.0, 0.0, links[0].mdh.d);
    let upper = links[2].mdh.d;
    let fore = links[4].mdh.a;
    let wrist = p - u * arm.tool_length;
    let sw = wrist - shoulder;
    let d = sw.norm();
    if d > upper + fore + 1e-12 || d < (upper - fore).abs() - 1e-12 || d < 1e-12 {
        return Err(Error::Unreachable {
            distance: d,
            reach: upper + fore,
        });
    }
    let w_hat = sw / d;

    // plane of the planar sub-chain; degenerate when the tool points along the shoulder-wrist line
    let mut normal = sw.cross(&u);
    if normal.norm() < 1e-9 * d.max(1e-3) {
        let prev_pose = forward_kinematics(arm, previous);
        let z4 = r_m.transpose() * prev_pose.axis(4);
        normal = z4 - w_hat * w_hat.dot(&z4);
        if normal.norm() < 1e-9 {
            normal = any_perpendicular(&w_hat);
        }
    }
    let normal = normal.normalize();

    let area = triangle_area(upper, fore, d);
    let sin_psi = 2.0 * area / (upper * d);
    let cos_psi = (upper * upper + d * d - fore * fore) / (2.0 * upper * d);
    let psi = sin_psi.atan2(cos_psi);

    let mut out = Vec::with_capacity(8);
    for branch in Branch::all() {
        let n = if branch.wrist_flip { -normal } else { normal };
        let side = if branch.elbow_flip { -1.0 } else { 1.0 };
        let perp = normal.cross(&w_hat);
        let upper_dir = w_hat * psi.cos() + perp * (side * psi.sin());
        let elbow = shoulder + upper_dir * upper;
        let fore_dir = if fore > 0.0 { (wrist - elbow) / fore } else { u };

        let rho = upper_dir.x.hypot(upper_dir.y);
        let (mut q1, mut q2) = if rho < 1e-12 {
            (previous[0] + links[0].mdh.theta_offset, rho.atan2(upper_dir.z))
        } else {
            (upper_dir.y.atan2(upper_dir.x), rho.atan2(upper_dir.z))
        };
        if branch.shoulder_flip {
            q1 += PI;
            q2 = -q2;
        }
        let mut q = Vec5::zeros();
        q[0] = wrap(q1 - links[0].mdh.theta_offset);
        q[1] = wrap(q2 - links[1].mdh.theta_offset);

        let (r1, _) = mdh_transform(&links[0].mdh, q[0]);
        let (r2, _) = mdh_transform(&links[1].mdh, q[1]);
        let pre3: Mat3 = r1 * r2 * rot_x(links[2].mdh.alpha);
        // z4 = pre3 Rz(th3) v with v the image of e3 under RotX(alpha3)
        let v = rot_x(links[3].mdh.alpha) * Vec3::z();
        let c = pre3.transpose() * n;
        let th3 = c.y.atan2(c.x) - v.y.atan2(v.x);
        q[2] = wrap(th3 - links[2].mdh.theta_offset);

        let (r3, _) = mdh_transform(&links[2].mdh, q[2]);
        let pre4 = pre3 * crate::spatial::rot_z(q[2] + links[2].mdh.theta_offset) * rot_x(links[3].mdh.alpha);
        debug_assert!((pre3 * crate::spatial::rot_z(th3) - r1 * r2 * r3).norm() < 1e-9);
        let c = pre4.transpose() * fore_dir;
        q[3] = wrap(c.y.atan2(c.x) - links[3].mdh.theta_offset);

        let (r4, _) = mdh_transform(&links[3].mdh, q[3]);
        let pre5 = r1 * r2 * r3 * r4 * rot_x(links[4].mdh.alpha);
        let c = pre5.transpose() * u;
        q[4] = wrap(c.y.atan2(c.x) - links[4].mdh.theta_offset);
        out.push((branch, q));
    }
    Ok(out)
}
