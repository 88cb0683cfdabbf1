//! Physical parameters of the quadcopter and the 5-DoF arm, their config file
//! format, and the link-length sizing procedure.
//!
//! Link frames follow the modified Denavit-Hartenberg convention: the transform
//! from frame `i-1` to frame `i` is `RotX(alpha) TransX(a) RotZ(q + theta_offset) TransZ(d)`,
//! where `a` and `alpha` belong to the preceding link. The end-effector frame sits
//! `tool_length` along `x5` and is rotated so that its `z` axis is the tool axis.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics;
use crate::spatial::{Mat3, Vec3};

pub const N_JOINTS: usize = 5;
pub type Vec5 = SVector<f64, N_JOINTS>;
pub type Mat5 = SMatrix<f64, N_JOINTS, N_JOINTS>;

/// Joint range allowed for every joint except the shoulder pitch.
pub const JOINT_BOUND: f64 = 3.0 * PI / 4.0;
const LIMIT_TOL: f64 = 1e-12;

/// Modified DH parameters for one joint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mdh {
    /// Common-normal length from the previous axis (m).
    pub a: f64,
    /// Twist from the previous axis (rad).
    pub alpha: f64,
    /// Offset along this joint's axis (m).
    pub d: f64,
    pub theta_offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub mdh: Mdh,
    /// `[lo, hi]` in rad.
    pub limits: [f64; 2],
    pub mass: f64,
    /// Centre of mass in the link frame (m).
    pub com: [f64; 3],
    /// Inertia about the CoM in the link frame (kg m^2), row-major.
    pub inertia: [[f64; 3]; 3],
}

impl Link {
    pub fn com_vec(&self) -> Vec3 {
        Vec3::from(self.com)
    }

    pub fn inertia_mat(&self) -> Mat3 {
        mat3_from_rows(&self.inertia)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmModel {
    /// Origin of the mount frame in the body frame (m).
    pub mount_position: [f64; 3],
    /// Orientation of the mount frame in the body frame, row-major.
    pub mount_rotation: [[f64; 3]; 3],
    /// Distance from the last joint origin to the tool point along `x5` (m).
    pub tool_length: f64,
    pub links: Vec<Link>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadModel {
    pub mass: f64,
    pub inertia: [[f64; 3]; 3],
    pub wheelbase: f64,
    pub gravity: f64,
}

impl QuadModel {
    pub fn inertia_mat(&self) -> Mat3 {
        mat3_from_rows(&self.inertia)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemModel {
    pub quad: QuadModel,
    pub arm: ArmModel,
}

pub(crate) fn mat3_from_rows(rows: &[[f64; 3]; 3]) -> Mat3 {
    Mat3::from_fn(|r, c| rows[r][c])
}

pub(crate) fn rows_from_mat3(m: &Mat3) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = m[(r, c)];
        }
    }
    out
}

impl ArmModel {
    pub fn mount_pos(&self) -> Vec3 {
        Vec3::from(self.mount_position)
    }

    pub fn mount_rot(&self) -> Mat3 {
        mat3_from_rows(&self.mount_rotation)
    }

    pub fn mass(&self) -> f64 {
        self.links.iter().map(|l| l.mass).sum()
    }

    pub fn lower_limits(&self) -> Vec5 {
        Vec5::from_fn(|i, _| self.links[i].limits[0])
    }

    pub fn upper_limits(&self) -> Vec5 {
        Vec5::from_fn(|i, _| self.links[i].limits[1])
    }

    pub fn within_limits(&self, q: &Vec5, tol: f64) -> bool {
        self.links
            .iter()
            .zip(q.iter())
            .all(|(l, &qi)| qi >= l.limits[0] - tol && qi <= l.limits[1] + tol)
    }

    /// Sum of the segment lengths: the largest possible tool distance from the mount.
    pub fn reach(&self) -> f64 {
        self.link_lengths().iter().sum()
    }

    /// Segment lengths `[L1..L5]` recovered from the MDH table.
    ///
    /// `L1` is the shoulder offset, `L2 + L3` the upper arm, `L4` the forearm and
    /// `L5` the tool. The split of the upper arm between links 2 and 3 is read
    /// from the CoM of link 2, which sits at the middle of its segment.
    pub fn link_lengths(&self) -> [f64; 5] {
        let upper = self.links[2].mdh.d;
        let l2 = (2.0 * Vec3::from(self.links[1].com).norm()).min(upper);
        [
            self.links[0].mdh.d,
            l2,
            upper - l2,
            self.links[4].mdh.a,
            self.tool_length,
        ]
    }

    /// Builds the reference arm geometry from segment lengths.
    ///
    /// Joint 1 turns about the mount `z` axis (down), joint 2 pitches the upper arm
    /// away from straight down, joint 3 rolls about the upper arm, and joints 4 and 5
    /// are parallel pitch joints. At `q = 0` the arm hangs straight down with the tool
    /// pointing down. Each segment is a uniform rod; the arm mass is shared in
    /// proportion to length on top of `min_link_mass` per link.
    pub fn from_link_lengths(lengths: [f64; 5], arm_mass: f64, min_link_mass: f64) -> Self {
        let [l1, l2, l3, l4, l5] = lengths;
        let total: f64 = lengths.iter().sum();
        let spare = (arm_mass - min_link_mass * N_JOINTS as f64).max(0.0);
        let mass_of = |l: f64| {
            if total > 0.0 {
                min_link_mass + spare * l / total
            } else {
                arm_mass / N_JOINTS as f64
            }
        };
        let wide = [-JOINT_BOUND, JOINT_BOUND];
        let mdh = [
            Mdh {
                a: 0.0,
                alpha: 0.0,
                d: l1,
                theta_offset: 0.0,
            },
            Mdh {
                a: 0.0,
                alpha: -FRAC_PI_2,
                d: 0.0,
                theta_offset: 0.0,
            },
            Mdh {
                a: 0.0,
                alpha: FRAC_PI_2,
                d: l2 + l3,
                theta_offset: 0.0,
            },
            Mdh {
                a: 0.0,
                alpha: -FRAC_PI_2,
                d: 0.0,
                theta_offset: -FRAC_PI_2,
            },
            Mdh {
                a: l4,
                alpha: 0.0,
                d: 0.0,
                theta_offset: 0.0,
            },
        ];
        let limits = [wide, [0.0, JOINT_BOUND], wide, wide, wide];
        // (segment axis in link frame, start point, length)
        let segments = [
            (Vec3::z(), Vec3::new(0.0, 0.0, -l1), l1),
            (-Vec3::y(), Vec3::zeros(), l2),
            (Vec3::z(), Vec3::new(0.0, 0.0, -l3), l3),
            (Vec3::x(), Vec3::zeros(), l4),
            (Vec3::x(), Vec3::zeros(), l5),
        ];
        let links = (0..N_JOINTS)
            .map(|i| {
                let (axis, start, len) = segments[i];
                let mass = mass_of(len);
                let com = start + axis * (0.5 * len);
                Link {
                    mdh: mdh[i],
                    limits: limits[i],
                    mass,
                    com: [com.x, com.y, com.z],
                    inertia: rows_from_mat3(&rod_inertia(mass, len, &axis)),
                }
            })
            .collect();
        ArmModel {
            mount_position: [0.0; 3],
            mount_rotation: rows_from_mat3(&Mat3::identity()),
            tool_length: l5,
            links,
        }
    }
}

/// Radius used for the rod inertia so every tensor stays positive definite.
const ROD_RADIUS: f64 = 0.015;

fn rod_inertia(mass: f64, length: f64, axis: &Vec3) -> Mat3 {
    let axial = 0.5 * mass * ROD_RADIUS * ROD_RADIUS;
    let transverse = mass * (3.0 * ROD_RADIUS * ROD_RADIUS + length * length) / 12.0;
    let a = axis.normalize();
    Mat3::identity() * transverse + a * a.transpose() * (axial - transverse)
}

impl SystemModel {
    pub fn arm_mass(&self) -> f64 {
        self.arm.mass()
    }

    pub fn total_mass(&self) -> f64 {
        self.quad.mass + self.arm.mass()
    }

    pub fn gravity(&self) -> f64 {
        self.quad.gravity
    }

    /// The bundled reference configuration (same content as `config/reference.toml`).
    pub fn reference() -> Self {
        toml::from_str(REFERENCE_CONFIG).expect("bundled reference config parses")
    }

    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        let model: SystemModel = toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        model.validate()?;
        Ok(model)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("model serializes")
    }

    /// Checks every invariant and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let q = &self.quad;
        if !(q.mass > 0.0) {
            errs.push(format!("quad.mass must be positive (got {})", q.mass));
        }
        if !(q.gravity >= 0.0) {
            errs.push(format!("quad.gravity must be non-negative (got {})", q.gravity));
        }
        check_spd(&q.inertia_mat(), "quad.inertia", &mut errs);

        let arm = &self.arm;
        if arm.links.len() != N_JOINTS {
            errs.push(format!(
                "arm.links must have {N_JOINTS} entries (got {})",
                arm.links.len()
            ));
            return Err(Error::InvalidModel(errs));
        }
        let r = arm.mount_rot();
        if (r.transpose() * r - Mat3::identity()).norm() > 1e-9 || (r.determinant() - 1.0).abs() > 1e-9 {
            errs.push("arm.mount_rotation is not a rotation matrix".into());
        }
        if !(arm.tool_length >= 0.0) {
            errs.push("arm.tool_length must be non-negative".into());
        }
        for (i, link) in arm.links.iter().enumerate() {
            let n = i + 1;
            let [lo, hi] = link.limits;
            if !(lo < hi) {
                errs.push(format!("q{n} limits [{lo}, {hi}] must satisfy lo < hi"));
            }
            let (min, max) = if n == 2 {
                (0.0, JOINT_BOUND)
            } else {
                (-JOINT_BOUND, JOINT_BOUND)
            };
            if lo < min - LIMIT_TOL || hi > max + LIMIT_TOL {
                errs.push(format!(
                    "q{n} limits [{lo}, {hi}] exceed the allowed range [{min:.4}, {max:.4}]"
                ));
            }
            if !(link.mass >= 0.0) {
                errs.push(format!("link {n} mass must be non-negative"));
            }
            check_spd(&link.inertia_mat(), &format!("link {n} inertia"), &mut errs);
        }
        if errs.is_empty() {
            check_axis_structure(arm, &mut errs);
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidModel(errs))
        }
    }
}

fn check_spd(m: &Mat3, name: &str, errs: &mut Vec<String>) {
    if (m - m.transpose()).amax() > 1e-12 {
        errs.push(format!("{name} is not symmetric"));
        return;
    }
    let min_eig = m.symmetric_eigenvalues().min();
    if !(min_eig > 0.0) {
        errs.push(format!("{name} is not positive definite (min eigenvalue {min_eig:e})"));
    }
}

/// Axes 1-3 must meet in one point and axes 4-5 must be parallel.
fn check_axis_structure(arm: &ArmModel, errs: &mut Vec<String>) {
    let pose = kinematics::forward_kinematics(arm, &Vec5::zeros());
    let axis = |i: usize| (pose.origin(i), pose.axis(i));
    let point = common_point(&[axis(1), axis(2), axis(3)]);
    match point {
        Some(_) => {}
        None => errs.push("axes of joints 1-3 do not intersect in a single point".into()),
    }
    if pose.axis(4).cross(&pose.axis(5)).norm() > 1e-9 {
        errs.push("axes of joints 4 and 5 are not parallel".into());
    }
}

fn line_distance(p: &Vec3, line: &(Vec3, Vec3)) -> f64 {
    (p - line.0).cross(&line.1).norm()
}

/// Finds a point on every line, using the first non-parallel pair to locate it.
fn common_point(lines: &[(Vec3, Vec3)]) -> Option<Vec3> {
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            let (p1, d1) = lines[i];
            let (p2, d2) = lines[j];
            let n = d1.cross(&d2);
            if n.norm() < 1e-9 {
                continue;
            }
            // closest points between the two lines
            let w = p1 - p2;
            let b = d1.dot(&d2);
            let (d, e) = (d1.dot(&w), d2.dot(&w));
            let denom = 1.0 - b * b;
            let s = (b * e - d) / denom;
            let candidate = p1 + d1 * s;
            return lines
                .iter()
                .all(|l| line_distance(&candidate, l) < 1e-9)
                .then_some(candidate);
        }
    }
    // all parallel: they share a point only if they coincide
    let first = lines[0];
    lines
        .iter()
        .all(|l| line_distance(&l.0, &first) < 1e-9)
        .then_some(first.0)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SystemModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SystemModel::from_toml_str(&text, path)
}

pub fn save_model(model: &SystemModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model.to_toml_string()).map_err(|e| Error::io(path, e))
}

pub const REFERENCE_CONFIG: &str = include_str!("../config/reference.toml");

/// Result of [`size_arm`].
#[derive(Debug, Clone, PartialEq)]
pub struct SizingReport {
    pub total_length: f64,
    pub link_lengths: [f64; 5],
    pub coverage: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizingOptions {
    /// Length moved from the first three links to the last two per iteration (m).
    pub step: f64,
    pub max_iterations: usize,
    /// Lower bound for each link length (m); link 1 starts at zero.
    pub min_lengths: [f64; 5],
    pub arm_mass: f64,
    pub min_link_mass: f64,
}

impl Default for SizingOptions {
    fn default() -> Self {
        Self {
            step: 0.005,
            max_iterations: 200,
            min_lengths: [0.0, 0.02, 0.02, 0.02, 0.02],
            arm_mass: 1.03,
            min_link_mass: 0.05,
        }
    }
}

/// Sizes the arm from the body length and a body-to-neck ratio.
///
/// The total length is `body_length / ratio`. Link 1 starts at zero and links 2-5
/// share the rest equally; while the hemisphere of `target_radius` below the mount
/// is not fully reachable, links 4-5 grow and links 2-3 shrink by `step` each.
pub fn size_arm(body_length: f64, ratio: f64, target_radius: f64, opts: &SizingOptions) -> Result<SizingReport> {
    if !(body_length > 0.0 && ratio > 0.0) {
        return Err(Error::InvalidModel(vec![
            "body_length and ratio must be positive".into()
        ]));
    }
    let total = body_length / ratio;
    if !(target_radius >= 0.0 && target_radius <= total) {
        return Err(Error::InvalidModel(vec![format!(
            "target radius {target_radius} m must lie in [0, {total:.4}] m"
        )]));
    }
    let quarter = total / 4.0;
    let mut lengths = [0.0, quarter, quarter, quarter, quarter];
    let mut coverage = 0.0;
    for iteration in 0..=opts.max_iterations {
        let arm = ArmModel::from_link_lengths(lengths, opts.arm_mass, opts.min_link_mass);
        coverage = kinematics::hemisphere_coverage(&arm, target_radius);
        if coverage >= 1.0 {
            return Ok(SizingReport {
                total_length: total,
                link_lengths: lengths,
                coverage,
                iterations: iteration,
            });
        }
        let shrink = opts
            .step
            .min(lengths[1] - opts.min_lengths[1])
            .min(lengths[2] - opts.min_lengths[2]);
        if shrink <= 0.0 {
            return Err(Error::SizingNonConvergence {
                iterations: iteration,
                coverage,
            });
        }
        lengths[1] -= shrink;
        lengths[2] -= shrink;
        lengths[3] += shrink;
        lengths[4] += shrink;
    }
    Err(Error::SizingNonConvergence {
        iterations: opts.max_iterations,
        coverage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_config_is_valid() {
        let m = SystemModel::reference();
        m.validate().unwrap();
        assert!((m.total_mass() - 5.42).abs() < 1e-12);
        assert_eq!(
            m.total_mass(),
            m.quad.mass + m.arm.links.iter().map(|l| l.mass).sum::<f64>()
        );
    }

    #[test]
    fn shoulder_limit_violation_is_named() {
        let mut m = SystemModel::reference();
        m.arm.links[1].limits = [-0.1, 2.0];
        let err = m.validate().unwrap_err().to_string();
        assert!(err.contains("q2"), "{err}");
    }

    #[test]
    fn asymmetric_inertia_is_named() {
        let mut m = SystemModel::reference();
        m.arm.links[2].inertia[0][1] += 1e-3;
        let err = m.validate().unwrap_err().to_string();
        assert!(err.contains("link 3 inertia"), "{err}");
    }

    #[test]
    fn all_violations_are_reported() {
        let mut m = SystemModel::reference();
        m.quad.mass = -1.0;
        m.arm.links[0].limits = [1.0, 0.5];
        let Error::InvalidModel(list) = m.validate().unwrap_err() else {
            panic!()
        };
        assert!(list.len() >= 2);
    }

    #[test]
    fn broken_axis_structure_is_rejected() {
        let mut m = SystemModel::reference();
        m.arm.links[1].mdh.a = 0.05;
        let err = m.validate().unwrap_err().to_string();
        assert!(err.contains("joints 1-3"), "{err}");
    }

    #[test]
    fn missing_key_is_a_parse_error() {
        let text = REFERENCE_CONFIG.replace("wheelbase = 0.93\n", "");
        let err = SystemModel::from_toml_str(&text, Path::new("x.toml")).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
        assert!(err.to_string().contains("wheelbase"));
    }

    #[test]
    fn save_load_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.toml");
        let m = SystemModel::reference();
        save_model(&m, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), m);
    }

    #[test]
    fn lengths_roundtrip_through_mdh_table() {
        let l = [0.0, 0.1, 0.12, 0.2, 0.127];
        let arm = ArmModel::from_link_lengths(l, 1.03, 0.05);
        let back = arm.link_lengths();
        for (a, b) in l.iter().zip(back.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((arm.mass() - 1.03).abs() < 1e-12);
    }

    #[test]
    fn trivial_target_accepts_initial_split() {
        let r = size_arm(1.0, 2.0, 0.0, &SizingOptions::default()).unwrap();
        assert_eq!(r.total_length, 0.5);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.link_lengths, [0.0, 0.125, 0.125, 0.125, 0.125]);
    }

    #[test]
    fn sizing_rejects_oversized_target() {
        assert!(size_arm(0.93, 1.7, 0.6, &SizingOptions::default()).is_err());
    }
}
