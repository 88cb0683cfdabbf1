//! Run metrics, computed only from logged records.

use std::path::Path;

use crate::control::wrap_angle;
use crate::error::{Error, Result};
use crate::kinematics::amplification::mean;
use crate::spatial::{base_rotation, EulerAngles};

use super::record::Record;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metrics {
    /// Records that entered the statistics.
    pub samples: usize,
    pub mean_ee_pos: f64,
    pub max_ee_pos: f64,
    pub mean_ee_att: f64,
    pub max_ee_att: f64,
    pub max_alpha_err: f64,
    pub max_beta_err: f64,
    pub mean_base_pos: f64,
    pub max_base_pos: f64,
    pub mean_base_att: f64,
    pub mean_force_err: f64,
    pub mean_torque_err: f64,
    /// Largest excursion from the first logged base position, per axis.
    pub max_disp: [f64; 3],
    /// Mean of [`base_driven_ee_error`].
    pub mean_base_driven_ee: f64,
}

pub const METRIC_COLUMNS: [&str; 16] = [
    "samples",
    "mean_ee_pos_m",
    "max_ee_pos_m",
    "mean_ee_att_rad",
    "max_ee_att_rad",
    "max_alpha_err_rad",
    "max_beta_err_rad",
    "mean_base_pos_m",
    "max_base_pos_m",
    "mean_base_att_rad",
    "mean_force_err_n",
    "mean_torque_err_nm",
    "max_disp_x_m",
    "max_disp_y_m",
    "max_disp_z_m",
    "mean_base_driven_ee_m",
];

pub fn alpha_error(r: &Record) -> f64 {
    wrap_angle(r.euler_e.x - r.alpha_d)
}

pub fn beta_error(r: &Record) -> f64 {
    wrap_angle(r.euler_e.y - r.beta_d)
}

/// `|p_B - p_B,d|`.
pub fn base_position_error(r: &Record) -> f64 {
    (r.p_b - r.p_b_d).norm()
}

/// Roll/pitch/yaw error norm, yaw wrapped.
pub fn base_attitude_error(r: &Record) -> f64 {
    let mut e = r.euler_b - r.euler_b_d;
    e.z = wrap_angle(e.z);
    e.norm()
}

/// End-effector error the base pose error alone would cause if the arm held
/// its posture: `|p~_B + (R_B - R_B,d) p_E^B|`.
pub fn base_driven_ee_error(r: &Record) -> f64 {
    let r_b = base_rotation(EulerAngles::from_vector(&r.euler_b));
    let r_b_d = base_rotation(EulerAngles::from_vector(&r.euler_b_d));
    let p_e_b = r_b.transpose() * (r.p_e - r.p_b);
    ((r.p_b - r.p_b_d) + (r_b - r_b_d) * p_e_b).norm()
}

fn max_of(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, f64::max)
}

impl Metrics {
    /// Statistics over records with `t >= settle`; displacements use the first record as origin.
    pub fn compute(records: &[Record], settle: f64) -> Result<Self> {
        let origin = records
            .first()
            .ok_or_else(|| Error::InvalidScenario("no records to evaluate".into()))?
            .p_b;
        let kept: Vec<&Record> = records.iter().filter(|r| r.t >= settle).collect();
        if kept.is_empty() {
            return Err(Error::InvalidScenario(format!(
                "no records after the settle time {settle} s"
            )));
        }
        let col = |f: &dyn Fn(&Record) -> f64| kept.iter().map(|r| f(r)).collect::<Vec<f64>>();
        let ee_pos = col(&|r| r.e_ep);
        let ee_att = col(&|r| r.e_ea);
        let base_pos = col(&base_position_error);
        let base_att = col(&base_attitude_error);
        let force = col(&|r| (r.f_hat - r.f_true).norm());
        let torque = col(&|r| (r.tau_hat - r.tau_true).norm());
        let disp = |k: usize| max_of(kept.iter().map(|r| (r.p_b[k] - origin[k]).abs()));
        Ok(Self {
            samples: kept.len(),
            mean_ee_pos: mean(&ee_pos),
            max_ee_pos: max_of(ee_pos.iter().copied()),
            mean_ee_att: mean(&ee_att),
            max_ee_att: max_of(ee_att.iter().copied()),
            max_alpha_err: max_of(kept.iter().map(|r| alpha_error(r).abs())),
            max_beta_err: max_of(kept.iter().map(|r| beta_error(r).abs())),
            mean_base_pos: mean(&base_pos),
            max_base_pos: max_of(base_pos.iter().copied()),
            mean_base_att: mean(&base_att),
            mean_force_err: mean(&force),
            mean_torque_err: mean(&torque),
            max_disp: [disp(0), disp(1), disp(2)],
            mean_base_driven_ee: mean(&col(&base_driven_ee_error)),
        })
    }

    pub fn values(&self) -> [f64; 16] {
        [
            self.samples as f64,
            self.mean_ee_pos,
            self.max_ee_pos,
            self.mean_ee_att,
            self.max_ee_att,
            self.max_alpha_err,
            self.max_beta_err,
            self.mean_base_pos,
            self.max_base_pos,
            self.mean_base_att,
            self.mean_force_err,
            self.mean_torque_err,
            self.max_disp[0],
            self.max_disp[1],
            self.max_disp[2],
            self.mean_base_driven_ee,
        ]
    }

    pub fn from_values(v: &[f64]) -> Result<Self> {
        if v.len() != METRIC_COLUMNS.len() {
            return Err(Error::InvalidScenario(format!(
                "expected {} metric values",
                METRIC_COLUMNS.len()
            )));
        }
        Ok(Self {
            samples: v[0] as usize,
            mean_ee_pos: v[1],
            max_ee_pos: v[2],
            mean_ee_att: v[3],
            max_ee_att: v[4],
            max_alpha_err: v[5],
            max_beta_err: v[6],
            mean_base_pos: v[7],
            max_base_pos: v[8],
            mean_base_att: v[9],
            mean_force_err: v[10],
            mean_torque_err: v[11],
            max_disp: [v[12], v[13], v[14]],
            mean_base_driven_ee: v[15],
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |e: csv::Error| Error::io(path, e.into());
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        w.write_record(METRIC_COLUMNS).map_err(io)?;
        w.write_record(self.values().iter().map(|x| x.to_string()))
            .map_err(io)?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let malformed = |message: String| Error::Parse {
            path: path.to_path_buf(),
            message,
        };
        let mut reader = csv::Reader::from_path(path).map_err(|e| malformed(e.to_string()))?;
        let record = reader
            .records()
            .next()
            .ok_or_else(|| malformed("empty metrics file".into()))?
            .map_err(|e| malformed(e.to_string()))?;
        let v = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| malformed(format!("'{f}' is not a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_values(&v)
    }
}

/// Means of `f` over the four consecutive quarters of the records.
pub fn quarter_means(records: &[Record], f: impl Fn(&Record) -> f64) -> [f64; 4] {
    let n = records.len();
    let mut out = [0.0; 4];
    for (k, slot) in out.iter_mut().enumerate() {
        let part: Vec<f64> = records[k * n / 4..(k + 1) * n / 4].iter().map(&f).collect();
        *slot = if part.is_empty() { 0.0 } else { mean(&part) };
    }
    out
}
