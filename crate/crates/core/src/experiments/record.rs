//! Time-series rows and their CSV form.
//!
//! Values are written with Rust's shortest round-trip formatting, so a file read
//! back yields bit-identical numbers.

use std::path::Path;

use crate::error::{Error, Result};
use crate::model::Vec5;
use crate::spatial::Vec3;

/// Column names in file order.
pub const COLUMNS: [&str; 59] = [
    "t",
    "p_b_x",
    "p_b_y",
    "p_b_z",
    "v_b_x",
    "v_b_y",
    "v_b_z",
    "phi_b",
    "theta_b",
    "psi_b",
    "omega_b_x",
    "omega_b_y",
    "omega_b_z",
    "q1",
    "q2",
    "q3",
    "q4",
    "q5",
    "qd1",
    "qd2",
    "qd3",
    "qd4",
    "qd5",
    "p_e_x",
    "p_e_y",
    "p_e_z",
    "alpha_e",
    "beta_e",
    "gamma_e",
    "p_bd_x",
    "p_bd_y",
    "p_bd_z",
    "phi_bd",
    "theta_bd",
    "psi_bd",
    "q1_d",
    "q2_d",
    "q3_d",
    "q4_d",
    "q5_d",
    "p_ed_x",
    "p_ed_y",
    "p_ed_z",
    "alpha_d",
    "beta_d",
    "f_hat_x",
    "f_hat_y",
    "f_hat_z",
    "tau_hat_x",
    "tau_hat_y",
    "tau_hat_z",
    "f_d_x",
    "f_d_y",
    "f_d_z",
    "tau_d_x",
    "tau_d_y",
    "tau_d_z",
    "e_ep",
    "e_ea",
];

/// One logged instant. Vectors are inertial unless noted.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Record {
    pub t: f64,
    pub p_b: Vec3,
    pub v_b: Vec3,
    /// Roll, pitch, yaw.
    pub euler_b: Vec3,
    /// Body frame.
    pub omega_b: Vec3,
    pub q: Vec5,
    pub qd: Vec5,
    pub p_e: Vec3,
    /// `(alpha, beta, gamma)`.
    pub euler_e: Vec3,
    pub p_b_d: Vec3,
    pub euler_b_d: Vec3,
    pub q_d: Vec5,
    pub p_e_d: Vec3,
    pub alpha_d: f64,
    pub beta_d: f64,
    pub f_hat: Vec3,
    /// Body frame.
    pub tau_hat: Vec3,
    pub f_true: Vec3,
    /// Body frame.
    pub tau_true: Vec3,
    /// End-effector position error norm (m).
    pub e_ep: f64,
    /// End-effector `(alpha, beta)` error norm (rad).
    pub e_ea: f64,
}

impl Record {
    pub fn to_values(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(COLUMNS.len());
        v.push(self.t);
        for x in [&self.p_b, &self.v_b, &self.euler_b, &self.omega_b] {
            v.extend(x.iter());
        }
        v.extend(self.q.iter());
        v.extend(self.qd.iter());
        for x in [&self.p_e, &self.euler_e, &self.p_b_d, &self.euler_b_d] {
            v.extend(x.iter());
        }
        v.extend(self.q_d.iter());
        v.extend(self.p_e_d.iter());
        v.push(self.alpha_d);
        v.push(self.beta_d);
        for x in [&self.f_hat, &self.tau_hat, &self.f_true, &self.tau_true] {
            v.extend(x.iter());
        }
        v.push(self.e_ep);
        v.push(self.e_ea);
        debug_assert_eq!(v.len(), COLUMNS.len());
        v
    }

    pub fn from_values(v: &[f64]) -> Self {
        assert_eq!(v.len(), COLUMNS.len(), "record width");
        let mut i = 0;
        let mut take = |n: usize| {
            let s = &v[i..i + n];
            i += n;
            s
        };
        let v3 = |s: &[f64]| Vec3::from_column_slice(s);
        let v5 = |s: &[f64]| Vec5::from_column_slice(s);
        Self {
            t: take(1)[0],
            p_b: v3(take(3)),
            v_b: v3(take(3)),
            euler_b: v3(take(3)),
            omega_b: v3(take(3)),
            q: v5(take(5)),
            qd: v5(take(5)),
            p_e: v3(take(3)),
            euler_e: v3(take(3)),
            p_b_d: v3(take(3)),
            euler_b_d: v3(take(3)),
            q_d: v5(take(5)),
            p_e_d: v3(take(3)),
            alpha_d: take(1)[0],
            beta_d: take(1)[0],
            f_hat: v3(take(3)),
            tau_hat: v3(take(3)),
            f_true: v3(take(3)),
            tau_true: v3(take(3)),
            e_ep: take(1)[0],
            e_ea: take(1)[0],
        }
    }
}

pub fn write_records(path: &Path, records: &[Record]) -> Result<()> {
    let io = |e: csv::Error| Error::io(path, e.into());
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(COLUMNS).map_err(io)?;
    for r in records {
        w.write_record(r.to_values().iter().map(|x| x.to_string()))
            .map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_records(path: &Path) -> Result<Vec<Record>> {
    let malformed = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| malformed(e.to_string()))?;
    let header = reader.headers().map_err(|e| malformed(e.to_string()))?;
    if header.iter().ne(COLUMNS.iter().copied()) {
        return Err(malformed("unexpected header".into()));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| malformed(e.to_string()))?;
        let values = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| malformed(format!("'{f}' is not a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(Record::from_values(&values));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_roundtrip_through_csv() {
        let values: Vec<f64> = (0..COLUMNS.len())
            .map(|i| (i as f64 + 0.1).sqrt() / 7.0 - 0.3)
            .collect();
        let r = Record::from_values(&values);
        assert_eq!(r.to_values(), values);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ts.csv");
        write_records(&path, &[r, Record::default()]).unwrap();
        let back = read_records(&path).unwrap();
        assert_eq!(back, vec![r, Record::default()]);
    }

    #[test]
    fn header_is_checked() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(read_records(&path).is_err());
    }
}
