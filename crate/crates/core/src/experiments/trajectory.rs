//! End-effector reference trajectories, as offsets from a centre point.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coordination::EndEffectorGoal;
use crate::error::{Error, Result};
use crate::spatial::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrajectorySpec {
    /// Stay at the centre.
    Hold,
    /// `r (cos wt, 0, sin wt)` in the x-z plane.
    Circle { radius: f64, omega: f64 },
    /// Lemniscate of Huygens `(a sin wt, 0, b sin wt cos wt)`.
    Lemniscate { a: f64, b: f64, omega: f64 },
    /// Piecewise-linear path through a CSV of `t,x,y,z` offsets.
    Waypoints {
        file: PathBuf,
        #[serde(default)]
        zero_rates: bool,
    },
}

/// A trajectory generator ready to evaluate.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    center: Vec3,
    alpha: f64,
    beta: f64,
    feedforward: bool,
    path: Path3,
}

#[derive(Debug, Clone, PartialEq)]
enum Path3 {
    Hold,
    Circle { radius: f64, omega: f64 },
    Lemniscate { a: f64, b: f64, omega: f64 },
    Polyline { points: Vec<(f64, Vec3)>, zero_rates: bool },
}

impl Trajectory {
    /// `base_dir` resolves relative waypoint files.
    pub fn new(spec: &TrajectorySpec, center: Vec3, alpha: f64, beta: f64, base_dir: &Path) -> Result<Self> {
        let path = match spec {
            TrajectorySpec::Hold => Path3::Hold,
            &TrajectorySpec::Circle { radius, omega } => {
                check_finite("circle", &[radius, omega])?;
                Path3::Circle { radius, omega }
            }
            &TrajectorySpec::Lemniscate { a, b, omega } => {
                check_finite("lemniscate", &[a, b, omega])?;
                Path3::Lemniscate { a, b, omega }
            }
            TrajectorySpec::Waypoints { file, zero_rates } => Path3::Polyline {
                points: load_waypoints(&base_dir.join(file))?,
                zero_rates: *zero_rates,
            },
        };
        Ok(Self {
            center,
            alpha,
            beta,
            feedforward: true,
            path,
        })
    }

    /// Drops the velocity feedforward from every goal.
    pub fn without_feedforward(mut self) -> Self {
        self.feedforward = false;
        self
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }

    /// Offset from the centre and its rate.
    pub fn offset(&self, t: f64) -> (Vec3, Vec3) {
        match &self.path {
            Path3::Hold => (Vec3::zeros(), Vec3::zeros()),
            &Path3::Circle { radius, omega } => {
                let (s, c) = (omega * t).sin_cos();
                (radius * Vec3::new(c, 0.0, s), radius * omega * Vec3::new(-s, 0.0, c))
            }
            &Path3::Lemniscate { a, b, omega } => {
                let (s, c) = (omega * t).sin_cos();
                let p = Vec3::new(a * s, 0.0, b * s * c);
                let v = omega * Vec3::new(a * c, 0.0, b * (c * c - s * s));
                (p, v)
            }
            Path3::Polyline { points, zero_rates } => {
                let (p, v) = interpolate(points, t);
                (p, if *zero_rates { Vec3::zeros() } else { v })
            }
        }
    }

    pub fn goal(&self, t: f64) -> EndEffectorGoal {
        let (p, v) = self.offset(t);
        EndEffectorGoal {
            p: self.center + p,
            p_dot: self.feedforward.then_some(v),
            alpha: self.alpha,
            beta: self.beta,
            alpha_dot: None,
            beta_dot: None,
        }
    }
}

fn check_finite(kind: &str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Trajectory(format!("{kind} parameters must be finite")))
    }
}

fn interpolate(points: &[(f64, Vec3)], t: f64) -> (Vec3, Vec3) {
    let first = points[0];
    let last = points[points.len() - 1];
    if t <= first.0 {
        return (first.1, Vec3::zeros());
    }
    if t >= last.0 {
        return (last.1, Vec3::zeros());
    }
    // first index whose time exceeds t; never 0 or len here
    let k = points.partition_point(|(tk, _)| *tk <= t);
    let (t0, p0) = points[k - 1];
    let (t1, p1) = points[k];
    let v = (p1 - p0) / (t1 - t0);
    (p0 + v * (t - t0), v)
}

/// Reads `t,x,y,z` rows with a header line. Times must increase strictly.
pub fn load_waypoints(path: &Path) -> Result<Vec<(f64, Vec3)>> {
    let malformed = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| malformed(e.to_string()))?;
    let mut points: Vec<(f64, Vec3)> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| malformed(e.to_string()))?;
        if record.len() != 4 {
            return Err(malformed(format!("row {}: expected 4 columns t,x,y,z", line + 1)));
        }
        let mut v = [0.0f64; 4];
        for (slot, field) in v.iter_mut().zip(record.iter()) {
            *slot = field
                .parse()
                .map_err(|_| malformed(format!("row {}: '{field}' is not a number", line + 1)))?;
        }
        if !v.iter().all(|x| x.is_finite()) {
            return Err(malformed(format!("row {}: non-finite value", line + 1)));
        }
        if let Some(&(t_prev, _)) = points.last() {
            if !(v[0] > t_prev) {
                return Err(malformed(format!("row {}: time {} does not increase", line + 1, v[0])));
            }
        }
        points.push((v[0], Vec3::new(v[1], v[2], v[3])));
    }
    if points.len() < 2 {
        return Err(malformed("a waypoint path needs at least two rows".into()));
    }
    Ok(points)
}
