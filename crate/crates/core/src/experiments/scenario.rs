//! Scenario files: TOML describing one closed-loop run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::control::Gains;
use crate::coordination::Mode;
use crate::error::{Error, Result};
use crate::model::{load_model, SystemModel};
use crate::plant::NoiseConfig;
use crate::rne::Wrench;
use crate::spatial::Vec3;

use super::trajectory::TrajectorySpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn unit(self) -> Vec3 {
        match self {
            Axis::X => Vec3::x(),
            Axis::Y => Vec3::y(),
            Axis::Z => Vec3::z(),
        }
    }
}

/// External force on the base, inertial frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Disturbance {
    #[default]
    None,
    /// `amplitude sin(frequency t)` along `axis` (N, rad/s).
    Sinusoid { axis: Axis, amplitude: f64, frequency: f64 },
    /// `magnitude` along `axis` from `onset` on (N, s).
    Step { axis: Axis, magnitude: f64, onset: f64 },
}

impl Disturbance {
    pub fn at(&self, t: f64) -> Wrench {
        let force = match *self {
            Disturbance::None => Vec3::zeros(),
            Disturbance::Sinusoid {
                axis,
                amplitude,
                frequency,
            } => axis.unit() * amplitude * (frequency * t).sin(),
            Disturbance::Step { axis, magnitude, onset } => {
                if t >= onset {
                    axis.unit() * magnitude
                } else {
                    Vec3::zeros()
                }
            }
        };
        Wrench::new(force, Vec3::zeros())
    }
}

/// How `v_r_dot` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceDerivative {
    /// Filtered backward difference of `v_r`.
    #[default]
    Filtered,
    /// `p_dd_d - K_p (v - p_dot_d)` with `p_dd_d` from a filtered difference of `p_dot_d`.
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerOptions {
    pub reference_derivative: ReferenceDerivative,
    /// Low-pass time constant of the reference differentiators (s).
    pub derivative_filter: f64,
    /// Clamp instead of failing when the roll extraction leaves the asin domain.
    pub clamp_asin: bool,
    /// Low-pass time constant on the measured accelerations fed to the
    /// coupling estimate and the computed torque (s); zero disables it.
    pub acceleration_filter: f64,
}

impl Default for ControllerOptions {
    fn default() -> Self {
        Self {
            reference_derivative: ReferenceDerivative::Filtered,
            derivative_filter: 0.02,
            clamp_asin: true,
            acceleration_filter: 0.02,
        }
    }
}

/// Pose filter bandwidths (rad/s); omit one to use raw fixes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorOptions {
    pub position_bandwidth: Option<f64>,
    pub attitude_bandwidth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    #[serde(flatten)]
    pub spec: TrajectorySpec,
    /// Constant tool attitude (rad).
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
}

fn default_dt() -> f64 {
    1e-3
}
fn default_settle() -> f64 {
    1.0
}
fn default_log_interval() -> f64 {
    0.01
}
fn default_initial_position() -> [f64; 3] {
    [0.0, 0.0, -2.0]
}
fn default_feedforward() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Model file, relative to the scenario file; the bundled reference when absent.
    #[serde(default)]
    pub model: Option<PathBuf>,
    pub mode: Mode,
    pub duration: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub seed: u64,
    /// Records before this time are left out of the metrics (s).
    #[serde(default = "default_settle")]
    pub settle_time: f64,
    #[serde(default = "default_log_interval")]
    pub log_interval: f64,
    #[serde(default)]
    pub ablate_coupling: bool,
    /// Feed the reference velocities forward to the base and arm.
    #[serde(default = "default_feedforward")]
    pub velocity_feedforward: bool,
    /// Base start position, inertial NED (m).
    #[serde(default = "default_initial_position")]
    pub initial_position: [f64; 3],
    /// Body-frame point the trajectory is centred on and the arm works around.
    /// Computed as the workspace density mode when absent.
    #[serde(default)]
    pub workspace_center: Option<[f64; 3]>,
    pub trajectory: TrajectoryConfig,
    #[serde(default)]
    pub disturbance: Disturbance,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub gains: Gains,
    #[serde(default)]
    pub controller: ControllerOptions,
    #[serde(default)]
    pub estimator: EstimatorOptions,
    /// Directory relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Scenario {
    /// Parses and validates; relative paths resolve against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        Self::parse(text, base_dir, base_dir)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d,
            _ => Path::new("."),
        };
        Self::parse(&text, dir, path)
    }

    fn parse(text: &str, base_dir: &Path, origin: &Path) -> Result<Self> {
        let mut s: Scenario = toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        s.base_dir = base_dir.to_path_buf();
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.duration) {
            bad.push(format!("duration must be positive, got {}", self.duration));
        }
        if !positive(self.dt) {
            bad.push(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.settle_time >= 0.0) {
            bad.push(format!("settle_time must be nonnegative, got {}", self.settle_time));
        }
        if !(self.log_interval >= self.dt) {
            bad.push(format!(
                "log_interval {} must be at least dt {}",
                self.log_interval, self.dt
            ));
        }
        if !(self.controller.acceleration_filter >= 0.0) {
            bad.push("controller.acceleration_filter must be nonnegative".into());
        }
        if !positive(self.controller.derivative_filter) {
            bad.push("controller.derivative_filter must be positive".into());
        }
        for b in [self.estimator.position_bandwidth, self.estimator.attitude_bandwidth]
            .into_iter()
            .flatten()
        {
            if !positive(b) {
                bad.push(format!("estimator bandwidths must be positive, got {b}"));
            }
        }
        if let Some(m) = &self.model {
            if !self.base_dir.join(m).is_file() {
                bad.push(format!("model file {} not found", self.base_dir.join(m).display()));
            }
        }
        if let TrajectorySpec::Waypoints { file, .. } = &self.trajectory.spec {
            if !self.base_dir.join(file).is_file() {
                bad.push(format!(
                    "waypoint file {} not found",
                    self.base_dir.join(file).display()
                ));
            }
        }
        if let Err(e) = self.gains.validate() {
            bad.push(e.to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidScenario(bad.join("; ")))
        }
    }

    pub fn load_model(&self) -> Result<SystemModel> {
        match &self.model {
            Some(m) => load_model(self.base_dir.join(m)),
            None => Ok(SystemModel::reference()),
        }
    }

    /// Settings that must agree for two runs to be compared.
    pub(crate) fn comparison_key(&self) -> String {
        format!(
            "{:?}|{:?}|{:?}|{}|{}|{:?}|{:?}|{:?}",
            self.model.as_ref().map(|m| self.base_dir.join(m)),
            self.mode,
            self.trajectory,
            self.duration,
            self.dt,
            self.initial_position,
            self.workspace_center,
            self.disturbance,
        )
    }
}
