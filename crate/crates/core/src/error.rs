use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("gimbal proximity: pitch {theta} rad is too close to +/-pi/2")]
    GimbalProximity { theta: f64 },
    #[error("end-effector attitude singularity: beta {beta} rad is too close to +/-pi/2")]
    AttitudeSingularity { beta: f64 },
    #[error("kinematic singularity: smallest singular value {sigma_min:e} below {tolerance:e}")]
    KinematicSingularity { sigma_min: f64, tolerance: f64 },
    #[error("target unreachable: distance {distance:.4} m exceeds reach {reach:.4} m")]
    Unreachable { distance: f64, reach: f64 },
    #[error("no inverse-kinematics branch satisfies the joint limits")]
    NoFeasibleBranch,
    #[error("degenerate thrust magnitude {thrust:e} N")]
    DegenerateThrust { thrust: f64 },
    #[error("asin argument {arg} outside [-1, 1]")]
    AsinDomain { arg: f64 },
    #[error("coupled acceleration solve did not converge (residual {residual:e})")]
    FixedPointDivergence { residual: f64 },
    #[error("arm sizing did not converge after {iterations} iterations (coverage {coverage:.3})")]
    SizingNonConvergence { iterations: usize, coverage: f64 },
    #[error("invalid model:\n  {}", .0.join("\n  "))]
    InvalidModel(Vec<String>),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("trajectory error: {0}")]
    Trajectory(String),
    #[error("simulation failed at t = {t:.4} s (tick {tick}): {source}")]
    Tick {
        t: f64,
        tick: u64,
        #[source]
        source: Box<Error>,
    },
    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
