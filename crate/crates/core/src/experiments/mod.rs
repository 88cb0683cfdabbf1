//! Scenario runs, comparisons and offline analyses with CSV reports.

pub mod analysis;
pub mod metrics;
pub mod record;
pub mod scenario;
pub mod simulate;
pub mod trajectory;

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};

pub use analysis::{analyze_amplification, analyze_design, analyze_workspace};
pub use metrics::{quarter_means, Metrics, METRIC_COLUMNS};
pub use record::{read_records, write_records, Record, COLUMNS};
pub use scenario::{Axis, ControllerOptions, Disturbance, EstimatorOptions, ReferenceDerivative, Scenario};
pub use simulate::{run_scenario, simulate, RunFiles, RunOutput};
pub use trajectory::{load_waypoints, Trajectory, TrajectorySpec};

/// One row of a comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub name: String,
    pub seed: u64,
    pub ablate_coupling: bool,
    pub metrics: Metrics,
    /// How much lower the first row's mean end-effector error is, in percent.
    pub ee_reduction: f64,
    /// Same for the mean base position error.
    pub base_reduction: f64,
    /// Same for the mean end-effector error the base pose error alone would cause.
    pub driven_reduction: f64,
}

/// Percentage by which `first` undercuts `other`; zero when both vanish.
pub fn reduction(first: f64, other: f64) -> f64 {
    if other == 0.0 {
        0.0
    } else {
        100.0 * (1.0 - first / other)
    }
}

/// Runs scenarios that differ only in flags, seeds or controller settings and
/// writes `compare.csv` into `out_dir`. Rows keep the input order.
pub fn compare(scenarios: &[Scenario], out_dir: &Path) -> Result<(Vec<ComparisonRow>, PathBuf)> {
    if scenarios.len() < 2 {
        return Err(Error::InvalidScenario("compare needs at least two scenarios".into()));
    }
    let key = scenarios[0].comparison_key();
    if let Some(odd) = scenarios.iter().find(|s| s.comparison_key() != key) {
        return Err(Error::InvalidScenario(format!(
            "scenario '{}' differs from '{}' in model, mode, trajectory, timing or disturbance",
            odd.name, scenarios[0].name
        )));
    }
    let metrics = scenarios
        .par_iter()
        .map(|s| simulate::simulate(s).map(|o| o.metrics))
        .collect::<Result<Vec<_>>>()?;
    let first = metrics[0];
    let rows: Vec<ComparisonRow> = scenarios
        .iter()
        .zip(&metrics)
        .map(|(s, m)| ComparisonRow {
            name: s.name.clone(),
            seed: s.seed,
            ablate_coupling: s.ablate_coupling,
            metrics: *m,
            ee_reduction: reduction(first.mean_ee_pos, m.mean_ee_pos),
            base_reduction: reduction(first.mean_base_pos, m.mean_base_pos),
            driven_reduction: reduction(first.mean_base_driven_ee, m.mean_base_driven_ee),
        })
        .collect();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let path = out_dir.join("compare.csv");
    write_comparison(&path, &rows)?;
    Ok((rows, path))
}

fn write_comparison(path: &Path, rows: &[ComparisonRow]) -> Result<()> {
    let io = |e: csv::Error| Error::io(path, e.into());
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    let mut header = vec!["name", "seed", "ablate_coupling"];
    header.extend(METRIC_COLUMNS);
    header.extend(["ee_reduction_pct", "base_reduction_pct", "driven_reduction_pct"]);
    w.write_record(&header).map_err(io)?;
    for r in rows {
        let mut fields = vec![r.name.clone(), r.seed.to_string(), r.ablate_coupling.to_string()];
        fields.extend(r.metrics.values().iter().map(|x| x.to_string()));
        fields.push(r.ee_reduction.to_string());
        fields.push(r.base_reduction.to_string());
        fields.push(r.driven_reduction.to_string());
        w.write_record(&fields).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
