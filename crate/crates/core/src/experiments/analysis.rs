//! Offline analyses: workspace density, error amplification and arm sizing.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kinematics::amplification::{
    attitude_spread_amplification, error_amplification_mc, mean, AmplificationParams,
};
use crate::kinematics::workspace::{sample_workspace, Bandwidth, Kde};
use crate::model::{save_model, size_arm, ArmModel, SizingOptions, SizingReport, SystemModel};
use crate::spatial::Vec3;

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let io = |e: csv::Error| Error::io(path, e.into());
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn prepare(out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkspaceReport {
    pub points: usize,
    pub bandwidth: f64,
    pub center: Vec3,
    /// `workspace_cloud.csv`: `x,y,z,density` in the body frame.
    pub cloud: PathBuf,
    /// `workspace_center.csv`: density mode and bandwidth.
    pub summary: PathBuf,
}

/// Samples `n` configurations, estimates the density at every sample and its mode.
pub fn analyze_workspace(arm: &ArmModel, n: usize, seed: u64, out_dir: &Path) -> Result<WorkspaceReport> {
    if n < 2 {
        return Err(Error::InvalidScenario(
            "workspace analysis needs at least two samples".into(),
        ));
    }
    prepare(out_dir)?;
    let cloud = sample_workspace(arm, n, seed);
    let kde = Kde::new(&cloud, Bandwidth::Scott);
    let density: Vec<f64> = cloud.par_iter().map(|p| kde.density(p)).collect();
    let center = kde.mode(400);
    let cloud_path = out_dir.join("workspace_cloud.csv");
    write_rows(
        &cloud_path,
        &["x_m", "y_m", "z_m", "density_per_m3"],
        cloud
            .iter()
            .zip(&density)
            .map(|(p, d)| vec![p.x.to_string(), p.y.to_string(), p.z.to_string(), d.to_string()]),
    )?;
    let summary = out_dir.join("workspace_center.csv");
    write_rows(
        &summary,
        &[
            "samples",
            "bandwidth_m",
            "center_x_m",
            "center_y_m",
            "center_z_m",
            "center_density_per_m3",
        ],
        [vec![
            n.to_string(),
            kde.bandwidth().to_string(),
            center.x.to_string(),
            center.y.to_string(),
            center.z.to_string(),
            kde.density(&center).to_string(),
        ]],
    )?;
    Ok(WorkspaceReport {
        points: n,
        bandwidth: kde.bandwidth(),
        center,
        cloud: cloud_path,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmplificationReport {
    pub mean_base_pos: f64,
    pub mean_ee_pos: f64,
    pub ratio: f64,
    pub mean_base_att: f64,
    pub mean_ee_att: f64,
    /// Spread of the end-effector attitude error over that of the base.
    pub spread_ratio: f64,
    /// `amplification_samples.csv`, one row per Monte Carlo draw.
    pub samples: PathBuf,
    /// `amplification_summary.csv`.
    pub summary: PathBuf,
}

pub fn analyze_amplification(
    arm: &ArmModel,
    params: &AmplificationParams,
    out_dir: &Path,
) -> Result<AmplificationReport> {
    if params.n < 2 {
        return Err(Error::InvalidScenario("Monte Carlo needs at least two samples".into()));
    }
    prepare(out_dir)?;
    let stats = error_amplification_mc(arm, params);
    let spread_ratio = attitude_spread_amplification(arm, params);
    let samples = out_dir.join("amplification_samples.csv");
    std::fs::write(&samples, stats.to_csv()).map_err(|e| Error::io(&samples, e))?;
    let report = AmplificationReport {
        mean_base_pos: mean(&stats.base_pos),
        mean_ee_pos: mean(&stats.ee_pos),
        ratio: stats.position_ratio(),
        mean_base_att: mean(&stats.base_att),
        mean_ee_att: mean(&stats.ee_att),
        spread_ratio,
        samples,
        summary: out_dir.join("amplification_summary.csv"),
    };
    write_rows(
        &report.summary,
        &[
            "samples",
            "mean_base_pos_err_m",
            "mean_ee_pos_err_m",
            "ratio",
            "mean_base_att_err_rad",
            "mean_ee_att_err_rad",
            "att_spread_ratio",
        ],
        [vec![
            params.n.to_string(),
            report.mean_base_pos.to_string(),
            report.mean_ee_pos.to_string(),
            report.ratio.to_string(),
            report.mean_base_att.to_string(),
            report.mean_ee_att.to_string(),
            report.spread_ratio.to_string(),
        ]],
    )?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignReport {
    pub sizing: SizingReport,
    /// `design.csv`.
    pub summary: PathBuf,
    /// `design_model.toml`: the reference quadcopter with the sized arm.
    pub model: PathBuf,
}

pub fn analyze_design(
    body_length: f64,
    ratio: f64,
    radius: f64,
    opts: &SizingOptions,
    out_dir: &Path,
) -> Result<DesignReport> {
    let sizing = size_arm(body_length, ratio, radius, opts)?;
    prepare(out_dir)?;
    let summary = out_dir.join("design.csv");
    let mut row = vec![
        body_length.to_string(),
        ratio.to_string(),
        radius.to_string(),
        sizing.total_length.to_string(),
    ];
    row.extend(sizing.link_lengths.iter().map(|l| l.to_string()));
    row.push(sizing.coverage.to_string());
    row.push(sizing.iterations.to_string());
    write_rows(
        &summary,
        &[
            "body_length_m",
            "ratio",
            "target_radius_m",
            "total_length_m",
            "l1_m",
            "l2_m",
            "l3_m",
            "l4_m",
            "l5_m",
            "coverage",
            "iterations",
        ],
        [row],
    )?;
    let mut model = SystemModel::reference();
    model.arm = ArmModel::from_link_lengths(sizing.link_lengths, opts.arm_mass, opts.min_link_mass);
    let model_path = out_dir.join("design_model.toml");
    save_model(&model, &model_path)?;
    Ok(DesignReport {
        sizing,
        summary,
        model: model_path,
    })
}
