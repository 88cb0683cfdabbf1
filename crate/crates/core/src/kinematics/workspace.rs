//! Workspace sampling, Gaussian kernel density estimation and hemisphere coverage.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{ArmModel, Vec5};
use crate::spatial::Vec3;

use super::fk::forward_kinematics;
use super::ik::{inverse_kinematics_axis, BranchSelect};

/// Uniform joint sample within the limits.
pub fn sample_joints(arm: &ArmModel, rng: &mut impl Rng) -> Vec5 {
    Vec5::from_fn(|i, _| {
        let [lo, hi] = arm.links[i].limits;
        rng.random_range(lo..hi)
    })
}

/// End-effector positions (body frame) of `n` uniform joint samples.
pub fn sample_workspace(arm: &ArmModel, n: usize, seed: u64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| forward_kinematics(arm, &sample_joints(arm, &mut rng)).ee_position())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    Fixed(f64),
    /// `n^(-1/7)` times the per-axis standard deviation, geometric mean over axes.
    Scott,
}

/// Isotropic Gaussian KDE over 3-D points.
#[derive(Debug, Clone)]
pub struct Kde<'a> {
    points: &'a [Vec3],
    h: f64,
    norm: f64,
}

impl<'a> Kde<'a> {
    pub fn new(points: &'a [Vec3], bandwidth: Bandwidth) -> Self {
        assert!(points.len() >= 2, "kernel density estimate needs at least two points");
        let h = match bandwidth {
            Bandwidth::Fixed(h) => h,
            Bandwidth::Scott => scott_bandwidth(points),
        };
        let n = points.len() as f64;
        let norm = 1.0 / (n * (2.0 * std::f64::consts::PI).powf(1.5) * h.powi(3));
        Self { points, h, norm }
    }

    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    /// Density in m^-3.
    pub fn density(&self, x: &Vec3) -> f64 {
        let inv = 1.0 / (2.0 * self.h * self.h);
        self.norm
            * self
                .points
                .iter()
                .map(|p| (-(p - x).norm_squared() * inv).exp())
                .sum::<f64>()
    }

    /// Mean-shift step: kernel-weighted mean of the samples around `x`.
    fn shift(&self, x: &Vec3) -> Vec3 {
        let inv = 1.0 / (2.0 * self.h * self.h);
        let (mut acc, mut wsum) = (Vec3::zeros(), 0.0);
        for p in self.points {
            let w = (-(p - x).norm_squared() * inv).exp();
            acc += p * w;
            wsum += w;
        }
        if wsum > 0.0 {
            acc / wsum
        } else {
            *x
        }
    }

    /// Highest-density point: best of `candidates` sample points, refined by mean shift.
    pub fn mode(&self, candidates: usize) -> Vec3 {
        let stride = (self.points.len() / candidates.max(1)).max(1);
        let mut best = self.points[0];
        let mut best_d = f64::MIN;
        for p in self.points.iter().step_by(stride) {
            let d = self.density(p);
            if d > best_d {
                best_d = d;
                best = *p;
            }
        }
        let mut x = best;
        for _ in 0..500 {
            let next = self.shift(&x);
            let moved = (next - x).norm();
            x = next;
            if moved < 1e-10 {
                break;
            }
        }
        x
    }
}

pub fn scott_bandwidth(points: &[Vec3]) -> f64 {
    let n = points.len() as f64;
    let mean = points.iter().fold(Vec3::zeros(), |a, p| a + p) / n;
    let var = points
        .iter()
        .fold(Vec3::zeros(), |a, p| a + (p - mean).component_mul(&(p - mean)))
        / (n - 1.0);
    let sigma = (var.x.sqrt() * var.y.sqrt() * var.z.sqrt()).cbrt();
    n.powf(-1.0 / 7.0) * sigma
}

pub fn kde_density(points: &[Vec3], query: &Vec3, bandwidth: Bandwidth) -> f64 {
    Kde::new(points, bandwidth).density(query)
}

/// Points of the coverage test grid: a Fibonacci spiral over the lower hemisphere
/// (mount frame, `z` down), spread over five shells from `radius / 5` to `radius`.
pub fn hemisphere_grid(radius: f64, n: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = (k as f64 + 0.5) / n as f64;
            let rxy = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * k as f64;
            let shell = (k % 5 + 1) as f64 / 5.0;
            Vec3::new(rxy * phi.cos(), rxy * phi.sin(), z) * (radius * shell)
        })
        .collect()
}

/// Candidate tool axes tried at each grid point, straight down first.
fn tool_candidates(n: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut dirs: Vec<Vec3> = (0..n)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * k as f64;
            Vec3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect();
    dirs.insert(0, Vec3::z());
    dirs
}

pub const COVERAGE_GRID_POINTS: usize = 200;

/// Fraction of the hemisphere grid reachable by closed-form IK within joint limits.
pub fn hemisphere_coverage(arm: &ArmModel, radius: f64) -> f64 {
    if radius <= 0.0 {
        return 1.0;
    }
    let r_m = arm.mount_rot();
    let candidates = tool_candidates(128);
    let grid = hemisphere_grid(radius, COVERAGE_GRID_POINTS);
    let reachable = grid
        .iter()
        .filter(|p| {
            let target = arm.mount_pos() + r_m * *p;
            candidates
                .iter()
                .any(|u| inverse_kinematics_axis(arm, &target, &(r_m * u), BranchSelect::nearest_to_zero()).is_ok())
        })
        .count();
    reachable as f64 / grid.len() as f64
}
