use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use aeromanip::error::{Error, Result};
use aeromanip::experiments::{self, analyze_amplification, analyze_design, analyze_workspace, Metrics, Scenario};
use aeromanip::kinematics::amplification::{AmplificationMode, AmplificationParams};
use aeromanip::model::{load_model, SizingOptions, SystemModel, Vec5};
use aeromanip::rne::{rne, BaseMotion};
use aeromanip::spatial::Rotation;

#[derive(Parser)]
#[command(name = "aeromanip", version, about = "Aerial manipulator simulation and analysis")]
struct Cli {
    /// Output directory for CSV reports.
    #[arg(long, global = true, env = "AEROMANIP_OUT", default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its time series and metrics.
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Turn off the dynamic coupling compensation.
        #[arg(long)]
        ablate_coupling: bool,
        /// Parse and check the scenario without running it.
        #[arg(long)]
        validate: bool,
    },
    /// Run several scenarios and tabulate metrics against the first.
    Compare {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        /// Append a copy of every scenario with the coupling compensation off.
        #[arg(long)]
        with_ablation: bool,
        /// Extra seeds; each scenario is repeated once per seed.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        #[arg(long)]
        validate: bool,
    },
    /// Offline analyses of the arm.
    #[command(subcommand)]
    Analyze(Analysis),
    /// Print per-link recursion quantities for a static base as CSV.
    RneDump {
        /// Joint angles, comma separated (rad).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        q: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        qd: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        qdd: Option<Vec<f64>>,
        #[command(flatten)]
        model: ModelArg,
    },
}

#[derive(Args)]
struct ModelArg {
    /// Model file; the bundled reference when omitted.
    #[arg(long)]
    model: Option<PathBuf>,
}

impl ModelArg {
    fn load(&self) -> Result<SystemModel> {
        match &self.model {
            Some(p) => load_model(p),
            None => Ok(SystemModel::reference()),
        }
    }
}

#[derive(Subcommand)]
enum Analysis {
    /// Sample the reachable workspace and locate its density mode.
    Workspace {
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        model: ModelArg,
    },
    /// Monte Carlo of how base pose errors grow at the end-effector.
    Amplification {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Base position error half-width (m).
        #[arg(long, default_value_t = 0.02)]
        pos_range: f64,
        /// Base attitude error half-width (deg).
        #[arg(long, default_value_t = 5.0)]
        att_range_deg: f64,
        /// Nominal roll and pitch half-width (deg).
        #[arg(long, default_value_t = 30.0)]
        tilt_range_deg: f64,
        /// Perturb the attitude only.
        #[arg(long)]
        attitude_only: bool,
        #[command(flatten)]
        model: ModelArg,
    },
    /// Size the arm from the body length and a length ratio.
    Design {
        #[arg(long, default_value_t = 0.93)]
        body_length: f64,
        #[arg(long, default_value_t = 1.7)]
        ratio: f64,
        /// Radius of the hemisphere the arm must cover (m).
        #[arg(long, default_value_t = 0.5)]
        radius: f64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let out = cli.out.as_path();
    match cli.command {
        Command::Simulate {
            scenario,
            seed,
            ablate_coupling,
            validate,
        } => {
            let mut s = Scenario::load(&scenario)?;
            if let Some(seed) = seed {
                s.seed = seed;
            }
            s.ablate_coupling |= ablate_coupling;
            if validate {
                s.load_model()?;
                println!("{}: ok", scenario.display());
                return Ok(());
            }
            let (run, files) = experiments::run_scenario(&s, out)?;
            print_metrics(&s.name, &run.metrics);
            println!("wrote {} and {}", files.timeseries.display(), files.metrics.display());
        }
        Command::Compare {
            scenarios,
            with_ablation,
            seeds,
            validate,
        } => {
            let mut list = scenarios.iter().map(Scenario::load).collect::<Result<Vec<_>>>()?;
            if !seeds.is_empty() {
                list = list
                    .iter()
                    .flat_map(|s| {
                        seeds.iter().map(move |&seed| Scenario {
                            name: format!("{}_seed{seed}", s.name),
                            seed,
                            ..s.clone()
                        })
                    })
                    .collect();
            }
            if with_ablation {
                let ablated: Vec<Scenario> = list
                    .iter()
                    .map(|s| Scenario {
                        name: format!("{}_ablated", s.name),
                        ablate_coupling: true,
                        ..s.clone()
                    })
                    .collect();
                list.extend(ablated);
            }
            if validate {
                for s in &list {
                    s.load_model()?;
                    println!("{}: ok", s.name);
                }
                return Ok(());
            }
            let (rows, path) = experiments::compare(&list, out)?;
            println!(
                "{:<28} {:>12} {:>12} {:>10} {:>10} {:>12}",
                "scenario", "mean_ee_mm", "mean_base_mm", "ee_red_%", "base_red_%", "driven_red_%"
            );
            for r in &rows {
                println!(
                    "{:<28} {:>12.3} {:>12.3} {:>10.1} {:>10.1} {:>12.1}",
                    r.name,
                    1e3 * r.metrics.mean_ee_pos,
                    1e3 * r.metrics.mean_base_pos,
                    r.ee_reduction,
                    r.base_reduction,
                    r.driven_reduction
                );
            }
            println!("wrote {}", path.display());
        }
        Command::Analyze(a) => analyze(a, out)?,
        Command::RneDump { q, qd, qdd, model } => {
            for v in [Some(&q), qd.as_ref(), qdd.as_ref()].into_iter().flatten() {
                if v.len() != 5 {
                    return Err(Error::InvalidScenario(format!(
                        "joint vectors need 5 values, got {}",
                        v.len()
                    )));
                }
            }
            let model = model.load()?;
            let v5 = |v: Option<Vec<f64>>| v.map(|v| Vec5::from_column_slice(&v)).unwrap_or_else(Vec5::zeros);
            let r = rne(
                &model.arm,
                &BaseMotion::at_rest(Rotation::identity()),
                &Vec5::from_column_slice(&q),
                &v5(qd),
                &v5(qdd),
                model.gravity(),
            );
            print!("{}", r.to_csv());
            println!(
                "# coupling force {:e},{:e},{:e} torque {:e},{:e},{:e}",
                r.coupling.force.x,
                r.coupling.force.y,
                r.coupling.force.z,
                r.coupling.torque.x,
                r.coupling.torque.y,
                r.coupling.torque.z
            );
        }
    }
    Ok(())
}

fn analyze(a: Analysis, out: &Path) -> Result<()> {
    match a {
        Analysis::Workspace { samples, seed, model } => {
            let r = analyze_workspace(&model.load()?.arm, samples, seed, out)?;
            println!(
                "{} samples, bandwidth {:.4} m, centre ({:.4}, {:.4}, {:.4}) m",
                r.points, r.bandwidth, r.center.x, r.center.y, r.center.z
            );
            println!("wrote {} and {}", r.cloud.display(), r.summary.display());
        }
        Analysis::Amplification {
            samples,
            seed,
            pos_range,
            att_range_deg,
            tilt_range_deg,
            attitude_only,
            model,
        } => {
            let params = AmplificationParams {
                pos_range,
                att_range: att_range_deg.to_radians(),
                tilt_range: tilt_range_deg.to_radians(),
                n: samples,
                mode: if attitude_only {
                    AmplificationMode::AttitudeOnly
                } else {
                    AmplificationMode::Both
                },
                seed,
            };
            let r = analyze_amplification(&model.load()?.arm, &params, out)?;
            println!(
                "mean base {:.2} cm, mean end-effector {:.2} cm, ratio {:.3}",
                100.0 * r.mean_base_pos,
                100.0 * r.mean_ee_pos,
                r.ratio
            );
            println!(
                "mean attitude error base {:.2} deg, end-effector {:.2} deg; attitude-only spread ratio {:.3}",
                r.mean_base_att.to_degrees(),
                r.mean_ee_att.to_degrees(),
                r.spread_ratio
            );
            println!("wrote {} and {}", r.samples.display(), r.summary.display());
        }
        Analysis::Design {
            body_length,
            ratio,
            radius,
        } => {
            let r = analyze_design(body_length, ratio, radius, &SizingOptions::default(), out)?;
            let l = r.sizing.link_lengths;
            println!(
                "total length {:.4} m, links [{:.4}, {:.4}, {:.4}, {:.4}, {:.4}] m, coverage {:.1}% after {} iterations",
                r.sizing.total_length,
                l[0],
                l[1],
                l[2],
                l[3],
                l[4],
                100.0 * r.sizing.coverage,
                r.sizing.iterations
            );
            println!("wrote {} and {}", r.summary.display(), r.model.display());
        }
    }
    Ok(())
}

fn print_metrics(name: &str, m: &Metrics) {
    println!("{name}: {} samples after settling", m.samples);
    println!(
        "  end-effector position  mean {:.2} mm  max {:.2} mm",
        1e3 * m.mean_ee_pos,
        1e3 * m.max_ee_pos
    );
    println!(
        "  end-effector attitude  mean {:.3} deg  max {:.3} deg",
        m.mean_ee_att.to_degrees(),
        m.max_ee_att.to_degrees()
    );
    println!(
        "  base position          mean {:.2} mm  max {:.2} mm",
        1e3 * m.mean_base_pos,
        1e3 * m.max_base_pos
    );
    println!(
        "  base-driven end-effector error  mean {:.2} mm",
        1e3 * m.mean_base_driven_ee
    );
    println!(
        "  coupling estimate      force {:.3} N  torque {:.3} N m",
        m.mean_force_err, m.mean_torque_err
    );
    println!(
        "  max base displacement  x {:.3} m  y {:.3} m  z {:.3} m",
        m.max_disp[0], m.max_disp[1], m.max_disp[2]
    );
}
