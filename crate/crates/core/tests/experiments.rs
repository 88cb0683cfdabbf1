mod common;

use std::process::Command;

use aeromanip::experiments::{compare, read_records, run_scenario, Metrics, Scenario};

const BUNDLED: [&str; 5] = [
    "ex1_circle.cfg",
    "ex2_lemniscate.cfg",
    "ex2_waypoints.cfg",
    "ex3_sine.cfg",
    "ex3_step.cfg",
];

#[test]
fn bundled_scenarios_parse() {
    for name in BUNDLED {
        let s = common::scenario(name);
        s.validate().unwrap();
        s.load_model().unwrap();
    }
}

#[test]
fn equal_seeds_give_identical_files() {
    let s = common::scenario("ex3_step.cfg");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (_, fa) = run_scenario(&s, a.path()).unwrap();
    let (_, fb) = run_scenario(&s, b.path()).unwrap();
    assert_eq!(
        std::fs::read(&fa.timeseries).unwrap(),
        std::fs::read(&fb.timeseries).unwrap()
    );
    assert_eq!(std::fs::read(&fa.metrics).unwrap(), std::fs::read(&fb.metrics).unwrap());
}

#[test]
fn metrics_recompute_from_timeseries() {
    let s = common::scenario("ex3_sine.cfg");
    let dir = tempfile::tempdir().unwrap();
    let (_, files) = run_scenario(&s, dir.path()).unwrap();
    let offline = Metrics::compute(&read_records(&files.timeseries).unwrap(), s.settle_time).unwrap();
    let emitted = Metrics::read_csv(&files.metrics).unwrap();
    for (a, b) in offline.values().iter().zip(emitted.values()) {
        assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{a} vs {b}");
    }
}

#[test]
fn comparing_a_scenario_with_itself_shows_no_reduction() {
    let mut s = common::scenario("ex3_step.cfg");
    s.duration = 5.0;
    let dir = tempfile::tempdir().unwrap();
    let (rows, path) = compare(&[s.clone(), s], dir.path()).unwrap();
    assert_eq!(rows[1].ee_reduction, 0.0);
    assert_eq!(rows[1].base_reduction, 0.0);
    assert_eq!(rows[1].driven_reduction, 0.0);
    let text = std::fs::read_to_string(path).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("name,seed,ablate_coupling,"));
}

#[test]
fn compare_rejects_different_trajectories() {
    let a = common::scenario("ex3_step.cfg");
    let b = common::scenario("ex3_sine.cfg");
    let dir = tempfile::tempdir().unwrap();
    assert!(compare(std::slice::from_ref(&a), dir.path()).is_err());
    assert!(compare(&[a, b], dir.path()).is_err());
}

#[test]
fn ablation_reduction_is_stable_across_seeds() {
    let base = common::scenario("ex1_circle.cfg");
    let dir = tempfile::tempdir().unwrap();
    let reductions: Vec<f64> = [1u64, 2, 3]
        .iter()
        .map(|&seed| {
            let on = Scenario { seed, ..base.clone() };
            let off = Scenario {
                seed,
                ablate_coupling: true,
                ..base.clone()
            };
            compare(&[on, off], dir.path()).unwrap().0[1].driven_reduction
        })
        .collect();
    let lo = reductions.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = reductions.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(hi - lo <= 10.0, "{reductions:?}");
}

#[test]
fn waypoint_scenario_runs_end_to_end() {
    let s = common::scenario("ex2_waypoints.cfg");
    let dir = tempfile::tempdir().unwrap();
    let (out, files) = run_scenario(&s, dir.path()).unwrap();
    assert!(files.timeseries.is_file());
    assert!(out.metrics.mean_ee_pos < 0.05, "{}", out.metrics.mean_ee_pos);
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aeromanip"))
}

#[test]
fn cli_simulate_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let status = cli()
        .args([
            "simulate",
            common::scenario_path("ex3_step.cfg").to_str().unwrap(),
            "--seed",
            "9",
        ])
        .env("AEROMANIP_OUT", dir.path())
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    assert!(dir.path().join("ex3_step_timeseries.csv").is_file());
    assert!(dir.path().join("ex3_step_metrics.csv").is_file());
}

#[test]
fn cli_validate_does_not_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli()
        .args(["--out", dir.path().to_str().unwrap(), "simulate", "--validate"])
        .arg(common::scenario_path("ex2_lemniscate.cfg"))
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn cli_reports_the_failing_tick() {
    let dir = tempfile::tempdir().unwrap();
    // a shove far beyond what the rotors can hold pushes the tool out of reach
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(
        &cfg,
        "name = \"bad\"\nmode = \"hover\"\nduration = 5.0\nworkspace_center = [0.05, 0.3, 0.25]\n\
         [trajectory]\nkind = \"hold\"\nalpha = -0.45\nbeta = 0.3\n\
         [disturbance]\nkind = \"step\"\naxis = \"x\"\nmagnitude = 60.0\nonset = 0.5\n",
    )
    .unwrap();
    let out = cli()
        .args(["--out", dir.path().to_str().unwrap(), "simulate"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("tick"), "{err}");
}

#[test]
fn cli_rejects_unknown_trajectory_kind() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("odd.cfg");
    std::fs::write(
        &cfg,
        "name = \"odd\"\nmode = \"hover\"\nduration = 1.0\n[trajectory]\nkind = \"spiral\"\n",
    )
    .unwrap();
    let out = cli().args(["simulate", "--validate"]).arg(&cfg).output().unwrap();
    assert!(!out.status.success());
}
