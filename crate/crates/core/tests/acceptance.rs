//! Acceptance checks. Every test prints one PASS/FAIL line, written straight to
//! stdout so it shows even when the harness captures output.

mod common;

use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use aeromanip::experiments::metrics::{base_attitude_error, base_position_error};
use aeromanip::experiments::{compare, quarter_means, run_scenario, simulate, RunOutput, Scenario};
use aeromanip::kinematics::amplification::{
    attitude_spread_amplification, error_amplification_mc, mean, AmplificationParams,
};
use aeromanip::model::{size_arm, SizingOptions, SystemModel};

fn report(id: u32, title: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {id:>2} {verdict}: {title} | {detail}");
    let _ = out.flush();
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed())
}

/// The 60 s circle run shared by the tracking and estimator checks.
fn circle_run() -> &'static (RunOutput, Duration) {
    static RUN: OnceLock<(RunOutput, Duration)> = OnceLock::new();
    RUN.get_or_init(|| {
        let s = common::scenario("ex1_circle.cfg");
        let (out, wall) = timed(|| simulate(&s));
        (out.unwrap(), wall)
    })
}

#[test]
fn c01_kinematics_oracles() {
    let arm = SystemModel::reference().arm;
    let ((rt, jac), wall) = timed(|| {
        (
            common::fk_ik_roundtrip(&arm, 10_000, 11),
            common::jacobian_fd_error(&arm, 1000, 12),
        )
    });
    let pass = rt.failures == 0 && rt.max_position < 1e-9 && jac < 1e-6 && wall < Duration::from_secs(10);
    report(
        1,
        "kinematics oracle suite",
        pass,
        &format!(
            "roundtrip {:.2e} m with {} failures, jacobian gap {:.2e}, {:.2?}",
            rt.max_position, rt.failures, jac, wall
        ),
    );
    assert!(pass);
}

#[test]
fn c02_recursion_oracles() {
    let model = SystemModel::reference();
    let ((torque, force, inertia), wall) = timed(|| {
        (
            common::static_torque_error(&model, 1000, 21),
            common::momentum_force_error(&model, 1000, 22),
            common::inertia_checks(&model.arm, 1000, 23),
        )
    });
    let pass = torque < 1e-10
        && force < 1e-4
        && inertia.max_asymmetry < 1e-12
        && inertia.min_eigenvalue > 0.0
        && inertia.max_energy_gap < 1e-9
        && wall < Duration::from_secs(10);
    report(
        2,
        "recursion oracle suite",
        pass,
        &format!(
            "static torque {:.2e} N m, momentum force {:.2e} N, asymmetry {:.1e}, min eig {:.2e}, energy gap {:.1e} J, {:.2?}",
            torque, force, inertia.max_asymmetry, inertia.min_eigenvalue, inertia.max_energy_gap, wall
        ),
    );
    assert!(pass);
}

#[test]
fn c03_circle_tracking() {
    let (run, wall) = circle_run();
    let m = &run.metrics;
    let pass = m.mean_ee_pos <= 0.01
        && m.max_ee_pos <= 0.04
        && m.mean_ee_att <= 1.6f64.to_radians()
        && *wall < Duration::from_secs(60);
    report(
        3,
        "circle tracking under pose noise",
        pass,
        &format!(
            "mean {:.2} cm, max {:.2} cm, mean attitude {:.3} deg, {:.2?} for 60 s",
            100.0 * m.mean_ee_pos,
            100.0 * m.max_ee_pos,
            m.mean_ee_att.to_degrees(),
            wall
        ),
    );
    assert!(pass);
}

#[test]
fn c04_coupling_estimate() {
    let m = &circle_run().0.metrics;
    let pass = m.mean_force_err <= 0.8 && m.mean_torque_err <= 0.2;
    report(
        4,
        "coupling estimate accuracy",
        pass,
        &format!(
            "mean force error {:.3} N, mean torque error {:.3} N m",
            m.mean_force_err, m.mean_torque_err
        ),
    );
    assert!(pass);
}

#[test]
fn c05_ablation() {
    let on = common::scenario("ex1_circle.cfg");
    let off = Scenario {
        name: "ex1_circle_ablated".into(),
        ablate_coupling: true,
        ..on.clone()
    };
    let dir = tempfile::tempdir().unwrap();
    let rows = compare(&[on, off], dir.path()).unwrap().0;
    let r = &rows[1];
    let pass = r.driven_reduction >= 50.0;
    report(
        5,
        "compensation against ablation",
        pass,
        &format!(
            "base-driven end-effector error {:.2} vs {:.2} cm ({:.1}% lower), total end-effector error {:.1}% lower",
            100.0 * rows[0].metrics.mean_base_driven_ee,
            100.0 * r.metrics.mean_base_driven_ee,
            r.driven_reduction,
            r.ee_reduction
        ),
    );
    assert!(pass);
}

#[test]
fn c06_sinusoidal_push() {
    let m = simulate(&common::scenario("ex3_sine.cfg")).unwrap().metrics;
    let limit = 1.5f64.to_radians();
    let pass = m.max_disp[0] >= 0.10 && m.max_ee_pos <= 0.01 && m.max_alpha_err <= limit && m.max_beta_err <= limit;
    report(
        6,
        "head stabilisation under a sinusoidal push",
        pass,
        &format!(
            "base x excursion {:.3} m, max end-effector {:.2} mm, max alpha/beta {:.3}/{:.3} deg",
            m.max_disp[0],
            1e3 * m.max_ee_pos,
            m.max_alpha_err.to_degrees(),
            m.max_beta_err.to_degrees()
        ),
    );
    assert!(pass);
}

#[test]
fn c07_step_push() {
    let m = simulate(&common::scenario("ex3_step.cfg")).unwrap().metrics;
    let limit = 2f64.to_radians();
    let pass = m.max_ee_pos <= 0.02 && m.max_alpha_err <= limit && m.max_beta_err <= limit;
    report(
        7,
        "head stabilisation under a step push",
        pass,
        &format!(
            "max end-effector {:.2} mm, max alpha/beta {:.3}/{:.3} deg",
            1e3 * m.max_ee_pos,
            m.max_alpha_err.to_degrees(),
            m.max_beta_err.to_degrees()
        ),
    );
    assert!(pass);
}

#[test]
fn c08_error_amplification() {
    let arm = SystemModel::reference().arm;
    let params = AmplificationParams::default();
    let ((stats, spread), wall) = timed(|| {
        (
            error_amplification_mc(&arm, &params),
            attitude_spread_amplification(&arm, &params),
        )
    });
    let ratio = stats.position_ratio();
    let (base_att, ee_att) = (mean(&stats.base_att), mean(&stats.ee_att));
    let att_gap = (ee_att - base_att).abs() / base_att;
    let pass = (1.3..=1.8).contains(&ratio)
        && att_gap <= 0.05
        && (1.9..=2.9).contains(&spread)
        && wall < Duration::from_secs(5);
    report(
        8,
        "base error amplification",
        pass,
        &format!(
            "position ratio {ratio:.3}, attitude {:.2}/{:.2} deg, spread ratio {spread:.3}, {wall:.2?}",
            base_att.to_degrees(),
            ee_att.to_degrees()
        ),
    );
    assert!(pass);
}

#[test]
fn c09_arm_sizing() {
    let r = size_arm(0.93, 1.7, 0.5, &SizingOptions::default()).unwrap();
    let pass = (0.54..=0.56).contains(&r.total_length) && r.coverage == 1.0;
    report(
        9,
        "arm sizing",
        pass,
        &format!(
            "total length {:.4} m, coverage {:.1}%",
            r.total_length,
            100.0 * r.coverage
        ),
    );
    assert!(pass);
}

#[test]
fn c10_cooperation() {
    let m = simulate(&common::scenario("ex2_lemniscate.cfg")).unwrap().metrics;
    let dir = tempfile::tempdir().unwrap();
    let waypoints = run_scenario(&common::scenario("ex2_waypoints.cfg"), dir.path());
    let pass = m.mean_ee_pos <= 0.05 && m.mean_ee_att <= 1.6f64.to_radians() && waypoints.is_ok();
    report(
        10,
        "cooperation mode",
        pass,
        &format!(
            "lemniscate mean {:.2} cm, mean attitude {:.3} deg; waypoint file run {}",
            100.0 * m.mean_ee_pos,
            m.mean_ee_att.to_degrees(),
            match &waypoints {
                Ok((out, _)) => format!("completed, mean {:.2} cm", 100.0 * out.metrics.mean_ee_pos),
                Err(e) => format!("failed: {e}"),
            }
        ),
    );
    assert!(pass);
}

#[test]
fn c11_bounded_base_errors() {
    let s = Scenario {
        duration: 120.0,
        ..common::scenario("ex1_circle.cfg")
    };
    let records = simulate(&s).unwrap().records;
    let pos = quarter_means(&records, base_position_error);
    let att = quarter_means(&records, base_attitude_error);
    let pass = pos[3] <= 1.2 * pos[1] && att[3] <= 1.2 * att[1];
    report(
        11,
        "no growth in base errors over 120 s",
        pass,
        &format!(
            "position quarters {:.2}/{:.2}/{:.2}/{:.2} mm, attitude quarters {:.3}/{:.3}/{:.3}/{:.3} deg",
            1e3 * pos[0],
            1e3 * pos[1],
            1e3 * pos[2],
            1e3 * pos[3],
            att[0].to_degrees(),
            att[1].to_degrees(),
            att[2].to_degrees(),
            att[3].to_degrees()
        ),
    );
    assert!(pass);
}

#[test]
fn c12_determinism() {
    let mut differing = Vec::new();
    for name in [
        "ex1_circle.cfg",
        "ex2_lemniscate.cfg",
        "ex2_waypoints.cfg",
        "ex3_sine.cfg",
        "ex3_step.cfg",
    ] {
        let s = common::scenario(name);
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let (_, fa) = run_scenario(&s, a.path()).unwrap();
        let (_, fb) = run_scenario(&s, b.path()).unwrap();
        let same = |x: &std::path::Path, y: &std::path::Path| std::fs::read(x).unwrap() == std::fs::read(y).unwrap();
        if !(same(&fa.timeseries, &fb.timeseries) && same(&fa.metrics, &fb.metrics)) {
            differing.push(name);
        }
    }
    let pass = differing.is_empty();
    report(
        12,
        "bit-identical reruns",
        pass,
        &if pass {
            "all five bundled scenarios".to_string()
        } else {
            format!("differs: {differing:?}")
        },
    );
    assert!(pass);
}
