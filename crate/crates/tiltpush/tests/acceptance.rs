//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured numbers. Expected values come from independent oracles
//! computed inside this file (closed-form force balances, analytic
//! trajectories, first-principles actuation sums), never from the code
//! paths under test.

use std::time::Instant;

use nalgebra::SVector;

use tiltpush::actuation::{actuation_wrench, allocation_matrix};
use tiltpush::config::{self, ScenarioConfig};
use tiltpush::control::tilt_angle;
use tiltpush::sim::{
    dynamics_derivative, integrate_step, run_scenario, write_telemetry_csv, RigidState, RunStatus,
    SegmentSummary, Summary,
};
use tiltpush::vehicle::{
    gravity_wrench, inertia_matrix, Frame, VehicleParams, VehicleState, Wrench,
};
use tiltpush::{Mat3, Vec3};

fn params() -> VehicleParams {
    VehicleParams::default()
}

/// Deterministic xorshift generator so the property criteria need no
/// external RNG crate and stay reproducible.
struct Xorshift(u64);

impl Xorshift {
    fn new(seed: u64) -> Self {
        Self(seed.max(1))
    }

    fn next_f64(&mut self) -> f64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        (x >> 11) as f64 / (1u64 << 53) as f64
    }

    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

fn pushing_segment(summary: &Summary, dp: f64) -> &SegmentSummary {
    summary
        .segments
        .iter()
        .find(|s| s.dp.map(|d| (d - dp).abs() < 1e-9).unwrap_or(false))
        .unwrap_or_else(|| panic!("no segment with dp = {dp}"))
}

#[test]
fn criterion_1_hover_equilibrium() {
    let start = Instant::now();
    let config = ScenarioConfig {
        name: "hover-hold".into(),
        duration: 10.0,
        ..Default::default()
    };
    let outcome = run_scenario(&config).unwrap();
    assert_eq!(outcome.summary.status, RunStatus::Completed);

    let mut max_err: f64 = 0.0;
    let mut max_tilt: f64 = 0.0;
    for record in &outcome.telemetry {
        max_err = max_err.max(record.position_error.norm());
        max_tilt = max_tilt.max(record.tilt.abs());
        for speed in record.rotor_speeds {
            assert!(
                (speed - 575.33).abs() / 575.33 < 0.01,
                "rotor speed {speed} departs from hover"
            );
        }
    }
    assert!(max_err < 1e-3, "position error {max_err}");
    assert!(max_tilt < 1e-3, "tilt {max_tilt}");
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 5.0, "runtime {elapsed:.2} s exceeds 5 s");
    println!(
        "criterion 1 (hover equilibrium): PASS — max |e_p| {max_err:.2e} m, \
         max |tilt| {max_tilt:.2e} rad, runtime {elapsed:.2} s"
    );
}

#[test]
fn criterion_2_allocation_round_trip() {
    let start = Instant::now();
    let p = params();
    let mut rng = Xorshift::new(0x5eed);

    // Route A vs route B: grouped-sum wrench against the per-rotor matrix.
    let mut max_dev: f64 = 0.0;
    for _ in 0..10_000 {
        let speeds: [f64; 8] = std::array::from_fn(|_| rng.range(0.0, p.max_rotor_speed));
        let tilt = rng.range(p.tilt_min, p.tilt_max);
        let wrench = actuation_wrench(&speeds, tilt, &p);
        let lambda = SVector::<f64, 8>::from_iterator(speeds.iter().map(|o| o * o));
        let mapped = allocation_matrix(tilt, &p) * lambda;
        let stacked = [
            wrench.force.x,
            wrench.force.y,
            wrench.force.z,
            wrench.torque.x,
            wrench.torque.y,
            wrench.torque.z,
        ];
        for (row, expected) in stacked.iter().enumerate() {
            let dev = (mapped[row] - expected).abs() / expected.abs().max(1.0);
            max_dev = max_dev.max(dev);
            assert!(dev < 1e-9, "row {row}: {} vs {expected}", mapped[row]);
        }
    }

    // Tilt inversion: assemble (F1, F3, Gamma2) from first principles for a
    // random thrust split and recover the tilt.
    let limit = 89.0_f64.to_radians();
    let mut max_tilt_dev: f64 = 0.0;
    for _ in 0..10_000 {
        let tilt = rng.range(-limit, limit);
        let back = rng.range(0.1, 60.0);
        let front = rng.range(0.0, 60.0);
        let f1 = back * tilt.sin();
        let f3 = back * tilt.cos() + front;
        let gamma2 = (back * tilt.cos() - front) * p.rotor_arm_x;
        let solution = tilt_angle(f1, f3, gamma2, &p).unwrap();
        let dev = (solution.angle - tilt).abs();
        max_tilt_dev = max_tilt_dev.max(dev);
        assert!(dev < 1e-9, "tilt {tilt} recovered as {}", solution.angle);
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 5.0, "runtime {elapsed:.2} s exceeds 5 s");
    println!(
        "criterion 2 (allocation round-trip): PASS — wrench dev {max_dev:.2e}, \
         tilt dev {max_tilt_dev:.2e}, runtime {elapsed:.2} s"
    );
}

/// Global position error of a tumbling ballistic arc at `dt`, against the
/// analytic parabola (world trajectory is exact regardless of tumbling).
fn ballistic_error(dt: f64) -> f64 {
    let p = params();
    let mut state = VehicleState::at_rest(Vec3::new(0.0, 0.0, 10.0), 0.0);
    state.velocity = Vec3::new(1.0, -0.5, 2.0);
    state.angular_velocity = Vec3::new(1.3, -0.8, 2.1);
    let v0 = state.velocity_world();
    let p0 = state.position;
    let no_wrench = Wrench::zero(Frame::Body);
    let mut rigid = RigidState::of(&state);
    let steps = (1.0 / dt).round() as usize;
    for _ in 0..steps {
        rigid = integrate_step(
            &rigid,
            |s| dynamics_derivative(s, &no_wrench, &no_wrench, 0.0, &p),
            dt,
        )
        .unwrap();
    }
    let t = steps as f64 * dt;
    let expected = p0 + v0 * t + 0.5 * t * t * Vec3::new(0.0, 0.0, -9.81);
    (rigid.position - expected).norm()
}

#[test]
fn criterion_3_integrator_order() {
    let e1 = ballistic_error(4e-3);
    let e2 = ballistic_error(2e-3);
    let e3 = ballistic_error(1e-3);
    let r1 = e1 / e2;
    let r2 = e2 / e3;
    assert!(r1 >= 12.0, "first halving ratio {r1:.1}");
    assert!(r2 >= 12.0, "second halving ratio {r2:.1}");
    println!(
        "criterion 3 (integrator order): PASS — halving ratios {r1:.1}x, {r2:.1}x \
         (16x expected for order 4)"
    );
}

#[test]
fn criterion_4_quasi_static_push_force() {
    let start = Instant::now();
    let config = config::case1();
    let outcome = run_scenario(&config).unwrap();
    assert_eq!(outcome.summary.status, RunStatus::Completed);

    let stiffness = config.gains.stiffness.x;
    let wall_stiffness = config.wall.as_ref().unwrap().stiffness;
    // Independent quasi-static oracle: the steady force satisfies
    // F = K (dp - F / k_n); solved in closed form and cross-checked by
    // fixed-point iteration.
    let oracle = |dp: f64| -> f64 {
        let closed_form = stiffness * dp / (1.0 + stiffness / wall_stiffness);
        let mut fixed_point = 0.0;
        for _ in 0..200 {
            fixed_point = stiffness * (dp - fixed_point / wall_stiffness);
        }
        assert!((closed_form - fixed_point).abs() < 1e-9);
        closed_form
    };

    let reported = [13.0, 19.0, 23.0, 28.0];
    let mut lines = Vec::new();
    for (dp, paper) in [0.6, 0.8, 1.0, 1.2].into_iter().zip(reported) {
        let segment = pushing_segment(&outcome.summary, dp);
        assert!(segment.converged, "segment dp={dp} did not settle");
        let expected = oracle(dp);
        let rel = (segment.steady_force - expected).abs() / expected;
        assert!(
            rel < 0.05,
            "dp={dp}: force {} vs oracle {expected} ({:.1}%)",
            segment.steady_force,
            100.0 * rel
        );
        let vs_paper = (segment.steady_force - paper).abs() / paper;
        assert!(
            vs_paper < 0.20,
            "dp={dp}: force {} vs reported {paper} ({:.1}%)",
            segment.steady_force,
            100.0 * vs_paper
        );
        lines.push(format!(
            "dp={dp}: {:.2} N (oracle {expected:.2}, {:+.2}%; reported {paper}, {:+.1}%)",
            segment.steady_force,
            100.0 * (segment.steady_force - expected) / expected,
            100.0 * (segment.steady_force - paper) / paper,
        ));
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "runtime {elapsed:.2} s exceeds 60 s");
    println!(
        "criterion 4 (quasi-static push force): PASS — {}; runtime {elapsed:.2} s",
        lines.join("; ")
    );
}

#[test]
fn criterion_5_com_shift_benefit() {
    let with_shift = run_scenario(&config::case1()).unwrap().summary;
    let fixed_com = run_scenario(&config::case2()).unwrap().summary;

    let shifted = pushing_segment(&with_shift, 0.8);
    let fixed = pushing_segment(&fixed_com, 0.8);
    assert!(
        shifted.max_back_saturation < fixed.max_back_saturation,
        "back saturation {} !< {}",
        shifted.max_back_saturation,
        fixed.max_back_saturation
    );
    assert!(
        shifted.attitude_rms < fixed.attitude_rms,
        "attitude rms {} !< {}",
        shifted.attitude_rms,
        fixed.attitude_rms
    );
    println!(
        "criterion 5 (CoM-shift benefit at dp=0.8): PASS — back saturation {:.3} < {:.3}, \
         attitude rms {:.2e} < {:.2e} rad",
        shifted.max_back_saturation,
        fixed.max_back_saturation,
        shifted.attitude_rms,
        fixed.attitude_rms
    );
}

#[test]
fn criterion_6_gravity_moment_compensation() {
    let p = params();
    // Arithmetic oracle: d * m * g with d = (m_S / m) * l.
    let expected: f64 = (0.90 / 3.12 * 0.18) * 3.12 * 9.81;
    assert!((expected - 1.589).abs() < 1e-3);

    let moment = gravity_wrench(&Mat3::identity(), 0.18, &p).torque;
    assert!(
        (moment.y - 1.589).abs() < 1e-3,
        "pitch gravity moment {} vs 1.589",
        moment.y
    );
    assert!((moment.y - expected).abs() < 1e-12);

    // Steady pushing with the plate out demands a positive tilt whose sign
    // matches the positive pitch moment being trimmed.
    let outcome = run_scenario(&config::case1()).unwrap();
    let steady_tilt: Vec<f64> = outcome
        .telemetry
        .iter()
        .filter(|r| r.t >= 30.0 && r.t < 36.0 && (r.plate_pos - 0.18).abs() < 1e-9)
        .map(|r| r.tilt)
        .collect();
    assert!(!steady_tilt.is_empty());
    let min_tilt = steady_tilt.iter().fold(f64::INFINITY, |m, t| m.min(*t));
    assert!(
        min_tilt > 1e-3,
        "steady pushing tilt {min_tilt} not positive"
    );
    println!(
        "criterion 6 (gravity-moment compensation): PASS — feedforward {:.4} N m \
         (expected {expected:.4}), steady pushing tilt >= {min_tilt:.3} rad",
        moment.y
    );
}

#[test]
fn criterion_7_inertia_regression() {
    let p = params();
    let at_zero = inertia_matrix(0.0, &p).unwrap();
    assert_eq!(at_zero[(0, 0)], 0.0444);
    assert_eq!(at_zero[(1, 1)], 0.0538);
    assert_eq!(at_zero[(2, 2)], 0.0795);

    let extended = inertia_matrix(0.18, &p).unwrap();
    assert!((extended[(0, 0)] - 0.0444).abs() < 1e-12);
    assert!((extended[(1, 1)] - 0.069676).abs() < 1e-12);
    assert!((extended[(2, 2)] - 0.096348).abs() < 1e-12);
    println!(
        "criterion 7 (inertia regression): PASS — diag({}, {}, {}) at l=0, \
         diag({:.6}, {:.6}, {:.6}) at l=0.18",
        at_zero[(0, 0)],
        at_zero[(1, 1)],
        at_zero[(2, 2)],
        extended[(0, 0)],
        extended[(1, 1)],
        extended[(2, 2)]
    );
}

#[test]
fn criterion_8_instability_detection() {
    let fixed_com = run_scenario(&config::case2()).unwrap().summary;
    let reengage_time = config::case2().waypoints.last().unwrap().time;
    let tripped = fixed_com.status.is_unstable() || fixed_com.oscillation_exceeded;
    assert!(tripped, "case2 at dp=1.0 neither unstable nor oscillating");
    if let RunStatus::Unstable { time, .. } = &fixed_com.status {
        assert!(
            *time >= reengage_time,
            "instability at {time} s precedes the dp=1.0 re-engagement"
        );
    }

    let with_shift = run_scenario(&config::case1()).unwrap().summary;
    assert_eq!(with_shift.status, RunStatus::Completed);
    assert!(!with_shift.oscillation_exceeded);
    let deep = pushing_segment(&with_shift, 1.2);
    assert!(deep.converged);

    let status = match &fixed_com.status {
        RunStatus::Unstable { time, reason } => format!("unstable at {time:.2} s ({reason})"),
        RunStatus::Completed => "oscillation threshold exceeded".into(),
    };
    println!(
        "criterion 8 (instability detection): PASS — case2 dp=1.0 {status}; \
         case1 completes dp=1.2 at {:.2} N",
        deep.steady_force
    );
}

#[test]
fn criterion_9_determinism() {
    for config in [config::case1(), config::case2()] {
        let a = run_scenario(&config).unwrap();
        let b = run_scenario(&config).unwrap();
        let mut csv_a = Vec::new();
        let mut csv_b = Vec::new();
        write_telemetry_csv(&a.telemetry, &mut csv_a).unwrap();
        write_telemetry_csv(&b.telemetry, &mut csv_b).unwrap();
        assert_eq!(csv_a, csv_b, "telemetry of {} differs between runs", config.name);
    }
    println!("criterion 9 (determinism): PASS — byte-identical telemetry for both templates");
}
