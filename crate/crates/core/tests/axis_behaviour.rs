use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stepsim_core::axis::{
    Axis, AxisConfig, ExerciseSpec, Fault, HomingConfig, LoopMode, MoveMode, ProfileKind, StopKind,
};
use stepsim_core::drive::{Direction, DriveConfig};
use stepsim_core::motor::MotorDefinition;
use stepsim_core::profile::MoveConstraints;
use stepsim_core::Error;

const STEP: f64 = std::f64::consts::PI / 100.0;

fn axis_with(cfg: AxisConfig) -> Axis {
    Axis::new(cfg, MotorDefinition::n33hrlg(), DriveConfig::default()).unwrap()
}

fn axis() -> Axis {
    axis_with(AxisConfig::standard(0))
}

fn gentle() -> MoveConstraints {
    MoveConstraints { v_max: 10.0, a_max: 20.0, d_max: 20.0, j_max: 200.0 }
}

#[test]
fn twenty_step_move_lands_on_thirty_six_degrees() {
    let mut a = axis();
    let start = a.shaft_angle();
    let (status, trace) =
        a.execute_straight_move(20, MoveMode::Relative, &gentle(), ProfileKind::Trapezoid, 100).unwrap();
    assert!(status.move_complete);
    assert_eq!(status.commanded_position, 20);
    assert_eq!(status.velocity, 0.0);
    let moved = a.shaft_angle() - start;
    assert!((moved - 20.0 * STEP).abs() < 1e-3 * 20.0 * STEP, "moved {moved}");
    assert!(a.state().omega.abs() < 0.01);
    assert!(!trace.frames.is_empty());
}

#[test]
fn scurve_move_also_completes() {
    let mut a = axis();
    let (status, _) =
        a.execute_straight_move(-15, MoveMode::Relative, &gentle(), ProfileKind::Scurve, 1000).unwrap();
    assert!(status.move_complete);
    assert_eq!(status.commanded_position, -15);
    assert!((a.shaft_angle() + 15.0 * STEP).abs() < 1e-3);
}

#[test]
fn exercise_cycle_closes_and_peaks_at_target() {
    let mut a = axis();
    let start = a.state().theta;
    let e = ExerciseSpec { n_steps: 20, cycle_duration: 5.0, hold_duration: 1.0, repetitions: 3 };
    let (status, trace) = a.run_exercise_cycle(&e, 100).unwrap();
    assert!(status.move_complete);
    assert_eq!(status.commanded_position, 0);
    assert!((a.state().theta - start).abs() <= 1e-3);
    for rep in 0..3 {
        let t0 = f64::from(rep) * 5.0;
        let peak = trace.max_theta_between(t0, t0 + 5.0).unwrap() - start;
        let deg = peak.to_degrees();
        assert!((deg - 36.0).abs() <= 0.03 * 36.0, "rep {rep}: peak {deg}");
    }
}

#[test]
fn exercise_rejections() {
    let mut a = axis();
    let bad = ExerciseSpec { n_steps: 20, cycle_duration: 5.0, hold_duration: 5.0, repetitions: 1 };
    assert!(matches!(a.run_exercise_cycle(&bad, 10), Err(Error::Config(_))));
    let zero = ExerciseSpec { n_steps: 0, ..bad };
    assert!(a.run_exercise_cycle(&zero, 10).is_err());
    let fast = ExerciseSpec { n_steps: 40, cycle_duration: 1.01, hold_duration: 1.0, repetitions: 1 };
    assert!(matches!(a.run_exercise_cycle(&fast, 10), Err(Error::Constraint(_))));
    let far = ExerciseSpec { n_steps: 60, cycle_duration: 20.0, hold_duration: 1.0, repetitions: 1 };
    assert!(matches!(a.run_exercise_cycle(&far, 10), Err(Error::Constraint(_))));
    assert_eq!(a.time(), 0.0);
}

fn homed_angle(start: f64) -> (f64, Axis) {
    let mut a = axis();
    a.place_at(start);
    let status = a.find_reference(&HomingConfig::default()).unwrap();
    assert!(status.homed, "start {start}: {status:?}");
    assert_eq!(status.fault, None);
    assert_eq!(status.commanded_position, 0);
    (a.shaft_angle(), a)
}

#[test]
fn homing_is_deterministic_over_random_starts() {
    let cfg = AxisConfig::standard(0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let lo = cfg.rev_limit.position + 2.0 * STEP;
    let hi = cfg.fwd_limit.position - 2.0 * STEP;
    let (reference, _) = homed_angle(0.0);
    for _ in 0..100 {
        let start = rng.gen_range(lo..hi);
        let (angle, _) = homed_angle(start);
        assert!((angle - reference).abs() < STEP, "start {start}: {angle} vs {reference}");
    }
}

#[test]
fn homing_twice_lands_on_the_same_angle() {
    let (first, mut a) = homed_angle(0.3);
    let again = a.find_reference(&HomingConfig::default()).unwrap();
    assert!(again.homed);
    assert!((a.shaft_angle() - first).abs() <= 1e-6);
}

#[test]
fn homing_from_inside_the_window() {
    let cfg = AxisConfig::standard(0);
    let (angle, _) = homed_angle(cfg.home.position);
    let (reference, _) = homed_angle(0.0);
    assert!((angle - reference).abs() < STEP);
}

#[test]
fn homing_reverses_once_at_a_limit() {
    let cfg = AxisConfig::standard(0);
    let mut a = axis();
    a.place_at(0.5 * (cfg.home.position + cfg.fwd_limit.position).max(0.2));
    let h = HomingConfig { initial_search_direction: Direction::Forward, ..HomingConfig::default() };
    a.start_recording(1000);
    let status = a.find_reference(&h).unwrap();
    let trace = a.take_trace();
    assert!(status.homed);
    assert!(trace.frames.iter().any(|f| f.fwd_limit_active));
    let (reference, _) = homed_angle(0.0);
    assert!((a.shaft_angle() - reference).abs() < STEP);
}

#[test]
fn homing_offset_and_reset_position() {
    let (reference, _) = homed_angle(0.0);
    let mut a = axis();
    let h = HomingConfig { offset_steps: 5, reset_position: 100, ..HomingConfig::default() };
    let status = a.find_reference(&h).unwrap();
    assert!(status.homed);
    assert_eq!(status.commanded_position, 100);
    assert!((a.shaft_angle() - reference - 5.0 * STEP).abs() < 0.5 * STEP);
}

#[test]
fn stall_raises_following_error_only_in_closed_loop() {
    let mut cfg = AxisConfig::standard(0);
    cfg.loop_mode = LoopMode::Closed;
    let c = MoveConstraints { v_max: 50.0, a_max: 100.0, d_max: 100.0, j_max: 1000.0 };

    let mut quiet = axis_with(cfg.clone());
    let (status, _) = quiet.execute_straight_move(20, MoveMode::Relative, &c, ProfileKind::Trapezoid, 100).unwrap();
    assert_eq!(status.fault, None);
    assert_eq!(status.actual_position, status.commanded_position);

    let mut loaded = axis_with(cfg);
    loaded.motor_mut().params.load_torque = 15.0;
    let (status, _) = loaded.execute_straight_move(20, MoveMode::Relative, &c, ProfileKind::Trapezoid, 100).unwrap();
    assert_eq!(status.fault, Some(Fault::FollowingError));
    assert!(!status.move_complete);
    assert!(status.commanded_position < 20);

    let mut open_cfg = AxisConfig::standard(0);
    open_cfg.loop_mode = LoopMode::Open;
    let mut open = axis_with(open_cfg);
    open.motor_mut().params.load_torque = 15.0;
    open.start_straight_move(20, MoveMode::Relative, &c, ProfileKind::Trapezoid).unwrap();
    open.run_for(1.0).unwrap();
    let s = open.status();
    assert_eq!(s.fault, None);
    assert_eq!(s.actual_position, s.commanded_position);
    assert!(open.shaft_angle() < 0.0, "open loop slips silently");
}

#[test]
fn open_and_closed_loop_traces_match_without_load() {
    let c = gentle();
    let mut open_cfg = AxisConfig::standard(0);
    open_cfg.loop_mode = LoopMode::Open;
    let mut open = axis_with(open_cfg);
    let mut cfg = AxisConfig::standard(0);
    cfg.loop_mode = LoopMode::Closed;
    let mut closed = axis_with(cfg);
    let (_, a) = open.execute_straight_move(12, MoveMode::Relative, &c, ProfileKind::Scurve, 10).unwrap();
    let (_, b) = closed.execute_straight_move(12, MoveMode::Relative, &c, ProfileKind::Scurve, 10).unwrap();
    assert_eq!(a.frames.len(), b.frames.len());
    for (x, y) in a.frames.iter().zip(&b.frames) {
        assert_eq!(x.state.theta, y.state.theta);
    }
}

#[test]
fn decelerating_stop_during_cruise() {
    let mut a = axis();
    let c = MoveConstraints { v_max: 100.0, a_max: 200.0, d_max: 200.0, j_max: 2000.0 };
    a.start_straight_move(100, MoveMode::Relative, &c, ProfileKind::Trapezoid).unwrap();
    a.run_for(0.6).unwrap();
    assert!((a.status().velocity - 100.0).abs() < 1e-9);
    let s = a.stop(StopKind::Decelerating);
    assert_eq!(s.fault, Some(Fault::Stopped));
    a.run_until_idle(5.0).unwrap();
    let s = a.status();
    // Cruise position at the stop plus v²/(2·d_max) at the axis' default d_max.
    let d_max = AxisConfig::standard(0).default_constraints.d_max;
    let expected = 35.0 + 100.0 * 100.0 / (2.0 * d_max);
    assert!((s.commanded_position as f64 - expected).abs() <= 1.5, "{s:?}");
    assert_eq!(s.velocity, 0.0);
    assert!(!s.move_complete);
    a.run_for(0.5).unwrap();
    let expected = s.commanded_position as f64 * STEP;
    assert!((a.shaft_angle() - expected).abs() < 1e-3);
}

#[test]
fn kill_stop_holds_last_phase() {
    let mut a = axis();
    let c = MoveConstraints { v_max: 100.0, a_max: 200.0, d_max: 200.0, j_max: 2000.0 };
    a.start_straight_move(100, MoveMode::Relative, &c, ProfileKind::Trapezoid).unwrap();
    a.run_for(0.4).unwrap();
    let s = a.stop(StopKind::Kill);
    assert!(a.is_idle());
    a.run_for(1.0).unwrap();
    let after = a.status();
    assert_eq!(after.commanded_position, s.commanded_position);
    assert_eq!(after.fault, Some(Fault::Stopped));
    let expected = s.commanded_position as f64 * STEP;
    assert!((a.shaft_angle() - expected).abs() < STEP, "{} vs {expected}", a.shaft_angle());
}

#[test]
fn limit_hit_mid_move_decelerates() {
    let mut cfg = AxisConfig::standard(0);
    cfg.fwd_limit.position = 0.5;
    let c = MoveConstraints { v_max: 100.0, a_max: 200.0, d_max: 200.0, j_max: 2000.0 };
    let mut a = axis_with(cfg.clone());
    a.start_recording(10);
    a.start_straight_move(40, MoveMode::Relative, &c, ProfileKind::Trapezoid).unwrap();
    a.run_until_idle(5.0).unwrap();
    let trace = a.take_trace();
    let s = a.status();
    assert_eq!(s.fault, Some(Fault::LimitHit));
    assert!(!s.move_complete);
    let margin = c.v_max * c.v_max / (2.0 * c.d_max) * STEP;
    let origin = a.state().theta - a.shaft_angle();
    for f in &trace.frames {
        assert!(f.state.theta - origin <= cfg.fwd_limit.position + margin + STEP);
    }
    assert!(matches!(
        a.start_straight_move(1, MoveMode::Relative, &c, ProfileKind::Trapezoid),
        Err(Error::Rejected(_))
    ));
}

#[test]
fn busy_axis_rejects_new_moves() {
    let mut a = axis();
    a.start_straight_move(10, MoveMode::Relative, &gentle(), ProfileKind::Trapezoid).unwrap();
    a.run_for(0.1).unwrap();
    assert!(matches!(
        a.start_straight_move(10, MoveMode::Relative, &gentle(), ProfileKind::Trapezoid),
        Err(Error::Rejected(_))
    ));
}
