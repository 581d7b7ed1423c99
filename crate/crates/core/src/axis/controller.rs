//! The axis controller: one simulated stepper axis with its drive, plant,
//! switches and motion supervision.
//!
//! Every operation is split into a non-blocking `start_*` call and the
//! integrator-rate [`Axis::tick`]. The blocking helpers
//! ([`Axis::execute_straight_move`], [`Axis::find_reference`],
//! [`Axis::run_exercise_cycle`]) start an operation and tick until the axis
//! is idle again.

use serde::{Deserialize, Serialize};

use super::config::{AxisConfig, ExerciseSpec, HomingConfig, LoopMode, OutputMode, SwitchEdge};
use super::switches::{poll_switches, SwitchReadings};
use crate::drive::{step_clock, Direction, DriveConfig, DriveStage, SampledSchedule, StepSchedule};
use crate::error::{Error, Result};
use crate::motor::{electrical_torque, step_size, MotorDefinition, MotorState};
use crate::profile::{
    plan_scurve, plan_trapezoid, profile_to_steps, MotionProfile, MoveConstraints, Segment,
};
use crate::sim::{rk4_step, Trace, TraceFrame, DEFAULT_DT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    LimitHit,
    FollowingError,
    Stopped,
    ConfigError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveMode {
    Absolute,
    Relative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Trapezoid,
    Scurve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopKind {
    /// Ramp down at the deceleration limit.
    Decelerating,
    /// Cease step pulses at once; windings stay energized.
    Kill,
}

/// Snapshot of an axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisStatus {
    pub commanded_position: i64,
    pub actual_position: i64,
    /// Commanded velocity in steps/s.
    pub velocity: f64,
    pub move_complete: bool,
    pub fault: Option<Fault>,
    pub homed: bool,
}

/// The rotor counts as settled once |ω| stays below `omega` for `hold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettleCriterion {
    /// rad/s
    pub omega: f64,
    /// s
    pub hold: f64,
}

pub const DEFAULT_SETTLE: SettleCriterion = SettleCriterion { omega: 0.01, hold: 0.05 };

/// Final settle of a homing run, tight enough that repeated runs land on
/// the same angle to well under a microradian.
pub const HOMING_SETTLE: SettleCriterion = SettleCriterion { omega: 1e-4, hold: 0.05 };

#[derive(Debug, Clone)]
enum Pulses {
    None,
    Schedule { sampled: SampledSchedule, start_n: u64 },
    Jog { rate: f64, reverse: bool, start_n: u64, budget: Option<u64> },
}

impl Pulses {
    fn jog(rate: f64, direction: Direction, start_n: u64, budget: Option<u64>) -> Self {
        Pulses::Jog { rate, reverse: direction == Direction::Reverse, start_n, budget }
    }

    /// `(step, reverse)` logic levels at sample `n`.
    fn levels(&mut self, n: u64, dt: f64) -> (bool, bool) {
        match self {
            Pulses::None => (false, false),
            Pulses::Schedule { sampled, start_n } => sampled.levels(n.saturating_sub(*start_n)),
            Pulses::Jog { rate, reverse, start_n, budget } => {
                let m = n.saturating_sub(*start_n);
                let (k, fall) = jog_pulse(m, *rate, dt);
                let within_budget = budget.is_none_or(|b| k < b);
                (within_budget && m < fall, *reverse)
            }
        }
    }

    fn finished(&self, n: u64, dt: f64) -> bool {
        match self {
            Pulses::None => true,
            Pulses::Schedule { sampled, start_n } => !sampled.has_pending(n.saturating_sub(*start_n)),
            Pulses::Jog { rate, start_n, budget, .. } => match budget {
                None => false,
                Some(0) => true,
                Some(b) => n.saturating_sub(*start_n) >= jog_edges(b - 1, *rate, dt).1,
            },
        }
    }
}

/// Rise and fall sample indices of jog pulse `k`.
fn jog_edges(k: u64, rate: f64, dt: f64) -> (u64, u64) {
    let index = |t: f64| (t / dt - 1e-9).ceil().max(0.0) as u64;
    let rise = index(k as f64 / rate);
    let fall = index((k as f64 + 0.5) / rate).max(rise + 1);
    (rise, fall)
}

/// The latest jog pulse that has started by sample `m`, and its fall index.
fn jog_pulse(m: u64, rate: f64, dt: f64) -> (u64, u64) {
    let mut k = (m as f64 * dt * rate).floor() as u64;
    while jog_edges(k + 1, rate, dt).0 <= m {
        k += 1;
    }
    while k > 0 && jog_edges(k, rate, dt).0 > m {
        k -= 1;
    }
    (k, jog_edges(k, rate, dt).1)
}

#[derive(Debug, Clone)]
struct Settle {
    criterion: SettleCriterion,
    since: Option<u64>,
}

impl Settle {
    fn new(criterion: SettleCriterion) -> Self {
        Self { criterion, since: None }
    }

    fn update(&mut self, omega: f64, n: u64, dt: f64) -> bool {
        if omega.abs() < self.criterion.omega {
            let since = *self.since.get_or_insert(n);
            (n - since) as f64 * dt >= self.criterion.hold - 1e-12
        } else {
            self.since = None;
            false
        }
    }
}

#[derive(Debug, Clone)]
struct MotionRun {
    pulses: Pulses,
    /// Commanded trajectory in steps relative to the start of the run.
    profile: MotionProfile,
    start_n: u64,
    /// Drive phase index when the run started.
    start_index: i64,
    /// Register position reported on normal completion.
    target: Option<i64>,
    settle: Settle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum HomingStage {
    Search(Direction),
    BackOff,
    Approach,
    Offset,
    Finish,
}

#[derive(Debug, Clone)]
struct HomingRun {
    cfg: HomingConfig,
    stage: HomingStage,
    /// Stage to enter once the rotor has settled, if currently settling.
    pending: Option<HomingStage>,
    pulses: Pulses,
    settle: Settle,
    reversed: bool,
    prev_home: bool,
    leg_start_index: i64,
}

#[derive(Debug, Clone)]
enum Activity {
    Idle,
    Motion(MotionRun),
    Homing(Box<HomingRun>),
}

#[derive(Debug, Clone)]
struct Recorder {
    stride: u64,
    trace: Trace,
}

/// One simulated axis.
#[derive(Debug, Clone)]
pub struct Axis {
    config: AxisConfig,
    motor: MotorDefinition,
    drive: DriveStage,
    state: MotorState,
    dt: f64,
    n: u64,
    /// Rotor angle of the axis zero: the phase-0 equilibrium.
    origin: f64,
    register_offset: i64,
    steps_issued: u64,
    activity: Activity,
    move_complete: bool,
    fault: Option<Fault>,
    homed: bool,
    switches: SwitchReadings,
    recorder: Option<Recorder>,
}

impl Axis {
    /// Creates an axis at rest on its zero with the drive energized.
    pub fn new(config: AxisConfig, motor: MotorDefinition, drive: DriveConfig) -> Result<Self> {
        Self::with_dt(config, motor, drive, DEFAULT_DT)
    }

    pub fn with_dt(
        config: AxisConfig,
        motor: MotorDefinition,
        drive: DriveConfig,
        dt: f64,
    ) -> Result<Self> {
        config.check_runnable()?;
        motor.params.validate()?;
        drive.validate()?;
        if config.steps_per_rev != motor.spec.steps_per_rev {
            return Err(Error::Config(format!(
                "axis {} expects {} steps/rev but the motor has {}",
                config.axis_id, config.steps_per_rev, motor.spec.steps_per_rev
            )));
        }
        if !(dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {dt}")));
        }
        let drive = DriveStage::new(drive);
        let origin = motor.params.phase_equilibrium(0);
        let mut axis = Self {
            config,
            motor,
            drive,
            state: MotorState::default(),
            dt,
            n: 0,
            origin,
            register_offset: 0,
            steps_issued: 0,
            activity: Activity::Idle,
            move_complete: true,
            fault: None,
            homed: false,
            switches: SwitchReadings::default(),
            recorder: None,
        };
        axis.place_at(0.0);
        Ok(axis)
    }

    /// Puts the rotor at rest at a shaft angle with the drive holding the
    /// nearest full step. Resets position registers.
    pub fn place_at(&mut self, shaft_angle: f64) {
        let p = &self.motor.params;
        let k = (shaft_angle / step_size(p)).round() as i64;
        self.drive.state.phase_index = k;
        self.drive.state.ena_prev = 0.0;
        let v = self.drive.voltages();
        self.state = MotorState {
            theta: self.origin + shaft_angle,
            omega: 0.0,
            i_a: v.v_a / p.resistance,
            i_b: v.v_b / p.resistance,
        };
        self.register_offset = -k;
        self.activity = Activity::Idle;
        self.switches = poll_switches(&self.config, shaft_angle);
    }

    pub fn config(&self) -> &AxisConfig {
        &self.config
    }

    pub fn motor(&self) -> &MotorDefinition {
        &self.motor
    }

    pub fn motor_mut(&mut self) -> &mut MotorDefinition {
        &mut self.motor
    }

    pub fn state(&self) -> &MotorState {
        &self.state
    }

    pub fn switches(&self) -> SwitchReadings {
        self.switches
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Simulated time in s.
    pub fn time(&self) -> f64 {
        self.n as f64 * self.dt
    }

    /// Rotor angle relative to the axis zero, in rad.
    pub fn shaft_angle(&self) -> f64 {
        self.state.theta - self.origin
    }

    pub fn step_angle(&self) -> f64 {
        step_size(&self.motor.params)
    }

    /// Step commands the drive has acted on since the axis was created.
    pub fn steps_issued(&self) -> u64 {
        self.steps_issued
    }

    pub fn is_idle(&self) -> bool {
        matches!(self.activity, Activity::Idle)
    }

    /// Replaces the configuration; clears faults. Only allowed while idle.
    pub fn reconfigure(&mut self, config: AxisConfig) -> Result<()> {
        if !self.is_idle() {
            return Err(Error::Rejected("axis is busy".into()));
        }
        config.validate()?;
        if config.steps_per_rev != self.motor.spec.steps_per_rev {
            return Err(Error::Config("steps_per_rev does not match the motor".into()));
        }
        self.config = config;
        self.fault = None;
        Ok(())
    }

    pub fn clear_fault(&mut self) {
        self.fault = None;
    }

    /// Starts recording a frame every `stride` integrator samples.
    pub fn start_recording(&mut self, stride: u32) {
        self.recorder = Some(Recorder { stride: u64::from(stride.max(1)), trace: Trace::default() });
    }

    pub fn take_trace(&mut self) -> Trace {
        self.recorder.take().map(|r| r.trace).unwrap_or_default()
    }

    fn encoder_count(&self) -> i64 {
        (self.shaft_angle() / self.step_angle()).round() as i64
    }

    pub fn status(&self) -> AxisStatus {
        let commanded = self.drive.state.phase_index + self.register_offset;
        let actual = match self.config.loop_mode {
            LoopMode::Closed => self.encoder_count() + self.register_offset,
            LoopMode::Open => commanded,
        };
        AxisStatus {
            commanded_position: commanded,
            actual_position: actual,
            velocity: self.commanded_velocity(),
            move_complete: self.move_complete,
            fault: self.fault,
            homed: self.homed,
        }
    }

    fn commanded_velocity(&self) -> f64 {
        match &self.activity {
            Activity::Idle => 0.0,
            Activity::Motion(run) => {
                let t = (self.n - run.start_n) as f64 * self.dt;
                run.profile.sample(t).velocity
            }
            Activity::Homing(h) => match (&h.pulses, h.pending) {
                (Pulses::Jog { rate, reverse, .. }, None) => {
                    if *reverse {
                        -rate
                    } else {
                        *rate
                    }
                }
                _ => 0.0,
            },
        }
    }

    fn ensure_ready(&self) -> Result<()> {
        if !self.config.enabled {
            return Err(Error::Config(format!("axis {} is disabled", self.config.axis_id)));
        }
        if let Some(fault) = self.fault {
            return Err(Error::Rejected(format!("axis has an active fault: {fault:?}")));
        }
        if !self.is_idle() {
            return Err(Error::Rejected("axis is busy".into()));
        }
        Ok(())
    }

    fn check_rate(&self, rate: f64) -> Result<()> {
        let ceiling = self.motor.spec.max_step_rate();
        if rate > ceiling {
            return Err(Error::Constraint(format!(
                "step rate {rate} steps/s exceeds the motor ceiling of {ceiling} steps/s"
            )));
        }
        Ok(())
    }

    fn begin_motion(&mut self, profile: MotionProfile, schedule: StepSchedule, target: Option<i64>) {
        self.activity = Activity::Motion(MotionRun {
            pulses: Pulses::Schedule { sampled: schedule.sampled(self.dt), start_n: self.n },
            profile,
            start_n: self.n,
            start_index: self.drive.state.phase_index,
            target,
            settle: Settle::new(DEFAULT_SETTLE),
        });
    }

    /// Plans and starts a point-to-point move.
    pub fn start_straight_move(
        &mut self,
        target: i64,
        mode: MoveMode,
        constraints: &MoveConstraints,
        kind: ProfileKind,
    ) -> Result<()> {
        self.ensure_ready()?;
        constraints.validate()?;
        self.check_rate(constraints.v_max)?;
        let commanded = self.status().commanded_position;
        let distance = match mode {
            MoveMode::Relative => target,
            MoveMode::Absolute => target - commanded,
        };
        if distance == 0 {
            self.move_complete = true;
            return Ok(());
        }
        let profile = match kind {
            ProfileKind::Trapezoid => plan_trapezoid(distance, constraints)?,
            ProfileKind::Scurve => plan_scurve(distance, constraints)?,
        };
        let schedule = profile_to_steps(&profile, true)?;
        self.move_complete = false;
        self.begin_motion(profile, schedule, Some(commanded + distance));
        Ok(())
    }

    /// Starts the out-hold-return exercise.
    pub fn start_exercise(&mut self, e: &ExerciseSpec) -> Result<()> {
        self.ensure_ready()?;
        e.validate()?;
        let rate = e.step_rate();
        self.check_rate(rate)?;
        let travel = e.n_steps as f64 * self.step_angle();
        if self.config.fwd_limit.enabled && self.shaft_angle() + travel >= self.config.fwd_limit.position {
            return Err(Error::Constraint(format!(
                "exercise of {} steps would reach the forward limit",
                e.n_steps
            )));
        }

        let ceiling = self.motor.spec.max_step_rate();
        let t_travel = e.travel_time();
        let mut schedule = StepSchedule::default();
        let mut segments = Vec::new();
        let n = e.n_steps as f64;
        for rep in 0..e.repetitions {
            let t0 = f64::from(rep) * e.cycle_duration;
            schedule.append(&step_clock(rate, e.n_steps, t0, Direction::Forward, ceiling)?);
            schedule.append(&step_clock(
                rate,
                e.n_steps,
                t0 + t_travel + e.hold_duration,
                Direction::Reverse,
                ceiling,
            )?);
            segments.push(Segment::from_state(t_travel, 0.0, rate, 0.0, 0.0));
            segments.push(Segment::from_state(e.hold_duration, n, 0.0, 0.0, 0.0));
            segments.push(Segment::from_state(t_travel, n, -rate, 0.0, 0.0));
        }
        let commanded = self.status().commanded_position;
        self.move_complete = false;
        self.begin_motion(MotionProfile::from_segments(segments), schedule, Some(commanded));
        Ok(())
    }

    /// Starts a reference move to the home switch.
    pub fn start_homing(&mut self, h: &HomingConfig) -> Result<()> {
        self.ensure_ready()?;
        h.validate()?;
        self.check_rate(h.search_velocity)?;
        if !self.config.home.enabled {
            return Err(Error::Config(format!(
                "axis {} has no enabled home switch",
                self.config.axis_id
            )));
        }
        let first = if self.switches.home.asserted {
            HomingStage::BackOff
        } else {
            HomingStage::Search(h.initial_search_direction)
        };
        self.move_complete = false;
        self.homed = false;
        self.activity = Activity::Homing(Box::new(HomingRun {
            cfg: *h,
            stage: first,
            pending: Some(first),
            pulses: Pulses::None,
            settle: Settle::new(DEFAULT_SETTLE),
            reversed: false,
            prev_home: self.switches.home.asserted,
            leg_start_index: self.drive.state.phase_index,
        }));
        Ok(())
    }

    /// Stops the axis. Always records a `Stopped` fault.
    pub fn stop(&mut self, kind: StopKind) -> AxisStatus {
        self.fault = Some(Fault::Stopped);
        self.move_complete = false;
        match kind {
            StopKind::Kill => self.activity = Activity::Idle,
            StopKind::Decelerating => self.decelerate(),
        }
        self.status()
    }

    /// Replaces any remaining motion with a ramp to rest at `d_max`.
    fn decelerate(&mut self) {
        let velocity = self.commanded_velocity();
        let Activity::Motion(run) = &self.activity else {
            // Homing jogs run at low speed and simply stop.
            self.activity = Activity::Idle;
            return;
        };
        let issued = (self.drive.state.phase_index - run.start_index) as f64;
        let ramp = MotionProfile::stopping_ramp(issued, velocity, self.config.default_constraints.d_max);
        if ramp.is_empty() {
            self.activity = Activity::Idle;
            return;
        }
        let schedule = profile_to_steps(&ramp, true).expect("a stopping ramp is monotone");
        let rebased = MotionProfile::from_segments(ramp.segments.clone());
        self.activity = Activity::Motion(MotionRun {
            pulses: Pulses::Schedule { sampled: schedule.sampled(self.dt), start_n: self.n },
            profile: rebased,
            start_n: self.n,
            start_index: self.drive.state.phase_index - issued as i64,
            target: None,
            settle: Settle::new(DEFAULT_SETTLE),
        });
    }

    /// Advances the simulation by one integrator step.
    pub fn tick(&mut self) -> Result<()> {
        let n = self.n;
        let dt = self.dt;
        let (step, reverse) = match &mut self.activity {
            Activity::Idle => (false, false),
            Activity::Motion(run) => run.pulses.levels(n, dt),
            Activity::Homing(h) => h.pulses.levels(n, dt),
        };

        // Controller output lines, then the drive's input conditioning.
        let polarity = self.config.step_polarity;
        let (line_a, line_b, ena, rev) = match self.config.output_mode {
            OutputMode::StepDirection => {
                let a = polarity.apply(step);
                (a, reverse, polarity.apply(a), reverse)
            }
            OutputMode::CwCcw => {
                let cw = polarity.apply(step && !reverse);
                let ccw = polarity.apply(step && reverse);
                let (cw_in, ccw_in) = (polarity.apply(cw), polarity.apply(ccw));
                (cw, ccw, cw_in || ccw_in, ccw_in)
            }
        };
        let cfg = self.drive.config;
        let before = self.drive.state.phase_index;
        self.drive.sample(cfg.level(ena), cfg.level(rev));
        self.steps_issued += self.drive.state.phase_index.abs_diff(before);
        let volts = self.drive.voltages();

        if let Some(rec) = &mut self.recorder {
            if n % rec.stride == 0 {
                rec.trace.frames.push(TraceFrame {
                    t: n as f64 * dt,
                    state: self.state,
                    volts,
                    torque: electrical_torque(&self.motor.params, &self.state),
                    ena: cfg.level(line_a),
                    rev: cfg.level(line_b),
                    home_active: self.switches.home.asserted,
                    fwd_limit_active: self.switches.fwd_limit.asserted,
                    rev_limit_active: self.switches.rev_limit.asserted,
                });
            }
        }

        self.state = rk4_step(&self.motor.params, &self.state, &volts, dt).map_err(|e| match e {
            Error::IntegrationBlowup { field, .. } => Error::IntegrationBlowup { field, t: n as f64 * dt },
            other => other,
        })?;
        self.n += 1;
        self.switches = poll_switches(&self.config, self.shaft_angle());
        self.supervise_following_error();
        self.advance_activity();
        Ok(())
    }

    /// Closed-loop stall detection. Raises a following-error fault and kills
    /// motion when commanded and encoder counts drift apart.
    pub fn supervise_following_error(&mut self) -> Option<Fault> {
        if self.config.loop_mode != LoopMode::Closed || self.fault.is_some() {
            return None;
        }
        let error = self.drive.state.phase_index - self.encoder_count();
        if error.unsigned_abs() > u64::from(self.config.following_error_limit) {
            self.fault = Some(Fault::FollowingError);
            self.move_complete = false;
            self.activity = Activity::Idle;
            return self.fault;
        }
        None
    }

    fn advance_activity(&mut self) {
        let activity = std::mem::replace(&mut self.activity, Activity::Idle);
        self.activity = match activity {
            Activity::Idle => Activity::Idle,
            Activity::Motion(run) => self.advance_motion(run),
            Activity::Homing(h) => self.advance_homing(h),
        };
    }

    fn advance_motion(&mut self, mut run: MotionRun) -> Activity {
        let t = (self.n - run.start_n) as f64 * self.dt;
        let velocity = run.profile.sample(t).velocity;
        let sw = self.switches;
        let into_limit = (velocity > 0.0 && sw.fwd_limit.asserted) || (velocity < 0.0 && sw.rev_limit.asserted);
        if into_limit && run.target.is_some() {
            self.fault = Some(Fault::LimitHit);
            self.move_complete = false;
            self.activity = Activity::Motion(run);
            self.decelerate();
            return std::mem::replace(&mut self.activity, Activity::Idle);
        }
        if !run.pulses.finished(self.n, self.dt) {
            return Activity::Motion(run);
        }
        let Some(target) = run.target else {
            // Stop ramps end without a completion.
            return Activity::Idle;
        };
        if run.settle.update(self.state.omega, self.n, self.dt) {
            debug_assert_eq!(self.status().commanded_position, target);
            self.move_complete = true;
            return Activity::Idle;
        }
        Activity::Motion(run)
    }

    fn homing_fault(&mut self, fault: Fault) -> Activity {
        self.fault = Some(fault);
        self.move_complete = false;
        Activity::Idle
    }

    fn advance_homing(&mut self, mut h: Box<HomingRun>) -> Activity {
        let home = self.switches.home.asserted;
        let limit_ahead = |dir: Direction, sw: &SwitchReadings| match dir {
            Direction::Forward => sw.fwd_limit.asserted,
            Direction::Reverse => sw.rev_limit.asserted,
        };
        let back_off = h.cfg.final_approach_direction.opposite();
        let budget = i64::from(self.config.steps_per_rev);

        if let Some(next) = h.pending {
            if !h.settle.update(self.state.omega, self.n, self.dt) {
                return Activity::Homing(h);
            }
            h.pending = None;
            h.settle = Settle::new(DEFAULT_SETTLE);
            h.leg_start_index = self.drive.state.phase_index;
            h.prev_home = home;
            let (rate, dir, steps) = match next {
                HomingStage::Search(dir) => (h.cfg.search_velocity, dir, None),
                HomingStage::BackOff if home => (h.cfg.approach_velocity, back_off, None),
                HomingStage::BackOff | HomingStage::Approach => {
                    h.stage = HomingStage::Approach;
                    let dir = h.cfg.final_approach_direction;
                    h.pulses = Pulses::jog(h.cfg.approach_velocity, dir, self.n, None);
                    return Activity::Homing(h);
                }
                HomingStage::Offset if h.cfg.offset_steps != 0 => (
                    h.cfg.approach_velocity,
                    Direction::from_sign(h.cfg.offset_steps as f64),
                    Some(h.cfg.offset_steps.unsigned_abs()),
                ),
                HomingStage::Offset => {
                    h.stage = HomingStage::Finish;
                    h.pending = Some(HomingStage::Finish);
                    h.settle = Settle::new(HOMING_SETTLE);
                    return Activity::Homing(h);
                }
                HomingStage::Finish => {
                    self.register_offset = h.cfg.reset_position - self.drive.state.phase_index;
                    self.homed = true;
                    self.move_complete = true;
                    return Activity::Idle;
                }
            };
            h.stage = next;
            h.pulses = Pulses::jog(rate, dir, self.n, steps);
            return Activity::Homing(h);
        }

        let travelled = (self.drive.state.phase_index - h.leg_start_index).abs();
        let settle_into = |h: &mut HomingRun, next: HomingStage| {
            h.pulses = Pulses::None;
            h.pending = Some(next);
        };
        match h.stage {
            HomingStage::Search(dir) => {
                if home {
                    settle_into(&mut h, HomingStage::BackOff);
                } else if limit_ahead(dir, &self.switches) {
                    if h.reversed {
                        return self.homing_fault(Fault::LimitHit);
                    }
                    h.reversed = true;
                    settle_into(&mut h, HomingStage::Search(dir.opposite()));
                } else if travelled > budget {
                    return self.homing_fault(Fault::ConfigError);
                }
            }
            HomingStage::BackOff => {
                if !home {
                    settle_into(&mut h, HomingStage::BackOff);
                } else if limit_ahead(back_off, &self.switches) || travelled > budget {
                    return self.homing_fault(Fault::LimitHit);
                }
            }
            HomingStage::Approach => {
                let edge = match h.cfg.stop_edge {
                    SwitchEdge::Rising => home && !h.prev_home,
                    SwitchEdge::Falling => !home && h.prev_home,
                };
                h.prev_home = home;
                if edge {
                    settle_into(&mut h, HomingStage::Offset);
                } else if limit_ahead(h.cfg.final_approach_direction, &self.switches)
                    || travelled > budget
                {
                    return self.homing_fault(Fault::LimitHit);
                }
            }
            HomingStage::Offset => {
                if h.pulses.finished(self.n, self.dt) {
                    h.settle = Settle::new(HOMING_SETTLE);
                    settle_into(&mut h, HomingStage::Finish);
                }
            }
            HomingStage::Finish => {}
        }
        Activity::Homing(h)
    }

    /// Ticks until the axis is idle, for at most `max_time` simulated seconds.
    pub fn run_until_idle(&mut self, max_time: f64) -> Result<()> {
        let deadline = self.n + (max_time / self.dt).ceil() as u64;
        while !self.is_idle() {
            if self.n >= deadline {
                return Err(Error::Timeout(max_time));
            }
            self.tick()?;
        }
        Ok(())
    }

    /// Ticks for `duration` simulated seconds regardless of activity.
    pub fn run_for(&mut self, duration: f64) -> Result<()> {
        let end = self.n + (duration / self.dt).round() as u64;
        while self.n < end {
            self.tick()?;
        }
        Ok(())
    }

    fn record_while<T>(&mut self, stride: u32, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<(T, Trace)> {
        self.start_recording(stride);
        let out = f(self);
        let trace = self.take_trace();
        out.map(|v| (v, trace))
    }

    /// Runs a point-to-point move to completion (or fault) and returns the
    /// final status with a trace recorded every `stride` samples.
    pub fn execute_straight_move(
        &mut self,
        target: i64,
        mode: MoveMode,
        constraints: &MoveConstraints,
        kind: ProfileKind,
        stride: u32,
    ) -> Result<(AxisStatus, Trace)> {
        self.start_straight_move(target, mode, constraints, kind)?;
        let budget = match &self.activity {
            Activity::Motion(run) => run.profile.total_time() + 10.0,
            _ => 0.0,
        };
        self.record_while(stride, |axis| {
            axis.run_until_idle(budget)?;
            Ok(axis.status())
        })
    }

    /// Runs a reference move to completion (or fault).
    pub fn find_reference(&mut self, h: &HomingConfig) -> Result<AxisStatus> {
        self.start_homing(h)?;
        // Worst case: two full-span searches plus approach and offset.
        let revs = 4.0 * f64::from(self.config.steps_per_rev);
        let budget = revs / h.approach_velocity + h.offset_steps.unsigned_abs() as f64 / h.approach_velocity + 10.0;
        self.run_until_idle(budget)?;
        Ok(self.status())
    }

    pub fn run_exercise_cycle(&mut self, e: &ExerciseSpec, stride: u32) -> Result<(AxisStatus, Trace)> {
        self.start_exercise(e)?;
        let budget = e.cycle_duration * f64::from(e.repetitions) + 10.0;
        self.record_while(stride, |axis| {
            axis.run_until_idle(budget)?;
            Ok(axis.status())
        })
    }
}
