//! Scenario files: one motor, one axis, one action, one simulation window.
//!
//! ```toml
//! name = "fig3_20steps"
//! motor = "../n33hrlg.params"   # relative to the scenario file
//! axes = "../axes.toml"        # optional; omitted means a standard axis
//! axis_id = 0
//!
//! [action]
//! kind = "raw_schedule"        # or straight_move, exercise, homing
//! clocks = [{ rate = 10.0, n_steps = 20, start = 0.0 }]
//!
//! [sim]
//! dt = 1e-5
//! duration = 3.5
//! record_stride = 100
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use stepsim_core::axis::{
    load_axes, Axis, AxisConfig, ExerciseSpec, HomingConfig, MoveMode, ProfileKind,
};
use stepsim_core::drive::{step_clock, Direction, DriveConfig, DriveStage, StepSchedule};
use stepsim_core::motor::MotorDefinition;
use stepsim_core::profile::MoveConstraints;
use stepsim_core::sim::{aligned_state, simulate, SimConfig, Trace, DEFAULT_DT};
use stepsim_core::Error;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepClock {
    /// steps/s
    pub rate: f64,
    pub n_steps: u64,
    /// s
    #[serde(default)]
    pub start: f64,
    #[serde(default = "forward")]
    pub direction: Direction,
}

fn forward() -> Direction {
    Direction::Forward
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Action {
    StraightMove {
        target: i64,
        mode: MoveMode,
        #[serde(default = "trapezoid")]
        profile_kind: ProfileKind,
        /// Falls back to the axis' default constraints.
        #[serde(default)]
        constraints: Option<MoveConstraints>,
    },
    Exercise(ExerciseSpec),
    Homing {
        /// Shaft angle in rad the rotor rests at before homing.
        #[serde(default)]
        start_angle: f64,
        /// Falls back to the axis' homing settings.
        #[serde(default)]
        homing: Option<HomingConfig>,
    },
    /// Step clocks fed straight to the drive, without an axis controller.
    RawSchedule { clocks: Vec<StepClock> },
}

fn trapezoid() -> ProfileKind {
    ProfileKind::Trapezoid
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimSection {
    #[serde(default = "default_dt")]
    dt: f64,
    duration: f64,
    #[serde(default = "default_stride")]
    record_stride: u32,
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn default_stride() -> u32 {
    10
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    motor: PathBuf,
    #[serde(default)]
    axes: Option<PathBuf>,
    #[serde(default)]
    axis_id: usize,
    #[serde(default)]
    output: Option<PathBuf>,
    action: Action,
    sim: SimSection,
}

/// A scenario with every referenced file loaded.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub motor: MotorDefinition,
    pub axis: AxisConfig,
    pub action: Action,
    pub sim: SimConfig,
    /// Trace destination named by the file, if any.
    pub output: Option<PathBuf>,
}

/// Why a scenario did not complete cleanly.
#[derive(Debug)]
pub enum RunError {
    /// The scenario or a file it names could not be read or is invalid.
    Invalid(String),
    /// The simulation ran but ended in a fault.
    Fault { outcome: Box<Outcome>, reason: String },
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Invalid(msg) => f.write_str(msg),
            RunError::Fault { reason, .. } => f.write_str(reason),
        }
    }
}

impl std::error::Error for RunError {}

fn invalid(e: impl fmt::Display) -> RunError {
    RunError::Invalid(e.to_string())
}

impl Scenario {
    pub fn parse(text: &str, base: &Path) -> Result<Self, RunError> {
        let file: ScenarioFile = toml::from_str(text).map_err(invalid)?;
        let motor = MotorDefinition::load(&base.join(&file.motor)).map_err(invalid)?;
        let axis = match &file.axes {
            Some(rel) => {
                let path = base.join(rel);
                let axes = load_axes(&path).map_err(invalid)?;
                axes.into_iter().nth(file.axis_id).ok_or_else(|| {
                    RunError::Invalid(format!("{}: no axis {}", path.display(), file.axis_id))
                })?
            }
            None => AxisConfig::standard(file.axis_id),
        };
        let sim = SimConfig {
            dt: file.sim.dt,
            duration: file.sim.duration,
            record_stride: file.sim.record_stride,
        };
        sim.validate().map_err(invalid)?;
        let scenario = Self { name: file.name, motor, axis, action: file.action, sim, output: file.output };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Invalid(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| match e {
            RunError::Invalid(msg) => RunError::Invalid(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Checks the action's own preconditions without simulating.
    fn validate(&self) -> Result<(), RunError> {
        match &self.action {
            Action::StraightMove { constraints: Some(c), .. } => c.validate().map_err(invalid),
            Action::StraightMove { .. } => Ok(()),
            Action::Exercise(e) => e.validate().map_err(invalid),
            Action::Homing { homing, .. } => homing.unwrap_or(self.axis.homing).validate().map_err(invalid),
            Action::RawSchedule { .. } => self.schedule().map(|_| ()),
        }
    }

    fn schedule(&self) -> Result<StepSchedule, RunError> {
        let Action::RawSchedule { clocks } = &self.action else {
            return Ok(StepSchedule::default());
        };
        let ceiling = self.motor.spec.max_step_rate();
        let mut schedule = StepSchedule::default();
        for c in clocks {
            schedule.append(&step_clock(c.rate, c.n_steps, c.start, c.direction, ceiling).map_err(invalid)?);
        }
        if schedule.pulses.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(RunError::Invalid("step clocks overlap or are out of order".into()));
        }
        Ok(schedule)
    }

    /// Runs the action over the simulation window.
    pub fn run(&self) -> Result<Outcome, RunError> {
        match &self.action {
            Action::RawSchedule { .. } => self.run_raw(),
            _ => self.run_axis(),
        }
    }

    fn run_raw(&self) -> Result<Outcome, RunError> {
        let schedule = self.schedule()?;
        let drive = DriveStage::new(DriveConfig::for_motor(&self.motor.spec));
        let initial = aligned_state(&self.motor.params, &drive);
        let trace = match simulate(&self.motor.params, drive, &schedule, initial, &self.sim) {
            Ok(trace) => trace,
            Err(e @ Error::IntegrationBlowup { .. }) => {
                let outcome = Outcome { theta: 0.0, steps_issued: 0, faults: vec![e.to_string()], trace: Trace::default() };
                return Err(RunError::Fault { outcome: Box::new(outcome), reason: e.to_string() });
            }
            Err(e) => return Err(invalid(e)),
        };
        let end = trace.last().map_or(initial.theta, |f| f.state.theta);
        Ok(Outcome { theta: end - initial.theta, steps_issued: schedule.len() as u64, faults: Vec::new(), trace })
    }

    fn run_axis(&self) -> Result<Outcome, RunError> {
        let drive = DriveConfig::for_motor(&self.motor.spec);
        let mut axis = Axis::with_dt(self.axis.clone(), self.motor.clone(), drive, self.sim.dt).map_err(invalid)?;
        if let Action::Homing { start_angle, .. } = &self.action {
            axis.place_at(*start_angle);
        }
        let start = axis.shaft_angle();
        axis.start_recording(self.sim.record_stride);
        let started = match &self.action {
            Action::StraightMove { target, mode, profile_kind, constraints } => {
                let c = constraints.unwrap_or(self.axis.default_constraints);
                axis.start_straight_move(*target, *mode, &c, *profile_kind)
            }
            Action::Exercise(e) => axis.start_exercise(e),
            Action::Homing { homing, .. } => axis.start_homing(&homing.unwrap_or(self.axis.homing)),
            Action::RawSchedule { .. } => unreachable!("handled by run_raw"),
        };
        started.map_err(invalid)?;

        let mut faults = Vec::new();
        let end = self.sim.steps();
        let mut n = 0;
        while n < end {
            if let Err(e) = axis.tick() {
                faults.push(e.to_string());
                break;
            }
            n += 1;
        }
        if !axis.is_idle() && faults.is_empty() {
            faults.push(format!("still running after {} s", self.sim.duration));
        }
        if let Some(fault) = axis.status().fault {
            faults.insert(0, fault_name(fault));
        }
        let outcome = Outcome {
            theta: axis.shaft_angle() - start,
            steps_issued: axis.steps_issued(),
            faults,
            trace: axis.take_trace(),
        };
        if outcome.faults.is_empty() {
            Ok(outcome)
        } else {
            let reason = outcome.faults.join("; ");
            Err(RunError::Fault { outcome: Box::new(outcome), reason })
        }
    }
}

fn fault_name<T: serde::Serialize>(v: T) -> String {
    toml::Value::try_from(v).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
}

/// Result of a scenario run.
#[derive(Debug, Clone)]
pub struct Outcome {
    /// Final rotor angle relative to the start, rad.
    pub theta: f64,
    pub steps_issued: u64,
    pub faults: Vec<String>,
    pub trace: Trace,
}

impl Outcome {
    /// One-line summary: angle in rad and degrees, steps, faults.
    pub fn summary(&self, name: &str) -> String {
        let faults = if self.faults.is_empty() { "none".to_owned() } else { self.faults.join("; ") };
        format!(
            "{name}: theta = {:.6} rad ({:.3} deg), steps issued = {}, faults = {faults}",
            self.theta,
            self.theta.to_degrees(),
            self.steps_issued
        )
    }
}
