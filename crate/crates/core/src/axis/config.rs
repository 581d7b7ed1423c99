//! Axis, switch, homing and exercise configuration records, and the
//! `[axis.N]` configuration file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::drive::Direction;
use crate::error::{Error, Result};
use crate::profile::MoveConstraints;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisType {
    Stepper,
    Servo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopMode {
    Open,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    ActiveHigh,
    ActiveLow,
}

impl Polarity {
    /// Electrical level for a logical state.
    pub fn apply(self, active: bool) -> bool {
        match self {
            Polarity::ActiveHigh => active,
            Polarity::ActiveLow => !active,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputMode {
    /// A step line plus a direction line.
    StepDirection,
    /// Separate clockwise and counter-clockwise pulse lines.
    CwCcw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchEdge {
    Rising,
    Falling,
}

/// A home or limit switch mounted at a shaft angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchConfig {
    /// Center of the home window, or the trip angle of a limit, in rad.
    pub position: f64,
    /// Width of the home window in rad. Unused for limits.
    #[serde(default)]
    pub width: f64,
    #[serde(default = "default_polarity")]
    pub active_state: Polarity,
    #[serde(default = "default_true")]
    pub enabled: bool,
}

fn default_polarity() -> Polarity {
    Polarity::ActiveHigh
}

fn default_true() -> bool {
    true
}

impl SwitchConfig {
    pub fn disabled() -> Self {
        Self { position: 0.0, width: 0.0, active_state: Polarity::ActiveHigh, enabled: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomingConfig {
    pub initial_search_direction: Direction,
    pub final_approach_direction: Direction,
    pub stop_edge: SwitchEdge,
    /// steps/s
    pub search_velocity: f64,
    /// steps/s
    pub approach_velocity: f64,
    #[serde(default)]
    pub offset_steps: i64,
    #[serde(default)]
    pub reset_position: i64,
}

impl Default for HomingConfig {
    fn default() -> Self {
        Self {
            initial_search_direction: Direction::Reverse,
            final_approach_direction: Direction::Forward,
            stop_edge: SwitchEdge::Rising,
            search_velocity: 50.0,
            approach_velocity: 10.0,
            offset_steps: 0,
            reset_position: 0,
        }
    }
}

impl HomingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.approach_velocity > 0.0 && self.search_velocity > 0.0) {
            return Err(Error::Config("homing velocities must be positive".into()));
        }
        if self.approach_velocity > self.search_velocity {
            return Err(Error::Config(format!(
                "approach velocity {} exceeds search velocity {}",
                self.approach_velocity, self.search_velocity
            )));
        }
        Ok(())
    }
}

/// One rehabilitation exercise: move out, hold, return, repeated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExerciseSpec {
    pub n_steps: u64,
    /// Length of one out-hold-return cycle in s.
    pub cycle_duration: f64,
    pub hold_duration: f64,
    #[serde(default = "default_reps")]
    pub repetitions: u32,
}

fn default_reps() -> u32 {
    1
}

impl ExerciseSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_steps < 1 {
            return Err(Error::Config("exercise needs at least one step".into()));
        }
        if self.repetitions < 1 {
            return Err(Error::Config("exercise needs at least one repetition".into()));
        }
        if !(self.hold_duration >= 0.0 && self.cycle_duration.is_finite()) {
            return Err(Error::Config("exercise durations must be finite and non-negative".into()));
        }
        if self.hold_duration >= self.cycle_duration {
            return Err(Error::Config(format!(
                "hold duration {} s must be shorter than the cycle duration {} s",
                self.hold_duration, self.cycle_duration
            )));
        }
        Ok(())
    }

    /// Time spent travelling in each direction.
    pub fn travel_time(&self) -> f64 {
        (self.cycle_duration - self.hold_duration) / 2.0
    }

    /// Step rate in steps/s for the outbound and return strokes.
    pub fn step_rate(&self) -> f64 {
        self.n_steps as f64 / self.travel_time()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    #[serde(skip)]
    pub axis_id: usize,
    #[serde(default = "default_axis_type")]
    pub axis_type: AxisType,
    #[serde(default = "default_true")]
    pub enabled: bool,
    #[serde(default = "default_steps_per_rev")]
    pub steps_per_rev: u32,
    #[serde(default = "default_microsteps")]
    pub microstep_resolution: u32,
    #[serde(default = "default_loop_mode")]
    pub loop_mode: LoopMode,
    #[serde(default = "default_polarity")]
    pub step_polarity: Polarity,
    #[serde(default = "default_output_mode")]
    pub output_mode: OutputMode,
    pub default_constraints: MoveConstraints,
    #[serde(default = "SwitchConfig::disabled")]
    pub fwd_limit: SwitchConfig,
    #[serde(default = "SwitchConfig::disabled")]
    pub rev_limit: SwitchConfig,
    #[serde(default = "SwitchConfig::disabled")]
    pub home: SwitchConfig,
    /// steps
    #[serde(default = "default_following_error")]
    pub following_error_limit: u32,
    #[serde(default)]
    pub homing: HomingConfig,
    /// Motor parameter file, relative to the configuration file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub motor: Option<PathBuf>,
}

fn default_axis_type() -> AxisType {
    AxisType::Stepper
}
fn default_steps_per_rev() -> u32 {
    200
}
fn default_microsteps() -> u32 {
    1
}
fn default_loop_mode() -> LoopMode {
    LoopMode::Closed
}
fn default_output_mode() -> OutputMode {
    OutputMode::StepDirection
}
fn default_following_error() -> u32 {
    2
}

impl AxisConfig {
    /// A closed-loop stepper axis with switches spread over ±90°.
    pub fn standard(axis_id: usize) -> Self {
        use std::f64::consts::FRAC_PI_2;
        Self {
            axis_id,
            axis_type: AxisType::Stepper,
            enabled: true,
            steps_per_rev: 200,
            microstep_resolution: 1,
            loop_mode: LoopMode::Closed,
            step_polarity: Polarity::ActiveHigh,
            output_mode: OutputMode::StepDirection,
            default_constraints: MoveConstraints {
                v_max: 200.0,
                a_max: 400.0,
                d_max: 400.0,
                j_max: 4000.0,
            },
            fwd_limit: SwitchConfig {
                position: FRAC_PI_2,
                width: 0.0,
                active_state: Polarity::ActiveHigh,
                enabled: true,
            },
            rev_limit: SwitchConfig {
                position: -FRAC_PI_2,
                width: 0.0,
                active_state: Polarity::ActiveHigh,
                enabled: true,
            },
            home: SwitchConfig {
                position: -0.5,
                width: 0.1,
                active_state: Polarity::ActiveHigh,
                enabled: true,
            },
            following_error_limit: 2,
            homing: HomingConfig::default(),
            motor: None,
        }
    }

    /// Structural checks that hold for any stored configuration.
    pub fn validate(&self) -> Result<()> {
        let id = self.axis_id;
        if self.enabled {
            self.default_constraints
                .validate()
                .map_err(|e| Error::Config(format!("axis {id}: {e}")))?;
        }
        if self.home.enabled && !(self.home.width > 0.0) {
            return Err(Error::Config(format!("axis {id}: home switch width must be positive")));
        }
        let home_lo = self.home.position - self.home.width / 2.0;
        let home_hi = self.home.position + self.home.width / 2.0;
        if self.rev_limit.enabled && self.home.enabled && !(self.rev_limit.position < home_lo) {
            return Err(Error::Config(format!(
                "axis {id}: reverse limit must lie below the home window"
            )));
        }
        if self.fwd_limit.enabled && self.home.enabled && !(home_hi < self.fwd_limit.position) {
            return Err(Error::Config(format!(
                "axis {id}: forward limit must lie above the home window"
            )));
        }
        if self.fwd_limit.enabled
            && self.rev_limit.enabled
            && !(self.rev_limit.position < self.fwd_limit.position)
        {
            return Err(Error::Config(format!("axis {id}: limits are inverted")));
        }
        self.homing.validate().map_err(|e| Error::Config(format!("axis {id}: {e}")))?;
        Ok(())
    }

    /// Checks that the axis can be driven by this simulator.
    pub fn check_runnable(&self) -> Result<()> {
        self.validate()?;
        let id = self.axis_id;
        if !self.enabled {
            return Err(Error::Config(format!("axis {id} is disabled")));
        }
        if self.axis_type != AxisType::Stepper {
            return Err(Error::Config(format!("axis {id}: only stepper axes can be simulated")));
        }
        if self.microstep_resolution != 1 {
            return Err(Error::Config(format!(
                "axis {id}: microstep resolution {} is not supported, only full steps",
                self.microstep_resolution
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AxesFile {
    axis: BTreeMap<String, AxisConfig>,
}

/// Parses a configuration file made of `[axis.N]` sections. Axes are
/// returned in index order and must be numbered `0..n` without gaps.
pub fn parse_axes(text: &str) -> Result<Vec<AxisConfig>> {
    let file: AxesFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let mut axes = Vec::with_capacity(file.axis.len());
    for (key, mut cfg) in file.axis {
        let id: usize = key
            .parse()
            .map_err(|_| Error::Parse(format!("axis section `{key}` is not an index")))?;
        cfg.axis_id = id;
        cfg.validate()?;
        axes.push(cfg);
    }
    axes.sort_by_key(|a| a.axis_id);
    if let Some((i, a)) = axes.iter().enumerate().find(|(i, a)| a.axis_id != *i) {
        return Err(Error::Parse(format!("axis indices must be contiguous from 0; found {} at position {i}", a.axis_id)));
    }
    Ok(axes)
}

/// Reads an axes file; relative motor paths are resolved against the
/// file's directory.
pub fn load_axes(path: &Path) -> Result<Vec<AxisConfig>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let mut axes = parse_axes(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    let dir = path.parent().unwrap_or(Path::new("."));
    for axis in &mut axes {
        if let Some(motor) = axis.motor.as_mut() {
            if motor.is_relative() {
                *motor = dir.join(&*motor);
            }
        }
    }
    Ok(axes)
}
