//! Motion controller for simulated stepper axes.

pub mod config;
mod controller;
pub mod switches;

pub use config::{
    load_axes, parse_axes, AxisConfig, AxisType, ExerciseSpec, HomingConfig, LoopMode, OutputMode,
    Polarity, SwitchConfig, SwitchEdge,
};
pub use controller::{
    Axis, AxisStatus, Fault, MoveMode, ProfileKind, SettleCriterion, StopKind, DEFAULT_SETTLE,
    HOMING_SETTLE,
};
pub use switches::{poll_switches, SwitchReadings, SwitchSignal};
