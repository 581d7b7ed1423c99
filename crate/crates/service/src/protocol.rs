//! Wire messages. Every message is one UTF-8 JSON object per WebSocket
//! text frame. See `PROTOCOL.md` at the crate root for the full schema.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use stepsim_core::axis::{AxisConfig, AxisStatus, ExerciseSpec, Fault, HomingConfig, MoveMode, ProfileKind, StopKind};
use stepsim_core::profile::MoveConstraints;
use stepsim_core::Error;

/// Parameters of `straight_move`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MoveParams {
    /// steps
    pub target: i64,
    pub mode: MoveMode,
    #[serde(default = "default_profile")]
    pub profile_kind: ProfileKind,
    /// Falls back to the axis' default constraints.
    #[serde(default)]
    pub constraints: Option<MoveConstraints>,
}

fn default_profile() -> ProfileKind {
    ProfileKind::Trapezoid
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct StopParams {
    #[serde(default = "default_stop")]
    pub kind: StopKind,
}

fn default_stop() -> StopKind {
    StopKind::Decelerating
}

/// A decoded command.
#[derive(Debug, Clone, PartialEq)]
pub enum Verb {
    /// `None` only clears an active fault.
    Configure(Option<Box<AxisConfig>>),
    StraightMove(MoveParams),
    Exercise(ExerciseSpec),
    /// `None` uses the axis' stored homing settings.
    Home(Option<HomingConfig>),
    Stop(StopKind),
    EstopAll,
}

impl Verb {
    pub const NAMES: [&'static str; 6] = ["configure", "straight_move", "exercise", "home", "stop", "estop_all"];

    /// Whether the verb joins the axis' serialized motion queue.
    pub fn is_queued(&self) -> bool {
        !matches!(self, Verb::Stop(_) | Verb::EstopAll)
    }
}

#[derive(Debug, Clone)]
pub struct Command {
    pub id: Value,
    /// Absent for `estop_all`.
    pub axis_id: Option<usize>,
    pub verb: Verb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    /// Not a JSON object, or `id`/`verb` missing.
    Malformed,
    UnknownVerb,
    BadAxis,
    InvalidParams,
    /// Refused in the axis' present state (fault active, disabled, ...).
    Rejected,
    /// A kinematic limit would be exceeded.
    Constraint,
    ConfigError,
    /// A queued command was dropped by a stop.
    Cancelled,
    Simulation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: ErrorCode,
    pub message: String,
}

impl ErrorBody {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<Error> for ErrorBody {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Rejected(_) => ErrorCode::Rejected,
            Error::Constraint(_) => ErrorCode::Constraint,
            Error::Config(_) => ErrorCode::ConfigError,
            Error::Domain(_) | Error::Schedule(_) | Error::Parse(_) => ErrorCode::InvalidParams,
            Error::IntegrationBlowup { .. } | Error::Timeout(_) => ErrorCode::Simulation,
        };
        Self::new(code, e.to_string())
    }
}

/// Reply to exactly one command, carrying its `id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reply {
    pub id: Value,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis_id: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<AxisStatus>,
    /// Position in the axis queue when the command was queued behind
    /// running motion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub queued: Option<usize>,
    /// `estop_all`: the status of every axis after the stop.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axes: Option<Vec<AxisStatus>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
}

impl Reply {
    pub fn ok(id: Value, axis_id: Option<usize>) -> Self {
        Self { id, ok: true, axis_id, status: None, queued: None, axes: None, error: None }
    }

    pub fn error(id: Value, axis_id: Option<usize>, error: ErrorBody) -> Self {
        Self { ok: false, error: Some(error), ..Self::ok(id, axis_id) }
    }
}

/// Snapshot of one axis, sent at 50 Hz of simulated time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryFrame {
    /// s
    pub t: f64,
    pub axis_id: usize,
    pub commanded_position: i64,
    pub actual_position: i64,
    /// steps/s
    pub velocity: f64,
    pub move_complete: bool,
    pub fault: Option<Fault>,
    pub homed: bool,
    /// Commands waiting behind the running one.
    pub queue_depth: usize,
    /// Id of the motion command the status refers to.
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub command_id: Value,
}

impl TelemetryFrame {
    pub fn new(t: f64, axis_id: usize, s: &AxisStatus, queue_depth: usize, command_id: Value) -> Self {
        Self {
            t,
            axis_id,
            commanded_position: s.commanded_position,
            actual_position: s.actual_position,
            velocity: s.velocity,
            move_complete: s.move_complete,
            fault: s.fault,
            homed: s.homed,
            queue_depth,
            command_id,
        }
    }
}

/// Everything the service sends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Reply(Reply),
    Telemetry(TelemetryFrame),
    /// A queued command could not be started, or was cancelled.
    CommandFailed { id: Value, axis_id: usize, error: ErrorBody },
}

impl ServerMessage {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages always serialize")
    }
}

fn params<T: serde::de::DeserializeOwned>(verb: &str, v: Value) -> Result<T, ErrorBody> {
    serde_json::from_value(v).map_err(|e| ErrorBody::new(ErrorCode::InvalidParams, format!("{verb}: {e}")))
}

fn optional<T: serde::de::DeserializeOwned>(verb: &str, v: Value) -> Result<Option<T>, ErrorBody> {
    match &v {
        Value::Null => Ok(None),
        Value::Object(m) if m.is_empty() => Ok(None),
        _ => params(verb, v).map(Some),
    }
}

/// Decodes one client message. Errors carry whatever `id` could be read.
pub fn parse_command(text: &str, n_axes: usize) -> Result<Command, (Value, ErrorBody)> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| (Value::Null, ErrorBody::new(ErrorCode::Malformed, format!("not JSON: {e}"))))?;
    let Value::Object(mut obj) = value else {
        return Err((Value::Null, ErrorBody::new(ErrorCode::Malformed, "message must be a JSON object")));
    };
    let Some(id) = obj.remove("id") else {
        return Err((Value::Null, ErrorBody::new(ErrorCode::Malformed, "missing `id`")));
    };
    let fail = |code, msg: String| Err((id.clone(), ErrorBody::new(code, msg)));
    let verb = match obj.remove("verb") {
        Some(Value::String(s)) => s,
        Some(_) => return fail(ErrorCode::Malformed, "`verb` must be a string".into()),
        None => return fail(ErrorCode::Malformed, "missing `verb`".into()),
    };
    let raw_params = obj.remove("params").unwrap_or(Value::Null);
    let raw_axis = obj.remove("axis_id");
    if let Some(extra) = obj.keys().next() {
        return fail(ErrorCode::Malformed, format!("unknown field `{extra}`"));
    }
    if !Verb::NAMES.contains(&verb.as_str()) {
        return fail(ErrorCode::UnknownVerb, format!("unknown verb `{verb}`; expected one of {:?}", Verb::NAMES));
    }

    let axis_id = if verb == "estop_all" {
        None
    } else {
        match raw_axis.as_ref().and_then(Value::as_u64) {
            Some(a) if (a as usize) < n_axes => Some(a as usize),
            Some(a) => return fail(ErrorCode::BadAxis, format!("axis {a} does not exist; {n_axes} axes configured")),
            None => return fail(ErrorCode::BadAxis, format!("`{verb}` needs a non-negative integer `axis_id`")),
        }
    };

    let decoded = match verb.as_str() {
        "configure" => optional::<AxisConfig>(&verb, raw_params).map(|c| Verb::Configure(c.map(Box::new))),
        "straight_move" => params(&verb, raw_params).map(Verb::StraightMove),
        "exercise" => params(&verb, raw_params).map(Verb::Exercise),
        "home" => optional(&verb, raw_params).map(Verb::Home),
        "stop" => optional::<StopParams>(&verb, raw_params)
            .map(|p| Verb::Stop(p.map_or(StopKind::Decelerating, |p| p.kind))),
        _ => Ok(Verb::EstopAll),
    };
    match decoded {
        Ok(verb) => Ok(Command { id, axis_id, verb }),
        Err(e) => Err((id, e)),
    }
}
