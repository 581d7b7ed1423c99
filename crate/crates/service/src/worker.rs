//! One thread per axis. The thread owns the simulation and applies
//! commands at telemetry-frame boundaries.

use std::collections::VecDeque;
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use serde_json::Value;
use stepsim_core::axis::{Axis, AxisConfig, AxisStatus, StopKind};
use stepsim_core::drive::DriveConfig;
use stepsim_core::motor::MotorDefinition;
use stepsim_core::sim::DEFAULT_DT;
use tokio::sync::{broadcast, mpsc, oneshot};

use crate::protocol::{ErrorBody, ErrorCode, Reply, ServerMessage, TelemetryFrame, Verb};

/// Telemetry period in simulated seconds.
pub const FRAME_PERIOD: f64 = 0.02;

pub struct Request {
    pub id: Value,
    pub verb: Verb,
    pub reply: oneshot::Sender<Reply>,
}

struct Queued {
    id: Value,
    verb: Verb,
}

/// An axis that failed activation keeps its configuration so a later
/// `configure` can bring it up.
enum Slot {
    Live(Box<Axis>),
    Inactive { config: AxisConfig, reason: String },
}

pub struct Worker {
    axis_id: usize,
    slot: Slot,
    motor: MotorDefinition,
    queue: VecDeque<Queued>,
    command_id: Value,
    rx: mpsc::UnboundedReceiver<Request>,
    telemetry: broadcast::Sender<Arc<str>>,
    time_factor: f64,
    ticks_per_frame: u64,
}

impl Worker {
    pub fn spawn(
        config: AxisConfig,
        motor: MotorDefinition,
        time_factor: f64,
        telemetry: broadcast::Sender<Arc<str>>,
    ) -> (mpsc::UnboundedSender<Request>, JoinHandle<()>) {
        let (tx, rx) = mpsc::unbounded_channel();
        let axis_id = config.axis_id;
        let slot = activate(config, &motor);
        let worker = Worker {
            axis_id,
            slot,
            motor,
            queue: VecDeque::new(),
            command_id: Value::Null,
            rx,
            telemetry,
            time_factor,
            ticks_per_frame: (FRAME_PERIOD / DEFAULT_DT).round() as u64,
        };
        let handle = std::thread::Builder::new()
            .name(format!("axis-{axis_id}"))
            .spawn(move || worker.run())
            .expect("spawning an axis thread");
        (tx, handle)
    }

    fn idle(&self) -> bool {
        match &self.slot {
            Slot::Live(axis) => axis.is_idle(),
            Slot::Inactive { .. } => true,
        }
    }

    fn status(&self) -> Option<AxisStatus> {
        match &self.slot {
            Slot::Live(axis) => Some(axis.status()),
            Slot::Inactive { .. } => None,
        }
    }

    fn run(mut self) {
        let wall0 = Instant::now();
        let sim0 = self.sim_time();
        loop {
            let paused = self.time_factor == 0.0;
            let mut changed = false;
            if paused && self.idle() && self.queue.is_empty() {
                match self.rx.blocking_recv() {
                    Some(r) => changed |= self.handle(r),
                    None => return,
                }
            }
            loop {
                match self.rx.try_recv() {
                    Ok(r) => changed |= self.handle(r),
                    Err(mpsc::error::TryRecvError::Empty) => break,
                    Err(mpsc::error::TryRecvError::Disconnected) => return,
                }
            }
            self.start_queued();
            // A paused axis only moves on when a command took effect.
            if paused && !changed && self.idle() && self.queue.is_empty() {
                continue;
            }
            self.advance_frame();
            if self.time_factor > 0.0 {
                let target = wall0 + Duration::from_secs_f64((self.sim_time() - sim0) / self.time_factor);
                let now = Instant::now();
                if target > now {
                    std::thread::sleep(target - now);
                }
            }
        }
    }

    fn sim_time(&self) -> f64 {
        match &self.slot {
            Slot::Live(axis) => axis.time(),
            Slot::Inactive { .. } => 0.0,
        }
    }

    /// Applies or queues a request; returns whether it was accepted.
    fn handle(&mut self, r: Request) -> bool {
        let reply = match r.verb {
            Verb::Stop(_) | Verb::EstopAll => {
                let kind = match r.verb {
                    Verb::Stop(kind) => kind,
                    _ => StopKind::Kill,
                };
                self.cancel_queue();
                let status = match &mut self.slot {
                    Slot::Live(axis) => Some(axis.stop(kind)),
                    Slot::Inactive { .. } => None,
                };
                Reply { status, ..Reply::ok(r.id, Some(self.axis_id)) }
            }
            verb if self.idle() && self.queue.is_empty() => match self.apply(&r.id, &verb) {
                Ok(status) => Reply { status, ..Reply::ok(r.id, Some(self.axis_id)) },
                Err(e) => Reply::error(r.id, Some(self.axis_id), e),
            },
            verb => {
                self.queue.push_back(Queued { id: r.id.clone(), verb });
                Reply { queued: Some(self.queue.len()), ..Reply::ok(r.id, Some(self.axis_id)) }
            }
        };
        let accepted = reply.ok;
        // The session may have gone away; the command still took effect.
        let _ = r.reply.send(reply);
        accepted
    }

    fn cancel_queue(&mut self) {
        for q in std::mem::take(&mut self.queue) {
            self.publish(ServerMessage::CommandFailed {
                id: q.id,
                axis_id: self.axis_id,
                error: ErrorBody::new(ErrorCode::Cancelled, "dropped by a stop"),
            });
        }
    }

    fn start_queued(&mut self) {
        while self.idle() {
            let Some(q) = self.queue.pop_front() else { return };
            if let Err(error) = self.apply(&q.id, &q.verb) {
                self.publish(ServerMessage::CommandFailed { id: q.id, axis_id: self.axis_id, error });
            }
        }
    }

    /// Starts or applies a queued verb on an idle axis.
    fn apply(&mut self, id: &Value, verb: &Verb) -> Result<Option<AxisStatus>, ErrorBody> {
        if let Verb::Configure(new) = verb {
            return self.configure(new.as_deref()).map(|_| self.status());
        }
        let axis = match &mut self.slot {
            Slot::Live(axis) => axis,
            Slot::Inactive { reason, .. } => {
                return Err(ErrorBody::new(ErrorCode::ConfigError, reason.clone()));
            }
        };
        let started = match verb {
            Verb::StraightMove(m) => {
                let c = m.constraints.unwrap_or(axis.config().default_constraints);
                axis.start_straight_move(m.target, m.mode, &c, m.profile_kind)
            }
            Verb::Exercise(e) => axis.start_exercise(e),
            Verb::Home(h) => {
                let h = h.unwrap_or(axis.config().homing);
                axis.start_homing(&h)
            }
            Verb::Configure(_) | Verb::Stop(_) | Verb::EstopAll => unreachable!("not queued"),
        };
        started.map_err(ErrorBody::from)?;
        self.command_id = id.clone();
        Ok(Some(axis.status()))
    }

    fn configure(&mut self, new: Option<&AxisConfig>) -> Result<(), ErrorBody> {
        let mut config = match (new, &self.slot) {
            (Some(c), _) => c.clone(),
            (None, Slot::Live(axis)) => axis.config().clone(),
            (None, Slot::Inactive { config, .. }) => config.clone(),
        };
        config.axis_id = self.axis_id;
        match &mut self.slot {
            Slot::Live(axis) => {
                // Motor files are chosen at startup, not over the wire.
                config.motor = axis.config().motor.clone();
                axis.reconfigure(config).map_err(ErrorBody::from)
            }
            Slot::Inactive { .. } => {
                self.slot = activate(config, &self.motor);
                match &self.slot {
                    Slot::Live(_) => Ok(()),
                    Slot::Inactive { reason, .. } => Err(ErrorBody::new(ErrorCode::ConfigError, reason.clone())),
                }
            }
        }
    }

    fn advance_frame(&mut self) {
        let Slot::Live(axis) = &mut self.slot else {
            if self.time_factor > 0.0 {
                std::thread::sleep(Duration::from_secs_f64(FRAME_PERIOD / self.time_factor));
            }
            return;
        };
        for _ in 0..self.ticks_per_frame {
            if let Err(e) = axis.tick() {
                axis.stop(StopKind::Kill);
                let error = ErrorBody::from(e);
                let id = std::mem::take(&mut self.command_id);
                self.publish(ServerMessage::CommandFailed { id, axis_id: self.axis_id, error });
                break;
            }
        }
        let Slot::Live(axis) = &self.slot else { return };
        let frame = TelemetryFrame::new(
            axis.time(),
            self.axis_id,
            &axis.status(),
            self.queue.len(),
            self.command_id.clone(),
        );
        self.publish(ServerMessage::Telemetry(frame));
    }

    fn publish(&self, msg: ServerMessage) {
        // No subscribers is fine.
        let _ = self.telemetry.send(Arc::from(msg.to_json()));
    }
}

fn activate(config: AxisConfig, motor: &MotorDefinition) -> Slot {
    let drive = DriveConfig::for_motor(&motor.spec);
    match Axis::new(config.clone(), motor.clone(), drive) {
        Ok(axis) => Slot::Live(Box::new(axis)),
        Err(e) => Slot::Inactive { config, reason: e.to_string() },
    }
}
