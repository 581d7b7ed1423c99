use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};
use serde_json::{json, Value};
use stepsim_core::axis::{load_axes, AxisConfig};
use stepsim_core::motor::MotorDefinition;
use stepsim_core::{Error, Result};
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc, oneshot};

use crate::protocol::{parse_command, Command, ErrorBody, ErrorCode, Reply, ServerMessage, Verb};
use crate::worker::{Request, Worker};

/// Running axes plus the shared telemetry fan-out.
pub struct Service {
    axes: Vec<mpsc::UnboundedSender<Request>>,
    telemetry: broadcast::Sender<Arc<str>>,
    started: Instant,
}

/// Loads an axes file and each axis' motor. Axes without a motor file use
/// the built-in datasheet motor.
pub fn load_axes_with_motors(path: &Path) -> Result<Vec<(AxisConfig, MotorDefinition)>> {
    load_axes(path)?
        .into_iter()
        .map(|cfg| {
            let motor = match &cfg.motor {
                Some(p) => MotorDefinition::load(p)?,
                None => MotorDefinition::n33hrlg(),
            };
            Ok((cfg, motor))
        })
        .collect()
}

impl Service {
    /// Starts one simulation thread per axis. A `time_factor` of 0 runs
    /// each command to completion as fast as possible and leaves idle axes
    /// paused; otherwise simulated time advances at `time_factor` × wall
    /// time.
    pub fn start(axes: Vec<(AxisConfig, MotorDefinition)>, time_factor: f64) -> Result<Arc<Self>> {
        if !(time_factor >= 0.0 && time_factor.is_finite()) {
            return Err(Error::Config(format!("time factor must be finite and non-negative, got {time_factor}")));
        }
        if axes.is_empty() {
            return Err(Error::Config("no axes configured".into()));
        }
        let (telemetry, _) = broadcast::channel(4096);
        let axes = axes
            .into_iter()
            .map(|(cfg, motor)| Worker::spawn(cfg, motor, time_factor, telemetry.clone()).0)
            .collect();
        Ok(Arc::new(Self { axes, telemetry, started: Instant::now() }))
    }

    pub fn axis_count(&self) -> usize {
        self.axes.len()
    }

    /// Receives every telemetry frame and asynchronous event as JSON text.
    pub fn subscribe(&self) -> broadcast::Receiver<Arc<str>> {
        self.telemetry.subscribe()
    }

    /// Executes one decoded command and produces its reply.
    pub async fn execute(&self, cmd: Command) -> Reply {
        if cmd.verb == Verb::EstopAll {
            return self.estop_all(cmd.id).await;
        }
        let axis_id = cmd.axis_id.expect("axis commands carry an axis id");
        match self.send(axis_id, cmd.id.clone(), cmd.verb).await {
            Some(reply) => reply,
            None => Reply::error(cmd.id, Some(axis_id), ErrorBody::new(ErrorCode::Simulation, "axis thread has stopped")),
        }
    }

    async fn send(&self, axis_id: usize, id: Value, verb: Verb) -> Option<Reply> {
        let (reply, rx) = oneshot::channel();
        self.axes[axis_id].send(Request { id, verb, reply }).ok()?;
        rx.await.ok()
    }

    /// Kill-stops every axis; replies once all of them have stopped.
    async fn estop_all(&self, id: Value) -> Reply {
        let replies = futures::future::join_all(
            (0..self.axes.len()).map(|a| self.send(a, id.clone(), Verb::EstopAll)),
        )
        .await;
        let statuses = replies.into_iter().flatten().filter_map(|r| r.status).collect();
        Reply { axes: Some(statuses), ..Reply::ok(id, None) }
    }

    pub fn router(self: &Arc<Self>) -> Router {
        Router::new()
            .route("/ws/v1", get(ws_handler))
            .route("/healthz", get(health))
            .with_state(Arc::clone(self))
    }
}

/// Serves the service on an already bound listener until the task is
/// dropped.
pub async fn serve(listener: TcpListener, service: Arc<Service>) -> std::io::Result<()> {
    axum::serve(listener, service.router()).await
}

async fn health(State(svc): State<Arc<Service>>) -> Json<Value> {
    Json(json!({
        "status": "ok",
        "axes": svc.axis_count(),
        "uptime_s": svc.started.elapsed().as_secs_f64(),
    }))
}

async fn ws_handler(ws: WebSocketUpgrade, State(svc): State<Arc<Service>>) -> Response {
    ws.on_upgrade(move |socket| session(socket, svc))
}

async fn session(socket: WebSocket, svc: Arc<Service>) {
    let (mut sink, mut stream) = socket.split();
    let (out_tx, mut out_rx) = mpsc::unbounded_channel::<String>();
    let mut telemetry = svc.subscribe();

    let writer = tokio::spawn(async move {
        loop {
            let text: String = tokio::select! {
                msg = out_rx.recv() => match msg {
                    Some(m) => m,
                    None => break,
                },
                frame = telemetry.recv() => match frame {
                    Ok(f) => f.to_string(),
                    Err(broadcast::error::RecvError::Lagged(_)) => continue,
                    Err(broadcast::error::RecvError::Closed) => break,
                },
            };
            if sink.send(Message::Text(text.into())).await.is_err() {
                break;
            }
        }
    });

    while let Some(Ok(msg)) = stream.next().await {
        let text = match msg {
            Message::Text(t) => t.to_string(),
            Message::Binary(_) => {
                let reply = Reply::error(Value::Null, None, ErrorBody::new(ErrorCode::Malformed, "binary frames are not accepted"));
                let _ = out_tx.send(ServerMessage::Reply(reply).to_json());
                continue;
            }
            Message::Close(_) => break,
            _ => continue,
        };
        match parse_command(&text, svc.axis_count()) {
            Err((id, error)) => {
                let axis_id = serde_json::from_str::<Value>(&text)
                    .ok()
                    .and_then(|v| v.get("axis_id").and_then(Value::as_u64))
                    .map(|a| a as usize);
                let _ = out_tx.send(ServerMessage::Reply(Reply::error(id, axis_id, error)).to_json());
            }
            Ok(cmd) => {
                let svc = Arc::clone(&svc);
                let out = out_tx.clone();
                tokio::spawn(async move {
                    let reply = svc.execute(cmd).await;
                    let _ = out.send(ServerMessage::Reply(reply).to_json());
                });
            }
        }
    }
    drop(out_tx);
    writer.abort();
}
