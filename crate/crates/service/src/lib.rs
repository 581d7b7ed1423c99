//! Hosts simulated stepper axes behind a WebSocket protocol.
//!
//! Each axis runs on its own thread in scaled real time and publishes a
//! [`protocol::TelemetryFrame`] every 20 ms of simulated time. Clients
//! connect to `/ws/v1`, send [`protocol`] commands and receive replies plus
//! the telemetry of every axis. `/healthz` reports the axis count and the
//! service uptime.

pub mod protocol;
mod server;
mod worker;

pub use server::{load_axes_with_motors, serve, Service};
pub use worker::FRAME_PERIOD;
