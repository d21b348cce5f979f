//! Live telemetry: newline-delimited JSON over TCP.

pub mod protocol;
pub mod service;

pub use protocol::{parse_command, Command, CommandKind, ServerMessage, StateFrame};
pub use service::{serve, ServeOptions, ServerHandle, SessionLog};
