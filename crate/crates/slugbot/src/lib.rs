//! Host-side companion to `slugbot-core`: configuration files, CSV traces,
//! profile analysis, golden values and the live telemetry service.

pub mod config;
pub mod error;
pub mod harness;
pub mod telemetry;
pub mod trace_csv;

pub use error::{AppError, Result};
