//! Simulation core for a buccal-mass grasper twin.
//!
//! The stack runs in a fixed order every tick:
//!
//! ```text
//! sensors -> Boolean neural controller -> motor frame (wire) -> activation
//!         -> bang-bang pressure plant (10 channels) -> grasper mechanics
//! ```
//!
//! Everything here is pure, deterministic and `no_std` (with `alloc`). File
//! formats, the CLI and the live telemetry service live in the companion
//! `slugbot` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod analysis;
pub mod error;
pub mod frame;
pub mod mechanics;
pub mod neural;
pub mod plant;
pub mod sensors;
pub mod sim;
pub mod stimulus;

mod math;

pub use analysis::{
    kinematic_checkpoints, net_transport, normalize_average, segment_cycles, timing_jitter, CycleBounds, CycleProfile,
    KinematicReport, NormalizeOptions, Segmentation,
};
pub use error::{ConfigError, Error, FrameError};
pub use frame::{decode_motor_frame, encode_motor_frame, FRAME_LEN, FRAME_SYNC};
pub use mechanics::{step_mechanics, FoodObject, GrasperState, MechParams};
pub use neural::{step_neural, DelayParams, MotorFrame, NeuralState, Phase, ProprioFeedback, Unit};
pub use plant::{
    bang_bang_step, integrate_activation, muscle_tension, ActuatorChannel, ChannelRole, PlantParams, CHANNEL_COUNT,
};
pub use sensors::{sense, SensorParams, SensorReadings};
pub use sim::{run_scenario, ScenarioConfig, SimConfig, Simulation, StimulusEvent, Trace, TraceRecord};
pub use stimulus::{classify_behavior, BehaviorMap, BehaviorMode, StimulusField, StimulusState};
