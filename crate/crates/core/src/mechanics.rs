//! Overdamped odontophore mechanics: translation, lagged rotation, grasper
//! closure and food transport.
//!
//! Translation obeys
//!
//! ```text
//! dx/dt = c * ( g_i2 * T_i2 * (1 - x) - g_i3 * sum_j T_j * bump(u_j) - k_hinge * x )
//! u_j   = (x_j - (x - body_offset)) / ring_sigma
//! bump  = u * exp((1 - u^2) / 2)        (odd, peak 1 at |u| = 1)
//! ```
//!
//! `x` is the radula (anterior) position; the ring squeeze acts on the body
//! centre `body_offset` behind it. A ring anterior of the centre squeezes the
//! odontophore backwards, a ring behind it pushes forwards, so the same I3
//! rings retract or protract depending on where the odontophore sits.
//! Ring terms are frozen at the start of a step and the remaining linear ODE
//! is integrated exactly.

use alloc::format;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{check_dt, ConfigError, Error};
use crate::math::{clamp01, exp};
use crate::plant::{muscle_tension, ActuatorChannel, PlantParams, CHANNEL_COUNT, RING_COUNT};
use crate::sensors::SensorParams;

pub const MAX_ROTATION_DEG: f64 = 90.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrasperState {
    /// 0 = fully retracted (posterior), 1 = peak protraction (anterior).
    pub x: f64,
    /// Radula rotation, degrees in [0, 90].
    pub theta_deg: f64,
    pub closure: f64,
    pub aperture: f64,
}

impl Default for GrasperState {
    fn default() -> Self {
        Self { x: 0.0, theta_deg: 0.0, closure: 0.0, aperture: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FoodObject {
    /// mm along the tract axis, positive inward.
    pub position_mm: f64,
    pub grasped: bool,
    pub ingested_mm: f64,
    /// An external holder stops grasped food from being carried back out.
    pub externally_held: bool,
}

impl FoodObject {
    pub fn new(externally_held: bool) -> Self {
        Self { externally_held, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct MechParams {
    /// Translational mobility, 1/s.
    pub damping: f64,
    pub k_hinge: f64,
    pub g_i2: f64,
    pub g_i3: f64,
    pub tau_theta_ms: f64,
    pub stroke_mm: f64,
    pub close_threshold: f64,
    /// Ring positions on the x axis, ring 1 (anterior) first.
    pub ring_positions: [f64; RING_COUNT],
    pub ring_sigma: f64,
    /// Distance from the radula back to the body centre the rings act on.
    pub body_offset: f64,
    pub sensors: SensorParams,
}

impl Default for MechParams {
    fn default() -> Self {
        Self {
            damping: 0.5,
            k_hinge: 2.6,
            g_i2: 25.0,
            g_i3: 16.0,
            tau_theta_ms: 5.0,
            stroke_mm: 100.0,
            close_threshold: 0.5,
            ring_positions: uniform_rings(),
            ring_sigma: 0.45,
            body_offset: 0.25,
            sensors: SensorParams::default(),
        }
    }
}

/// Rings spaced evenly over [0.1, 0.9], anterior (0.9) first.
pub fn uniform_rings() -> [f64; RING_COUNT] {
    core::array::from_fn(|j| 0.9 - 0.8 * j as f64 / (RING_COUNT - 1) as f64)
}

impl MechParams {
    pub fn validate(&self, prefix: &str) -> Result<(), ConfigError> {
        let path = |f: &str| format!("{prefix}.{f}");
        let positive = [
            ("damping", self.damping),
            ("k_hinge", self.k_hinge),
            ("g_i2", self.g_i2),
            ("g_i3", self.g_i3),
            ("stroke_mm", self.stroke_mm),
            ("ring_sigma", self.ring_sigma),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::new(path(name), "must be finite and > 0"));
            }
        }
        if !(self.tau_theta_ms.is_finite() && self.tau_theta_ms >= 0.0) {
            return Err(ConfigError::new(path("tau_theta_ms"), "must be >= 0"));
        }
        if !(self.close_threshold > 0.0 && self.close_threshold < 1.0) {
            return Err(ConfigError::new(path("close_threshold"), "must lie in (0, 1)"));
        }
        if !(self.body_offset.is_finite() && self.body_offset >= 0.0) {
            return Err(ConfigError::new(path("body_offset"), "must be >= 0"));
        }
        for (j, xj) in self.ring_positions.iter().enumerate() {
            if !(0.0..=1.0).contains(xj) {
                return Err(ConfigError::new(path(&format!("ring_positions[{j}]")), "must lie in [0, 1]"));
            }
        }
        self.sensors.validate(&path("sensors"))
    }
}

fn ring_bump(u: f64) -> f64 {
    u * exp((1.0 - u * u) / 2.0)
}

/// Net ring force on the odontophore (positive = protracting), before gain.
pub fn ring_drive(x: f64, ring_tension: &[f64; RING_COUNT], params: &MechParams) -> f64 {
    let centre = x - params.body_offset;
    ring_tension
        .iter()
        .zip(params.ring_positions)
        .map(|(t, xj)| -t * ring_bump((xj - centre) / params.ring_sigma))
        .sum()
}

pub fn step_mechanics(
    g: &GrasperState,
    channels: &[ActuatorChannel; CHANNEL_COUNT],
    food: &FoodObject,
    plant: &PlantParams,
    params: &MechParams,
    dt: f64,
) -> Result<(GrasperState, FoodObject), Error> {
    check_dt(dt)?;
    let dt_s = dt / 1000.0;
    let tension = |id: usize| muscle_tension(&channels[id], 0.0, plant);
    let rings: [f64; RING_COUNT] = core::array::from_fn(tension);
    let t_i2 = tension(6);
    let t_opener = tension(8);
    let t_closer = tension(9);

    let drive = params.g_i3 * ring_drive(g.x, &rings, params);
    let alpha = params.damping * (params.g_i2 * t_i2 + drive);
    let beta = params.damping * (params.g_i2 * t_i2 + params.k_hinge);
    let x = if beta > 0.0 {
        let x_eq = alpha / beta;
        x_eq + (g.x - x_eq) * exp(-beta * dt_s)
    } else {
        g.x + alpha * dt_s
    };
    let x = clamp01(x);

    let target = MAX_ROTATION_DEG * x;
    let theta = if params.tau_theta_ms > 0.0 {
        target + (g.theta_deg - target) * exp(-dt / params.tau_theta_ms)
    } else {
        target
    };
    let theta = theta.clamp(0.0, MAX_ROTATION_DEG);

    let closure = clamp01(t_closer - t_opener);
    let next = GrasperState { x, theta_deg: theta, closure, aperture: 1.0 - closure };

    let mut f = *food;
    if closure >= params.close_threshold {
        f.grasped = true;
    } else if next.aperture > 1.0 - params.close_threshold {
        f.grasped = false;
    }
    if f.grasped {
        let inward = -(x - g.x) * params.stroke_mm;
        if inward > 0.0 {
            f.position_mm += inward;
            f.ingested_mm += inward;
        } else if !f.externally_held {
            f.position_mm += inward;
        }
    }
    Ok((next, f))
}
