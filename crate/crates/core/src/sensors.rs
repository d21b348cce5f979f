//! Simulated time-of-flight, IMU and force sensor readings.

use alloc::format;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::math::{clamp01, round};
use crate::mechanics::{GrasperState, MechParams};
use crate::neural::ProprioFeedback;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SensorParams {
    /// Time-of-flight distance with the grasper fully retracted, mm.
    pub tof_zero_mm: f64,
    pub tof_sigma_mm: f64,
    pub tof_quantization_mm: f64,
    pub imu_sigma_deg: f64,
    pub force_sigma: f64,
}

impl Default for SensorParams {
    fn default() -> Self {
        Self { tof_zero_mm: 150.0, tof_sigma_mm: 0.5, tof_quantization_mm: 1.0, imu_sigma_deg: 0.5, force_sigma: 0.02 }
    }
}

impl SensorParams {
    pub fn noiseless() -> Self {
        Self { tof_sigma_mm: 0.0, imu_sigma_deg: 0.0, force_sigma: 0.0, ..Self::default() }
    }

    pub fn validate(&self, prefix: &str) -> Result<(), ConfigError> {
        let path = |f: &str| format!("{prefix}.{f}");
        if !(self.tof_zero_mm.is_finite() && self.tof_zero_mm > 0.0) {
            return Err(ConfigError::new(path("tof_zero_mm"), "must be > 0"));
        }
        if !(self.tof_quantization_mm.is_finite() && self.tof_quantization_mm > 0.0) {
            return Err(ConfigError::new(path("tof_quantization_mm"), "must be > 0"));
        }
        for (name, v) in [
            ("tof_sigma_mm", self.tof_sigma_mm),
            ("imu_sigma_deg", self.imu_sigma_deg),
            ("force_sigma", self.force_sigma),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ConfigError::new(path(name), "must be >= 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SensorReadings {
    pub tof_distance_mm: f64,
    pub imu_angle_deg: f64,
    pub force_reading: f64,
    /// Translation estimate recovered from the time-of-flight reading.
    pub x_hat: f64,
}

impl SensorReadings {
    pub fn proprio(&self) -> ProprioFeedback {
        ProprioFeedback { x: self.x_hat, force: self.force_reading }
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    if sigma > 0.0 {
        let z: f64 = StandardNormal.sample(rng);
        sigma * z
    } else {
        0.0
    }
}

/// Sample all sensors. Zero sigmas draw nothing from `rng`.
pub fn sense<R: Rng + ?Sized>(g: &GrasperState, params: &MechParams, rng: &mut R) -> SensorReadings {
    let s = &params.sensors;
    let raw = s.tof_zero_mm - g.x * params.stroke_mm + gaussian(rng, s.tof_sigma_mm);
    let tof = round(raw / s.tof_quantization_mm) * s.tof_quantization_mm;
    let imu = g.theta_deg + gaussian(rng, s.imu_sigma_deg);
    let force = clamp01(g.closure + gaussian(rng, s.force_sigma));
    let x_hat = clamp01((s.tof_zero_mm - tof) / params.stroke_mm);
    SensorReadings { tof_distance_mm: tof, imu_angle_deg: imu, force_reading: force, x_hat }
}

/// [`sense`] with a dedicated generator seeded from `seed`.
pub fn sense_seeded(g: &GrasperState, params: &MechParams, seed: u64) -> SensorReadings {
    sense(g, params, &mut ChaCha8Rng::seed_from_u64(seed))
}
