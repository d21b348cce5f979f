//! Ten-channel pneumatic muscle plant under bang-bang valve control.
//!
//! Channel layout: 0..=5 are the I3 rings, anterior to posterior; 6 is I2;
//! 7 the paired I1 actuators; 8 the paired opener actuators (one shared
//! inlet); 9 the closer.

use alloc::format;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{check_dt, ConfigError, Error};
use crate::math::{clamp01, exp};
use crate::neural::{Motor, MotorFrame};

pub const CHANNEL_COUNT: usize = 10;
pub const RING_COUNT: usize = 6;

/// Columns of the I3 innervation matrix.
pub const INNERVATION_INPUTS: [Motor; 5] = [Motor::Ru1, Motor::Ru2, Motor::Ru3, Motor::B10, Motor::B38];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelRole {
    /// I3 ring, 1 (anterior) ..= 6 (posterior).
    I3Ring(u8),
    I2,
    I1Pair,
    OpenerPair,
    Closer,
}

impl ChannelRole {
    pub fn for_channel(id: usize) -> ChannelRole {
        match id {
            0..=5 => ChannelRole::I3Ring(id as u8 + 1),
            6 => ChannelRole::I2,
            7 => ChannelRole::I1Pair,
            8 => ChannelRole::OpenerPair,
            9 => ChannelRole::Closer,
            _ => panic!("channel id {id} out of range"),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ChannelRole::I3Ring(1) => "I3_ring1",
            ChannelRole::I3Ring(2) => "I3_ring2",
            ChannelRole::I3Ring(3) => "I3_ring3",
            ChannelRole::I3Ring(4) => "I3_ring4",
            ChannelRole::I3Ring(5) => "I3_ring5",
            ChannelRole::I3Ring(_) => "I3_ring6",
            ChannelRole::I2 => "I2",
            ChannelRole::I1Pair => "I1_pair",
            ChannelRole::OpenerPair => "opener_pair",
            ChannelRole::Closer => "closer",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuatorChannel {
    pub id: u8,
    pub role: ChannelRole,
    pub activation: f64,
    /// psig
    pub setpoint: f64,
    /// psig
    pub pressure: f64,
    pub inlet_open: bool,
    pub relief_open: bool,
}

impl ActuatorChannel {
    pub fn new(id: usize) -> Self {
        Self {
            id: id as u8,
            role: ChannelRole::for_channel(id),
            activation: 0.0,
            setpoint: 0.0,
            pressure: 0.0,
            inlet_open: false,
            relief_open: false,
        }
    }

    pub fn bank() -> [ActuatorChannel; CHANNEL_COUNT] {
        core::array::from_fn(ActuatorChannel::new)
    }
}

/// Activation time constant and full-scale pressure for one muscle role.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct RoleParams {
    pub tau_act_ms: f64,
    pub p_max: f64,
}

impl Default for RoleParams {
    fn default() -> Self {
        Self { tau_act_ms: 150.0, p_max: 12.0 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct RoleTable {
    pub i3: RoleParams,
    pub i2: RoleParams,
    pub i1: RoleParams,
    pub opener: RoleParams,
    pub closer: RoleParams,
}

impl RoleTable {
    pub fn get(&self, role: ChannelRole) -> &RoleParams {
        match role {
            ChannelRole::I3Ring(_) => &self.i3,
            ChannelRole::I2 => &self.i2,
            ChannelRole::I1Pair => &self.i1,
            ChannelRole::OpenerPair => &self.opener,
            ChannelRole::Closer => &self.closer,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PlantParams {
    /// Supply line pressure, psig.
    pub supply: f64,
    /// Total width of the tolerance band around the setpoint, psig.
    pub band: f64,
    pub sensor_fullscale: f64,
    /// Inlet fill rate, 1/s.
    pub k_fill: f64,
    /// Relief vent rate, 1/s.
    pub k_vent: f64,
    /// Pressure sensor noise, psig (one sigma).
    pub sensor_noise_sigma: f64,
    pub roles: RoleTable,
    /// I3 innervation weights. Rows are rings anterior -> posterior, columns
    /// are RU1, RU2, RU3, B10, B38.
    pub innervation: [[f64; 5]; RING_COUNT],
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            supply: 15.0,
            band: 0.4,
            sensor_fullscale: 30.0,
            k_fill: 8.0,
            k_vent: 6.0,
            sensor_noise_sigma: 0.05,
            roles: RoleTable::default(),
            innervation: DEFAULT_INNERVATION,
        }
    }
}

/// Shipped I3 weights: each ring pair follows one retractor unit with a 0.2
/// bleed to its neighbours, B38 pinches the anterior pair and B10 drives the
/// posterior pair.
pub const DEFAULT_INNERVATION: [[f64; 5]; RING_COUNT] = [
    // RU1 RU2  RU3  B10  B38
    [0.6, 0.0, 0.0, 0.0, 0.4],
    [0.6, 0.2, 0.0, 0.0, 0.2],
    [0.2, 0.6, 0.2, 0.0, 0.0],
    [0.2, 0.6, 0.2, 0.0, 0.0],
    [0.0, 0.2, 0.3, 0.5, 0.0],
    [0.0, 0.2, 0.3, 0.5, 0.0],
];

impl PlantParams {
    pub fn validate(&self, prefix: &str) -> Result<(), ConfigError> {
        let path = |f: &str| format!("{prefix}.{f}");
        let positive = [
            ("supply", self.supply),
            ("band", self.band),
            ("sensor_fullscale", self.sensor_fullscale),
            ("k_fill", self.k_fill),
            ("k_vent", self.k_vent),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::new(path(name), "must be finite and > 0"));
            }
        }
        if !(self.sensor_noise_sigma.is_finite() && self.sensor_noise_sigma >= 0.0) {
            return Err(ConfigError::new(path("sensor_noise_sigma"), "must be >= 0"));
        }
        if self.supply > self.sensor_fullscale {
            return Err(ConfigError::new(path("supply"), "must not exceed sensor_fullscale"));
        }
        let roles = [
            ("i3", &self.roles.i3),
            ("i2", &self.roles.i2),
            ("i1", &self.roles.i1),
            ("opener", &self.roles.opener),
            ("closer", &self.roles.closer),
        ];
        for (name, r) in roles {
            if !(r.tau_act_ms.is_finite() && r.tau_act_ms > 0.0) {
                return Err(ConfigError::new(path(&format!("roles.{name}.tau_act_ms")), "must be > 0"));
            }
            if !(r.p_max > 0.0 && r.p_max <= self.supply) {
                return Err(ConfigError::new(path(&format!("roles.{name}.p_max")), "must be in (0, supply]"));
            }
        }
        let mut prev_argmax = 0;
        for (j, row) in self.innervation.iter().enumerate() {
            let here = path(&format!("innervation[{j}]"));
            if row.iter().any(|w| !(0.0..=1.0).contains(w)) {
                return Err(ConfigError::new(here, "weights must lie in [0, 1]"));
            }
            if row.iter().sum::<f64>() > 1.0 + 1e-12 {
                return Err(ConfigError::new(here, "row sum must be <= 1"));
            }
            let ru = &row[..3];
            let argmax = (0..3).fold(0, |best, k| if ru[k] > ru[best] { k } else { best });
            if argmax < prev_argmax {
                return Err(ConfigError::new(here, "dominant retractor unit must not move anterior along the rings"));
            }
            prev_argmax = argmax;
        }
        Ok(())
    }
}

/// Target activation in [0, 1] for a channel given the current frame.
pub fn target_activation(role: ChannelRole, frame: &MotorFrame, params: &PlantParams) -> f64 {
    let on = |m: Motor| if frame.get(m) { 1.0 } else { 0.0 };
    match role {
        ChannelRole::I3Ring(j) => {
            let row = &params.innervation[usize::from(j - 1)];
            row.iter().zip(INNERVATION_INPUTS).map(|(w, m)| w * on(m)).sum()
        }
        ChannelRole::I2 => on(Motor::I2Drive),
        ChannelRole::I1Pair => on(Motor::B43B45),
        ChannelRole::OpenerPair => on(Motor::Opener),
        ChannelRole::Closer => on(Motor::Closer),
    }
}

/// First-order activation update toward the frame's targets; the setpoint is
/// activation scaled by the role's full-scale pressure.
pub fn integrate_activation(
    channels: &[ActuatorChannel; CHANNEL_COUNT],
    frame: &MotorFrame,
    params: &PlantParams,
    dt: f64,
) -> Result<[ActuatorChannel; CHANNEL_COUNT], Error> {
    check_dt(dt)?;
    let mut out = *channels;
    for ch in &mut out {
        let role = params.roles.get(ch.role);
        let u = target_activation(ch.role, frame, params);
        let decay = exp(-dt / role.tau_act_ms);
        ch.activation = clamp01(u + (ch.activation - u) * decay);
        ch.setpoint = ch.activation * role.p_max;
    }
    Ok(out)
}

/// Raised when a setpoint above the role's `p_max` had to be clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetpointClamped {
    pub channel: u8,
    pub requested: f64,
    pub applied: f64,
}

/// One control + integration step for a single channel.
///
/// `noise` is the pressure sensor error for this sample (psig). The valve
/// decision uses the noisy, range-clamped measurement; the true pressure then
/// integrates exactly over `dt` with the chosen valve state.
pub fn bang_bang_step(
    ch: &ActuatorChannel,
    params: &PlantParams,
    dt: f64,
    noise: f64,
) -> Result<(ActuatorChannel, Option<SetpointClamped>), Error> {
    check_dt(dt)?;
    let mut next = *ch;
    let p_max = params.roles.get(ch.role).p_max;
    let mut warning = None;
    if next.setpoint > p_max {
        warning = Some(SetpointClamped { channel: ch.id, requested: next.setpoint, applied: p_max });
        next.setpoint = p_max;
    }
    next.setpoint = next.setpoint.max(0.0);

    let measured = (ch.pressure + noise).clamp(0.0, params.sensor_fullscale);
    let half = params.band / 2.0;
    next.inlet_open = measured < next.setpoint - half;
    next.relief_open = measured > next.setpoint + half;

    let dt_s = dt / 1000.0;
    if next.inlet_open {
        next.pressure = params.supply + (ch.pressure - params.supply) * exp(-params.k_fill * dt_s);
    } else if next.relief_open {
        next.pressure = ch.pressure * exp(-params.k_vent * dt_s);
    }
    next.pressure = next.pressure.clamp(0.0, params.supply);
    Ok((next, warning))
}

/// Normalized McKibben force: linear in pressure, zero at full contraction.
pub fn muscle_tension(ch: &ActuatorChannel, strain: f64, params: &PlantParams) -> f64 {
    let p_max = params.roles.get(ch.role).p_max;
    clamp01((ch.pressure / p_max) * (1.0 - clamp01(strain)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::MotorCommands;
    use proptest::prelude::*;

    fn frame(on: &[Motor]) -> MotorFrame {
        let mut c = MotorCommands::default();
        for m in on {
            c.set(*m, true);
        }
        MotorFrame { commands: c, seq: 0, timestamp_ms: 0.0 }
    }

    #[test]
    fn activation_step_of_one_time_constant() {
        let p = PlantParams::default();
        let bank = ActuatorChannel::bank();
        let out = integrate_activation(&bank, &frame(&[Motor::I2Drive]), &p, 150.0).unwrap();
        assert!((out[6].activation - 0.6321).abs() < 1e-4);
        assert!((out[6].activation - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        assert!((out[6].setpoint - out[6].activation * 12.0).abs() < 1e-12);
    }

    #[test]
    fn silent_frame_is_fixed_point() {
        let p = PlantParams::default();
        let out = integrate_activation(&ActuatorChannel::bank(), &frame(&[]), &p, 1.0).unwrap();
        assert!(out.iter().all(|c| c.activation == 0.0 && c.setpoint == 0.0));
    }

    #[test]
    fn ring_weighted_sum() {
        let mut p = PlantParams::default();
        p.innervation[5] = [0.0, 0.2, 0.0, 0.8, 0.0];
        let u = target_activation(ChannelRole::I3Ring(6), &frame(&[Motor::Ru2, Motor::B10]), &p);
        assert!((u - 1.0).abs() < 1e-12);
        let u = target_activation(ChannelRole::I3Ring(1), &frame(&[Motor::Ru1, Motor::B38]), &PlantParams::default());
        assert!((u - 1.0).abs() < 1e-12);
    }

    #[test]
    fn role_routing() {
        let p = PlantParams::default();
        let f = frame(&[Motor::B43B45, Motor::Closer]);
        assert_eq!(target_activation(ChannelRole::I1Pair, &f, &p), 1.0);
        assert_eq!(target_activation(ChannelRole::Closer, &f, &p), 1.0);
        assert_eq!(target_activation(ChannelRole::OpenerPair, &f, &p), 0.0);
        assert_eq!(target_activation(ChannelRole::I2, &f, &p), 0.0);
    }

    #[test]
    fn rejects_bad_dt() {
        let p = PlantParams::default();
        assert!(integrate_activation(&ActuatorChannel::bank(), &frame(&[]), &p, 0.0).is_err());
        assert!(bang_bang_step(&ActuatorChannel::new(0), &p, -1.0, 0.0).is_err());
    }

    fn channel(setpoint: f64, pressure: f64) -> ActuatorChannel {
        ActuatorChannel { setpoint, pressure, ..ActuatorChannel::new(6) }
    }

    #[test]
    fn valve_decisions() {
        let p = PlantParams::default();
        let (c, _) = bang_bang_step(&channel(10.0, 9.5), &p, 1.0, 0.0).unwrap();
        assert!(c.inlet_open && !c.relief_open);
        assert!(c.pressure > 9.5);

        let (c, _) = bang_bang_step(&channel(10.0, 10.1), &p, 1.0, 0.0).unwrap();
        assert!(!c.inlet_open && !c.relief_open);
        assert_eq!(c.pressure, 10.1);

        let (c, _) = bang_bang_step(&channel(10.0, 10.5), &p, 1.0, 0.0).unwrap();
        assert!(c.relief_open && !c.inlet_open);
        assert!(c.pressure < 10.5);
    }

    #[test]
    fn noise_drives_decision_not_state() {
        let p = PlantParams::default();
        let (c, _) = bang_bang_step(&channel(10.0, 10.0), &p, 1.0, -0.3).unwrap();
        assert!(c.inlet_open);
    }

    #[test]
    fn setpoint_above_p_max_is_clamped_and_reported() {
        let p = PlantParams::default();
        let (c, w) = bang_bang_step(&channel(14.0, 0.0), &p, 1.0, 0.0).unwrap();
        assert_eq!(c.setpoint, 12.0);
        assert_eq!(w, Some(SetpointClamped { channel: 6, requested: 14.0, applied: 12.0 }));
    }

    #[test]
    fn fill_approaches_supply_from_below() {
        let mut p = PlantParams::default();
        p.roles.i2.p_max = 15.0;
        let mut c = channel(15.0, 0.0);
        let mut last = 0.0;
        for _ in 0..5_000 {
            c = bang_bang_step(&c, &p, 1.0, 0.0).unwrap().0;
            assert!(c.pressure <= 15.0 && c.pressure >= last);
            last = c.pressure;
        }
        // holds once inside the band below the supply
        assert!(15.0 - c.pressure <= p.band / 2.0 + 1e-9);
        assert!(c.pressure < 15.0);

        // with the inlet forced open the pressure converges on the supply
        let mut c = ActuatorChannel { pressure: 0.0, ..ActuatorChannel::new(6) };
        for _ in 0..20_000 {
            c.setpoint = 15.0;
            c = bang_bang_step(&c, &p, 1.0, -1.0).unwrap().0;
            assert!(c.pressure <= 15.0);
        }
        assert!(15.0 - c.pressure < 1e-6);
    }

    #[test]
    fn tension_examples() {
        let p = PlantParams::default();
        let mut ch = ActuatorChannel::new(6);
        ch.pressure = 12.0;
        assert_eq!(muscle_tension(&ch, 0.0, &p), 1.0);
        assert_eq!(muscle_tension(&ch, 1.0, &p), 0.0);
        let mut p15 = p;
        p15.roles.i2.p_max = 15.0;
        ch.pressure = 7.5;
        assert!((muscle_tension(&ch, 0.5, &p15) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn default_params_valid_and_checks_fire() {
        let p = PlantParams::default();
        p.validate("plant").unwrap();
        let mut bad = p;
        bad.innervation[0] = [0.6, 0.6, 0.0, 0.0, 0.0];
        assert_eq!(bad.validate("plant").unwrap_err().path, "plant.innervation[0]");
        let mut bad = p;
        bad.innervation.swap(0, 5);
        assert!(bad.validate("plant").is_err());
        let mut bad = p;
        bad.roles.closer.p_max = 20.0;
        assert_eq!(bad.validate("plant").unwrap_err().path, "plant.roles.closer.p_max");
    }

    proptest! {
        #[test]
        fn valves_exclusive_and_pressure_bounded(
            setpoint in -2.0f64..20.0,
            pressure in 0.0f64..15.0,
            noise in -3.0f64..3.0,
            dt in 0.01f64..50.0,
        ) {
            let p = PlantParams::default();
            let (c, _) = bang_bang_step(&channel(setpoint, pressure), &p, dt, noise).unwrap();
            prop_assert!(!(c.inlet_open && c.relief_open));
            prop_assert!((0.0..=p.supply).contains(&c.pressure));
        }

        #[test]
        fn activation_stays_in_unit_interval(
            bits in proptest::collection::vec(0u16..=MotorCommands::MASK, 1..200),
            dt in 0.1f64..500.0,
        ) {
            let p = PlantParams::default();
            let mut bank = ActuatorChannel::bank();
            for b in bits {
                let f = MotorFrame { commands: MotorCommands::from_bits(b).unwrap(), seq: 0, timestamp_ms: 0.0 };
                bank = integrate_activation(&bank, &f, &p, dt).unwrap();
                for c in &bank {
                    prop_assert!((0.0..=1.0).contains(&c.activation));
                }
            }
        }

        #[test]
        fn tension_monotone(p1 in 0.0f64..12.0, p2 in 0.0f64..12.0, s1 in 0.0f64..1.0, s2 in 0.0f64..1.0) {
            let params = PlantParams::default();
            let mk = |pr| ActuatorChannel { pressure: pr, ..ActuatorChannel::new(0) };
            let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
            prop_assert!(muscle_tension(&mk(lo), s1, &params) <= muscle_tension(&mk(hi), s1, &params));
            let (slo, shi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
            prop_assert!(muscle_tension(&mk(p1), shi, &params) <= muscle_tension(&mk(p1), slo, &params));
        }
    }
}
