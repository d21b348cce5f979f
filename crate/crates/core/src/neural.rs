//! Fixed-timestep Boolean neural controller.
//!
//! Each named unit is a single Boolean. Protraction and retraction alternate,
//! switched by proprioceptive position thresholds with timeout guards. Units
//! that fire a fixed delay after a phase onset are scheduled as pending events
//! when the phase begins and latch on until the phase ends:
//!
//! | unit      | on when                                                  |
//! |-----------|----------------------------------------------------------|
//! | B31/B32   | protraction                                              |
//! | B64       | retraction                                               |
//! | B43/B45   | = B64, every behavior                                     |
//! | B10       | protraction, from `b10_ms` after onset                   |
//! | RU1       | retraction (same gate as the B3/B6/B9 pool)              |
//! | RU2, RU3  | retraction, from `ru2_ms` / `ru3_ms` after RU1 onset     |
//! | opener    | protraction when ingestive, retraction when rejecting    |
//! | closer    | retraction when ingestive, protraction when rejecting    |
//! | B38       | protraction while swallowing                             |
//! | CBI-3     | ingestive behavior (bite or swallow)                     |

use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{check_dt, ConfigError, Error};
use crate::stimulus::{classify_behavior, BehaviorMap, BehaviorMode, StimulusState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Unit {
    B31B32,
    B64,
    Cbi3,
    B38,
    B10,
    B43B45,
    Opener,
    Closer,
    Ru1,
    Ru2,
    Ru3,
}

impl Unit {
    pub const COUNT: usize = 11;
    pub const ALL: [Unit; Unit::COUNT] = [
        Unit::B31B32,
        Unit::B64,
        Unit::Cbi3,
        Unit::B38,
        Unit::B10,
        Unit::B43B45,
        Unit::Opener,
        Unit::Closer,
        Unit::Ru1,
        Unit::Ru2,
        Unit::Ru3,
    ];

    /// Column name used in traces and telemetry.
    pub fn name(self) -> &'static str {
        match self {
            Unit::B31B32 => "B31_B32",
            Unit::B64 => "B64",
            Unit::Cbi3 => "CBI3",
            Unit::B38 => "B38",
            Unit::B10 => "B10",
            Unit::B43B45 => "B43_B45",
            Unit::Opener => "B44_B48_opener",
            Unit::Closer => "Closer",
            Unit::Ru1 => "RU1",
            Unit::Ru2 => "RU2",
            Unit::Ru3 => "RU3",
        }
    }

    pub fn from_name(name: &str) -> Option<Unit> {
        Unit::ALL.into_iter().find(|u| u.name() == name)
    }
}

/// Boolean state of every unit, indexed by [`Unit`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct UnitStates(pub [bool; Unit::COUNT]);

impl Index<Unit> for UnitStates {
    type Output = bool;
    fn index(&self, u: Unit) -> &bool {
        &self.0[u as usize]
    }
}

impl IndexMut<Unit> for UnitStates {
    fn index_mut(&mut self, u: Unit) -> &mut bool {
        &mut self.0[u as usize]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Phase {
    #[default]
    Idle,
    Protraction,
    Retraction,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::Idle, Phase::Protraction, Phase::Retraction];

    pub fn code(self) -> u8 {
        match self {
            Phase::Idle => 0,
            Phase::Protraction => 1,
            Phase::Retraction => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Phase::Idle => "Idle",
            Phase::Protraction => "Protraction",
            Phase::Retraction => "Retraction",
        }
    }

    pub fn from_name(name: &str) -> Option<Phase> {
        Phase::ALL.into_iter().find(|p| p.name() == name)
    }
}

/// Delays and phase-switch thresholds. Times in ms, positions normalized.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct DelayParams {
    pub ru2_ms: f64,
    pub ru3_ms: f64,
    /// B10 delay after B31/B32 onset.
    pub b10_ms: f64,
    pub protraction_max_ms: f64,
    pub retraction_max_ms: f64,
    pub x_protraction_threshold: f64,
    pub x_retraction_threshold: f64,
}

impl Default for DelayParams {
    fn default() -> Self {
        Self {
            ru2_ms: 300.0,
            ru3_ms: 1200.0,
            b10_ms: 700.0,
            protraction_max_ms: 4000.0,
            retraction_max_ms: 4000.0,
            x_protraction_threshold: 0.9,
            x_retraction_threshold: 0.1,
        }
    }
}

impl DelayParams {
    pub fn validate(&self, prefix: &str) -> Result<(), ConfigError> {
        let path = |f: &str| alloc::format!("{prefix}.{f}");
        let finite = [
            ("ru2_ms", self.ru2_ms),
            ("ru3_ms", self.ru3_ms),
            ("b10_ms", self.b10_ms),
            ("protraction_max_ms", self.protraction_max_ms),
            ("retraction_max_ms", self.retraction_max_ms),
            ("x_protraction_threshold", self.x_protraction_threshold),
            ("x_retraction_threshold", self.x_retraction_threshold),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(ConfigError::new(path(name), "must be finite"));
            }
        }
        if self.ru2_ms <= 0.0 {
            return Err(ConfigError::new(path("ru2_ms"), "must be > 0"));
        }
        if self.ru3_ms <= self.ru2_ms {
            return Err(ConfigError::new(path("ru3_ms"), "must be greater than ru2_ms"));
        }
        if self.b10_ms < 0.0 || self.b10_ms >= self.protraction_max_ms {
            return Err(ConfigError::new(path("b10_ms"), "must be >= 0 and less than protraction_max_ms"));
        }
        if self.retraction_max_ms <= 0.0 {
            return Err(ConfigError::new(path("retraction_max_ms"), "must be > 0"));
        }
        if !(0.0 <= self.x_retraction_threshold
            && self.x_retraction_threshold < self.x_protraction_threshold
            && self.x_protraction_threshold <= 1.0)
        {
            return Err(ConfigError::new(
                path("x_protraction_threshold"),
                "need 0 <= x_retraction_threshold < x_protraction_threshold <= 1",
            ));
        }
        Ok(())
    }
}

/// Proprioceptive input consumed by the controller.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ProprioFeedback {
    /// Normalized translation estimate in [0, 1].
    pub x: f64,
    /// Normalized closing force.
    pub force: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendingFire {
    pub unit: Unit,
    pub at_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuralState {
    pub units: UnitStates,
    pub phase: Phase,
    pub mode: BehaviorMode,
    /// Time of the last processed tick; `None` before the first tick.
    pub clock_ms: Option<f64>,
    pub phase_onset_ms: f64,
    pub ru1_onset_ms: Option<f64>,
    pub pending: Vec<PendingFire>,
    latched: [bool; 3],
    seq: u8,
}

impl Default for NeuralState {
    fn default() -> Self {
        Self {
            units: UnitStates::default(),
            phase: Phase::Idle,
            mode: BehaviorMode::Quiescent,
            clock_ms: None,
            phase_onset_ms: 0.0,
            ru1_onset_ms: None,
            pending: Vec::new(),
            latched: [false; 3],
            seq: 0,
        }
    }
}

const LATCH_B10: usize = 0;
const LATCH_RU2: usize = 1;
const LATCH_RU3: usize = 2;

impl NeuralState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Time since the current protraction began, if protracting.
    pub fn t_since_protraction_onset(&self) -> Option<f64> {
        match (self.phase, self.clock_ms) {
            (Phase::Protraction, Some(t)) => Some(t - self.phase_onset_ms),
            _ => None,
        }
    }

    /// Time since RU1 fired in this retraction; `None` when RU1 has not fired.
    pub fn t_since_ru1_onset(&self) -> Option<f64> {
        Some(self.clock_ms? - self.ru1_onset_ms?)
    }

    /// The motor frame implied by the current unit states.
    pub fn motor_frame(&self) -> MotorFrame {
        let u = &self.units;
        let mut c = MotorCommands::default();
        c.set(Motor::Ru1, u[Unit::Ru1]);
        c.set(Motor::Ru2, u[Unit::Ru2]);
        c.set(Motor::Ru3, u[Unit::Ru3]);
        c.set(Motor::B10, u[Unit::B10]);
        c.set(Motor::B38, u[Unit::B38]);
        c.set(Motor::B43B45, u[Unit::B43B45]);
        c.set(Motor::Opener, u[Unit::Opener]);
        c.set(Motor::Closer, u[Unit::Closer]);
        c.set(Motor::I2Drive, u[Unit::B31B32]);
        MotorFrame { commands: c, seq: self.seq.wrapping_sub(1), timestamp_ms: self.clock_ms.unwrap_or(0.0) }
    }

    fn enter(&mut self, phase: Phase, t: f64, p: &DelayParams) {
        self.phase = phase;
        self.phase_onset_ms = t;
        self.latched = [false; 3];
        self.pending.clear();
        match phase {
            Phase::Protraction => {
                self.ru1_onset_ms = None;
                self.pending.push(PendingFire { unit: Unit::B10, at_ms: t + p.b10_ms });
            }
            Phase::Retraction => {
                self.ru1_onset_ms = Some(t);
                self.pending.push(PendingFire { unit: Unit::Ru2, at_ms: t + p.ru2_ms });
                self.pending.push(PendingFire { unit: Unit::Ru3, at_ms: t + p.ru3_ms });
            }
            Phase::Idle => self.ru1_onset_ms = None,
        }
    }
}

/// Motor outputs carried on the inter-controller link, in wire bit order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Motor {
    Ru1 = 0,
    Ru2 = 1,
    Ru3 = 2,
    B10 = 3,
    B38 = 4,
    B43B45 = 5,
    Opener = 6,
    Closer = 7,
    I2Drive = 8,
}

impl Motor {
    pub const ALL: [Motor; 9] = [
        Motor::Ru1,
        Motor::Ru2,
        Motor::Ru3,
        Motor::B10,
        Motor::B38,
        Motor::B43B45,
        Motor::Opener,
        Motor::Closer,
        Motor::I2Drive,
    ];

    pub const fn bit(self) -> u16 {
        1 << self as u16
    }
}

/// Bitfield of motor commands; bit positions follow [`Motor`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct MotorCommands(u16);

impl MotorCommands {
    pub const MASK: u16 = 0x01FF;

    pub fn from_bits(bits: u16) -> Option<Self> {
        (bits & !Self::MASK == 0).then_some(Self(bits))
    }

    pub fn bits(self) -> u16 {
        self.0
    }

    pub fn get(self, m: Motor) -> bool {
        self.0 & m.bit() != 0
    }

    pub fn set(&mut self, m: Motor, on: bool) {
        if on {
            self.0 |= m.bit();
        } else {
            self.0 &= !m.bit();
        }
    }
}

impl fmt::Display for MotorCommands {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:09b}", self.0)
    }
}

/// One neural -> pressure controller message.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorFrame {
    pub commands: MotorCommands,
    pub seq: u8,
    pub timestamp_ms: f64,
}

impl MotorFrame {
    pub fn get(&self, m: Motor) -> bool {
        self.commands.get(m)
    }
}

/// Advance the controller one tick using the default behavior map.
pub fn step_neural(
    ns: &NeuralState,
    s: &StimulusState,
    proprio: &ProprioFeedback,
    dt: f64,
    p: &DelayParams,
) -> Result<(NeuralState, MotorFrame), Error> {
    step_neural_in_mode(ns, classify_behavior(s), proprio, dt, p)
}

/// Like [`step_neural`] with a caller-supplied behavior map.
pub fn step_neural_mapped(
    ns: &NeuralState,
    s: &StimulusState,
    proprio: &ProprioFeedback,
    dt: f64,
    p: &DelayParams,
    map: &BehaviorMap,
) -> Result<(NeuralState, MotorFrame), Error> {
    step_neural_in_mode(ns, map.classify(s), proprio, dt, p)
}

/// Advance one tick with an already classified behavior mode.
///
/// The first call processes the tick at t = 0; later calls advance the clock
/// by `dt`.
pub fn step_neural_in_mode(
    ns: &NeuralState,
    mode: BehaviorMode,
    proprio: &ProprioFeedback,
    dt: f64,
    p: &DelayParams,
) -> Result<(NeuralState, MotorFrame), Error> {
    check_dt(dt)?;
    let mut next = ns.clone();
    let t = ns.clock_ms.map_or(0.0, |c| c + dt);
    next.clock_ms = Some(t);
    next.mode = mode;
    next.seq = ns.seq.wrapping_add(1);

    if mode == BehaviorMode::Quiescent {
        if next.phase != Phase::Idle {
            next.enter(Phase::Idle, t, p);
        }
    } else {
        let elapsed = t - next.phase_onset_ms;
        match next.phase {
            Phase::Idle => next.enter(Phase::Protraction, t, p),
            Phase::Protraction if proprio.x >= p.x_protraction_threshold || elapsed >= p.protraction_max_ms => {
                next.enter(Phase::Retraction, t, p)
            }
            Phase::Retraction if proprio.x <= p.x_retraction_threshold || elapsed >= p.retraction_max_ms => {
                next.enter(Phase::Protraction, t, p)
            }
            _ => {}
        }
    }

    let mut latched = next.latched;
    next.pending.retain(|ev| {
        if ev.at_ms <= t {
            match ev.unit {
                Unit::B10 => latched[LATCH_B10] = true,
                Unit::Ru2 => latched[LATCH_RU2] = true,
                Unit::Ru3 => latched[LATCH_RU3] = true,
                _ => {}
            }
            false
        } else {
            true
        }
    });
    next.latched = latched;

    let prot = next.phase == Phase::Protraction;
    let ret = next.phase == Phase::Retraction;
    let ingestive = mode.is_ingestive();
    let reject = mode == BehaviorMode::Reject;
    let u = &mut next.units;
    u[Unit::B31B32] = prot;
    u[Unit::B64] = ret;
    u[Unit::B43B45] = ret;
    u[Unit::B10] = prot && latched[LATCH_B10];
    u[Unit::Ru1] = ret;
    u[Unit::Ru2] = ret && latched[LATCH_RU2];
    u[Unit::Ru3] = ret && latched[LATCH_RU3];
    u[Unit::Opener] = (prot && ingestive) || (ret && reject);
    u[Unit::Closer] = (ret && ingestive) || (prot && reject);
    u[Unit::B38] = prot && mode == BehaviorMode::Swallow;
    u[Unit::Cbi3] = ingestive;

    let frame = next.motor_frame();
    Ok((next, frame))
}
