//! Cycle segmentation, time normalization and timing statistics.
//!
//! Cycles run from one B31/B32 rising edge to the next. Each cycle is
//! resampled by linear interpolation onto a 101-point grid (0..=100 % of the
//! cycle) and averaged pointwise. Boolean edge phases are taken per cycle at
//! tick resolution: the edge sits at the first sample on the new side of the
//! 0.5 threshold, expressed as a percentage of the cycle length.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::math::{ceil, sqrt};
use crate::neural::Unit;
use crate::plant::{ChannelRole, CHANNEL_COUNT};
use crate::sim::{Trace, TraceRecord};

pub const GRID_POINTS: usize = 101;
pub const THRESHOLD: f64 = 0.5;

/// Record index range of one cycle: `start` is a rising edge, `end` the next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CycleBounds {
    pub start: usize,
    pub end: usize,
}

impl CycleBounds {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Segmentation {
    pub cycles: Vec<CycleBounds>,
    pub warning: Option<&'static str>,
}

/// Cycles between consecutive rising edges. A signal that is already on at
/// index 0 counts as rising there.
pub fn segment_signal(signal: impl IntoIterator<Item = bool>) -> Segmentation {
    let mut edges = Vec::new();
    let mut prev = false;
    for (i, on) in signal.into_iter().enumerate() {
        if on && !prev {
            edges.push(i);
        }
        prev = on;
    }
    if edges.len() < 2 {
        return Segmentation { cycles: Vec::new(), warning: Some("fewer than two B31/B32 rising edges") };
    }
    let cycles = edges.windows(2).map(|w| CycleBounds { start: w[0], end: w[1] }).collect();
    Segmentation { cycles, warning: None }
}

pub fn segment_cycles(trace: &Trace) -> Segmentation {
    segment_signal(trace.records.iter().map(|r| r.units[Unit::B31B32]))
}

/// Keep only the last `n` cycles (all of them when fewer exist).
pub fn last_cycles(cycles: &[CycleBounds], n: usize) -> Vec<CycleBounds> {
    cycles[cycles.len().saturating_sub(n)..].to_vec()
}

/// Linear-interpolation resample of `values[start..=end]` onto the grid.
pub fn resample_cycle(values: &[f64], bounds: CycleBounds) -> [f64; GRID_POINTS] {
    let len = bounds.len() as f64;
    core::array::from_fn(|g| {
        let pos = bounds.start as f64 + len * g as f64 / (GRID_POINTS - 1) as f64;
        let lo = (pos as usize).min(bounds.end);
        let hi = (lo + 1).min(bounds.end);
        let frac = pos - lo as f64;
        values[lo] + (values[hi] - values[lo]) * frac
    })
}

/// Map a resampled cycle back onto `len + 1` ticks (inclusive of the end).
pub fn denormalize(grid: &[f64; GRID_POINTS], len: usize) -> Vec<f64> {
    (0..=len)
        .map(|k| {
            let pos = k as f64 * (GRID_POINTS - 1) as f64 / len as f64;
            let lo = (pos as usize).min(GRID_POINTS - 1);
            let hi = (lo + 1).min(GRID_POINTS - 1);
            grid[lo] + (grid[hi] - grid[lo]) * (pos - lo as f64)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Crossings {
    /// % cycle of the first on edge; 0 when the signal is already on.
    pub on: Option<f64>,
    pub off: Option<f64>,
}

/// Edge phases of a cycle given its samples from start to end inclusive.
pub fn edge_phases(samples: &[f64]) -> Crossings {
    let mut c = Crossings::default();
    let Some(&first) = samples.first() else {
        return c;
    };
    let len = (samples.len() - 1).max(1) as f64;
    let pct = |k: usize| 100.0 * k as f64 / len;
    if first >= THRESHOLD {
        c.on = Some(0.0);
    }
    for k in 1..samples.len() {
        let (a, b) = (samples[k - 1], samples[k]);
        if c.on.is_none() && a < THRESHOLD && b >= THRESHOLD {
            c.on = Some(pct(k));
        }
        if c.off.is_none() && a >= THRESHOLD && b < THRESHOLD {
            c.off = Some(pct(k));
        }
    }
    c
}

/// Threshold crossings of an averaged grid signal, linearly interpolated.
pub fn grid_crossings(grid: &[f64]) -> Crossings {
    let mut c = Crossings::default();
    if grid.first().is_some_and(|&v| v >= THRESHOLD) {
        c.on = Some(0.0);
    }
    for i in 1..grid.len() {
        let (a, b) = (grid[i - 1], grid[i]);
        let at = || (i - 1) as f64 + (THRESHOLD - a) / (b - a);
        if c.on.is_none() && a < THRESHOLD && b >= THRESHOLD {
            c.on = Some(at());
        }
        if c.off.is_none() && a >= THRESHOLD && b < THRESHOLD {
            c.off = Some(at());
        }
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalId {
    Unit(Unit),
    X,
    Theta,
    Closure,
    Aperture,
    Pressure(usize),
    Activation(usize),
}

impl SignalId {
    pub fn all() -> Vec<SignalId> {
        let mut v: Vec<SignalId> = Unit::ALL.iter().map(|&u| SignalId::Unit(u)).collect();
        v.extend([SignalId::X, SignalId::Theta, SignalId::Closure, SignalId::Aperture]);
        v.extend((0..CHANNEL_COUNT).map(SignalId::Pressure));
        v.extend((0..CHANNEL_COUNT).map(SignalId::Activation));
        v
    }

    pub fn is_boolean(self) -> bool {
        matches!(self, SignalId::Unit(_))
    }

    pub fn name(self) -> String {
        match self {
            SignalId::Unit(u) => u.name().to_string(),
            SignalId::X => "x".to_string(),
            SignalId::Theta => "theta_deg".to_string(),
            SignalId::Closure => "closure".to_string(),
            SignalId::Aperture => "aperture".to_string(),
            SignalId::Pressure(i) => alloc::format!("p_{}", ChannelRole::for_channel(i).label()),
            SignalId::Activation(i) => alloc::format!("a_{}", ChannelRole::for_channel(i).label()),
        }
    }

    pub fn value(self, r: &TraceRecord) -> f64 {
        match self {
            SignalId::Unit(u) => f64::from(u8::from(r.units[u])),
            SignalId::X => r.grasper.x,
            SignalId::Theta => r.grasper.theta_deg,
            SignalId::Closure => r.grasper.closure,
            SignalId::Aperture => r.grasper.aperture,
            SignalId::Pressure(i) => r.channels[i].pressure,
            SignalId::Activation(i) => r.channels[i].activation,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SignalProfile {
    pub name: String,
    pub boolean: bool,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Per-cycle edge phases; empty for continuous signals.
    pub crossings: Vec<Crossings>,
    /// Edges of the averaged signal.
    pub mean_crossings: Crossings,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CycleProfile {
    pub n_cycles: usize,
    /// Percent of cycle for each grid point.
    pub grid: Vec<f64>,
    pub cycle_lengths_ms: Vec<f64>,
    /// Grid points every cycle was rotated by to align peak retraction.
    pub shift: usize,
    pub signals: Vec<SignalProfile>,
}

impl CycleProfile {
    pub fn signal(&self, name: &str) -> Option<&SignalProfile> {
        self.signals.iter().find(|s| s.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NormalizeOptions {
    /// Rotate cycles so the mean minimum of `x` lands at this % of cycle.
    pub align_peak_retraction: Option<f64>,
}

fn rotate(grid: &mut [f64; GRID_POINTS], shift: usize) {
    let period = GRID_POINTS - 1;
    grid[..period].rotate_right(shift % period);
    grid[period] = grid[0];
}

fn argmin(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |best, i| if v[i] < v[best] { i } else { best })
}

fn argmax(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |best, i| if v[i] > v[best] { i } else { best })
}

/// Population mean and standard deviation (Welford), exact for identical
/// inputs.
fn mean_std(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for v in values {
        n += 1.0;
        let delta = v - mean;
        mean += delta / n;
        m2 += delta * (v - mean);
    }
    (mean, if n > 0.0 { sqrt(m2 / n) } else { 0.0 })
}

pub fn normalize_average(
    trace: &Trace,
    cycles: &[CycleBounds],
    opts: &NormalizeOptions,
) -> Result<CycleProfile, Error> {
    if cycles.is_empty() {
        return Err(Error::Analysis("need at least one cycle"));
    }
    if cycles.iter().any(|c| c.is_empty() || c.end >= trace.len()) {
        return Err(Error::Analysis("cycle bounds outside trace"));
    }
    let n = cycles.len();
    let series = |id: SignalId, c: CycleBounds| -> Vec<f64> {
        trace.records[c.start..=c.end].iter().map(|r| id.value(r)).collect()
    };
    let resampled = |id: SignalId| -> Vec<[f64; GRID_POINTS]> {
        cycles
            .iter()
            .map(|&c| {
                let s = series(id, c);
                resample_cycle(&s, CycleBounds { start: 0, end: c.len() })
            })
            .collect()
    };

    let period = GRID_POINTS - 1;
    let shift = match opts.align_peak_retraction {
        Some(target) => {
            let xs = resampled(SignalId::X);
            let mean_x: Vec<f64> = (0..period).map(|g| xs.iter().map(|c| c[g]).sum::<f64>() / n as f64).collect();
            let target = (target.clamp(0.0, 100.0) * period as f64 / 100.0) as usize % period;
            (target + period - argmin(&mean_x)) % period
        }
        None => 0,
    };

    let mut signals = Vec::new();
    for id in SignalId::all() {
        let mut per_cycle = resampled(id);
        if shift != 0 {
            per_cycle.iter_mut().for_each(|g| rotate(g, shift));
        }
        let (mean, std): (Vec<f64>, Vec<f64>) =
            (0..GRID_POINTS).map(|g| mean_std(per_cycle.iter().map(|c| c[g]))).unzip();
        let crossings = if id.is_boolean() {
            cycles
                .iter()
                .map(|&c| {
                    let mut s = series(id, c);
                    if shift != 0 {
                        let len = s.len() - 1;
                        let ticks = (shift * len).div_ceil(period) % len.max(1);
                        s[..len].rotate_right(ticks);
                        s[len] = s[0];
                    }
                    edge_phases(&s)
                })
                .collect()
        } else {
            Vec::new()
        };
        let mean_crossings = if id.is_boolean() { grid_crossings(&mean) } else { Crossings::default() };
        signals.push(SignalProfile { name: id.name(), boolean: id.is_boolean(), mean, std, crossings, mean_crossings });
    }

    Ok(CycleProfile {
        n_cycles: n,
        grid: (0..GRID_POINTS).map(|g| g as f64).collect(),
        cycle_lengths_ms: cycles.iter().map(|c| c.len() as f64 * trace.dt_ms).collect(),
        shift,
        signals,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", content = "value", rename_all = "snake_case"))]
pub enum EdgeJitter {
    /// No cycle shows this edge.
    Absent,
    /// max - min edge phase across cycles, % cycle.
    Range(f64),
    /// Edge present in only some cycles.
    Partial { cycles_with_edge: usize },
}

impl EdgeJitter {
    fn from_phases(phases: &[Option<f64>]) -> Self {
        let present: Vec<f64> = phases.iter().flatten().copied().collect();
        if present.is_empty() {
            EdgeJitter::Absent
        } else if present.len() < phases.len() {
            EdgeJitter::Partial { cycles_with_edge: present.len() }
        } else {
            let lo = present.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = present.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            EdgeJitter::Range(hi - lo)
        }
    }

    /// Partial edges count as a full-cycle spread.
    pub fn spread(self) -> Option<f64> {
        match self {
            EdgeJitter::Absent => None,
            EdgeJitter::Range(r) => Some(r),
            EdgeJitter::Partial { .. } => Some(100.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SignalJitter {
    pub name: String,
    pub on: EdgeJitter,
    pub off: EdgeJitter,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct JitterReport {
    pub signals: Vec<SignalJitter>,
    /// Largest spread over every present edge; `None` when no edges exist.
    pub max: Option<f64>,
}

impl JitterReport {
    pub fn signal(&self, name: &str) -> Option<&SignalJitter> {
        self.signals.iter().find(|s| s.name == name)
    }
}

pub fn timing_jitter(profile: &CycleProfile) -> Result<JitterReport, Error> {
    if profile.n_cycles < 2 {
        return Err(Error::Analysis("timing jitter needs at least two cycles"));
    }
    let signals: Vec<SignalJitter> = profile
        .signals
        .iter()
        .filter(|s| s.boolean)
        .map(|s| {
            let on: Vec<Option<f64>> = s.crossings.iter().map(|c| c.on).collect();
            let off: Vec<Option<f64>> = s.crossings.iter().map(|c| c.off).collect();
            SignalJitter { name: s.name.clone(), on: EdgeJitter::from_phases(&on), off: EdgeJitter::from_phases(&off) }
        })
        .collect();
    let max = signals
        .iter()
        .flat_map(|s| [s.on.spread(), s.off.spread()])
        .flatten()
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
    Ok(JitterReport { signals, max })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Checkpoint {
    pub phase_pct: f64,
    pub x: f64,
    pub theta_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct KinematicReport {
    pub peak_protraction: Checkpoint,
    pub mid_retraction: Checkpoint,
    pub peak_retraction: Checkpoint,
    pub rotation_amplitude_deg: f64,
    pub protraction_swing_deg: f64,
    pub retraction_swing_deg: f64,
    pub tolerance_deg: f64,
    pub rotation_ok: bool,
    /// x falls from peak protraction through mid retraction to peak retraction.
    pub ordering_ok: bool,
    pub degenerate: bool,
}

pub const ROTATION_TARGET_DEG: f64 = 90.0;

pub fn kinematic_checkpoints(profile: &CycleProfile, tolerance_deg: f64) -> Result<KinematicReport, Error> {
    let x = &profile.signal("x").ok_or(Error::Analysis("profile has no x signal"))?.mean;
    let theta = &profile.signal("theta_deg").ok_or(Error::Analysis("profile has no theta signal"))?.mean;
    let period = GRID_POINTS - 1;
    let cyc = &x[..period];

    let i_max = argmax(cyc);
    let i_min = argmin(cyc);
    let span = (i_min + period - i_max) % period;
    let i_mid = (i_max + span / 2) % period;
    let at = |i: usize| Checkpoint { phase_pct: profile.grid[i], x: x[i], theta_deg: theta[i] };

    let range = cyc[i_max] - cyc[i_min];
    let non_decreasing = x.windows(2).all(|w| w[1] >= w[0]);
    let non_increasing = x.windows(2).all(|w| w[1] <= w[0]);
    let degenerate = range < 1e-6 || non_decreasing || non_increasing;

    let t_max_i = argmax(theta);
    let t_max = theta[t_max_i];
    let before = theta[..=t_max_i].iter().copied().fold(f64::INFINITY, f64::min);
    let after = theta[t_max_i..].iter().copied().fold(f64::INFINITY, f64::min);
    let t_min = theta.iter().copied().fold(f64::INFINITY, f64::min);
    let protraction_swing = t_max - before;
    let retraction_swing = t_max - after;
    let within = |s: f64| (s - ROTATION_TARGET_DEG).abs() <= tolerance_deg;

    // allow small non-monotone wiggle on the way down (1% of the x range)
    let slack = 0.01 * range.max(1e-12);
    let mut ordering_ok = span > 0;
    let mut lowest = cyc[i_max];
    for step in 1..=span {
        let v = cyc[(i_max + step) % period];
        if v > lowest + slack {
            ordering_ok = false;
        }
        lowest = lowest.min(v);
    }

    Ok(KinematicReport {
        peak_protraction: at(i_max),
        mid_retraction: at(i_mid),
        peak_retraction: at(i_min),
        rotation_amplitude_deg: t_max - t_min,
        protraction_swing_deg: protraction_swing,
        retraction_swing_deg: retraction_swing,
        tolerance_deg,
        rotation_ok: !degenerate && within(protraction_swing) && within(retraction_swing),
        ordering_ok: !degenerate && ordering_ok,
        degenerate,
    })
}

/// Ingested length gained over each cycle, mm.
pub fn net_transport(trace: &Trace, cycles: &[CycleBounds]) -> Vec<f64> {
    cycles.iter().map(|c| trace.records[c.end].food.ingested_mm - trace.records[c.start].food.ingested_mm).collect()
}

/// Interpolation error bound for a resample/denormalize round trip: the
/// largest per-tick slope times the grid spacing in ticks.
pub fn round_trip_bound(values: &[f64], len: usize) -> f64 {
    let slope = values.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    slope * ceil(len as f64 / (GRID_POINTS - 1) as f64)
}
