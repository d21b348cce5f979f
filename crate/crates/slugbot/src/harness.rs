//! Analysis pipeline over recorded traces, profile documents and goldens.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use slugbot_core::analysis::{
    kinematic_checkpoints, last_cycles, net_transport, normalize_average, segment_cycles, timing_jitter, CycleBounds,
    CycleProfile, JitterReport, KinematicReport, NormalizeOptions,
};
use slugbot_core::neural::Unit;
use slugbot_core::{run_scenario, SimConfig, Trace};

use crate::error::{AppError, Result};

/// Cycles averaged per profile, counted back from the end of the trace.
pub const DEFAULT_CYCLES: usize = 8;
pub const ROTATION_TOLERANCE_DEG: f64 = 10.0;
/// Phase at which peak retraction is placed for the kinematic profile.
pub const KINEMATIC_ALIGNMENT_PCT: f64 = 0.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub cycles: usize,
    pub align_peak_retraction: Option<f64>,
    pub tolerance_deg: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self { cycles: DEFAULT_CYCLES, align_peak_retraction: None, tolerance_deg: ROTATION_TOLERANCE_DEG }
    }
}

/// Exported profile: the averaged cycle plus every statistic derived from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileDocument {
    pub complete_cycles: usize,
    pub analyzed: Vec<CycleBounds>,
    pub align_peak_retraction: Option<f64>,
    pub transport_mm: Vec<f64>,
    pub jitter: JitterReport,
    pub kinematics: KinematicReport,
    pub profile: CycleProfile,
}

pub fn analyze_trace(trace: &Trace, opts: &AnalysisOptions) -> Result<ProfileDocument> {
    let seg = segment_cycles(trace);
    if let Some(w) = seg.warning {
        return Err(AppError::Analysis(w.to_string()));
    }
    let cycles = last_cycles(&seg.cycles, opts.cycles);
    let norm = NormalizeOptions { align_peak_retraction: opts.align_peak_retraction };
    let profile = normalize_average(trace, &cycles, &norm)?;
    let jitter = timing_jitter(&profile)?;
    let kinematics = kinematic_checkpoints(&profile, opts.tolerance_deg)?;
    Ok(ProfileDocument {
        complete_cycles: seg.cycles.len(),
        transport_mm: net_transport(trace, &cycles),
        analyzed: cycles,
        align_peak_retraction: opts.align_peak_retraction,
        jitter,
        kinematics,
        profile,
    })
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| AppError::json(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| AppError::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| AppError::json(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalDiff {
    pub name: String,
    pub max_abs_mean_diff: f64,
    /// B minus A, % of cycle, for the averaged signal's edges.
    pub on_shift_pct: Option<f64>,
    pub off_shift_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub n_cycles: [usize; 2],
    pub mean_cycle_ms: [f64; 2],
    pub max_jitter_pct: [Option<f64>; 2],
    pub protraction_swing_deg: [f64; 2],
    pub retraction_swing_deg: [f64; 2],
    pub peak_retraction_phase_pct: [f64; 2],
    pub signals: Vec<SignalDiff>,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

pub fn compare(a: &ProfileDocument, b: &ProfileDocument) -> Comparison {
    let signals = a
        .profile
        .signals
        .iter()
        .filter_map(|sa| {
            let sb = b.profile.signal(&sa.name)?;
            let max_abs_mean_diff = sa.mean.iter().zip(&sb.mean).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            let shift = |x: Option<f64>, y: Option<f64>| Some(y? - x?);
            Some(SignalDiff {
                name: sa.name.clone(),
                max_abs_mean_diff,
                on_shift_pct: shift(sa.mean_crossings.on, sb.mean_crossings.on),
                off_shift_pct: shift(sa.mean_crossings.off, sb.mean_crossings.off),
            })
        })
        .collect();
    Comparison {
        n_cycles: [a.profile.n_cycles, b.profile.n_cycles],
        mean_cycle_ms: [mean(&a.profile.cycle_lengths_ms), mean(&b.profile.cycle_lengths_ms)],
        max_jitter_pct: [a.jitter.max, b.jitter.max],
        protraction_swing_deg: [a.kinematics.protraction_swing_deg, b.kinematics.protraction_swing_deg],
        retraction_swing_deg: [a.kinematics.retraction_swing_deg, b.kinematics.retraction_swing_deg],
        peak_retraction_phase_pct: [a.kinematics.peak_retraction.phase_pct, b.kinematics.peak_retraction.phase_pct],
        signals,
    }
}

/// Values pinned from the shipped default configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Golden {
    pub complete_cycles: usize,
    pub cycle_lengths_ms: Vec<f64>,
    pub transport_mm: Vec<f64>,
    pub max_jitter_pct: Option<f64>,
    pub ru3_ever_on: bool,
    pub kinematics: KinematicReport,
}

/// Timing statistics from the unshifted profile (cycles start at B31/B32
/// onset); kinematics from the profile aligned on peak retraction.
pub fn golden_from_trace(trace: &Trace) -> Result<Golden> {
    let timing = analyze_trace(trace, &AnalysisOptions::default())?;
    let kin = analyze_trace(
        trace,
        &AnalysisOptions { align_peak_retraction: Some(KINEMATIC_ALIGNMENT_PCT), ..Default::default() },
    )?;
    Ok(Golden {
        complete_cycles: timing.complete_cycles,
        cycle_lengths_ms: timing.profile.cycle_lengths_ms.clone(),
        transport_mm: timing.transport_mm.clone(),
        max_jitter_pct: timing.jitter.max,
        ru3_ever_on: trace.records.iter().any(|r| r.units[Unit::Ru3]),
        kinematics: kin.kinematics,
    })
}

pub fn default_golden() -> Result<Golden> {
    golden_from_trace(&run_scenario(&SimConfig::default())?)
}

pub fn golden_path() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/default_swallow.json")
}
