//! Trace files: CSV, one header row, one row per tick.
//!
//! Column order is fixed:
//!
//! | group     | columns                                                              |
//! |-----------|----------------------------------------------------------------------|
//! | time      | `t_ms`                                                               |
//! | stimulus  | `mech_lips`, `chem_lips`, `mech_grasper`, `arousal`                  |
//! | state     | `mode`, `phase`                                                      |
//! | units     | `B31_B32`, `B64`, `CBI3`, `B38`, `B10`, `B43_B45`, `B44_B48_opener`, `Closer`, `RU1`, `RU2`, `RU3` |
//! | channels  | per channel in id order: `<role>_activation`, `<role>_setpoint`, `<role>_pressure`, `<role>_inlet`, `<role>_relief` |
//! | grasper   | `x`, `theta_deg`, `closure`, `aperture`                              |
//! | food      | `food_position_mm`, `grasped`, `ingested_mm`, `externally_held`      |
//! | sensors   | `tof_mm`, `imu_deg`, `force`, `x_hat`                                |
//!
//! Booleans are `0`/`1`. Floats use the shortest representation that parses
//! back to the same value, so export -> import -> export is byte-identical.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use slugbot_core::mechanics::{FoodObject, GrasperState};
use slugbot_core::neural::{Phase, Unit, UnitStates};
use slugbot_core::plant::{ChannelRole, CHANNEL_COUNT};
use slugbot_core::sim::ChannelSample;
use slugbot_core::stimulus::{BehaviorMode, StimulusField, StimulusState};
use slugbot_core::{SensorReadings, Trace, TraceRecord};

use crate::error::{AppError, Result};

const CHANNEL_FIELDS: [&str; 5] = ["activation", "setpoint", "pressure", "inlet", "relief"];

pub fn header() -> Vec<String> {
    let mut h = vec!["t_ms".to_string()];
    h.extend(StimulusField::ALL.iter().map(|f| f.name().to_string()));
    h.push("mode".into());
    h.push("phase".into());
    h.extend(Unit::ALL.iter().map(|u| u.name().to_string()));
    for id in 0..CHANNEL_COUNT {
        let role = ChannelRole::for_channel(id).label();
        h.extend(CHANNEL_FIELDS.iter().map(|f| format!("{role}_{f}")));
    }
    for c in [
        "x",
        "theta_deg",
        "closure",
        "aperture",
        "food_position_mm",
        "grasped",
        "ingested_mm",
        "externally_held",
        "tof_mm",
        "imu_deg",
        "force",
        "x_hat",
    ] {
        h.push(c.into());
    }
    h
}

fn b(v: bool) -> String {
    if v { "1" } else { "0" }.to_string()
}

fn f(v: f64) -> String {
    format!("{v}")
}

pub fn record_fields(r: &TraceRecord) -> Vec<String> {
    let mut row = Vec::with_capacity(header().len());
    row.push(f(r.t_ms));
    row.extend(StimulusField::ALL.iter().map(|&fl| b(r.stimulus.get(fl))));
    row.push(r.mode.name().to_string());
    row.push(r.phase.name().to_string());
    row.extend(Unit::ALL.iter().map(|&u| b(r.units[u])));
    for ch in &r.channels {
        row.extend([f(ch.activation), f(ch.setpoint), f(ch.pressure), b(ch.inlet_open), b(ch.relief_open)]);
    }
    let g = &r.grasper;
    row.extend([f(g.x), f(g.theta_deg), f(g.closure), f(g.aperture)]);
    let food = &r.food;
    row.extend([f(food.position_mm), b(food.grasped), f(food.ingested_mm), b(food.externally_held)]);
    let s = &r.sensors;
    row.extend([f(s.tof_distance_mm), f(s.imu_angle_deg), f(s.force_reading), f(s.x_hat)]);
    row
}

pub fn write_trace<W: Write>(trace: &Trace, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header())?;
    for r in &trace.records {
        w.write_record(record_fields(r))?;
    }
    w.flush().map_err(|e| AppError::io("<trace>", e))?;
    Ok(())
}

pub fn write_trace_file(trace: &Trace, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| AppError::io(path, e))?;
    write_trace(trace, BufWriter::new(file))
}

struct Fields<'a> {
    rec: &'a csv::StringRecord,
    next: usize,
    line: u64,
}

impl<'a> Fields<'a> {
    fn err(&self, message: String) -> AppError {
        AppError::Trace { line: self.line, message }
    }

    fn raw(&mut self) -> Result<&'a str> {
        let i = self.next;
        self.next += 1;
        self.rec.get(i).ok_or_else(|| self.err(format!("missing column {i}")))
    }

    fn f64(&mut self) -> Result<f64> {
        let s = self.raw()?;
        s.parse().map_err(|_| self.err(format!("column {}: bad number {s:?}", self.next - 1)))
    }

    fn bool(&mut self) -> Result<bool> {
        match self.raw()? {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(self.err(format!("column {}: expected 0 or 1, got {other:?}", self.next - 1))),
        }
    }
}

fn parse_record(rec: &csv::StringRecord, line: u64) -> Result<TraceRecord> {
    let mut c = Fields { rec, next: 0, line };
    let t_ms = c.f64()?;
    let mut stimulus = StimulusState::default();
    for fl in StimulusField::ALL {
        stimulus.set(fl, c.bool()?);
    }
    let mode_s = c.raw()?;
    let mode: BehaviorMode = mode_s.parse().map_err(|_| c.err(format!("unknown mode {mode_s:?}")))?;
    let phase_s = c.raw()?;
    let phase = Phase::from_name(phase_s).ok_or_else(|| c.err(format!("unknown phase {phase_s:?}")))?;
    let mut units = UnitStates::default();
    for u in Unit::ALL {
        units[u] = c.bool()?;
    }
    let mut channels = [ChannelSample::default(); CHANNEL_COUNT];
    for ch in &mut channels {
        *ch = ChannelSample {
            activation: c.f64()?,
            setpoint: c.f64()?,
            pressure: c.f64()?,
            inlet_open: c.bool()?,
            relief_open: c.bool()?,
        };
    }
    let grasper = GrasperState { x: c.f64()?, theta_deg: c.f64()?, closure: c.f64()?, aperture: c.f64()? };
    let food =
        FoodObject { position_mm: c.f64()?, grasped: c.bool()?, ingested_mm: c.f64()?, externally_held: c.bool()? };
    let sensors =
        SensorReadings { tof_distance_mm: c.f64()?, imu_angle_deg: c.f64()?, force_reading: c.f64()?, x_hat: c.f64()? };
    Ok(TraceRecord { t_ms, stimulus, mode, phase, units, channels, grasper, food, sensors })
}

pub fn read_trace<R: Read>(input: R) -> Result<Trace> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let expected = header();
    let got = r.headers()?.clone();
    if got.len() != expected.len() || got.iter().zip(&expected).any(|(a, b)| a != b) {
        return Err(AppError::Trace { line: 1, message: "header does not match the trace schema".into() });
    }
    let mut records: Vec<TraceRecord> = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec?;
        let parsed = parse_record(&rec, line)?;
        if let Some(prev) = records.last() {
            if parsed.t_ms <= prev.t_ms {
                return Err(AppError::Trace { line, message: "t_ms must be strictly increasing".into() });
            }
        }
        records.push(parsed);
    }
    let dt_ms = match records.as_slice() {
        [a, b, ..] => b.t_ms - a.t_ms,
        _ => 0.0,
    };
    Ok(Trace { dt_ms, records })
}

pub fn read_trace_file(path: &Path) -> Result<Trace> {
    let file = File::open(path).map_err(|e| AppError::io(path, e))?;
    read_trace(std::io::BufReader::new(file))
}

pub fn trace_to_bytes(trace: &Trace) -> Vec<u8> {
    let mut buf = Vec::new();
    write_trace(trace, &mut buf).expect("writing to memory cannot fail");
    buf
}

#[cfg(test)]
mod tests {
    use super::*;
    use slugbot_core::{run_scenario, SimConfig};

    fn short_trace() -> Trace {
        let mut cfg = SimConfig::default();
        cfg.scenario.duration_s = 3.0;
        run_scenario(&cfg).unwrap()
    }

    #[test]
    fn header_width_matches_rows() {
        let t = short_trace();
        assert_eq!(header().len(), 1 + 4 + 2 + 11 + 50 + 12);
        assert_eq!(record_fields(&t.records[0]).len(), header().len());
    }

    #[test]
    fn round_trip_is_exact() {
        let t = short_trace();
        let bytes = trace_to_bytes(&t);
        let back = read_trace(bytes.as_slice()).unwrap();
        assert_eq!(back.records, t.records);
        assert_eq!(trace_to_bytes(&back), bytes);
    }

    #[test]
    fn rejects_foreign_header() {
        let err = read_trace("a,b\n1,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, AppError::Trace { line: 1, .. }));
    }

    #[test]
    fn bad_cell_reports_line() {
        let t = short_trace();
        let text = String::from_utf8(trace_to_bytes(&t)).unwrap();
        let broken = text.replacen("Swallow", "Gulp", 1);
        let err = read_trace(broken.as_bytes()).unwrap_err();
        assert!(matches!(err, AppError::Trace { line: 2, .. }), "{err}");
    }
}
