//! Wire messages of the telemetry service: one JSON object per line.
//!
//! Client to server: `{"cmd": <name>, "id": <any>, ...arguments}`.
//! Server to client: `{"frame": {...}}`, `{"ok": <name>, "id": ...}` or
//! `{"err": <message>, "id": ...}`. See `docs/protocol.md`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use slugbot_core::neural::{Phase, Unit};
use slugbot_core::plant::ChannelRole;
use slugbot_core::stimulus::{BehaviorMode, StimulusField, StimulusState};
use slugbot_core::{SimConfig, TraceRecord};

pub const MIN_SPEED: f64 = 0.1;
pub const MAX_SPEED: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "cmd", rename_all = "snake_case", deny_unknown_fields)]
pub enum CommandKind {
    SetStimulus { field: StimulusField, value: bool },
    Start,
    Pause,
    Reset,
    SetSpeed { speed: f64 },
    GetConfig,
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::SetStimulus { .. } => "set_stimulus",
            Self::Start => "start",
            Self::Pause => "pause",
            Self::Reset => "reset",
            Self::SetSpeed { .. } => "set_speed",
            Self::GetConfig => "get_config",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Command {
    pub id: Value,
    pub kind: CommandKind,
}

/// A rejected line, with whatever request id could be recovered.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolError {
    pub id: Value,
    pub message: String,
}

pub fn parse_command(line: &str) -> Result<Command, ProtocolError> {
    let fail = |id: Value, message: String| ProtocolError { id, message };
    let value: Value = serde_json::from_str(line).map_err(|e| fail(Value::Null, format!("invalid JSON: {e}")))?;
    let Value::Object(mut obj) = value else {
        return Err(fail(Value::Null, "message must be a JSON object".into()));
    };
    let id = obj.remove("id").unwrap_or(Value::Null);
    let allowed: &[&str] = match obj.get("cmd").and_then(Value::as_str) {
        Some("set_stimulus") => &["cmd", "field", "value"],
        Some("set_speed") => &["cmd", "speed"],
        _ => &["cmd"],
    };
    if let Some(extra) = obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(fail(id, format!("bad command: unknown field `{extra}`")));
    }
    let kind: CommandKind =
        serde_json::from_value(Value::Object(obj)).map_err(|e| fail(id.clone(), format!("bad command: {e}")))?;
    if let CommandKind::SetSpeed { speed } = kind {
        if !(MIN_SPEED..=MAX_SPEED).contains(&speed) {
            return Err(fail(id, format!("speed must lie in [{MIN_SPEED}, {MAX_SPEED}]")));
        }
    }
    Ok(Command { id, kind })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelFrame {
    pub role: String,
    pub setpoint: f64,
    pub pressure: f64,
}

/// Decimated snapshot of the running session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFrame {
    pub seq: u64,
    pub t_ms: f64,
    pub stimulus: StimulusState,
    pub mode: BehaviorMode,
    pub phase: Phase,
    pub units: BTreeMap<String, bool>,
    pub channels: Vec<ChannelFrame>,
    pub x: f64,
    pub theta_deg: f64,
    pub closure: f64,
    pub ingested_mm: f64,
}

impl StateFrame {
    pub fn from_record(seq: u64, r: &TraceRecord) -> Self {
        Self {
            seq,
            t_ms: r.t_ms,
            stimulus: r.stimulus,
            mode: r.mode,
            phase: r.phase,
            units: Unit::ALL.iter().map(|&u| (u.name().to_string(), r.units[u])).collect(),
            channels: r
                .channels
                .iter()
                .enumerate()
                .map(|(i, c)| ChannelFrame {
                    role: ChannelRole::for_channel(i).label().to_string(),
                    setpoint: c.setpoint,
                    pressure: c.pressure,
                })
                .collect(),
            x: r.grasper.x,
            theta_deg: r.grasper.theta_deg,
            closure: r.grasper.closure,
            ingested_mm: r.food.ingested_mm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ServerMessage {
    Frame {
        frame: StateFrame,
    },
    Ok {
        ok: String,
        id: Value,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        config: Option<Box<SimConfig>>,
    },
    Err {
        err: String,
        id: Value,
    },
}

impl ServerMessage {
    pub fn ok(cmd: &CommandKind, id: Value) -> Self {
        Self::Ok { ok: cmd.name().to_string(), id, config: None }
    }

    pub fn err(e: ProtocolError) -> Self {
        Self::Err { err: e.message, id: e.id }
    }

    pub fn is_frame(&self) -> bool {
        matches!(self, Self::Frame { .. })
    }

    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("messages serialize");
        s.push('\n');
        s
    }
}

pub fn field_names() -> Vec<&'static str> {
    StimulusField::ALL.iter().map(|f| f.name()).collect()
}
