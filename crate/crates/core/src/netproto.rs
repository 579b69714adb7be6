//! JSON-over-UDP wire format.
//!
//! Every datagram is one UTF-8 JSON object:
//! `{"version":1,"kind":"...","seq":N,"timestamp_ms":T,"payload":{...}}`.
//! Decoding is strict: unknown top-level fields, versions and kinds are
//! rejected with a reason. Telemetry that does not fit one datagram is split
//! across parts that share `snapshot_tick` and carry `part`/`total`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::command::{Command, Mode, SeqWindow};
use crate::controller::{Activity, Echo};
use crate::engine::{DispatchCounters, Engine};
use crate::error::{Error, Result};
use crate::formation::FormationKind;
use crate::geom::Vec3;
use crate::gesture::KeypointFrame;

pub const PROTOCOL_VERSION: u32 = 1;
pub const MAX_DATAGRAM: usize = 1400;
pub const DEFAULT_COMMAND_PORT: u16 = 47801;
pub const DEFAULT_TELEMETRY_PORT: u16 = 47802;
pub const DEFAULT_KEYPOINT_PORT: u16 = 47803;
pub const DEFAULT_TELEMETRY_HZ: f64 = 10.0;
pub const DEDUPE_WINDOW: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Command,
    Telemetry,
    Keypoints,
    Ack,
    Echo,
}

impl Kind {
    pub const ALL: [Kind; 5] = [Kind::Command, Kind::Telemetry, Kind::Keypoints, Kind::Ack, Kind::Echo];

    pub fn name(&self) -> &'static str {
        match self {
            Kind::Command => "command",
            Kind::Telemetry => "telemetry",
            Kind::Keypoints => "keypoints",
            Kind::Ack => "ack",
            Kind::Echo => "echo",
        }
    }

    pub fn parse(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UavTelemetry {
    pub id: u32,
    pub position: Vec3,
    pub velocity: Vec3,
    pub group: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupTelemetry {
    pub id: u32,
    pub size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formation: Option<FormationKind>,
    pub activity: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<String>,
    /// Set while tracking: whether the target has been detected.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub engaged: Option<bool>,
    /// True while a formation transition is under way.
    pub transitioning: bool,
}

/// Gesture front-end status shown to the operator.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecognitionStatus {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_decision: Option<String>,
    pub cooldown_frames: u64,
    pub buffered: usize,
    pub below_threshold: u64,
    pub blanked: u64,
    pub unmatched: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TelemetryPayload {
    pub snapshot_tick: u64,
    pub time_s: f64,
    /// Total swarm size, across all parts.
    pub size: usize,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formation: Option<FormationKind>,
    pub collisions: u64,
    pub groups: Vec<GroupTelemetry>,
    pub uavs: Vec<UavTelemetry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_echo: Option<Echo>,
    pub counters: DispatchCounters,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recognition: Option<RecognitionStatus>,
    /// 1-based part number and part count.
    pub part: u32,
    pub total: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AckStatus {
    Received,
    Duplicate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AckPayload {
    pub seq: u64,
    pub status: AckStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Payload {
    Command(Command),
    Telemetry(TelemetryPayload),
    Keypoints(KeypointFrame),
    Ack(AckPayload),
    Echo(Echo),
}

impl Payload {
    pub fn kind(&self) -> Kind {
        match self {
            Payload::Command(_) => Kind::Command,
            Payload::Telemetry(_) => Kind::Telemetry,
            Payload::Keypoints(_) => Kind::Keypoints,
            Payload::Ack(_) => Kind::Ack,
            Payload::Echo(_) => Kind::Echo,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WireMessage {
    pub version: u32,
    pub seq: u64,
    pub timestamp_ms: u64,
    pub payload: Payload,
}

impl WireMessage {
    pub fn new(seq: u64, timestamp_ms: u64, payload: Payload) -> Self {
        Self {
            version: PROTOCOL_VERSION,
            seq,
            timestamp_ms,
            payload,
        }
    }

    pub fn kind(&self) -> Kind {
        self.payload.kind()
    }
}

#[derive(Serialize)]
struct Envelope<'a> {
    version: u32,
    kind: Kind,
    seq: u64,
    timestamp_ms: u64,
    payload: &'a Payload,
}

fn has_null(v: &Value) -> bool {
    match v {
        Value::Null => true,
        Value::Array(a) => a.iter().any(has_null),
        Value::Object(o) => o.values().any(has_null),
        _ => false,
    }
}

/// Serializes without the size limit.
pub fn encode_unbounded(msg: &WireMessage) -> Result<Vec<u8>> {
    let env = Envelope {
        version: msg.version,
        kind: msg.kind(),
        seq: msg.seq,
        timestamp_ms: msg.timestamp_ms,
        payload: &msg.payload,
    };
    let value = serde_json::to_value(&env).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    // payloads never carry nulls, so one here is a non-finite float
    if has_null(&value) {
        return Err(Error::InvalidParameter("message contains a non-finite number".into()));
    }
    serde_json::to_vec(&env).map_err(|e| Error::InvalidParameter(e.to_string()))
}

/// One datagram; fails when the message would exceed `MAX_DATAGRAM`.
pub fn encode(msg: &WireMessage) -> Result<Vec<u8>> {
    let bytes = encode_unbounded(msg)?;
    if bytes.len() > MAX_DATAGRAM {
        return Err(Error::InvalidParameter(format!(
            "{} message is {} bytes, limit is {MAX_DATAGRAM}",
            msg.kind().name(),
            bytes.len()
        )));
    }
    Ok(bytes)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RejectReason {
    Oversize(usize),
    NotUtf8,
    MalformedJson(String),
    NotAnObject,
    MissingField(&'static str),
    UnknownField(String),
    BadField(&'static str),
    UnsupportedVersion(String),
    UnknownKind(String),
    BadPayload(String),
}

impl RejectReason {
    /// Stable short code for counters.
    pub fn code(&self) -> &'static str {
        match self {
            RejectReason::Oversize(_) => "oversize",
            RejectReason::NotUtf8 => "not_utf8",
            RejectReason::MalformedJson(_) => "malformed_json",
            RejectReason::NotAnObject => "not_an_object",
            RejectReason::MissingField(_) => "missing_field",
            RejectReason::UnknownField(_) => "unknown_field",
            RejectReason::BadField(_) => "bad_field",
            RejectReason::UnsupportedVersion(_) => "unsupported_version",
            RejectReason::UnknownKind(_) => "unknown_kind",
            RejectReason::BadPayload(_) => "bad_payload",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::Oversize(n) => write!(f, "datagram of {n} bytes exceeds {MAX_DATAGRAM}"),
            RejectReason::NotUtf8 => f.write_str("datagram is not UTF-8"),
            RejectReason::MalformedJson(e) => write!(f, "malformed JSON: {e}"),
            RejectReason::NotAnObject => f.write_str("message is not a JSON object"),
            RejectReason::MissingField(k) => write!(f, "missing field {k}"),
            RejectReason::UnknownField(k) => write!(f, "unknown field {k}"),
            RejectReason::BadField(k) => write!(f, "field {k} has the wrong type"),
            RejectReason::UnsupportedVersion(v) => write!(f, "unsupported version {v}"),
            RejectReason::UnknownKind(k) => write!(f, "unknown kind {k}"),
            RejectReason::BadPayload(e) => write!(f, "invalid payload: {e}"),
        }
    }
}

const ENVELOPE_KEYS: [&str; 5] = ["version", "kind", "seq", "timestamp_ms", "payload"];
const COMMAND_KEYS: [&str; 6] = ["seq", "issued_tick", "mode", "scope", "verb", "args"];

fn typed<T: serde::de::DeserializeOwned>(v: Value) -> std::result::Result<T, RejectReason> {
    serde_json::from_value(v).map_err(|e| RejectReason::BadPayload(e.to_string()))
}

fn decode_payload(kind: Kind, v: Value) -> std::result::Result<Payload, RejectReason> {
    Ok(match kind {
        Kind::Command => {
            let obj = v.as_object().ok_or_else(|| RejectReason::BadPayload("command must be an object".into()))?;
            if let Some(k) = obj.keys().find(|k| !COMMAND_KEYS.contains(&k.as_str())) {
                return Err(RejectReason::BadPayload(format!("unknown command field {k}")));
            }
            let cmd: Command = typed(v)?;
            cmd.validate().map_err(RejectReason::BadPayload)?;
            Payload::Command(cmd)
        }
        Kind::Telemetry => {
            let t: TelemetryPayload = typed(v)?;
            if t.part == 0 || t.part > t.total {
                return Err(RejectReason::BadPayload("part must lie in 1..=total".into()));
            }
            Payload::Telemetry(t)
        }
        Kind::Keypoints => {
            let f: KeypointFrame = typed(v)?;
            f.validate().map_err(|e| RejectReason::BadPayload(e.to_string()))?;
            Payload::Keypoints(f)
        }
        Kind::Ack => Payload::Ack(typed(v)?),
        Kind::Echo => Payload::Echo(typed(v)?),
    })
}

/// Parses and validates one datagram. Duplicate detection is separate, see
/// [`Receiver`].
pub fn decode(bytes: &[u8]) -> std::result::Result<WireMessage, RejectReason> {
    if bytes.len() > MAX_DATAGRAM {
        return Err(RejectReason::Oversize(bytes.len()));
    }
    let text = std::str::from_utf8(bytes).map_err(|_| RejectReason::NotUtf8)?;
    let value: Value = serde_json::from_str(text).map_err(|e| RejectReason::MalformedJson(e.to_string()))?;
    let Value::Object(mut obj) = value else {
        return Err(RejectReason::NotAnObject);
    };
    if let Some(k) = obj.keys().find(|k| !ENVELOPE_KEYS.contains(&k.as_str())) {
        return Err(RejectReason::UnknownField(k.clone()));
    }
    let version = obj.get("version").ok_or(RejectReason::MissingField("version"))?;
    if version.as_u64() != Some(u64::from(PROTOCOL_VERSION)) {
        return Err(RejectReason::UnsupportedVersion(version.to_string()));
    }
    let kind = match obj.get("kind").ok_or(RejectReason::MissingField("kind"))? {
        Value::String(s) => Kind::parse(s).ok_or_else(|| RejectReason::UnknownKind(s.clone()))?,
        other => return Err(RejectReason::UnknownKind(other.to_string())),
    };
    let seq = obj
        .get("seq")
        .ok_or(RejectReason::MissingField("seq"))?
        .as_u64()
        .ok_or(RejectReason::BadField("seq"))?;
    let timestamp_ms = obj
        .get("timestamp_ms")
        .ok_or(RejectReason::MissingField("timestamp_ms"))?
        .as_u64()
        .ok_or(RejectReason::BadField("timestamp_ms"))?;
    let payload = obj.remove("payload").ok_or(RejectReason::MissingField("payload"))?;
    Ok(WireMessage {
        version: PROTOCOL_VERSION,
        seq,
        timestamp_ms,
        payload: decode_payload(kind, payload)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Received {
    pub message: WireMessage,
    /// Seen before within the dedupe window; the consumer should drop it.
    pub duplicate: bool,
}

/// Decoder with per-stream duplicate detection and rejection counters.
#[derive(Debug, Clone, Default)]
pub struct Receiver {
    windows: BTreeMap<(String, Kind), SeqWindow>,
    pub rejected: BTreeMap<&'static str, u64>,
    pub duplicates: u64,
}

impl Receiver {
    pub fn new() -> Self {
        Self::default()
    }

    /// `sender` names the stream, typically the peer socket address.
    pub fn accept(&mut self, sender: &str, bytes: &[u8]) -> std::result::Result<Received, RejectReason> {
        let message = match decode(bytes) {
            Ok(m) => m,
            Err(r) => {
                *self.rejected.entry(r.code()).or_insert(0) += 1;
                return Err(r);
            }
        };
        let window = self
            .windows
            .entry((sender.to_string(), message.kind()))
            .or_insert_with(|| SeqWindow::new(DEDUPE_WINDOW));
        let duplicate = !window.insert(message.seq);
        if duplicate {
            self.duplicates += 1;
        }
        Ok(Received { message, duplicate })
    }

    pub fn rejected_total(&self) -> u64 {
        self.rejected.values().sum()
    }
}

/// Builds the telemetry payload for the current engine state, unsplit.
pub fn telemetry_snapshot(engine: &Engine, recognition: Option<RecognitionStatus>) -> TelemetryPayload {
    let world = &engine.world;
    let groups = engine
        .controller
        .groups
        .values()
        .map(|g| {
            let plan = match &g.activity {
                Activity::Formation(p) => Some(p),
                Activity::Search(r) => Some(&r.plan),
                _ => None,
            };
            GroupTelemetry {
                id: g.id,
                size: g.members.len(),
                formation: g.formation.map(|f| f.kind),
                activity: g.activity.name().to_string(),
                task: g.activity.task_name().map(str::to_string),
                engaged: match &g.activity {
                    Activity::Track(r) => Some(r.engaged),
                    _ => None,
                },
                transitioning: plan.is_some_and(|p| !p.is_complete()),
            }
        })
        .collect();
    TelemetryPayload {
        snapshot_tick: world.tick,
        time_s: world.time(),
        size: world.uavs.len(),
        mode: engine.controller.current_mode,
        formation: engine.active_formation(),
        collisions: world.metrics.collision_count,
        groups,
        uavs: world
            .uavs
            .iter()
            .map(|u| UavTelemetry {
                id: u.id,
                position: u.position,
                velocity: u.velocity,
                group: u.group_id,
            })
            .collect(),
        last_echo: engine.last_echo.clone(),
        counters: engine.counters,
        recognition,
        part: 1,
        total: 1,
    }
}

/// Splits a snapshot into datagrams of at most `MAX_DATAGRAM` bytes.
/// Groups and the recognition block travel in part 1; UAVs fill parts in
/// order. Parts take consecutive sequence numbers from `first_seq`.
pub fn encode_telemetry(snapshot: &TelemetryPayload, first_seq: u64, timestamp_ms: u64) -> Result<Vec<Vec<u8>>> {
    let mk = |part: &TelemetryPayload, seq: u64| {
        encode_unbounded(&WireMessage::new(seq, timestamp_ms, Payload::Telemetry(part.clone())))
    };
    let whole = mk(snapshot, first_seq)?;
    if whole.len() <= MAX_DATAGRAM {
        return Ok(vec![whole]);
    }
    let mut parts: Vec<TelemetryPayload> = Vec::new();
    let mut current = TelemetryPayload {
        uavs: Vec::new(),
        ..snapshot.clone()
    };
    for u in &snapshot.uavs {
        current.uavs.push(u.clone());
        if mk(&current, first_seq + parts.len() as u64)?.len() > MAX_DATAGRAM {
            current.uavs.pop();
            if current.uavs.is_empty() {
                return Err(Error::InvalidParameter("telemetry header alone exceeds the datagram limit".into()));
            }
            let next = TelemetryPayload {
                groups: Vec::new(),
                recognition: None,
                last_echo: None,
                uavs: vec![u.clone()],
                ..snapshot.clone()
            };
            parts.push(std::mem::replace(&mut current, next));
        }
    }
    parts.push(current);
    let total = parts.len() as u32;
    parts
        .iter_mut()
        .enumerate()
        .map(|(i, p)| {
            p.part = i as u32 + 1;
            p.total = total;
            let bytes = mk(p, first_seq + i as u64)?;
            if bytes.len() > MAX_DATAGRAM {
                return Err(Error::InvalidParameter("telemetry part exceeds the datagram limit".into()));
            }
            Ok(bytes)
        })
        .collect()
}

/// Collects telemetry parts and yields whole snapshots.
#[derive(Debug, Clone, Default)]
pub struct TelemetryAssembler {
    pending: BTreeMap<u64, BTreeMap<u32, TelemetryPayload>>,
}

impl TelemetryAssembler {
    /// Pending snapshots older than this many ticks behind the newest are
    /// discarded.
    pub const HORIZON: u64 = 500;

    pub fn push(&mut self, part: TelemetryPayload) -> Option<TelemetryPayload> {
        if part.total == 1 {
            return Some(part);
        }
        let tick = part.snapshot_tick;
        let total = part.total;
        let entry = self.pending.entry(tick).or_default();
        entry.insert(part.part, part);
        let newest = *self.pending.keys().next_back().unwrap_or(&tick);
        self.pending.retain(|t, _| t + Self::HORIZON >= newest);
        let entry = self.pending.get(&tick)?;
        let have: BTreeSet<u32> = entry.keys().copied().collect();
        if have != (1..=total).collect() {
            return None;
        }
        let parts = self.pending.remove(&tick)?;
        let mut it = parts.into_values();
        let mut whole = it.next()?;
        for p in it {
            whole.uavs.extend(p.uavs);
        }
        whole.part = 1;
        whole.total = 1;
        Some(whole)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::command::Action;

    fn hold(seq: u64) -> WireMessage {
        WireMessage::new(seq, 0, Payload::Command(Command::new(seq, 0, Action::Hold {})))
    }

    #[test]
    fn minimal_command_bytes() {
        let bytes = encode(&hold(1)).unwrap();
        assert_eq!(
            std::str::from_utf8(&bytes).unwrap(),
            r#"{"version":1,"kind":"command","seq":1,"timestamp_ms":0,"payload":{"seq":1,"issued_tick":0,"mode":"Safety","scope":"Global","verb":"hold","args":{}}}"#
        );
        assert_eq!(decode(&bytes).unwrap(), hold(1));
    }

    #[test]
    fn rejections_have_reasons() {
        assert_eq!(decode(b"{\"version\":1"), Err(RejectReason::MalformedJson("EOF while parsing an object at line 1 column 12".into())));
        assert_eq!(decode(b"[1]"), Err(RejectReason::NotAnObject));
        assert_eq!(decode(&[0xff, 0xfe]), Err(RejectReason::NotUtf8));
        let v2 = br#"{"version":2,"kind":"ack","seq":1,"timestamp_ms":0,"payload":{"seq":1,"status":"received"}}"#;
        assert_eq!(decode(v2), Err(RejectReason::UnsupportedVersion("2".into())));
        let k = br#"{"version":1,"kind":"video","seq":1,"timestamp_ms":0,"payload":{}}"#;
        assert_eq!(decode(k), Err(RejectReason::UnknownKind("video".into())));
        let extra = br#"{"version":1,"kind":"ack","seq":1,"timestamp_ms":0,"payload":{"seq":1,"status":"received"},"x":0}"#;
        assert_eq!(decode(extra), Err(RejectReason::UnknownField("x".into())));
        let verb = br#"{"version":1,"kind":"command","seq":1,"timestamp_ms":0,"payload":{"seq":1,"mode":"Safety","scope":"Global","verb":"fly","args":{}}}"#;
        assert!(matches!(decode(verb), Err(RejectReason::BadPayload(_))));
        let scope = br#"{"version":1,"kind":"command","seq":1,"timestamp_ms":0,"payload":{"seq":1,"mode":"Safety","scope":"Local","verb":"hold","args":{}}}"#;
        assert!(matches!(decode(scope), Err(RejectReason::BadPayload(_))));
        assert!(matches!(decode(&vec![b' '; 1401]), Err(RejectReason::Oversize(1401))));
    }

    #[test]
    fn replay_is_flagged() {
        let mut r = Receiver::new();
        let b = encode(&hold(5)).unwrap();
        assert!(!r.accept("a", &b).unwrap().duplicate);
        assert!(r.accept("a", &b).unwrap().duplicate);
        assert!(!r.accept("b", &b).unwrap().duplicate);
        assert!(r.accept("a", b"nope").is_err());
        assert_eq!(r.rejected["malformed_json"], 1);
    }

    #[test]
    fn non_finite_numbers_refused() {
        let f = KeypointFrame {
            frame_index: 0,
            points: vec![[f64::NAN, 0.0]; 21],
            detection_confidence: 1.0,
        };
        assert!(encode(&WireMessage::new(1, 0, Payload::Keypoints(f))).is_err());
    }

    fn big_snapshot(n: u32) -> TelemetryPayload {
        TelemetryPayload {
            snapshot_tick: 42,
            time_s: 0.84,
            size: n as usize,
            mode: Mode::Formation,
            formation: Some(FormationKind::V),
            collisions: 0,
            groups: vec![],
            uavs: (0..n)
                .map(|i| UavTelemetry {
                    id: i,
                    position: Vec3::new(1.0 / 3.0 + i as f64, -123.456789, 10.0 / 7.0),
                    velocity: Vec3::new(0.1 / 3.0, 2.0 / 3.0, -1.0 / 9.0),
                    group: 1,
                })
                .collect(),
            last_echo: None,
            counters: DispatchCounters::default(),
            recognition: None,
            part: 1,
            total: 1,
        }
    }

    #[test]
    fn telemetry_chunks_and_reassembles() {
        let snap = big_snapshot(64);
        let grams = encode_telemetry(&snap, 100, 7).unwrap();
        assert!(grams.len() > 1);
        let mut asm = TelemetryAssembler::default();
        let mut out = None;
        for (i, g) in grams.iter().enumerate().rev() {
            assert!(g.len() <= MAX_DATAGRAM);
            let m = decode(g).unwrap();
            assert_eq!(m.seq, 100 + i as u64);
            let Payload::Telemetry(t) = m.payload else { panic!() };
            out = asm.push(t).or(out);
        }
        assert_eq!(out.unwrap(), snap);
    }
}
