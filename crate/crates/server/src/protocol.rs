//! Wire messages. One JSON object per line:
//! `{"protocol":1,"kind":"...","session":"s1","seq":7,"payload":{...}}`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use marll_core::convergence::ConvergenceReason;
use marll_core::params::Params;
use marll_core::rewards::RewardSpec;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kind {
    #[serde(rename = "session.create")]
    SessionCreate,
    #[serde(rename = "session.created")]
    SessionCreated,
    #[serde(rename = "frame")]
    Frame,
    #[serde(rename = "control.pause")]
    ControlPause,
    #[serde(rename = "control.resume")]
    ControlResume,
    #[serde(rename = "control.step")]
    ControlStep,
    #[serde(rename = "node.lock")]
    NodeLock,
    #[serde(rename = "node.unlock")]
    NodeUnlock,
    #[serde(rename = "node.move")]
    NodeMove,
    #[serde(rename = "param.set")]
    ParamSet,
    #[serde(rename = "session.reset")]
    SessionReset,
    #[serde(rename = "session.close")]
    SessionClose,
    #[serde(rename = "session.closed")]
    SessionClosed,
    #[serde(rename = "session.done")]
    SessionDone,
    #[serde(rename = "error")]
    Error,
    #[serde(rename = "ping")]
    Ping,
    #[serde(rename = "pong")]
    Pong,
}

impl Kind {
    pub const ALL: [Kind; 17] = [
        Kind::SessionCreate,
        Kind::SessionCreated,
        Kind::Frame,
        Kind::ControlPause,
        Kind::ControlResume,
        Kind::ControlStep,
        Kind::NodeLock,
        Kind::NodeUnlock,
        Kind::NodeMove,
        Kind::ParamSet,
        Kind::SessionReset,
        Kind::SessionClose,
        Kind::SessionClosed,
        Kind::SessionDone,
        Kind::Error,
        Kind::Ping,
        Kind::Pong,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::SessionCreate => "session.create",
            Kind::SessionCreated => "session.created",
            Kind::Frame => "frame",
            Kind::ControlPause => "control.pause",
            Kind::ControlResume => "control.resume",
            Kind::ControlStep => "control.step",
            Kind::NodeLock => "node.lock",
            Kind::NodeUnlock => "node.unlock",
            Kind::NodeMove => "node.move",
            Kind::ParamSet => "param.set",
            Kind::SessionReset => "session.reset",
            Kind::SessionClose => "session.close",
            Kind::SessionClosed => "session.closed",
            Kind::SessionDone => "session.done",
            Kind::Error => "error",
            Kind::Ping => "ping",
            Kind::Pong => "pong",
        }
    }

    /// Kinds a client may send.
    pub fn is_request(self) -> bool {
        matches!(
            self,
            Kind::SessionCreate
                | Kind::ControlPause
                | Kind::ControlResume
                | Kind::ControlStep
                | Kind::NodeLock
                | Kind::NodeUnlock
                | Kind::NodeMove
                | Kind::ParamSet
                | Kind::SessionReset
                | Kind::SessionClose
                | Kind::Ping
        )
    }

    /// Requests addressed to an existing session.
    pub fn is_session_scoped(self) -> bool {
        self.is_request() && !matches!(self, Kind::SessionCreate | Kind::Ping)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Kind::ALL.into_iter().find(|k| k.as_str() == s).ok_or(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub protocol: u32,
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<String>,
    #[serde(default)]
    pub seq: u64,
    #[serde(default)]
    pub payload: Value,
}

impl Message {
    pub fn new(kind: Kind, session: Option<String>, seq: u64, payload: impl Serialize) -> Self {
        Message {
            protocol: PROTOCOL_VERSION,
            kind,
            session,
            seq,
            payload: serde_json::to_value(payload).expect("payloads serialize"),
        }
    }

    /// A client request with no session.
    pub fn request(kind: Kind, seq: u64, payload: impl Serialize) -> Self {
        Message::new(kind, None, seq, payload)
    }

    pub fn to_session(kind: Kind, session: &str, seq: u64, payload: impl Serialize) -> Self {
        Message::new(kind, Some(session.to_string()), seq, payload)
    }

    pub fn payload_as<T: for<'de> Deserialize<'de>>(&self) -> Result<T, serde_json::Error> {
        serde_json::from_value(self.payload.clone())
    }
}

/// Why a line could not be turned into a request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorPayload {
    pub code: ErrorCode,
    pub message: String,
    /// `seq` of the offending request, when it could be read.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request_seq: Option<u64>,
    /// Session named by the offending request, when it is not the
    /// message's own session.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadJson,
    UnsupportedProtocol,
    UnknownKind,
    UnexpectedKind,
    BadPayload,
    MissingSession,
    UnknownSession,
    InvalidParameter,
    OutOfRange,
    InvalidNode,
    LineTooLong,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{message}")]
pub struct ProtocolError {
    pub code: ErrorCode,
    pub message: String,
    pub request_seq: Option<u64>,
}

impl ProtocolError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        ProtocolError { code, message: message.into(), request_seq: None }
    }

    pub fn with_seq(mut self, seq: Option<u64>) -> Self {
        self.request_seq = seq;
        self
    }

    pub fn payload(&self) -> ErrorPayload {
        ErrorPayload {
            code: self.code,
            message: self.message.clone(),
            request_seq: self.request_seq,
            session: None,
        }
    }
}

pub fn encode(msg: &Message) -> String {
    serde_json::to_string(msg).expect("messages serialize")
}

/// Parses one line, reporting the first thing wrong with it.
pub fn decode(line: &str) -> Result<Message, ProtocolError> {
    let value: Value = serde_json::from_str(line)
        .map_err(|e| ProtocolError::new(ErrorCode::BadJson, format!("invalid JSON: {e}")))?;
    let Value::Object(mut obj) = value else {
        return Err(ProtocolError::new(ErrorCode::BadJson, "message must be a JSON object"));
    };
    let seq = match obj.remove("seq") {
        None | Some(Value::Null) => 0,
        Some(v) => v
            .as_u64()
            .ok_or_else(|| ProtocolError::new(ErrorCode::BadPayload, "seq must be a non-negative integer"))?,
    };
    let fail = |code, msg: String| ProtocolError::new(code, msg).with_seq(Some(seq));
    match obj.remove("protocol") {
        Some(v) if v.as_u64() == Some(PROTOCOL_VERSION as u64) => {}
        Some(v) => return Err(fail(ErrorCode::UnsupportedProtocol, format!("unsupported protocol {v}"))),
        None => return Err(fail(ErrorCode::UnsupportedProtocol, "missing protocol field".into())),
    }
    let kind = match obj.remove("kind") {
        Some(Value::String(s)) => {
            s.parse::<Kind>().map_err(|_| fail(ErrorCode::UnknownKind, format!("unknown kind {s:?}")))?
        }
        _ => return Err(fail(ErrorCode::UnknownKind, "missing kind".into())),
    };
    let session = match obj.remove("session") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s),
        Some(_) => return Err(fail(ErrorCode::BadPayload, "session must be a string".into())),
    };
    let payload = obj.remove("payload").unwrap_or(Value::Null);
    Ok(Message { protocol: PROTOCOL_VERSION, kind, session, seq, payload })
}

/// Graph of a new session: a built-in id (`karate`, `grid:5x5`, ...) or an
/// inline `{nodes, edges}` document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphSource {
    Id(String),
    Document(Value),
}

fn default_algorithm() -> String {
    "marl-fr".into()
}

fn one() -> u64 {
    1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreatePayload {
    pub graph: GraphSource,
    #[serde(default = "default_algorithm")]
    pub algorithm: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub params: Params,
    /// Emit a frame every this many iterations.
    #[serde(default = "one")]
    pub frame_every: u64,
    /// Start paused instead of running.
    #[serde(default)]
    pub paused: bool,
    /// Compute NC/NO/NE/NA for every frame.
    #[serde(default = "yes")]
    pub metrics: bool,
    /// Sleep between sweeps while running, for watchable animations.
    #[serde(default)]
    pub interval_ms: u64,
}

/// Configuration echoed back in `session.created`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub algorithm: String,
    pub seed: u64,
    pub params: Params,
    pub reward: RewardSpec,
    pub frame_every: u64,
    pub paused: bool,
    pub metrics: bool,
    pub interval_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreatedPayload {
    /// `seq` of the `session.create` this answers.
    pub request_seq: u64,
    pub config: SessionInfo,
    pub nodes: usize,
    pub labels: Vec<String>,
    pub edges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiveMetrics {
    pub nc: f64,
    pub no: f64,
    pub ne: f64,
    pub na: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramePayload {
    /// Completed sweeps.
    pub t: u64,
    pub temperature: f64,
    pub positions: Vec<[f64; 2]>,
    /// Average node displacement of the last sweep.
    pub avg_displacement: Option<f64>,
    pub displacement_rate: Option<f64>,
    /// Relative energy change, for objectives with an energy.
    pub stress_ratio: Option<f64>,
    pub energy: Option<f64>,
    pub metrics: Option<LiveMetrics>,
    pub locked: Vec<usize>,
    pub running: bool,
    pub epsilon: f64,
    pub reward: RewardSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DonePayload {
    pub t: u64,
    pub reason: ConvergenceReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepPayload {
    #[serde(default = "one")]
    pub count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodePayload {
    pub node: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MovePayload {
    pub node: usize,
    pub x: f64,
    pub y: f64,
    /// Also lock the node, so it stays where it was dropped.
    #[serde(default)]
    pub lock: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResetPayload {
    /// Also draw fresh random positions for unlocked nodes.
    #[serde(default)]
    pub positions: bool,
}

/// `param.set` payload: parameter name to new value, applied atomically.
pub type ParamUpdate = Map<String, Value>;
