//! Wire schema and its canonical newline-delimited JSON encoding.
//!
//! One envelope is one JSON object on one line. Payload fields sit next to
//! the envelope fields and are discriminated by `tag`. Keys are emitted in
//! sorted order so equal envelopes always encode to equal bytes, which keeps
//! session logs byte-comparable.
//!
//! Decoding is strict about tags and types and lenient about extra fields.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde_json::{Map, Value};

use crate::minigames::{HiddenPhase, MinigameInput, MinigameSnapshot, MinigameView, WordStatus};
use crate::types::{
    ActionOutcome, Animation, AvatarState, Color, Dance, GameMode, GestureEvent, MinigameKind,
    PlayerId, Pose, SwipeDirection,
};

pub const PROTOCOL_VERSION: u64 = 1;

/// Reserved sender name for server-emitted envelopes.
pub const SERVER_SENDER: &str = "server";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Sender {
    Server,
    Player(PlayerId),
}

impl Sender {
    fn as_str(&self) -> &str {
        match self {
            Sender::Server => SERVER_SENDER,
            Sender::Player(p) => p.as_str(),
        }
    }

    fn parse(s: &str) -> Self {
        if s == SERVER_SENDER {
            Sender::Server
        } else {
            Sender::Player(PlayerId::new(s))
        }
    }
}

/// The unit of synchronization.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    /// Server-assigned, per room, starting at 1. Zero on client messages and
    /// on unsequenced control traffic.
    pub seq: u64,
    pub room_id: String,
    pub sender: Sender,
    /// Direct recipient; `None` means the whole room.
    pub to: Option<PlayerId>,
    /// Milliseconds since the Unix epoch.
    pub sent_at: u64,
    pub payload: Message,
}

impl Envelope {
    /// A client-side envelope (seq 0, broadcast-addressed).
    pub fn client(room_id: impl Into<String>, sender: PlayerId, sent_at: u64, payload: Message) -> Self {
        Envelope {
            seq: 0,
            room_id: room_id.into(),
            sender: Sender::Player(sender),
            to: None,
            sent_at,
            payload,
        }
    }

    pub fn is_broadcast(&self) -> bool {
        self.to.is_none()
    }
}

/// A gesture as sent by a client: already classified, or raw tap times for
/// the server to classify with the room's burst window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClientGesture {
    Classified(GestureEvent),
    RawTaps { timestamps_ms: Vec<u64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorCode {
    Malformed,
    WrongRoom,
    BadRoomId,
    NotJoined,
    UnexpectedMessage,
    DuplicatePlayer,
    RoomFull,
    UnknownPlayer,
    InvalidGesture,
    WrongMode,
    MinigameAlreadyActive,
    NoActiveMinigame,
    WrongMinigame,
    WrongPhase,
    UnknownObject,
    AlreadyFound,
    InvalidPose,
    QuizFinished,
    GameOver,
    RepeatedLetter,
    InvalidGuess,
    RoomClosed,
}

impl ErrorCode {
    pub const ALL: [ErrorCode; 22] = [
        ErrorCode::Malformed,
        ErrorCode::WrongRoom,
        ErrorCode::BadRoomId,
        ErrorCode::NotJoined,
        ErrorCode::UnexpectedMessage,
        ErrorCode::DuplicatePlayer,
        ErrorCode::RoomFull,
        ErrorCode::UnknownPlayer,
        ErrorCode::InvalidGesture,
        ErrorCode::WrongMode,
        ErrorCode::MinigameAlreadyActive,
        ErrorCode::NoActiveMinigame,
        ErrorCode::WrongMinigame,
        ErrorCode::WrongPhase,
        ErrorCode::UnknownObject,
        ErrorCode::AlreadyFound,
        ErrorCode::InvalidPose,
        ErrorCode::QuizFinished,
        ErrorCode::GameOver,
        ErrorCode::RepeatedLetter,
        ErrorCode::InvalidGuess,
        ErrorCode::RoomClosed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Malformed => "malformed",
            ErrorCode::WrongRoom => "wrong_room",
            ErrorCode::BadRoomId => "bad_room_id",
            ErrorCode::NotJoined => "not_joined",
            ErrorCode::UnexpectedMessage => "unexpected_message",
            ErrorCode::DuplicatePlayer => "duplicate_player",
            ErrorCode::RoomFull => "room_full",
            ErrorCode::UnknownPlayer => "unknown_player",
            ErrorCode::InvalidGesture => "invalid_gesture",
            ErrorCode::WrongMode => "wrong_mode",
            ErrorCode::MinigameAlreadyActive => "minigame_already_active",
            ErrorCode::NoActiveMinigame => "no_active_minigame",
            ErrorCode::WrongMinigame => "wrong_minigame",
            ErrorCode::WrongPhase => "wrong_phase",
            ErrorCode::UnknownObject => "unknown_object",
            ErrorCode::AlreadyFound => "already_found",
            ErrorCode::InvalidPose => "invalid_pose",
            ErrorCode::QuizFinished => "quiz_finished",
            ErrorCode::GameOver => "game_over",
            ErrorCode::RepeatedLetter => "repeated_letter",
            ErrorCode::InvalidGuess => "invalid_guess",
            ErrorCode::RoomClosed => "room_closed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    // client -> server
    Join { display_name: String },
    Leave,
    Gesture(ClientGesture),
    SelectMode(GameMode),
    StartMinigame(MinigameKind),
    MinigameInput(MinigameInput),
    // heartbeat, either direction, never sequenced
    Ping,
    Pong,
    // server -> client
    Welcome {
        player_id: PlayerId,
        color: Color,
        mode: GameMode,
        score: u32,
        mission_target: u32,
    },
    PlayerJoined { player_id: PlayerId, color: Color },
    PlayerLeft { player_id: PlayerId },
    ModeChanged { mode: GameMode, actor_color: Color },
    ActionBroadcast {
        actor_color: Color,
        outcome: ActionOutcome,
        points: u32,
    },
    AvatarUpdate(AvatarState),
    ScoreUpdate { total: u32 },
    MissionComplete { final_total: u32 },
    MinigameUpdate(MinigameSnapshot),
    Notification {
        actor_color: Option<Color>,
        text: String,
    },
    ErrorReply { code: ErrorCode, text: String },
}

/// Every tag the decoder accepts.
pub const TAGS: [&str; 19] = [
    "join",
    "leave",
    "gesture",
    "select_mode",
    "start_minigame",
    "minigame_input",
    "ping",
    "pong",
    "welcome",
    "player_joined",
    "player_left",
    "mode_changed",
    "action_broadcast",
    "avatar_update",
    "score_update",
    "mission_complete",
    "minigame_update",
    "notification",
    "error_reply",
];

impl Message {
    pub fn tag(&self) -> &'static str {
        match self {
            Message::Join { .. } => "join",
            Message::Leave => "leave",
            Message::Gesture(_) => "gesture",
            Message::SelectMode(_) => "select_mode",
            Message::StartMinigame(_) => "start_minigame",
            Message::MinigameInput(_) => "minigame_input",
            Message::Ping => "ping",
            Message::Pong => "pong",
            Message::Welcome { .. } => "welcome",
            Message::PlayerJoined { .. } => "player_joined",
            Message::PlayerLeft { .. } => "player_left",
            Message::ModeChanged { .. } => "mode_changed",
            Message::ActionBroadcast { .. } => "action_broadcast",
            Message::AvatarUpdate(_) => "avatar_update",
            Message::ScoreUpdate { .. } => "score_update",
            Message::MissionComplete { .. } => "mission_complete",
            Message::MinigameUpdate(_) => "minigame_update",
            Message::Notification { .. } => "notification",
            Message::ErrorReply { .. } => "error_reply",
        }
    }

    /// Messages a client is allowed to send.
    pub fn is_client_message(&self) -> bool {
        matches!(
            self,
            Message::Join { .. }
                | Message::Leave
                | Message::Gesture(_)
                | Message::SelectMode(_)
                | Message::StartMinigame(_)
                | Message::MinigameInput(_)
                | Message::Ping
                | Message::Pong
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("unknown message tag `{0}`")]
    UnknownTag(String),
    #[error("missing field `{name}`")]
    MissingField { name: String },
    #[error("field `{name}` has the wrong type or value")]
    BadType { name: String },
}

// ---------------------------------------------------------------- encoding

/// Canonical single-line encoding, newline-terminated.
pub fn encode_message(envelope: &Envelope) -> String {
    let mut line = envelope_to_value(envelope).to_string();
    line.push('\n');
    line
}

/// The envelope as a JSON value (keys sorted on output).
pub fn envelope_to_value(envelope: &Envelope) -> Value {
    let mut m = Map::new();
    m.insert("v".into(), PROTOCOL_VERSION.into());
    m.insert("seq".into(), envelope.seq.into());
    m.insert("room_id".into(), envelope.room_id.clone().into());
    m.insert("sender".into(), envelope.sender.as_str().into());
    if let Some(to) = &envelope.to {
        m.insert("to".into(), to.as_str().into());
    }
    m.insert("sent_at".into(), envelope.sent_at.into());
    m.insert("tag".into(), envelope.payload.tag().into());
    encode_payload(&envelope.payload, &mut m);
    Value::Object(m)
}

fn put(m: &mut Map<String, Value>, key: &str, v: impl Into<Value>) {
    m.insert(key.to_owned(), v.into());
}

fn encode_payload(msg: &Message, m: &mut Map<String, Value>) {
    match msg {
        Message::Join { display_name } => put(m, "display_name", display_name.as_str()),
        Message::Leave | Message::Ping | Message::Pong => {}
        Message::Gesture(g) => put(m, "gesture", gesture_value(g)),
        Message::SelectMode(mode) => put(m, "mode", mode.as_str()),
        Message::StartMinigame(kind) => put(m, "kind", kind.as_str()),
        Message::MinigameInput(input) => put(m, "input", input_value(input)),
        Message::Welcome {
            player_id,
            color,
            mode,
            score,
            mission_target,
        } => {
            put(m, "player_id", player_id.as_str());
            put(m, "color", color.as_str());
            put(m, "mode", mode.as_str());
            put(m, "score", *score);
            put(m, "mission_target", *mission_target);
        }
        Message::PlayerJoined { player_id, color } => {
            put(m, "player_id", player_id.as_str());
            put(m, "color", color.as_str());
        }
        Message::PlayerLeft { player_id } => put(m, "player_id", player_id.as_str()),
        Message::ModeChanged { mode, actor_color } => {
            put(m, "mode", mode.as_str());
            put(m, "actor_color", actor_color.as_str());
        }
        Message::ActionBroadcast {
            actor_color,
            outcome,
            points,
        } => {
            put(m, "actor_color", actor_color.as_str());
            put(m, "outcome", outcome_value(*outcome));
            put(m, "points", *points);
        }
        Message::AvatarUpdate(avatar) => {
            let animation = match avatar.animation {
                Animation::Idle => {
                    let mut a = Map::new();
                    put(&mut a, "kind", "idle");
                    Value::Object(a)
                }
                Animation::Playing(outcome) => outcome_value(outcome),
            };
            put(m, "animation", animation);
            if let Some(p) = &avatar.facing {
                put(m, "facing", p.as_str());
            }
        }
        Message::ScoreUpdate { total } => put(m, "total", *total),
        Message::MissionComplete { final_total } => put(m, "final_total", *final_total),
        Message::MinigameUpdate(snap) => put(m, "snapshot", snapshot_value(snap)),
        Message::Notification { actor_color, text } => {
            if let Some(c) = actor_color {
                put(m, "actor_color", c.as_str());
            }
            put(m, "text", text.as_str());
        }
        Message::ErrorReply { code, text } => {
            put(m, "code", code.as_str());
            put(m, "text", text.as_str());
        }
    }
}

fn gesture_value(g: &ClientGesture) -> Value {
    let mut m = Map::new();
    match g {
        ClientGesture::Classified(GestureEvent::TapBurst { count }) => {
            put(&mut m, "kind", "tap_burst");
            put(&mut m, "taps", *count);
        }
        ClientGesture::Classified(GestureEvent::Swipe { direction }) => {
            put(&mut m, "kind", "swipe");
            put(&mut m, "direction", direction.as_str());
        }
        ClientGesture::RawTaps { timestamps_ms } => {
            put(&mut m, "kind", "taps");
            put(&mut m, "timestamps_ms", timestamps_ms.clone());
        }
    }
    Value::Object(m)
}

fn pose_value(p: Pose) -> Value {
    let mut m = Map::new();
    put(&mut m, "x", p.x);
    put(&mut m, "y", p.y);
    put(&mut m, "rot_deg", p.rot_deg);
    Value::Object(m)
}

fn input_value(input: &MinigameInput) -> Value {
    let mut m = Map::new();
    match input {
        MinigameInput::PlaceMarker(p) => {
            put(&mut m, "kind", "place_marker");
            put(&mut m, "x", p.x);
            put(&mut m, "y", p.y);
            put(&mut m, "rot_deg", p.rot_deg);
        }
        MinigameInput::FindObject { object_id } => {
            put(&mut m, "kind", "find_object");
            put(&mut m, "object_id", object_id.as_str());
        }
        MinigameInput::UseKey => put(&mut m, "kind", "use_key"),
        MinigameInput::Answer { transcript } => {
            put(&mut m, "kind", "answer");
            put(&mut m, "transcript", transcript.as_str());
        }
        MinigameInput::Guess { text } => {
            put(&mut m, "kind", "guess");
            put(&mut m, "text", text.as_str());
        }
        MinigameInput::Abandon => put(&mut m, "kind", "abandon"),
    }
    Value::Object(m)
}

pub(crate) fn outcome_value(outcome: ActionOutcome) -> Value {
    let mut m = Map::new();
    match outcome {
        ActionOutcome::Dance(d) => {
            put(&mut m, "kind", "dance");
            put(&mut m, "dance", d.as_str());
        }
        ActionOutcome::SmallChaos(d) => {
            put(&mut m, "kind", "small_chaos");
            put(&mut m, "dance", d.as_str());
        }
        ActionOutcome::Chaos => put(&mut m, "kind", "chaos"),
    }
    Value::Object(m)
}

pub(crate) fn snapshot_value(s: &MinigameSnapshot) -> Value {
    let mut m = Map::new();
    put(&mut m, "kind", s.view.kind().as_str());
    put(&mut m, "finished", s.finished);
    put(&mut m, "abandoned", s.abandoned);
    if let Some(p) = s.points {
        put(&mut m, "points", p);
    }
    if let Some(a) = s.awarded {
        put(&mut m, "awarded", a);
    }
    match &s.view {
        MinigameView::HiddenObjects {
            phase,
            marker_pose,
            objects_found,
            objects_total,
        } => {
            put(&mut m, "phase", phase.as_str());
            if let Some(p) = marker_pose {
                put(&mut m, "marker_pose", pose_value(*p));
            }
            put(&mut m, "objects_found", objects_found.clone());
            put(&mut m, "objects_total", *objects_total);
        }
        MinigameView::Quiz {
            question_index,
            total_questions,
            correct_count,
            current_question,
            last_correct,
        } => {
            put(&mut m, "question_index", *question_index);
            put(&mut m, "total_questions", *total_questions);
            put(&mut m, "correct_count", *correct_count);
            if let Some(q) = current_question {
                put(&mut m, "current_question", q.as_str());
            }
            if let Some(c) = last_correct {
                put(&mut m, "last_correct", *c);
            }
        }
        MinigameView::Word {
            pattern,
            wrong_attempts,
            max_attempts,
            guessed_letters,
            status,
            secret,
        } => {
            put(&mut m, "pattern", pattern.as_str());
            put(&mut m, "wrong_attempts", *wrong_attempts);
            put(&mut m, "max_attempts", *max_attempts);
            put(&mut m, "guessed_letters", guessed_letters.as_str());
            put(&mut m, "status", status.as_str());
            if let Some(w) = secret {
                put(&mut m, "secret", w.as_str());
            }
        }
    }
    Value::Object(m)
}

// ---------------------------------------------------------------- decoding

/// A JSON object plus the dotted path it was reached by, for error names.
struct Obj<'a> {
    map: &'a Map<String, Value>,
    path: String,
}

impl<'a> Obj<'a> {
    fn name(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_owned()
        } else {
            format!("{}.{}", self.path, key)
        }
    }

    fn bad(&self, key: &str) -> DecodeError {
        DecodeError::BadType {
            name: self.name(key),
        }
    }

    /// Absent and `null` both read as `None`.
    fn opt(&self, key: &str) -> Option<&'a Value> {
        self.map.get(key).filter(|v| !v.is_null())
    }

    fn get(&self, key: &str) -> Result<&'a Value, DecodeError> {
        self.opt(key).ok_or_else(|| DecodeError::MissingField {
            name: self.name(key),
        })
    }

    fn str(&self, key: &str) -> Result<&'a str, DecodeError> {
        self.get(key)?.as_str().ok_or_else(|| self.bad(key))
    }

    fn string(&self, key: &str) -> Result<String, DecodeError> {
        self.str(key).map(String::from)
    }

    fn opt_string(&self, key: &str) -> Result<Option<String>, DecodeError> {
        self.opt(key)
            .map(|v| v.as_str().map(String::from).ok_or_else(|| self.bad(key)))
            .transpose()
    }

    fn u64(&self, key: &str) -> Result<u64, DecodeError> {
        self.get(key)?.as_u64().ok_or_else(|| self.bad(key))
    }

    fn u32(&self, key: &str) -> Result<u32, DecodeError> {
        u32::try_from(self.u64(key)?).map_err(|_| self.bad(key))
    }

    fn opt_u32(&self, key: &str) -> Result<Option<u32>, DecodeError> {
        match self.opt(key) {
            None => Ok(None),
            Some(_) => self.u32(key).map(Some),
        }
    }

    fn f64(&self, key: &str) -> Result<f64, DecodeError> {
        self.get(key)?.as_f64().ok_or_else(|| self.bad(key))
    }

    fn bool(&self, key: &str) -> Result<bool, DecodeError> {
        self.get(key)?.as_bool().ok_or_else(|| self.bad(key))
    }

    fn opt_bool(&self, key: &str) -> Result<Option<bool>, DecodeError> {
        self.opt(key)
            .map(|v| v.as_bool().ok_or_else(|| self.bad(key)))
            .transpose()
    }

    fn array(&self, key: &str) -> Result<&'a Vec<Value>, DecodeError> {
        self.get(key)?.as_array().ok_or_else(|| self.bad(key))
    }

    fn obj(&self, key: &str) -> Result<Obj<'a>, DecodeError> {
        let map = self.get(key)?.as_object().ok_or_else(|| self.bad(key))?;
        Ok(Obj {
            map,
            path: self.name(key),
        })
    }

    fn opt_obj(&self, key: &str) -> Result<Option<Obj<'a>>, DecodeError> {
        match self.opt(key) {
            None => Ok(None),
            Some(_) => self.obj(key).map(Some),
        }
    }

    /// A string field restricted to a closed vocabulary.
    fn parsed<T>(&self, key: &str, parse: impl Fn(&str) -> Option<T>) -> Result<T, DecodeError> {
        parse(self.str(key)?).ok_or_else(|| self.bad(key))
    }

    fn player(&self, key: &str) -> Result<PlayerId, DecodeError> {
        self.str(key).map(PlayerId::new)
    }

    fn color(&self, key: &str) -> Result<Color, DecodeError> {
        self.parsed(key, Color::parse)
    }
}

/// Decode one newline-delimited frame. A single trailing `\n` (or `\r\n`)
/// is allowed.
pub fn decode_message(line: &[u8]) -> Result<Envelope, DecodeError> {
    let value: Value =
        serde_json::from_slice(line).map_err(|e| DecodeError::MalformedJson(e.to_string()))?;
    decode_value(&value)
}

pub fn decode_value(value: &Value) -> Result<Envelope, DecodeError> {
    let map = value.as_object().ok_or_else(|| DecodeError::BadType {
        name: "<root>".into(),
    })?;
    let root = Obj {
        map,
        path: String::new(),
    };
    let tag = root.str("tag")?;
    if !TAGS.contains(&tag) {
        return Err(DecodeError::UnknownTag(tag.into()));
    }
    if root.u64("v")? != PROTOCOL_VERSION {
        return Err(root.bad("v"));
    }
    let seq = root.u64("seq")?;
    let room_id = root.string("room_id")?;
    let sender = Sender::parse(root.str("sender")?);
    let to = root.opt_string("to")?.map(PlayerId::new);
    let sent_at = root.u64("sent_at")?;
    let payload = decode_payload(tag, &root)?;
    Ok(Envelope {
        seq,
        room_id,
        sender,
        to,
        sent_at,
        payload,
    })
}

fn decode_payload(tag: &str, m: &Obj<'_>) -> Result<Message, DecodeError> {
    Ok(match tag {
        "join" => Message::Join {
            display_name: m.string("display_name")?,
        },
        "leave" => Message::Leave,
        "ping" => Message::Ping,
        "pong" => Message::Pong,
        "gesture" => Message::Gesture(decode_gesture(&m.obj("gesture")?)?),
        "select_mode" => Message::SelectMode(m.parsed("mode", GameMode::parse)?),
        "start_minigame" => Message::StartMinigame(m.parsed("kind", MinigameKind::parse)?),
        "minigame_input" => Message::MinigameInput(decode_input(&m.obj("input")?)?),
        "welcome" => Message::Welcome {
            player_id: m.player("player_id")?,
            color: m.color("color")?,
            mode: m.parsed("mode", GameMode::parse)?,
            score: m.u32("score")?,
            mission_target: m.u32("mission_target")?,
        },
        "player_joined" => Message::PlayerJoined {
            player_id: m.player("player_id")?,
            color: m.color("color")?,
        },
        "player_left" => Message::PlayerLeft {
            player_id: m.player("player_id")?,
        },
        "mode_changed" => Message::ModeChanged {
            mode: m.parsed("mode", GameMode::parse)?,
            actor_color: m.color("actor_color")?,
        },
        "action_broadcast" => Message::ActionBroadcast {
            actor_color: m.color("actor_color")?,
            outcome: decode_outcome(&m.obj("outcome")?)?,
            points: m.u32("points")?,
        },
        "avatar_update" => {
            let a = m.obj("animation")?;
            let animation = if a.str("kind")? == "idle" {
                Animation::Idle
            } else {
                Animation::Playing(decode_outcome(&a)?)
            };
            Message::AvatarUpdate(AvatarState {
                animation,
                facing: m.opt_string("facing")?.map(PlayerId::new),
            })
        }
        "score_update" => Message::ScoreUpdate {
            total: m.u32("total")?,
        },
        "mission_complete" => Message::MissionComplete {
            final_total: m.u32("final_total")?,
        },
        "minigame_update" => Message::MinigameUpdate(decode_snapshot(&m.obj("snapshot")?)?),
        "notification" => Message::Notification {
            actor_color: match m.opt("actor_color") {
                None => None,
                Some(_) => Some(m.color("actor_color")?),
            },
            text: m.string("text")?,
        },
        "error_reply" => Message::ErrorReply {
            code: m.parsed("code", ErrorCode::parse)?,
            text: m.string("text")?,
        },
        other => return Err(DecodeError::UnknownTag(other.into())),
    })
}

fn decode_gesture(g: &Obj<'_>) -> Result<ClientGesture, DecodeError> {
    Ok(match g.str("kind")? {
        "tap_burst" => {
            let count = g.u32("taps")?;
            if count == 0 {
                return Err(g.bad("taps"));
            }
            ClientGesture::Classified(GestureEvent::TapBurst { count })
        }
        "swipe" => ClientGesture::Classified(GestureEvent::Swipe {
            direction: g.parsed("direction", SwipeDirection::parse)?,
        }),
        "taps" => {
            let raw = g.array("timestamps_ms")?;
            let timestamps_ms = raw
                .iter()
                .map(|v| v.as_u64().ok_or_else(|| g.bad("timestamps_ms")))
                .collect::<Result<Vec<_>, _>>()?;
            ClientGesture::RawTaps { timestamps_ms }
        }
        _ => return Err(g.bad("kind")),
    })
}

fn decode_pose(p: &Obj<'_>) -> Result<Pose, DecodeError> {
    Ok(Pose {
        x: p.f64("x")?,
        y: p.f64("y")?,
        rot_deg: p.f64("rot_deg")?,
    })
}

fn decode_input(i: &Obj<'_>) -> Result<MinigameInput, DecodeError> {
    Ok(match i.str("kind")? {
        "place_marker" => MinigameInput::PlaceMarker(decode_pose(i)?),
        "find_object" => MinigameInput::FindObject {
            object_id: i.string("object_id")?,
        },
        "use_key" => MinigameInput::UseKey,
        "answer" => MinigameInput::Answer {
            transcript: i.string("transcript")?,
        },
        "guess" => MinigameInput::Guess {
            text: i.string("text")?,
        },
        "abandon" => MinigameInput::Abandon,
        _ => return Err(i.bad("kind")),
    })
}

fn decode_outcome(o: &Obj<'_>) -> Result<ActionOutcome, DecodeError> {
    Ok(match o.str("kind")? {
        "dance" => ActionOutcome::Dance(o.parsed("dance", Dance::parse)?),
        "small_chaos" => ActionOutcome::SmallChaos(o.parsed("dance", Dance::parse)?),
        "chaos" => ActionOutcome::Chaos,
        _ => return Err(o.bad("kind")),
    })
}

fn decode_snapshot(s: &Obj<'_>) -> Result<MinigameSnapshot, DecodeError> {
    let view = match s.parsed("kind", MinigameKind::parse)? {
        MinigameKind::HiddenObjects => MinigameView::HiddenObjects {
            phase: s.parsed("phase", HiddenPhase::parse)?,
            marker_pose: s.opt_obj("marker_pose")?.map(|p| decode_pose(&p)).transpose()?,
            objects_found: s
                .array("objects_found")?
                .iter()
                .map(|v| v.as_str().map(String::from).ok_or_else(|| s.bad("objects_found")))
                .collect::<Result<_, _>>()?,
            objects_total: s.u32("objects_total")?,
        },
        MinigameKind::Quiz => MinigameView::Quiz {
            question_index: s.u32("question_index")?,
            total_questions: s.u32("total_questions")?,
            correct_count: s.u32("correct_count")?,
            current_question: s.opt_string("current_question")?,
            last_correct: s.opt_bool("last_correct")?,
        },
        MinigameKind::Word => MinigameView::Word {
            pattern: s.string("pattern")?,
            wrong_attempts: s.u32("wrong_attempts")?,
            max_attempts: s.u32("max_attempts")?,
            guessed_letters: s.string("guessed_letters")?,
            status: s.parsed("status", WordStatus::parse)?,
            secret: s.opt_string("secret")?,
        },
    };
    Ok(MinigameSnapshot {
        view,
        finished: s.bool("finished")?,
        abandoned: s.bool("abandoned")?,
        points: s.opt_u32("points")?,
        awarded: s.opt_u32("awarded")?,
    })
}
