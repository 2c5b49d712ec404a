//! The room reducer.
//!
//! [`RoomState::apply_event`] is the only way room state changes. It takes
//! one decoded client envelope (already stamped by the server with the
//! sender's id and the receive time) and returns the sequenced envelopes to
//! persist and deliver. It never fails: rejected input becomes an
//! `error_reply` to the sender and leaves the state untouched.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use serde_json::{Map, Value};

use crate::gesture::{classify_gesture, GestureError};
use crate::minigames::{GuessOutcome, InputEffect, MinigameError, MinigameInput, MinigameState};
use crate::narrative::NarrativeConfig;
use crate::protocol::{outcome_value, snapshot_value, ClientGesture, Envelope, ErrorCode, Message, Sender};
use crate::rng::RoomRng;
use crate::rules::{chaos_decision, fixed_outcome, score_action, ChaosLevel};
use crate::types::{
    ActionOutcome, Animation, AvatarState, Color, Dance, GameMode, GestureEvent, MinigameKind,
    PlayerId, PALETTE,
};

/// Room capacity, one player per palette color.
pub const MAX_PLAYERS: usize = PALETTE.len();

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Player {
    pub id: PlayerId,
    pub display_name: String,
    pub color: Color,
    pub joined_at_seq: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SessionError {
    #[error("player {0} is already in the room")]
    DuplicatePlayer(PlayerId),
    #[error("room is full")]
    RoomFull,
    #[error("player {0} is not in the room")]
    UnknownPlayer(PlayerId),
    #[error("mini-games are only available in historia_surpresa mode")]
    WrongMode,
    #[error("a mini-game is already running")]
    MinigameAlreadyActive,
    #[error("no mini-game is running")]
    NoActiveMinigame,
    #[error("invalid gesture: {0}")]
    Gesture(#[from] GestureError),
    #[error(transparent)]
    Minigame(#[from] MinigameError),
}

impl SessionError {
    pub fn code(&self) -> ErrorCode {
        match self {
            SessionError::DuplicatePlayer(_) => ErrorCode::DuplicatePlayer,
            SessionError::RoomFull => ErrorCode::RoomFull,
            SessionError::UnknownPlayer(_) => ErrorCode::UnknownPlayer,
            SessionError::WrongMode => ErrorCode::WrongMode,
            SessionError::MinigameAlreadyActive => ErrorCode::MinigameAlreadyActive,
            SessionError::NoActiveMinigame => ErrorCode::NoActiveMinigame,
            SessionError::Gesture(_) => ErrorCode::InvalidGesture,
            SessionError::Minigame(e) => match e {
                MinigameError::WrongPhase => ErrorCode::WrongPhase,
                MinigameError::UnknownObject => ErrorCode::UnknownObject,
                MinigameError::AlreadyFound => ErrorCode::AlreadyFound,
                MinigameError::InvalidPose => ErrorCode::InvalidPose,
                MinigameError::QuizFinished => ErrorCode::QuizFinished,
                MinigameError::GameOver | MinigameError::NotFinished => ErrorCode::GameOver,
                MinigameError::RepeatedLetter => ErrorCode::RepeatedLetter,
                MinigameError::InvalidGuess => ErrorCode::InvalidGuess,
                MinigameError::WrongMinigame => ErrorCode::WrongMinigame,
            },
        }
    }
}

/// One shared session.
#[derive(Debug, Clone, PartialEq)]
pub struct RoomState {
    room_id: String,
    config: Arc<NarrativeConfig>,
    players: BTreeMap<PlayerId, Player>,
    mode: GameMode,
    avatar: AvatarState,
    score: u32,
    mission_target: u32,
    mission_complete: bool,
    per_player_tap_gestures: BTreeMap<PlayerId, u64>,
    minigame: Option<MinigameState>,
    rng: RoomRng,
    next_seq: u64,
}

impl RoomState {
    /// Empty room in `Toques` mode with a seeded RNG.
    pub fn new(room_id: impl Into<String>, config: Arc<NarrativeConfig>, seed: u64) -> Self {
        RoomState {
            room_id: room_id.into(),
            mission_target: config.mission_target,
            config,
            players: BTreeMap::new(),
            mode: GameMode::default(),
            avatar: AvatarState::default(),
            score: 0,
            mission_complete: false,
            per_player_tap_gestures: BTreeMap::new(),
            minigame: None,
            rng: RoomRng::new(seed),
            next_seq: 1,
        }
    }

    pub fn room_id(&self) -> &str {
        &self.room_id
    }

    pub fn config(&self) -> &NarrativeConfig {
        &self.config
    }

    pub fn players(&self) -> &BTreeMap<PlayerId, Player> {
        &self.players
    }

    pub fn player(&self, id: &PlayerId) -> Option<&Player> {
        self.players.get(id)
    }

    pub fn mode(&self) -> GameMode {
        self.mode
    }

    pub fn avatar(&self) -> &AvatarState {
        &self.avatar
    }

    pub fn score(&self) -> u32 {
        self.score
    }

    pub fn mission_target(&self) -> u32 {
        self.mission_target
    }

    pub fn mission_complete(&self) -> bool {
        self.mission_complete
    }

    pub fn tap_gestures(&self, id: &PlayerId) -> u64 {
        self.per_player_tap_gestures.get(id).copied().unwrap_or(0)
    }

    pub fn minigame(&self) -> Option<&MinigameState> {
        self.minigame.as_ref()
    }

    pub fn rng(&self) -> &RoomRng {
        &self.rng
    }

    /// Sequence number the next outgoing envelope will get.
    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    // ------------------------------------------------------------ operations

    /// Adds a player with the first free palette color.
    pub fn join(&mut self, id: &PlayerId, display_name: &str) -> Result<Color, SessionError> {
        if self.players.contains_key(id) {
            return Err(SessionError::DuplicatePlayer(id.clone()));
        }
        let color = (0..PALETTE.len())
            .filter_map(Color::from_index)
            .find(|c| self.players.values().all(|p| p.color != *c))
            .ok_or(SessionError::RoomFull)?;
        let display_name = if display_name.trim().is_empty() {
            id.to_string()
        } else {
            display_name.trim().to_string()
        };
        self.players.insert(
            id.clone(),
            Player {
                id: id.clone(),
                display_name,
                color,
                joined_at_seq: self.next_seq,
            },
        );
        Ok(color)
    }

    /// Removes a player; their color becomes free again.
    pub fn leave(&mut self, id: &PlayerId) -> Result<Player, SessionError> {
        let player = self
            .players
            .remove(id)
            .ok_or_else(|| SessionError::UnknownPlayer(id.clone()))?;
        self.per_player_tap_gestures.remove(id);
        if self.avatar.facing.as_ref() == Some(id) {
            self.avatar.facing = None;
        }
        Ok(player)
    }

    /// Maps a gesture to its outcome, updates the actor's tap-gesture count
    /// and turns the avatar toward the actor.
    pub fn resolve_short_action(
        &mut self,
        actor: &PlayerId,
        gesture: GestureEvent,
    ) -> Result<ActionOutcome, SessionError> {
        if !self.players.contains_key(actor) {
            return Err(SessionError::UnknownPlayer(actor.clone()));
        }
        let outcome = match fixed_outcome(gesture) {
            Some(outcome) => outcome,
            None => {
                let taps = self.tap_gestures(actor);
                let users = self.players.len() as u64;
                match chaos_decision(taps, users, self.config.chaos_threshold)
                    .expect("actor is in the room")
                {
                    ChaosLevel::Chaos => ActionOutcome::Chaos,
                    ChaosLevel::SmallChaos => {
                        ActionOutcome::SmallChaos(Dance::ALL[self.rng.pick(Dance::ALL.len())])
                    }
                }
            }
        };
        if let GestureEvent::TapBurst { .. } = gesture {
            *self.per_player_tap_gestures.entry(actor.clone()).or_insert(0) += 1;
        }
        self.avatar = AvatarState {
            animation: Animation::Playing(outcome),
            facing: Some(actor.clone()),
        };
        Ok(outcome)
    }

    /// Switches the room mode. Leaving the surprise mode cancels a running
    /// mini-game; returns whether that happened.
    pub fn select_mode(&mut self, mode: GameMode) -> bool {
        self.mode = mode;
        if mode != GameMode::HistoriaSurpresa && self.minigame.is_some() {
            self.minigame = None;
            return true;
        }
        false
    }

    pub fn start_minigame(&mut self, kind: MinigameKind) -> Result<&MinigameState, SessionError> {
        if self.mode != GameMode::HistoriaSurpresa {
            return Err(SessionError::WrongMode);
        }
        if self.minigame.is_some() {
            return Err(SessionError::MinigameAlreadyActive);
        }
        let word_index = match kind {
            MinigameKind::Word => self.rng.pick(self.config.words.len()),
            _ => 0,
        };
        Ok(self
            .minigame
            .insert(MinigameState::start(kind, &self.config, word_index)))
    }

    /// Points actually added for `points` earned now: nothing once the
    /// mission is done or outside the story modes.
    fn awardable(&self, points: u32) -> u32 {
        if self.mission_complete || !self.mode.awards_points() {
            0
        } else {
            points
        }
    }

    // ---------------------------------------------------------------- reducer

    fn emit(&mut self, out: &mut Vec<Envelope>, sent_at: u64, to: Option<&PlayerId>, payload: Message) {
        out.push(Envelope {
            seq: self.next_seq,
            room_id: self.room_id.clone(),
            sender: Sender::Server,
            to: to.cloned(),
            sent_at,
            payload,
        });
        self.next_seq += 1;
    }

    fn reply_error(&mut self, out: &mut Vec<Envelope>, sent_at: u64, to: &PlayerId, code: ErrorCode, text: String) {
        self.emit(out, sent_at, Some(to), Message::ErrorReply { code, text });
    }

    fn add_score(&mut self, out: &mut Vec<Envelope>, sent_at: u64, awarded: u32) {
        if awarded == 0 {
            return;
        }
        self.score += awarded;
        self.emit(out, sent_at, None, Message::ScoreUpdate { total: self.score });
        if !self.mission_complete && self.score >= self.mission_target {
            self.mission_complete = true;
            self.emit(
                out,
                sent_at,
                None,
                Message::MissionComplete {
                    final_total: self.score,
                },
            );
        }
    }

    fn avatar_update(&mut self, out: &mut Vec<Envelope>, sent_at: u64) {
        let avatar = self.avatar.clone();
        self.emit(out, sent_at, None, Message::AvatarUpdate(avatar));
    }

    fn color_of(&self, id: &PlayerId) -> Color {
        self.players[id].color
    }

    /// Applies one client envelope and returns the sequenced outputs.
    pub fn apply_event(&mut self, incoming: &Envelope) -> Vec<Envelope> {
        let mut out = Vec::new();
        let sent_at = incoming.sent_at;
        let Sender::Player(actor) = &incoming.sender else {
            return out;
        };
        if incoming.room_id != self.room_id {
            let text = format!("this is room {}", self.room_id);
            self.reply_error(&mut out, sent_at, actor, ErrorCode::WrongRoom, text);
            return out;
        }
        let needs_member = !matches!(
            incoming.payload,
            Message::Join { .. } | Message::Ping | Message::Pong
        );
        if needs_member && incoming.payload.is_client_message() && !self.players.contains_key(actor) {
            let err = SessionError::UnknownPlayer(actor.clone());
            self.reply_error(&mut out, sent_at, actor, err.code(), err.to_string());
            return out;
        }

        match &incoming.payload {
            Message::Join { display_name } => match self.join(actor, display_name) {
                Ok(color) => {
                    let welcome = Message::Welcome {
                        player_id: actor.clone(),
                        color,
                        mode: self.mode,
                        score: self.score,
                        mission_target: self.mission_target,
                    };
                    self.emit(&mut out, sent_at, Some(actor), welcome);
                    self.emit(
                        &mut out,
                        sent_at,
                        None,
                        Message::PlayerJoined {
                            player_id: actor.clone(),
                            color,
                        },
                    );
                    let text = format!("{} joined the room", self.players[actor].display_name);
                    self.emit(
                        &mut out,
                        sent_at,
                        None,
                        Message::Notification {
                            actor_color: Some(color),
                            text,
                        },
                    );
                }
                Err(e) => self.reply_error(&mut out, sent_at, actor, e.code(), e.to_string()),
            },
            Message::Leave => {
                let facing_before = self.avatar.facing.clone();
                let player = self.leave(actor).expect("membership checked");
                self.emit(
                    &mut out,
                    sent_at,
                    None,
                    Message::PlayerLeft {
                        player_id: player.id,
                    },
                );
                if facing_before != self.avatar.facing {
                    self.avatar_update(&mut out, sent_at);
                }
            }
            Message::Gesture(gesture) => {
                let gesture = match gesture {
                    ClientGesture::Classified(g) => Ok(*g),
                    ClientGesture::RawTaps { timestamps_ms } => {
                        classify_gesture(timestamps_ms, self.config.burst_window_ms)
                    }
                };
                match gesture.map_err(SessionError::from) {
                    Ok(g) => self.handle_gesture(&mut out, sent_at, actor, g),
                    Err(e) => self.reply_error(&mut out, sent_at, actor, e.code(), e.to_string()),
                }
            }
            Message::SelectMode(mode) => {
                let cancelled = self.select_mode(*mode);
                let actor_color = self.color_of(actor);
                self.emit(
                    &mut out,
                    sent_at,
                    None,
                    Message::ModeChanged {
                        mode: *mode,
                        actor_color,
                    },
                );
                if cancelled {
                    self.emit(
                        &mut out,
                        sent_at,
                        None,
                        Message::Notification {
                            actor_color: Some(actor_color),
                            text: "mini-game cancelled".into(),
                        },
                    );
                }
            }
            Message::StartMinigame(kind) => match self.start_minigame(*kind) {
                Ok(game) => {
                    let snapshot = game.snapshot(None);
                    self.emit(&mut out, sent_at, None, Message::MinigameUpdate(snapshot));
                    self.avatar.facing = Some(actor.clone());
                    self.avatar_update(&mut out, sent_at);
                    let actor_color = Some(self.color_of(actor));
                    self.emit(
                        &mut out,
                        sent_at,
                        None,
                        Message::Notification {
                            actor_color,
                            text: format!("started {}", minigame_title(*kind)),
                        },
                    );
                }
                Err(e) => self.reply_error(&mut out, sent_at, actor, e.code(), e.to_string()),
            },
            Message::MinigameInput(input) => self.handle_minigame_input(&mut out, sent_at, actor, input),
            Message::Ping | Message::Pong => {}
            other => {
                let text = format!("clients may not send `{}`", other.tag());
                self.reply_error(&mut out, sent_at, actor, ErrorCode::UnexpectedMessage, text);
            }
        }
        out
    }

    fn handle_gesture(&mut self, out: &mut Vec<Envelope>, sent_at: u64, actor: &PlayerId, gesture: GestureEvent) {
        let outcome = match self.resolve_short_action(actor, gesture) {
            Ok(o) => o,
            Err(e) => return self.reply_error(out, sent_at, actor, e.code(), e.to_string()),
        };
        let points = self.awardable(score_action(self.mode, outcome));
        let actor_color = self.color_of(actor);
        self.emit(
            out,
            sent_at,
            None,
            Message::ActionBroadcast {
                actor_color,
                outcome,
                points,
            },
        );
        self.avatar_update(out, sent_at);
        let text = self.describe_outcome(outcome);
        self.emit(
            out,
            sent_at,
            None,
            Message::Notification {
                actor_color: Some(actor_color),
                text,
            },
        );
        self.add_score(out, sent_at, points);
    }

    fn handle_minigame_input(
        &mut self,
        out: &mut Vec<Envelope>,
        sent_at: u64,
        actor: &PlayerId,
        input: &MinigameInput,
    ) {
        let Some(game) = self.minigame.as_mut() else {
            let e = SessionError::NoActiveMinigame;
            return self.reply_error(out, sent_at, actor, e.code(), e.to_string());
        };
        let effect = match game.apply(input) {
            Ok(effect) => effect,
            Err(e) => {
                let e = SessionError::from(e);
                return self.reply_error(out, sent_at, actor, e.code(), e.to_string());
            }
        };
        let finished = game.is_finished();
        let earned = game.points().unwrap_or(0);
        let awarded = finished.then_some(earned);
        let awarded = awarded.map(|p| self.awardable(p));
        let snapshot = match self.minigame.as_ref() {
            Some(game) => game.snapshot(awarded),
            None => return,
        };
        if finished {
            self.minigame = None;
        }
        self.emit(out, sent_at, None, Message::MinigameUpdate(snapshot));
        self.avatar.facing = Some(actor.clone());
        self.avatar_update(out, sent_at);
        let actor_color = Some(self.color_of(actor));
        self.emit(
            out,
            sent_at,
            None,
            Message::Notification {
                actor_color,
                text: describe_effect(&effect),
            },
        );
        if let Some(points) = awarded {
            self.add_score(out, sent_at, points);
        }
    }

    fn describe_outcome(&self, outcome: ActionOutcome) -> String {
        let names = &self.config.dances;
        match outcome {
            ActionOutcome::Dance(d) => format!("dances to {}", names.name(d)),
            ActionOutcome::SmallChaos(d) => format!("small chaos: {}", names.name(d)),
            ActionOutcome::Chaos => format!("CHAOS! {}", self.config.chaos_track),
        }
    }

    // ------------------------------------------------------------- snapshot

    /// Canonical JSON of the full state, RNG position included. Two states
    /// that compare equal produce identical strings.
    pub fn snapshot_json(&self) -> String {
        self.snapshot_value().to_string()
    }

    pub fn snapshot_value(&self) -> Value {
        let mut m = Map::new();
        m.insert("room_id".into(), self.room_id.clone().into());
        m.insert("mode".into(), self.mode.as_str().into());
        m.insert("score".into(), self.score.into());
        m.insert("mission_target".into(), self.mission_target.into());
        m.insert("mission_complete".into(), self.mission_complete.into());
        m.insert("next_seq".into(), self.next_seq.into());
        m.insert("rng_seed".into(), self.rng.seed().into());
        m.insert("rng_word_pos".into(), self.rng.word_pos().to_string().into());

        let players: Vec<Value> = self
            .players
            .values()
            .map(|p| {
                let mut pm = Map::new();
                pm.insert("id".into(), p.id.as_str().into());
                pm.insert("display_name".into(), p.display_name.clone().into());
                pm.insert("color".into(), p.color.as_str().into());
                pm.insert("joined_at_seq".into(), p.joined_at_seq.into());
                pm.insert("tap_gestures".into(), self.tap_gestures(&p.id).into());
                Value::Object(pm)
            })
            .collect();
        m.insert("players".into(), players.into());

        let mut avatar = Map::new();
        let animation = match self.avatar.animation {
            Animation::Idle => Value::from("idle"),
            Animation::Playing(o) => outcome_value(o),
        };
        avatar.insert("animation".into(), animation);
        if let Some(f) = &self.avatar.facing {
            avatar.insert("facing".into(), f.as_str().into());
        }
        m.insert("avatar".into(), Value::Object(avatar));

        if let Some(game) = &self.minigame {
            let mut g = snapshot_value(&game.snapshot(None));
            if let (MinigameState::Word(w), Value::Object(gm)) = (game, &mut g) {
                gm.insert("secret".into(), w.secret().into());
            }
            m.insert("minigame".into(), g);
        }
        Value::Object(m)
    }
}

fn minigame_title(kind: MinigameKind) -> &'static str {
    match kind {
        MinigameKind::HiddenObjects => "hidden objects",
        MinigameKind::Quiz => "ghost quiz",
        MinigameKind::Word => "guess the word",
    }
}

fn describe_effect(effect: &InputEffect) -> String {
    match effect {
        InputEffect::MarkerPlaced => "marker placed".into(),
        InputEffect::MarkerMisplaced => "marker misplaced, try again".into(),
        InputEffect::ObjectFound { object_id } => format!("found {object_id}"),
        InputEffect::ChestOpened => "the chest is open".into(),
        InputEffect::Answered { correct: true } => "correct answer".into(),
        InputEffect::Answered { correct: false } => "wrong answer".into(),
        InputEffect::Guessed { guess, outcome } => match outcome {
            GuessOutcome::LetterHit { count } => format!("'{guess}' appears {count}x"),
            GuessOutcome::LetterMiss => format!("no '{guess}'"),
            GuessOutcome::WordHit => format!("the word was {guess}"),
            GuessOutcome::WordMiss => format!("not {guess}"),
        },
        InputEffect::Abandoned => "mini-game abandoned".into(),
    }
}
