//! Deterministic core of a shared-avatar room.
//!
//! Several clients in one room drive a single virtual avatar with short
//! gestures (tap bursts and swipes) and, in the surprise story mode, with
//! three mini-games. A single writer orders every event, scores it toward a
//! collaborative mission and broadcasts the result.
//!
//! This crate holds everything that does not touch IO:
//!
//! - [`protocol`]: envelope/message schema and canonical NDJSON codec.
//! - [`session`]: the room reducer, [`RoomState::apply_event`].
//! - [`rules`]: gesture grammar, chaos decision, point table.
//! - [`gesture`]: raw tap timestamps to tap bursts.
//! - [`minigames`]: hidden objects, ghost quiz, word game.
//! - [`narrative`]: story config loading and linting.
//!
//! It is `no_std` and only needs `alloc`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod gesture;
pub mod minigames;
pub mod narrative;
pub mod protocol;
pub mod rng;
pub mod rules;
pub mod session;
pub mod text;
pub mod types;

pub use narrative::{load_config, validate_config, NarrativeConfig};
pub use protocol::{decode_message, encode_message, Envelope, Message, Sender};
pub use session::RoomState;
pub use types::{ActionOutcome, Color, Dance, GameMode, GestureEvent, PlayerId};
