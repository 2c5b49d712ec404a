//! Domain vocabulary shared by the reducer, the mini-games and the wire codec.

use alloc::string::String;
use core::fmt;

/// Opaque player identifier. The server hands out `p1`, `p2`, ... per room.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlayerId(pub String);

impl PlayerId {
    pub fn new(id: impl Into<String>) -> Self {
        PlayerId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Fixed identity palette. Order matters: joins take the first free entry.
pub const PALETTE: [&str; 8] = [
    "#E6194B", "#3CB44B", "#FFE119", "#4363D8", "#F58231", "#911EB4", "#42D4F4", "#F032E6",
];

/// A player's identity color, always one of [`PALETTE`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Color(u8);

impl Color {
    pub fn from_index(index: usize) -> Option<Self> {
        (index < PALETTE.len()).then_some(Color(index as u8))
    }

    pub fn parse(hex: &str) -> Option<Self> {
        PALETTE.iter().position(|c| *c == hex).map(|i| Color(i as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn as_str(self) -> &'static str {
        PALETTE[self.0 as usize]
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Room-global game mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GameMode {
    /// Free exploration of the short actions. No points.
    #[default]
    Toques,
    /// Story mode, short actions only.
    HistoriaAvatar,
    /// Story mode with the mini-games unlocked.
    HistoriaSurpresa,
}

impl GameMode {
    pub const ALL: [GameMode; 3] = [
        GameMode::Toques,
        GameMode::HistoriaAvatar,
        GameMode::HistoriaSurpresa,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GameMode::Toques => "toques",
            GameMode::HistoriaAvatar => "historia_avatar",
            GameMode::HistoriaSurpresa => "historia_surpresa",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s)
    }

    /// Whether actions in this mode count toward the mission.
    pub fn awards_points(self) -> bool {
        !matches!(self, GameMode::Toques)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SwipeDirection {
    Up,
    Down,
    Left,
    Right,
}

impl SwipeDirection {
    pub const ALL: [SwipeDirection; 4] = [
        SwipeDirection::Up,
        SwipeDirection::Down,
        SwipeDirection::Left,
        SwipeDirection::Right,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SwipeDirection::Up => "up",
            SwipeDirection::Down => "down",
            SwipeDirection::Left => "left",
            SwipeDirection::Right => "right",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.as_str() == s)
    }
}

/// A classified short gesture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GestureEvent {
    /// `count` taps inside one burst window. Always at least 1.
    TapBurst { count: u32 },
    Swipe { direction: SwipeDirection },
}

/// The four dances the avatar knows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dance {
    Macarena,
    Samba,
    MoveIt,
    Twist,
}

impl Dance {
    pub const ALL: [Dance; 4] = [Dance::Macarena, Dance::Samba, Dance::MoveIt, Dance::Twist];

    pub fn as_str(self) -> &'static str {
        match self {
            Dance::Macarena => "macarena",
            Dance::Samba => "samba",
            Dance::MoveIt => "move_it",
            Dance::Twist => "twist",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.as_str() == s)
    }
}

/// What a short action made the avatar do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActionOutcome {
    Dance(Dance),
    /// A 4+ tap burst above the chaos threshold: a random dance.
    SmallChaos(Dance),
    /// A 4+ tap burst below the chaos threshold: the fixed chaos track.
    Chaos,
}

impl ActionOutcome {
    /// The dance being performed, if any (chaos has its own track).
    pub fn dance(self) -> Option<Dance> {
        match self {
            ActionOutcome::Dance(d) | ActionOutcome::SmallChaos(d) => Some(d),
            ActionOutcome::Chaos => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Animation {
    #[default]
    Idle,
    Playing(ActionOutcome),
}

/// The shared avatar: what it is doing and whom it is facing.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AvatarState {
    pub animation: Animation,
    pub facing: Option<PlayerId>,
}

/// Abstract 2D pose of the movable marker: scene units plus rotation in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub rot_deg: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, rot_deg: f64) -> Self {
        Pose { x, y, rot_deg }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.rot_deg.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MinigameKind {
    HiddenObjects,
    Quiz,
    Word,
}

impl MinigameKind {
    pub const ALL: [MinigameKind; 3] = [
        MinigameKind::HiddenObjects,
        MinigameKind::Quiz,
        MinigameKind::Word,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MinigameKind::HiddenObjects => "hidden_objects",
            MinigameKind::Quiz => "quiz",
            MinigameKind::Word => "word",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}
