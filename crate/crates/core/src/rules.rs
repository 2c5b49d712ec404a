//! Short-action grammar, the chaos rule and the point table.

use core::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::types::{ActionOutcome, Dance, GameMode, GestureEvent};

/// Default collaborative mission size.
pub const DEFAULT_MISSION_TARGET: u32 = 20;

/// Points for the individual outcomes in story modes.
pub const DANCE_POINTS: u32 = 1;
pub const SMALL_CHAOS_POINTS: u32 = 2;
pub const CHAOS_POINTS: u32 = 3;

/// Tap bursts at or above this size go through the chaos rule.
pub const CHAOS_MIN_TAPS: u32 = 4;

/// Positive rational threshold for the tap-gestures-per-user ratio.
///
/// Held as an exact fraction so that grid evaluations never suffer from
/// float rounding. On the wire and in config files it is a JSON number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChaosThreshold {
    num: u64,
    den: u64,
}

/// Fixed-point scale used when reading a threshold from a float.
const THRESHOLD_SCALE: u64 = 1_000_000;

impl ChaosThreshold {
    pub const DEFAULT: ChaosThreshold = ChaosThreshold { num: 1, den: 1 };

    pub fn new(num: u64, den: u64) -> Option<Self> {
        if num == 0 || den == 0 {
            return None;
        }
        let g = gcd(num, den);
        Some(ChaosThreshold {
            num: num / g,
            den: den / g,
        })
    }

    /// Reads a positive float with six decimal digits of precision.
    pub fn from_f64(value: f64) -> Option<Self> {
        if !value.is_finite() || value <= 0.0 || value > (u32::MAX as f64) {
            return None;
        }
        let scaled = value * THRESHOLD_SCALE as f64;
        // round half away from zero without std
        let rounded = (scaled + 0.5) as u64;
        Self::new(rounded, THRESHOLD_SCALE)
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn numerator(self) -> u64 {
        self.num
    }

    pub fn denominator(self) -> u64 {
        self.den
    }
}

impl Default for ChaosThreshold {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl fmt::Display for ChaosThreshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl Serialize for ChaosThreshold {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.as_f64())
    }
}

impl<'de> Deserialize<'de> for ChaosThreshold {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(deserializer)?;
        ChaosThreshold::from_f64(v)
            .ok_or_else(|| serde::de::Error::custom("chaos threshold must be a positive number"))
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Which of the two chaos outcomes a 4+ tap burst resolves to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChaosLevel {
    SmallChaos,
    Chaos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum ChaosError {
    #[error("chaos decision needs at least one user in the room")]
    ZeroUsers,
}

/// Full chaos iff `individual_tap_gestures / num_users < threshold`.
///
/// Many users or few individual actions push the ratio down and make the
/// full chaos more likely.
pub fn chaos_decision(
    individual_tap_gestures: u64,
    num_users: u64,
    threshold: ChaosThreshold,
) -> Result<ChaosLevel, ChaosError> {
    if num_users == 0 {
        return Err(ChaosError::ZeroUsers);
    }
    // taps / users < num / den  <=>  taps * den < num * users
    let lhs = individual_tap_gestures as u128 * threshold.den as u128;
    let rhs = threshold.num as u128 * num_users as u128;
    Ok(if lhs < rhs {
        ChaosLevel::Chaos
    } else {
        ChaosLevel::SmallChaos
    })
}

/// Fixed part of the gesture grammar. `None` means the burst goes through
/// [`chaos_decision`].
pub fn fixed_outcome(gesture: GestureEvent) -> Option<ActionOutcome> {
    match gesture {
        GestureEvent::TapBurst { count: 1 } => Some(ActionOutcome::Dance(Dance::Macarena)),
        GestureEvent::TapBurst { count: 2 } => Some(ActionOutcome::Dance(Dance::Samba)),
        GestureEvent::TapBurst { count: 3 } => Some(ActionOutcome::Dance(Dance::MoveIt)),
        GestureEvent::Swipe { .. } => Some(ActionOutcome::Dance(Dance::Twist)),
        GestureEvent::TapBurst { .. } => None,
    }
}

/// Points a short action is worth in the given mode.
pub fn score_action(mode: GameMode, outcome: ActionOutcome) -> u32 {
    if !mode.awards_points() {
        return 0;
    }
    match outcome {
        ActionOutcome::Dance(_) => DANCE_POINTS,
        ActionOutcome::SmallChaos(_) => SMALL_CHAOS_POINTS,
        ActionOutcome::Chaos => CHAOS_POINTS,
    }
}
