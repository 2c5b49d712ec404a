//! Tap-burst classification for clients that send raw tap timestamps.

use crate::types::GestureEvent;

/// Default maximum gap between two taps of the same burst.
pub const DEFAULT_BURST_WINDOW_MS: u64 = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum GestureError {
    #[error("no tap timestamps supplied")]
    EmptyInput,
    #[error("tap timestamps are not sorted ascending (index {index})")]
    Unsorted { index: usize },
}

/// Collapse sorted tap timestamps into the final maximal burst.
///
/// Taps belong to the same burst while each consecutive gap is at most
/// `burst_window_ms`. Earlier bursts are assumed to have been flushed
/// already, so only the trailing one is reported.
pub fn classify_gesture(
    tap_timestamps: &[u64],
    burst_window_ms: u64,
) -> Result<GestureEvent, GestureError> {
    if tap_timestamps.is_empty() {
        return Err(GestureError::EmptyInput);
    }
    if let Some(i) = tap_timestamps.windows(2).position(|w| w[1] < w[0]) {
        return Err(GestureError::Unsorted { index: i + 1 });
    }
    let trailing_gaps = tap_timestamps
        .windows(2)
        .rev()
        .take_while(|w| w[1] - w[0] <= burst_window_ms)
        .count();
    Ok(GestureEvent::TapBurst {
        count: (trailing_gaps + 1) as u32,
    })
}
