//! Append-only session logs and their replay.
//!
//! A log is canonical protocol lines. Every reducer step is recorded as the
//! server-stamped input (seq 0, sender set to the player id the server
//! assigned) followed by the sequenced outputs it produced. The step is
//! written and flushed before any of its outputs are delivered.

use std::collections::VecDeque;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use avatar_sync_core::protocol::DecodeError;
use avatar_sync_core::{decode_message, encode_message, Envelope, NarrativeConfig, RoomState};

/// `<dir>/<room_id>.jsonl`
pub fn log_path(dir: &Path, room_id: &str) -> PathBuf {
    dir.join(format!("{room_id}.jsonl"))
}

pub struct SessionLog {
    out: BufWriter<File>,
    written: u64,
}

impl SessionLog {
    /// Starts a fresh log, replacing any previous file for the room.
    pub fn create(dir: &Path, room_id: &str) -> io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        let file = File::create(log_path(dir, room_id))?;
        Ok(SessionLog {
            out: BufWriter::new(file),
            written: 0,
        })
    }

    /// Appends one envelope and flushes.
    pub fn persist_event(&mut self, envelope: &Envelope) -> io::Result<()> {
        self.write(envelope)?;
        self.out.flush()
    }

    /// Appends a whole step with a single flush at the end.
    pub fn persist_step(&mut self, input: &Envelope, outputs: &[Envelope]) -> io::Result<()> {
        self.write(input)?;
        for env in outputs {
            self.write(env)?;
        }
        self.out.flush()
    }

    /// Bytes appended so far.
    pub fn bytes_written(&self) -> u64 {
        self.written
    }

    fn write(&mut self, envelope: &Envelope) -> io::Result<()> {
        let line = encode_message(envelope);
        self.out.write_all(line.as_bytes())?;
        self.written += line.len() as u64;
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("cannot read log: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {source}")]
    Decode { line: usize, source: DecodeError },
    #[error("sequence gap: expected {expected}, got {got}")]
    SeqGap { expected: u64, got: u64 },
    #[error("line {line}: recorded output differs from replay (seq {seq})")]
    Divergence { line: usize, seq: u64 },
    #[error("line {line}: output with no input before it")]
    OrphanOutput { line: usize },
}

/// Result of re-driving the reducer over a log.
#[derive(Debug)]
pub struct Replay {
    pub state: RoomState,
    /// Regenerated outputs, equal to the recorded ones.
    pub outputs: Vec<Envelope>,
    /// Steps replayed, the truncated tail excluded.
    pub steps: usize,
    /// Whether an incomplete final step was dropped.
    pub truncated: bool,
}

pub fn replay_log(path: &Path, config: Arc<NarrativeConfig>, seed: u64) -> Result<Replay, ReplayError> {
    let bytes = std::fs::read(path)?;
    let room_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    replay_bytes(&bytes, &room_id, config, seed)
}

/// Replays log contents for `room_id`. A room id found in the first input
/// line takes precedence.
///
/// Recorded outputs must match the regenerated ones byte for byte and
/// carry contiguous sequence numbers. A final step cut short by a crash (a
/// missing newline, or fewer outputs than the reducer produces) is dropped
/// and the state from before it is returned.
pub fn replay_bytes(
    bytes: &[u8],
    room_id: &str,
    config: Arc<NarrativeConfig>,
    seed: u64,
) -> Result<Replay, ReplayError> {
    let mut lines: Vec<&[u8]> = bytes.split_inclusive(|b| *b == b'\n').collect();
    let mut truncated = false;
    if lines.last().is_some_and(|l| !l.ends_with(b"\n")) {
        lines.pop();
        truncated = true;
    }

    let mut state: Option<RoomState> = None;
    let mut before_step: Option<RoomState> = None;
    let mut pending: VecDeque<Envelope> = VecDeque::new();
    let mut outputs = Vec::new();
    let mut step_outputs = 0usize;
    let mut steps = 0;
    let mut expected_seq = 1u64;

    for (i, raw) in lines.iter().enumerate() {
        let line = i + 1;
        if raw.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let env = decode_message(raw).map_err(|source| ReplayError::Decode { line, source })?;
        if env.seq == 0 {
            if let Some(seq) = pending.front().map(|e| e.seq) {
                return Err(ReplayError::SeqGap { expected: seq, got: 0 });
            }
            let room = state.get_or_insert_with(|| RoomState::new(env.room_id.clone(), config.clone(), seed));
            before_step = Some(room.clone());
            pending = room.apply_event(&env).into();
            step_outputs = 0;
            steps += 1;
            continue;
        }
        if env.seq != expected_seq {
            return Err(ReplayError::SeqGap {
                expected: expected_seq,
                got: env.seq,
            });
        }
        expected_seq += 1;
        let Some(regenerated) = pending.pop_front() else {
            return Err(ReplayError::OrphanOutput { line });
        };
        let recorded = std::str::from_utf8(raw).unwrap_or_default().trim_end_matches(['\r', '\n']);
        if encode_message(&regenerated).trim_end_matches('\n') != recorded {
            return Err(ReplayError::Divergence { line, seq: env.seq });
        }
        outputs.push(regenerated);
        step_outputs += 1;
    }

    if !pending.is_empty() {
        // the last step never made it to disk in full
        truncated = true;
        state = before_step;
        steps -= 1;
        outputs.truncate(outputs.len() - step_outputs);
    }
    let state = state.unwrap_or_else(|| RoomState::new(room_id, config, seed));
    Ok(Replay {
        state,
        outputs,
        steps,
        truncated,
    })
}
