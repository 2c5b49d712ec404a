//! Long actions: the three mini-games of the surprise mode.
//!
//! Each game is a small state machine that only moves forward and reports
//! misuse as a typed [`MinigameError`]. None of them can be worth more than
//! [`MAX_MINIGAME_POINTS`].

mod hidden_objects;
mod quiz;
mod word;

use alloc::string::String;
use alloc::vec::Vec;

pub use hidden_objects::{angle_between, pose_within, HiddenObjectsState, HiddenPhase};
pub use quiz::QuizState;
pub use word::{GuessOutcome, WordGameState, WordStatus, MAX_WRONG_ATTEMPTS};

use crate::narrative::NarrativeConfig;
use crate::types::{MinigameKind, Pose};

pub const MAX_MINIGAME_POINTS: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum MinigameError {
    #[error("input not valid in the current phase")]
    WrongPhase,
    #[error("no such hidden object")]
    UnknownObject,
    #[error("object already found")]
    AlreadyFound,
    #[error("marker pose must be finite")]
    InvalidPose,
    #[error("quiz already finished")]
    QuizFinished,
    #[error("game is over")]
    GameOver,
    #[error("letter already guessed")]
    RepeatedLetter,
    #[error("guess must be a letter or a word")]
    InvalidGuess,
    #[error("input does not belong to the active mini-game")]
    WrongMinigame,
    #[error("mini-game has not finished")]
    NotFinished,
}

/// Player input for the active mini-game.
#[derive(Debug, Clone, PartialEq)]
pub enum MinigameInput {
    PlaceMarker(Pose),
    FindObject { object_id: String },
    UseKey,
    Answer { transcript: String },
    Guess { text: String },
    /// Stop the game early and bank whatever it has earned so far.
    Abandon,
}

/// What an accepted input did, for notifications.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InputEffect {
    MarkerPlaced,
    MarkerMisplaced,
    ObjectFound { object_id: String },
    ChestOpened,
    Answered { correct: bool },
    Guessed { guess: String, outcome: GuessOutcome },
    Abandoned,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MinigameState {
    HiddenObjects(HiddenObjectsState),
    Quiz(QuizState),
    Word(WordGameState),
}

impl MinigameState {
    /// Fresh game. `word_index` picks the secret for the word game and is
    /// ignored otherwise.
    pub fn start(kind: MinigameKind, config: &NarrativeConfig, word_index: usize) -> Self {
        match kind {
            MinigameKind::HiddenObjects => {
                MinigameState::HiddenObjects(HiddenObjectsState::new(&config.hidden_objects))
            }
            MinigameKind::Quiz => MinigameState::Quiz(QuizState::new(&config.quiz)),
            MinigameKind::Word => MinigameState::Word(WordGameState::new(&config.words[word_index])),
        }
    }

    pub fn kind(&self) -> MinigameKind {
        match self {
            MinigameState::HiddenObjects(_) => MinigameKind::HiddenObjects,
            MinigameState::Quiz(_) => MinigameKind::Quiz,
            MinigameState::Word(_) => MinigameKind::Word,
        }
    }

    pub fn is_finished(&self) -> bool {
        match self {
            MinigameState::HiddenObjects(s) => s.is_finished(),
            MinigameState::Quiz(s) => s.is_finished(),
            MinigameState::Word(s) => s.is_finished(),
        }
    }

    pub fn is_abandoned(&self) -> bool {
        match self {
            MinigameState::HiddenObjects(s) => s.is_abandoned(),
            MinigameState::Quiz(s) => s.is_abandoned(),
            MinigameState::Word(s) => s.status() == WordStatus::Abandoned,
        }
    }

    pub fn apply(&mut self, input: &MinigameInput) -> Result<InputEffect, MinigameError> {
        use MinigameInput as In;
        match (self, input) {
            (MinigameState::HiddenObjects(s), In::Abandon) => s.abandon().map(|_| InputEffect::Abandoned),
            (MinigameState::Quiz(s), In::Abandon) => s.abandon().map(|_| InputEffect::Abandoned),
            (MinigameState::Word(s), In::Abandon) => s.abandon().map(|_| InputEffect::Abandoned),
            (MinigameState::HiddenObjects(s), In::PlaceMarker(pose)) => Ok(if s.place_marker(*pose)? {
                InputEffect::MarkerPlaced
            } else {
                InputEffect::MarkerMisplaced
            }),
            (MinigameState::HiddenObjects(s), In::FindObject { object_id }) => {
                s.find_object(object_id)?;
                Ok(InputEffect::ObjectFound {
                    object_id: object_id.clone(),
                })
            }
            (MinigameState::HiddenObjects(s), In::UseKey) => {
                s.use_key()?;
                Ok(InputEffect::ChestOpened)
            }
            (MinigameState::Quiz(s), In::Answer { transcript }) => {
                let correct = s.answer(transcript)?;
                Ok(InputEffect::Answered { correct })
            }
            (MinigameState::Word(s), In::Guess { text }) => {
                let outcome = s.guess(text)?;
                Ok(InputEffect::Guessed {
                    guess: text.trim().to_lowercase(),
                    outcome,
                })
            }
            _ => Err(MinigameError::WrongMinigame),
        }
    }

    /// Points earned by a finished game.
    pub fn points(&self) -> Result<u32, MinigameError> {
        if !self.is_finished() {
            return Err(MinigameError::NotFinished);
        }
        Ok(match self {
            MinigameState::HiddenObjects(s) => s.earned_points(),
            MinigameState::Quiz(s) => s.earned_points(),
            MinigameState::Word(s) => s.earned_points(),
        })
    }

    /// Public view for broadcasting. The secret word stays hidden until
    /// the game ends.
    pub fn snapshot(&self, awarded: Option<u32>) -> MinigameSnapshot {
        let view = match self {
            MinigameState::HiddenObjects(s) => MinigameView::HiddenObjects {
                phase: s.phase(),
                marker_pose: s.marker_pose(),
                objects_found: s.objects_found().iter().cloned().collect(),
                objects_total: s.objects_total() as u32,
            },
            MinigameState::Quiz(s) => MinigameView::Quiz {
                question_index: s.question_index() as u32,
                total_questions: s.total_questions() as u32,
                correct_count: s.correct_count() as u32,
                current_question: s.current_question().map(String::from),
                last_correct: s.last_correct(),
            },
            MinigameState::Word(s) => MinigameView::Word {
                pattern: s.pattern(),
                wrong_attempts: s.wrong_attempts(),
                max_attempts: MAX_WRONG_ATTEMPTS,
                guessed_letters: s.guessed_letters().iter().collect(),
                status: s.status(),
                secret: s.is_finished().then(|| s.secret()),
            },
        };
        MinigameSnapshot {
            view,
            finished: self.is_finished(),
            abandoned: self.is_abandoned(),
            points: self.points().ok(),
            awarded,
        }
    }
}

/// Broadcast view of a mini-game.
#[derive(Debug, Clone, PartialEq)]
pub struct MinigameSnapshot {
    pub view: MinigameView,
    pub finished: bool,
    pub abandoned: bool,
    /// What the game is worth, once finished.
    pub points: Option<u32>,
    /// What was actually added to the room score (0 after the mission).
    pub awarded: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MinigameView {
    HiddenObjects {
        phase: HiddenPhase,
        marker_pose: Option<Pose>,
        objects_found: Vec<String>,
        objects_total: u32,
    },
    Quiz {
        question_index: u32,
        total_questions: u32,
        correct_count: u32,
        current_question: Option<String>,
        last_correct: Option<bool>,
    },
    Word {
        pattern: String,
        wrong_attempts: u32,
        max_attempts: u32,
        guessed_letters: String,
        status: WordStatus,
        secret: Option<String>,
    },
}

impl MinigameView {
    pub fn kind(&self) -> MinigameKind {
        match self {
            MinigameView::HiddenObjects { .. } => MinigameKind::HiddenObjects,
            MinigameView::Quiz { .. } => MinigameKind::Quiz,
            MinigameView::Word { .. } => MinigameKind::Word,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::narrative::{HiddenObjectsLayout, PoseTolerance, QuizQuestion, SceneObject};
    use alloc::vec;

    fn config() -> NarrativeConfig {
        NarrativeConfig {
            title: "t".into(),
            intro_text: "i".into(),
            tutorial_steps: vec![],
            mission_target: 20,
            dances: Default::default(),
            chaos_track: "Axel F".into(),
            quiz: vec![QuizQuestion {
                question: "q".into(),
                accepted_answers: vec!["sim".into()],
            }],
            words: vec!["ab".into(), "chave".into()],
            hidden_objects: HiddenObjectsLayout {
                target_pose: Pose::default(),
                tolerance: PoseTolerance::default(),
                objects: vec![SceneObject {
                    id: "a".into(),
                    x: 0.0,
                    y: 0.0,
                }],
            },
            burst_window_ms: 400,
            chaos_threshold: Default::default(),
        }
    }

    #[test]
    fn mismatched_input_is_rejected() {
        let cfg = config();
        let mut g = MinigameState::start(MinigameKind::Quiz, &cfg, 0);
        assert_eq!(
            g.apply(&MinigameInput::UseKey),
            Err(MinigameError::WrongMinigame)
        );
        assert_eq!(g.points(), Err(MinigameError::NotFinished));
    }

    #[test]
    fn word_snapshot_hides_secret_until_the_end() {
        let cfg = config();
        let mut g = MinigameState::start(MinigameKind::Word, &cfg, 1);
        let MinigameView::Word { secret, pattern, .. } = g.snapshot(None).view else {
            panic!()
        };
        assert_eq!(secret, None);
        assert_eq!(pattern, "_____");
        g.apply(&MinigameInput::Guess { text: "chave".into() }).unwrap();
        let snap = g.snapshot(Some(4));
        assert!(snap.finished);
        assert_eq!(snap.points, Some(4));
        let MinigameView::Word { secret, .. } = snap.view else { panic!() };
        assert_eq!(secret.as_deref(), Some("chave"));
    }

    #[test]
    fn hidden_objects_full_completion_is_four() {
        let cfg = config();
        let mut g = MinigameState::start(MinigameKind::HiddenObjects, &cfg, 0);
        g.apply(&MinigameInput::PlaceMarker(Pose::default())).unwrap();
        g.apply(&MinigameInput::FindObject { object_id: "a".into() }).unwrap();
        assert_eq!(g.apply(&MinigameInput::UseKey), Ok(InputEffect::ChestOpened));
        assert_eq!(g.points(), Ok(4));
    }
}
