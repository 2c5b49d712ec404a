//! Hangman-style word game with seven wrong attempts.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use super::MinigameError;

pub const MAX_WRONG_ATTEMPTS: u32 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WordStatus {
    InProgress,
    Won,
    Lost,
    Abandoned,
}

impl WordStatus {
    pub const ALL: [WordStatus; 4] = [
        WordStatus::InProgress,
        WordStatus::Won,
        WordStatus::Lost,
        WordStatus::Abandoned,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            WordStatus::InProgress => "in_progress",
            WordStatus::Won => "won",
            WordStatus::Lost => "lost",
            WordStatus::Abandoned => "abandoned",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|w| w.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuessOutcome {
    /// The letter occurs `count` times.
    LetterHit { count: usize },
    LetterMiss,
    WordHit,
    WordMiss,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordGameState {
    secret: Vec<char>,
    revealed: Vec<bool>,
    wrong_attempts: u32,
    guessed_letters: BTreeSet<char>,
    status: WordStatus,
}

impl WordGameState {
    pub fn new(secret: &str) -> Self {
        let secret: Vec<char> = secret.chars().collect();
        WordGameState {
            revealed: alloc::vec![false; secret.len()],
            secret,
            wrong_attempts: 0,
            guessed_letters: BTreeSet::new(),
            status: WordStatus::InProgress,
        }
    }

    pub fn secret(&self) -> String {
        self.secret.iter().collect()
    }

    pub fn len(&self) -> usize {
        self.secret.len()
    }

    pub fn is_empty(&self) -> bool {
        self.secret.is_empty()
    }

    pub fn revealed(&self) -> &[bool] {
        &self.revealed
    }

    pub fn wrong_attempts(&self) -> u32 {
        self.wrong_attempts
    }

    pub fn guessed_letters(&self) -> &BTreeSet<char> {
        &self.guessed_letters
    }

    pub fn status(&self) -> WordStatus {
        self.status
    }

    pub fn is_finished(&self) -> bool {
        self.status != WordStatus::InProgress
    }

    /// The board as players see it: hidden letters are `_`.
    pub fn pattern(&self) -> String {
        self.secret
            .iter()
            .zip(&self.revealed)
            .map(|(c, shown)| if *shown { *c } else { '_' })
            .collect()
    }

    /// Guess one letter or the whole word. Input is trimmed and lowercased.
    pub fn guess(&mut self, input: &str) -> Result<GuessOutcome, MinigameError> {
        if self.is_finished() {
            return Err(MinigameError::GameOver);
        }
        let guess: Vec<char> = input.trim().chars().flat_map(char::to_lowercase).collect();
        if guess.is_empty() || !guess.iter().all(|c| c.is_alphabetic()) {
            return Err(MinigameError::InvalidGuess);
        }

        if let [letter] = guess[..] {
            if !self.guessed_letters.insert(letter) {
                return Err(MinigameError::RepeatedLetter);
            }
            let mut count = 0;
            for (c, shown) in self.secret.iter().zip(self.revealed.iter_mut()) {
                if *c == letter {
                    *shown = true;
                    count += 1;
                }
            }
            if count == 0 {
                self.miss();
                return Ok(GuessOutcome::LetterMiss);
            }
            if self.revealed.iter().all(|r| *r) {
                self.status = WordStatus::Won;
            }
            return Ok(GuessOutcome::LetterHit { count });
        }

        if guess == self.secret {
            self.revealed.iter_mut().for_each(|r| *r = true);
            self.status = WordStatus::Won;
            Ok(GuessOutcome::WordHit)
        } else {
            self.miss();
            Ok(GuessOutcome::WordMiss)
        }
    }

    fn miss(&mut self) {
        self.wrong_attempts += 1;
        if self.wrong_attempts >= MAX_WRONG_ATTEMPTS {
            self.status = WordStatus::Lost;
        }
    }

    pub fn abandon(&mut self) -> Result<(), MinigameError> {
        if self.is_finished() {
            return Err(MinigameError::GameOver);
        }
        self.status = WordStatus::Abandoned;
        Ok(())
    }

    /// 4 for a win with at most 3 misses, 3 for a win with 4 to 6, else 0.
    pub fn earned_points(&self) -> u32 {
        match self.status {
            WordStatus::Won if self.wrong_attempts <= 3 => 4,
            WordStatus::Won => 3,
            _ => 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn letter_reveals_all_positions() {
        let mut ws = WordGameState::new("chave");
        assert_eq!(ws.guess("a"), Ok(GuessOutcome::LetterHit { count: 1 }));
        assert_eq!(ws.revealed(), &[false, false, true, false, false]);
        assert_eq!(ws.pattern(), "__a__");
        assert_eq!(ws.wrong_attempts(), 0);

        let mut ws = WordGameState::new("banana");
        assert_eq!(ws.guess("A"), Ok(GuessOutcome::LetterHit { count: 3 }));
        assert_eq!(ws.pattern(), "_a_a_a");
    }

    #[test]
    fn seventh_miss_loses() {
        let mut ws = WordGameState::new("chave");
        for (i, l) in ["b", "d", "f", "g", "i", "j"].iter().enumerate() {
            assert_eq!(ws.guess(l), Ok(GuessOutcome::LetterMiss));
            assert_eq!(ws.wrong_attempts(), i as u32 + 1);
            assert_eq!(ws.status(), WordStatus::InProgress);
        }
        assert_eq!(ws.guess("chaves"), Ok(GuessOutcome::WordMiss));
        assert_eq!(ws.status(), WordStatus::Lost);
        assert_eq!(ws.earned_points(), 0);
        assert_eq!(ws.guess("c"), Err(MinigameError::GameOver));
    }

    #[test]
    fn full_word_wins() {
        let mut ws = WordGameState::new("chave");
        ws.guess("x").unwrap();
        assert_eq!(ws.guess(" Chave "), Ok(GuessOutcome::WordHit));
        assert_eq!(ws.status(), WordStatus::Won);
        assert_eq!(ws.pattern(), "chave");
        assert_eq!(ws.earned_points(), 4);
    }

    #[test]
    fn repeated_letter_is_free() {
        let mut ws = WordGameState::new("chave");
        ws.guess("z").unwrap();
        let before = ws.clone();
        assert_eq!(ws.guess("z"), Err(MinigameError::RepeatedLetter));
        assert_eq!(ws.guess("Z"), Err(MinigameError::RepeatedLetter));
        assert_eq!(ws, before);
    }

    #[test]
    fn invalid_guesses() {
        let mut ws = WordGameState::new("chave");
        assert_eq!(ws.guess(""), Err(MinigameError::InvalidGuess));
        assert_eq!(ws.guess("  "), Err(MinigameError::InvalidGuess));
        assert_eq!(ws.guess("4"), Err(MinigameError::InvalidGuess));
        assert_eq!(ws.guess("ch ave"), Err(MinigameError::InvalidGuess));
        assert_eq!(ws.wrong_attempts(), 0);
    }

    #[test]
    fn point_schedule() {
        let mut ws = WordGameState::new("ab");
        for l in ["c", "d", "e", "f"] {
            ws.guess(l).unwrap();
        }
        ws.guess("ab").unwrap();
        assert_eq!(ws.earned_points(), 3);

        let mut ws = WordGameState::new("ab");
        for l in ["c", "d", "e"] {
            ws.guess(l).unwrap();
        }
        ws.guess("a").unwrap();
        ws.guess("b").unwrap();
        assert_eq!(ws.status(), WordStatus::Won);
        assert_eq!(ws.earned_points(), 4);
    }
}
