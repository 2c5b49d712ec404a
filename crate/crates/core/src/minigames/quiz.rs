//! The ghost quiz: questions are answered strictly in order, one attempt each.

use alloc::string::String;
use alloc::vec::Vec;

use super::MinigameError;
use crate::narrative::QuizQuestion;
use crate::text::normalize_answer;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuizState {
    questions: Vec<QuizQuestion>,
    question_index: usize,
    correct_count: usize,
    last_correct: Option<bool>,
    finished: bool,
    abandoned: bool,
}

impl QuizState {
    pub fn new(questions: &[QuizQuestion]) -> Self {
        QuizState {
            questions: questions.to_vec(),
            question_index: 0,
            correct_count: 0,
            last_correct: None,
            finished: questions.is_empty(),
            abandoned: false,
        }
    }

    pub fn question_index(&self) -> usize {
        self.question_index
    }

    pub fn correct_count(&self) -> usize {
        self.correct_count
    }

    pub fn total_questions(&self) -> usize {
        self.questions.len()
    }

    pub fn last_correct(&self) -> Option<bool> {
        self.last_correct
    }

    pub fn current_question(&self) -> Option<&str> {
        if self.finished {
            return None;
        }
        self.questions
            .get(self.question_index)
            .map(|q| q.question.as_str())
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn is_abandoned(&self) -> bool {
        self.abandoned
    }

    /// Answers the current question and moves on regardless of the result.
    pub fn answer(&mut self, transcript: &str) -> Result<bool, MinigameError> {
        if self.finished {
            return Err(MinigameError::QuizFinished);
        }
        let said: String = normalize_answer(transcript);
        let correct = self.questions[self.question_index]
            .accepted_answers
            .iter()
            .any(|a| normalize_answer(a) == said);
        if correct {
            self.correct_count += 1;
        }
        self.last_correct = Some(correct);
        self.question_index += 1;
        self.finished = self.question_index == self.questions.len();
        Ok(correct)
    }

    pub fn abandon(&mut self) -> Result<(), MinigameError> {
        if self.finished {
            return Err(MinigameError::QuizFinished);
        }
        self.abandoned = true;
        self.finished = true;
        Ok(())
    }

    /// One point per correct answer, capped at four.
    pub fn earned_points(&self) -> u32 {
        self.correct_count.min(4) as u32
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;

    fn questions(n: usize) -> Vec<QuizQuestion> {
        (0..n)
            .map(|i| QuizQuestion {
                question: format!("q{i}"),
                accepted_answers: vec![format!("Resposta {i}"), "Avó".into()],
            })
            .collect()
    }

    #[test]
    fn normalization_accepts_case_and_accents() {
        let mut qs = QuizState::new(&questions(3));
        assert_eq!(qs.answer("RESPOSTA 0"), Ok(true));
        assert_eq!(qs.answer("  avo "), Ok(true));
        assert_eq!(qs.correct_count(), 2);
    }

    #[test]
    fn wrong_answer_still_advances() {
        let mut qs = QuizState::new(&questions(2));
        assert_eq!(qs.answer("banana"), Ok(false));
        assert_eq!(qs.question_index(), 1);
        assert_eq!(qs.correct_count(), 0);
        assert_eq!(qs.current_question(), Some("q1"));
    }

    #[test]
    fn answering_after_last_question_fails() {
        let mut qs = QuizState::new(&questions(1));
        qs.answer("resposta 0").unwrap();
        assert!(qs.is_finished());
        assert_eq!(qs.current_question(), None);
        assert_eq!(qs.answer("x"), Err(MinigameError::QuizFinished));
    }

    #[test]
    fn points_are_capped() {
        let mut qs = QuizState::new(&questions(8));
        for i in 0..8 {
            let t = if i < 6 { format!("resposta {i}") } else { "no".into() };
            qs.answer(&t).unwrap();
        }
        assert_eq!(qs.correct_count(), 6);
        assert_eq!(qs.earned_points(), 4);
    }

    #[test]
    fn abandon_finishes_with_partial_credit() {
        let mut qs = QuizState::new(&questions(5));
        qs.answer("resposta 0").unwrap();
        qs.abandon().unwrap();
        assert!(qs.is_finished());
        assert_eq!(qs.earned_points(), 1);
        assert_eq!(qs.abandon(), Err(MinigameError::QuizFinished));
    }
}
