//! Protocol state machine for one experimental session.
//!
//! A session walks through every trial of a list: present the trial,
//! optionally answer one question (QA mode), accept a build (with a rating
//! in confidence mode), give feedback, and move on. After the first block
//! the speaker changes; after the last trial the builder is asked for a
//! debrief. Every step is appended to the [`Transcript`].

mod prompts;
mod replay;
mod transcript;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::speakers::{
    answer_question, make_feedback, AnswerMessage, ExperimentList, FeedbackMessage, Item, Mode,
    Speaker,
};
use crate::world::{parse_wire, render_wire, Structure, WorldError};

pub use prompts::{debrief_text, speaker_change_text, system_prompt, trial_text, QUESTION_REFUSAL};
pub use replay::replay;
pub use transcript::{Event, EventKind, Transcript};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("{QUESTION_REFUSAL}")]
    QuestionLimitExceeded,
    #[error("action not available in {0:?} mode")]
    WrongMode(Mode),
    #[error("action not available in phase {0:?}")]
    WrongPhase(Phase),
    #[error("a rating from 1 to 4 is required in confidence mode")]
    MissingRating,
    #[error("ratings are not collected in QA mode")]
    UnexpectedRating,
    #[error("rating {0} is outside 1-4")]
    InvalidRating(u8),
    #[error("invalid structure: {0}")]
    InvalidStructure(#[from] WorldError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("replay diverged at event {seq}: {reason}")]
    ReplayDivergence { seq: u64, reason: String },
    #[error("transcript format: {0}")]
    Format(String),
}

impl SessionError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::QuestionLimitExceeded => "question_limit",
            SessionError::WrongMode(_) => "wrong_mode",
            SessionError::WrongPhase(_) => "wrong_phase",
            SessionError::MissingRating => "missing_rating",
            SessionError::UnexpectedRating => "unexpected_rating",
            SessionError::InvalidRating(_) => "invalid_rating",
            SessionError::InvalidStructure(_) => "invalid_structure",
            SessionError::InvalidConfig(_) => "invalid_config",
            SessionError::ReplayDivergence { .. } => "replay_divergence",
            SessionError::Format(_) => "format",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Payoffs {
    pub correct: i64,
    pub incorrect: i64,
    pub question: i64,
}

impl Default for Payoffs {
    fn default() -> Self {
        Payoffs {
            correct: 10,
            incorrect: -10,
            question: -5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub mode: Mode,
    pub list: Arc<ExperimentList>,
    pub payoffs: Payoffs,
    /// Exposed to agents; the engine itself does not use it.
    pub posterior_carry_over: bool,
    pub seed: u64,
    /// Label for whoever is building (agent name, "human", ...).
    pub participant: String,
}

impl SessionConfig {
    pub fn new(list: Arc<ExperimentList>, participant: impl Into<String>) -> Self {
        SessionConfig {
            mode: list.mode,
            seed: list.seed,
            list,
            payoffs: Payoffs::default(),
            posterior_carry_over: false,
            participant: participant.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    AwaitingAction,
    AwaitingBuildAfterAnswer,
    Debrief,
    Done,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionState {
    pub phase: Phase,
    pub trial_index: usize,
    pub questions_this_trial: u8,
    pub rejections_this_trial: u8,
    pub total_score: i64,
    pub correct: usize,
    pub incorrect: usize,
    pub questions: usize,
    pub transcript: Transcript,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialPrompt {
    pub trial: usize,
    /// 0 for the first speaker block, 1 for the second.
    pub speaker_index: usize,
    pub existing: Structure,
    pub instruction: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptMessage {
    pub system: String,
    pub trial: TrialPrompt,
}

impl PromptMessage {
    pub fn full_text(&self) -> String {
        format!("{}\n\n{}", self.system, self.trial.text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeakerChangeMessage {
    pub speaker_index: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Next {
    Trial(TrialPrompt),
    Debrief { text: String },
}

/// Everything the builder is told after a build.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub feedback: FeedbackMessage,
    pub speaker_change: Option<SpeakerChangeMessage>,
    pub next: Next,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rejection {
    /// The builder gets one more try; the message explains what went wrong.
    Reprompt(String),
    /// Second failure in the trial: scored as an incorrect build.
    Forfeited(Turn),
}

/// Splits a builder reply such as `Coordinates: Blue,0,50,0; Rating:3`
/// into a structure and an optional rating.
pub fn parse_build_response(raw: &str) -> Result<(Structure, Option<u8>), WorldError> {
    let mut text = raw.trim();
    if let Some(rest) = text
        .strip_prefix("Coordinates:")
        .or_else(|| text.strip_prefix("coordinates:"))
    {
        text = rest;
    }
    let (wire, rating) = match text.rfind("Rating:") {
        Some(at) => {
            let value = text[at + "Rating:".len()..].trim().trim_end_matches('.');
            let rating = value.parse::<u8>().map_err(|_| WorldError::Parse {
                index: 0,
                token: value.to_string(),
                reason: "rating is not a number".into(),
            })?;
            (&text[..at], Some(rating))
        }
        None => (text, None),
    };
    Ok((parse_wire(wire)?, rating))
}

#[derive(Debug, Clone)]
pub struct Session {
    config: SessionConfig,
    state: SessionState,
}

impl Session {
    pub fn start(config: SessionConfig) -> Result<(Session, PromptMessage), SessionError> {
        if config.list.mode != config.mode {
            return Err(SessionError::InvalidConfig(format!(
                "list {} is a {} list, session mode is {}",
                config.list.id,
                config.list.mode.as_str(),
                config.mode.as_str()
            )));
        }
        if config.list.blocks.len() != 2 || config.list.blocks.iter().any(|b| b.items.is_empty()) {
            return Err(SessionError::InvalidConfig(
                "a session needs two non-empty speaker blocks".into(),
            ));
        }
        let system = system_prompt(config.mode);
        let mut transcript = Transcript::new();
        transcript.push(EventKind::SessionStart {
            list_id: config.list.id.clone(),
            mode: config.mode,
            seed: config.seed,
            participant: config.participant.clone(),
            carry_over: config.posterior_carry_over,
            payoffs: config.payoffs,
            system_prompt: system.clone(),
        });
        let mut session = Session {
            config,
            state: SessionState {
                phase: Phase::AwaitingAction,
                trial_index: 0,
                questions_this_trial: 0,
                rejections_this_trial: 0,
                total_score: 0,
                correct: 0,
                incorrect: 0,
                questions: 0,
                transcript,
            },
        };
        let trial = session.present(0);
        Ok((session, PromptMessage { system, trial }))
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn transcript(&self) -> &Transcript {
        &self.state.transcript
    }

    pub fn into_transcript(self) -> Transcript {
        self.state.transcript
    }

    pub fn mode(&self) -> Mode {
        self.config.mode
    }

    pub fn phase(&self) -> Phase {
        self.state.phase
    }

    pub fn is_done(&self) -> bool {
        self.state.phase == Phase::Done
    }

    fn item(&self, trial: usize) -> (usize, &Item) {
        self.config
            .list
            .trial(trial)
            .expect("trial index stays within the list")
    }

    pub fn current_item(&self) -> Option<&Item> {
        match self.state.phase {
            Phase::AwaitingAction | Phase::AwaitingBuildAfterAnswer => {
                Some(self.item(self.state.trial_index).1)
            }
            _ => None,
        }
    }

    pub fn speaker_of(&self, block: usize) -> Speaker {
        self.config.list.blocks[block].speaker
    }

    /// The prompt for the trial in progress, if any.
    pub fn current_prompt(&self) -> Option<TrialPrompt> {
        self.current_item()
            .map(|_| self.prompt_for(self.state.trial_index))
    }

    fn prompt_for(&self, trial: usize) -> TrialPrompt {
        let (block, item) = self.item(trial);
        TrialPrompt {
            trial,
            speaker_index: block,
            existing: item.initial.clone(),
            instruction: item.instruction.clone(),
            text: trial_text(self.config.mode, &item.initial, &item.instruction),
        }
    }

    fn present(&mut self, trial: usize) -> TrialPrompt {
        let prompt = self.prompt_for(trial);
        let (block, item) = self.item(trial);
        let event = EventKind::TrialPresented {
            trial,
            item_id: item.id.clone(),
            speaker: self.speaker_of(block),
            existing: render_wire(&prompt.existing),
            instruction: prompt.instruction.clone(),
            text: prompt.text.clone(),
        };
        self.state.transcript.push(event);
        prompt
    }

    fn require_trial_phase(&self) -> Result<(), SessionError> {
        match self.state.phase {
            Phase::AwaitingAction | Phase::AwaitingBuildAfterAnswer => Ok(()),
            other => Err(SessionError::WrongPhase(other)),
        }
    }

    /// Asks the speaker a clarification question (QA mode, once per trial).
    pub fn submit_question(&mut self, question: &str) -> Result<AnswerMessage, SessionError> {
        if self.config.mode != Mode::Qa {
            return Err(SessionError::WrongMode(self.config.mode));
        }
        self.require_trial_phase()?;
        if self.state.questions_this_trial >= 1 {
            return Err(SessionError::QuestionLimitExceeded);
        }
        let trial = self.state.trial_index;
        let answer = answer_question(self.item(trial).1, question);
        self.state.questions_this_trial = 1;
        self.state.questions += 1;
        self.state.phase = Phase::AwaitingBuildAfterAnswer;
        self.state.transcript.push(EventKind::QuestionAsked {
            trial,
            text: question.to_string(),
        });
        self.state.transcript.push(EventKind::AnswerGiven {
            trial,
            text: answer.text.clone(),
        });
        Ok(answer)
    }

    fn check_rating(&self, rating: Option<u8>) -> Result<(), SessionError> {
        match (self.config.mode, rating) {
            (Mode::Confidence, None) => Err(SessionError::MissingRating),
            (Mode::Confidence, Some(r)) if !(1..=4).contains(&r) => {
                Err(SessionError::InvalidRating(r))
            }
            (Mode::Qa, Some(_)) => Err(SessionError::UnexpectedRating),
            _ => Ok(()),
        }
    }

    /// Submits a build given as a structure.
    pub fn submit_build(
        &mut self,
        built: &Structure,
        rating: Option<u8>,
    ) -> Result<Turn, SessionError> {
        self.submit_build_text(&render_wire(built), rating)
    }

    /// Submits a build as raw text; a `Rating:` suffix in the text is used
    /// when `rating` is `None`.
    pub fn submit_build_text(
        &mut self,
        raw: &str,
        rating: Option<u8>,
    ) -> Result<Turn, SessionError> {
        self.require_trial_phase()?;
        let (built, inline_rating) = parse_build_response(raw)?;
        let rating = rating.or(inline_rating);
        self.check_rating(rating)?;
        built.validate()?;
        Ok(self.finish_trial(raw, built, rating, false))
    }

    /// Records a refused or malformed action. The first one in a trial
    /// earns a re-prompt; the second forfeits the trial.
    pub fn reject(&mut self, raw: &str, diagnostic: &str) -> Result<Rejection, SessionError> {
        self.require_trial_phase()?;
        let trial = self.state.trial_index;
        self.state.transcript.push(EventKind::ActionRejected {
            trial,
            raw: raw.to_string(),
            diagnostic: diagnostic.to_string(),
        });
        self.state.rejections_this_trial += 1;
        if self.state.rejections_this_trial < 2 {
            return Ok(Rejection::Reprompt(format!(
                "{diagnostic} Please answer again."
            )));
        }
        let nothing = self.item(trial).1.initial.clone();
        let rating = match self.config.mode {
            Mode::Confidence => Some(1),
            Mode::Qa => None,
        };
        Ok(Rejection::Forfeited(
            self.finish_trial(raw, nothing, rating, true),
        ))
    }

    fn finish_trial(
        &mut self,
        raw: &str,
        built: Structure,
        rating: Option<u8>,
        forfeited: bool,
    ) -> Turn {
        let trial = self.state.trial_index;
        let (block, item) = self.item(trial);
        let item = item.clone();
        let correct = !forfeited && item.is_correct(&built);
        let round_score = match self.config.mode {
            Mode::Confidence => 0,
            Mode::Qa => {
                let build = if correct {
                    self.config.payoffs.correct
                } else {
                    self.config.payoffs.incorrect
                };
                build + self.config.payoffs.question * i64::from(self.state.questions_this_trial)
            }
        };
        self.state.total_score += round_score;
        if correct {
            self.state.correct += 1;
        } else {
            self.state.incorrect += 1;
        }
        let mut feedback = make_feedback(
            &item,
            &built,
            round_score,
            self.state.total_score,
            self.config.mode,
        );
        if forfeited {
            feedback.correct = false;
        }
        self.state.transcript.push(EventKind::BuildSubmitted {
            trial,
            raw: raw.to_string(),
            structure: render_wire(&built),
            rating,
            forfeited,
        });
        self.state.transcript.push(EventKind::FeedbackGiven {
            trial,
            correct: feedback.correct,
            round_score,
            total_score: self.state.total_score,
            built: render_wire(&built),
            target: render_wire(&item.target),
            text: feedback.text.clone(),
        });

        self.state.questions_this_trial = 0;
        self.state.rejections_this_trial = 0;
        let next_trial = trial + 1;
        let mut speaker_change = None;
        let next = if next_trial >= self.config.list.len() {
            self.state.phase = Phase::Debrief;
            let text = debrief_text();
            self.state
                .transcript
                .push(EventKind::DebriefRequest { text: text.clone() });
            Next::Debrief { text }
        } else {
            let (next_block, _) = self.item(next_trial);
            if next_block != block {
                let speaker = self.speaker_of(next_block);
                let text = speaker_change_text(speaker);
                self.state.transcript.push(EventKind::SpeakerChange {
                    trial: next_trial,
                    speaker,
                    text: text.clone(),
                });
                speaker_change = Some(SpeakerChangeMessage {
                    speaker_index: next_block,
                    text,
                });
            }
            self.state.trial_index = next_trial;
            self.state.phase = Phase::AwaitingAction;
            Next::Trial(self.present(next_trial))
        };
        Turn {
            feedback,
            speaker_change,
            next,
        }
    }

    pub fn submit_debrief(&mut self, text: &str) -> Result<(), SessionError> {
        if self.state.phase != Phase::Debrief {
            return Err(SessionError::WrongPhase(self.state.phase));
        }
        self.state.transcript.push(EventKind::DebriefResponse {
            text: text.to_string(),
        });
        self.state.transcript.push(EventKind::SessionEnd {
            total_score: self.state.total_score,
        });
        self.state.phase = Phase::Done;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::speakers::generate_lists;

    fn qa_session() -> (Session, PromptMessage) {
        let list = generate_lists(Mode::Qa, 2, 21).unwrap().remove(0);
        Session::start(SessionConfig::new(Arc::new(list), "test")).unwrap()
    }

    fn conf_session() -> Session {
        let list = generate_lists(Mode::Confidence, 2, 21).unwrap().remove(0);
        Session::start(SessionConfig::new(Arc::new(list), "test"))
            .unwrap()
            .0
    }

    fn target(s: &Session) -> Structure {
        s.current_item().unwrap().target.clone()
    }

    #[test]
    fn qa_prompt_mentions_the_question_rule() {
        let (s, prompt) = qa_session();
        assert!(prompt.system.contains("Only one question is allowed."));
        assert!(prompt.trial.text.starts_with("Existing structure: "));
        assert_eq!(s.phase(), Phase::AwaitingAction);
        assert_eq!(s.state().trial_index, 0);
    }

    #[test]
    fn confidence_prompt_requests_a_rating() {
        let s = conf_session();
        let EventKind::SessionStart { system_prompt, .. } = &s.transcript().events()[0].kind else {
            panic!()
        };
        assert!(system_prompt.contains("rate how certain you are"));
        assert!(s.current_prompt().unwrap().text.contains("On a scale of 1-4"));
    }

    #[test]
    fn empty_grid_renders_nan() {
        let t = trial_text(Mode::Qa, &Structure::empty(), "Stack two red blocks at the origin.");
        assert!(t.starts_with("Existing structure: nan. "));
    }

    #[test]
    fn one_question_per_trial() {
        let (mut s, _) = qa_session();
        s.submit_question("What color should the stack be?").unwrap();
        assert_eq!(s.phase(), Phase::AwaitingBuildAfterAnswer);
        let before = s.state().clone();
        assert_eq!(
            s.submit_question("And how high?"),
            Err(SessionError::QuestionLimitExceeded)
        );
        assert_eq!(s.state(), &before);
        let t = target(&s);
        let turn = s.submit_build(&t, None).unwrap();
        assert_eq!(turn.feedback.round_score, 5);
        assert_eq!(s.state().total_score, 5);
    }

    #[test]
    fn questions_are_qa_only() {
        let mut s = conf_session();
        assert_eq!(
            s.submit_question("What color?"),
            Err(SessionError::WrongMode(Mode::Confidence))
        );
    }

    #[test]
    fn incorrect_build_costs_ten() {
        let (mut s, prompt) = qa_session();
        let turn = s.submit_build(&prompt.trial.existing, None).unwrap();
        assert!(!turn.feedback.correct);
        assert_eq!(turn.feedback.round_score, -10);
        assert!(turn.feedback.text.starts_with("Incorrect structure. (-10 points)"));
    }

    #[test]
    fn confidence_builds_need_ratings_and_score_nothing() {
        let mut s = conf_session();
        let t = target(&s);
        assert_eq!(s.submit_build(&t, None), Err(SessionError::MissingRating));
        assert_eq!(s.submit_build(&t, Some(5)), Err(SessionError::InvalidRating(5)));
        let turn = s.submit_build(&t, Some(3)).unwrap();
        assert!(turn.feedback.text.starts_with("FEEDBACK:True;"));
        assert_eq!(s.state().total_score, 0);

        let (mut qa, _) = qa_session();
        let t = target(&qa);
        assert_eq!(qa.submit_build(&t, Some(3)), Err(SessionError::UnexpectedRating));
    }

    #[test]
    fn inline_rating_in_response_text() {
        let mut s = conf_session();
        let wire = render_wire(&target(&s));
        let turn = s
            .submit_build_text(&format!("Coordinates: {wire}; Rating:2"), None)
            .unwrap();
        assert!(turn.feedback.correct);
        let EventKind::BuildSubmitted { rating, .. } = &s.transcript().events()[2].kind else {
            panic!("{:?}", s.transcript().events()[2])
        };
        assert_eq!(*rating, Some(2));
    }

    #[test]
    fn full_session_walk() {
        let (mut s, _) = qa_session();
        let mut changes = 0;
        let mut asked = 0;
        for trial in 0..40 {
            assert_eq!(s.state().trial_index, trial);
            if trial % 3 == 0 {
                s.submit_question("How high?").unwrap();
                asked += 1;
            }
            let built = if trial % 4 == 0 {
                Structure::empty()
            } else {
                target(&s)
            };
            let turn = s.submit_build(&built, None).unwrap();
            if let Some(change) = &turn.speaker_change {
                changes += 1;
                assert_eq!(trial, 19);
                assert_eq!(change.speaker_index, 1);
            }
            if trial == 39 {
                assert!(matches!(turn.next, Next::Debrief { .. }));
            }
        }
        assert_eq!(changes, 1);
        assert_eq!(s.phase(), Phase::Debrief);
        assert!(s.submit_build(&Structure::empty(), None).is_err());
        s.submit_debrief("").unwrap();
        assert!(s.is_done());
        assert_eq!(s.submit_debrief("again"), Err(SessionError::WrongPhase(Phase::Done)));
        let st = s.state();
        assert_eq!(st.questions, asked);
        assert_eq!(
            st.total_score,
            10 * st.correct as i64 - 10 * st.incorrect as i64 - 5 * st.questions as i64
        );
        let last = s.transcript().events().last().unwrap();
        assert!(matches!(last.kind, EventKind::SessionEnd { .. }));
    }

    #[test]
    fn second_rejection_forfeits() {
        let (mut s, _) = qa_session();
        s.submit_question("How high?").unwrap();
        assert!(matches!(
            s.reject("Blue,0,60,0", "bad coordinate.").unwrap(),
            Rejection::Reprompt(_)
        ));
        let Rejection::Forfeited(turn) = s.reject("still bad", "bad token.").unwrap() else {
            panic!("expected forfeit")
        };
        assert_eq!(turn.feedback.round_score, -15);
        assert!(!turn.feedback.correct);
        assert_eq!(s.state().trial_index, 1);
        assert_eq!(s.state().rejections_this_trial, 0);
    }

    #[test]
    fn unparseable_build_leaves_state_untouched() {
        let (mut s, _) = qa_session();
        let before = s.state().clone();
        assert!(matches!(
            s.submit_build_text("Blue,0,250,0", None),
            Err(SessionError::InvalidStructure(_))
        ));
        assert_eq!(s.state(), &before);
    }

    #[test]
    fn mode_mismatch_is_rejected() {
        let list = generate_lists(Mode::Qa, 2, 21).unwrap().remove(0);
        let mut config = SessionConfig::new(Arc::new(list), "test");
        config.mode = Mode::Confidence;
        assert!(matches!(
            Session::start(config),
            Err(SessionError::InvalidConfig(_))
        ));
    }
}
