use thiserror::Error;

use super::{Agent, AgentAction, AgentError, Observation};
use crate::session::{
    Next, Rejection, Session, SessionConfig, SessionError, Transcript, TrialPrompt, Turn,
};
use crate::speakers::Mode;
use crate::world::render_wire;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Agent(#[from] AgentError),
}

fn observation(prompt: TrialPrompt, mode: Mode) -> Observation {
    Observation {
        trial: prompt.trial,
        speaker_index: prompt.speaker_index,
        mode,
        existing: prompt.existing,
        instruction: prompt.instruction,
        answer: None,
        reprompt: None,
    }
}

/// Errors that describe a bad builder reply rather than a broken session.
fn is_refusal(e: &SessionError) -> bool {
    matches!(
        e,
        SessionError::QuestionLimitExceeded
            | SessionError::WrongMode(_)
            | SessionError::MissingRating
            | SessionError::UnexpectedRating
            | SessionError::InvalidRating(_)
            | SessionError::InvalidStructure(_)
    )
}

enum Step {
    Continue(Observation),
    Done,
}

/// A build that went through, or a refused reply with its diagnostic.
type Attempt = Result<Turn, (String, String)>;

fn attempt(raw: String, outcome: Result<Turn, SessionError>) -> Result<Attempt, RunError> {
    match outcome {
        Ok(turn) => Ok(Ok(turn)),
        Err(e) if is_refusal(&e) => Ok(Err((raw, e.to_string()))),
        Err(e) => Err(e.into()),
    }
}

/// Drives `agent` through a whole session and returns the transcript. The
/// participant label in `config` is replaced by the agent's name.
pub fn run_agent(agent: &mut dyn Agent, mut config: SessionConfig) -> Result<Transcript, RunError> {
    config.participant = agent.name().to_string();
    let mode = config.mode;
    let (mut session, prompt) = Session::start(config)?;
    let mut obs = observation(prompt.trial, mode);
    loop {
        let result = match agent.decide(&obs)? {
            AgentAction::Ask { question } => match session.submit_question(&question) {
                Ok(answer) => {
                    obs.answer = Some(answer);
                    obs.reprompt = None;
                    continue;
                }
                Err(e) => attempt(question, Err(e))?,
            },
            AgentAction::Build { structure, rating } => {
                let raw = render_wire(&structure);
                let outcome = session.submit_build_text(&raw, rating);
                attempt(raw, outcome)?
            }
            AgentAction::Raw { text, rating } => {
                let outcome = session.submit_build_text(&text, rating);
                attempt(text, outcome)?
            }
            AgentAction::Malformed { raw, diagnostic } => Err((raw, diagnostic)),
        };
        let turn = match result {
            Ok(turn) => turn,
            Err((raw, diagnostic)) => match session.reject(&raw, &diagnostic)? {
                Rejection::Reprompt(message) => {
                    obs.reprompt = Some(message);
                    continue;
                }
                Rejection::Forfeited(turn) => turn,
            },
        };
        match after_turn(agent, &mut session, turn, mode)? {
            Step::Continue(next) => obs = next,
            Step::Done => return Ok(session.into_transcript()),
        }
    }
}

fn after_turn(
    agent: &mut dyn Agent,
    session: &mut Session,
    turn: Turn,
    mode: Mode,
) -> Result<Step, RunError> {
    agent.feedback(&turn.feedback)?;
    if let Some(change) = &turn.speaker_change {
        agent.speaker_changed(change)?;
    }
    match turn.next {
        Next::Trial(prompt) => Ok(Step::Continue(observation(prompt, mode))),
        Next::Debrief { text } => {
            let reply = agent.debrief(&text)?;
            session.submit_debrief(&reply)?;
            agent.finish(session.state().total_score)?;
            Ok(Step::Done)
        }
    }
}
