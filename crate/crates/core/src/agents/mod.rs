//! Reference builder agents and the loop that drives them through a session.
//!
//! Agents only see what the engine shows a builder: the existing grid, the
//! instruction text, an answer if they asked, and feedback after each build.
//! The oracle is the one exception and exists for tests.

mod adaptive;
mod driver;

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{self, InterpretationSet, SpecType};
use crate::session::SpeakerChangeMessage;
use crate::speakers::{AnswerMessage, ExperimentList, FeedbackMessage, Mode};
use crate::world::{Color, Structure};

pub use adaptive::{rating, AdaptiveAgent, AdaptiveAgentConfig, ReliabilityPosterior};
pub use driver::{run_agent, RunError};

pub const COLOR_QUESTION: &str = "What color should the stack be?";
pub const HEIGHT_QUESTION: &str = "How high should the stack be?";
pub const REFERENCE_DEBRIEF: &str =
    "Reference agent: Pia's omissions always matched what had just been built; Lisa's often did not.";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgentError {
    #[error("invalid agent configuration: {0}")]
    InvalidConfig(String),
    #[error("agent transport failed: {0}")]
    Transport(String),
    #[error("agent protocol violation: {0}")]
    Protocol(String),
    #[error("unknown agent {0:?}")]
    Unknown(String),
}

/// What the builder can see when it has to act.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub trial: usize,
    pub speaker_index: usize,
    pub mode: Mode,
    pub existing: Structure,
    pub instruction: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<AnswerMessage>,
    /// Set when the previous reply was refused.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reprompt: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum AgentAction {
    Ask {
        question: String,
    },
    Build {
        structure: Structure,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rating: Option<u8>,
    },
    /// A reply the engine still has to parse (external builders).
    Raw {
        text: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rating: Option<u8>,
    },
    /// A reply that could not be understood at all.
    Malformed { raw: String, diagnostic: String },
}

pub trait Agent {
    /// Participant label written into the transcript.
    fn name(&self) -> &str;

    fn decide(&mut self, obs: &Observation) -> Result<AgentAction, AgentError>;

    fn feedback(&mut self, _feedback: &FeedbackMessage) -> Result<(), AgentError> {
        Ok(())
    }

    fn speaker_changed(&mut self, _change: &SpeakerChangeMessage) -> Result<(), AgentError> {
        Ok(())
    }

    fn debrief(&mut self, _prompt: &str) -> Result<String, AgentError> {
        Ok(REFERENCE_DEBRIEF.to_string())
    }

    /// Called once the session is over.
    fn finish(&mut self, _total_score: i64) -> Result<(), AgentError> {
        Ok(())
    }
}

/// Candidate readings of the observed instruction, or `None` if the text
/// is outside the instruction grammar.
pub fn candidates(obs: &Observation) -> Option<InterpretationSet> {
    let ast = dsl::parse(&obs.instruction).ok()?;
    dsl::interpret(&ast, &obs.existing).ok().map(|(_, set)| set)
}

/// The question a builder asks about an omitted attribute.
pub fn question_for(spec: SpecType) -> Option<&'static str> {
    match spec {
        SpecType::OmitColor => Some(COLOR_QUESTION),
        SpecType::OmitCount => Some(HEIGHT_QUESTION),
        SpecType::Full => None,
    }
}

/// Picks the candidate consistent with an answer text.
pub fn answer_candidate<'a>(
    set: &'a InterpretationSet,
    answer: &str,
) -> Option<&'a dsl::Interpretation> {
    match set.spec_type {
        SpecType::OmitColor => {
            let lower = answer.to_lowercase();
            let color = Color::ALL
                .into_iter()
                .find(|c| lower.contains(c.word()))?;
            set.candidates.iter().find(|c| c.fill.color == color)
        }
        SpecType::OmitCount => {
            let digit = answer.chars().find(|c| c.is_ascii_digit())?;
            let count = digit.to_digit(10)? as u8;
            set.candidates.iter().find(|c| c.fill.count == count)
        }
        SpecType::Full => set.candidates.first(),
    }
}

fn rating_for(mode: Mode, rating: u8) -> Option<u8> {
    match mode {
        Mode::Confidence => Some(rating),
        Mode::Qa => None,
    }
}

fn build(obs: &Observation, structure: Structure, rating: u8) -> AgentAction {
    AgentAction::Build {
        structure,
        rating: rating_for(obs.mode, rating),
    }
}

/// Builds the pragmatic reading every time and is always fully confident.
#[derive(Debug, Clone, Default)]
pub struct AlwaysPragmatic;

impl Agent for AlwaysPragmatic {
    fn name(&self) -> &str {
        "pragmatic"
    }

    fn decide(&mut self, obs: &Observation) -> Result<AgentAction, AgentError> {
        let structure = candidates(obs)
            .map(|set| set.default_reading().structure.clone())
            .unwrap_or_else(|| obs.existing.clone());
        Ok(build(obs, structure, 4))
    }
}

/// Asks on every underspecified trial (QA mode) and builds the answer.
#[derive(Debug, Clone, Default)]
pub struct AlwaysAsk;

impl Agent for AlwaysAsk {
    fn name(&self) -> &str {
        "always-ask"
    }

    fn decide(&mut self, obs: &Observation) -> Result<AgentAction, AgentError> {
        let Some(set) = candidates(obs) else {
            return Ok(build(obs, obs.existing.clone(), 1));
        };
        if obs.mode == Mode::Qa && obs.answer.is_none() {
            if let Some(q) = question_for(set.spec_type) {
                return Ok(AgentAction::Ask {
                    question: q.to_string(),
                });
            }
        }
        let chosen = obs
            .answer
            .as_ref()
            .and_then(|a| answer_candidate(&set, &a.text))
            .unwrap_or_else(|| set.default_reading());
        Ok(build(obs, chosen.structure.clone(), 4))
    }
}

/// Builds a uniformly drawn candidate.
#[derive(Debug, Clone)]
pub struct RandomGuess {
    rng: ChaCha8Rng,
    posterior: ReliabilityPosterior,
    prior: ReliabilityPosterior,
    thresholds: [f64; 3],
    current: Option<InterpretationSet>,
}

impl RandomGuess {
    pub fn new(seed: u64) -> Self {
        let config = AdaptiveAgentConfig::default();
        RandomGuess {
            rng: ChaCha8Rng::seed_from_u64(seed),
            posterior: config.prior,
            prior: config.prior,
            thresholds: config.rating_thresholds,
            current: None,
        }
    }
}

impl Agent for RandomGuess {
    fn name(&self) -> &str {
        "random"
    }

    fn decide(&mut self, obs: &Observation) -> Result<AgentAction, AgentError> {
        let Some(set) = candidates(obs) else {
            return Ok(build(obs, obs.existing.clone(), 1));
        };
        let picked = set
            .candidates
            .choose(&mut self.rng)
            .expect("interpretation sets are non-empty");
        let p = match set.pragmatic() {
            None => 1.0,
            Some(pragmatic) if pragmatic == picked => self.posterior.mean(),
            Some(_) => (1.0 - self.posterior.mean()) / (set.candidates.len() - 1) as f64,
        };
        let rating = adaptive::rating(p, &self.thresholds);
        let action = build(obs, picked.structure.clone(), rating);
        self.current = Some(set);
        Ok(action)
    }

    fn feedback(&mut self, feedback: &FeedbackMessage) -> Result<(), AgentError> {
        if let Some(set) = self.current.take() {
            self.posterior.observe(&set, &feedback.target);
        }
        Ok(())
    }

    fn speaker_changed(&mut self, _change: &SpeakerChangeMessage) -> Result<(), AgentError> {
        self.posterior = self.prior;
        Ok(())
    }
}

/// Reads the target from the list. Only for tests and baselines.
#[derive(Debug, Clone)]
pub struct Oracle {
    list: Arc<ExperimentList>,
}

impl Oracle {
    pub fn new(list: Arc<ExperimentList>) -> Self {
        Oracle { list }
    }
}

impl Agent for Oracle {
    fn name(&self) -> &str {
        "oracle"
    }

    fn decide(&mut self, obs: &Observation) -> Result<AgentAction, AgentError> {
        let (_, item) = self
            .list
            .trial(obs.trial)
            .ok_or_else(|| AgentError::Protocol(format!("no trial {}", obs.trial)))?;
        Ok(build(obs, item.target.clone(), 4))
    }
}

/// Names accepted by [`make_agent`].
pub const AGENT_NAMES: [&str; 5] = ["pragmatic", "random", "always-ask", "adaptive", "oracle"];

/// Builds a reference agent by name. `list` is only needed by the oracle.
pub fn make_agent(
    name: &str,
    seed: u64,
    carry_over: bool,
    list: Option<Arc<ExperimentList>>,
) -> Result<Box<dyn Agent + Send>, AgentError> {
    Ok(match name {
        "pragmatic" => Box::new(AlwaysPragmatic),
        "random" => Box::new(RandomGuess::new(seed)),
        "always-ask" => Box::new(AlwaysAsk),
        "adaptive" => Box::new(AdaptiveAgent::new(AdaptiveAgentConfig {
            carry_over,
            ..AdaptiveAgentConfig::default()
        })?),
        "oracle" => Box::new(Oracle::new(list.ok_or_else(|| {
            AgentError::InvalidConfig("the oracle needs the list".into())
        })?)),
        other => return Err(AgentError::Unknown(other.to_string())),
    })
}
