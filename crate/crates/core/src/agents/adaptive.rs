//! Beta–Bernoulli builder that learns how often a speaker's omissions can
//! be filled from context, and asks when guessing stops paying off.

use serde::{Deserialize, Serialize};

use super::{
    answer_candidate, build, candidates, question_for, Agent, AgentAction, AgentError, Observation,
};
use crate::dsl::InterpretationSet;
use crate::session::SpeakerChangeMessage;
use crate::speakers::{FeedbackMessage, Mode};
use crate::world::{structures_equal, Structure};

/// Beta pseudo-counts over the chance that the contextual default is what
/// the speaker meant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityPosterior {
    pub a: f64,
    pub b: f64,
}

impl ReliabilityPosterior {
    pub fn new(a: f64, b: f64) -> Result<Self, AgentError> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(AgentError::InvalidConfig(format!(
                "Beta parameters must be positive, got ({a}, {b})"
            )));
        }
        Ok(ReliabilityPosterior { a, b })
    }

    pub fn mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }

    pub fn update(&mut self, consistent: bool) {
        if consistent {
            self.a += 1.0;
        } else {
            self.b += 1.0;
        }
    }

    /// Updates from a revealed target on an underspecified trial; fully
    /// specified trials carry no information about the default.
    pub fn observe(&mut self, set: &InterpretationSet, target: &Structure) {
        if let Some(pragmatic) = set.pragmatic() {
            self.update(structures_equal(&pragmatic.structure, target));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveAgentConfig {
    pub prior: ReliabilityPosterior,
    /// Ask when the posterior mean falls strictly below this.
    pub ask_threshold: f64,
    pub carry_over: bool,
    /// Lower bounds for ratings 2, 3 and 4.
    pub rating_thresholds: [f64; 3],
}

impl Default for AdaptiveAgentConfig {
    fn default() -> Self {
        AdaptiveAgentConfig {
            prior: ReliabilityPosterior { a: 9.0, b: 1.0 },
            ask_threshold: 0.75,
            carry_over: false,
            rating_thresholds: [0.5, 0.7, 0.9],
        }
    }
}

impl AdaptiveAgentConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        ReliabilityPosterior::new(self.prior.a, self.prior.b)?;
        if !(self.ask_threshold > 0.0 && self.ask_threshold < 1.0) {
            return Err(AgentError::InvalidConfig(format!(
                "ask threshold {} is outside (0, 1)",
                self.ask_threshold
            )));
        }
        let [t2, t3, t4] = self.rating_thresholds;
        if !(t2 < t3 && t3 < t4) {
            return Err(AgentError::InvalidConfig(
                "rating thresholds must be strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

/// Maps a success probability onto the 1–4 scale.
pub fn rating(p: f64, thresholds: &[f64; 3]) -> u8 {
    1 + thresholds.iter().filter(|&&t| p >= t).count() as u8
}

#[derive(Debug, Clone)]
pub struct AdaptiveAgent {
    config: AdaptiveAgentConfig,
    posterior: ReliabilityPosterior,
    current: Option<InterpretationSet>,
    block_ends: Vec<ReliabilityPosterior>,
    questions: Vec<usize>,
}

impl AdaptiveAgent {
    pub fn new(config: AdaptiveAgentConfig) -> Result<Self, AgentError> {
        config.validate()?;
        Ok(AdaptiveAgent {
            posterior: config.prior,
            config,
            current: None,
            block_ends: Vec::new(),
            questions: vec![0],
        })
    }

    pub fn config(&self) -> &AdaptiveAgentConfig {
        &self.config
    }

    pub fn posterior(&self) -> ReliabilityPosterior {
        self.posterior
    }

    /// Posterior at the end of each finished speaker block.
    pub fn block_end_posteriors(&self) -> &[ReliabilityPosterior] {
        &self.block_ends
    }

    /// Questions asked per speaker block so far.
    pub fn questions_per_block(&self) -> &[usize] {
        &self.questions
    }

    pub fn should_ask(&self) -> bool {
        self.posterior.mean() < self.config.ask_threshold
    }

    pub fn confidence(&self, set: &InterpretationSet) -> u8 {
        let p = if set.pragmatic().is_some() {
            self.posterior.mean()
        } else {
            1.0
        };
        rating(p, &self.config.rating_thresholds)
    }
}

impl Agent for AdaptiveAgent {
    fn name(&self) -> &str {
        "adaptive"
    }

    fn decide(&mut self, obs: &Observation) -> Result<AgentAction, AgentError> {
        let Some(set) = candidates(obs) else {
            return Ok(build(obs, obs.existing.clone(), 1));
        };
        if obs.mode == Mode::Qa && obs.answer.is_none() && self.should_ask() {
            if let Some(q) = question_for(set.spec_type) {
                *self.questions.last_mut().expect("one counter per block") += 1;
                self.current = Some(set);
                return Ok(AgentAction::Ask {
                    question: q.to_string(),
                });
            }
        }
        let answered = obs
            .answer
            .as_ref()
            .and_then(|a| answer_candidate(&set, &a.text));
        let (structure, rating_value) = match answered {
            Some(c) => (c.structure.clone(), 4),
            None => (set.default_reading().structure.clone(), self.confidence(&set)),
        };
        self.current = Some(set);
        Ok(build(obs, structure, rating_value))
    }

    fn feedback(&mut self, feedback: &FeedbackMessage) -> Result<(), AgentError> {
        if let Some(set) = self.current.take() {
            self.posterior.observe(&set, &feedback.target);
        }
        Ok(())
    }

    fn speaker_changed(&mut self, _change: &SpeakerChangeMessage) -> Result<(), AgentError> {
        self.block_ends.push(self.posterior);
        self.questions.push(0);
        if !self.config.carry_over {
            self.posterior = self.config.prior;
        }
        Ok(())
    }

    fn finish(&mut self, _total_score: i64) -> Result<(), AgentError> {
        self.block_ends.push(self.posterior);
        Ok(())
    }
}
