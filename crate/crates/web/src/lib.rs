//! WebAssembly bindings for the demo page in `www/`.
//!
//! Every export takes plain strings and numbers and returns a JSON string
//! of the form `{"ok": true, "value": ...}` or `{"ok": false, "error": ...}`,
//! so the page needs nothing beyond `JSON.parse`.

use std::sync::Arc;

use serde::Serialize;
use wasm_bindgen::prelude::wasm_bindgen;

use bwim_core::agents::{
    make_agent, run_agent, Agent, AgentAction, AgentError, AdaptiveAgent, AdaptiveAgentConfig,
    Observation, ReliabilityPosterior,
};
use bwim_core::dsl::{self, SpecType};
use bwim_core::session::{EventKind, SessionConfig, SpeakerChangeMessage, Transcript};
use bwim_core::speakers::{generate_lists, ExperimentList, FeedbackMessage, Mode, Speaker};
use bwim_core::world::{parse_wire, render_wire, Structure};

#[derive(Debug, Serialize, PartialEq, Eq)]
pub struct BlockView {
    pub color: &'static str,
    pub x: i32,
    pub y: i32,
    pub z: i32,
}

fn blocks(s: &Structure) -> Vec<BlockView> {
    s.blocks()
        .iter()
        .map(|b| BlockView {
            color: b.color.name(),
            x: b.position.x(),
            y: b.position.y(),
            z: b.position.z(),
        })
        .collect()
}

fn envelope<T: Serialize>(result: Result<T, String>) -> String {
    let value = match result {
        Ok(v) => serde_json::json!({ "ok": true, "value": v }),
        Err(e) => serde_json::json!({ "ok": false, "error": e }),
    };
    value.to_string()
}

#[derive(Debug, Serialize)]
pub struct StructureView {
    pub wire: String,
    pub blocks: Vec<BlockView>,
}

pub fn structure_view(wire: &str) -> Result<StructureView, String> {
    let s = parse_wire(wire).map_err(|e| e.to_string())?;
    Ok(StructureView {
        wire: render_wire(&s),
        blocks: blocks(&s),
    })
}

/// Validates a wire string and returns its blocks in placement order.
#[wasm_bindgen]
pub fn parse_structure(wire: &str) -> String {
    envelope(structure_view(wire))
}

#[derive(Debug, Serialize)]
pub struct CandidateView {
    pub count: u8,
    pub color: &'static str,
    pub pragmatic: bool,
    pub wire: String,
    pub blocks: Vec<BlockView>,
}

#[derive(Debug, Serialize)]
pub struct Reading {
    pub spec_type: SpecType,
    /// Grid after the context sentences, before the final one.
    pub context: Vec<BlockView>,
    pub candidates: Vec<CandidateView>,
}

pub fn read_instruction(existing: &str, instruction: &str) -> Result<Reading, String> {
    let initial = parse_wire(existing).map_err(|e| format!("existing structure: {e}"))?;
    let ast = dsl::parse(instruction).map_err(|e| e.to_string())?;
    let (context, set) = dsl::interpret(&ast, &initial).map_err(|e| e.to_string())?;
    let candidates = set
        .candidates
        .iter()
        .enumerate()
        .map(|(i, c)| CandidateView {
            count: c.fill.count,
            color: c.fill.color.name(),
            pragmatic: set.pragmatic_index == Some(i),
            wire: render_wire(&c.structure),
            blocks: blocks(&c.structure),
        })
        .collect();
    Ok(Reading {
        spec_type: set.spec_type,
        context: blocks(&context),
        candidates,
    })
}

/// Parses an instruction against an existing grid and lists every literal
/// reading, flagging the contextual default.
#[wasm_bindgen]
pub fn interpret(existing: &str, instruction: &str) -> String {
    envelope(read_instruction(existing, instruction))
}

/// Adaptive agent that remembers its posterior mean after every trial.
struct Traced {
    inner: AdaptiveAgent,
    means: Vec<f64>,
}

impl Agent for Traced {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn decide(&mut self, obs: &Observation) -> Result<AgentAction, AgentError> {
        self.inner.decide(obs)
    }

    fn feedback(&mut self, feedback: &FeedbackMessage) -> Result<(), AgentError> {
        self.inner.feedback(feedback)?;
        self.means.push(self.inner.posterior().mean());
        Ok(())
    }

    fn speaker_changed(&mut self, change: &SpeakerChangeMessage) -> Result<(), AgentError> {
        self.inner.speaker_changed(change)
    }

    fn debrief(&mut self, prompt: &str) -> Result<String, AgentError> {
        self.inner.debrief(prompt)
    }

    fn finish(&mut self, total_score: i64) -> Result<(), AgentError> {
        self.inner.finish(total_score)
    }
}

#[derive(Debug, Serialize)]
pub struct TrialPoint {
    pub trial: usize,
    pub speaker: Speaker,
    pub spec_type: SpecType,
    pub asked: bool,
    pub correct: bool,
    pub total_score: i64,
    /// Posterior mean once the trial's feedback has been seen.
    pub posterior_mean: f64,
}

#[derive(Debug, Serialize)]
pub struct Simulation {
    pub list_id: String,
    pub speaker_order: Vec<Speaker>,
    pub trials: Vec<TrialPoint>,
    pub block_end: Vec<ReliabilityPosterior>,
    pub questions_per_block: Vec<usize>,
    pub total_score: i64,
    /// Final scores of the fixed reference builders on the same list.
    pub baselines: Vec<(String, i64)>,
}

fn final_score(t: &Transcript) -> i64 {
    t.events()
        .iter()
        .find_map(|e| match e.kind {
            EventKind::SessionEnd { total_score } => Some(total_score),
            _ => None,
        })
        .unwrap_or_default()
}

pub fn run_simulation(
    prior_a: f64,
    prior_b: f64,
    ask_threshold: f64,
    carry_over: bool,
    seed: u64,
    list_index: usize,
) -> Result<Simulation, String> {
    let config = AdaptiveAgentConfig {
        prior: ReliabilityPosterior::new(prior_a, prior_b).map_err(|e| e.to_string())?,
        ask_threshold,
        carry_over,
        ..AdaptiveAgentConfig::default()
    };
    let lists = generate_lists(Mode::Qa, 8, seed).map_err(|e| e.to_string())?;
    let list: Arc<ExperimentList> = Arc::new(
        lists
            .into_iter()
            .nth(list_index)
            .ok_or_else(|| format!("list index {list_index} is outside 0..8"))?,
    );

    let mut agent = Traced {
        inner: AdaptiveAgent::new(config).map_err(|e| e.to_string())?,
        means: Vec::new(),
    };
    let mut session = SessionConfig::new(list.clone(), "adaptive");
    session.posterior_carry_over = carry_over;
    let transcript = run_agent(&mut agent, session).map_err(|e| e.to_string())?;

    let mut trials = Vec::with_capacity(list.len());
    let mut asked = false;
    for event in transcript.events() {
        match &event.kind {
            EventKind::QuestionAsked { .. } => asked = true,
            EventKind::FeedbackGiven {
                trial,
                correct,
                total_score,
                ..
            } => {
                let (block, item) = list.trial(*trial).expect("trial from this list");
                trials.push(TrialPoint {
                    trial: *trial,
                    speaker: list.blocks[block].speaker,
                    spec_type: item.spec_type,
                    asked,
                    correct: *correct,
                    total_score: *total_score,
                    posterior_mean: agent.means[trials.len()],
                });
                asked = false;
            }
            _ => {}
        }
    }

    let mut baselines = Vec::new();
    for name in ["pragmatic", "always-ask", "oracle"] {
        let mut reference =
            make_agent(name, seed, false, Some(list.clone())).map_err(|e| e.to_string())?;
        let t = run_agent(reference.as_mut(), SessionConfig::new(list.clone(), name))
            .map_err(|e| e.to_string())?;
        baselines.push((name.to_string(), final_score(&t)));
    }

    Ok(Simulation {
        list_id: list.id.clone(),
        speaker_order: list.speaker_order(),
        trials,
        block_end: agent.inner.block_end_posteriors().to_vec(),
        questions_per_block: agent.inner.questions_per_block().to_vec(),
        total_score: final_score(&transcript),
        baselines,
    })
}

/// Runs the adaptive builder through one generated QA list and reports its
/// per-trial posterior and score, next to the fixed reference builders.
#[wasm_bindgen]
pub fn simulate(
    prior_a: f64,
    prior_b: f64,
    ask_threshold: f64,
    carry_over: bool,
    seed: u32,
    list_index: u32,
) -> String {
    envelope(run_simulation(
        prior_a,
        prior_b,
        ask_threshold,
        carry_over,
        u64::from(seed),
        list_index as usize,
    ))
}
