//! Session event log, persisted one JSON object per line.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{Payoffs, SessionError};
use crate::speakers::{Mode, Speaker};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EventKind {
    SessionStart {
        list_id: String,
        mode: Mode,
        seed: u64,
        participant: String,
        carry_over: bool,
        payoffs: Payoffs,
        system_prompt: String,
    },
    TrialPresented {
        trial: usize,
        item_id: String,
        speaker: Speaker,
        existing: String,
        instruction: String,
        text: String,
    },
    QuestionAsked {
        trial: usize,
        text: String,
    },
    AnswerGiven {
        trial: usize,
        text: String,
    },
    /// An action the engine refused (unparseable build, extra question, ...).
    ActionRejected {
        trial: usize,
        raw: String,
        diagnostic: String,
    },
    BuildSubmitted {
        trial: usize,
        raw: String,
        structure: String,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        rating: Option<u8>,
        forfeited: bool,
    },
    FeedbackGiven {
        trial: usize,
        correct: bool,
        round_score: i64,
        total_score: i64,
        built: String,
        target: String,
        text: String,
    },
    SpeakerChange {
        trial: usize,
        speaker: Speaker,
        text: String,
    },
    DebriefRequest {
        text: String,
    },
    DebriefResponse {
        text: String,
    },
    SessionEnd {
        total_score: i64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    /// Logical timestamp: position of the event in the log.
    pub seq: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl Event {
    pub fn trial(&self) -> Option<usize> {
        match &self.kind {
            EventKind::TrialPresented { trial, .. }
            | EventKind::QuestionAsked { trial, .. }
            | EventKind::AnswerGiven { trial, .. }
            | EventKind::ActionRejected { trial, .. }
            | EventKind::BuildSubmitted { trial, .. }
            | EventKind::FeedbackGiven { trial, .. }
            | EventKind::SpeakerChange { trial, .. } => Some(*trial),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    events: Vec<Event>,
}

impl Transcript {
    pub fn new() -> Self {
        Transcript::default()
    }

    pub fn from_events(events: Vec<Event>) -> Self {
        Transcript { events }
    }

    pub fn push(&mut self, kind: EventKind) {
        let seq = self.events.len() as u64;
        self.events.push(Event { seq, kind });
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("events always serialize"));
            out.push('\n');
        }
        out
    }

    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(self.to_jsonl().as_bytes())
    }

    pub fn read<R: BufRead>(input: R) -> Result<Transcript, SessionError> {
        let mut events = Vec::new();
        for (n, line) in input.lines().enumerate() {
            let line = line.map_err(|e| SessionError::Format(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let event: Event = serde_json::from_str(&line)
                .map_err(|e| SessionError::Format(format!("line {}: {e}", n + 1)))?;
            events.push(event);
        }
        Ok(Transcript { events })
    }

    pub fn parse(text: &str) -> Result<Transcript, SessionError> {
        Transcript::read(text.as_bytes())
    }
}
