//! Line-delimited JSON messages exchanged with an external builder.
//!
//! Every message is one JSON object on its own line with a `kind` field.
//! The host opens with `hello`; the builder answers `hello` with its name.
//! Unknown fields are ignored when reading and never written.
//!
//! Host → builder: `hello`, `session_start`, `trial`, `answer`, `error`,
//! `feedback`, `speaker_change`, `debrief_request`, `session_end`.
//! Builder → host: `hello`, `question`, `build`, `debrief`.

use serde::{Deserialize, Serialize};

use bwim_core::session::Payoffs;
use bwim_core::speakers::{FeedbackMessage, Mode, QuestionIntent};
use bwim_core::world::{render_wire, Structure};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HostMessage {
    Hello {
        protocol: u32,
    },
    SessionStart {
        list_id: String,
        mode: Mode,
        carry_over: bool,
        payoffs: Payoffs,
        system: String,
    },
    Trial {
        trial: usize,
        speaker_index: usize,
        mode: Mode,
        existing: String,
        instruction: String,
        text: String,
    },
    Answer {
        intent: QuestionIntent,
        text: String,
    },
    /// The previous reply was refused; one more attempt is allowed.
    Error {
        diagnostic: String,
    },
    Feedback {
        correct: bool,
        built: String,
        target: String,
        round_score: i64,
        total_score: i64,
        text: String,
    },
    SpeakerChange {
        speaker_index: usize,
        text: String,
    },
    DebriefRequest {
        text: String,
    },
    SessionEnd {
        total_score: i64,
    },
}

impl HostMessage {
    pub fn feedback(f: &FeedbackMessage) -> Self {
        HostMessage::Feedback {
            correct: f.correct,
            built: render_wire(&f.built),
            target: render_wire(&f.target),
            round_score: f.round_score,
            total_score: f.total_score,
            text: f.text.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BuilderMessage {
    Hello {
        protocol: u32,
        agent: String,
    },
    Question {
        text: String,
    },
    Build {
        /// Structure wire, e.g. `Blue,0,50,0;Red,0,150,0`.
        structure: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rating: Option<u8>,
    },
    Debrief {
        text: String,
    },
}

impl BuilderMessage {
    pub fn build(structure: &Structure, rating: Option<u8>) -> Self {
        BuilderMessage::Build {
            structure: render_wire(structure),
            rating,
        }
    }
}

pub fn encode<T: Serialize>(message: &T) -> String {
    let mut line = serde_json::to_string(message).expect("protocol messages always serialize");
    line.push('\n');
    line
}
