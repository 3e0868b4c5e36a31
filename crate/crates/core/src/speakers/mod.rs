//! The two speakers, their items and experiment lists.
//!
//! Pia omits a slot only when the pragmatic default recovers it. Lisa
//! omits just as often, but on 8 of her 12 underspecified trials the
//! default is wrong; the literal content is always right for both.

mod generate;
mod listfile;
mod oracle;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{self, DslError, Fill, InstructionAst, InterpretationSet, SpecType};
use crate::world::{structures_equal, Structure, WorldError};

pub use generate::generate_lists;
pub use listfile::{read_list, write_list, ListRecord};
pub use oracle::{
    answer_question, classify_question, make_feedback, AnswerMessage, FeedbackMessage,
    QuestionIntent, ASK_SUFFIX,
};

pub const BLOCK_LEN: usize = 20;
pub const FULL_PER_BLOCK: usize = 8;
pub const OMIT_COLOR_PER_BLOCK: usize = 6;
pub const OMIT_COUNT_PER_BLOCK: usize = 6;
pub const LISA_CONSISTENT: usize = 4;
pub const LISA_LITERAL: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpeakerError {
    #[error("generation failed: {0}")]
    GenerationFailure(String),
    #[error("item {id}: {reason}")]
    InvalidItem { id: String, reason: String },
    #[error("invalid list: {0}")]
    InvalidList(String),
    #[error(transparent)]
    Dsl(#[from] DslError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("list file line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("io: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Speaker {
    Pia,
    Lisa,
}

impl Speaker {
    pub fn name(self) -> &'static str {
        match self {
            Speaker::Pia => "Pia",
            Speaker::Lisa => "Lisa",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Confidence,
    Qa,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Confidence => "confidence",
            Mode::Qa => "qa",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "confidence" => Ok(Mode::Confidence),
            "qa" => Ok(Mode::Qa),
            other => Err(format!("unknown mode {other:?} (expected confidence or qa)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeedbackType {
    PragmaticConsistent,
    LiteralOnly,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Item {
    pub id: String,
    pub initial: Structure,
    pub ast: InstructionAst,
    pub instruction: String,
    pub spec_type: SpecType,
    pub feedback_type: FeedbackType,
    pub target: Structure,
    /// Count and color of the final clause as the speaker intended it.
    pub target_fill: Fill,
}

impl Item {
    /// Initial structure with the context clauses applied.
    pub fn context(&self) -> Result<Structure, DslError> {
        dsl::apply_context(&self.ast, &self.initial)
    }

    pub fn interpretations(&self) -> Result<InterpretationSet, DslError> {
        dsl::interpret(&self.ast, &self.initial).map(|(_, set)| set)
    }

    /// Checks every item invariant; list loading and generation both use it.
    pub fn validate(&self) -> Result<(), SpeakerError> {
        let bad = |reason: String| SpeakerError::InvalidItem {
            id: self.id.clone(),
            reason,
        };
        self.initial.validate()?;
        self.target.validate()?;
        if self.ast.spec_type() != self.spec_type {
            return Err(bad(format!(
                "instruction is {:?} but item says {:?}",
                self.ast.spec_type(),
                self.spec_type
            )));
        }
        let reparsed = dsl::parse(&self.instruction)?;
        if reparsed != self.ast {
            return Err(bad("instruction text does not match its AST".into()));
        }
        let set = self.interpretations()?;
        let Some(index) = set.position_of(&self.target) else {
            return Err(bad("target is not a literal reading of the instruction".into()));
        };
        if set.candidates[index].fill != self.target_fill {
            return Err(bad("target fill does not match the target".into()));
        }
        match (self.spec_type, self.feedback_type) {
            (SpecType::Full, FeedbackType::LiteralOnly) => {
                Err(bad("fully specified items cannot be literal-only".into()))
            }
            (SpecType::Full, _) => Ok(()),
            (_, FeedbackType::PragmaticConsistent) if set.pragmatic_index != Some(index) => {
                Err(bad("pragmatic-consistent target differs from the default".into()))
            }
            (_, FeedbackType::LiteralOnly) if set.pragmatic_index == Some(index) => {
                Err(bad("literal-only target equals the default".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn is_correct(&self, built: &Structure) -> bool {
        structures_equal(built, &self.target)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpeakerBlock {
    pub speaker: Speaker,
    pub items: Vec<Item>,
}

impl SpeakerBlock {
    pub fn count_spec(&self, spec: SpecType) -> usize {
        self.items.iter().filter(|i| i.spec_type == spec).count()
    }

    pub fn count_feedback(&self, fb: FeedbackType) -> usize {
        self.items
            .iter()
            .filter(|i| i.spec_type.is_underspecified() && i.feedback_type == fb)
            .count()
    }

    /// Positions of underspecified items within the block.
    pub fn critical_positions(&self) -> Vec<usize> {
        self.items
            .iter()
            .enumerate()
            .filter(|(_, i)| i.spec_type.is_underspecified())
            .map(|(p, _)| p)
            .collect()
    }

    /// Composition check: 8 full, 6 color-omitted, 6 count-omitted items;
    /// all of Pia's critical items consistent, Lisa's split 4/8.
    pub fn validate_composition(&self) -> Result<(), SpeakerError> {
        let counts = (
            self.count_spec(SpecType::Full),
            self.count_spec(SpecType::OmitColor),
            self.count_spec(SpecType::OmitCount),
        );
        if self.items.len() != BLOCK_LEN
            || counts != (FULL_PER_BLOCK, OMIT_COLOR_PER_BLOCK, OMIT_COUNT_PER_BLOCK)
        {
            return Err(SpeakerError::InvalidList(format!(
                "{} block has {} items with spec counts {counts:?}",
                self.speaker.name(),
                self.items.len()
            )));
        }
        let literal = self.count_feedback(FeedbackType::LiteralOnly);
        let expected = match self.speaker {
            Speaker::Pia => 0,
            Speaker::Lisa => LISA_LITERAL,
        };
        if literal != expected {
            return Err(SpeakerError::InvalidList(format!(
                "{} block has {literal} literal-only items",
                self.speaker.name()
            )));
        }
        Ok(())
    }
}

/// Per-position layout shared by every list generated from one seed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    /// Specification type at each of the 20 block positions.
    pub slots: Vec<SpecType>,
    /// Critical positions at which Lisa's feedback is still pragmatic.
    pub lisa_consistent: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentList {
    pub id: String,
    pub mode: Mode,
    pub seed: u64,
    pub index: usize,
    pub schedule: Schedule,
    pub blocks: Vec<SpeakerBlock>,
}

impl ExperimentList {
    pub fn speaker_order(&self) -> Vec<Speaker> {
        self.blocks.iter().map(|b| b.speaker).collect()
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().map(|b| b.items.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Block index and item for a session-wide trial index.
    pub fn trial(&self, index: usize) -> Option<(usize, &Item)> {
        let mut rest = index;
        for (b, block) in self.blocks.iter().enumerate() {
            if rest < block.items.len() {
                return Some((b, &block.items[rest]));
            }
            rest -= block.items.len();
        }
        None
    }

    pub fn items(&self) -> impl Iterator<Item = (usize, &Item)> {
        self.blocks
            .iter()
            .enumerate()
            .flat_map(|(b, block)| block.items.iter().map(move |i| (b, i)))
    }

    pub fn block_for(&self, speaker: Speaker) -> Option<&SpeakerBlock> {
        self.blocks.iter().find(|b| b.speaker == speaker)
    }

    /// Full structural check: item invariants, block composition, schedule.
    pub fn validate(&self) -> Result<(), SpeakerError> {
        if self.blocks.len() != 2 || self.blocks[0].speaker == self.blocks[1].speaker {
            return Err(SpeakerError::InvalidList(
                "a list holds one block per speaker".into(),
            ));
        }
        for (_, item) in self.items() {
            item.validate()?;
        }
        for block in &self.blocks {
            block.validate_composition()?;
            let slots: Vec<SpecType> = block.items.iter().map(|i| i.spec_type).collect();
            if slots != self.schedule.slots {
                return Err(SpeakerError::InvalidList(format!(
                    "{} block does not follow the schedule",
                    block.speaker.name()
                )));
            }
        }
        let lisa = self.block_for(Speaker::Lisa).expect("checked above");
        let consistent: Vec<usize> = lisa
            .items
            .iter()
            .enumerate()
            .filter(|(_, i)| {
                i.spec_type.is_underspecified()
                    && i.feedback_type == FeedbackType::PragmaticConsistent
            })
            .map(|(p, _)| p)
            .collect();
        if consistent != self.schedule.lisa_consistent {
            return Err(SpeakerError::InvalidList(
                "Lisa's consistent trials are off schedule".into(),
            ));
        }
        Ok(())
    }
}
