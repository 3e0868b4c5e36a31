//! Line-delimited JSON list files.
//!
//! The first record describes the list (mode, seed, speaker order and the
//! position schedule); each following record is one item. Item records
//! store the instruction text rather than its AST, which is recovered by
//! parsing on load.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{
    ExperimentList, FeedbackType, Item, Mode, Schedule, Speaker, SpeakerBlock, SpeakerError,
};
use crate::dsl::{self, Fill, SpecType};
use crate::world::Structure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum ListRecord {
    List {
        id: String,
        mode: Mode,
        seed: u64,
        index: usize,
        speaker_order: Vec<Speaker>,
        schedule: Schedule,
    },
    Item {
        block: usize,
        position: usize,
        speaker: Speaker,
        id: String,
        spec_type: SpecType,
        feedback_type: FeedbackType,
        initial: Structure,
        instruction: String,
        target: Structure,
        target_fill: Fill,
    },
}

fn io_err(e: std::io::Error) -> SpeakerError {
    SpeakerError::Io(e.to_string())
}

pub fn write_list<W: Write>(list: &ExperimentList, mut out: W) -> Result<(), SpeakerError> {
    let header = ListRecord::List {
        id: list.id.clone(),
        mode: list.mode,
        seed: list.seed,
        index: list.index,
        speaker_order: list.speaker_order(),
        schedule: list.schedule.clone(),
    };
    let mut records = vec![header];
    for (b, block) in list.blocks.iter().enumerate() {
        for (position, item) in block.items.iter().enumerate() {
            records.push(ListRecord::Item {
                block: b,
                position,
                speaker: block.speaker,
                id: item.id.clone(),
                spec_type: item.spec_type,
                feedback_type: item.feedback_type,
                initial: item.initial.clone(),
                instruction: item.instruction.clone(),
                target: item.target.clone(),
                target_fill: item.target_fill,
            });
        }
    }
    for r in records {
        let line = serde_json::to_string(&r).expect("records always serialize");
        writeln!(out, "{line}").map_err(io_err)?;
    }
    Ok(())
}

/// Reads and fully validates a list file.
pub fn read_list<R: BufRead>(input: R) -> Result<ExperimentList, SpeakerError> {
    let mut header = None;
    let mut blocks: Vec<SpeakerBlock> = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = n + 1;
        let fmt_err = |reason: String| SpeakerError::Format {
            line: lineno,
            reason,
        };
        let record: ListRecord =
            serde_json::from_str(&line).map_err(|e| fmt_err(e.to_string()))?;
        match record {
            ListRecord::List {
                id,
                mode,
                seed,
                index,
                speaker_order,
                schedule,
            } => {
                if header.is_some() {
                    return Err(fmt_err("second list header".into()));
                }
                blocks = speaker_order
                    .iter()
                    .map(|&speaker| SpeakerBlock {
                        speaker,
                        items: Vec::new(),
                    })
                    .collect();
                header = Some((id, mode, seed, index, schedule));
            }
            ListRecord::Item {
                block,
                position,
                speaker,
                id,
                spec_type,
                feedback_type,
                initial,
                instruction,
                target,
                target_fill,
            } => {
                let Some(slot) = blocks.get_mut(block) else {
                    return Err(fmt_err(format!("item {id} refers to block {block}")));
                };
                if slot.speaker != speaker || slot.items.len() != position {
                    return Err(fmt_err(format!("item {id} is out of order")));
                }
                let ast = dsl::parse(&instruction)?;
                slot.items.push(Item {
                    id,
                    initial,
                    ast,
                    instruction,
                    spec_type,
                    feedback_type,
                    target,
                    target_fill,
                });
            }
        }
    }
    let Some((id, mode, seed, index, schedule)) = header else {
        return Err(SpeakerError::Format {
            line: 1,
            reason: "missing list header".into(),
        });
    };
    let list = ExperimentList {
        id,
        mode,
        seed,
        index,
        schedule,
        blocks,
    };
    list.validate()?;
    Ok(list)
}
