//! Per-trial records, condition tables and rating regressions, all derived
//! from transcripts alone.

mod ols;
mod tables;

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{self, InterpretationSet, SpecType};
use crate::session::{EventKind, Transcript};
use crate::speakers::{FeedbackType, Speaker};
use crate::world::{parse_wire, structures_equal, Structure};

pub use ols::{ols, Coefficient, RegressionResult};
pub use tables::{
    write_conditions, write_questions, write_regression, write_segments, CONDITION_COLUMNS,
    QUESTION_COLUMNS, REGRESSION_COLUMNS, SEGMENT_COLUMNS,
};

/// Trials per time segment within a speaker block.
pub const SEGMENT_LEN: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("no trial records")]
    EmptyInput,
    #[error("design matrix is rank deficient: {0}")]
    RankDeficient(String),
    #[error("not enough data: {0}")]
    InsufficientData(String),
    #[error("transcript {source_index}: {reason}")]
    Transcript { source_index: usize, reason: String },
    #[error("i/o: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseClass {
    Pragmatic,
    GuessColor,
    GuessShorter,
    GuessTaller,
    Mistake,
}

impl ResponseClass {
    pub const ALL: [ResponseClass; 5] = [
        ResponseClass::Pragmatic,
        ResponseClass::GuessColor,
        ResponseClass::GuessShorter,
        ResponseClass::GuessTaller,
        ResponseClass::Mistake,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ResponseClass::Pragmatic => "pragmatic",
            ResponseClass::GuessColor => "guess_color",
            ResponseClass::GuessShorter => "guess_shorter",
            ResponseClass::GuessTaller => "guess_taller",
            ResponseClass::Mistake => "mistake",
        }
    }
}

pub(crate) fn spec_name(spec: SpecType) -> &'static str {
    match spec {
        SpecType::Full => "full",
        SpecType::OmitColor => "omit_color",
        SpecType::OmitCount => "omit_count",
    }
}

/// Classifies a build against the trial's readings. On fully specified
/// trials the single literal reading counts as the pragmatic one.
pub fn classify_response(built: &Structure, set: &InterpretationSet) -> ResponseClass {
    let default = set.default_reading();
    if structures_equal(built, &default.structure) {
        return ResponseClass::Pragmatic;
    }
    let Some(index) = set.position_of(built) else {
        return ResponseClass::Mistake;
    };
    let guess = &set.candidates[index];
    match set.spec_type {
        SpecType::OmitColor => ResponseClass::GuessColor,
        SpecType::OmitCount if guess.fill.count < default.fill.count => ResponseClass::GuessShorter,
        SpecType::OmitCount => ResponseClass::GuessTaller,
        SpecType::Full => ResponseClass::Mistake,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub agent: String,
    pub list_id: String,
    /// Index of the source transcript; one session per transcript.
    pub session: usize,
    /// Frame identity, comparable across lists generated from one seed.
    pub item: String,
    pub speaker: Speaker,
    pub spec_type: SpecType,
    pub feedback_type: FeedbackType,
    /// 1-based position within the speaker block.
    pub position: usize,
    pub time_segment: usize,
    pub correct: bool,
    pub rating: Option<u8>,
    pub asked: bool,
    pub forfeited: bool,
    pub response_class: ResponseClass,
}

#[derive(Default)]
struct Pending {
    item: String,
    speaker: Option<Speaker>,
    existing: String,
    instruction: String,
    asked: bool,
    rating: Option<u8>,
    forfeited: bool,
}

/// Rebuilds per-trial records from a transcript.
pub fn records_from_transcript(
    transcript: &Transcript,
    session: usize,
) -> Result<Vec<TrialRecord>, MetricsError> {
    let fail = |reason: String| MetricsError::Transcript {
        source_index: session,
        reason,
    };
    let events = transcript.events();
    let Some(EventKind::SessionStart {
        list_id,
        participant,
        seed,
        ..
    }) = events.first().map(|e| &e.kind)
    else {
        return Err(fail("missing session_start".into()));
    };

    let mut records = Vec::new();
    let mut block_start = 0;
    let mut pending = Pending::default();
    for event in &events[1..] {
        match &event.kind {
            EventKind::TrialPresented {
                item_id,
                speaker,
                existing,
                instruction,
                ..
            } => {
                pending = Pending {
                    item: format!("{seed}/{item_id}"),
                    speaker: Some(*speaker),
                    existing: existing.clone(),
                    instruction: instruction.clone(),
                    ..Pending::default()
                };
            }
            EventKind::SpeakerChange { trial, .. } => block_start = *trial,
            EventKind::QuestionAsked { .. } => pending.asked = true,
            EventKind::BuildSubmitted {
                rating, forfeited, ..
            } => {
                pending.rating = *rating;
                pending.forfeited = *forfeited;
            }
            EventKind::FeedbackGiven {
                trial,
                correct,
                built,
                target,
                ..
            } => {
                let speaker = pending
                    .speaker
                    .ok_or_else(|| fail(format!("feedback for unpresented trial {trial}")))?;
                let bad = |e: &dyn std::fmt::Display| fail(format!("trial {trial}: {e}"));
                let ast = dsl::parse(&pending.instruction).map_err(|e| bad(&e))?;
                let existing = parse_wire(&pending.existing).map_err(|e| bad(&e))?;
                let (_, set) = dsl::interpret(&ast, &existing).map_err(|e| bad(&e))?;
                let built = parse_wire(built).map_err(|e| bad(&e))?;
                let target = parse_wire(target).map_err(|e| bad(&e))?;
                let feedback_type = match set.pragmatic() {
                    Some(p) if !structures_equal(&p.structure, &target) => {
                        FeedbackType::LiteralOnly
                    }
                    _ => FeedbackType::PragmaticConsistent,
                };
                let position = trial - block_start + 1;
                records.push(TrialRecord {
                    agent: participant.clone(),
                    list_id: list_id.clone(),
                    session,
                    item: pending.item.clone(),
                    speaker,
                    spec_type: set.spec_type,
                    feedback_type,
                    position,
                    time_segment: position.div_ceil(SEGMENT_LEN),
                    correct: *correct,
                    rating: pending.rating,
                    asked: pending.asked,
                    forfeited: pending.forfeited,
                    response_class: classify_response(&built, &set),
                });
                pending.speaker = None;
            }
            _ => {}
        }
    }
    Ok(records)
}

pub fn records_from_transcripts(
    transcripts: &[Transcript],
) -> Result<Vec<TrialRecord>, MetricsError> {
    let mut all = Vec::new();
    for (i, t) in transcripts.iter().enumerate() {
        all.extend(records_from_transcript(t, i)?);
    }
    Ok(all)
}

/// Mean and standard error (sample SD with n − 1) of a sample.
pub fn mean_se(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (Some(mean), None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some((var / n).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRow {
    pub agent: String,
    pub speaker: Speaker,
    pub spec_type: SpecType,
    pub n: usize,
    pub n_rated: usize,
    pub mean_rating: Option<f64>,
    pub se_rating: Option<f64>,
    pub accuracy: f64,
    pub pragmatic_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionRow {
    pub agent: String,
    pub speaker: Speaker,
    pub blocks: usize,
    pub questions: usize,
    pub per_block: f64,
}

/// Underspecified trials only: the adaptation curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRow {
    pub agent: String,
    pub speaker: Speaker,
    pub segment: usize,
    pub n: usize,
    /// Proportions in [`ResponseClass::ALL`] order.
    pub classes: [f64; 5],
    /// Counts of ratings 1 to 4.
    pub ratings: [usize; 4],
    pub mean_rating: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionTable {
    pub conditions: Vec<ConditionRow>,
    pub questions: Vec<QuestionRow>,
    pub segments: Vec<SegmentRow>,
}

impl ConditionTable {
    pub fn condition(&self, agent: &str, speaker: Speaker, spec: SpecType) -> Option<&ConditionRow> {
        self.conditions
            .iter()
            .find(|r| r.agent == agent && r.speaker == speaker && r.spec_type == spec)
    }

    pub fn questions_for(&self, agent: &str, speaker: Speaker) -> Option<&QuestionRow> {
        self.questions
            .iter()
            .find(|r| r.agent == agent && r.speaker == speaker)
    }
}

fn sorted_ratings<'a>(records: impl Iterator<Item = &'a TrialRecord>) -> Vec<f64> {
    let mut v: Vec<f64> = records.filter_map(|r| r.rating.map(f64::from)).collect();
    v.sort_by(f64::total_cmp);
    v
}

fn rate(records: &[&TrialRecord], pred: impl Fn(&TrialRecord) -> bool) -> f64 {
    records.iter().filter(|r| pred(r)).count() as f64 / records.len() as f64
}

/// Groups records into condition, question and segment tables. The
/// result does not depend on record order.
pub fn aggregate(records: &[TrialRecord]) -> Result<ConditionTable, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut by_condition: BTreeMap<(&str, Speaker, SpecType), Vec<&TrialRecord>> = BTreeMap::new();
    let mut by_speaker: BTreeMap<(&str, Speaker), Vec<&TrialRecord>> = BTreeMap::new();
    let mut by_segment: BTreeMap<(&str, Speaker, usize), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        by_condition
            .entry((&r.agent, r.speaker, r.spec_type))
            .or_default()
            .push(r);
        by_speaker.entry((&r.agent, r.speaker)).or_default().push(r);
        if r.spec_type.is_underspecified() {
            by_segment
                .entry((&r.agent, r.speaker, r.time_segment))
                .or_default()
                .push(r);
        }
    }

    let conditions = by_condition
        .into_iter()
        .map(|((agent, speaker, spec_type), rs)| {
            let ratings = sorted_ratings(rs.iter().copied());
            let (mean_rating, se_rating) = mean_se(&ratings);
            ConditionRow {
                agent: agent.to_string(),
                speaker,
                spec_type,
                n: rs.len(),
                n_rated: ratings.len(),
                mean_rating,
                se_rating,
                accuracy: rate(&rs, |r| r.correct),
                pragmatic_rate: rate(&rs, |r| r.response_class == ResponseClass::Pragmatic),
            }
        })
        .collect();

    let questions = by_speaker
        .into_iter()
        .map(|((agent, speaker), rs)| {
            let blocks: BTreeSet<usize> = rs.iter().map(|r| r.session).collect();
            let questions = rs.iter().filter(|r| r.asked).count();
            QuestionRow {
                agent: agent.to_string(),
                speaker,
                blocks: blocks.len(),
                questions,
                per_block: questions as f64 / blocks.len() as f64,
            }
        })
        .collect();

    let segments = by_segment
        .into_iter()
        .map(|((agent, speaker, segment), rs)| {
            let mut counts = [0usize; 4];
            for r in &rs {
                if let Some(v @ 1..=4) = r.rating {
                    counts[usize::from(v) - 1] += 1;
                }
            }
            SegmentRow {
                agent: agent.to_string(),
                speaker,
                segment,
                n: rs.len(),
                classes: ResponseClass::ALL.map(|c| rate(&rs, |r| r.response_class == c)),
                ratings: counts,
                mean_rating: mean_se(&sorted_ratings(rs.iter().copied())).0,
            }
        })
        .collect();

    Ok(ConditionTable {
        conditions,
        questions,
        segments,
    })
}

/// Rating regression: agent dummies, a speaker dummy with Lisa as the
/// reference, their interactions and optional item fixed effects.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RatingModel {
    /// Reference agent; the alphabetically first agent when `None`.
    pub reference_agent: Option<String>,
    pub item_effects: bool,
}

/// Fits the rating model over every rated record given.
pub fn ols_fit(records: &[TrialRecord], model: &RatingModel) -> Result<RegressionResult, MetricsError> {
    let rated: Vec<&TrialRecord> = records.iter().filter(|r| r.rating.is_some()).collect();
    if rated.is_empty() {
        return Err(MetricsError::InsufficientData("no rated trials".into()));
    }
    let agents: BTreeSet<&str> = rated.iter().map(|r| r.agent.as_str()).collect();
    let reference = match &model.reference_agent {
        Some(a) if agents.contains(a.as_str()) => a.as_str(),
        Some(a) => {
            return Err(MetricsError::InsufficientData(format!(
                "reference agent {a:?} has no rated trials"
            )))
        }
        None => agents.iter().next().copied().expect("non-empty"),
    };
    let speakers: BTreeSet<Speaker> = rated.iter().map(|r| r.speaker).collect();
    if speakers.len() < 2 {
        return Err(MetricsError::RankDeficient(
            "speaker has a single level".into(),
        ));
    }
    let others: Vec<&str> = agents.iter().copied().filter(|a| *a != reference).collect();
    let items: Vec<&str> = if model.item_effects {
        let set: BTreeSet<&str> = rated.iter().map(|r| r.item.as_str()).collect();
        set.into_iter().skip(1).collect()
    } else {
        Vec::new()
    };

    let mut names = vec!["intercept".to_string()];
    names.extend(others.iter().map(|a| format!("agent={a}")));
    names.push("speaker=Pia".to_string());
    names.extend(others.iter().map(|a| format!("agent={a}:speaker=Pia")));
    names.extend(items.iter().map(|i| format!("item={i}")));

    let p = names.len();
    let x = DMatrix::from_fn(rated.len(), p, |row, col| {
        let r = rated[row];
        let pia = f64::from(u8::from(r.speaker == Speaker::Pia));
        let k = others.len();
        match col {
            0 => 1.0,
            c if c <= k => f64::from(u8::from(r.agent == others[c - 1])),
            c if c == k + 1 => pia,
            c if c <= 2 * k + 1 => pia * f64::from(u8::from(r.agent == others[c - k - 2])),
            c => f64::from(u8::from(r.item == items[c - 2 * k - 2])),
        }
    });
    let y = DVector::from_iterator(
        rated.len(),
        rated.iter().map(|r| f64::from(r.rating.expect("filtered"))),
    );
    ols(&names, &x, &y)
}
