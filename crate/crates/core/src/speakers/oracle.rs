//! Truthful feedback and the rule-based clarification answerer.

use serde::{Deserialize, Serialize};

use super::{Item, Mode};
use crate::dsl::SpecType;
use crate::world::{render_wire, Structure};

pub const ASK_SUFFIX: &str = "(-5 points for asking)";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackMessage {
    pub correct: bool,
    pub built: Structure,
    pub target: Structure,
    pub round_score: i64,
    pub total_score: i64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerMessage {
    pub intent: QuestionIntent,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionIntent {
    Color,
    Height,
    Unclassified,
}

fn signed(n: i64) -> String {
    format!("{n:+}")
}

pub fn make_feedback(
    item: &Item,
    built: &Structure,
    round_score: i64,
    total_score: i64,
    mode: Mode,
) -> FeedbackMessage {
    let correct = item.is_correct(built);
    let built_wire = render_wire(built);
    let target_wire = render_wire(&item.target);
    let text = match (mode, correct) {
        (Mode::Confidence, _) => format!(
            "FEEDBACK:{};the structure you built = {built_wire};the correct structure = {target_wire}",
            if correct { "True" } else { "False" }
        ),
        (Mode::Qa, true) => format!(
            "Correct structure built! (+10 points) Round score: {}. Total score: {}.",
            signed(round_score),
            signed(total_score)
        ),
        (Mode::Qa, false) => format!(
            "Incorrect structure. (-10 points) The correct structure = {target_wire}. Round score: {}. Total score: {}.",
            signed(round_score),
            signed(total_score)
        ),
    };
    FeedbackMessage {
        correct,
        built: built.clone(),
        target: item.target.clone(),
        round_score,
        total_score,
        text,
    }
}

const HEIGHT_TERMS: [&str; 8] = [
    "high", "height", "tall", "how many", "number", "count", "size", "big",
];
const COLOR_TERMS: [&str; 3] = ["color", "colour", "which paint"];

/// Keyword classification of a clarification question.
pub fn classify_question(question: &str) -> QuestionIntent {
    let q = question.to_lowercase();
    let height = HEIGHT_TERMS.iter().any(|t| q.contains(t));
    let color = COLOR_TERMS.iter().any(|t| q.contains(t));
    match (color, height) {
        (true, false) => QuestionIntent::Color,
        (false, true) => QuestionIntent::Height,
        _ => QuestionIntent::Unclassified,
    }
}

/// Answers from the item's target; the answer is always truthful.
pub fn answer_question(item: &Item, question: &str) -> AnswerMessage {
    let fill = item.target_fill;
    let intent = classify_question(question);
    let text = match intent {
        QuestionIntent::Color => format!("{}. {ASK_SUFFIX}", fill.color),
        QuestionIntent::Height => format!("{} blocks high {ASK_SUFFIX}.", fill.count),
        QuestionIntent::Unclassified => match item.spec_type {
            SpecType::OmitColor => format!("The color is {}. {ASK_SUFFIX}", fill.color),
            SpecType::OmitCount => format!("The height is {} blocks. {ASK_SUFFIX}", fill.count),
            SpecType::Full => format!(
                "The color is {} and the height is {} blocks. {ASK_SUFFIX}",
                fill.color, fill.count
            ),
        },
    };
    AnswerMessage { intent, text }
}
