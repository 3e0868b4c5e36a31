//! Tab-separated output with a fixed column order. Missing values are
//! written as empty fields.

use std::io::Write;

use super::{spec_name, ConditionRow, MetricsError, QuestionRow, RegressionResult, SegmentRow};

pub const CONDITION_COLUMNS: [&str; 9] = [
    "agent",
    "speaker",
    "spec_type",
    "n",
    "n_rated",
    "mean_rating",
    "se_rating",
    "accuracy",
    "pragmatic_rate",
];

pub const QUESTION_COLUMNS: [&str; 5] = ["agent", "speaker", "blocks", "questions", "per_block"];

pub const SEGMENT_COLUMNS: [&str; 14] = [
    "agent",
    "speaker",
    "segment",
    "n",
    "pragmatic",
    "guess_color",
    "guess_shorter",
    "guess_taller",
    "mistake",
    "rating_1",
    "rating_2",
    "rating_3",
    "rating_4",
    "mean_rating",
];

pub const REGRESSION_COLUMNS: [&str; 5] = ["predictor", "beta", "se", "t", "p"];

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().delimiter(b'\t').from_writer(out)
}

fn num(v: f64) -> String {
    format!("{v:.6}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<(), MetricsError> {
    w.flush().map_err(|e| MetricsError::Io(e.to_string()))
}

fn io(e: csv::Error) -> MetricsError {
    MetricsError::Io(e.to_string())
}

pub fn write_conditions<W: Write>(rows: &[ConditionRow], out: W) -> Result<(), MetricsError> {
    let mut w = writer(out);
    w.write_record(CONDITION_COLUMNS).map_err(io)?;
    for r in rows {
        w.write_record([
            r.agent.clone(),
            r.speaker.name().to_string(),
            spec_name(r.spec_type).to_string(),
            r.n.to_string(),
            r.n_rated.to_string(),
            opt(r.mean_rating),
            opt(r.se_rating),
            num(r.accuracy),
            num(r.pragmatic_rate),
        ])
        .map_err(io)?;
    }
    finish(w)
}

pub fn write_questions<W: Write>(rows: &[QuestionRow], out: W) -> Result<(), MetricsError> {
    let mut w = writer(out);
    w.write_record(QUESTION_COLUMNS).map_err(io)?;
    for r in rows {
        w.write_record([
            r.agent.clone(),
            r.speaker.name().to_string(),
            r.blocks.to_string(),
            r.questions.to_string(),
            num(r.per_block),
        ])
        .map_err(io)?;
    }
    finish(w)
}

pub fn write_segments<W: Write>(rows: &[SegmentRow], out: W) -> Result<(), MetricsError> {
    let mut w = writer(out);
    w.write_record(SEGMENT_COLUMNS).map_err(io)?;
    for r in rows {
        let mut fields = vec![
            r.agent.clone(),
            r.speaker.name().to_string(),
            r.segment.to_string(),
            r.n.to_string(),
        ];
        fields.extend(r.classes.iter().map(|&p| num(p)));
        fields.extend(r.ratings.iter().map(|c| c.to_string()));
        fields.push(opt(r.mean_rating));
        w.write_record(fields).map_err(io)?;
    }
    finish(w)
}

pub fn write_regression<W: Write>(fit: &RegressionResult, out: W) -> Result<(), MetricsError> {
    let mut w = writer(out);
    w.write_record(REGRESSION_COLUMNS).map_err(io)?;
    for c in &fit.coefficients {
        w.write_record([
            c.name.clone(),
            num(c.beta),
            num(c.standard_error),
            num(c.t),
            format!("{:.3e}", c.p),
        ])
        .map_err(io)?;
    }
    finish(w)
}
