//! Deterministic re-execution of a recorded transcript.

use std::sync::Arc;

use super::{EventKind, Session, SessionConfig, SessionError, Transcript};
use crate::speakers::ExperimentList;

/// Re-runs every builder action recorded in `transcript` against `list`
/// and checks that the engine reproduces the log event for event.
/// Returns the replayed session.
pub fn replay(transcript: &Transcript, list: Arc<ExperimentList>) -> Result<Session, SessionError> {
    let events = transcript.events();
    let Some(first) = events.first() else {
        return Err(SessionError::Format("empty transcript".into()));
    };
    let EventKind::SessionStart {
        list_id,
        mode,
        seed,
        participant,
        carry_over,
        payoffs,
        ..
    } = &first.kind
    else {
        return Err(SessionError::ReplayDivergence {
            seq: first.seq,
            reason: "transcript does not begin with session_start".into(),
        });
    };
    if list_id != &list.id {
        return Err(SessionError::ReplayDivergence {
            seq: first.seq,
            reason: format!("transcript is for list {list_id}, got {}", list.id),
        });
    }
    let config = SessionConfig {
        mode: *mode,
        list,
        payoffs: *payoffs,
        posterior_carry_over: *carry_over,
        seed: *seed,
        participant: participant.clone(),
    };
    let (mut session, _) = Session::start(config)?;
    for event in events {
        let produced = session.transcript().len() as u64;
        if event.seq < produced {
            continue;
        }
        let result = match &event.kind {
            EventKind::QuestionAsked { text, .. } => session.submit_question(text).map(drop),
            EventKind::ActionRejected { raw, diagnostic, .. } => {
                session.reject(raw, diagnostic).map(drop)
            }
            EventKind::BuildSubmitted {
                raw,
                rating,
                forfeited: false,
                ..
            } => session.submit_build_text(raw, *rating).map(drop),
            EventKind::DebriefResponse { text } => session.submit_debrief(text),
            other => {
                return Err(SessionError::ReplayDivergence {
                    seq: event.seq,
                    reason: format!("engine did not produce {other:?}"),
                })
            }
        };
        result.map_err(|e| SessionError::ReplayDivergence {
            seq: event.seq,
            reason: e.to_string(),
        })?;
    }
    let replayed = session.transcript().events();
    for (i, (a, b)) in replayed.iter().zip(events).enumerate() {
        if a != b {
            return Err(SessionError::ReplayDivergence {
                seq: i as u64,
                reason: format!("recorded {b:?}, replay produced {a:?}"),
            });
        }
    }
    if replayed.len() != events.len() {
        return Err(SessionError::ReplayDivergence {
            seq: replayed.len().min(events.len()) as u64,
            reason: format!(
                "recorded {} events, replay produced {}",
                events.len(),
                replayed.len()
            ),
        });
    }
    Ok(session)
}
