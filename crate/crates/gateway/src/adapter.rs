//! Both ends of the subprocess protocol: [`ExternalAgent`] drives a child
//! process as an [`Agent`], and [`serve_builder`] lets any in-process agent
//! act as such a child.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use bwim_core::agents::{Agent, AgentAction, AgentError, Observation};
use bwim_core::session::{system_prompt, trial_text, Payoffs, SpeakerChangeMessage};
use bwim_core::speakers::{AnswerMessage, FeedbackMessage, Mode};
use bwim_core::world::{parse_wire, render_wire};

use crate::protocol::{encode, BuilderMessage, HostMessage, PROTOCOL_VERSION};

fn transport(e: impl std::fmt::Display) -> AgentError {
    AgentError::Transport(e.to_string())
}

/// Session facts announced to the child before the first trial.
#[derive(Debug, Clone)]
pub struct SessionInfo {
    pub list_id: String,
    pub mode: Mode,
    pub carry_over: bool,
    pub payoffs: Payoffs,
}

/// A builder living in a child process.
pub struct ExternalAgent {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    name: String,
    timeout: Duration,
    info: SessionInfo,
    started: bool,
    trial: Option<usize>,
    sent_answer: bool,
    sent_error: bool,
}

impl ExternalAgent {
    /// Runs `cmd` through the shell and performs the `hello` handshake.
    pub fn spawn(cmd: &str, info: SessionInfo, timeout: Duration) -> Result<Self, AgentError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(cmd)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| transport(format!("cannot start {cmd:?}: {e}")))?;
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let mut agent = ExternalAgent {
            stdin: child.stdin.take(),
            child,
            lines: rx,
            name: String::new(),
            timeout,
            info,
            started: false,
            trial: None,
            sent_answer: false,
            sent_error: false,
        };
        agent.send(&HostMessage::Hello {
            protocol: PROTOCOL_VERSION,
        })?;
        let line = agent.read_line()?;
        match serde_json::from_str::<BuilderMessage>(&line) {
            Ok(BuilderMessage::Hello { protocol, agent: name }) if protocol == PROTOCOL_VERSION => {
                agent.name = name;
                Ok(agent)
            }
            Ok(BuilderMessage::Hello { protocol, .. }) => Err(AgentError::Protocol(format!(
                "child speaks protocol {protocol}, expected {PROTOCOL_VERSION}"
            ))),
            _ => Err(AgentError::Protocol(format!(
                "expected hello, got {line:?}"
            ))),
        }
    }

    fn send(&mut self, message: &HostMessage) -> Result<(), AgentError> {
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| transport("child input already closed"))?;
        stdin
            .write_all(encode(message).as_bytes())
            .and_then(|_| stdin.flush())
            .map_err(|e| transport(format!("child exited: {e}")))
    }

    fn read_line(&mut self) -> Result<String, AgentError> {
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(transport(e)),
            Err(RecvTimeoutError::Timeout) => Err(transport(format!(
                "no reply within {} s",
                self.timeout.as_secs_f64()
            ))),
            Err(RecvTimeoutError::Disconnected) => Err(transport("child exited")),
        }
    }
}

impl Drop for ExternalAgent {
    fn drop(&mut self) {
        self.stdin.take();
        if !matches!(self.child.try_wait(), Ok(Some(_))) {
            let _ = self.child.kill();
            let _ = self.child.wait();
        }
    }
}

impl Agent for ExternalAgent {
    fn name(&self) -> &str {
        &self.name
    }

    fn decide(&mut self, obs: &Observation) -> Result<AgentAction, AgentError> {
        if !self.started {
            self.started = true;
            let message = HostMessage::SessionStart {
                list_id: self.info.list_id.clone(),
                mode: self.info.mode,
                carry_over: self.info.carry_over,
                payoffs: self.info.payoffs,
                system: system_prompt(self.info.mode),
            };
            self.send(&message)?;
        }
        if self.trial != Some(obs.trial) {
            self.trial = Some(obs.trial);
            self.sent_answer = false;
            self.sent_error = false;
            self.send(&HostMessage::Trial {
                trial: obs.trial,
                speaker_index: obs.speaker_index,
                mode: obs.mode,
                existing: render_wire(&obs.existing),
                instruction: obs.instruction.clone(),
                text: trial_text(obs.mode, &obs.existing, &obs.instruction),
            })?;
        } else if let (Some(answer), false) = (&obs.answer, self.sent_answer) {
            self.sent_answer = true;
            let message = HostMessage::Answer {
                intent: answer.intent,
                text: answer.text.clone(),
            };
            self.send(&message)?;
        } else if let (Some(diagnostic), false) = (&obs.reprompt, self.sent_error) {
            self.sent_error = true;
            let message = HostMessage::Error {
                diagnostic: diagnostic.clone(),
            };
            self.send(&message)?;
        } else {
            return Err(AgentError::Protocol(format!(
                "nothing new to tell the child on trial {}",
                obs.trial
            )));
        }

        let line = self.read_line()?;
        Ok(match serde_json::from_str::<BuilderMessage>(&line) {
            Ok(BuilderMessage::Question { text }) => AgentAction::Ask { question: text },
            Ok(BuilderMessage::Build { structure, rating }) => AgentAction::Raw {
                text: structure,
                rating,
            },
            Ok(other) => AgentAction::Malformed {
                raw: line,
                diagnostic: format!("unexpected {} message during a trial.", kind_of(&other)),
            },
            Err(e) => AgentAction::Malformed {
                raw: line,
                diagnostic: format!("unreadable message: {e}."),
            },
        })
    }

    fn feedback(&mut self, feedback: &FeedbackMessage) -> Result<(), AgentError> {
        self.send(&HostMessage::feedback(feedback))
    }

    fn speaker_changed(&mut self, change: &SpeakerChangeMessage) -> Result<(), AgentError> {
        self.send(&HostMessage::SpeakerChange {
            speaker_index: change.speaker_index,
            text: change.text.clone(),
        })
    }

    fn debrief(&mut self, prompt: &str) -> Result<String, AgentError> {
        self.send(&HostMessage::DebriefRequest {
            text: prompt.to_string(),
        })?;
        let line = self.read_line()?;
        match serde_json::from_str::<BuilderMessage>(&line) {
            Ok(BuilderMessage::Debrief { text }) => Ok(text),
            _ => Err(AgentError::Protocol(format!(
                "expected debrief, got {line:?}"
            ))),
        }
    }

    fn finish(&mut self, total_score: i64) -> Result<(), AgentError> {
        self.send(&HostMessage::SessionEnd { total_score })?;
        self.stdin.take();
        self.child.wait().map_err(transport)?;
        Ok(())
    }
}

fn kind_of(m: &BuilderMessage) -> &'static str {
    match m {
        BuilderMessage::Hello { .. } => "hello",
        BuilderMessage::Question { .. } => "question",
        BuilderMessage::Build { .. } => "build",
        BuilderMessage::Debrief { .. } => "debrief",
    }
}

fn reply<W: Write>(out: &mut W, message: &BuilderMessage) -> Result<(), AgentError> {
    out.write_all(encode(message).as_bytes())
        .and_then(|_| out.flush())
        .map_err(transport)
}

fn action_message(action: AgentAction) -> BuilderMessage {
    match action {
        AgentAction::Ask { question } => BuilderMessage::Question { text: question },
        AgentAction::Build { structure, rating } => BuilderMessage::build(&structure, rating),
        AgentAction::Raw { text, rating } => BuilderMessage::Build {
            structure: text,
            rating,
        },
        AgentAction::Malformed { raw, .. } => BuilderMessage::Build {
            structure: raw,
            rating: None,
        },
    }
}

/// Child side: speaks the protocol on `input`/`output` on behalf of `agent`
/// until `session_end`.
pub fn serve_builder<R: BufRead, W: Write>(
    agent: &mut dyn Agent,
    input: R,
    mut output: W,
) -> Result<(), AgentError> {
    let mut obs: Option<Observation> = None;
    for line in input.lines() {
        let line = line.map_err(transport)?;
        if line.trim().is_empty() {
            continue;
        }
        let message: HostMessage = serde_json::from_str(&line)
            .map_err(|e| AgentError::Protocol(format!("{e}: {line:?}")))?;
        match message {
            HostMessage::Hello { .. } => {
                let hello = BuilderMessage::Hello {
                    protocol: PROTOCOL_VERSION,
                    agent: agent.name().to_string(),
                };
                reply(&mut output, &hello)?;
            }
            HostMessage::SessionStart { .. } => {}
            HostMessage::Trial {
                trial,
                speaker_index,
                mode,
                existing,
                instruction,
                ..
            } => {
                let existing = parse_wire(&existing)
                    .map_err(|e| AgentError::Protocol(format!("trial {trial}: {e}")))?;
                let current = obs.insert(Observation {
                    trial,
                    speaker_index,
                    mode,
                    existing,
                    instruction,
                    answer: None,
                    reprompt: None,
                });
                let action = agent.decide(current)?;
                reply(&mut output, &action_message(action))?;
            }
            HostMessage::Answer { intent, text } => {
                let current = obs
                    .as_mut()
                    .ok_or_else(|| AgentError::Protocol("answer outside a trial".into()))?;
                current.answer = Some(AnswerMessage { intent, text });
                current.reprompt = None;
                let action = agent.decide(current)?;
                reply(&mut output, &action_message(action))?;
            }
            HostMessage::Error { diagnostic } => {
                let current = obs
                    .as_mut()
                    .ok_or_else(|| AgentError::Protocol("error outside a trial".into()))?;
                current.reprompt = Some(diagnostic);
                let action = agent.decide(current)?;
                reply(&mut output, &action_message(action))?;
            }
            HostMessage::Feedback {
                correct,
                built,
                target,
                round_score,
                total_score,
                text,
            } => {
                let parse = |w: &str| {
                    parse_wire(w).map_err(|e| AgentError::Protocol(format!("feedback: {e}")))
                };
                agent.feedback(&FeedbackMessage {
                    correct,
                    built: parse(&built)?,
                    target: parse(&target)?,
                    round_score,
                    total_score,
                    text,
                })?;
            }
            HostMessage::SpeakerChange {
                speaker_index,
                text,
            } => agent.speaker_changed(&SpeakerChangeMessage {
                speaker_index,
                text,
            })?,
            HostMessage::DebriefRequest { text } => {
                let answer = agent.debrief(&text)?;
                reply(&mut output, &BuilderMessage::Debrief { text: answer })?;
            }
            HostMessage::SessionEnd { total_score } => {
                agent.finish(total_score)?;
                return Ok(());
            }
        }
    }
    Err(AgentError::Transport("host closed the stream before session_end".into()))
}
