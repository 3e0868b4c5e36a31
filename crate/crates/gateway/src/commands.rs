//! Implementations behind the `bwim` subcommands.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use thiserror::Error;

use bwim_core::agents::{make_agent, run_agent, AgentError, RunError};
use bwim_core::metrics::{
    aggregate, ols_fit, records_from_transcripts, write_conditions, write_questions,
    write_regression, write_segments, MetricsError, RatingModel, TrialRecord,
};
use bwim_core::session::{replay, SessionConfig, SessionError, Transcript};
use bwim_core::speakers::{generate_lists, read_list, write_list, ExperimentList, Mode, SpeakerError};

use crate::adapter::{serve_builder, ExternalAgent, SessionInfo};

#[derive(Debug, Error)]
pub enum CommandError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Speaker(#[from] SpeakerError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{0}")]
    Input(String),
}

fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> CommandError + '_ {
    move |source| CommandError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CommandError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_at(parent))?;
    }
    File::create(path).map(BufWriter::new).map_err(io_at(path))
}

pub fn load_list(path: &Path) -> Result<ExperimentList, CommandError> {
    let file = File::open(path).map_err(io_at(path))?;
    Ok(read_list(BufReader::new(file))?)
}

pub fn load_transcript(path: &Path) -> Result<Transcript, CommandError> {
    let file = File::open(path).map_err(io_at(path))?;
    Ok(Transcript::read(BufReader::new(file))?)
}

fn save_transcript(t: &Transcript, path: &Path) -> Result<(), CommandError> {
    let mut out = create(path)?;
    t.write(&mut out).map_err(io_at(path))?;
    out.flush().map_err(io_at(path))
}

/// Writes `n` lists into `dir` as `<id>.list` and returns their paths.
pub fn gen_lists(mode: Mode, n: usize, seed: u64, dir: &Path) -> Result<Vec<PathBuf>, CommandError> {
    let lists = generate_lists(mode, n, seed)?;
    fs::create_dir_all(dir).map_err(io_at(dir))?;
    let mut paths = Vec::new();
    for list in &lists {
        let path = dir.join(format!("{}.list", list.id));
        let mut out = create(&path)?;
        write_list(list, &mut out)?;
        out.flush().map_err(io_at(&path))?;
        paths.push(path);
    }
    Ok(paths)
}

pub fn run_reference(
    agent: &str,
    list: Arc<ExperimentList>,
    seed: u64,
    carry_over: bool,
) -> Result<Transcript, CommandError> {
    let mut builder = make_agent(agent, seed, carry_over, Some(list.clone()))?;
    let mut config = SessionConfig::new(list, agent);
    config.posterior_carry_over = carry_over;
    Ok(run_agent(builder.as_mut(), config)?)
}

pub fn run(
    agent: &str,
    list_path: &Path,
    out: &Path,
    seed: u64,
    carry_over: bool,
) -> Result<Transcript, CommandError> {
    let list = Arc::new(load_list(list_path)?);
    let transcript = run_reference(agent, list, seed, carry_over)?;
    save_transcript(&transcript, out)?;
    Ok(transcript)
}

pub fn run_external(
    cmd: &str,
    list_path: &Path,
    out: &Path,
    carry_over: bool,
    timeout: Duration,
) -> Result<Transcript, CommandError> {
    let list = Arc::new(load_list(list_path)?);
    let mut config = SessionConfig::new(list.clone(), "external");
    config.posterior_carry_over = carry_over;
    let info = SessionInfo {
        list_id: list.id.clone(),
        mode: list.mode,
        carry_over,
        payoffs: config.payoffs,
    };
    let mut agent = ExternalAgent::spawn(cmd, info, timeout)?;
    let transcript = run_agent(&mut agent, config)?;
    save_transcript(&transcript, out)?;
    Ok(transcript)
}

/// The child end: runs a reference agent over standard input and output.
pub fn child_agent(
    agent: &str,
    seed: u64,
    carry_over: bool,
    list: Option<&Path>,
) -> Result<(), CommandError> {
    let list = list.map(load_list).transpose()?.map(Arc::new);
    let mut builder = make_agent(agent, seed, carry_over, list)?;
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    serve_builder(builder.as_mut(), stdin.lock(), stdout.lock())?;
    Ok(())
}

pub fn replay_file(transcript: &Path, list: &Path) -> Result<(usize, i64), CommandError> {
    let t = load_transcript(transcript)?;
    let list = Arc::new(load_list(list)?);
    let session = replay(&t, list)?;
    Ok((t.len(), session.state().total_score))
}

fn expand(patterns: &[String]) -> Result<Vec<PathBuf>, CommandError> {
    let mut paths = Vec::new();
    for pattern in patterns {
        let matches = glob::glob(pattern)
            .map_err(|e| CommandError::Input(format!("bad pattern {pattern:?}: {e}")))?;
        for entry in matches {
            paths.push(entry.map_err(|e| CommandError::Input(e.to_string()))?);
        }
    }
    paths.sort();
    paths.dedup();
    if paths.is_empty() {
        return Err(CommandError::Input(format!(
            "no transcripts match {patterns:?}"
        )));
    }
    Ok(paths)
}

/// Files written by [`stats`], in order.
pub const STATS_FILES: [&str; 3] = ["conditions.tsv", "questions.tsv", "segments.tsv"];
pub const REGRESSION_FILES: [&str; 2] = ["regression_underspecified.tsv", "regression_full.tsv"];

pub fn stats(patterns: &[String], out: &Path, regression: bool) -> Result<Vec<PathBuf>, CommandError> {
    let paths = expand(patterns)?;
    let transcripts = paths
        .iter()
        .map(|p| load_transcript(p))
        .collect::<Result<Vec<_>, _>>()?;
    let records = records_from_transcripts(&transcripts)?;
    let table = aggregate(&records)?;
    fs::create_dir_all(out).map_err(io_at(out))?;

    let mut written = Vec::new();
    let mut emit = |name: &str,
                    f: &dyn Fn(&mut BufWriter<File>) -> Result<(), MetricsError>|
     -> Result<(), CommandError> {
        let path = out.join(name);
        let mut w = create(&path)?;
        f(&mut w)?;
        w.flush().map_err(io_at(&path))?;
        written.push(path);
        Ok(())
    };
    emit(STATS_FILES[0], &|w| write_conditions(&table.conditions, w))?;
    emit(STATS_FILES[1], &|w| write_questions(&table.questions, w))?;
    emit(STATS_FILES[2], &|w| write_segments(&table.segments, w))?;
    if regression {
        let (under, full): (Vec<TrialRecord>, Vec<TrialRecord>) = records
            .into_iter()
            .partition(|r| r.spec_type.is_underspecified());
        for (name, subset) in REGRESSION_FILES.iter().zip([under, full]) {
            let fit = ols_fit(&subset, &RatingModel::default())?;
            emit(name, &|w| write_regression(&fit, w))?;
        }
    }
    Ok(written)
}
