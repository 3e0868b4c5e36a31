use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use bwim_core::agents::AGENT_NAMES;
use bwim_core::session::EventKind;
use bwim_core::speakers::Mode;
use bwim_gateway::commands::{self, CommandError};
use bwim_gateway::server::{self, AppState};

#[derive(Parser)]
#[command(name = "bwim", version, about = "Block-world instruction following simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Confidence,
    Qa,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Confidence => Mode::Confidence,
            ModeArg::Qa => Mode::Qa,
        }
    }
}

fn parse_agent(s: &str) -> Result<String, String> {
    if AGENT_NAMES.contains(&s) {
        Ok(s.to_string())
    } else {
        Err(format!("expected one of {}", AGENT_NAMES.join(", ")))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate counterbalanced experiment lists.
    GenLists {
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        lists: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run a reference agent through one list.
    Run {
        #[arg(long, value_parser = parse_agent)]
        agent: String,
        #[arg(long)]
        list: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        carry_over: bool,
        /// Seed for agents that draw at random.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run an external builder speaking the adapter protocol on stdin/stdout.
    RunExternal {
        #[arg(long)]
        cmd: String,
        #[arg(long)]
        list: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        carry_over: bool,
        /// Seconds to wait for each reply.
        #[arg(long, default_value_t = 30.0)]
        timeout: f64,
    },
    /// Serve the HTTP session API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "BWIM_LISTS_DIR")]
        lists: PathBuf,
    },
    /// Aggregate transcripts into condition tables.
    Stats {
        /// Glob pattern(s) selecting transcript files.
        #[arg(long = "in", required = true, num_args = 1..)]
        inputs: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        regression: bool,
    },
    /// Re-run a transcript and check it reproduces exactly.
    Replay {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        list: PathBuf,
    },
    /// Act as an adapter-protocol child for a reference agent.
    #[command(hide = true)]
    ChildAgent {
        #[arg(long, value_parser = parse_agent)]
        agent: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        carry_over: bool,
        /// Needed by the oracle only.
        #[arg(long)]
        list: Option<PathBuf>,
    },
}

fn final_score(t: &bwim_core::session::Transcript) -> i64 {
    t.events()
        .iter()
        .rev()
        .find_map(|e| match e.kind {
            EventKind::SessionEnd { total_score } => Some(total_score),
            _ => None,
        })
        .unwrap_or_default()
}

fn dispatch(cli: Cli) -> Result<(), CommandError> {
    match cli.command {
        Command::GenLists {
            mode,
            lists,
            seed,
            out,
        } => {
            for path in commands::gen_lists(mode.into(), lists, seed, &out)? {
                println!("{}", path.display());
            }
        }
        Command::Run {
            agent,
            list,
            out,
            carry_over,
            seed,
        } => {
            let t = commands::run(&agent, &list, &out, seed, carry_over)?;
            println!("{}: {} events, total score {}", out.display(), t.len(), final_score(&t));
        }
        Command::RunExternal {
            cmd,
            list,
            out,
            carry_over,
            timeout,
        } => {
            if !(timeout.is_finite() && timeout > 0.0) {
                return Err(CommandError::Input(format!("timeout must be positive, got {timeout}")));
            }
            let timeout = Duration::from_secs_f64(timeout);
            let t = commands::run_external(&cmd, &list, &out, carry_over, timeout)?;
            println!("{}: {} events, total score {}", out.display(), t.len(), final_score(&t));
        }
        Command::Serve { port, lists } => {
            let state = AppState::from_dir(&lists).map_err(CommandError::Input)?;
            let runtime = tokio::runtime::Runtime::new()
                .map_err(|e| CommandError::Input(format!("cannot start runtime: {e}")))?;
            runtime
                .block_on(server::serve(state, port))
                .map_err(|e| CommandError::Input(format!("server: {e}")))?;
        }
        Command::Stats {
            inputs,
            out,
            regression,
        } => {
            for path in commands::stats(&inputs, &out, regression)? {
                println!("{}", path.display());
            }
        }
        Command::Replay { input, list } => {
            let (events, total) = commands::replay_file(&input, &list)?;
            println!("ok: {events} events reproduced, total score {total}");
        }
        Command::ChildAgent {
            agent,
            seed,
            carry_over,
            list,
        } => commands::child_agent(&agent, seed, carry_over, list.as_deref())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = e.to_string().replace('\n', " ");
            eprintln!("error: {line}");
            ExitCode::from(1)
        }
    }
}
