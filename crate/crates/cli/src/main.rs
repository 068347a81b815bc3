use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use arena_core::harness::{load_config, replay, run_batch, run_match, validate_spec, HarnessError, Verdict};

const USAGE: u8 = 1;
const FAULT: u8 = 2;
const DIVERGED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "arena",
    version,
    about = "Team Bomberman arena: agent-centred vs organisation-centred teams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one match and print its record as JSON.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Writes the JSONL event log here.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Run one match per seed and print per-team aggregates.
    Batch {
        #[arg(long)]
        config: PathBuf,
        /// Inclusive range `a..b` or a comma list.
        #[arg(long, value_parser = parse_seeds)]
        seeds: Seeds,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Re-run the match embedded in a log and compare line by line.
    Replay { log: PathBuf },
    /// Check an organisation spec file and print a summary.
    ValidateSpec { file: PathBuf },
}

#[derive(Clone)]
struct Seeds(Vec<u64>);

fn parse_seeds(s: &str) -> Result<Seeds, String> {
    let num = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("bad seed '{t}': {e}"));
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
        if a > b {
            return Err(format!("empty seed range {s}"));
        }
        return Ok(Seeds((a..=b).collect()));
    }
    s.split(',').map(num).collect::<Result<_, _>>().map(Seeds)
}

struct Failure(u8, String);

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Failure(FAULT, e.to_string())
    }
}

/// Prints to stdout; a closed pipe is not an error.
fn emit(text: &str) {
    let _ = io::stdout().lock().write_all(text.as_bytes());
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure(FAULT, format!("{}: {e}", path.display())))
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { config, seed, log } => {
            let mut cfg = load_config(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let (record, events) = run_match(&cfg)?;
            if let Some(path) = log {
                write(&path, &events.to_text())?;
            }
            let json = serde_json::to_string_pretty(&record).map_err(|e| Failure(FAULT, e.to_string()))?;
            emit(&format!("{json}\n"));
        }
        Command::Batch { config, seeds, csv } => {
            let cfg = load_config(&config)?;
            let summary = run_batch(&cfg, &seeds.0)?;
            emit(&summary.to_table());
            if let Some(path) = csv {
                write(&path, &summary.to_csv())?;
            }
        }
        Command::Replay { log } => {
            let text = fs::read_to_string(&log).map_err(|e| Failure(FAULT, format!("{}: {e}", log.display())))?;
            match replay(&text) {
                Ok(Verdict::Identical { lines }) => emit(&format!("identical: {lines} lines\n")),
                Ok(Verdict::Diverged { line, expected, found }) => {
                    let show = |l: Option<String>| l.unwrap_or_else(|| "<end of log>".into());
                    return Err(Failure(
                        DIVERGED,
                        format!(
                            "diverged at line {line}\nexpected: {}\nfound:    {}",
                            show(expected),
                            show(found)
                        ),
                    ));
                }
                Err(e @ HarnessError::VersionMismatch(_)) => return Err(Failure(DIVERGED, e.to_string())),
                Err(e) => return Err(e.into()),
            }
        }
        Command::ValidateSpec { file } => {
            let text = fs::read_to_string(&file).map_err(|e| Failure(FAULT, format!("{}: {e}", file.display())))?;
            let report = validate_spec(&text);
            emit(&report.text);
            if !report.ok {
                return Err(Failure(FAULT, format!("{}: invalid organisation spec", file.display())));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
