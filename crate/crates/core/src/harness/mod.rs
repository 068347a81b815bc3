//! Matches, batches, logs and replay.
//!
//! A match runs in ticks. Each tick every living agent, in id order, reads
//! its organisation notices and contract-net mail, perceives, takes a
//! contract-net step and then a reasoning step that yields one intent. The
//! world then applies all intents at once. Messages sent during a tick are
//! read the next tick; organisation notices arrive after the team's
//! mediation delay.

mod agent;
mod batch;
mod config;
mod library;
mod log;
mod metrics;
mod replay;
mod runner;
mod validate;

pub use agent::EXPLORE_RADIUS;
pub use batch::{run_batch, summarize, BatchSummary, TeamSummary};
pub use config::{load_config, Punishments, ScenarioConfig, Strategy, TeamBinding};
pub use library::{check_org_spec, library, role_preferences, WORKFLOW_GOALS};
pub use log::{parse_header, parse_records, EventLog, LogHeader, LogRecord, Source, LOG_VERSION};
pub use metrics::{MatchOutcome, MatchRecord, TeamMetrics};
pub use replay::{compare_lines, replay, Verdict};
pub use runner::{run_match, Match};
pub use validate::{validate_spec, SpecReport};

use crate::orgmodel::SpecError;
use crate::world::WorldError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HarnessError {
    #[error("{0}: {1}")]
    Io(String, String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("log line {line}: {message}")]
    LogParse { line: usize, message: String },
    #[error("version mismatch: {0}")]
    VersionMismatch(String),
}
