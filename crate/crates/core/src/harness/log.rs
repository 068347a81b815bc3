use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::config::ScenarioConfig;
use super::HarnessError;

/// Bumped whenever simulation or log format changes would alter a log.
pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    World,
    Org,
    Cnp,
    Agent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub tick: u64,
    pub source: Source,
    pub kind: String,
    pub payload: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub version: u32,
    pub config_hash: String,
    pub config: ScenarioConfig,
}

impl LogHeader {
    pub fn for_config(config: &ScenarioConfig) -> Self {
        LogHeader {
            version: LOG_VERSION,
            config_hash: config.hash(),
            config: config.clone(),
        }
    }
}

/// Splits a `{"kind": .., "payload": ..}` or `{"kind": .., ...fields}`
/// value into its kind and the remaining payload, merging `extra` fields
/// into the payload.
pub(crate) fn split_kind(value: Value, extra: &[(&str, Value)]) -> (String, Value) {
    let Value::Object(mut map) = value else {
        return (String::new(), value);
    };
    let kind = match map.remove("kind") {
        Some(Value::String(s)) => s,
        _ => String::new(),
    };
    let mut payload = match map.remove("payload") {
        Some(Value::Object(p)) => p,
        Some(other) => {
            let mut p = Map::new();
            p.insert("value".into(), other);
            p
        }
        None => map,
    };
    for (k, v) in extra {
        payload.insert((*k).to_string(), v.clone());
    }
    (kind, Value::Object(payload))
}

/// An in-memory JSONL log.
#[derive(Debug, Clone, Default)]
pub struct EventLog {
    lines: Vec<String>,
}

impl EventLog {
    pub fn new(header: &LogHeader) -> Self {
        EventLog {
            lines: vec![serde_json::to_string(header).expect("header serializes")],
        }
    }

    pub fn push(&mut self, record: &LogRecord) {
        self.lines
            .push(serde_json::to_string(record).expect("record serializes"));
    }

    pub fn record(&mut self, tick: u64, source: Source, kind: &str, payload: Value) {
        self.push(&LogRecord {
            tick,
            source,
            kind: kind.to_string(),
            payload,
        });
    }

    pub fn lines(&self) -> &[String] {
        &self.lines
    }

    pub fn into_lines(self) -> Vec<String> {
        self.lines
    }

    /// The whole log, one line per record, newline terminated.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for l in &self.lines {
            out.push_str(l);
            out.push('\n');
        }
        out
    }

    /// Records after the header.
    pub fn records(&self) -> impl Iterator<Item = LogRecord> + '_ {
        self.lines[1..]
            .iter()
            .map(|l| serde_json::from_str(l).expect("own lines parse"))
    }
}

/// Parses the header line of a log.
pub fn parse_header(line: &str) -> Result<LogHeader, HarnessError> {
    serde_json::from_str(line).map_err(|e| HarnessError::LogParse {
        line: 1,
        message: e.to_string(),
    })
}

/// Parses every record of a log text, header excluded.
pub fn parse_records(text: &str) -> Result<Vec<LogRecord>, HarnessError> {
    text.lines()
        .enumerate()
        .skip(1)
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| HarnessError::LogParse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}
