use super::log::{parse_header, LogHeader, LOG_VERSION};
use super::runner::run_match;
use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Identical {
        lines: usize,
    },
    /// First differing line, 1-based, header included.
    Diverged {
        line: usize,
        expected: Option<String>,
        found: Option<String>,
    },
}

impl Verdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, Verdict::Identical { .. })
    }
}

/// Re-runs the match embedded in a log and compares it line by line.
pub fn replay(text: &str) -> Result<Verdict, HarnessError> {
    let first = text.lines().next().ok_or(HarnessError::LogParse {
        line: 1,
        message: "empty log".into(),
    })?;
    let header: LogHeader = parse_header(first)?;
    if header.version != LOG_VERSION {
        return Err(HarnessError::VersionMismatch(format!(
            "log version {} (expected {LOG_VERSION})",
            header.version
        )));
    }
    let hash = header.config.hash();
    if hash != header.config_hash {
        return Err(HarnessError::VersionMismatch(format!(
            "config hash {} does not match embedded config ({hash})",
            header.config_hash
        )));
    }
    let (_, log) = run_match(&header.config)?;
    Ok(compare_lines(log.lines(), text))
}

/// Compares a log text against the expected lines, reporting the first
/// difference.
pub fn compare_lines(expected: &[String], text: &str) -> Verdict {
    let found: Vec<&str> = text.lines().collect();
    for i in 0..expected.len().max(found.len()) {
        let e = expected.get(i).map(String::as_str);
        let f = found.get(i).copied();
        if e != f {
            return Verdict::Diverged {
                line: i + 1,
                expected: e.map(str::to_string),
                found: f.map(str::to_string),
            };
        }
    }
    Verdict::Identical { lines: expected.len() }
}
