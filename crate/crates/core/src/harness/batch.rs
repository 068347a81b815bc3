use rayon::prelude::*;
use serde::Serialize;

use super::config::{ScenarioConfig, Strategy};
use super::metrics::{MatchOutcome, MatchRecord};
use super::runner::run_match;
use super::HarnessError;
use crate::world::TeamId;

/// Aggregate over all seeds for one team.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TeamSummary {
    pub team: TeamId,
    pub strategy: Strategy,
    pub matches: u64,
    pub wins: u64,
    pub win_rate: f64,
    pub mean_ticks: f64,
    pub goals_satisfied: u64,
    pub latency_samples: u64,
    /// Pooled over every sample of every match.
    pub mean_latency: Option<f64>,
    pub unanswered: u64,
    pub cnp_issued: u64,
    pub cnp_completed: u64,
    pub agents_lost: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchSummary {
    /// Sorted by seed.
    pub records: Vec<MatchRecord>,
    pub teams: Vec<TeamSummary>,
}

#[derive(Serialize)]
struct CsvRow {
    seed: String,
    team: u8,
    strategy: Strategy,
    outcome: String,
    ticks: String,
    wins: u64,
    goals_satisfied: u64,
    latency_samples: u64,
    mean_latency: String,
    unanswered: u64,
    cnp_issued: u64,
    cnp_completed: u64,
    agents_lost: u64,
}

fn outcome_text(o: MatchOutcome) -> String {
    match o {
        MatchOutcome::Winner(t) => format!("winner:{}", t.0),
        MatchOutcome::Draw => "draw".into(),
        MatchOutcome::Timeout => "timeout".into(),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:.3}"))
}

/// Runs the config once per seed, in parallel.
pub fn run_batch(config: &ScenarioConfig, seeds: &[u64]) -> Result<BatchSummary, HarnessError> {
    if seeds.is_empty() {
        return Err(HarnessError::Config("no seeds given".into()));
    }
    let mut records = seeds
        .par_iter()
        .map(|&seed| {
            let mut cfg = config.clone();
            cfg.seed = seed;
            run_match(&cfg).map(|(r, _)| r)
        })
        .collect::<Result<Vec<_>, _>>()?;
    records.sort_by_key(|r| r.seed);
    let teams = summarize(&records);
    Ok(BatchSummary { records, teams })
}

pub fn summarize(records: &[MatchRecord]) -> Vec<TeamSummary> {
    let Some(first) = records.first() else {
        return Vec::new();
    };
    first
        .teams
        .iter()
        .map(|t0| {
            let per: Vec<_> = records.iter().filter_map(|r| r.team(t0.team).map(|m| (r, m))).collect();
            let n = per.len() as u64;
            let wins = per
                .iter()
                .filter(|(r, _)| r.outcome == MatchOutcome::Winner(t0.team))
                .count() as u64;
            let samples: u64 = per.iter().map(|(_, m)| m.samples()).sum();
            let lat_sum: u64 = per.iter().map(|(_, m)| m.latency_sum()).sum();
            TeamSummary {
                team: t0.team,
                strategy: t0.strategy,
                matches: n,
                wins,
                win_rate: wins as f64 / n as f64,
                mean_ticks: per.iter().map(|(r, _)| r.ticks as f64).sum::<f64>() / n as f64,
                goals_satisfied: per.iter().map(|(_, m)| m.goals_satisfied).sum(),
                latency_samples: samples,
                mean_latency: (samples > 0).then(|| lat_sum as f64 / samples as f64),
                unanswered: per.iter().map(|(_, m)| m.unanswered).sum(),
                cnp_issued: per.iter().map(|(_, m)| m.cnp_issued).sum(),
                cnp_completed: per.iter().map(|(_, m)| m.cnp_completed).sum(),
                agents_lost: per.iter().map(|(_, m)| m.agents_lost).sum(),
            }
        })
        .collect()
}

impl BatchSummary {
    fn rows(&self) -> Vec<CsvRow> {
        let mut rows = Vec::new();
        for r in &self.records {
            for m in &r.teams {
                rows.push(CsvRow {
                    seed: r.seed.to_string(),
                    team: m.team.0,
                    strategy: m.strategy,
                    outcome: outcome_text(r.outcome),
                    ticks: r.ticks.to_string(),
                    wins: (r.outcome == MatchOutcome::Winner(m.team)) as u64,
                    goals_satisfied: m.goals_satisfied,
                    latency_samples: m.samples(),
                    mean_latency: opt(m.mean_latency()),
                    unanswered: m.unanswered,
                    cnp_issued: m.cnp_issued,
                    cnp_completed: m.cnp_completed,
                    agents_lost: m.agents_lost,
                });
            }
        }
        for t in &self.teams {
            rows.push(CsvRow {
                seed: "all".into(),
                team: t.team.0,
                strategy: t.strategy,
                outcome: format!("win_rate:{:.3}", t.win_rate),
                ticks: format!("{:.1}", t.mean_ticks),
                wins: t.wins,
                goals_satisfied: t.goals_satisfied,
                latency_samples: t.latency_samples,
                mean_latency: opt(t.mean_latency),
                unanswered: t.unanswered,
                cnp_issued: t.cnp_issued,
                cnp_completed: t.cnp_completed,
                agents_lost: t.agents_lost,
            });
        }
        rows
    }

    /// Per-seed rows followed by one `all` row per team.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in self.rows() {
            w.serialize(row).expect("rows serialize");
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8")
    }

    pub fn to_table(&self) -> String {
        let header = [
            "seed", "team", "strategy", "outcome", "ticks", "goals", "samples", "latency", "cnp", "lost",
        ];
        let mut cells: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
        for r in self.rows() {
            cells.push(vec![
                r.seed,
                r.team.to_string(),
                format!("{:?}", r.strategy).to_lowercase(),
                r.outcome,
                r.ticks,
                r.goals_satisfied.to_string(),
                r.latency_samples.to_string(),
                if r.mean_latency.is_empty() {
                    "-".into()
                } else {
                    r.mean_latency
                },
                format!("{}/{}", r.cnp_completed, r.cnp_issued),
                r.agents_lost.to_string(),
            ]);
        }
        let widths: Vec<usize> = (0..header.len())
            .map(|c| cells.iter().map(|row| row[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in cells {
            let line: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}
