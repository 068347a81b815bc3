use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::Strategy;
use crate::orgmodel::SchemeId;
use crate::world::{AgentId, TeamId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchOutcome {
    Winner(TeamId),
    Draw,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamMetrics {
    pub team: TeamId,
    pub strategy: Strategy,
    pub goals_satisfied: u64,
    /// Ticks from a goal being achieved to the next goal event, by count.
    pub latency: BTreeMap<u64, u64>,
    /// Achieved goals no goal event followed before the match ended.
    pub unanswered: u64,
    pub cnp_issued: u64,
    pub cnp_completed: u64,
    pub agents_lost: u64,
}

impl TeamMetrics {
    pub fn new(team: TeamId, strategy: Strategy) -> Self {
        TeamMetrics {
            team,
            strategy,
            goals_satisfied: 0,
            latency: BTreeMap::new(),
            unanswered: 0,
            cnp_issued: 0,
            cnp_completed: 0,
            agents_lost: 0,
        }
    }

    pub fn samples(&self) -> u64 {
        self.latency.values().sum()
    }

    pub fn latency_sum(&self) -> u64 {
        self.latency.iter().map(|(l, n)| l * n).sum()
    }

    pub fn mean_latency(&self) -> Option<f64> {
        let n = self.samples();
        (n > 0).then(|| self.latency_sum() as f64 / n as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub seed: u64,
    pub outcome: MatchOutcome,
    pub ticks: u64,
    pub teams: Vec<TeamMetrics>,
}

impl MatchRecord {
    pub fn team(&self, id: TeamId) -> Option<&TeamMetrics> {
        self.teams.iter().find(|t| t.team == id)
    }
}

/// Open latency samples of one team.
///
/// Organisation-centred samples start when the kernel accepts a goal as
/// achieved and end at the next goal event the kernel delivers for that
/// scheme. Agent-centred samples start when a workflow goal completes and
/// end when the agent next posts a fresh workflow goal.
#[derive(Debug, Clone, Default)]
pub(crate) struct LatencyTracker {
    open: BTreeMap<(AgentId, Option<SchemeId>), Vec<u64>>,
}

impl LatencyTracker {
    pub fn start(&mut self, m: &mut TeamMetrics, agent: AgentId, scheme: Option<SchemeId>, now: u64) {
        m.goals_satisfied += 1;
        self.open.entry((agent, scheme)).or_default().push(now);
    }

    pub fn answer(&mut self, m: &mut TeamMetrics, agent: AgentId, scheme: Option<SchemeId>, now: u64) {
        if let Some(starts) = self.open.remove(&(agent, scheme)) {
            for t in starts {
                *m.latency.entry(now - t).or_default() += 1;
            }
        }
    }

    pub fn close(&mut self, m: &mut TeamMetrics) {
        m.unanswered += self.open.values().map(|v| v.len() as u64).sum::<u64>();
        self.open.clear();
    }
}
