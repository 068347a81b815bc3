use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::{json, Value};

use super::agent::{notice_to_bdi, AgentRuntime, OrgTrace, TickView};
use super::config::{ScenarioConfig, Strategy};
use super::library::WORKFLOW_GOALS;
use super::log::{split_kind, EventLog, LogHeader, Source};
use super::metrics::{LatencyTracker, MatchOutcome, MatchRecord, TeamMetrics};
use super::HarnessError;
use crate::beliefs::{atom, BeliefAtom, Effect, Event, Term};
use crate::contract_net::{detect_stuck, Envelope};
use crate::orgmodel::{Notice, OrgEvent, OrgKernel};
use crate::world::{
    apply_actions, new_world, percept_for, ActionIntent, AgentId, Outcome, TeamId, WorldEvent, WorldState,
};

/// A match in progress. [`Match::step`] advances one tick.
pub struct Match {
    config: ScenarioConfig,
    state: Arc<WorldState>,
    agents: Vec<AgentRuntime>,
    kernels: BTreeMap<TeamId, OrgKernel>,
    trackers: BTreeMap<TeamId, LatencyTracker>,
    metrics: BTreeMap<TeamId, TeamMetrics>,
    mail: BTreeMap<AgentId, Vec<Envelope>>,
    log: EventLog,
    outcome: Option<MatchOutcome>,
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

impl Match {
    /// Sets up a match from a resolved config.
    pub fn new(config: &ScenarioConfig) -> Result<Self, HarnessError> {
        let specs = config.validate()?;
        let map = config.map.as_deref().expect("validated");
        let state = new_world(map, config.rules(), config.seed)?;

        let mut kernels = BTreeMap::new();
        let mut metrics = BTreeMap::new();
        let mut trackers = BTreeMap::new();
        for (binding, spec) in config.teams.iter().zip(specs) {
            let team = TeamId(binding.id);
            metrics.insert(team, TeamMetrics::new(team, binding.strategy));
            trackers.insert(team, LatencyTracker::default());
            if let Some(spec) = spec {
                let members: Vec<AgentId> = state.agents.iter().filter(|a| a.team == team).map(|a| a.id).collect();
                kernels.insert(team, OrgKernel::new(Arc::new(spec), members, config.delay_for(binding)));
            }
        }

        let mut agents = Vec::new();
        let mut ranks: BTreeMap<TeamId, usize> = BTreeMap::new();
        let mut bodies: Vec<_> = state.agents.iter().collect();
        bodies.sort_by_key(|a| a.id);
        for body in bodies {
            let rank = ranks.entry(body.team).or_default();
            let strategy = config.team(body.team).expect("validated").strategy;
            agents.push(AgentRuntime::new(
                body.id,
                body.team,
                *rank,
                strategy,
                config.seed,
                config.bid_window,
                config.backoff,
            ));
            *rank += 1;
        }

        Ok(Match {
            log: EventLog::new(&LogHeader::for_config(config)),
            config: config.clone(),
            state: Arc::new(state),
            agents,
            kernels,
            trackers,
            metrics,
            mail: BTreeMap::new(),
            outcome: None,
        })
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn outcome(&self) -> Option<MatchOutcome> {
        self.outcome
    }

    pub fn kernel(&self, team: TeamId) -> Option<&OrgKernel> {
        self.kernels.get(&team)
    }

    /// Current beliefs of an agent, rendered.
    pub fn beliefs_of(&self, agent: AgentId) -> Vec<String> {
        self.agents
            .iter()
            .find(|a| a.id == agent)
            .map(|a| a.reasoner.beliefs().iter().map(|b| b.to_string()).collect())
            .unwrap_or_default()
    }

    fn log_org(&mut self, now: u64, team: TeamId, agent: AgentId, trace: OrgTrace) {
        match trace {
            OrgTrace::Request {
                op,
                args,
                ok,
                satisfied,
            } => {
                self.log.record(
                    now,
                    Source::Org,
                    "Request",
                    json!({"agent": agent, "op": op, "args": args, "ok": ok}),
                );
                if let Some(s) = satisfied {
                    let m = self.metrics.get_mut(&team).expect("team");
                    self.trackers
                        .get_mut(&team)
                        .expect("team")
                        .start(m, agent, Some(s), now);
                }
            }
            OrgTrace::Delivered(n) => self.log_delivery(now, team, &n),
        }
    }

    fn log_delivery(&mut self, now: u64, team: TeamId, n: &Notice) {
        let (kind, payload) = split_kind(to_value(&n.event), &[("to", to_value(&n.to))]);
        self.log.record(now, Source::Org, &kind, payload);
        if let OrgEvent::GoalAddition { scheme, .. } | OrgEvent::SchemeFinished { scheme, .. } = &n.event {
            let m = self.metrics.get_mut(&team).expect("team");
            self.trackers
                .get_mut(&team)
                .expect("team")
                .answer(m, n.to, Some(*scheme), now);
        }
    }

    fn log_effects(&mut self, now: u64, team: TeamId, strategy: Strategy, agent: AgentId, effects: &[Effect]) {
        let workflow = |g: &BeliefAtom| WORKFLOW_GOALS.contains(&g.predicate.as_str());
        for e in effects {
            let (kind, payload) = match e {
                Effect::GoalPosted { goal, continuation, .. } => {
                    if strategy == Strategy::Acmas && workflow(goal) && !continuation {
                        let m = self.metrics.get_mut(&team).expect("team");
                        self.trackers.get_mut(&team).expect("team").answer(m, agent, None, now);
                    }
                    (
                        "GoalPosted",
                        json!({"agent": agent, "goal": goal.to_string(), "continuation": continuation}),
                    )
                }
                Effect::GoalCompleted { goal } => {
                    if strategy == Strategy::Acmas && workflow(goal) {
                        let m = self.metrics.get_mut(&team).expect("team");
                        self.trackers.get_mut(&team).expect("team").start(m, agent, None, now);
                    }
                    ("GoalCompleted", json!({"agent": agent, "goal": goal.to_string()}))
                }
                Effect::EventFailed { event } => ("EventFailed", json!({"agent": agent, "event": event})),
                Effect::IntentionFailed { goal, reason } => (
                    "IntentionFailed",
                    json!({"agent": agent, "goal": goal.to_string(), "reason": reason}),
                ),
            };
            self.log.record(now, Source::Agent, kind, payload);
        }
    }

    /// Runs one tick. Returns the world events it produced.
    pub fn step(&mut self) -> Result<Vec<WorldEvent>, HarnessError> {
        if self.outcome.is_some() {
            return Ok(Vec::new());
        }
        let now = self.state.tick;
        let p = self.config.punishments;
        let view = TickView::new(Arc::clone(&self.state), p.box_cost, &p.weights());
        let mut inboxes = std::mem::take(&mut self.mail);
        let mut intents = BTreeMap::new();

        for i in 0..self.agents.len() {
            let (id, team, strategy) = {
                let a = &self.agents[i];
                (a.id, a.team, a.strategy)
            };
            let percept = percept_for(&self.state, id)?;
            if !percept.alive {
                if let Some(k) = self.kernels.get_mut(&team) {
                    k.deliver_to(id, now);
                }
                continue;
            }

            let notices = self
                .kernels
                .get_mut(&team)
                .map(|k| k.deliver_to(id, now))
                .unwrap_or_default();
            for n in &notices {
                self.log_delivery(now, team, n);
                let (store, ev) = notice_to_bdi(&n.event);
                let r = &mut self.agents[i].reasoner;
                match store {
                    Some(b) => {
                        r.add_belief(b);
                    }
                    None => r.post(ev),
                }
            }
            self.agents[i].perceive(&percept, &view);

            let inbox = inboxes.remove(&id).unwrap_or_default();
            let stuck = detect_stuck(&percept);
            let mates: Vec<AgentId> = percept.teammates_alive().map(|a| a.id).collect();
            let agent = &mut self.agents[i];
            let mut out = agent.initiator.step(&inbox, now, stuck, &mates);
            let part = agent.participant.step(&inbox, &percept, &view.danger, stuck.is_some());
            out.extend(part.outbox);
            if let Some(a) = part.adopted {
                let int = |v: i32| Term::Int(v as i64);
                agent.reasoner.add_belief(BeliefAtom::new(
                    "help",
                    vec![
                        int(a.box_cell.x),
                        int(a.box_cell.y),
                        int(a.bomb_cell.x),
                        int(a.bomb_cell.y),
                    ],
                ));
                agent.reasoner.post(Event::goal(atom("helpTeammate")));
            }
            if part.finished.is_some() {
                agent.reasoner.add_belief(atom("help_done"));
            }
            for env in out {
                let (kind, payload) = split_kind(
                    to_value(&env.message),
                    &[("from", to_value(&env.from)), ("to", to_value(&env.to))],
                );
                self.log.record(now, Source::Cnp, &kind, payload);
                self.mail.entry(env.to).or_default().push(env);
            }

            let intent = if stuck.is_some() {
                ActionIntent::Wait
            } else {
                let agent = &mut self.agents[i];
                if strategy == Strategy::Acmas && agent.reasoner.is_idle() {
                    agent.reasoner.post(Event::goal(atom("start")));
                }
                let (tick, trace) = agent.think(&percept, &view, self.kernels.get_mut(&team));
                for t in trace {
                    self.log_org(now, team, id, t);
                }
                self.log_effects(now, team, strategy, id, &tick.effects);
                tick.action.unwrap_or(ActionIntent::Wait)
            };
            self.log
                .record(now, Source::Agent, "Intent", json!({"agent": id, "action": intent}));
            intents.insert(id, intent);
        }

        let (next, events) = apply_actions(&self.state, &intents)?;
        for e in &events {
            let (kind, payload) = split_kind(to_value(e), &[]);
            self.log.record(now, Source::World, &kind, payload);
        }
        self.state = Arc::new(next);
        self.outcome = match self.state.outcome {
            Some(Outcome::Winner(t)) => Some(MatchOutcome::Winner(t)),
            Some(Outcome::Draw) => Some(MatchOutcome::Draw),
            None if self.state.tick >= self.config.max_ticks => Some(MatchOutcome::Timeout),
            None => None,
        };
        Ok(events)
    }

    /// Steps to the end and returns the record and the log.
    pub fn run(mut self) -> Result<(MatchRecord, EventLog), HarnessError> {
        while self.outcome.is_none() {
            self.step()?;
        }
        let outcome = self.outcome.expect("loop ran to an outcome");
        let ticks = self.state.tick;
        self.log.record(
            ticks,
            Source::World,
            "MatchEnded",
            json!({"outcome": outcome, "ticks": ticks}),
        );
        let mut teams = Vec::new();
        for (team, mut m) in std::mem::take(&mut self.metrics) {
            self.trackers.get_mut(&team).expect("team").close(&mut m);
            for a in self.agents.iter().filter(|a| a.team == team) {
                m.cnp_issued += a.initiator.issued as u64;
                m.cnp_completed += a.initiator.completed as u64;
            }
            m.agents_lost = self.state.agents.iter().filter(|a| a.team == team && !a.alive).count() as u64;
            teams.push(m);
        }
        let record = MatchRecord {
            seed: self.config.seed,
            outcome,
            ticks,
            teams,
        };
        Ok((record, self.log))
    }
}

/// Runs a whole match from a resolved config.
pub fn run_match(config: &ScenarioConfig) -> Result<(MatchRecord, EventLog), HarnessError> {
    Match::new(config)?.run()
}
