use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::spec::{GoalOp, Modality, OrgSpec, Scheme, TimeConstraint};
use crate::world::AgentId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SchemeId(pub u32);

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g{}", self.0)
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

impl std::str::FromStr for GroupId {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        s.strip_prefix('g').and_then(|n| n.parse().ok()).map(GroupId).ok_or(())
    }
}

impl std::str::FromStr for SchemeId {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        s.strip_prefix('s').and_then(|n| n.parse().ok()).map(SchemeId).ok_or(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GoalState {
    Waiting,
    Enabled,
    Satisfied,
    Impossible,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupInstance {
    pub id: GroupId,
    pub spec: String,
    pub creator: AgentId,
    pub role_assignments: BTreeMap<AgentId, BTreeSet<String>>,
}

impl GroupInstance {
    pub fn players(&self, role: &str) -> usize {
        self.role_assignments.values().filter(|r| r.contains(role)).count()
    }

    pub fn roles_of(&self, agent: AgentId) -> impl Iterator<Item = &str> {
        self.role_assignments
            .get(&agent)
            .into_iter()
            .flatten()
            .map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeInstance {
    pub id: SchemeId,
    pub spec: String,
    pub group: GroupId,
    pub creator: AgentId,
    pub goal_states: BTreeMap<String, GoalState>,
    pub satisfiers: BTreeMap<String, BTreeSet<AgentId>>,
    pub commitments: BTreeMap<AgentId, BTreeSet<String>>,
    pub finished: bool,
}

impl SchemeInstance {
    pub fn state(&self, goal: &str) -> Option<GoalState> {
        self.goal_states.get(goal).copied()
    }

    fn committed_to(&self, agent: AgentId, scheme: &Scheme, goal: &str) -> bool {
        self.commitments
            .get(&agent)
            .is_some_and(|ms| scheme.missions_with(goal).any(|m| ms.contains(m)))
    }
}

/// Operation an error notice answers. The cause itself is withheld.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrgOp {
    AdoptRole,
    CommitMission,
    SetGoalState,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum OrgEvent {
    GroupCreated {
        group: GroupId,
        spec: String,
        creator: AgentId,
    },
    RoleAdopted {
        agent: AgentId,
        role: String,
        group: GroupId,
    },
    SchemeCreated {
        scheme: SchemeId,
        spec: String,
        group: GroupId,
        creator: AgentId,
    },
    GoalAddition {
        scheme: SchemeId,
        goal: String,
    },
    SchemeFinished {
        scheme: SchemeId,
        spec: String,
    },
    OrgError {
        op: OrgOp,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Notice {
    pub deliver_at: u64,
    pub seq: u64,
    pub to: AgentId,
    pub event: OrgEvent,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
pub enum OrgFault {
    #[error("unknown spec {0}")]
    UnknownSpec(String),
    #[error("unknown group {0}")]
    UnknownGroup(GroupId),
    #[error("unknown scheme {0}")]
    UnknownScheme(SchemeId),
    #[error("role {0} not in group")]
    UnknownRole(String),
    #[error("goal {0} not in scheme")]
    UnknownGoal(String),
    #[error("mission {0} not in scheme")]
    UnknownMission(String),
    #[error("role {0} is full")]
    RoleCardinality(String),
    #[error("no role permits mission {0}")]
    NotPermitted(String),
    #[error("not committed to a mission with goal {0}")]
    NotCommitted(String),
    #[error("goal {0} not enabled")]
    GoalNotEnabled(String),
}

/// True cause of an error notice, kept for logs and tests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DebugEntry {
    pub tick: u64,
    pub agent: AgentId,
    pub op: OrgOp,
    pub fault: OrgFault,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Obligation {
    pub mission: String,
    pub scheme: SchemeId,
    pub tc: TimeConstraint,
    pub expired: bool,
}

/// Runtime organisation for one team. Every notice it produces is delivered
/// `mediation_delay` ticks after the request that caused it.
#[derive(Debug, Clone)]
pub struct OrgKernel {
    spec: Arc<OrgSpec>,
    members: Vec<AgentId>,
    mediation_delay: u64,
    groups: BTreeMap<GroupId, GroupInstance>,
    schemes: BTreeMap<SchemeId, SchemeInstance>,
    next_group: u32,
    next_scheme: u32,
    seq: u64,
    pending: Vec<Notice>,
    debug: Vec<DebugEntry>,
}

impl OrgKernel {
    pub fn new(spec: Arc<OrgSpec>, mut members: Vec<AgentId>, mediation_delay: u64) -> Self {
        members.sort();
        OrgKernel {
            spec,
            members,
            mediation_delay,
            groups: BTreeMap::new(),
            schemes: BTreeMap::new(),
            next_group: 1,
            next_scheme: 1,
            seq: 0,
            pending: Vec::new(),
            debug: Vec::new(),
        }
    }

    pub fn spec(&self) -> &OrgSpec {
        &self.spec
    }

    pub fn mediation_delay(&self) -> u64 {
        self.mediation_delay
    }

    pub fn groups(&self) -> &BTreeMap<GroupId, GroupInstance> {
        &self.groups
    }

    pub fn schemes(&self) -> &BTreeMap<SchemeId, SchemeInstance> {
        &self.schemes
    }

    pub fn scheme(&self, id: SchemeId) -> Option<&SchemeInstance> {
        self.schemes.get(&id)
    }

    pub fn group(&self, id: GroupId) -> Option<&GroupInstance> {
        self.groups.get(&id)
    }

    pub fn pending(&self) -> &[Notice] {
        &self.pending
    }

    pub fn debug_log(&self) -> &[DebugEntry] {
        &self.debug
    }

    /// Removes and returns every notice due at `now`, oldest first.
    pub fn deliver(&mut self, now: u64) -> Vec<Notice> {
        let (due, rest): (Vec<Notice>, Vec<Notice>) = self.pending.drain(..).partition(|n| n.deliver_at <= now);
        self.pending = rest;
        let mut due = due;
        due.sort_by_key(|n| (n.deliver_at, n.seq));
        due
    }

    /// Like [`deliver`](Self::deliver) but only for notices addressed to `agent`.
    pub fn deliver_to(&mut self, agent: AgentId, now: u64) -> Vec<Notice> {
        let (due, rest): (Vec<Notice>, Vec<Notice>) = self
            .pending
            .drain(..)
            .partition(|n| n.to == agent && n.deliver_at <= now);
        self.pending = rest;
        let mut due = due;
        due.sort_by_key(|n| (n.deliver_at, n.seq));
        due
    }

    fn notify(&mut self, to: AgentId, event: OrgEvent, now: u64) {
        self.seq += 1;
        self.pending.push(Notice {
            deliver_at: now + self.mediation_delay,
            seq: self.seq,
            to,
            event,
        });
    }

    fn broadcast(&mut self, event: OrgEvent, now: u64) {
        for to in self.members.clone() {
            self.notify(to, event.clone(), now);
        }
    }

    fn refuse(&mut self, agent: AgentId, op: OrgOp, fault: OrgFault, now: u64) -> Result<(), OrgFault> {
        self.notify(agent, OrgEvent::OrgError { op }, now);
        self.debug.push(DebugEntry {
            tick: now,
            agent,
            op,
            fault: fault.clone(),
        });
        Err(fault)
    }

    pub fn create_group(&mut self, requester: AgentId, spec: &str, now: u64) -> Result<GroupId, OrgFault> {
        if !self.spec.structural.groups.contains_key(spec) {
            return Err(OrgFault::UnknownSpec(spec.to_string()));
        }
        let id = GroupId(self.next_group);
        self.next_group += 1;
        self.groups.insert(
            id,
            GroupInstance {
                id,
                spec: spec.to_string(),
                creator: requester,
                role_assignments: BTreeMap::new(),
            },
        );
        self.broadcast(
            OrgEvent::GroupCreated {
                group: id,
                spec: spec.to_string(),
                creator: requester,
            },
            now,
        );
        Ok(id)
    }

    /// Failures are reported to the agent as an opaque error notice.
    pub fn adopt_role(&mut self, agent: AgentId, role: &str, group: GroupId, now: u64) -> Result<(), OrgFault> {
        let op = OrgOp::AdoptRole;
        let Some(g) = self.groups.get(&group) else {
            return self.refuse(agent, op, OrgFault::UnknownGroup(group), now);
        };
        let Some(&(_, max)) = self.spec.structural.groups[&g.spec].roles.get(role) else {
            return self.refuse(agent, op, OrgFault::UnknownRole(role.to_string()), now);
        };
        let already = g.roles_of(agent).any(|r| r == role);
        if !already && g.players(role) >= max as usize {
            return self.refuse(agent, op, OrgFault::RoleCardinality(role.to_string()), now);
        }
        let g = self.groups.get_mut(&group).expect("checked above");
        g.role_assignments.entry(agent).or_default().insert(role.to_string());
        self.notify(
            agent,
            OrgEvent::RoleAdopted {
                agent,
                role: role.to_string(),
                group,
            },
            now,
        );
        Ok(())
    }

    pub fn create_scheme(
        &mut self,
        requester: AgentId,
        spec: &str,
        group: GroupId,
        now: u64,
    ) -> Result<SchemeId, OrgFault> {
        let Some(scheme) = self.spec.schemes.get(spec) else {
            return Err(OrgFault::UnknownSpec(spec.to_string()));
        };
        if !self.groups.contains_key(&group) {
            return Err(OrgFault::UnknownGroup(group));
        }
        let id = SchemeId(self.next_scheme);
        self.next_scheme += 1;
        let mut inst = SchemeInstance {
            id,
            spec: spec.to_string(),
            group,
            creator: requester,
            goal_states: scheme
                .nodes
                .iter()
                .map(|n| (n.id.clone(), GoalState::Waiting))
                .collect(),
            satisfiers: BTreeMap::new(),
            commitments: BTreeMap::new(),
            finished: false,
        };
        enable(scheme, &mut inst, 0);
        self.schemes.insert(id, inst);
        self.broadcast(
            OrgEvent::SchemeCreated {
                scheme: id,
                spec: spec.to_string(),
                group,
                creator: requester,
            },
            now,
        );
        Ok(id)
    }

    pub fn is_permitted(&self, agent: AgentId, mission: &str, group: GroupId) -> Result<bool, OrgFault> {
        let g = self.groups.get(&group).ok_or(OrgFault::UnknownGroup(group))?;
        let roles: BTreeSet<&str> = g.roles_of(agent).collect();
        Ok(self
            .spec
            .deontics
            .iter()
            .any(|d| d.mission == mission && roles.contains(d.role.as_str())))
    }

    pub fn commit_mission(
        &mut self,
        agent: AgentId,
        mission: &str,
        scheme: SchemeId,
        now: u64,
    ) -> Result<(), OrgFault> {
        let op = OrgOp::CommitMission;
        let Some(inst) = self.schemes.get(&scheme) else {
            return self.refuse(agent, op, OrgFault::UnknownScheme(scheme), now);
        };
        let spec = Arc::clone(&self.spec);
        let sch = &spec.schemes[&inst.spec];
        let Some(goals) = sch.missions.get(mission) else {
            return self.refuse(agent, op, OrgFault::UnknownMission(mission.to_string()), now);
        };
        if !self.is_permitted(agent, mission, inst.group)? {
            return self.refuse(agent, op, OrgFault::NotPermitted(mission.to_string()), now);
        }
        let inst = self.schemes.get_mut(&scheme).expect("checked above");
        if !inst.commitments.entry(agent).or_default().insert(mission.to_string()) {
            return Ok(());
        }
        let due: Vec<String> = sch
            .nodes
            .iter()
            .filter(|n| goals.contains(&n.id))
            .filter(|n| is_ready(sch, inst, sch.node(&n.id).expect("own node")))
            .filter(|n| !inst.satisfiers.get(&n.id).is_some_and(|s| s.contains(&agent)))
            .map(|n| n.id.clone())
            .collect();
        for goal in due {
            self.notify(agent, OrgEvent::GoalAddition { scheme, goal }, now);
        }
        Ok(())
    }

    /// Records `agent` as having achieved `goal` and notifies committed
    /// agents of goals that became available.
    pub fn set_goal_state(&mut self, agent: AgentId, scheme: SchemeId, goal: &str, now: u64) -> Result<(), OrgFault> {
        let op = OrgOp::SetGoalState;
        let Some(inst) = self.schemes.get(&scheme) else {
            return self.refuse(agent, op, OrgFault::UnknownScheme(scheme), now);
        };
        let spec = Arc::clone(&self.spec);
        let sch = &spec.schemes[&inst.spec];
        let Some(at) = sch.node(goal) else {
            return self.refuse(agent, op, OrgFault::UnknownGoal(goal.to_string()), now);
        };
        if !inst.committed_to(agent, sch, goal) {
            return self.refuse(agent, op, OrgFault::NotCommitted(goal.to_string()), now);
        }
        if !is_ready(sch, inst, at) {
            return self.refuse(agent, op, OrgFault::GoalNotEnabled(goal.to_string()), now);
        }
        let before = ready_set(sch, inst);
        let was_finished = inst.finished;
        let inst = self.schemes.get_mut(&scheme).expect("checked above");
        if !inst.satisfiers.entry(goal.to_string()).or_default().insert(agent) {
            return Ok(());
        }
        try_satisfy(sch, inst, at);
        let after = ready_set(sch, inst);
        let mut out = Vec::new();
        for n in &sch.nodes {
            if after.contains(&n.id) && !before.contains(&n.id) {
                for (&who, _) in inst
                    .commitments
                    .iter()
                    .filter(|(&who, _)| inst.committed_to(who, sch, &n.id))
                {
                    out.push((
                        who,
                        OrgEvent::GoalAddition {
                            scheme,
                            goal: n.id.clone(),
                        },
                    ));
                }
            }
        }
        let finished = inst.finished && !was_finished;
        let spec_name = inst.spec.clone();
        for (to, ev) in out {
            self.notify(to, ev, now);
        }
        if finished {
            self.broadcast(
                OrgEvent::SchemeFinished {
                    scheme,
                    spec: spec_name,
                },
                now,
            );
        }
        Ok(())
    }

    /// Obligations of every role the agent plays, joined with the live
    /// schemes of the group where it plays that role.
    pub fn obligations_for(&self, agent: AgentId, now: u64) -> Vec<Obligation> {
        let mut out = Vec::new();
        for inst in self.schemes.values().filter(|s| !s.finished) {
            let g = &self.groups[&inst.group];
            let sch = &self.spec.schemes[&inst.spec];
            for role in g.roles_of(agent) {
                for d in &self.spec.deontics {
                    if d.modality == Modality::Obligation && d.role == role && sch.missions.contains_key(&d.mission) {
                        out.push(Obligation {
                            mission: d.mission.clone(),
                            scheme: inst.id,
                            tc: d.tc,
                            expired: d.tc.expired(now),
                        });
                    }
                }
            }
        }
        out.sort_by(|a, b| (a.scheme, &a.mission).cmp(&(b.scheme, &b.mission)));
        out.dedup();
        out
    }
}

fn set(inst: &mut SchemeInstance, scheme: &Scheme, at: usize, state: GoalState) {
    inst.goal_states.insert(scheme.nodes[at].id.clone(), state);
}

fn get(inst: &SchemeInstance, scheme: &Scheme, at: usize) -> GoalState {
    inst.goal_states[&scheme.nodes[at].id]
}

fn enable(scheme: &Scheme, inst: &mut SchemeInstance, at: usize) {
    if get(inst, scheme, at) != GoalState::Waiting {
        return;
    }
    set(inst, scheme, at, GoalState::Enabled);
    let node = &scheme.nodes[at];
    match node.op {
        GoalOp::Leaf => {}
        GoalOp::Sequence => enable(scheme, inst, node.children[0]),
        GoalOp::Parallel | GoalOp::Choice => {
            for &c in &node.children {
                enable(scheme, inst, c);
            }
        }
    }
}

/// Do the children allow the node to be achieved?
fn children_done(scheme: &Scheme, inst: &SchemeInstance, at: usize) -> bool {
    let node = &scheme.nodes[at];
    let sat = |c: &usize| get(inst, scheme, *c) == GoalState::Satisfied;
    match node.op {
        GoalOp::Leaf => true,
        GoalOp::Sequence | GoalOp::Parallel => node.children.iter().all(sat),
        GoalOp::Choice => node.children.iter().any(sat),
    }
}

/// Inner goals no mission mentions are achieved as soon as their children
/// allow; nobody could be asked to achieve them.
fn is_automatic(scheme: &Scheme, at: usize) -> bool {
    let node = &scheme.nodes[at];
    node.op != GoalOp::Leaf && !scheme.in_any_mission(&node.id)
}

/// Enabled, children done, and waiting on agents.
fn is_ready(scheme: &Scheme, inst: &SchemeInstance, at: usize) -> bool {
    get(inst, scheme, at) == GoalState::Enabled && children_done(scheme, inst, at) && !is_automatic(scheme, at)
}

fn ready_set(scheme: &Scheme, inst: &SchemeInstance) -> BTreeSet<String> {
    (0..scheme.nodes.len())
        .filter(|&i| is_ready(scheme, inst, i))
        .map(|i| scheme.nodes[i].id.clone())
        .collect()
}

fn try_satisfy(scheme: &Scheme, inst: &mut SchemeInstance, at: usize) {
    if get(inst, scheme, at) != GoalState::Enabled || !children_done(scheme, inst, at) {
        return;
    }
    let node = &scheme.nodes[at];
    let count = inst.satisfiers.get(&node.id).map_or(0, BTreeSet::len);
    if !is_automatic(scheme, at) && count < node.card as usize {
        return;
    }
    set(inst, scheme, at, GoalState::Satisfied);
    let Some(p) = node.parent else {
        inst.finished = true;
        return;
    };
    let parent = &scheme.nodes[p];
    match parent.op {
        GoalOp::Sequence => {
            let k = parent.children.iter().position(|&c| c == at).expect("child of parent");
            if let Some(&next) = parent.children.get(k + 1) {
                enable(scheme, inst, next);
            }
        }
        GoalOp::Choice => {
            for &c in parent.children.iter().filter(|&&c| c != at) {
                mark_impossible(scheme, inst, c);
            }
        }
        GoalOp::Parallel | GoalOp::Leaf => {}
    }
    try_satisfy(scheme, inst, p);
}

fn mark_impossible(scheme: &Scheme, inst: &mut SchemeInstance, at: usize) {
    if get(inst, scheme, at) == GoalState::Satisfied {
        return;
    }
    set(inst, scheme, at, GoalState::Impossible);
    for &c in &scheme.nodes[at].children {
        mark_impossible(scheme, inst, c);
    }
}
