use std::collections::{BTreeSet, VecDeque};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::Strategy;
use super::library::{library, role_preferences};
use crate::beliefs::{atom, decide_move, BeliefAtom, BeliefBase, Event, Host, MoveDecision, Reasoner, Term};
use crate::contract_net::{CnpInitiator, CnpParticipant};
use crate::orgmodel::{GroupId, Notice, OrgEvent, OrgKernel, OrgOp, SchemeId};
use crate::pathfinder::{danger_punishments, danger_zone, is_safe_retreat, plan_path, PunishmentMap};
use crate::world::{blast_footprint, ActionIntent, AgentId, BombState, CellKind, Percept, Pos, TeamId, WorldState};

/// Cells within this Manhattan distance of a visited cell count as explored.
pub const EXPLORE_RADIUS: i32 = 2;

/// Extra cost on cells holding a bomb, so paths route around them.
const BOMB_CELL_COST: u32 = 1000;

/// Per-tick data every agent reads.
pub(crate) struct TickView {
    pub world: Arc<WorldState>,
    pub danger: PunishmentMap,
    pub zone: BTreeSet<Pos>,
    pub now: u64,
}

impl TickView {
    pub fn new(world: Arc<WorldState>, box_cost: u32, weights: &crate::pathfinder::DangerWeights) -> Self {
        let base = PunishmentMap::for_boxes(&world.grid, box_cost);
        let danger = danger_punishments(&world, &base, weights);
        let zone = danger_zone(&world);
        let now = world.tick;
        TickView {
            world,
            danger,
            zone,
            now,
        }
    }
}

pub(crate) struct AgentRuntime {
    pub id: AgentId,
    pub team: TeamId,
    pub strategy: Strategy,
    pub reasoner: Reasoner,
    pub initiator: CnpInitiator,
    pub participant: CnpParticipant,
    rng: ChaCha8Rng,
    explored: BTreeSet<Pos>,
}

impl AgentRuntime {
    pub fn new(
        id: AgentId,
        team: TeamId,
        rank: usize,
        strategy: Strategy,
        seed: u64,
        bid_window: u64,
        backoff: u64,
    ) -> Self {
        let mut reasoner = Reasoner::new(library(strategy));
        let mut init = vec![
            BeliefAtom::new("me", vec![Term::Int(id.0 as i64)]),
            BeliefAtom::new("rank", vec![Term::Int(rank as i64)]),
        ];
        if strategy == Strategy::Ocmas {
            let (pref, fallback) = role_preferences(rank);
            init.push(BeliefAtom::new("pref", vec![Term::atom(pref)]));
            init.extend(
                fallback
                    .iter()
                    .map(|r| BeliefAtom::new("fallback", vec![Term::atom(r)])),
            );
        }
        for a in init {
            reasoner.add_belief(a);
        }
        reasoner.post(Event::goal(atom("start")));
        let mix = seed ^ (id.0 as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        AgentRuntime {
            id,
            team,
            strategy,
            reasoner,
            initiator: CnpInitiator::new(id, bid_window, backoff),
            participant: CnpParticipant::new(id),
            rng: ChaCha8Rng::seed_from_u64(mix),
            explored: BTreeSet::new(),
        }
    }

    /// Refreshes the beliefs derived from the percept.
    pub fn perceive(&mut self, p: &Percept, view: &TickView) {
        let r = &mut self.reasoner;
        r.add_belief(BeliefAtom::new(
            "pos",
            vec![Term::Int(p.position.x as i64), Term::Int(p.position.y as i64)],
        ));
        r.add_belief(BeliefAtom::new("bombs", vec![Term::Int(p.bombs_available as i64)]));
        set_flag(r, "threatened", view.zone.contains(&p.position));
        let reach = blast_footprint(&p.world.grid, p.position, p.world.rules.blast_range);
        set_flag(
            r,
            "enemy_in_range",
            p.enemies_alive().any(|e| reach.contains(&e.position)),
        );
        mark_explored(&mut self.explored, p.position);
    }

    /// Runs the reasoner for one tick.
    pub fn think(
        &mut self,
        percept: &Percept,
        view: &TickView,
        kernel: Option<&mut OrgKernel>,
    ) -> (crate::beliefs::Tick, Vec<OrgTrace>) {
        let mut host = AgentHost {
            me: self.id,
            percept,
            view,
            rng: &mut self.rng,
            explored: &mut self.explored,
            kernel,
            trace: Vec::new(),
        };
        let tick = self.reasoner.step(&mut host);
        (tick, host.trace)
    }
}

fn set_flag(r: &mut Reasoner, name: &str, on: bool) {
    let a = BeliefAtom::new(name, vec![]);
    if on {
        r.add_belief(a);
    } else {
        r.remove_beliefs(&a);
    }
}

fn mark_explored(explored: &mut BTreeSet<Pos>, at: Pos) {
    for dy in -EXPLORE_RADIUS..=EXPLORE_RADIUS {
        let span = EXPLORE_RADIUS - dy.abs();
        for dx in -span..=span {
            explored.insert(Pos::new(at.x + dx, at.y + dy));
        }
    }
}

/// Cells reachable from `from` through anything but Solid.
fn open_region(state: &WorldState, from: Pos) -> BTreeSet<Pos> {
    let mut seen = BTreeSet::from([from]);
    let mut queue = VecDeque::from([from]);
    while let Some(p) = queue.pop_front() {
        for q in p.neighbours() {
            if state.grid.in_bounds(q) && !state.grid.is_solid(q) && seen.insert(q) {
                queue.push_back(q);
            }
        }
    }
    seen
}

/// Organisation traffic caused by one agent during its turn.
#[derive(Debug, Clone)]
pub(crate) enum OrgTrace {
    Request {
        op: String,
        args: Vec<String>,
        ok: bool,
        satisfied: Option<SchemeId>,
    },
    Delivered(Notice),
}

/// Turns an org notice into what the agent's reasoner sees: an optional
/// belief to store and the event announcing it.
pub(crate) fn notice_to_bdi(event: &OrgEvent) -> (Option<BeliefAtom>, Event) {
    let a = |s: &str| Term::atom(s);
    let belief = |b: BeliefAtom| (Some(b.clone()), Event::belief(b));
    match event {
        OrgEvent::GroupCreated { group, spec, .. } => {
            belief(BeliefAtom::new("group", vec![a(spec), a(&group.to_string())]))
        }
        OrgEvent::RoleAdopted { role, group, .. } => {
            belief(BeliefAtom::new("role", vec![a(role), a(&group.to_string())]))
        }
        OrgEvent::SchemeCreated {
            scheme, spec, creator, ..
        } => belief(BeliefAtom::new(
            "scheme",
            vec![a(spec), a(&scheme.to_string()), Term::Int(creator.0 as i64)],
        )),
        OrgEvent::GoalAddition { scheme, goal } => (
            None,
            Event::goal(BeliefAtom::new(goal, vec![])).annotated("scheme", a(&scheme.to_string())),
        ),
        OrgEvent::SchemeFinished { scheme, spec } => (
            None,
            Event::belief(BeliefAtom::new("finished", vec![a(spec), a(&scheme.to_string())])),
        ),
        OrgEvent::OrgError { op } => {
            let name = match op {
                OrgOp::AdoptRole => "adopt_role",
                OrgOp::CommitMission => "commit_mission",
                OrgOp::SetGoalState => "set_goal_state",
            };
            (None, Event::belief(BeliefAtom::new("org_error", vec![a(name)])))
        }
    }
}

pub(crate) struct AgentHost<'a> {
    me: AgentId,
    percept: &'a Percept,
    view: &'a TickView,
    rng: &'a mut ChaCha8Rng,
    explored: &'a mut BTreeSet<Pos>,
    kernel: Option<&'a mut OrgKernel>,
    trace: Vec<OrgTrace>,
}

fn pos_arg(args: &[Term]) -> Result<Pos, String> {
    match args {
        [x, y] => match (x.as_int(), y.as_int()) {
            (Some(x), Some(y)) => Ok(Pos::new(x as i32, y as i32)),
            _ => Err("expected integer coordinates".into()),
        },
        _ => Err("expected two arguments".into()),
    }
}

impl AgentHost<'_> {
    fn world(&self) -> &WorldState {
        &self.view.world
    }

    fn pos(&self) -> Pos {
        self.percept.position
    }

    /// Place a bomb here if it can be escaped and spares teammates.
    fn try_bomb(&self) -> ActionIntent {
        let w = self.world();
        let at = self.pos();
        if self.percept.bombs_available == 0 || w.bomb_at(at).is_some() {
            return ActionIntent::Wait;
        }
        let bomb = BombState {
            owner: self.me,
            position: at,
            fuse_remaining: w.rules.fuse_ticks,
            blast_range: w.rules.blast_range,
        };
        if is_safe_retreat(w, at, &bomb).is_none() {
            return ActionIntent::Wait;
        }
        let footprint = w.footprint(&bomb);
        if self.percept.teammates_alive().any(|m| footprint.contains(&m.position)) {
            return ActionIntent::Wait;
        }
        ActionIntent::PlaceBomb
    }

    fn step_toward(&mut self, target: Pos, beliefs: &mut BeliefBase) -> ActionIntent {
        let w = self.world();
        let at = self.pos();
        if at == target {
            return ActionIntent::Wait;
        }
        let unreachable = BeliefAtom::new(
            "unreachable",
            vec![Term::Int(target.x as i64), Term::Int(target.y as i64)],
        );
        if at.manhattan(target) == 1 && w.agent_at(target).is_some() {
            beliefs.add(unreachable);
            return ActionIntent::Wait;
        }
        let mut punish = self.view.danger.clone();
        for b in w.bombs.iter().filter(|b| b.position != at) {
            punish.add(b.position, BOMB_CELL_COST);
        }
        for a in w.alive_agents().filter(|a| a.position != at && a.position != target) {
            punish.add(a.position, BOMB_CELL_COST);
        }
        let Ok(plan) = plan_path(&w.grid, at, target, &punish) else {
            beliefs.add(unreachable);
            return ActionIntent::Wait;
        };
        let int = |v: i32| Term::Int(v as i64);
        let mut scratch = BeliefBase::new();
        scratch.add(BeliefAtom::new("pos", vec![int(at.x), int(at.y)]));
        scratch.add(BeliefAtom::new("target", vec![int(target.x), int(target.y)]));
        scratch.add(BeliefAtom::new(
            "bombs",
            vec![Term::Int(self.percept.bombs_available as i64)],
        ));
        if let Some(i) = plan.intermediate {
            scratch.add(BeliefAtom::new(
                "intermediate",
                vec![int(i.bomb_cell.x), int(i.bomb_cell.y)],
            ));
        }
        match decide_move(&scratch).expect("scratch has pos and target") {
            MoveDecision::Done | MoveDecision::WaitForBomb => ActionIntent::Wait,
            MoveDecision::PlaceBombAndRetreat => self.try_bomb(),
            MoveDecision::TowardIntermediate | MoveDecision::TowardTarget => {
                let next = plan.steps[1];
                let blocked = w.grid.get(next) != CellKind::Empty
                    || w.bomb_at(next).is_some()
                    || w.in_explosion(next)
                    || w.agent_at(next).is_some()
                    || (!self.view.zone.contains(&at) && self.view.zone.contains(&next));
                match at.direction_to(next) {
                    Some(d) if !blocked => ActionIntent::Move(d),
                    _ => ActionIntent::Wait,
                }
            }
        }
    }

    /// First move of the shortest walk out of every blast and fire.
    fn flee(&self) -> ActionIntent {
        let w = self.world();
        let at = self.pos();
        let zone = &self.view.zone;
        if !zone.contains(&at) {
            return ActionIntent::Wait;
        }
        let walkable = |p: Pos| {
            w.grid.get(p) == CellKind::Empty && w.bomb_at(p).is_none() && !w.in_explosion(p) && w.agent_at(p).is_none()
        };
        let mut first: std::collections::BTreeMap<Pos, Pos> = Default::default();
        let mut queue = VecDeque::new();
        for q in at.neighbours() {
            if walkable(q) {
                first.insert(q, q);
                queue.push_back(q);
            }
        }
        while let Some(p) = queue.pop_front() {
            if !zone.contains(&p) {
                return at
                    .direction_to(first[&p])
                    .map_or(ActionIntent::Wait, ActionIntent::Move);
            }
            let f = first[&p];
            for q in p.neighbours() {
                if q != at && walkable(q) && !first.contains_key(&q) {
                    first.insert(q, f);
                    queue.push_back(q);
                }
            }
        }
        ActionIntent::Wait
    }

    fn choose_unexplored(&mut self, beliefs: &BeliefBase) -> Option<Pos> {
        let w = &*self.view.world;
        let region = open_region(w, self.pos());
        let pick = |explored: &BTreeSet<Pos>| -> Vec<Pos> {
            region
                .iter()
                .copied()
                .filter(|p| w.grid.get(*p) == CellKind::Empty && !explored.contains(p) && !self.view.zone.contains(p))
                .filter(|p| w.agent_at(*p).is_none())
                .filter(|p| {
                    !beliefs.contains(&BeliefAtom::new(
                        "unreachable",
                        vec![Term::Int(p.x as i64), Term::Int(p.y as i64)],
                    ))
                })
                .collect()
        };
        let mut candidates = pick(self.explored);
        if candidates.is_empty() {
            self.explored.clear();
            mark_explored(self.explored, self.percept.position);
            candidates = pick(self.explored);
        }
        if candidates.is_empty() {
            return None;
        }
        Some(candidates[self.rng.gen_range(0..candidates.len())])
    }

    fn locate_enemy(&self) -> Option<Pos> {
        let region = open_region(self.world(), self.pos());
        self.percept
            .enemies_alive()
            .filter(|e| region.contains(&e.position))
            .min_by_key(|e| (e.position.manhattan(self.pos()), e.id))
            .map(|e| e.position)
    }

    fn org_call(&mut self, name: &str, args: &[Term]) -> Call {
        let me = self.me;
        let now = self.view.now;
        let Some(kernel) = self.kernel.as_deref_mut() else {
            return Call::Failed("no organisation".into());
        };
        let word = |i: usize| {
            args.get(i)
                .and_then(Term::as_atom)
                .ok_or(format!("{name}: bad argument {i}"))
        };
        let group = |i: usize| word(i)?.parse::<GroupId>().map_err(|_| format!("{name}: bad group"));
        let scheme = |i: usize| word(i)?.parse::<SchemeId>().map_err(|_| format!("{name}: bad scheme"));
        let mut run = || -> Result<Call, String> {
            Ok(match name {
                "create_group" => match kernel.create_group(me, word(0)?, now) {
                    Ok(_) => Call::Accepted(None),
                    Err(e) => Call::Failed(e.to_string()),
                },
                "create_scheme" => match kernel.create_scheme(me, word(0)?, group(1)?, now) {
                    Ok(_) => Call::Accepted(None),
                    Err(e) => Call::Failed(e.to_string()),
                },
                "adopt_role" => Call::from(kernel.adopt_role(me, word(0)?, group(1)?, now), None),
                "commit_mission" => Call::from(kernel.commit_mission(me, word(0)?, scheme(1)?, now), None),
                "set_goal_state" => {
                    let s = scheme(0)?;
                    Call::from(kernel.set_goal_state(me, s, word(1)?, now), Some(s))
                }
                other => Call::Failed(format!("unknown organisation operation {other}")),
            })
        };
        run().unwrap_or_else(Call::Failed)
    }
}

/// What became of an organisational request.
enum Call {
    /// Done; carries the scheme when a goal was reported achieved.
    Accepted(Option<SchemeId>),
    /// Refused by the kernel, which answers with an error notice later.
    Refused,
    /// Malformed or rejected outright; the plan step fails.
    Failed(String),
}

impl Call {
    fn from<E>(r: Result<(), E>, scheme: Option<SchemeId>) -> Call {
        match r {
            Ok(()) => Call::Accepted(scheme),
            Err(_) => Call::Refused,
        }
    }
}

impl Host for AgentHost<'_> {
    fn world_action(&mut self, name: &str, args: &[Term], beliefs: &mut BeliefBase) -> Result<ActionIntent, String> {
        match name {
            "step_toward" => Ok(self.step_toward(pos_arg(args)?, beliefs)),
            "flee" => Ok(self.flee()),
            "bomb" => Ok(self.try_bomb()),
            "wait" => Ok(ActionIntent::Wait),
            other => Err(format!("unknown action {other}")),
        }
    }

    fn internal_action(&mut self, name: &str, _args: &[Term], beliefs: &BeliefBase) -> Option<Vec<Term>> {
        let p = match name {
            ".choose_unexplored" => self.choose_unexplored(beliefs)?,
            ".locate_enemy" => self.locate_enemy()?,
            _ => return None,
        };
        Some(vec![Term::Int(p.x as i64), Term::Int(p.y as i64)])
    }

    fn send(&mut self, _to: &Term, _message: &BeliefAtom) {}

    fn org(&mut self, name: &str, args: &[Term], beliefs: &mut BeliefBase) -> Result<Vec<Event>, String> {
        let shown: Vec<String> = args.iter().map(|t| t.to_string()).collect();
        let (ok, satisfied) = match self.org_call(name, args) {
            Call::Accepted(s) => (true, s),
            Call::Refused => (false, None),
            Call::Failed(e) => {
                self.trace.push(OrgTrace::Request {
                    op: name.to_string(),
                    args: shown,
                    ok: false,
                    satisfied: None,
                });
                return Err(e);
            }
        };
        self.trace.push(OrgTrace::Request {
            op: name.to_string(),
            args: shown,
            ok,
            satisfied,
        });
        let mut events = Vec::new();
        let kernel = self.kernel.as_deref_mut().expect("org_call checked the kernel");
        if kernel.mediation_delay() == 0 {
            for n in kernel.deliver_to(self.me, self.view.now) {
                let (store, ev) = notice_to_bdi(&n.event);
                self.trace.push(OrgTrace::Delivered(n));
                if store.is_none_or(|b| beliefs.add(b)) {
                    events.push(ev);
                }
            }
        }
        Ok(events)
    }
}
