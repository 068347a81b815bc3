//! Independent oracles and fixture builders shared by the integration tests.
#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};
use std::path::PathBuf;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use arena_core::orgmodel::{load_org_spec, load_org_value, GoalOp, GoalState, OrgEvent, OrgKernel, Scheme};
use arena_core::pathfinder::PunishmentMap;
use arena_core::world::{AgentId, CellKind, GridMap, Pos};

pub fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(rel)
}

pub fn read_data(rel: &str) -> String {
    std::fs::read_to_string(data(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

fn open(grid: &GridMap, p: Pos) -> bool {
    grid.in_bounds(p) && grid.get(p) != CellKind::Solid
}

fn near(p: Pos) -> [Pos; 4] {
    [
        Pos::new(p.x + 1, p.y),
        Pos::new(p.x - 1, p.y),
        Pos::new(p.x, p.y + 1),
        Pos::new(p.x, p.y - 1),
    ]
}

/// Plain Dijkstra over the augmented-cost graph: entering a cell costs
/// 1 + its punishment, Solid cells are absent.
pub fn dijkstra(grid: &GridMap, start: Pos, target: Pos, pun: &PunishmentMap) -> Option<u64> {
    let mut dist: BTreeMap<Pos, u64> = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(start, 0);
    heap.push(Reverse((0u64, start)));
    while let Some(Reverse((d, p))) = heap.pop() {
        if p == target {
            return Some(d);
        }
        if dist.get(&p).is_some_and(|&best| best < d) {
            continue;
        }
        for q in near(p) {
            if !open(grid, q) {
                continue;
            }
            let nd = d + 1 + pun.get(q) as u64;
            if dist.get(&q).is_none_or(|&old| nd < old) {
                dist.insert(q, nd);
                heap.push(Reverse((nd, q)));
            }
        }
    }
    None
}

/// BFS move counts from `from` over cells accepted by `pass`.
pub fn bfs(grid: &GridMap, from: Pos, pass: impl Fn(Pos) -> bool) -> BTreeMap<Pos, u32> {
    let mut seen = BTreeMap::from([(from, 0)]);
    let mut q = VecDeque::from([from]);
    while let Some(p) = q.pop_front() {
        for n in near(p) {
            if grid.in_bounds(n) && pass(n) && !seen.contains_key(&n) {
                seen.insert(n, seen[&p] + 1);
                q.push_back(n);
            }
        }
    }
    seen
}

/// Random punishments in `0..=max` on every cell.
pub fn random_punishments(grid: &GridMap, rng: &mut impl Rng, max: u32) -> PunishmentMap {
    let mut m = PunishmentMap::zeros(grid);
    for p in grid.positions() {
        m.set(p, rng.gen_range(0..=max));
    }
    m
}

/// Corridor along y = 1 from (1,1) to (len,1) with one Box in the middle
/// and a box-free loop below it that is `2 * depth` moves longer.
pub fn corridor(len: i32, depth: i32) -> (GridMap, Pos, Pos, Pos) {
    let width = (len + 2) as u32;
    let height = (depth + 3) as u32;
    let mut g = GridMap::filled(width, height, CellKind::Solid);
    for x in 1..=len {
        g.set(Pos::new(x, 1), CellKind::Empty);
    }
    let mid = (len + 1) / 2;
    g.set(Pos::new(mid, 1), CellKind::Box);
    for y in 1..=1 + depth {
        g.set(Pos::new(mid - 1, y), CellKind::Empty);
        g.set(Pos::new(mid + 1, y), CellKind::Empty);
    }
    g.set(Pos::new(mid, 1 + depth), CellKind::Empty);
    (g, Pos::new(1, 1), Pos::new(len, 1), Pos::new(mid, 1))
}

/// Brute-force blast footprint: walk each ray cell by cell.
pub fn ray_walk(grid: &GridMap, origin: Pos, range: u32) -> BTreeSet<Pos> {
    let mut out = BTreeSet::from([origin]);
    for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
        for k in 1..=range as i32 {
            let p = Pos::new(origin.x + dx * k, origin.y + dy * k);
            if !grid.in_bounds(p) {
                break;
            }
            match grid.get(p) {
                CellKind::Solid => break,
                CellKind::Box => {
                    out.insert(p);
                    break;
                }
                CellKind::Empty => {
                    out.insert(p);
                }
            }
        }
    }
    out
}

/// Random goal tree document of at most `max_nodes` nodes, plus a mission
/// layout. Returns the scheme document.
pub fn random_scheme_doc(rng: &mut impl Rng, max_nodes: usize) -> Value {
    let mut count = 1;
    let mut ids = vec!["g0".to_string()];
    fn grow(rng: &mut impl Rng, id: String, depth: u32, count: &mut usize, max: usize, ids: &mut Vec<String>) -> Value {
        let room = max - *count;
        let leaf = room < 2 || depth >= 3 || (depth > 0 && rng.gen_bool(0.4));
        let card = rng.gen_range(1..=3u32);
        if leaf {
            return json!({"id": id, "op": "leaf", "card": card});
        }
        let op = ["seq", "choice", "par"][rng.gen_range(0..3)];
        let n = rng.gen_range(2..=room.min(3));
        *count += n;
        let kids: Vec<String> = (0..n).map(|i| format!("{id}_{i}")).collect();
        ids.extend(kids.iter().cloned());
        let children: Vec<Value> = kids
            .into_iter()
            .map(|k| grow(rng, k, depth + 1, count, max, ids))
            .collect();
        json!({"id": id, "op": op, "card": card, "children": children})
    }
    let root = grow(rng, "g0".into(), 0, &mut count, max_nodes, &mut ids);
    let mut m1 = Vec::new();
    let mut m2 = Vec::new();
    for id in &ids {
        match rng.gen_range(0..4) {
            0 => {}
            1 => m1.push(id.clone()),
            2 => m2.push(id.clone()),
            _ => {
                m1.push(id.clone());
                m2.push(id.clone());
            }
        }
    }
    json!({"name": "s", "root": root, "missions": {"m1": m1, "m2": m2}})
}

pub fn org_doc_with(scheme: Value) -> Value {
    json!({
        "roles": ["r"],
        "groups": [{"name": "grp", "roles": {"r": [0, 3]}}],
        "schemes": [scheme],
        "deontics": [
            {"modality": "per", "role": "r", "mission": "m1"},
            {"modality": "per", "role": "r", "mission": "m2"}
        ]
    })
}

/// Goal states recomputed from the accepted achievements, straight from
/// the operator rules:
/// - the root is reachable; a Sequence child is reachable once every
///   earlier sibling is satisfied; Parallel and Choice children are
///   reachable with their parent;
/// - a goal is won when reachable, its children allow it (all for
///   Sequence/Parallel, any for Choice), and either enough agents achieved
///   it or no mission names it (inner goals only);
/// - a goal below a Choice whose other branch was won is impossible,
///   unless it was already satisfied before that happened.
///
/// [`TreeOracle::achieve`] re-settles after every accepted achievement so
/// that earlier satisfactions stick.
pub struct TreeOracle<'a> {
    pub scheme: &'a Scheme,
    pub achieved: BTreeMap<String, BTreeSet<u32>>,
    settled: BTreeSet<usize>,
}

impl<'a> TreeOracle<'a> {
    pub fn new(scheme: &'a Scheme) -> Self {
        let mut o = TreeOracle {
            scheme,
            achieved: BTreeMap::new(),
            settled: BTreeSet::new(),
        };
        o.settle();
        o
    }

    pub fn achieve(&mut self, goal: &str, agent: u32) {
        self.achieved.entry(goal.to_string()).or_default().insert(agent);
        self.settle();
    }

    fn settle(&mut self) {
        self.settled = (0..self.scheme.nodes.len()).filter(|&i| self.satisfied(i)).collect();
    }

    fn parent(&self, i: usize) -> Option<usize> {
        self.scheme.nodes.iter().position(|n| n.children.contains(&i))
    }

    fn reachable(&self, i: usize) -> bool {
        let Some(p) = self.parent(i) else { return true };
        if !self.reachable(p) {
            return false;
        }
        let node = &self.scheme.nodes[p];
        match node.op {
            GoalOp::Sequence => node.children.iter().take_while(|&&c| c != i).all(|&c| self.won(c)),
            _ => true,
        }
    }

    fn automatic(&self, i: usize) -> bool {
        let node = &self.scheme.nodes[i];
        node.op != GoalOp::Leaf && !self.scheme.missions.values().any(|m| m.contains(&node.id))
    }

    fn count(&self, i: usize) -> usize {
        self.achieved.get(&self.scheme.nodes[i].id).map_or(0, BTreeSet::len)
    }

    fn won(&self, i: usize) -> bool {
        if self.settled.contains(&i) {
            return true;
        }
        let node = &self.scheme.nodes[i];
        let kids = match node.op {
            GoalOp::Leaf => true,
            GoalOp::Sequence | GoalOp::Parallel => node.children.iter().all(|&c| self.won(c)),
            GoalOp::Choice => node.children.iter().any(|&c| self.won(c)),
        };
        self.reachable(i) && kids && (self.automatic(i) || self.count(i) >= node.card as usize)
    }

    fn cut(&self, i: usize) -> bool {
        let mut at = i;
        while let Some(p) = self.parent(at) {
            let node = &self.scheme.nodes[p];
            if node.op == GoalOp::Choice && node.children.iter().any(|&c| c != at && self.won(c)) {
                return true;
            }
            at = p;
        }
        false
    }

    fn satisfied(&self, i: usize) -> bool {
        self.settled.contains(&i) || (self.won(i) && !self.cut(i))
    }

    pub fn state(&self, i: usize) -> GoalState {
        if self.satisfied(i) {
            GoalState::Satisfied
        } else if self.cut(i) {
            GoalState::Impossible
        } else if self.reachable(i) {
            GoalState::Enabled
        } else {
            GoalState::Waiting
        }
    }

    /// May an agent report `goal` as achieved right now?
    pub fn ready(&self, goal: &str) -> bool {
        let i = self.scheme.node(goal).expect("goal in scheme");
        let node = &self.scheme.nodes[i];
        let kids = match node.op {
            GoalOp::Leaf => true,
            GoalOp::Sequence | GoalOp::Parallel => node.children.iter().all(|&c| self.satisfied(c)),
            GoalOp::Choice => node.children.iter().any(|&c| self.satisfied(c)),
        };
        self.state(i) == GoalState::Enabled && kids && !self.automatic(i)
    }

    pub fn states(&self) -> BTreeMap<String, GoalState> {
        (0..self.scheme.nodes.len())
            .map(|i| (self.scheme.nodes[i].id.clone(), self.state(i)))
            .collect()
    }
}

pub const AGENTS: [AgentId; 3] = [AgentId(1), AgentId(2), AgentId(3)];

/// Drives one random tree through random achievement attempts, checking
/// the kernel against the oracle after every attempt.
pub fn frontier_case(seed: u64, attempts: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let doc = org_doc_with(random_scheme_doc(&mut rng, 15));
    let spec = Arc::new(load_org_value(&doc).map_err(|e| e.to_string())?);
    let scheme = &spec.schemes["s"];
    let delay = rng.gen_range(0..3u64);
    let mut k = OrgKernel::new(Arc::clone(&spec), AGENTS.to_vec(), delay);
    let g = k.create_group(AGENTS[0], "grp", 0).unwrap();
    for a in AGENTS {
        k.adopt_role(a, "r", g, 0).unwrap();
    }
    let s = k.create_scheme(AGENTS[0], "s", g, 0).unwrap();
    for a in AGENTS {
        k.commit_mission(a, "m1", s, 0).unwrap();
        k.commit_mission(a, "m2", s, 0).unwrap();
    }
    k.deliver(u64::MAX);

    let mut oracle = TreeOracle::new(scheme);
    let ids: Vec<String> = scheme.nodes.iter().map(|n| n.id.clone()).collect();
    let mut prev = k.scheme(s).unwrap().goal_states.clone();
    if prev != oracle.states() {
        return Err(format!("initial states differ: {prev:?} vs {:?}", oracle.states()));
    }
    for step in 1..=attempts as u64 {
        let agent = AGENTS[rng.gen_range(0..3)];
        let goal = &ids[rng.gen_range(0..ids.len())];
        let expect_ok = scheme.in_any_mission(goal) && oracle.ready(goal);
        let got = k.set_goal_state(agent, s, goal, step);
        if got.is_ok() != expect_ok {
            return Err(format!(
                "step {step}: {agent} achieving {goal}: kernel {got:?}, oracle ok={expect_ok}"
            ));
        }
        if expect_ok {
            oracle.achieve(goal, agent.0);
        }
        let now = k.scheme(s).unwrap().goal_states.clone();
        let want = oracle.states();
        if now != want {
            return Err(format!("step {step}: states {now:?}, oracle {want:?}"));
        }
        for (id, before) in &prev {
            let after = now[id];
            let absorbing = matches!(before, GoalState::Satisfied | GoalState::Impossible);
            if (absorbing && after != *before) || (*before == GoalState::Enabled && after == GoalState::Waiting) {
                return Err(format!("step {step}: {id} went {before:?} -> {after:?}"));
            }
        }
        for n in k.deliver(u64::MAX) {
            if n.deliver_at != step + delay {
                return Err(format!("notice due at {} for a request at {step}", n.deliver_at));
            }
            if let OrgEvent::GoalAddition { scheme: sid, goal } = &n.event {
                if *sid != s || now[goal] != GoalState::Enabled {
                    return Err(format!("step {step}: event for {goal} in state {:?}", now[goal]));
                }
            }
        }
        prev = now;
    }
    Ok(())
}

/// Event times for the shipped explorer scheme when the agent reports each
/// goal `work` ticks after hearing of it.
pub fn explorer_timeline(delay: u64, work: u64) -> Vec<(u64, String)> {
    let spec = Arc::new(load_org_spec(&read_data("org/exploration.json")).unwrap());
    let me = AgentId(1);
    let mut k = OrgKernel::new(spec, vec![me], delay);
    let g = k.create_group(me, "team", 0).unwrap();
    k.adopt_role(me, "explorer", g, 0).unwrap();
    let s = k.create_scheme(me, "exploration", g, 0).unwrap();
    k.deliver(u64::MAX);
    k.commit_mission(me, "m_explore", s, 0).unwrap();
    let mut out = Vec::new();
    for now in 0..50 {
        let mut due = k.deliver_to(me, now);
        while !due.is_empty() {
            for n in due {
                match n.event {
                    OrgEvent::GoalAddition { goal, .. } => {
                        out.push((now, format!("goal {goal}")));
                        k.set_goal_state(me, s, &goal, now + work).unwrap();
                        out.push((now + work, format!("done {goal}")));
                    }
                    OrgEvent::SchemeFinished { .. } => out.push((now, "finished".into())),
                    other => panic!("unexpected {other:?}"),
                }
            }
            due = k.deliver_to(me, now);
        }
    }
    out
}

/// Hand-traced: agent 2 is boxed in at (5,4); its teammate 1 leaves (9,9)
/// on tick 0, bids from (9,8) on tick 1 (|9-7| + |8-4| = 6 moves to the
/// bomb cell (7,4)), is awarded at the deadline, drops the bomb on tick 7
/// and reports back the tick after the fuse of 8 runs out.
pub const POCKET_TRANSCRIPT: [&str; 4] = [
    r#"{"tick":0,"source":"cnp","kind":"Cfp","payload":{"deadline":2,"from":2,"task":{"box_cell":{"x":6,"y":4},"requester":2},"task_id":{"initiator":2,"seq":1},"to":1}}"#,
    r#"{"tick":1,"source":"cnp","kind":"Propose","payload":{"bid":6,"from":1,"task_id":{"initiator":2,"seq":1},"to":2}}"#,
    r#"{"tick":2,"source":"cnp","kind":"Award","payload":{"from":2,"task_id":{"initiator":2,"seq":1},"to":1,"winner":1}}"#,
    r#"{"tick":16,"source":"cnp","kind":"InformDone","payload":{"from":1,"task_id":{"initiator":2,"seq":1},"to":2}}"#,
];
