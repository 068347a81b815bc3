//! Turn-based team Bomberman environment.
//!
//! [`WorldState`] is the single source of simulation truth and
//! [`apply_actions`] is its only mutator. Each call resolves one tick in a
//! fixed phase order (bombs, explosions, bomb placement, movement) so the
//! whole evolution is a pure function of the initial state and the intents.

pub mod gen;
mod grid;
mod step;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use grid::{parse_map, CellKind, Direction, GridMap, ParsedMap, Pos, Spawn, TeamId};
pub use step::apply_actions;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WorldError {
    #[error("map parse error: {0}")]
    MapParse(String),
    #[error("spawn error: {0}")]
    Spawn(String),
    #[error("agent {0} is alive but has no intent")]
    MissingIntent(AgentId),
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub u32);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Static rules of a match. None of these change mid-match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rules {
    pub fuse_ticks: u32,
    pub blast_range: u32,
    pub explosion_linger: u32,
    pub bombs_capacity: u32,
}

impl Default for Rules {
    fn default() -> Self {
        Rules {
            fuse_ticks: 8,
            blast_range: 2,
            explosion_linger: 2,
            bombs_capacity: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentBody {
    pub id: AgentId,
    pub team: TeamId,
    pub position: Pos,
    pub alive: bool,
    pub bombs_available: u32,
    pub bombs_capacity: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BombState {
    pub owner: AgentId,
    pub position: Pos,
    pub fuse_remaining: u32,
    pub blast_range: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplosionState {
    pub cells: BTreeSet<Pos>,
    pub ticks_remaining: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActionIntent {
    Move(Direction),
    PlaceBomb,
    Wait,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Winner(TeamId),
    Draw,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum WorldEvent {
    BombPlaced { agent: AgentId, cell: Pos },
    BombExploded { owner: AgentId, cell: Pos },
    BoxDestroyed { cell: Pos },
    AgentDied { agent: AgentId, cell: Pos },
    MatchWon { outcome: Outcome },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldState {
    pub tick: u64,
    pub grid: GridMap,
    /// Sorted by id.
    pub agents: Vec<AgentBody>,
    /// Sorted by position; at most one bomb per cell.
    pub bombs: Vec<BombState>,
    pub explosions: Vec<ExplosionState>,
    pub rng_seed: u64,
    pub rules: Rules,
    /// Set once, on the tick MatchWon is emitted.
    pub outcome: Option<Outcome>,
}

impl WorldState {
    /// Builds the tick-0 state from a parsed map.
    ///
    /// Agent ids are assigned 1.. in (team, glyph) order. Each team needs at
    /// least two spawns, every spawn must be on an Empty cell.
    pub fn from_map(map: &ParsedMap, rules: Rules, seed: u64) -> Result<Self, WorldError> {
        let mut per_team: BTreeMap<TeamId, usize> = BTreeMap::new();
        for s in &map.spawns {
            *per_team.entry(s.team).or_default() += 1;
            if map.grid.get(s.pos) != CellKind::Empty {
                return Err(WorldError::Spawn(format!(
                    "spawn '{}' at {} is not Empty",
                    s.glyph, s.pos
                )));
            }
        }
        for team in [TeamId(1), TeamId(2)] {
            let n = per_team.get(&team).copied().unwrap_or(0);
            if n < 2 {
                return Err(WorldError::Spawn(format!("{team} has {n} spawn(s), need at least 2")));
            }
        }
        if rules.bombs_capacity == 0 || rules.blast_range == 0 {
            return Err(WorldError::Spawn(
                "bombs_capacity and blast_range must be positive".into(),
            ));
        }
        let agents = map
            .spawns
            .iter()
            .enumerate()
            .map(|(i, s)| AgentBody {
                id: AgentId(i as u32 + 1),
                team: s.team,
                position: s.pos,
                alive: true,
                bombs_available: rules.bombs_capacity,
                bombs_capacity: rules.bombs_capacity,
            })
            .collect();
        Ok(WorldState {
            tick: 0,
            grid: map.grid.clone(),
            agents,
            bombs: Vec::new(),
            explosions: Vec::new(),
            rng_seed: seed,
            rules,
            outcome: None,
        })
    }

    pub fn agent(&self, id: AgentId) -> Option<&AgentBody> {
        self.agents.iter().find(|a| a.id == id)
    }

    pub fn alive_agents(&self) -> impl Iterator<Item = &AgentBody> {
        self.agents.iter().filter(|a| a.alive)
    }

    pub fn bomb_at(&self, p: Pos) -> Option<&BombState> {
        self.bombs.iter().find(|b| b.position == p)
    }

    pub fn agent_at(&self, p: Pos) -> Option<&AgentBody> {
        self.alive_agents().find(|a| a.position == p)
    }

    pub fn in_explosion(&self, p: Pos) -> bool {
        self.explosions.iter().any(|e| e.cells.contains(&p))
    }

    pub fn footprint(&self, bomb: &BombState) -> BTreeSet<Pos> {
        blast_footprint(&self.grid, bomb.position, bomb.blast_range)
    }

    pub fn teams(&self) -> BTreeSet<TeamId> {
        self.agents.iter().map(|a| a.team).collect()
    }

    pub fn teammates(&self, id: AgentId) -> Vec<AgentId> {
        match self.agent(id) {
            Some(me) => self
                .agents
                .iter()
                .filter(|a| a.team == me.team && a.id != id)
                .map(|a| a.id)
                .collect(),
            None => Vec::new(),
        }
    }
}

/// Builds the tick-0 world for a scenario.
pub fn new_world(map_text: &str, rules: Rules, seed: u64) -> Result<WorldState, WorldError> {
    let parsed = parse_map(map_text)?;
    WorldState::from_map(&parsed, rules, seed)
}

/// Cells hit by a bomb at `origin`.
///
/// The bomb cell plus one ray per cardinal direction of up to `range`
/// cells. A ray stops before a Solid cell and stops at (including) the
/// first Box it meets.
pub fn blast_footprint(grid: &GridMap, origin: Pos, range: u32) -> BTreeSet<Pos> {
    let mut cells = BTreeSet::new();
    cells.insert(origin);
    for dir in Direction::ALL {
        let mut p = origin;
        for _ in 0..range {
            p = p.step(dir);
            match grid.get(p) {
                CellKind::Solid => break,
                CellKind::Box => {
                    cells.insert(p);
                    break;
                }
                CellKind::Empty => {
                    cells.insert(p);
                }
            }
        }
    }
    cells
}

/// Winner if exactly one team has living members, Draw if none does.
pub fn is_terminal(state: &WorldState) -> Option<Outcome> {
    let alive: BTreeSet<TeamId> = state.alive_agents().map(|a| a.team).collect();
    match alive.len() {
        0 => Some(Outcome::Draw),
        1 if state.teams().len() > 1 => alive.into_iter().next().map(Outcome::Winner),
        _ => None,
    }
}

/// What an agent senses before deciding. The arena is fully observable,
/// so the percept wraps a shared snapshot of the whole state.
#[derive(Debug, Clone)]
pub struct Percept {
    pub agent: AgentId,
    pub team: TeamId,
    pub position: Pos,
    pub alive: bool,
    pub bombs_available: u32,
    pub tick: u64,
    pub world: Arc<WorldState>,
}

impl Percept {
    pub fn teammates_alive(&self) -> impl Iterator<Item = &AgentBody> {
        self.world
            .alive_agents()
            .filter(move |a| a.team == self.team && a.id != self.agent)
    }

    pub fn enemies_alive(&self) -> impl Iterator<Item = &AgentBody> {
        self.world.alive_agents().filter(move |a| a.team != self.team)
    }
}

pub fn percept_for(state: &Arc<WorldState>, agent: AgentId) -> Result<Percept, WorldError> {
    let body = state.agent(agent).ok_or(WorldError::UnknownAgent(agent))?;
    Ok(Percept {
        agent,
        team: body.team,
        position: body.position,
        alive: body.alive,
        bombs_available: body.bombs_available,
        tick: state.tick,
        world: Arc::clone(state),
    })
}

/// Checks the per-state world invariants, returning the first violation.
pub fn audit(state: &WorldState) -> Result<(), String> {
    let mut seen = BTreeSet::new();
    for a in state.alive_agents() {
        if !seen.insert(a.position) {
            return Err(format!("two alive agents at {}", a.position));
        }
        if state.grid.get(a.position) != CellKind::Empty {
            return Err(format!("agent {} inside a non-empty cell", a.id));
        }
    }
    for a in &state.agents {
        let live = state.bombs.iter().filter(|b| b.owner == a.id).count() as u32;
        if a.bombs_available > a.bombs_capacity || a.bombs_available + live != a.bombs_capacity {
            return Err(format!(
                "bomb accounting for agent {}: available {} + live {} != capacity {}",
                a.id, a.bombs_available, live, a.bombs_capacity
            ));
        }
    }
    let cells: BTreeSet<Pos> = state.bombs.iter().map(|b| b.position).collect();
    if cells.len() != state.bombs.len() {
        return Err("two bombs share a cell".into());
    }
    for e in &state.explosions {
        if e.cells.iter().any(|c| state.grid.is_solid(*c)) {
            return Err("explosion covers a solid cell".into());
        }
    }
    Ok(())
}
